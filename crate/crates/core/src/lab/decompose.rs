use serde::{Deserialize, Serialize};

use crate::bridge::{build_qtable, QBudget};
use crate::error::Result;
use crate::exact_heat::{smoothed, u_exact, QuadratureSpec};
use crate::exit_mc::{global_error_mc_multi, RngStream};
use crate::lattice::{theta_of, total_error, LatticeParams};
use crate::projections::{local_error_deterministic, QTable};
use crate::terminal::TerminalCondition;

/// Allowance for the deterministic quadratures entering one report (several calls at `abs_tol`).
const QUAD_SLACK_FACTOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McBudget {
    /// Walk paths for the global error.
    pub paths: usize,
    pub seed: u64,
    /// Bridge paths per q-table point.
    pub q_paths: usize,
    /// Minimum bridge steps; narrow cells refine further.
    pub q_steps: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        Self { paths: 100_000, seed: 1, q_paths: 2000, q_steps: 64 }
    }
}

/// A value with a three-standard-error radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub g: String,
    pub t: f64,
    pub x: f64,
    pub n: usize,
    pub n_theta: usize,
    pub total: f64,
    pub adj: f64,
    pub loc: Component,
    pub glob: Component,
    /// `total - adj - loc - glob`.
    pub residual: f64,
    /// `loc.uncertainty + glob.uncertainty` plus the quadrature allowance.
    pub tolerance: f64,
    pub closes: bool,
}

/// Decomposes `u^n(t,x) - u(t,x)` for each named terminal condition on shared walk paths.
/// `qt` must match `(h, theta_n)`; when absent a table is simulated from `budget`.
pub fn decompose_many(
    gs: &[(String, TerminalCondition)],
    t: f64,
    x: f64,
    lp: &LatticeParams,
    budget: &McBudget,
    qt: Option<&QTable>,
    quad: &QuadratureSpec,
) -> Result<Vec<ErrorReport>> {
    let ti = theta_of(t, lp)?;
    let built;
    let qt = match qt {
        Some(q) => q,
        None => {
            let qb = QBudget { paths: budget.q_paths, steps: budget.q_steps, seed: budget.seed };
            built = build_qtable(lp.h(), ti.theta_n, lp.sigma, &qb)?;
            &built
        }
    };
    let conds: Vec<TerminalCondition> = gs.iter().map(|(_, g)| g.clone()).collect();
    let glob = global_error_mc_multi(&conds, x, t, lp, budget.paths, RngStream::new(budget.seed, 0))?;
    let on_lattice = t == ti.t_k;
    let slack = QUAD_SLACK_FACTOR * quad.abs_tol;
    gs.iter()
        .zip(glob)
        .map(|((name, g), gl)| {
            let total = total_error(g, t, x, lp, quad)?;
            let adj =
                if on_lattice { 0.0 } else { smoothed(g, ti.theta_n, x, lp.sigma, quad)? - u_exact(g, t, x, &lp.heat(), quad)? };
            let le = local_error_deterministic(g, x, lp.h(), ti.theta_n, qt, quad)?;
            let loc = Component { value: le.value, uncertainty: le.uncertainty };
            let glob = Component { value: gl.mean, uncertainty: 3.0 * gl.std_error };
            let residual = total - adj - loc.value - glob.value;
            let tolerance = loc.uncertainty + glob.uncertainty + slack;
            Ok(ErrorReport {
                g: name.clone(),
                t,
                x,
                n: lp.n,
                n_theta: ti.n_theta,
                total,
                adj,
                loc,
                glob,
                residual,
                tolerance,
                closes: residual.abs() <= tolerance,
            })
        })
        .collect()
}

pub fn decompose(
    g: &TerminalCondition,
    t: f64,
    x: f64,
    lp: &LatticeParams,
    budget: &McBudget,
    qt: Option<&QTable>,
    quad: &QuadratureSpec,
) -> Result<ErrorReport> {
    let mut v = decompose_many(&[("g".to_string(), g.clone())], t, x, lp, budget, qt, quad)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminal::catalog;

    fn small() -> McBudget {
        McBudget { paths: 20_000, seed: 7, q_paths: 200, q_steps: 64 }
    }

    #[test]
    fn constant_vanishes_and_on_lattice_adj_is_zero() {
        let lp = LatticeParams::new(16, 1.0, 1.0).unwrap();
        let q = QuadratureSpec::default();
        let qt = QTable::first_order(lp.h(), 1.0, 1.0, lp.h() / 8.0, 10.0);
        let r = decompose(&catalog("constant").unwrap(), 0.0, 0.3, &lp, &small(), Some(&qt), &q).unwrap();
        assert_eq!(r.adj, 0.0);
        assert!(r.total.abs() < 1e-12 && r.loc.value.abs() < 1e-12 && r.glob.value == 0.0);
        assert!(r.closes);
    }

    #[test]
    fn indicator_total_matches_closed_form() {
        let lp = LatticeParams::new(16, 1.0, 1.0).unwrap();
        let q = QuadratureSpec::default();
        let r = decompose(&catalog("indicator").unwrap(), 0.0, 0.0, &lp, &small(), None, &q).unwrap();
        let exact = 0.5 * crate::lattice::binom_row(16).central();
        assert!((r.total - exact).abs() < 1e-13);
        assert!(r.closes, "{r:?}");
    }
}
