//! Monte Carlo estimators over the exit-time walk.
//!
//! Every estimator draws paths through [`map_chunks`], so results depend only on
//! `(seed, stream, paths)`.

use std::f64::consts::PI;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::rng::{map_chunks, McEstimate, Moments, RngStream};
use super::tau;
use super::walk::{simulate_summary, WalkSummary};
use crate::error::{Error, Result};
use crate::exact_heat::{gaussian_density, smoothed, QuadratureSpec};
use crate::lattice::{theta_of, LatticeParams};
use crate::projections::{dist_even, dist_odd, integrate_with_q, QTable};
use crate::quadrature::gk15;
use crate::terminal::TerminalCondition;

/// Minimum path count accepted by the error estimators.
pub const MIN_PATHS: usize = 1000;

fn check_paths(paths: usize, min: usize) -> Result<()> {
    if paths < min {
        return Err(Error::InvalidParameter(format!("need at least {min} paths, got {paths}")));
    }
    Ok(())
}

fn merge_all(parts: Vec<Vec<Moments>>, width: usize) -> Vec<McEstimate> {
    let mut acc = vec![Moments::default(); width];
    for part in &parts {
        for (a, p) in acc.iter_mut().zip(part) {
            a.merge(p);
        }
    }
    acc.iter().map(Moments::estimate).collect()
}

/// Runs `f` on every path summary and accumulates the `width` statistics it returns.
fn walk_statistics<F>(n_theta: usize, paths: usize, stream: RngStream, width: usize, f: F) -> Vec<McEstimate>
where
    F: Fn(&WalkSummary, &mut [f64]) + Sync,
{
    let parts = map_chunks(paths, |c, range| {
        let mut rng = stream.child(c as u64).rng();
        let mut acc = vec![Moments::default(); width];
        let mut buf = vec![0.0; width];
        for _ in range {
            let s = simulate_summary(n_theta, &mut rng);
            f(&s, &mut buf);
            for (a, &v) in acc.iter_mut().zip(&buf) {
                a.push(v);
            }
        }
        acc
    });
    merge_all(parts, width)
}

/// Global error `E[g(x0 + X_{n_theta}) - g(x0 + X_J)]` for several `g` on shared paths.
/// Each sample averages a path with its sign-flipped twin (same exit times).
pub fn global_error_mc_multi(
    gs: &[TerminalCondition],
    x0: f64,
    t: f64,
    lp: &LatticeParams,
    paths: usize,
    stream: RngStream,
) -> Result<Vec<McEstimate>> {
    check_paths(paths, MIN_PATHS)?;
    let ti = theta_of(t, lp)?;
    let h = lp.h();
    Ok(walk_statistics(ti.n_theta, paths, stream, gs.len(), |s, out| {
        let a = f64::from(s.steps_at_ntheta) * h;
        let b = f64::from(s.steps_at_j) * h;
        for (o, g) in out.iter_mut().zip(gs) {
            let plus = g.evaluate(x0 + a) - g.evaluate(x0 + b);
            let minus = g.evaluate(x0 - a) - g.evaluate(x0 - b);
            *o = 0.5 * (plus + minus);
        }
    }))
}

pub fn global_error_mc(
    g: &TerminalCondition,
    x0: f64,
    t: f64,
    lp: &LatticeParams,
    paths: usize,
    stream: RngStream,
) -> Result<McEstimate> {
    Ok(global_error_mc_multi(std::slice::from_ref(g), x0, t, lp, paths, stream)?[0])
}

/// Local error `E[g(x0 + X_J)] - E[g(x0 + X_{theta_n})]`; only the first term is sampled.
pub fn local_error_mc(
    g: &TerminalCondition,
    x0: f64,
    t: f64,
    lp: &LatticeParams,
    paths: usize,
    stream: RngStream,
    quad: &QuadratureSpec,
) -> Result<McEstimate> {
    check_paths(paths, MIN_PATHS)?;
    let ti = theta_of(t, lp)?;
    let h = lp.h();
    let exact = smoothed(g, ti.theta_n, x0, lp.sigma, quad)?;
    let est = walk_statistics(ti.n_theta, paths, stream, 1, |s, out| {
        let b = f64::from(s.steps_at_j) * h;
        out[0] = 0.5 * (g.evaluate(x0 + b) + g.evaluate(x0 - b));
    })[0];
    Ok(McEstimate { mean: est.mean - exact, ..est })
}

/// Mean, second moment and moment-generating function of the unit exit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub samples: u64,
    pub mean: McEstimate,
    pub second_moment: McEstimate,
    /// `(lambda, estimate of E[exp(lambda tau)], closed form)`
    pub mgf: Vec<(f64, McEstimate, f64)>,
}

pub fn tau_report(samples: usize, lambdas: &[f64], stream: RngStream) -> TauReport {
    let width = 2 + lambdas.len();
    let parts = map_chunks(samples, |c, range| {
        let mut rng = stream.child(c as u64).rng();
        let mut acc = vec![Moments::default(); width];
        for _ in range {
            let t = tau::sample_tau_unit(&mut rng);
            acc[0].push(t);
            acc[1].push(t * t);
            for (a, &l) in acc[2..].iter_mut().zip(lambdas) {
                a.push((l * t).exp());
            }
        }
        acc
    });
    let est = merge_all(parts, width);
    TauReport {
        samples: samples as u64,
        mean: est[0],
        second_moment: est[1],
        mgf: lambdas.iter().zip(&est[2..]).map(|(&l, &e)| (l, e, tau::mgf(l))).collect(),
    }
}

/// `H(x) = 1 + 6/x^4 (x^2/2 + log cos x)` on `(0, pi/2)`, with `H(0+) = 1/2`.
pub fn tail_h(x: f64) -> f64 {
    if x < 0.05 {
        // x^2/2 + log cos x = -x^4/12 - x^6/45 - 17x^8/2520 - 31x^10/14175 - 691x^12/467775 - ...
        let x2 = x * x;
        0.5 - x2 * (2.0 / 15.0 + x2 * (17.0 / 420.0 + x2 * (62.0 / 4725.0 + x2 * 1382.0 / 155_925.0)))
    } else {
        // log cos x = log1p(-2 sin^2(x/2)) keeps the small difference accurate.
        let s = (x / 2.0).sin();
        1.0 + 6.0 / x.powi(4) * (x * x / 2.0 + (-2.0 * s * s).ln_1p())
    }
}

/// Upper end of the admissible range for `delta`: `pi^2 / (12 + pi^2)`.
pub fn tail_delta_max() -> f64 {
    PI * PI / (12.0 + PI * PI)
}

/// `exp(-(3/2) n_theta delta^2/(1 +- delta) H(sqrt(3 delta/(1 +- delta))))` for the upper
/// (`+`) and lower (`-`) tails of `J`.
pub fn tail_bound_rhs(delta: f64, n_theta: usize) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < tail_delta_max()) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, {}), got {delta}", tail_delta_max())));
    }
    let n = n_theta as f64;
    let side = |d: f64| {
        let x = (3.0 * delta / d).sqrt();
        (-1.5 * n * delta * delta / d * tail_h(x)).exp()
    };
    Ok((side(1.0 + delta), side(1.0 - delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub estimate: McEstimate,
    pub target: f64,
    /// Allowed deviation before the standard-error allowance.
    pub tolerance: f64,
}

impl Target {
    /// `|estimate - target| <= tolerance + 3 SE`.
    pub fn holds(&self) -> bool {
        self.estimate.within(self.target, 3.0, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JnReport {
    pub n_theta: usize,
    pub theta_n: f64,
    pub paths: u64,
    /// `J - n_theta` against `4/3` with allowance `67/sqrt(n_theta)`.
    pub first_moment: Target,
    /// `(J - n_theta)^2 / n_theta` against `2/3`.
    pub second_moment: Target,
    /// `tau_J - theta_n` against `(4/3) T/n` with allowance `(67/sqrt(n_theta)) T/n`.
    pub tau_overshoot: Target,
    /// `(K, E|J - n_theta|^K / n_theta^{K/2})` for `K` in 1, 2, 4.
    pub scaled_abs_moments: Vec<(u32, McEstimate)>,
    /// `E[J tau_J] - E[J] E[tau_J]` with a delta-method standard error.
    pub factorization_gap: McEstimate,
    /// `P(|J - n_theta| > n_theta^{3/5})`.
    pub deviation_tail: McEstimate,
    /// `n_theta^2` times `deviation_tail`.
    pub deviation_tail_scaled: f64,
}

/// Moments of `J` and `tau_J` for the query time `t`.
pub fn jn_moment_report(t: f64, lp: &LatticeParams, paths: usize, stream: RngStream) -> Result<JnReport> {
    check_paths(paths, 10_000)?;
    let ti = theta_of(t, lp)?;
    let n = ti.n_theta as f64;
    let unit = lp.delta();
    let cut = n.powf(0.6);
    // Raw power sums of a = J - n_theta and b = tau_J/unit - n_theta, for the covariance SE.
    let sums = map_chunks(paths, |c, range| {
        let mut rng = stream.child(c as u64).rng();
        let mut m = vec![Moments::default(); 7];
        let mut raw = [[0.0f64; 3]; 3];
        for _ in range {
            let s = simulate_summary(ti.n_theta, &mut rng);
            let a = f64::from(s.j) - n;
            let b = s.tau_at_j - n;
            m[0].push(a);
            m[1].push(a * a / n);
            m[2].push(b * unit);
            m[3].push(a.abs() / n.sqrt());
            m[4].push(a * a / n);
            m[5].push(a.powi(4) / (n * n));
            m[6].push(if a.abs() > cut { 1.0 } else { 0.0 });
            let (mut ai, mut ab) = (1.0, [1.0, b, b * b]);
            for row in &mut raw {
                for (cell, bj) in row.iter_mut().zip(ab.iter_mut()) {
                    *cell += ai * *bj;
                }
                ai *= a;
            }
        }
        (m, raw)
    });
    let mut acc = [Moments::default(); 7];
    let mut raw = [[0.0f64; 3]; 3];
    for (m, r) in &sums {
        for (a, p) in acc.iter_mut().zip(m) {
            a.merge(p);
        }
        for i in 0..3 {
            for j in 0..3 {
                raw[i][j] += r[i][j];
            }
        }
    }
    let est: Vec<McEstimate> = acc.iter().map(Moments::estimate).collect();
    let cnt = paths as f64;
    let e = |i: usize, j: usize| raw[i][j] / cnt;
    let (ma, mb) = (e(1, 0), e(0, 1));
    let cov = e(1, 1) - ma * mb;
    // E[((a - ma)(b - mb))^2] expanded in raw moments.
    let fourth = e(2, 2) - 2.0 * mb * e(2, 1) + mb * mb * e(2, 0) - 2.0 * ma * e(1, 2) + 4.0 * ma * mb * e(1, 1)
        - 2.0 * ma * mb * mb * e(1, 0)
        + ma * ma * e(0, 2)
        - 2.0 * ma * ma * mb * e(0, 1)
        + ma * ma * mb * mb;
    let cov_se = ((fourth - cov * cov).max(0.0) / cnt).sqrt();
    let root = n.sqrt();
    Ok(JnReport {
        n_theta: ti.n_theta,
        theta_n: ti.theta_n,
        paths: paths as u64,
        first_moment: Target { estimate: est[0], target: 4.0 / 3.0, tolerance: 67.0 / root },
        second_moment: Target { estimate: est[1], target: 2.0 / 3.0, tolerance: 0.1 },
        tau_overshoot: Target { estimate: est[2], target: 4.0 / 3.0 * unit, tolerance: 67.0 / root * unit },
        scaled_abs_moments: vec![(1, est[3]), (2, est[4]), (4, est[5])],
        // J tau_J covariance in physical time: b is in units of T/n.
        factorization_gap: McEstimate { mean: cov * unit, std_error: cov_se * unit, paths: paths as u64 },
        deviation_tail: est[6],
        deviation_tail_scaled: est[6].mean * n * n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n_theta: usize,
    pub delta: f64,
    /// Frequency of `J > n_theta (1 + delta)`.
    pub upper: McEstimate,
    /// Frequency of `J < n_theta (1 - delta)`.
    pub lower: McEstimate,
    pub upper_bound: f64,
    pub lower_bound: f64,
}

pub fn tail_report(n_theta: usize, delta: f64, paths: usize, stream: RngStream) -> Result<TailReport> {
    check_paths(paths, MIN_PATHS)?;
    let (upper_bound, lower_bound) = tail_bound_rhs(delta, n_theta)?;
    let n = n_theta as f64;
    let est = walk_statistics(n_theta, paths, stream, 2, |s, out| {
        let j = f64::from(s.j);
        out[0] = if j > n * (1.0 + delta) { 1.0 } else { 0.0 };
        out[1] = if j < n * (1.0 - delta) { 1.0 } else { 0.0 };
    });
    Ok(TailReport { n_theta, delta, upper: est[0], lower: est[1], upper_bound, lower_bound })
}

/// One parity branch of `E[(tau_J - theta_n) 1{L parity}]`: sampled against the value predicted
/// from the q-table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCheck {
    pub sampled: McEstimate,
    pub predicted: f64,
    /// Q-table radius propagated into `predicted`.
    pub predicted_radius: f64,
}

impl BranchCheck {
    pub fn holds(&self) -> bool {
        (self.sampled.mean - self.predicted).abs() <= 3.0 * self.sampled.std_error + self.predicted_radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub n_theta: usize,
    /// `L` odd: conditional overshoot `(h^2 - d_o^2)/sigma^2`, weight `1 - q`.
    pub odd: BranchCheck,
    /// `L` even: conditional overshoot `(2h^2 - d_e^2)/sigma^2`, weight `q`.
    pub even: BranchCheck,
}

/// Compares the overshoot `tau_J - theta_n` split by the parity of `L` with the conditional
/// means given the Brownian position at `theta_n`.
pub fn parity_branch_check(t: f64, lp: &LatticeParams, qt: &QTable, paths: usize, stream: RngStream) -> Result<ParityReport> {
    check_paths(paths, MIN_PATHS)?;
    let ti = theta_of(t, lp)?;
    let h = lp.h();
    let s2 = lp.sigma * lp.sigma;
    if (qt.h - h).abs() > 1e-9 * h || (qt.theta - ti.theta_n).abs() > 1e-9 * ti.theta_n {
        return Err(Error::InvalidParameter("q-table does not match (h, theta_n)".into()));
    }
    let unit = lp.delta();
    let n = ti.n_theta as f64;
    let est = walk_statistics(ti.n_theta, paths, stream, 2, |s, out| {
        let over = (s.tau_at_j - n) * unit;
        let odd = s.l % 2 == 1;
        out[0] = if odd { over } else { 0.0 };
        out[1] = if odd { 0.0 } else { over };
    });
    let reach = 12.0 * lp.sigma * ti.theta_n.sqrt();
    let odd_w = |y: f64| (h * h - dist_odd(y, h).powi(2)) / s2;
    let even_w = |y: f64| (2.0 * h * h - dist_even(y, h).powi(2)) / s2;
    // The weights are quadratic between lattice points, so integrate cell by cell.
    let cells = (reach / h).ceil() as i64;
    let odd_total: f64 = (-cells..cells)
        .map(|m| {
            let a = m as f64 * h;
            gk15(&mut |y| odd_w(y) * gaussian_density(y, ti.theta_n, lp.sigma), a, a + h).0
        })
        .sum();
    let odd_q = integrate_with_q(qt, -(cells as f64) * h, cells as f64 * h, odd_w);
    let even_q = integrate_with_q(qt, -(cells as f64) * h, cells as f64 * h, even_w);
    Ok(ParityReport {
        n_theta: ti.n_theta,
        odd: BranchCheck { sampled: est[0], predicted: odd_total - odd_q.value, predicted_radius: odd_q.uncertainty },
        even: BranchCheck { sampled: est[1], predicted: even_q.value, predicted_radius: even_q.uncertainty },
    })
}

/// Draws `count` exit times and signs and returns `(mean sign, correlation of tau with sign)`
/// as estimates; both should vanish.
pub fn sign_independence(count: usize, stream: RngStream) -> (McEstimate, McEstimate) {
    let parts = map_chunks(count, |c, range| {
        let mut rng = stream.child(c as u64).rng();
        let mut acc = vec![Moments::default(); 2];
        for _ in range {
            let r = rng.next_u64();
            let s = if r & 1 == 1 { 1.0 } else { -1.0 };
            let t = tau::table().quantile(super::rng::open_unit(r));
            acc[0].push(s);
            // E[(tau - 1) s] / sd(tau) with sd(tau) = sqrt(2/3).
            acc[1].push((t - tau::MEAN) * s / (2.0f64 / 3.0).sqrt());
        }
        acc
    });
    let e = merge_all(parts, 2);
    (e[0], e[1])
}
