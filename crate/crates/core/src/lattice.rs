//! The discrete solution `u^n` and its time bookkeeping.
//!
//! Time nodes are `t_k = 2kT/n`; between consecutive nodes the walk makes two
//! steps of size `h = sigma sqrt(T/n)`. For a query time `t`, `n_theta` is the
//! walk length from `t` to `T` and `theta_n = n_theta T/n = T - t_k`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_heat::{u_exact, HeatParams, QuadratureSpec};
use crate::terminal::TerminalCondition;

/// Slack used when rounding `(T - t)/(2T/n)` up to an integer, so that lattice
/// times are not pushed to the next cell by representation error.
const CEIL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub n: usize,
    pub horizon: f64,
    pub sigma: f64,
    /// Spatial anchor of the grid `z0 + hZ`.
    pub z0: f64,
}

impl LatticeParams {
    pub fn new(n: usize, horizon: f64, sigma: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("n must be even and >= 2, got {n}")));
        }
        HeatParams::new(horizon, sigma)?;
        Ok(Self { n, horizon, sigma, z0: 0.0 })
    }

    pub fn with_anchor(mut self, z0: f64) -> Self {
        self.z0 = z0;
        self
    }

    /// Walk step `h = sigma sqrt(T/n)`.
    pub fn h(&self) -> f64 {
        self.sigma * (self.horizon / self.n as f64).sqrt()
    }

    /// Time per walk step `T/n`.
    pub fn delta(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Time node `t_k = 2kT/n`.
    pub fn t_node(&self, k: usize) -> f64 {
        2.0 * k as f64 * self.horizon / self.n as f64
    }

    pub fn heat(&self) -> HeatParams {
        HeatParams { horizon: self.horizon, sigma: self.sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaIndex {
    pub n_theta: usize,
    pub theta_n: f64,
    /// `t` lies in `[t_k, t_{k+1})`.
    pub k: usize,
    pub t_k: f64,
}

pub fn theta_of(t: f64, lp: &LatticeParams) -> Result<ThetaIndex> {
    if !(t >= 0.0 && t < lp.horizon) {
        return Err(Error::TimeOutOfRange { t, horizon: lp.horizon, closing: ')' });
    }
    let half = (lp.n / 2) as f64;
    let r = (lp.horizon - t) / lp.horizon * half;
    let mut m = r.ceil();
    if m > 1.0 && r - (m - 1.0) <= CEIL_SLACK * r.max(1.0) {
        m -= 1.0;
    }
    let m = (m.max(1.0) as usize).min(lp.n / 2);
    let n_theta = 2 * m;
    let k = lp.n / 2 - m;
    Ok(ThetaIndex { n_theta, theta_n: n_theta as f64 * lp.delta(), k, t_k: lp.t_node(k) })
}

/// Law of `S_N`, the sum of `N` fair signs: `weights[j] = P(S_N = 2j - N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialRow {
    pub n: usize,
    pub weights: Vec<f64>,
}

impl BinomialRow {
    fn build(n: usize) -> Self {
        let mut w = vec![0.0; n + 1];
        let c = n / 2;
        w[c] = 1.0;
        for j in (0..c).rev() {
            // C(n, j) = C(n, j+1) (j+1) / (n-j)
            w[j] = w[j + 1] * (j + 1) as f64 / (n - j) as f64;
        }
        for j in c + 1..=n {
            w[j] = w[n - j];
        }
        let total = tails_inward_sum(&w, |_, v| v);
        for v in &mut w {
            *v /= total;
        }
        BinomialRow { n, weights: w }
    }

    /// `P(S_N = 0)` for even `N`, otherwise 0.
    pub fn central(&self) -> f64 {
        if self.n.is_multiple_of(2) {
            self.weights[self.n / 2]
        } else {
            0.0
        }
    }
}

/// `sum_j f(j, w_j)` accumulated in the order 0, N, 1, N-1, ... so the smallest terms are added first.
fn tails_inward_sum(w: &[f64], f: impl Fn(usize, f64) -> f64) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        acc += f(lo, w[lo]);
        hi -= 1;
        if hi > lo {
            acc += f(hi, w[hi]);
        }
        lo += 1;
    }
    acc
}

type RowCache = RwLock<HashMap<usize, Arc<BinomialRow>>>;

fn row_cache() -> &'static RowCache {
    static CACHE: OnceLock<RowCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached binomial row for `N` walk steps.
pub fn binom_row(n: usize) -> Arc<BinomialRow> {
    if let Some(r) = row_cache().read().expect("row cache poisoned").get(&n) {
        return Arc::clone(r);
    }
    let row = Arc::new(BinomialRow::build(n));
    let mut w = row_cache().write().expect("row cache poisoned");
    Arc::clone(w.entry(n).or_insert(row))
}

/// `u^n(t,x) = sum_j P(S_N = 2j-N) g(x + (2j-N)h)` with `N = n_theta(t)`; `g(x)` at `t = T`.
pub fn un_binomial(g: &TerminalCondition, t: f64, x: f64, lp: &LatticeParams) -> Result<f64> {
    if t == lp.horizon {
        return Ok(g.evaluate(x));
    }
    let ti = theta_of(t, lp)?;
    let row = binom_row(ti.n_theta);
    let h = lp.h();
    let nn = ti.n_theta as f64;
    Ok(tails_inward_sum(&row.weights, |j, w| w * g.evaluate(x + (2.0 * j as f64 - nn) * h)))
}

/// `u^n(t,x)` by the backward recursion `u(t_{k-1}, y) = (u(t_k, y+2h) + 2u(t_k, y) + u(t_k, y-2h))/4`
/// on the dependency cone of `(t, x)`.
pub fn un_recursion(g: &TerminalCondition, t: f64, x: f64, lp: &LatticeParams) -> Result<f64> {
    if t == lp.horizon {
        return Ok(g.evaluate(x));
    }
    let ti = theta_of(t, lp)?;
    let steps = ti.n_theta / 2;
    let h = lp.h();
    // Node i of the terminal row sits at x + 2(i - steps)h.
    let mut row: Vec<f64> = (0..=2 * steps).map(|i| g.evaluate(x + 2.0 * (i as f64 - steps as f64) * h)).collect();
    for s in 0..steps {
        let len = row.len() - 2 * (s + 1);
        for i in 0..len {
            row[i] = 0.25 * (row[i] + 2.0 * row[i + 1] + row[i + 2]);
        }
    }
    Ok(row[0])
}

/// `epsilon_n(t,x) = u^n(t,x) - u(t,x)`.
pub fn total_error(g: &TerminalCondition, t: f64, x: f64, lp: &LatticeParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(t < lp.horizon) {
        return Err(Error::TimeOutOfRange { t, horizon: lp.horizon, closing: ')' });
    }
    Ok(un_binomial(g, t, x, lp)? - u_exact(g, t, x, &lp.heat(), quad)?)
}
