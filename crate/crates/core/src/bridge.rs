//! Brownian-bridge exit quantities: the `F` theta series, the symmetric exit-time integral,
//! a conditioned-bridge sampler, estimation of `q` and the integral checks on `rho = q - d_o/h`.
//!
//! Bridges here are standard (unit variance); physical positions are divided by `sigma`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_heat::gaussian_density;
use crate::exit_mc::rng::{map_chunks, open_unit, RngStream};
use crate::projections::{dist_odd, QTable};
use crate::quadrature::{gk15, integrate_to_infinity, integrate_with_breaks, QuadratureSpec};
use crate::terminal::is_multiple_of;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-17, max_terms: 200 }
    }
}

/// Terms `m >= 1` of `sum (-1)^m e^{-2 m^2 x^2}` needed before a term drops below `tol`.
fn primary_terms(x: f64, tol: f64) -> f64 {
    ((-tol.ln()) / 2.0).sqrt() / x
}

/// Terms `k >= 0` of `sum e^{-pi^2 (2k+1)^2 / (8 x^2)}` needed to reach `tol` relative to the prefactor.
fn dual_terms(x: f64, tol: f64) -> f64 {
    let scale = ((2.0 * PI).sqrt() / x).max(1.0);
    ((8.0 * (scale / tol).ln()).sqrt() * x / PI + 1.0) / 2.0
}

/// `F(x) = sum_{m in Z} (-1)^m e^{-2 m^2 x^2}` for `x > 0`.
///
/// For `x < 1` the alternating sum cancels badly, so the Jacobi dual
/// `sqrt(2 pi)/x sum_{k>=0} e^{-pi^2 (2k+1)^2/(8x^2)}` is used whenever it fits in `max_terms`.
pub fn f_series(x: f64, spec: &SeriesSpec) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("F needs x > 0, got {x}")));
    }
    let np = primary_terms(x, spec.abs_tol);
    let nd = dual_terms(x, spec.abs_tol);
    let max = spec.max_terms as f64;
    let use_primary = (x >= 1.0 && np <= max) || nd > max;
    if use_primary && np > max {
        return Err(Error::SeriesNotConverged { terms: spec.max_terms });
    }
    if use_primary {
        let mut acc = 0.0;
        for m in 1..=spec.max_terms {
            let term = (-2.0 * (m * m) as f64 * x * x).exp();
            acc += if m % 2 == 0 { term } else { -term };
            if term < spec.abs_tol {
                break;
            }
        }
        Ok(1.0 + 2.0 * acc)
    } else {
        Ok((2.0 * PI).sqrt() / x * dual_sum(1.0 / (x * x), spec))
    }
}

/// `sum_{k>=0} e^{-pi^2 (2k+1)^2 u / 8}`.
fn dual_sum(u: f64, spec: &SeriesSpec) -> f64 {
    let mut acc = 0.0;
    for k in 0..spec.max_terms {
        let j = (2 * k + 1) as f64;
        let term = (-PI * PI * j * j * u / 8.0).exp();
        acc += term;
        if term < spec.abs_tol * acc.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    acc
}

/// Density `F(1/sqrt u)/sqrt(2 pi u)` on `(0, inf)`.
pub fn exit_time_pdf(u: f64) -> f64 {
    if !(u > 0.0) {
        return 0.0;
    }
    let spec = SeriesSpec::default();
    if u >= 1.0 {
        // The dual form collapses: F(1/sqrt u)/sqrt(2 pi u) = sum_k e^{-pi^2 (2k+1)^2 u/8}.
        dual_sum(u, &spec)
    } else {
        f_series(1.0 / u.sqrt(), &spec).expect("x >= 1 converges in a few terms") / (2.0 * PI * u).sqrt()
    }
}

/// `int_0^inf exit_time_pdf(u) du`, computed in `u = s^2` to remove the `u^{-1/2}` singularity.
pub fn exit_pdf_mass(quad: &QuadratureSpec) -> Result<f64> {
    let f = |s: f64| 2.0 * s * exit_time_pdf(s * s);
    let head = integrate_with_breaks(&mut |s| f(s), 0.0, 1.0, &[], quad)?;
    let tail = integrate_to_infinity(f, 1.0, quad)?;
    Ok(head.value + tail.value)
}

/// `E[H]` for the exit time `H` of `(-h, h)` by a standard bridge from 0 to `y` of length `theta`:
/// `h int_0^theta gamma_{theta-t}(0,y)/gamma_theta(0,y) F(h/sqrt t)/sqrt(2 pi t) dt`, `|y| >= h`.
pub fn expected_exit_time_sym(theta: f64, h: f64, y: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(theta > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter(format!("need theta, h > 0, got ({theta}, {h})")));
    }
    if y.abs() < h {
        return Err(Error::InvalidParameter(format!("formula needs |y| >= h, got y = {y}, h = {h}")));
    }
    let spec = SeriesSpec::default();
    let y2 = y * y;
    // t = s^2 absorbs the t^{-1/2} at 0; the Gaussian ratio kills the (theta-t)^{-1/2} at theta.
    let integrand = |s: f64| {
        let t = s * s;
        let rem = theta - t;
        if rem <= 0.0 || t <= 0.0 {
            return if t <= 0.0 { 2.0 / (2.0 * PI).sqrt() } else { 0.0 };
        }
        let log_ratio = 0.5 * (theta / rem).ln() - y2 / (2.0 * rem) + y2 / (2.0 * theta);
        let f = f_series(h / s, &spec).unwrap_or(0.0);
        2.0 * log_ratio.exp() * f / (2.0 * PI).sqrt()
    };
    let root = theta.sqrt();
    let q = integrate_with_breaks(&mut |s| integrand(s), 0.0, root, &[h.min(root / 2.0)], quad)?;
    Ok(h * q.value)
}

/// Right-hand side of the exit-time bound for the symmetric interval: `4h(h + |y|/2) ∧ theta`.
pub fn exit_time_upper_bound(theta: f64, h: f64, y: f64) -> f64 {
    (4.0 * h * (h + y.abs() / 2.0)).min(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeHit {
    pub side: Side,
    pub time: f64,
}

/// A standard Brownian bridge from `start` at time 0 to `end` at `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub theta: f64,
    pub start: f64,
    pub end: f64,
    /// Minimum step count; the sampler refines further for narrow barriers.
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

impl BridgeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("bridge length must be positive, got {}", self.theta)));
        }
        if self.steps < 64 || self.paths < 1000 {
            return Err(Error::InvalidParameter(format!(
                "bridge needs steps >= 64 and paths >= 1000, got ({}, {})",
                self.steps, self.paths
            )));
        }
        Ok(())
    }
}

/// Step count for a barrier pair of width `gap`: at least `64 theta / gap^2`.
pub fn steps_for_gap(theta: f64, gap: f64, min_steps: usize) -> usize {
    ((64.0 * theta / (gap * gap)).ceil() as usize).max(min_steps)
}

/// Probability that a Brownian bridge over `dt` from `x1` to `x2` (same side of `c`) touches `c`.
#[inline]
fn crossing_probability(c: f64, x1: f64, x2: f64, dt: f64) -> f64 {
    (-2.0 * (c - x1) * (c - x2) / dt).exp()
}

/// First exit from `(lower, upper)` of one bridge path on `steps` exact Gaussian steps, with the
/// intra-step crossing correction tested on the nearer barrier first.
pub fn first_exit<R: Rng>(
    rng: &mut R,
    theta: f64,
    start: f64,
    end: f64,
    lower: f64,
    upper: f64,
    steps: usize,
) -> Option<BridgeHit> {
    if start <= lower {
        return Some(BridgeHit { side: Side::Lower, time: 0.0 });
    }
    if start >= upper {
        return Some(BridgeHit { side: Side::Upper, time: 0.0 });
    }
    let dt = theta / steps as f64;
    let mut x = start;
    for k in 0..steps {
        let s = k as f64 * dt;
        let next = if k + 1 == steps {
            end
        } else {
            let rem = theta - s;
            let z: f64 = rng.sample(StandardNormal);
            x + (end - x) * dt / rem + (dt * (rem - dt) / rem).sqrt() * z
        };
        if next <= lower {
            return Some(BridgeHit { side: Side::Lower, time: s + dt * (x - lower) / (x - next) });
        }
        if next >= upper {
            return Some(BridgeHit { side: Side::Upper, time: s + dt * (upper - x) / (next - x) });
        }
        let mid = 0.5 * (x + next);
        let order = if upper - mid < mid - lower {
            [(Side::Upper, upper), (Side::Lower, lower)]
        } else {
            [(Side::Lower, lower), (Side::Upper, upper)]
        };
        for (side, c) in order {
            if open_unit(rng.next_u64()) < crossing_probability(c, x, next, dt) {
                return Some(BridgeHit { side, time: s + 0.5 * dt });
            }
        }
        x = next;
    }
    None
}

/// Exit records for `spec.paths` bridges; `None` where the path stays inside.
pub fn bridge_sample(spec: &BridgeSpec, lower: f64, upper: f64) -> Result<Vec<Option<BridgeHit>>> {
    spec.validate()?;
    if !(lower < upper) {
        return Err(Error::InvalidParameter(format!("barriers must satisfy lower < upper, got ({lower}, {upper})")));
    }
    let steps = steps_for_gap(spec.theta, upper - lower, spec.steps);
    let stream = RngStream::new(spec.seed, 0);
    let parts = map_chunks(spec.paths, |c, range| {
        let mut rng = stream.child(c as u64).rng();
        range.map(|_| first_exit(&mut rng, spec.theta, spec.start, spec.end, lower, upper, steps)).collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// The bridge skeleton at times `k theta/steps`, `k = 0..=steps`.
pub fn bridge_path<R: Rng>(rng: &mut R, theta: f64, start: f64, end: f64, steps: usize) -> Vec<f64> {
    let dt = theta / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = start;
    out.push(x);
    for k in 0..steps {
        x = if k + 1 == steps {
            end
        } else {
            let rem = theta - k as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            x + (end - x) * dt / rem + (dt * (rem - dt) / rem).sqrt() * z
        };
        out.push(x);
    }
    out
}

/// Simulation budget for `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBudget {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for QBudget {
    fn default() -> Self {
        Self { paths: 2000, steps: 64, seed: 0x51 }
    }
}

/// `q(y)`: probability that a bridge from `y/sigma` to 0 of length `theta` reaches the even
/// neighbour of `y` before the odd one. Returns `(q_hat, 3 SE)`; lattice points follow the
/// convention even node 1, odd node 0.
pub fn q_estimate(y: f64, h: f64, theta: f64, sigma: f64, paths: usize, steps: usize, stream: RngStream) -> (f64, f64) {
    let m = (y / h).floor();
    let even_below = (m as i64).rem_euclid(2) == 0;
    if is_multiple_of(y, h) || y == m * h {
        let node_even = ((y / h).round() as i64).rem_euclid(2) == 0;
        return (if node_even { 1.0 } else { 0.0 }, 0.0);
    }
    let (a, b) = (m * h / sigma, (m + 1.0) * h / sigma);
    let steps = steps_for_gap(theta, b - a, steps);
    let mut rng = stream.rng();
    let mut even_first = 0usize;
    for _ in 0..paths {
        // The end point 0 is a lattice point, so every path exits by time theta.
        let hit = first_exit(&mut rng, theta, y / sigma, 0.0, a, b, steps).expect("bridge ends outside the cell");
        if (hit.side == Side::Lower) == even_below {
            even_first += 1;
        }
    }
    let n = paths as f64;
    let q = even_first as f64 / n;
    // Agresti-Coull centre keeps the radius positive at 0 and 1.
    let p = (even_first as f64 + 2.0) / (n + 4.0);
    (q, 3.0 * (p * (1.0 - p) / n).sqrt())
}

/// Q-table on `[0, max(h, 8 sigma sqrt theta)]` at pitch `h/8`, one stream per grid point.
pub fn build_qtable(h: f64, theta: f64, sigma: f64, budget: &QBudget) -> Result<QTable> {
    if !(h > 0.0 && theta > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("need h, theta, sigma > 0, got ({h}, {theta}, {sigma})")));
    }
    if budget.paths < 100 {
        return Err(Error::InvalidParameter(format!("q needs at least 100 paths per point, got {}", budget.paths)));
    }
    let pitch = h / 8.0;
    let extent = h.max(8.0 * sigma * theta.sqrt());
    let count = (extent / pitch).ceil() as usize + 1;
    let stream = RngStream::new(budget.seed, 1);
    let est: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let y = j as f64 * pitch;
            if j % 8 == 0 {
                q_estimate(y, h, theta, sigma, 0, 0, stream)
            } else {
                q_estimate(y, h, theta, sigma, budget.paths, budget.steps, stream.child(j as u64))
            }
        })
        .collect();
    let (q_hat, ci) = est.into_iter().unzip();
    Ok(QTable { h, theta, sigma, pitch, q_hat, ci })
}

/// `C(beta, h, theta) = e^{beta h}(10.2 + 4r) ∨ e^{beta^2 sigma^2 theta}[1.4 + (3.6 + 1.6 beta sigma sqrt theta) r + 0.7 r^2]`
/// with `r = h/(sigma sqrt theta)`.
pub fn super_coef(beta: f64, h: f64, sigma: f64, theta: f64) -> f64 {
    let sd = sigma * theta.sqrt();
    let r = h / sd;
    let first = (beta * h).exp() * (10.2 + 4.0 * r);
    let second = (beta * beta * sd * sd).exp() * (1.4 + (3.6 + 1.6 * beta * sd) * r + 0.7 * r * r);
    first.max(second)
}

/// `(e^{beta sigma sqrt(T/2)} ∨ e^{beta^2 sigma^2 T})(13.1 + 1.2 beta sigma sqrt T)`, valid when
/// `h/(sigma sqrt theta) <= 1/sqrt 2`.
pub fn simplified_coef_bound(beta: f64, sigma: f64, horizon: f64) -> f64 {
    let a = (beta * sigma * (horizon / 2.0).sqrt()).exp();
    let b = (beta * beta * sigma * sigma * horizon).exp();
    a.max(b) * (13.1 + 1.2 * beta * sigma * horizon.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoCheck {
    pub value: f64,
    /// Q-table radius propagated through the integral.
    pub uncertainty: f64,
    pub bound: f64,
}

impl RhoCheck {
    pub fn holds(&self) -> bool {
        self.value + self.uncertainty <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoReport {
    pub h: f64,
    pub theta: f64,
    pub sigma: f64,
    pub beta: f64,
    /// `h/(sigma sqrt theta)`.
    pub r: f64,
    /// `int_0^h |rho| p` against `5.1 r + 2 r^2`.
    pub inner: RhoCheck,
    /// `int_h^inf |rho| p` against `2.9 r + r^2`.
    pub outer: RhoCheck,
    /// `sup_m int_{(2m-1)h}^{(2m+1)h} e^{beta|y|} |rho| p` against `C r`.
    pub cell_sup: RhoCheck,
    pub cell_argmax: usize,
}

/// `int_lo^hi e^{beta y} |rho(y)| p(y) dy` for `0 <= lo < hi`, plus the radius from the table.
fn weighted_abs_rho(qt: &QTable, beta: f64, lo: f64, hi: f64) -> (f64, f64) {
    let p = |y: f64| gaussian_density(y, qt.theta, qt.sigma) * (beta * y).exp();
    let rho = |y: f64| qt.rho(y);
    let last = qt.q_hat.len() - 1;
    let mut value = 0.0;
    let mut var_terms = vec![0.0; qt.q_hat.len()];
    let j_lo = (lo / qt.pitch).floor() as usize;
    let j_hi = ((hi / qt.pitch).ceil() as usize).min(last);
    for j in j_lo..j_hi {
        let a = lo.max(j as f64 * qt.pitch);
        let b = hi.min((j + 1) as f64 * qt.pitch);
        if b <= a {
            continue;
        }
        // rho is linear on the piece: split at its root so |rho| is linear on each part.
        let (ra, rb) = (rho(a), rho(b));
        let mut cuts = vec![a];
        if ra * rb < 0.0 {
            cuts.push(a + (b - a) * ra / (ra - rb));
        }
        cuts.push(b);
        for w in cuts.windows(2) {
            value += gk15(&mut |y| rho(y).abs() * p(y), w[0], w[1]).0;
        }
        let yj = j as f64 * qt.pitch;
        let lam = |y: f64| (y - yj) / qt.pitch;
        var_terms[j] += gk15(&mut |y| (1.0 - lam(y)) * p(y), a, b).0;
        var_terms[j + 1] += gk15(&mut |y| lam(y) * p(y), a, b).0;
    }
    let unc = var_terms.iter().zip(&qt.ci).map(|(w, c)| (w * c).powi(2)).sum::<f64>().sqrt();
    (value, unc)
}

/// Evaluates the three integral bounds on `rho` from a q-table.
pub fn rho_integral_checks(beta: f64, qt: &QTable) -> Result<RhoReport> {
    let (h, theta, sigma) = (qt.h, qt.theta, qt.sigma);
    if !is_multiple_of(h, qt.pitch) {
        return Err(Error::InvalidParameter("q-table pitch must divide h".into()));
    }
    let sd = sigma * theta.sqrt();
    if qt.y_max() < h.max(8.0 * sd) * (1.0 - 1e-12) {
        return Err(Error::WindowTooSmall(format!("q-table reaches {} but needs {}", qt.y_max(), h.max(8.0 * sd))));
    }
    let r = h / sd;
    let (iv, iu) = weighted_abs_rho(qt, 0.0, 0.0, h);
    let (ov, ou) = weighted_abs_rho(qt, 0.0, h, qt.y_max());
    let coef = super_coef(beta, h, sigma, theta);
    let mut best = (0usize, RhoCheck { value: f64::NEG_INFINITY, uncertainty: 0.0, bound: coef * r });
    let mut m = 0usize;
    while (2 * m + 1) as f64 * h <= qt.y_max() * (1.0 + 1e-12) {
        let (v, u) = if m == 0 {
            // [-h, h] is twice [0, h] by symmetry.
            let (v, u) = weighted_abs_rho(qt, beta, 0.0, h);
            (2.0 * v, 2.0 * u)
        } else {
            weighted_abs_rho(qt, beta, (2 * m - 1) as f64 * h, (2 * m + 1) as f64 * h)
        };
        if v > best.1.value {
            best = (m, RhoCheck { value: v, uncertainty: u, bound: coef * r });
        }
        m += 1;
    }
    Ok(RhoReport {
        h,
        theta,
        sigma,
        beta,
        r,
        inner: RhoCheck { value: iv, uncertainty: iu, bound: 5.1 * r + 2.0 * r * r },
        outer: RhoCheck { value: ov, uncertainty: ou, bound: 2.9 * r + r * r },
        cell_sup: best.1,
        cell_argmax: best.0,
    })
}

/// Leading-order `rho` check: `|q_hat - d_o/h|` at a grid point, scaled by `sigma sqrt theta / h`.
pub fn scaled_rho(qt: &QTable, y: f64) -> f64 {
    (qt.q(y) - dist_odd(y, qt.h) / qt.h).abs() * qt.sigma * qt.theta.sqrt() / qt.h
}
