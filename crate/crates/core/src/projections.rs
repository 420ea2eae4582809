//! Lattice interpolation operators and the deterministic local error.
//!
//! `pi_e` interpolates a function linearly between the even nodes `2kh`, `pi_o`
//! between the odd nodes `(2k+1)h`. Given the position `y` of the driving
//! Brownian motion at `theta`, the walk value at the first even stopping time
//! after `theta` has conditional mean `pi_e f(y)` when the last step before
//! `theta` has odd index and `pi_o pi_e f(y)` when it has even index; `q(y)` is
//! the probability of the latter.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exact_heat::{gaussian_density, smoothed, truncation_width, QuadratureSpec};
use crate::quadrature::gk15;
use crate::terminal::{even_lattice_jumps, gbv_tail_norm, GbvFunction, TerminalCondition};

/// Distance from `x` to the odd lattice `(2Z+1)h`.
pub fn dist_odd(x: f64, h: f64) -> f64 {
    let u = (x / h - 1.0).rem_euclid(2.0);
    h * u.min(2.0 - u)
}

/// Distance from `x` to the even lattice `2hZ`; equals `h - dist_odd(x, h)`.
pub fn dist_even(x: f64, h: f64) -> f64 {
    let u = (x / h).rem_euclid(2.0);
    h * u.min(2.0 - u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Piecewise-linear function with nodes at `2mh` (even) or `(2m+1)h` (odd) for `m` in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLinear {
    pub h: f64,
    pub parity: Parity,
    pub first: i64,
    pub node_values: Vec<f64>,
}

impl LatticeLinear {
    pub fn last(&self) -> i64 {
        self.first + self.node_values.len() as i64 - 1
    }

    pub fn node(&self, m: i64) -> f64 {
        match self.parity {
            Parity::Even => 2.0 * m as f64 * self.h,
            Parity::Odd => (2 * m + 1) as f64 * self.h,
        }
    }

    /// Linear interpolation; `None` outside `[node(first), node(last)]`.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let offset = match self.parity {
            Parity::Even => 0.0,
            Parity::Odd => self.h,
        };
        let mut s = (x - offset) / (2.0 * self.h);
        // A node computed as `2mh` may divide back to just below `m`; snap within a few ulps.
        let r = s.round();
        if (s - r).abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0) {
            s = r;
        }
        let m = s.floor();
        let i = m as i64 - self.first;
        let n = self.node_values.len() as i64;
        if i < 0 || i >= n {
            return None;
        }
        let frac = s - m;
        if frac == 0.0 {
            return Some(self.node_values[i as usize]);
        }
        if i + 1 >= n {
            return None;
        }
        let (a, b) = (self.node_values[i as usize], self.node_values[i as usize + 1]);
        Some((1.0 - frac) * a + frac * b)
    }
}

/// `pi_e f` on the even nodes `2mh`, `m` in `window`.
pub fn pi_e_fn(f: impl Fn(f64) -> f64, h: f64, window: RangeInclusive<i64>) -> LatticeLinear {
    let first = *window.start();
    let node_values = window.map(|m| f(2.0 * m as f64 * h)).collect();
    LatticeLinear { h, parity: Parity::Even, first, node_values }
}

pub fn pi_e(g: &TerminalCondition, h: f64, window: RangeInclusive<i64>) -> LatticeLinear {
    pi_e_fn(|x| g.evaluate(x), h, window)
}

/// Interpolation of `f` at the nodes of the opposite parity that lie inside `f`'s window.
pub fn pi_o(f: &LatticeLinear) -> LatticeLinear {
    let (parity, first, last) = match f.parity {
        Parity::Even => (Parity::Odd, f.first, f.last() - 1),
        Parity::Odd => (Parity::Even, f.first + 1, f.last()),
    };
    let mut out = LatticeLinear { h: f.h, parity, first, node_values: Vec::new() };
    out.node_values = (first..=last).map(|m| f.eval(out.node(m)).expect("node inside source window")).collect();
    out
}

/// Estimates of `q` on the grid `y_j = j * pitch`, `j = 0..`, for `y >= 0`; `q` is even in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub h: f64,
    pub theta: f64,
    pub sigma: f64,
    pub pitch: f64,
    pub q_hat: Vec<f64>,
    /// Confidence radius (3 standard errors) per grid point.
    pub ci: Vec<f64>,
}

impl QTable {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.q_hat.len()).map(|j| j as f64 * self.pitch)
    }

    pub fn y_max(&self) -> f64 {
        (self.q_hat.len().saturating_sub(1)) as f64 * self.pitch
    }

    /// Table built from the leading-order profile `q = d_o/h` with zero radii.
    pub fn first_order(h: f64, theta: f64, sigma: f64, pitch: f64, y_max: f64) -> QTable {
        let m = (y_max / pitch).ceil() as usize;
        let q_hat = (0..=m).map(|j| dist_odd(j as f64 * pitch, h) / h).collect();
        QTable { h, theta, sigma, pitch, q_hat, ci: vec![0.0; m + 1] }
    }

    /// Index and weight of the left grid point for `|y|`; `None` beyond the table.
    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        let s = y.abs() / self.pitch;
        let j = s.floor() as usize;
        if j + 1 < self.q_hat.len() {
            Some((j, s - j as f64))
        } else if j + 1 == self.q_hat.len() && s == j as f64 {
            Some((j, 0.0))
        } else {
            None
        }
    }

    /// Interpolated `q(y)`; falls back to `d_o(y)/h` outside the table.
    pub fn q(&self, y: f64) -> f64 {
        match self.locate(y) {
            Some((j, 0.0)) => self.q_hat[j],
            Some((j, lam)) => (1.0 - lam) * self.q_hat[j] + lam * self.q_hat[j + 1],
            None => dist_odd(y, self.h) / self.h,
        }
    }

    /// `rho(y) = q(y) - d_o(y)/h`.
    pub fn rho(&self, y: f64) -> f64 {
        self.q(y) - dist_odd(y, self.h) / self.h
    }

    pub fn ci_at(&self, y: f64) -> f64 {
        match self.locate(y) {
            Some((j, 0.0)) => self.ci[j],
            Some((j, lam)) => (1.0 - lam) * self.ci[j] + lam * self.ci[j + 1],
            None => 0.0,
        }
    }

    /// Columnar text form: a `#`-prefixed metadata line, a header `y,q_hat,ci`, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# h={},theta={},sigma={},pitch={}\ny,q_hat,ci\n", self.h, self.theta, self.sigma, self.pitch);
        for (j, y) in self.grid().enumerate() {
            let _ = writeln!(s, "{},{},{}", y, self.q_hat[j], self.ci[j]);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<QTable> {
        let bad = |m: &str| Error::Config(format!("qtable: {m}"));
        let mut lines = text.lines();
        let meta = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("missing metadata line"))?;
        let mut kv = BTreeMap::new();
        for part in meta.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("malformed metadata"))?;
            kv.insert(k.trim().to_string(), v.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))?);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing `{k}`")));
        if lines.next().map(str::trim) != Some("y,q_hat,ci") {
            return Err(bad("missing header"));
        }
        let (h, theta, sigma, pitch) = (get("h")?, get("theta")?, get("sigma")?, get("pitch")?);
        let mut q_hat = Vec::new();
        let mut ci = Vec::new();
        for (j, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let cols: Vec<f64> =
                line.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))).collect::<Result<_>>()?;
            if cols.len() != 3 {
                return Err(bad("expected 3 columns"));
            }
            if (cols[0] - j as f64 * pitch).abs() > 1e-9 * pitch.max(cols[0].abs()) {
                return Err(bad("grid is not uniform from 0"));
            }
            q_hat.push(cols[1]);
            ci.push(cols[2]);
        }
        Ok(QTable { h, theta, sigma, pitch, q_hat, ci })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<QTable> {
        QTable::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Local error with the uncertainty carried in from the q-table, kept apart from quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalErrorValue {
    pub value: f64,
    /// Three standard deviations of the q-table noise propagated through the second integral.
    pub uncertainty: f64,
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// `E[pi_e f(X) - f(X)] + E[(pi_o pi_e f - pi_e f)(X) q(X)]` with `f = g(x0 + .)` and
/// `X ~ N(0, sigma^2 theta)`, where `(h, theta, sigma)` come from `qt`.
pub fn local_error_deterministic(
    g: &TerminalCondition,
    x0: f64,
    h: f64,
    theta: f64,
    qt: &QTable,
    quad: &QuadratureSpec,
) -> Result<LocalErrorValue> {
    if !(rel_close(h, qt.h) && rel_close(theta, qt.theta)) {
        return Err(Error::InvalidParameter(format!(
            "q-table built for (h, theta) = ({}, {}), requested ({h}, {theta})",
            qt.h, qt.theta
        )));
    }
    let sigma = qt.sigma;
    let sd = sigma * theta.sqrt();
    let reach = sd * 12.0f64.max(truncation_width(g.growth_exponent(), sd)) + x0.abs();
    if qt.y_max() < reach.min(4.0 * sd) {
        return Err(Error::WindowTooSmall(format!("q-table reaches {} but the bulk needs {}", qt.y_max(), 4.0 * sd)));
    }
    let m_lo = (-reach / h).floor() as i64;
    let m_hi = (reach / h).ceil() as i64;
    // Even nodes covering [m_lo h, m_hi h] plus one guard cell each side.
    let pe = pi_e_fn(|y| g.evaluate(x0 + y), h, (m_lo.div_euclid(2) - 1)..=(m_hi.div_euclid(2) + 2));
    let po = pi_o(&pe);
    let p = |y: f64| gaussian_density(y, theta, sigma);
    let pe_at = |y: f64| pe.eval(y).expect("inside even window");
    let diff_at = |y: f64| po.eval(y).expect("inside odd window") - pe_at(y);

    let mut mean_pe = 0.0;
    for m in m_lo..m_hi {
        let a = m as f64 * h;
        mean_pe += gk15(&mut |y| pe_at(y) * p(y), a, a + h).0;
    }
    let second = integrate_with_q(qt, m_lo as f64 * h, m_hi as f64 * h, diff_at);
    let mean_f = smoothed(g, theta, x0, sigma, quad)?;
    Ok(LocalErrorValue { value: mean_pe - mean_f + second.value, uncertainty: second.uncertainty })
}

/// `int_lo^hi w(y) q(y) p(y) dy` with `p` the density of `N(0, sigma^2 theta)` from `qt`.
///
/// The range is split at the table grid so that `q` is linear on each piece. The q-table
/// radii are combined in quadrature through the linear weights of each grid value.
pub fn integrate_with_q(qt: &QTable, lo: f64, hi: f64, w: impl Fn(f64) -> f64) -> LocalErrorValue {
    let p = |y: f64| gaussian_density(y, qt.theta, qt.sigma);
    let pitch = qt.pitch;
    let mut value = 0.0;
    let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
    let i_lo = (lo / pitch).floor() as i64;
    let i_hi = (hi / pitch).ceil() as i64;
    for i in i_lo..i_hi {
        let a = lo.max(i as f64 * pitch);
        let b = hi.min((i + 1) as f64 * pitch);
        if b <= a {
            continue;
        }
        // |y| runs over [j pitch, (j+1) pitch] on this piece.
        let j = if i >= 0 { i as usize } else { (-i - 1) as usize };
        if j + 1 < qt.q_hat.len() {
            let yj = j as f64 * pitch;
            let lam = |y: f64| (y.abs() - yj) / pitch;
            let w_left = gk15(&mut |y| w(y) * (1.0 - lam(y)) * p(y), a, b).0;
            let w_right = gk15(&mut |y| w(y) * lam(y) * p(y), a, b).0;
            *weights.entry(j).or_default() += w_left;
            *weights.entry(j + 1).or_default() += w_right;
        } else {
            value += gk15(&mut |y| w(y) * qt.q(y) * p(y), a, b).0;
        }
    }
    let mut var = 0.0;
    for (&j, &wt) in &weights {
        value += wt * qt.q_hat[j];
        var += (wt * qt.ci[j]).powi(2);
    }
    LocalErrorValue { value, uncertainty: var.sqrt() }
}

/// Upper bound on the local error of a GBV function:
/// `(h/(sigma sqrt theta)) e^{3 beta h + beta|x0|} [7/sqrt(2 pi) e^{beta^2 sigma^2 T/2} + 1.5 C]
///  (int e^{-beta|y|} d|mu| + sum over even-lattice jumps |alpha_i| e^{-beta|x_i|})`
/// with `C = crate::bridge::super_coef`.
pub fn gbv_local_bound(g: &GbvFunction, x0: f64, h: f64, theta: f64, sigma: f64, horizon: f64) -> Result<f64> {
    let beta = g.beta;
    let kept: Vec<_> = even_lattice_jumps(g, x0, h).into_iter().map(|i| g.jumps[i]).collect();
    let restricted = GbvFunction { c: g.c, mu: g.mu.clone(), jumps: kept, beta };
    let norm = gbv_tail_norm(&restricted, beta)?;
    let c33 = crate::bridge::super_coef(beta, h, sigma, theta);
    let r = h / (sigma * theta.sqrt());
    let lead = 7.0 / (2.0 * std::f64::consts::PI).sqrt() * (beta * beta * sigma * sigma * horizon / 2.0).exp();
    Ok(r * (3.0 * beta * h + beta * x0.abs()).exp() * (lead + 1.5 * c33) * norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminal::catalog;

    #[test]
    fn distance_examples() {
        let h = 0.3;
        assert_eq!(dist_odd(0.0, h), h);
        assert_eq!(dist_even(0.0, h), 0.0);
        assert_eq!(dist_odd(h, h), 0.0);
        assert!((dist_odd(h / 3.0, h) - 2.0 * h / 3.0).abs() < 1e-15);
        assert!((dist_even(h / 3.0, h) - h / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pi_e_ramp_for_indicator() {
        let h = 0.25;
        let y = 0.6; // in [2h, 4h)
        let pe = pi_e_fn(|x| if x > y { 1.0 } else { 0.0 }, h, -4..=4);
        assert_eq!(pe.eval(0.5), Some(0.0));
        assert_eq!(pe.eval(1.0), Some(1.0));
        assert!((pe.eval(0.7).unwrap() - (0.7 - 0.5) / 0.5).abs() < 1e-15);
        assert_eq!(pe.eval(2.5), None);
    }

    #[test]
    fn pi_o_of_even_interpolant() {
        let h = 0.5;
        let pe = pi_e_fn(|x| 3.0 * x - 1.0, h, -3..=3);
        let po = pi_o(&pe);
        assert_eq!(po.parity, Parity::Odd);
        assert_eq!((po.first, po.last()), (-3, 2));
        for &x in &[-2.4, -0.1, 0.0, 1.7] {
            assert!((po.eval(x).unwrap() - (3.0 * x - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn qtable_round_trip() {
        let qt = QTable::first_order(0.125, 1.0, 1.0, 0.125 / 8.0, 1.0);
        let back = QTable::from_csv(&qt.to_csv()).unwrap();
        assert_eq!(qt, back);
        assert_eq!(qt.q(0.0), 1.0);
        assert_eq!(qt.q(0.125), 0.0);
        assert_eq!(qt.q(0.25), 1.0);
        assert!(qt.rho(0.3).abs() < 1e-15);
        assert!(qt.rho(7.3).abs() < 1e-15);
    }

    #[test]
    fn local_error_affine_is_zero() {
        let h = 1.0 / 16.0;
        let qt = QTable::first_order(h, 1.0, 1.0, h / 8.0, 8.0);
        let g = catalog("linear").unwrap();
        let v = local_error_deterministic(&g, 0.3, h, 1.0, &qt, &QuadratureSpec::default()).unwrap();
        assert!(v.value.abs() < 1e-12, "{}", v.value);
        assert_eq!(v.uncertainty, 0.0);
    }

    #[test]
    fn indicator_first_term_matches_ramp_integral() {
        // With q = 0 only the first term remains.
        let h = 1.0 / 8.0;
        let mut qt = QTable::first_order(h, 1.0, 1.0, h / 8.0, 8.0);
        qt.q_hat.iter_mut().for_each(|v| *v = 0.0);
        let g = catalog("indicator").unwrap();
        let v = local_error_deterministic(&g, 0.0, h, 1.0, &qt, &QuadratureSpec::default()).unwrap();
        let (want, _) = gk15(&mut |x| (x + 2.0 * h) / (2.0 * h) * gaussian_density(x, 1.0, 1.0), -2.0 * h, 0.0);
        assert!((v.value - want).abs() < 1e-12, "{} vs {want}", v.value);
    }

    #[test]
    fn mismatched_table_rejected() {
        let qt = QTable::first_order(0.1, 1.0, 1.0, 0.0125, 8.0);
        let g = catalog("indicator").unwrap();
        assert!(local_error_deterministic(&g, 0.0, 0.2, 1.0, &qt, &QuadratureSpec::default()).is_err());
        let short = QTable::first_order(0.1, 1.0, 1.0, 0.0125, 1.0);
        assert!(matches!(
            local_error_deterministic(&g, 0.0, 0.1, 1.0, &short, &QuadratureSpec::default()),
            Err(Error::WindowTooSmall(_))
        ));
    }
}
