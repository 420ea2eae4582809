use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_heat::{smoothed, u_exact, QuadratureSpec};
use crate::lattice::{theta_of, total_error, LatticeParams};
use crate::terminal::{catalog, growth_envelope, TerminalCondition};

/// Errors below this are indistinguishable from accumulated rounding (10x a 1e-15 floor).
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub ns: Vec<usize>,
    pub errs: Vec<f64>,
    /// Indices of `ns` used in the fit.
    pub used: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when fewer than 5 points clear the noise floor or the signed errors change sign.
    pub degenerate: bool,
}

/// Least squares of `ln|err|` on `ln n` over the points above [`NOISE_FLOOR`].
pub fn fit_rate(ns: &[usize], errs: &[f64]) -> RateFit {
    let used: Vec<usize> = (0..ns.len()).filter(|&i| errs[i].abs() >= NOISE_FLOOR && errs[i].is_finite()).collect();
    let signs_mixed = used.iter().any(|&i| errs[i] > 0.0) && used.iter().any(|&i| errs[i] < 0.0);
    let mut fit = RateFit {
        ns: ns.to_vec(),
        errs: errs.to_vec(),
        used: used.clone(),
        slope: f64::NAN,
        intercept: f64::NAN,
        r_squared: f64::NAN,
        degenerate: used.len() < 5 || signs_mixed,
    };
    if fit.degenerate {
        return fit;
    }
    let xs: Vec<f64> = used.iter().map(|&i| (ns[i] as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&i| errs[i].abs().ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    fit
}

/// Deterministic `epsilon_n(t, x)` over `ns`, fitted on a log-log scale.
pub fn rate_study(
    g: &TerminalCondition,
    t: f64,
    x: f64,
    horizon: f64,
    sigma: f64,
    ns: &[usize],
    quad: &QuadratureSpec,
) -> Result<RateFit> {
    if ns.len() < 5 {
        return Err(Error::InvalidParameter(format!("rate study needs at least 5 n values, got {}", ns.len())));
    }
    let errs =
        ns.iter().map(|&n| total_error(g, t, x, &LatticeParams::new(n, horizon, sigma)?, quad)).collect::<Result<Vec<_>>>()?;
    Ok(fit_rate(ns, &errs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub n: usize,
    pub error: f64,
    /// `sqrt(n) epsilon_n(0, 0)`.
    pub scaled: f64,
}

/// `sqrt(n) epsilon_n(0,0)` for the indicator with `T = sigma = 1`.
pub fn sharpness_run(ns: &[usize], quad: &QuadratureSpec) -> Result<Vec<SharpnessRow>> {
    let g = catalog("indicator").expect("catalog entry");
    ns.iter()
        .map(|&n| {
            let error = total_error(&g, 0.0, 0.0, &LatticeParams::new(n, 1.0, 1.0)?, quad)?;
            Ok(SharpnessRow { n, error, scaled: (n as f64).sqrt() * error })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub t: f64,
    pub t_k: f64,
    pub on_lattice: bool,
    pub total: f64,
    pub adj: f64,
    /// `|eps| sqrt(n (T - t_k))` on-lattice, `|eps| sqrt(n) (T - t)` off-lattice.
    pub scaled: f64,
    /// `8 A T/(n (T-t)) e^{b|x| + b^2 sigma^2 T}` off-lattice.
    pub adj_bound: Option<f64>,
}

/// Interleaved on- and off-lattice times `t_k` and `(t_k + t_{k+1})/2` for `k < n/2 - 1`,
/// followed by the last node `t_{n/2-1}`.
pub fn default_blowup_times(lp: &LatticeParams) -> Vec<f64> {
    let last = lp.n / 2 - 1;
    let mut ts = Vec::with_capacity(2 * last + 1);
    for k in 0..last {
        ts.push(lp.t_node(k));
        ts.push(0.5 * (lp.t_node(k) + lp.t_node(k + 1)));
    }
    ts.push(lp.t_node(last));
    ts
}

pub fn blowup_profile(
    g: &TerminalCondition,
    lp: &LatticeParams,
    ts: &[f64],
    x: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<BlowupRow>> {
    let (a, b) = growth_envelope(g)?;
    let big_t = lp.horizon;
    let n = lp.n as f64;
    ts.iter()
        .map(|&t| {
            let ti = theta_of(t, lp)?;
            let on_lattice = t == ti.t_k;
            let total = total_error(g, t, x, lp, quad)?;
            let adj =
                if on_lattice { 0.0 } else { smoothed(g, ti.theta_n, x, lp.sigma, quad)? - u_exact(g, t, x, &lp.heat(), quad)? };
            let scaled =
                if on_lattice { total.abs() * (n * (big_t - ti.t_k)).sqrt() } else { total.abs() * n.sqrt() * (big_t - t) };
            let adj_bound = (!on_lattice)
                .then(|| 8.0 * a * big_t / (n * (big_t - t)) * (b * x.abs() + b * b * lp.sigma * lp.sigma * big_t).exp());
            Ok(BlowupRow { t, t_k: ti.t_k, on_lattice, total, adj, scaled, adj_bound })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderProbeRow {
    pub n: usize,
    /// `sup_t |eps_n(t, x)| n^{alpha/4}` over the probe times.
    pub sup_scaled: f64,
    pub argmax_t: f64,
}

/// Uniform-in-time probe: for each `n`, the times are every lattice node plus the midpoints,
/// reaching up to the last node before `T`.
pub fn holder_uniform_probe(
    g: &TerminalCondition,
    alpha: f64,
    ns: &[usize],
    x: f64,
    horizon: f64,
    sigma: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<HolderProbeRow>> {
    ns.iter()
        .map(|&n| {
            let lp = LatticeParams::new(n, horizon, sigma)?;
            let mut best = HolderProbeRow { n, sup_scaled: 0.0, argmax_t: 0.0 };
            let scale = (n as f64).powf(alpha / 4.0);
            for t in default_blowup_times(&lp) {
                let e = total_error(g, t, x, &lp, quad)?.abs() * scale;
                if e > best.sup_scaled {
                    best = HolderProbeRow { n, sup_scaled: e, argmax_t: t };
                }
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub max: f64,
    pub median: f64,
    /// `max / median`.
    pub ratio: f64,
    /// Largest value over the later half of the sweep.
    pub late_max: f64,
    /// `late_max <= 2 median`. One-sided: large early values (faster decay) do not fail.
    pub bounded: bool,
}

/// Boundedness check for a scaled statistic over a sweep ordered by increasing `n`.
pub fn stability(values: &[f64]) -> Stability {
    let abs: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    let late_max = abs[abs.len() / 2..].iter().copied().fold(f64::NAN, f64::max);
    let mut v = abs;
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    };
    let max = v.last().copied().unwrap_or(f64::NAN);
    Stability { max, median, ratio: max / median, late_max, bounded: late_max <= 2.0 * median }
}
