//! Law of the first exit time of standard Brownian motion from (-1, 1).
//!
//! Two convergent series describe the law: an image (erfc) series accurate for
//! small times and an eigenfunction series accurate for large times. Sampling
//! inverts a cubic Hermite table of the CDF built from both.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::RngCore;

use super::rng::next_open_unit;
use crate::special::erfc;

/// Time at which the evaluators switch from the image series to the eigen series.
const SERIES_SWITCH: f64 = 1.0;
const TABLE_KNOTS: usize = 100_000;
const TABLE_T_MIN: f64 = 0.02;
const TABLE_T_MAX: f64 = 6.0;
const GUIDE_BUCKETS: usize = 1 << 16;

/// `P(tau <= t) = 2 sum_k (-1)^k erfc((2k+1)/sqrt(2t))`.
fn cdf_small(t: f64) -> f64 {
    let s = 1.0 / (2.0 * t).sqrt();
    let mut acc = 0.0;
    for k in 0..40 {
        let term = erfc((2 * k + 1) as f64 * s);
        acc += if k % 2 == 0 { term } else { -term };
        if term < 1e-20 {
            break;
        }
    }
    2.0 * acc
}

/// `P(tau > t) = (4/pi) sum_k (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 t/8)`.
fn survival_large(t: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..40 {
        let j = (2 * k + 1) as f64;
        let term = (-j * j * PI * PI * t / 8.0).exp() / j;
        acc += if k % 2 == 0 { term } else { -term };
        if term < 1e-20 {
            break;
        }
    }
    4.0 / PI * acc
}

pub fn cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= SERIES_SWITCH {
        cdf_small(t)
    } else {
        1.0 - survival_large(t)
    }
}

pub fn survival(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t <= SERIES_SWITCH {
        1.0 - cdf_small(t)
    } else {
        survival_large(t)
    }
}

pub fn pdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    if t <= SERIES_SWITCH {
        let c = 2.0 / (2.0 * PI * t * t * t).sqrt();
        for k in 0..40 {
            let j = (2 * k + 1) as f64;
            let term = c * j * (-j * j / (2.0 * t)).exp();
            acc += if k % 2 == 0 { term } else { -term };
            if term < 1e-25 {
                break;
            }
        }
    } else {
        for k in 0..40 {
            let j = (2 * k + 1) as f64;
            let term = PI / 2.0 * j * (-j * j * PI * PI * t / 8.0).exp();
            acc += if k % 2 == 0 { term } else { -term };
            if term < 1e-25 {
                break;
            }
        }
    }
    acc
}

/// `E[exp(lambda tau)]`: `1/cosh(sqrt(2|lambda|))` for `lambda <= 0`, `1/cos(sqrt(2 lambda))`
/// for `0 < lambda < pi^2/8`, infinite beyond.
pub fn mgf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        1.0 / (2.0 * -lambda).sqrt().cosh()
    } else if lambda < PI * PI / 8.0 {
        1.0 / (2.0 * lambda).sqrt().cos()
    } else {
        f64::INFINITY
    }
}

/// Exit time from (-1, 1) on the time scale where the mean is 1 (`C_1 = 1`, `C_2 = 5/3`).
pub const MEAN: f64 = 1.0;
pub const SECOND_MOMENT: f64 = 5.0 / 3.0;

struct Interval {
    f0: f64,
    df: f64,
    t0: f64,
    t1: f64,
    /// Left and right slopes `dt/dF`, pre-multiplied by `df`.
    m0: f64,
    m1: f64,
}

/// Inverse-CDF table over `[TABLE_T_MIN, TABLE_T_MAX]` with analytic tails.
pub struct TauTable {
    intervals: Vec<Interval>,
    guide: Vec<u32>,
    f_min: f64,
    f_max: f64,
}

impl TauTable {
    fn build() -> Self {
        let step = (TABLE_T_MAX / TABLE_T_MIN).ln() / (TABLE_KNOTS - 1) as f64;
        let ts: Vec<f64> = (0..TABLE_KNOTS).map(|i| (TABLE_T_MIN.ln() + i as f64 * step).exp()).collect();
        let fs: Vec<f64> = ts.iter().map(|&t| cdf(t)).collect();
        let slopes: Vec<f64> = ts.iter().map(|&t| 1.0 / pdf(t)).collect();
        let mut intervals = Vec::with_capacity(TABLE_KNOTS - 1);
        for i in 0..TABLE_KNOTS - 1 {
            let df = fs[i + 1] - fs[i];
            debug_assert!(df > 0.0, "cdf must increase on the table");
            let secant = (ts[i + 1] - ts[i]) / df;
            let (mut a, mut b) = (slopes[i] / secant, slopes[i + 1] / secant);
            // Fritsch-Carlson: keep the cubic monotone.
            let r = a * a + b * b;
            if r > 9.0 {
                let s = 3.0 / r.sqrt();
                a *= s;
                b *= s;
            }
            intervals.push(Interval { f0: fs[i], df, t0: ts[i], t1: ts[i + 1], m0: a * secant * df, m1: b * secant * df });
        }
        let f_min = fs[0];
        let f_max = fs[TABLE_KNOTS - 1];
        let width = (f_max - f_min) / GUIDE_BUCKETS as f64;
        let mut guide = Vec::with_capacity(GUIDE_BUCKETS);
        let mut i = 0usize;
        for bkt in 0..GUIDE_BUCKETS {
            let edge = f_min + bkt as f64 * width;
            while i + 1 < intervals.len() && intervals[i + 1].f0 <= edge {
                i += 1;
            }
            guide.push(i as u32);
        }
        TauTable { intervals, guide, f_min, f_max }
    }

    /// Quantile function at `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        if u < self.f_min {
            return lower_tail_quantile(u);
        }
        if u >= self.f_max {
            // Only the leading eigen term survives beyond TABLE_T_MAX (next term below 1e-25).
            return -8.0 / (PI * PI) * ((1.0 - u) * PI / 4.0).ln();
        }
        let bkt = (((u - self.f_min) / (self.f_max - self.f_min)) * GUIDE_BUCKETS as f64) as usize;
        let mut i = self.guide[bkt.min(GUIDE_BUCKETS - 1)] as usize;
        while i + 1 < self.intervals.len() && self.intervals[i + 1].f0 <= u {
            i += 1;
        }
        let iv = &self.intervals[i];
        let s = (u - iv.f0) / iv.df;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * iv.t0 + h10 * iv.m0 + h01 * iv.t1 + h11 * iv.m1
    }
}

/// Below the table only the leading image term matters: solve `2 erfc(1/sqrt(2t)) = u` by bisection in log t.
fn lower_tail_quantile(u: f64) -> f64 {
    let (mut lo, mut hi) = (1e-4f64.ln(), TABLE_T_MIN.ln());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * erfc(1.0 / (2.0 * mid.exp()).sqrt()) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

pub fn table() -> &'static TauTable {
    static TABLE: OnceLock<TauTable> = OnceLock::new();
    TABLE.get_or_init(TauTable::build)
}

/// One draw of the exit time from (-1,1) for unit volatility.
/// The physical time for step `h` and volatility `sigma` is this draw times `(h/sigma)^2`.
#[inline]
pub fn sample_tau_unit<R: RngCore>(rng: &mut R) -> f64 {
    table().quantile(next_open_unit(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_agree_at_switch_region() {
        for &t in &[0.3, 0.7, 1.0, 1.5, 2.5] {
            assert!((cdf_small(t) - (1.0 - survival_large(t))).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn reference_values() {
        // 30-digit evaluations of the image series.
        assert!((cdf(0.5) - 0.314_554_233_109_648_01).abs() < 1e-15);
        assert!((cdf(2.0) - 0.892_022_955_555_890_99).abs() < 1e-15);
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for &t in &[0.05, 0.4, 1.0, 1.0001, 3.0] {
            let e = 1e-6 * t;
            let fd = (cdf(t + e) - cdf(t - e)) / (2.0 * e);
            assert!((fd - pdf(t)).abs() < 1e-7 * pdf(t).max(1e-3), "t={t}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let tab = table();
        for i in 1..2000 {
            let u = i as f64 / 2000.0;
            let t = tab.quantile(u);
            assert!((cdf(t) - u).abs() < 1e-12, "u={u} t={t}");
        }
        for &u in &[1e-13, 1e-15] {
            let t = tab.quantile(u);
            assert!(((cdf(t) - u) / u).abs() < 1e-6, "u={u}");
        }
        for &s in &[1e-6, 1e-12] {
            let t = tab.quantile(1.0 - s);
            assert!(((survival(t) - s) / s).abs() < 1e-4, "s={s}");
        }
    }

    #[test]
    fn quantile_is_monotone() {
        let tab = table();
        let mut prev = 0.0;
        for i in 1..100_000 {
            let t = tab.quantile(i as f64 / 100_000.0);
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn mgf_branches() {
        assert!((mgf(-1.0) - 0.459_098_131_085_425_5).abs() < 1e-12);
        assert_eq!(mgf(0.0), 1.0);
        assert!(mgf(2.0).is_infinite());
    }
}
