//! Ground truth `u(t,x) = E[g(x + sigma W_{T-t})]` and its time derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_with_breaks;
pub use crate::quadrature::QuadratureSpec;
use crate::special::{heat_kernel, normal_cdf, normal_pdf};
use crate::terminal::{poly_eval, GbvFunction, MeasureComponent, TerminalCondition};

/// Gaussian half-width (in standard deviations) beyond which density-piece integrands of the
/// Fubini representation are dropped.
const FUBINI_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatParams {
    /// Horizon `T`.
    pub horizon: f64,
    pub sigma: f64,
}

impl HeatParams {
    pub fn new(horizon: f64, sigma: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("need T > 0 and sigma > 0, got T={horizon}, sigma={sigma}")));
        }
        Ok(Self { horizon, sigma })
    }

    pub fn unit() -> Self {
        Self { horizon: 1.0, sigma: 1.0 }
    }
}

/// Density of `sigma W_theta` at `y`.
pub fn gaussian_density(y: f64, theta: f64, sigma: f64) -> f64 {
    heat_kernel(sigma * sigma * theta, 0.0, y)
}

/// Truncation half-width in standard deviations for a function of growth exponent `b`.
pub fn truncation_width(b: f64, sd: f64) -> f64 {
    10.0f64.max(b * sd + 10.0)
}

/// `E[f(x + sd Z)]` by adaptive quadrature on `|Z| <= truncation_width(b, sd)`, with the
/// interior of the domain split at `breaks` (given in the `x` coordinate).
pub fn gaussian_expectation<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    sd: f64,
    b: f64,
    breaks: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let zmax = truncation_width(b, sd);
    let mut zb: Vec<f64> = breaks.iter().map(|p| (p - x) / sd).collect();
    zb.push(0.0);
    let mut integrand = |z: f64| f(x + sd * z) * normal_pdf(z);
    Ok(integrate_with_breaks(&mut integrand, -zmax, zmax, &zb, quad)?.value)
}

fn check_time(t: f64, params: &HeatParams, closed: bool) -> Result<()> {
    let ok = t >= 0.0 && if closed { t <= params.horizon } else { t < params.horizon };
    if ok {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange { t, horizon: params.horizon, closing: if closed { ']' } else { ')' } })
    }
}

/// `u(t,x)`. Returns `g(x)` at `t = T`.
pub fn u_exact(g: &TerminalCondition, t: f64, x: f64, params: &HeatParams, quad: &QuadratureSpec) -> Result<f64> {
    check_time(t, params, true)?;
    smoothed(g, params.horizon - t, x, params.sigma, quad)
}

/// `E[g(x + sigma W_theta)]` for a time-to-horizon `theta >= 0`.
pub fn smoothed(g: &TerminalCondition, theta: f64, x: f64, sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    if theta == 0.0 {
        return Ok(g.evaluate(x));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be >= 0, got {theta}")));
    }
    match g {
        TerminalCondition::Gbv(f) => gbv_fubini(f, theta, x, sigma, quad),
        _ => smoothed_by_quadrature(g, theta, x, sigma, quad),
    }
}

/// Direct quadrature of `int g(x+y) p_theta(y) dy`, valid for every family.
pub fn smoothed_by_quadrature(g: &TerminalCondition, theta: f64, x: f64, sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    let sd = sigma * theta.sqrt();
    gaussian_expectation(|y| g.evaluate(y), x, sd, g.growth_exponent(), &g.breakpoints(), quad)
}

/// Fubini form over the GBV representation:
/// `c + int_{[0,inf)} P(x + X > y) dmu(y) - int_{(-inf,0)} P(x + X <= y) dmu(y)`.
/// Jump atoms carry no mass under the Gaussian law.
pub fn gbv_fubini(g: &GbvFunction, theta: f64, x: f64, sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    let sd = sigma * theta.sqrt();
    let mut total = g.c;
    for m in &g.mu {
        match m {
            MeasureComponent::PointMass { mass, at } => {
                if *at >= 0.0 {
                    total += mass * normal_cdf((x - at) / sd);
                } else {
                    total -= mass * normal_cdf((at - x) / sd);
                }
            }
            MeasureComponent::DensityPiece { coeffs, a, b } => {
                let reach = FUBINI_CUTOFF * sd;
                // Right part: integrand decays once y exceeds x by many sd.
                let lo = a.max(0.0);
                let hi = b.min(lo.max(x) + reach);
                if hi > lo {
                    let mut f = |y: f64| poly_eval(coeffs, y) * normal_cdf((x - y) / sd);
                    total += integrate_with_breaks(&mut f, lo, hi, &[x], quad)?.value;
                }
                // Left part: integrand decays once y falls below x by many sd.
                let hi = b.min(0.0);
                let lo = a.max(hi.min(x) - reach);
                if hi > lo {
                    let mut f = |y: f64| poly_eval(coeffs, y) * normal_cdf((y - x) / sd);
                    total -= integrate_with_breaks(&mut f, lo, hi, &[x], quad)?.value;
                }
            }
        }
    }
    Ok(total)
}

/// `du/dt(t,x) = int g(x+y) p_{T-t}(y) (1 - y^2/(sigma^2 (T-t))) / (2(T-t)) dy`.
pub fn dudt(g: &TerminalCondition, t: f64, x: f64, params: &HeatParams, quad: &QuadratureSpec) -> Result<f64> {
    check_time(t, params, false)?;
    let theta = params.horizon - t;
    let sd = params.sigma * theta.sqrt();
    let b = g.growth_exponent();
    let zmax = truncation_width(b, sd);
    let mut zb: Vec<f64> = g.breakpoints().iter().map(|p| (p - x) / sd).collect();
    zb.extend([0.0, -1.0, 1.0]);
    let mut integrand = |z: f64| g.evaluate(x + sd * z) * normal_pdf(z) * (1.0 - z * z);
    let v = integrate_with_breaks(&mut integrand, -zmax, zmax, &zb, quad)?.value;
    Ok(v / (2.0 * theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminal::catalog;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn density_examples() {
        assert!((gaussian_density(0.0, 1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian_density(1.0, 1.0, 1.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert_eq!(gaussian_density(0.7, 2.0, 0.3), gaussian_density(-0.7, 2.0, 0.3));
    }

    #[test]
    fn indicator_closed_forms() {
        let g = catalog("indicator").unwrap();
        let p = HeatParams::unit();
        assert_eq!(u_exact(&g, 0.3, 0.0, &p, &q()).unwrap(), 0.5);
        let v = u_exact(&g, 0.0, 1.0, &p, &q()).unwrap();
        assert!((v - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert_eq!(u_exact(&g, 1.0, 0.0, &p, &q()).unwrap(), 1.0);
    }

    #[test]
    fn square_second_moment() {
        let g = catalog("square").unwrap();
        let p = HeatParams::new(2.0, 0.7).unwrap();
        for &(t, x) in &[(0.0, 0.0), (0.5, 1.3), (1.9, -2.0)] {
            let want = x * x + 0.49 * (2.0 - t);
            let fub = u_exact(&g, t, x, &p, &q()).unwrap();
            let direct = smoothed_by_quadrature(&g, 2.0 - t, x, 0.7, &q()).unwrap();
            assert!((fub - want).abs() < 1e-9, "fubini {fub} vs {want}");
            assert!((direct - want).abs() < 1e-9, "direct {direct} vs {want}");
        }
    }

    #[test]
    fn dudt_examples() {
        let p = HeatParams::new(1.0, 1.3).unwrap();
        let c = catalog("constant").unwrap();
        assert!(dudt(&c, 0.2, 0.4, &p, &q()).unwrap().abs() < 1e-10);
        let sq = catalog("square").unwrap();
        assert!((dudt(&sq, 0.2, 0.4, &p, &q()).unwrap() + 1.69).abs() < 1e-9);
        let s = catalog("sin").unwrap();
        let eps = 1e-4;
        let fd = (u_exact(&s, 0.5 + eps, 0.3, &p, &q()).unwrap() - u_exact(&s, 0.5 - eps, 0.3, &p, &q()).unwrap()) / (2.0 * eps);
        assert!((dudt(&s, 0.5, 0.3, &p, &q()).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn rejects_time_outside_domain() {
        let g = catalog("indicator").unwrap();
        let p = HeatParams::unit();
        assert!(u_exact(&g, 1.5, 0.0, &p, &q()).is_err());
        assert!(dudt(&g, 1.0, 0.0, &p, &q()).is_err());
    }
}
