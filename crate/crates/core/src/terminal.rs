//! Terminal conditions `g` for the backward heat equation.
//!
//! Three families are supported:
//!
//! * [`GbvFunction`]: `g(x) = c + mu([0,x)) - mu([x,0)) + sum_i alpha_i 1{x = x_i}` where `mu`
//!   is a finite signed combination of point masses and piecewise-polynomial densities.
//! * [`HolderFunction`]: catalog functions that are locally alpha-Hölder with a constant
//!   growing at most like `A e^{beta R}` on `[-R, R]`.
//! * [`EbFunction`]: catalog functions bounded by `A e^{b|x|}`.
//!
//! Indicators follow the half-open convention `1_{[a,inf)}(a) = 1`. A point mass at `a`
//! alone yields `1_{(a,inf)}` because `mu([0,x))` excludes `x`; the value at `a` itself
//! is supplied by a jump atom.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_to_infinity, integrate_with_breaks, QuadratureSpec};

/// Relative tolerance used when deciding lattice membership.
pub const LATTICE_REL_TOL: f64 = 1e-12;

/// Single-point modification `alpha * 1{x = at}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub alpha: f64,
    pub at: f64,
}

/// One piece of the signed measure `mu`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureComponent {
    PointMass {
        mass: f64,
        at: f64,
    },
    /// Density `sum_k coeffs[k] y^k` on `[a, b)`; either end may be infinite.
    DensityPiece {
        coeffs: Vec<f64>,
        a: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbvFunction {
    pub c: f64,
    pub mu: Vec<MeasureComponent>,
    pub jumps: Vec<JumpAtom>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "catalog", rename_all = "snake_case")]
pub enum HolderKind {
    /// `|x - center|^exponent`
    AbsPower { center: f64, exponent: f64 },
    /// `sin(frequency * x)`
    Sin { frequency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFunction {
    pub alpha: f64,
    pub a_const: f64,
    pub beta: f64,
    pub kind: HolderKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "catalog", rename_all = "snake_case")]
pub enum EbKind {
    /// `sum_k coeffs[k] x^k`
    Polynomial { coeffs: Vec<f64> },
    /// `exp(rate * x)`
    Exp { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbFunction {
    pub kind: EbKind,
    pub a_const: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminalCondition {
    Gbv(GbvFunction),
    Holder(HolderFunction),
    Eb(EbFunction),
}

pub(crate) fn poly_eval(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
}

/// Exact integral of the polynomial over the finite interval [lo, hi].
pub(crate) fn poly_integral(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let anti = |y: f64| coeffs.iter().enumerate().rev().fold(0.0, |acc, (k, &c)| acc * y + c / (k as f64 + 1.0)) * y;
    anti(hi) - anti(lo)
}

/// Coefficients of `y -> p(y + s)`.
fn poly_shift(coeffs: &[f64], s: f64) -> Vec<f64> {
    let n = coeffs.len();
    let mut out = vec![0.0; n];
    for (k, &c) in coeffs.iter().enumerate() {
        // (y + s)^k = sum_j C(k, j) s^{k-j} y^j
        let mut binom = 1.0;
        for j in (0..=k).rev() {
            out[j] += c * binom * s.powi((k - j) as i32);
            // C(k, j-1) = C(k, j) * j / (k - j + 1)
            binom *= j as f64 / (k - j + 1) as f64;
        }
    }
    out
}

impl MeasureComponent {
    /// Signed mass `mu([0,x)) - mu([x,0))` contributed by this component.
    pub fn signed_mass_to(&self, x: f64) -> f64 {
        match self {
            MeasureComponent::PointMass { mass, at } => {
                if x > 0.0 && *at >= 0.0 && *at < x {
                    *mass
                } else if x < 0.0 && *at >= x && *at < 0.0 {
                    -*mass
                } else {
                    0.0
                }
            }
            MeasureComponent::DensityPiece { coeffs, a, b } => {
                let (lo, hi, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
                let l = lo.max(*a);
                let u = hi.min(*b);
                if u > l {
                    sign * poly_integral(coeffs, l, u)
                } else {
                    0.0
                }
            }
        }
    }

    fn shifted(&self, x0: f64) -> MeasureComponent {
        match self {
            MeasureComponent::PointMass { mass, at } => MeasureComponent::PointMass { mass: *mass, at: at - x0 },
            MeasureComponent::DensityPiece { coeffs, a, b } => {
                MeasureComponent::DensityPiece { coeffs: poly_shift(coeffs, x0), a: a - x0, b: b - x0 }
            }
        }
    }

    /// `int e^{-beta|y|} d|component|(y)`.
    fn weighted_variation(&self, beta: f64, quad: &QuadratureSpec) -> Result<f64> {
        match self {
            MeasureComponent::PointMass { mass, at } => Ok(mass.abs() * (-beta * at.abs()).exp()),
            MeasureComponent::DensityPiece { coeffs, a, b } => {
                if coeffs.iter().all(|&c| c == 0.0) {
                    return Ok(0.0);
                }
                let infinite = a.is_infinite() || b.is_infinite();
                if infinite && beta <= 0.0 {
                    return Err(Error::Divergent { beta });
                }
                let f = |y: f64| poly_eval(coeffs, y).abs() * (-beta * y.abs()).exp();
                let mut total = 0.0;
                // Finite core, then the infinite tails (if any) from its ends.
                let lo = if a.is_finite() { *a } else { b.min(0.0) - 1.0 };
                let hi = if b.is_finite() { *b } else { a.max(0.0) + 1.0 };
                let mut g = f;
                total += integrate_with_breaks(&mut g, lo, hi, &[0.0], quad)?.value;
                if b.is_infinite() {
                    total += integrate_to_infinity(f, hi, quad).map_err(|_| Error::Divergent { beta })?.value;
                }
                if a.is_infinite() {
                    total += integrate_to_infinity(|y| f(-y), -lo, quad).map_err(|_| Error::Divergent { beta })?.value;
                }
                Ok(total)
            }
        }
    }
}

impl GbvFunction {
    pub fn new(c: f64, mu: Vec<MeasureComponent>, jumps: Vec<JumpAtom>, beta: f64) -> Result<Self> {
        let g = GbvFunction { c, mu, jumps, beta };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameter("c must be finite".into()));
        }
        for m in &self.mu {
            match m {
                MeasureComponent::PointMass { mass, at } => {
                    if !(mass.is_finite() && at.is_finite()) {
                        return Err(Error::InvalidParameter("point mass must be finite".into()));
                    }
                }
                MeasureComponent::DensityPiece { coeffs, a, b } => {
                    if !(a < b) || a.is_nan() || b.is_nan() {
                        return Err(Error::InvalidParameter(format!("degenerate density support [{a}, {b})")));
                    }
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        return Err(Error::InvalidParameter("density coefficients must be finite".into()));
                    }
                }
            }
        }
        for (i, j) in self.jumps.iter().enumerate() {
            if !(j.alpha.is_finite() && j.at.is_finite()) {
                return Err(Error::InvalidParameter("jump atom must be finite".into()));
            }
            if self.jumps[..i].iter().any(|k| k.at == j.at) {
                return Err(Error::InvalidParameter(format!("duplicate jump location {}", j.at)));
            }
        }
        Ok(())
    }

    /// `c + mu([0,x)) - mu([x,0))`, the part of `g` without jump atoms.
    pub fn continuous_part(&self, x: f64) -> f64 {
        self.c + self.mu.iter().map(|m| m.signed_mass_to(x)).sum::<f64>()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let jumps: f64 = self.jumps.iter().filter(|j| j.at == x).map(|j| j.alpha).sum();
        self.continuous_part(x) + jumps
    }

    /// Locations where `g` may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for m in &self.mu {
            match m {
                MeasureComponent::PointMass { at, .. } => v.push(*at),
                MeasureComponent::DensityPiece { a, b, .. } => {
                    v.extend([*a, *b].into_iter().filter(|e| e.is_finite()));
                }
            }
        }
        v.extend(self.jumps.iter().map(|j| j.at));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `int e^{-beta|y|} d|mu|(y) + sum_i |alpha_i| e^{-beta|x_i|}`.
pub fn gbv_tail_norm(g: &GbvFunction, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let quad = QuadratureSpec { abs_tol: 1e-10, rel_tol: 0.0, max_subdivisions: 4000 };
    let mut total = 0.0;
    for m in &g.mu {
        total += m.weighted_variation(beta, &quad)?;
    }
    total += g.jumps.iter().map(|j| j.alpha.abs() * (-beta * j.at.abs()).exp()).sum::<f64>();
    Ok(total)
}

/// Representation of `x -> g(x0 + x)`.
pub fn shift(g: &GbvFunction, x0: f64) -> GbvFunction {
    GbvFunction {
        c: g.continuous_part(x0),
        mu: g.mu.iter().map(|m| m.shifted(x0)).collect(),
        jumps: g.jumps.iter().map(|j| JumpAtom { alpha: j.alpha, at: j.at - x0 }).collect(),
        beta: g.beta,
    }
}

/// True when `d` is an integer multiple of `step` up to [`LATTICE_REL_TOL`].
pub fn is_multiple_of(d: f64, step: f64) -> bool {
    let r = d / step;
    (r - r.round()).abs() <= LATTICE_REL_TOL * r.abs().max(1.0)
}

/// Indices `i` with `x_i - x0` on the even lattice `2hZ`.
pub fn even_lattice_jumps(g: &GbvFunction, x0: f64, h: f64) -> Vec<usize> {
    g.jumps.iter().enumerate().filter(|(_, j)| is_multiple_of(j.at - x0, 2.0 * h)).map(|(i, _)| i).collect()
}

impl HolderFunction {
    pub fn evaluate(&self, x: f64) -> f64 {
        match self.kind {
            HolderKind::AbsPower { center, exponent } => (x - center).abs().powf(exponent),
            HolderKind::Sin { frequency } => (frequency * x).sin(),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            HolderKind::AbsPower { center, .. } => vec![center],
            HolderKind::Sin { .. } => vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if !(self.a_const >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidParameter("A and beta must be >= 0".into()));
        }
        Ok(())
    }
}

impl EbFunction {
    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.kind {
            EbKind::Polynomial { coeffs } => poly_eval(coeffs, x),
            EbKind::Exp { rate } => (rate * x).exp(),
        }
    }
}

impl TerminalCondition {
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            TerminalCondition::Gbv(g) => g.evaluate(x),
            TerminalCondition::Holder(g) => g.evaluate(x),
            TerminalCondition::Eb(g) => g.evaluate(x),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TerminalCondition::Gbv(g) => g.breakpoints(),
            TerminalCondition::Holder(g) => g.breakpoints(),
            TerminalCondition::Eb(_) => vec![],
        }
    }

    /// Exponent `b` of the growth envelope.
    pub fn growth_exponent(&self) -> f64 {
        match self {
            TerminalCondition::Gbv(g) => g.beta,
            TerminalCondition::Holder(g) => g.beta + 1.0,
            TerminalCondition::Eb(g) => g.b,
        }
    }

    pub fn as_gbv(&self) -> Option<&GbvFunction> {
        match self {
            TerminalCondition::Gbv(g) => Some(g),
            _ => None,
        }
    }
}

/// Certified `(A, b)` with `|g(x)| <= A e^{b|x|}` for all `x`.
///
/// For Hölder functions `|g(x)| <= A|x|^alpha e^{beta|x|} + |g(0)|` and
/// `|x|^alpha <= (alpha/e)^alpha e^{|x|}`.
pub fn growth_envelope(g: &TerminalCondition) -> Result<(f64, f64)> {
    match g {
        TerminalCondition::Gbv(f) => Ok((f.c.abs() + gbv_tail_norm(f, f.beta)?, f.beta)),
        TerminalCondition::Holder(f) => {
            let a = f.a_const * (f.alpha / std::f64::consts::E).powf(f.alpha) + f.evaluate(0.0).abs();
            Ok((a, f.beta + 1.0))
        }
        TerminalCondition::Eb(f) => Ok((f.a_const, f.b)),
    }
}

/// Built-in catalog names accepted by [`catalog`].
pub const CATALOG: &[&str] =
    &["indicator", "sign", "square", "sawtooth", "sqrt_abs", "sqrt_abs_shifted", "sin", "square_eb", "linear", "constant"];

/// Location of the singularity of `sqrt_abs_shifted`; sits strictly between lattice nodes for
/// `h = 2^{-k}` with `k >= 2`.
pub const SHIFTED_SINGULARITY: f64 = 1.0 / 24.0;

pub fn catalog(name: &str) -> Option<TerminalCondition> {
    use MeasureComponent::*;
    let gbv = |c, mu, jumps, beta| TerminalCondition::Gbv(GbvFunction { c, mu, jumps, beta });
    let g = match name {
        "indicator" => gbv(0.0, vec![PointMass { mass: 1.0, at: 0.0 }], vec![JumpAtom { alpha: 1.0, at: 0.0 }], 0.0),
        "sign" => gbv(-1.0, vec![PointMass { mass: 2.0, at: 0.0 }], vec![JumpAtom { alpha: 2.0, at: 0.0 }], 0.0),
        "square" => gbv(0.0, vec![DensityPiece { coeffs: vec![0.0, 2.0], a: f64::NEG_INFINITY, b: f64::INFINITY }], vec![], 1.0),
        "sawtooth" => {
            let mut mu = vec![DensityPiece { coeffs: vec![1.0], a: -3.0, b: 3.0 }];
            mu.extend((-3..3).map(|k| PointMass { mass: -1.0, at: f64::from(k) }));
            gbv(0.0, mu, vec![], 0.0)
        }
        "linear" => gbv(0.0, vec![DensityPiece { coeffs: vec![1.0], a: f64::NEG_INFINITY, b: f64::INFINITY }], vec![], 1.0),
        "constant" => gbv(1.0, vec![], vec![], 0.0),
        "sqrt_abs" => TerminalCondition::Holder(HolderFunction {
            alpha: 0.5,
            a_const: 1.0,
            beta: 0.0,
            kind: HolderKind::AbsPower { center: 0.0, exponent: 0.5 },
        }),
        "sqrt_abs_shifted" => TerminalCondition::Holder(HolderFunction {
            alpha: 0.5,
            a_const: 1.0,
            beta: 0.0,
            kind: HolderKind::AbsPower { center: SHIFTED_SINGULARITY, exponent: 0.5 },
        }),
        "sin" => TerminalCondition::Holder(HolderFunction {
            alpha: 1.0,
            a_const: 1.0,
            beta: 0.0,
            kind: HolderKind::Sin { frequency: 1.0 },
        }),
        // x^2 <= 4 e^{-2} e^{|x|}, tight at |x| = 2.
        "square_eb" => TerminalCondition::Eb(EbFunction {
            kind: EbKind::Polynomial { coeffs: vec![0.0, 0.0, 1.0] },
            a_const: 4.0 * (-2.0f64).exp(),
            b: 1.0,
        }),
        _ => return None,
    };
    Some(g)
}

/// Declarative description of a terminal condition (TOML or JSON).
///
/// ```toml
/// family = "gbv"            # gbv | holder | eb
/// c = 0.0
/// beta = 0.0
/// components = [
///   { kind = "point_mass", mass = 1.0, at = 0.0 },
///   { kind = "density", coeffs = [0.0, 2.0], a = -1.0 },   # missing b means +inf
/// ]
/// jumps = [{ alpha = 1.0, at = 0.0 }]
/// ```
///
/// Hölder entries use `catalog = "abs_power"` with `params = [center, exponent]` or
/// `catalog = "sin"` with `params = [frequency]`, plus `alpha`, `A`, `beta`. EB entries use
/// `catalog = "polynomial"` (`params` are coefficients, lowest degree first) or
/// `catalog = "exp"` (`params = [rate]`), plus `A` and `b`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalConfig {
    pub family: String,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub jumps: Vec<JumpAtom>,
    pub alpha: Option<f64>,
    #[serde(rename = "A")]
    pub a_const: Option<f64>,
    pub beta: Option<f64>,
    pub b: Option<f64>,
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentConfig {
    PointMass { mass: f64, at: f64 },
    Density { coeffs: Vec<f64>, a: Option<f64>, b: Option<f64> },
}

impl TerminalConfig {
    pub fn build(&self) -> Result<TerminalCondition> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("missing key `{key}`")));
        let params = |n: usize, id: &str| -> Result<&[f64]> {
            if self.params.len() == n {
                Ok(&self.params)
            } else {
                Err(Error::Config(format!("catalog `{id}` takes {n} params, got {}", self.params.len())))
            }
        };
        match self.family.as_str() {
            "gbv" => {
                let mu = self
                    .components
                    .iter()
                    .map(|c| match c {
                        ComponentConfig::PointMass { mass, at } => MeasureComponent::PointMass { mass: *mass, at: *at },
                        ComponentConfig::Density { coeffs, a, b } => MeasureComponent::DensityPiece {
                            coeffs: coeffs.clone(),
                            a: a.unwrap_or(f64::NEG_INFINITY),
                            b: b.unwrap_or(f64::INFINITY),
                        },
                    })
                    .collect();
                let g = GbvFunction::new(self.c, mu, self.jumps.clone(), self.beta.unwrap_or(0.0))?;
                gbv_tail_norm(&g, g.beta)?;
                Ok(TerminalCondition::Gbv(g))
            }
            "holder" => {
                let id = self.catalog.as_deref().unwrap_or("");
                let kind = match id {
                    "abs_power" => {
                        let p = params(2, id)?;
                        HolderKind::AbsPower { center: p[0], exponent: p[1] }
                    }
                    "sin" => HolderKind::Sin { frequency: params(1, id)?[0] },
                    other => return Err(Error::Config(format!("unknown holder catalog `{other}`"))),
                };
                let g = HolderFunction {
                    alpha: need(self.alpha, "alpha")?,
                    a_const: need(self.a_const, "A")?,
                    beta: self.beta.unwrap_or(0.0),
                    kind,
                };
                g.validate()?;
                Ok(TerminalCondition::Holder(g))
            }
            "eb" => {
                let id = self.catalog.as_deref().unwrap_or("");
                let kind = match id {
                    "polynomial" => EbKind::Polynomial { coeffs: self.params.clone() },
                    "exp" => EbKind::Exp { rate: params(1, id)?[0] },
                    other => return Err(Error::Config(format!("unknown eb catalog `{other}`"))),
                };
                let a_const = need(self.a_const, "A")?;
                let b = need(self.b, "b")?;
                if !(a_const >= 0.0 && b >= 0.0) {
                    return Err(Error::Config("A and b must be >= 0".into()));
                }
                Ok(TerminalCondition::Eb(EbFunction { kind, a_const, b }))
            }
            other => Err(Error::Config(format!("unknown family `{other}`"))),
        }
    }
}

pub fn from_toml_str(s: &str) -> Result<TerminalCondition> {
    toml::from_str::<TerminalConfig>(s).map_err(|e| Error::Config(e.to_string()))?.build()
}

pub fn from_json_str(s: &str) -> Result<TerminalCondition> {
    serde_json::from_str::<TerminalConfig>(s).map_err(|e| Error::Config(e.to_string()))?.build()
}

/// Loads a config file, choosing the format from the extension (`.json`, otherwise TOML).
pub fn load(path: &Path) -> Result<TerminalCondition> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => from_json_str(&text),
        _ => from_toml_str(&text),
    }
}

/// A catalog name or a path to a config file.
pub fn resolve(spec: &str) -> Result<TerminalCondition> {
    match catalog(spec) {
        Some(g) => Ok(g),
        None if Path::new(spec).is_file() => load(Path::new(spec)),
        None => Err(Error::Config(format!("`{spec}` is neither a catalog name ({}) nor a config file", CATALOG.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbv(name: &str) -> GbvFunction {
        catalog(name).unwrap().as_gbv().unwrap().clone()
    }

    #[test]
    fn indicator_half_open_convention() {
        let g = catalog("indicator").unwrap();
        assert_eq!(g.evaluate(0.0), 1.0);
        assert_eq!(g.evaluate(-0.1), 0.0);
        assert_eq!(g.evaluate(1e-300), 1.0);
    }

    #[test]
    fn point_mass_alone_is_open_indicator() {
        let g = GbvFunction::new(0.0, vec![MeasureComponent::PointMass { mass: 1.0, at: 0.0 }], vec![], 0.0).unwrap();
        assert_eq!(g.evaluate(0.0), 0.0);
        assert_eq!(g.evaluate(0.5), 1.0);
        assert_eq!(gbv_tail_norm(&g, 1.0).unwrap(), 1.0);
        assert_eq!(growth_envelope(&TerminalCondition::Gbv(g)).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn square_representation() {
        let g = gbv("square");
        assert!((g.evaluate(3.0) - 9.0).abs() < 1e-12);
        assert!((g.evaluate(-2.5) - 6.25).abs() < 1e-12);
        let tn = gbv_tail_norm(&g, 1.0).unwrap();
        assert!((tn - 4.0).abs() < 1e-9, "{tn}");
        let (a, b) = growth_envelope(&TerminalCondition::Gbv(g.clone())).unwrap();
        assert!((a - 4.0).abs() < 1e-9 && b == 1.0);
        assert!(matches!(gbv_tail_norm(&g, 0.0), Err(Error::Divergent { .. })));
    }

    #[test]
    fn jump_only_tail_norm() {
        let g = GbvFunction::new(0.0, vec![], vec![JumpAtom { alpha: 2.0, at: 0.0 }], 0.0).unwrap();
        assert_eq!(gbv_tail_norm(&g, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn catalog_holder_and_eb() {
        assert_eq!(catalog("sqrt_abs").unwrap().evaluate(4.0), 2.0);
        let eb = TerminalCondition::Eb(EbFunction { kind: EbKind::Exp { rate: 1.0 }, a_const: 3.0, b: 2.0 });
        assert_eq!(growth_envelope(&eb).unwrap(), (3.0, 2.0));
    }

    #[test]
    fn shift_examples() {
        let ind = gbv("indicator");
        assert_eq!(shift(&ind, 1.0).evaluate(-1.0), 1.0);
        assert_eq!(shift(&ind, 1.0).evaluate(-1.0 - 1e-9), 0.0);
        assert_eq!(shift(&ind, 0.0), ind);
        let sq = gbv("square");
        assert!((shift(&sq, -1.0).evaluate(0.0) - 1.0).abs() < 1e-12);
        assert!((shift(&sq, -1.0).evaluate(3.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn even_lattice_jump_examples() {
        let at = |x: f64| GbvFunction::new(0.0, vec![], vec![JumpAtom { alpha: 1.0, at: x }], 0.0).unwrap();
        assert_eq!(even_lattice_jumps(&at(0.0), 0.0, 0.37), vec![0]);
        assert!(even_lattice_jumps(&at(0.25), 0.0, 0.25).is_empty());
        assert_eq!(even_lattice_jumps(&at(0.3), 0.1, 0.1), vec![0]);
    }

    #[test]
    fn sawtooth_matches_formula() {
        let g = gbv("sawtooth");
        for i in -400..=400 {
            let x = f64::from(i) * 0.01 + 0.003;
            let want = if (-3.0..=3.0).contains(&x) { x - x.ceil() } else { 0.0 };
            assert!((g.evaluate(x) - want).abs() < 1e-12, "x={x}");
        }
        for k in -4..=4 {
            assert_eq!(g.evaluate(f64::from(k)), 0.0);
        }
    }

    #[test]
    fn sign_function() {
        let g = catalog("sign").unwrap();
        assert_eq!(g.evaluate(0.0), 1.0);
        assert_eq!(g.evaluate(2.0), 1.0);
        assert_eq!(g.evaluate(-2.0), -1.0);
    }

    #[test]
    fn poly_shift_matches_direct_evaluation() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let s = poly_shift(&c, 0.7);
        for &y in &[-2.0, 0.0, 1.3] {
            assert!((poly_eval(&s, y) - poly_eval(&c, y + 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn toml_and_json_configs() {
        let t = r#"
            family = "gbv"
            c = 0.5
            beta = 1.0
            components = [
              { kind = "point_mass", mass = 1.0, at = 0.0 },
              { kind = "density", coeffs = [0.0, 2.0], a = 0.0 },
            ]
            jumps = [{ alpha = 1.0, at = 0.0 }]
        "#;
        let g = from_toml_str(t).unwrap();
        assert_eq!(g.evaluate(0.0), 1.5);
        assert!((g.evaluate(2.0) - 5.5).abs() < 1e-12);
        let j = r#"{"family":"holder","catalog":"abs_power","params":[0.0,0.5],"alpha":0.5,"A":1.0}"#;
        assert_eq!(from_json_str(j).unwrap().evaluate(9.0), 3.0);
        let bad = r#"{"family":"gbv","components":[{"kind":"density","coeffs":[1.0]}]}"#;
        assert!(matches!(from_json_str(bad), Err(Error::Divergent { .. })));
        assert!(from_json_str(r#"{"family":"eb","catalog":"exp","params":[1.0]}"#).is_err());
    }
}
