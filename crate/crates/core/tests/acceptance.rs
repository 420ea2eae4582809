//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines always reach the output.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use heatwalk::bridge::{build_qtable, exit_pdf_mass, rho_integral_checks, QBudget};
use heatwalk::exact_heat::QuadratureSpec;
use heatwalk::exit_mc::estimators::{jn_moment_report, tail_report, tau_report, JnReport, TailReport, TauReport};
use heatwalk::exit_mc::rng::with_workers;
use heatwalk::exit_mc::RngStream;
use heatwalk::lab::{self, ErrorReport, McBudget};
use heatwalk::lattice::{un_binomial, un_recursion, LatticeParams};
use heatwalk::projections::{dist_odd, pi_e_fn, pi_o};
use heatwalk::terminal::{catalog, TerminalCondition, CATALOG};

// Pinned tolerances.
const SE_MULT: f64 = 3.0;
const C1_MAX_SECONDS: f64 = 10.0;
const C4_TOL: f64 = 0.1;
const C6_TOL: f64 = 0.01;
const C6_MAX_SECONDS: f64 = 5.0;
const C7_SLOPE: f64 = -0.5;
const C7_TOL: f64 = 0.02;
const C8_RATIO: f64 = 2.0;
const C9_TOL: f64 = 1e-10;
const C11_TOL: f64 = 1e-12;
const C12_TOL: f64 = 1e-8;
const C13_REL_UNCERTAINTY: f64 = 0.2;

const SEED: u64 = 20_240_601;
const TAU_SAMPLES: usize = 1_000_000;
const J_PATHS: usize = 100_000;
const CLOSURE_PATHS: usize = 100_000;
const TAIL_PATHS: usize = 1_000_000;
const Q_PATHS: usize = 2000;

struct Verdicts {
    failed: Vec<&'static str>,
}

impl Verdicts {
    fn record(&mut self, id: &'static str, name: &str, pass: bool, detail: String) {
        println!("{id} {name:<34} {}  {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

/// Everything the reproducibility criterion re-runs under different worker counts.
struct McSuite {
    tau: TauReport,
    tau_seconds: f64,
    jn: Vec<JnReport>,
    closure: Vec<ErrorReport>,
    rho: heatwalk::bridge::RhoReport,
    tail: TailReport,
}

impl McSuite {
    fn to_json(&self) -> Value {
        json!({"tau": self.tau, "jn": self.jn, "closure": self.closure, "rho": self.rho, "tail": self.tail})
    }
}

fn closure_times(lp: &LatticeParams) -> [f64; 3] {
    let n = lp.n;
    let off_mid = 0.5 * (lp.t_node(n / 4) + lp.t_node(n / 4 + 1));
    [0.0, off_mid, lp.t_node(n / 2 - 2)]
}

fn run_mc_suite() -> McSuite {
    let root = RngStream::new(SEED, 0);
    let start = Instant::now();
    let tau = tau_report(TAU_SAMPLES, &[-2.0, -1.0, 0.5], root.child(1));
    let tau_seconds = start.elapsed().as_secs_f64();
    let jn = [16usize, 64, 256]
        .iter()
        .map(|&n| jn_moment_report(0.0, &LatticeParams::new(n, 1.0, 1.0).unwrap(), J_PATHS, root.child(2 + n as u64)).unwrap())
        .collect();
    let quad = QuadratureSpec::default();
    let gs: Vec<(String, TerminalCondition)> = CATALOG.iter().map(|c| (c.to_string(), catalog(c).unwrap())).collect();
    let mut closure = Vec::new();
    for n in [64usize, 256] {
        let lp = LatticeParams::new(n, 1.0, 1.0).unwrap();
        for (i, t) in closure_times(&lp).into_iter().enumerate() {
            let budget = McBudget { paths: CLOSURE_PATHS, seed: SEED ^ (n as u64 * 8 + i as u64), q_paths: Q_PATHS, q_steps: 64 };
            closure.extend(lab::decompose_many(&gs, t, 0.0, &lp, &budget, None, &quad).unwrap());
        }
    }
    let qt = build_qtable(0.125, 1.0, 1.0, &QBudget { paths: Q_PATHS, steps: 64, seed: SEED }).unwrap();
    let rho = rho_integral_checks(0.0, &qt).unwrap();
    let tail = tail_report(64, 0.25, TAIL_PATHS, root.child(500)).unwrap();
    McSuite { tau, tau_seconds, jn, closure, rho, tail }
}

fn c1_c2(v: &mut Verdicts, s: &McSuite) {
    let t = &s.tau;
    let ok =
        t.mean.within(1.0, SE_MULT, 0.0) && t.second_moment.within(5.0 / 3.0, SE_MULT, 0.0) && s.tau_seconds <= C1_MAX_SECONDS;
    v.record(
        "C01",
        "exit-time moments",
        ok,
        format!(
            "mean={:.5}±{:.1e} m2={:.5}±{:.1e} time={:.2}s",
            t.mean.mean, t.mean.std_error, t.second_moment.mean, t.second_moment.std_error, s.tau_seconds
        ),
    );
    let mut ok = true;
    let mut parts = Vec::new();
    for (l, est, _) in &t.mgf {
        // Closed form recomputed here rather than trusting the library.
        let target = if *l <= 0.0 { 1.0 / (2.0 * -l).sqrt().cosh() } else { 1.0 / (2.0 * l).sqrt().cos() };
        ok &= est.within(target, SE_MULT, 0.0);
        parts.push(format!("λ={l}: {:.5}±{:.1e} vs {:.5}", est.mean, est.std_error, target));
    }
    v.record("C02", "exit-time MGF", ok, parts.join("; "));
}

fn c3_c4_c5(v: &mut Verdicts, s: &McSuite) {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &s.jn {
        ok &= r.first_moment.holds();
        parts.push(format!("nθ={}: {:.4}±{:.1e}", r.n_theta, r.first_moment.estimate.mean, r.first_moment.estimate.std_error));
    }
    // Trend: the distance to 4/3 does not grow with n_theta beyond combined noise.
    for w in s.jn.windows(2) {
        let (a, b) = (&w[0].first_moment.estimate, &w[1].first_moment.estimate);
        let (da, db) = ((a.mean - 4.0 / 3.0).abs(), (b.mean - 4.0 / 3.0).abs());
        ok &= db <= da + SE_MULT * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    }
    v.record("C03", "J_n first moment", ok, parts.join("; "));

    let r256 = s.jn.iter().find(|r| r.n_theta == 256).unwrap();
    let m2 = r256.second_moment.estimate;
    v.record(
        "C04",
        "J_n second moment",
        (m2.mean - 2.0 / 3.0).abs() <= C4_TOL,
        format!("nθ=256: {:.4}±{:.1e} vs 2/3", m2.mean, m2.std_error),
    );

    let mut ok = true;
    let mut parts = Vec::new();
    for r in s.jn.iter().filter(|r| r.n_theta >= 64) {
        let unit = 1.0 / r.n_theta as f64;
        let e = r.tau_overshoot.estimate;
        ok &= (e.mean - 4.0 / 3.0 * unit).abs() <= 67.0 / (r.n_theta as f64).sqrt() * unit + SE_MULT * e.std_error;
        parts.push(format!("nθ={}: (τ_J-θ)/(T/n)={:.4}±{:.1e}", r.n_theta, e.mean / unit, e.std_error / unit));
    }
    v.record("C05", "tau_J expansion", ok, parts.join("; "));
}

fn c6() -> (bool, String) {
    let start = Instant::now();
    let ns: Vec<usize> = (6..=16).map(|k| 1usize << k).collect();
    let rows = lab::sharpness_run(&ns, &QuadratureSpec::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let limit = 1.0 / (2.0 * PI).sqrt();
    let last = rows.last().unwrap().scaled;
    let monotone = rows.windows(2).all(|w| (w[1].scaled - limit).abs() <= (w[0].scaled - limit).abs());
    let ok = (last - limit).abs() <= C6_TOL && monotone && secs <= C6_MAX_SECONDS;
    (ok, format!("sqrt(n)ε(2^16)={last:.6} limit={limit:.6} monotone={monotone} time={secs:.2}s"))
}

fn c7() -> (bool, String) {
    let ns: Vec<usize> = (6..=14).map(|k| 1usize << k).collect();
    let fit = lab::rate_study(&catalog("indicator").unwrap(), 0.0, 0.0, 1.0, 1.0, &ns, &QuadratureSpec::default()).unwrap();
    let ok = !fit.degenerate && (fit.slope - C7_SLOPE).abs() <= C7_TOL;
    (ok, format!("slope={:.4} r2={:.6}", fit.slope, fit.r_squared))
}

fn c8() -> (bool, String) {
    let g = catalog("sqrt_abs").unwrap();
    let quad = QuadratureSpec::default();
    let scaled: Vec<f64> = (6..=12)
        .map(|k| {
            let n = 1usize << k;
            let lp = LatticeParams::new(n, 1.0, 1.0).unwrap();
            heatwalk::lattice::total_error(&g, 0.0, 0.0, &lp, &quad).unwrap().abs() * (n as f64).powf(0.25)
        })
        .collect();
    let st = lab::stability(&scaled);
    // One-sided: only the later half of the sweep is held to the envelope.
    let ok = st.late_max <= C8_RATIO * st.median;
    let shown: Vec<String> = scaled.iter().map(|v| format!("{v:.4}")).collect();
    (ok, format!("|ε|n^(1/4)=[{}] late max={:.4} median={:.4}", shown.join(" "), st.late_max, st.median))
}

fn c9() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 * rng.random_range(1..=2048usize);
        let horizon = rng.random_range(0.5..2.0);
        let sigma = rng.random_range(0.5..2.0);
        let lp = LatticeParams::new(n, horizon, sigma).unwrap();
        let g = catalog(CATALOG[rng.random_range(0..CATALOG.len())]).unwrap();
        let k = rng.random_range(0..n / 2);
        let t = lp.t_node(k);
        let x = rng.random_range(-40i64..=40) as f64 * lp.h();
        let d = (un_recursion(&g, t, x, &lp).unwrap() - un_binomial(&g, t, x, &lp).unwrap()).abs();
        worst = worst.max(d);
    }
    (worst <= C9_TOL, format!("max|recursion-binomial|={worst:.2e}"))
}

fn c10(v: &mut Verdicts, s: &McSuite) {
    let bad: Vec<String> = s
        .closure
        .iter()
        .filter(|r| !r.closes)
        .map(|r| format!("{}@n={},t={:.4}: res={:.2e} tol={:.2e}", r.g, r.n, r.t, r.residual, r.tolerance))
        .collect();
    let worst = s.closure.iter().map(|r| r.residual.abs() / r.tolerance).fold(0.0, f64::max);
    let detail =
        if bad.is_empty() { format!("{} cases, max |residual|/tolerance={worst:.3}", s.closure.len()) } else { bad.join("; ") };
    v.record("C10", "decomposition closure", bad.is_empty(), detail);
}

fn c11() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let mut worst = [0.0f64; 4];
    for _ in 0..10_000 {
        let h = rng.random_range(0.05..1.0);
        let k = rng.random_range(-5i64..5);
        let window = (k - 4)..=(k + 5);
        let x = rng.random_range((2 * k - 4) as f64 * h..(2 * k + 6) as f64 * h);

        let r = rng.random_range((2 * k - 2) as f64 * h..(2 * k + 4) as f64 * h);
        let below = pi_e_fn(|z| if z <= r { 1.0 } else { 0.0 }, h, window.clone());
        let above = pi_e_fn(|z| if z > r { 1.0 } else { 0.0 }, h, window.clone());
        worst[0] = worst[0].max((below.eval(x).unwrap() - (1.0 - above.eval(x).unwrap())).abs());

        let xi_off = rng.random_range(-8.0..8.0) * h + 1e-3 * h;
        let xi_off = if heatwalk::terminal::is_multiple_of(xi_off, 2.0 * h) { xi_off + 0.5 * h } else { xi_off };
        let dirac_off = pi_e_fn(|z| if z == xi_off { 1.0 } else { 0.0 }, h, window.clone());
        worst[1] = worst[1].max(dirac_off.eval(x).unwrap().abs());
        let j = rng.random_range(k - 3..=k + 4);
        let xi_on = 2.0 * j as f64 * h;
        let dirac_on = pi_e_fn(|z| if z == xi_on { 1.0 } else { 0.0 }, h, window.clone());
        let tri = (1.0 - (x - xi_on).abs() / (2.0 * h)).max(0.0);
        worst[1] = worst[1].max((dirac_on.eval(x).unwrap() - tri).abs());

        let y = rng.random_range(2.0 * k as f64 * h..(2 * k + 2) as f64 * h);
        let pe = pi_e_fn(|z| if z > y { 1.0 } else { 0.0 }, h, window.clone());
        let po = pi_o(&pe);
        let lhs = (po.eval(x).unwrap() - pe.eval(x).unwrap()).abs();
        let inside = x >= (2 * k - 1) as f64 * h && x < (2 * k + 3) as f64 * h;
        let rhs = if inside { dist_odd(x, h) / (4.0 * h) } else { 0.0 };
        worst[2] = worst[2].max((lhs - rhs).abs());

        let m = rng.random_range(k - 2..=k + 3);
        let centre = 2.0 * m as f64 * h;
        let pe = pi_e_fn(|z| (z - centre).abs(), h, window.clone());
        let po = pi_o(&pe);
        let inside = x >= (2 * m - 1) as f64 * h && x < (2 * m + 1) as f64 * h;
        let rhs = if inside { dist_odd(x, h) } else { 0.0 };
        worst[3] = worst[3].max((po.eval(x).unwrap() - (x - centre).abs() - rhs).abs());
    }
    let ok = worst.iter().all(|&w| w <= C11_TOL);
    (
        ok,
        format!(
            "max deviations complement={:.1e} dirac={:.1e} odd-even gap={:.1e} odd|.|={:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c12() -> (bool, String) {
    let m = exit_pdf_mass(&QuadratureSpec::default()).unwrap();
    ((m - 1.0).abs() <= C12_TOL, format!("mass={m:.12}"))
}

fn c13(v: &mut Verdicts, s: &McSuite) {
    let r = &s.rho;
    let ok = [r.inner, r.outer].iter().all(|c| c.holds() && c.uncertainty < C13_REL_UNCERTAINTY * c.bound);
    v.record(
        "C13",
        "rho integral bounds",
        ok,
        format!(
            "inner={:.2e}±{:.1e} (bound {:.4}); outer={:.2e}±{:.1e} (bound {:.4}); cell sup={:.2e} (bound {:.4})",
            r.inner.value,
            r.inner.uncertainty,
            r.inner.bound,
            r.outer.value,
            r.outer.uncertainty,
            r.outer.bound,
            r.cell_sup.value,
            r.cell_sup.bound
        ),
    );
}

fn c14() -> (bool, String) {
    let g = catalog("square_eb").unwrap();
    let lp = LatticeParams::new(256, 1.0, 1.0).unwrap();
    let ts: Vec<f64> =
        lab::default_blowup_times(&lp).into_iter().enumerate().filter(|(i, _)| i % 2 == 1).map(|(_, t)| t).collect();
    let mut worst = 0.0f64;
    let mut ok = true;
    for x in [0.0, 0.7, -1.9] {
        for r in lab::blowup_profile(&g, &lp, &ts, x, &QuadratureSpec::default()).unwrap() {
            let b = r.adj_bound.expect("off-lattice rows carry the bound");
            ok &= r.adj.abs() <= b;
            worst = worst.max(r.adj.abs() / b);
        }
    }
    (ok, format!("{} off-lattice times x 3 points, max |adj|/bound={worst:.4}", ts.len()))
}

fn c15(v: &mut Verdicts, s: &McSuite) {
    let t = &s.tail;
    let ok = t.upper.mean <= t.upper_bound + SE_MULT * t.upper.std_error;
    v.record(
        "C15",
        "J_n upper tail bound",
        ok,
        format!(
            "P(J>80)={:.5}±{:.1e} bound={:.5}; lower P(J<48)={:.5} bound={:.5}",
            t.upper.mean, t.upper.std_error, t.upper_bound, t.lower.mean, t.lower_bound
        ),
    );
}

fn main() -> ExitCode {
    let mut v = Verdicts { failed: Vec::new() };
    let start = Instant::now();
    let suite = with_workers(1, run_mc_suite);
    let base = suite.to_json();

    c1_c2(&mut v, &suite);
    c3_c4_c5(&mut v, &suite);
    let (ok, d) = c6();
    v.record("C06", "sharpness limit", ok, d);
    let (ok, d) = c7();
    v.record("C07", "GBV rate", ok, d);
    let (ok, d) = c8();
    v.record("C08", "Holder rate envelope", ok, d);
    let (ok, d) = c9();
    v.record("C09", "scheme equivalence", ok, d);
    c10(&mut v, &suite);
    let (ok, d) = c11();
    v.record("C11", "projection identities", ok, d);
    let (ok, d) = c12();
    v.record("C12", "bridge pdf normalization", ok, d);
    c13(&mut v, &suite);
    let (ok, d) = c14();
    v.record("C14", "adjustment bound", ok, d);
    c15(&mut v, &suite);

    let mut same = true;
    for w in [4, 8] {
        same &= with_workers(w, run_mc_suite).to_json() == base;
    }
    v.record("C16", "reproducibility across workers", same, "criteria 1-5, 10, 13, 15 JSON under 1/4/8 workers".into());

    println!(
        "acceptance: {} of 16 passed in {:.1?}",
        16 - v.failed.len(),
        Duration::from_secs_f64(start.elapsed().as_secs_f64())
    );
    if v.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", v.failed.join(", "));
        ExitCode::FAILURE
    }
}
