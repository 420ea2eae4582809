use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use heatwalk::bridge::{build_qtable, rho_integral_checks, QBudget};
use heatwalk::exact_heat::{u_exact, QuadratureSpec};
use heatwalk::exit_mc::estimators::{jn_moment_report, tail_report, tau_report};
use heatwalk::exit_mc::rng::{with_workers, workers_from_env};
use heatwalk::exit_mc::RngStream;
use heatwalk::lab::report::Report;
use heatwalk::lab::{self, McBudget};
use heatwalk::lattice::{theta_of, un_binomial, un_recursion, LatticeParams};
use heatwalk::terminal::resolve;
use heatwalk::Result;

#[derive(Parser)]
#[command(name = "heatwalk", version, about = "Random-walk approximation of the backward heat equation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Number of walk steps (even).
    #[arg(long, global = true, default_value_t = 256)]
    n: usize,
    /// Horizon.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, global = true, default_value_t = 0.0)]
    t: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    /// Catalog name or path to a TOML/JSON terminal-condition file.
    #[arg(long, global = true, default_value = "indicator")]
    g: String,
    #[arg(long, global = true, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print u and u^n at one point.
    Solve,
    /// Split the error into adjustment, local and global parts.
    Decompose {
        /// Bridge paths per q-table point.
        #[arg(long, default_value_t = 2000)]
        q_paths: usize,
    },
    /// Log-log rate fit of |eps_n(t, x)| over n = 2^lo .. 2^hi.
    Rates {
        #[arg(long, default_value_t = 6)]
        lo: u32,
        #[arg(long, default_value_t = 14)]
        hi: u32,
    },
    /// sqrt(n) eps_n(0,0) for the indicator with T = sigma = 1.
    Sharpness {
        #[arg(long, default_value_t = 1)]
        lo: u32,
        #[arg(long, default_value_t = 16)]
        hi: u32,
    },
    /// Error along times approaching T, on- and off-lattice.
    Blowup,
    /// Exit-time and J_n moment reports.
    Moments {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
    },
    /// Build a q-table and check the rho integral bounds.
    Bridge {
        #[arg(long, default_value_t = 2000)]
        q_paths: usize,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Also save the q-table (columnar text).
        #[arg(long)]
        qtable_out: Option<PathBuf>,
    },
}

fn emit<P: Serialize, R: Serialize>(c: &Common, report: Report<P, R>) -> Result<()> {
    let text = match c.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    match &c.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pow2s(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let quad = QuadratureSpec::default();
    let lp = LatticeParams::new(c.n, c.horizon, c.sigma)?;
    let params = json!({"n": c.n, "T": c.horizon, "sigma": c.sigma, "t": c.t, "x": c.x, "g": c.g});
    match cli.cmd {
        Cmd::Solve => {
            let g = resolve(&c.g)?;
            let row = json!({
                "u": u_exact(&g, c.t, c.x, &lp.heat(), &quad)?,
                "un_binomial": un_binomial(&g, c.t, c.x, &lp)?,
                "un_recursion": un_recursion(&g, c.t, c.x, &lp)?,
            });
            emit(c, Report::new("solve", params, vec![row]))
        }
        Cmd::Decompose { q_paths } => {
            let g = resolve(&c.g)?;
            let budget = McBudget { paths: c.paths, seed: c.seed, q_paths, ..McBudget::default() };
            let r = lab::decompose_many(&[(c.g.clone(), g)], c.t, c.x, &lp, &budget, None, &quad)?;
            emit(c, Report::new("decompose", json!({"common": params, "budget": budget}), r))
        }
        Cmd::Rates { lo, hi } => {
            let g = resolve(&c.g)?;
            let fit = lab::rate_study(&g, c.t, c.x, c.horizon, c.sigma, &pow2s(lo, hi), &quad)?;
            let rows: Vec<_> = fit.ns.iter().zip(&fit.errs).map(|(n, e)| json!({"n": n, "error": e})).collect();
            emit(c, Report::new("rates", json!({"common": params, "fit": fit}), rows))
        }
        Cmd::Sharpness { lo, hi } => {
            let rows = lab::sharpness_run(&pow2s(lo, hi), &quad)?;
            emit(c, Report::new("sharpness", json!({"limit": 1.0 / (2.0 * std::f64::consts::PI).sqrt()}), rows))
        }
        Cmd::Blowup => {
            let g = resolve(&c.g)?;
            let rows = lab::blowup_profile(&g, &lp, &lab::default_blowup_times(&lp), c.x, &quad)?;
            let on: Vec<f64> = rows.iter().filter(|r| r.on_lattice).map(|r| r.scaled).collect();
            emit(c, Report::new("blowup", json!({"common": params, "on_lattice_stability": lab::stability(&on)}), rows))
        }
        Cmd::Moments { samples, delta } => {
            let stream = RngStream::new(c.seed, 0);
            let tau = tau_report(samples, &[-2.0, -1.0, 0.5], stream.child(1));
            let jn = jn_moment_report(c.t, &lp, c.paths, stream.child(2))?;
            let tail = tail_report(theta_of(c.t, &lp)?.n_theta, delta, c.paths, stream.child(3))?;
            let row = json!({"tau": tau, "jn": jn, "tail": tail});
            emit(c, Report::new("moments", params, vec![row]))
        }
        Cmd::Bridge { q_paths, beta, qtable_out } => {
            let ti = theta_of(c.t, &lp)?;
            let qt = build_qtable(lp.h(), ti.theta_n, c.sigma, &QBudget { paths: q_paths, steps: 64, seed: c.seed })?;
            if let Some(p) = qtable_out {
                qt.save(&p)?;
            }
            let rep = rho_integral_checks(beta, &qt)?;
            emit(c, Report::new("bridge", params, vec![rep]))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match workers_from_env() {
        Some(w) => with_workers(w, || run(cli)),
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heatwalk: {e}");
            ExitCode::FAILURE
        }
    }
}
