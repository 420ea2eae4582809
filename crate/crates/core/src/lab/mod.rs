//! Experiment drivers: the three-part error decomposition, rate fits and the sweeps behind the CLI.

mod decompose;
mod rates;
pub mod report;

pub use decompose::{decompose, decompose_many, Component, ErrorReport, McBudget};
pub use rates::{
    blowup_profile, default_blowup_times, fit_rate, holder_uniform_probe, rate_study, sharpness_run, stability, BlowupRow,
    HolderProbeRow, RateFit, SharpnessRow, Stability, NOISE_FLOOR,
};
