use std::path::PathBuf;

use cqed_core::lindblad::{DissipationRates, SteadyStateOptions};
use serde::{Deserialize, Serialize};

use crate::config::{Checks, RawConfig};
use crate::error::CliError;
use crate::output::{Output, Summary};
use crate::CommandName;

mod blockade;
mod dimer;
mod driven;
mod lobes;
mod modes;
mod quantize;
mod sector;
mod spectrum;

pub struct Context {
    pub out_dir: PathBuf,
    pub threads: usize,
    pub config_dir: Option<PathBuf>,
}

/// Runs one command; `Ok(false)` means outputs were written but a
/// convergence check failed.
pub fn dispatch(command: CommandName, raw: RawConfig, ctx: &Context) -> Result<bool, CliError> {
    let mut out = Output::create(&ctx.out_dir)?;
    let summary = match command {
        CommandName::JcSpectrum => spectrum::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::BlockadeScan => blockade::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::DimerG2 => dimer::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::SectorNonlinearity => sector::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::MeanfieldLobes => lobes::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::DrivenMf => driven::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::Modes => modes::run(raw.into_params()?, ctx, &mut out)?,
        CommandName::Quantize => quantize::run(raw.into_params()?, ctx, &mut out)?,
    };
    for w in &summary.warnings {
        log::warn!("{w}");
    }
    let path = out.summary(&summary)?;
    println!("{}", path.display());
    Ok(summary.converged)
}

/// Qubit and photon loss rates shared by the open-system commands.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    #[serde(default)]
    pub gamma_kappa: f64,
}

impl Rates {
    pub fn check(&self, c: &mut Checks) {
        c.non_negative("rates.gamma1", self.gamma1)
            .non_negative("rates.gamma_phi", self.gamma_phi)
            .non_negative("rates.gamma_kappa", self.gamma_kappa);
    }

    pub fn dissipation(&self) -> DissipationRates {
        DissipationRates::uniform(self.gamma1, self.gamma_phi, self.gamma_kappa)
    }
}

/// Steady-state solver settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Steady {
    #[serde(default = "default_direct_threshold")]
    pub direct_threshold: usize,
    #[serde(default = "default_steady_tolerance")]
    pub tolerance: f64,
}

fn default_direct_threshold() -> usize {
    SteadyStateOptions::default().direct_threshold
}

fn default_steady_tolerance() -> f64 {
    SteadyStateOptions::default().tolerance
}

impl Default for Steady {
    fn default() -> Self {
        Self { direct_threshold: default_direct_threshold(), tolerance: default_steady_tolerance() }
    }
}

impl Steady {
    pub fn check(&self, c: &mut Checks) {
        c.positive("steady.tolerance", self.tolerance);
    }

    pub fn options(&self) -> SteadyStateOptions {
        SteadyStateOptions { direct_threshold: self.direct_threshold, tolerance: self.tolerance, ..Default::default() }
    }
}

/// Inclusive uniform grid of `points` values.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

pub fn summary(command: CommandName, config: &impl Serialize, ctx: &Context) -> Result<Summary, CliError> {
    Summary::new(command.as_str(), config, ctx.threads)
}

pub(crate) fn default_n_max() -> usize {
    6
}

pub(crate) fn default_true() -> bool {
    true
}

pub(crate) fn default_points() -> usize {
    51
}
