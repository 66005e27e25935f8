//! `quantize`: spectrum of a lumped-element netlist, optionally swept over
//! the flux of one loop (in units of Φ₀).

use std::path::PathBuf;

use cqed_core::circuit_quantize::constants::{FLUX_QUANTUM, PLANCK};
use cqed_core::circuit_quantize::{
    build_lagrangian, converged_spectrum, CircuitNetlist, CoordinateBasis, DEFAULT_CHARGE_CUTOFF,
    DEFAULT_OSCILLATOR_LEVELS,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{linspace, summary, Context};
use crate::config::Checks;
use crate::error::CliError;
use crate::output::{num, Output, Summary};
use crate::CommandName;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Netlist path, relative to the working directory or the config file.
    pub netlist: PathBuf,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_charge_cutoff")]
    pub charge_cutoff: usize,
    #[serde(default = "default_oscillator_levels")]
    pub oscillator_levels: usize,
    /// Relative level shift allowed when every basis is doubled.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub sweep_loop: Option<String>,
    #[serde(default)]
    pub sweep_start: f64,
    #[serde(default = "default_sweep_stop")]
    pub sweep_stop: f64,
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
}

fn default_levels() -> usize {
    6
}

fn default_charge_cutoff() -> usize {
    DEFAULT_CHARGE_CUTOFF
}

fn default_oscillator_levels() -> usize {
    DEFAULT_OSCILLATOR_LEVELS
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_sweep_stop() -> f64 {
    1.0
}

fn default_sweep_points() -> usize {
    21
}

fn resolve(path: &PathBuf, ctx: &Context) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.clone();
    }
    match &ctx.config_dir {
        Some(dir) if dir.join(path).exists() => dir.join(path),
        _ => path.clone(),
    }
}

fn basis_for(netlist: &CircuitNetlist, p: &Params) -> Result<Vec<CoordinateBasis>, CliError> {
    let lag = build_lagrangian(netlist)?;
    Ok((0..lag.n_coordinates())
        .map(|i| {
            if lag.has_inductive_term(i) {
                CoordinateBasis::Oscillator { levels: p.oscillator_levels }
            } else {
                CoordinateBasis::Charge { n_cut: p.charge_cutoff }
            }
        })
        .collect())
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.at_least("levels", p.levels, 2).at_least("charge_cutoff", p.charge_cutoff, 1);
    c.at_least("oscillator_levels", p.oscillator_levels, 2).positive("tolerance", p.tolerance);
    if p.sweep_loop.is_some() {
        c.finite("sweep_start", p.sweep_start).finite("sweep_stop", p.sweep_stop).at_least("sweep_points", p.sweep_points, 1);
    }
    c.finish()?;

    let path = resolve(&p.netlist, ctx);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("netlist: cannot read {}: {e}", path.display())))?;
    let netlist: CircuitNetlist = text.parse()?;
    let basis = basis_for(&netlist, &p)?;
    let lag = build_lagrangian(&netlist)?;
    let spec = converged_spectrum(&lag, &basis, p.levels, p.tolerance)?;
    out.csv(
        "spectrum.csv",
        &["level", "energy"],
        spec.levels.iter().enumerate().map(|(k, e)| vec![k.to_string(), num(*e)]),
    )?;
    let ghz: Vec<f64> = spec.levels.iter().map(|e| e / PLANCK / 1e9).collect();
    let mut converged = spec.converged;

    let mut s = summary(CommandName::Quantize, &p, ctx)?;
    let mut sweep = serde_json::Value::Null;
    if let Some(name) = &p.sweep_loop {
        if !netlist.loops.iter().any(|l| &l.name == name) {
            return Err(CliError::Input(format!("sweep_loop: netlist has no loop '{name}'")));
        }
        let fluxes = linspace(p.sweep_start, p.sweep_stop, p.sweep_points);
        let points: Vec<_> = fluxes
            .par_iter()
            .map(|&f| -> Result<_, CliError> {
                let n = netlist.clone().with_flux(name, f * FLUX_QUANTUM).expect("loop exists");
                Ok(converged_spectrum(&build_lagrangian(&n)?, &basis, p.levels, p.tolerance)?)
            })
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for (f, sp) in fluxes.iter().zip(&points) {
            converged &= sp.converged;
            worst = worst.max(sp.relative_change);
            for (k, e) in sp.levels.iter().enumerate() {
                rows.push(vec![num(*f), k.to_string(), num(*e)]);
            }
        }
        out.csv("flux_sweep.csv", &["flux", "level", "energy"], rows)?;
        sweep = json!({ "loop": name, "points": fluxes.len(), "max_relative_change": worst });
    }
    if !converged {
        s.warnings.push(format!("levels moved by more than {} under basis doubling", p.tolerance));
    }
    s.converged = converged;
    s.results = json!({
        "netlist": path.display().to_string(),
        "coordinates": lag.coordinates,
        "basis": spec.basis,
        "levels_joule": spec.levels,
        "levels_ghz": ghz,
        "relative_change": spec.relative_change,
        "sweep": sweep,
    });
    Ok(s)
}
