//! `meanfield-lobes`: equilibrium mean-field phase diagram and Mott-lobe
//! boundaries. Chemical potential and hopping are reported as `(μ − ω_r)/g`
//! and `zJ/g`; energies in units of `g`.

use cqed_core::hilbert::SiteSpace;
use cqed_core::jc_site::JcParams;
use cqed_core::meanfield::{lobe_boundary, lobe_tip, mott_window, phase_diagram, BoundaryOptions, MinimizeOptions};
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
    pub omega_r: f64,
    pub omega_q: f64,
    pub g: f64,
    #[serde(default = "default_cutoff")]
    pub n_max: usize,
    #[serde(default = "default_mu_min")]
    pub mu_min: f64,
    #[serde(default)]
    pub mu_max: f64,
    #[serde(default = "default_grid")]
    pub mu_points: usize,
    #[serde(default = "default_zj_max")]
    pub zj_max: f64,
    #[serde(default = "default_grid")]
    pub zj_points: usize,
    /// Lobes whose boundary and tip are traced.
    #[serde(default = "default_lobes")]
    pub lobes: Vec<usize>,
    #[serde(default = "default_boundary_points")]
    pub boundary_points: usize,
    /// Tip reproducibility required under doubling of `n_max`, in units of g.
    #[serde(default = "default_tip_tolerance")]
    pub tip_tolerance: f64,
}

fn default_cutoff() -> usize {
    12
}

fn default_mu_min() -> f64 {
    -1.5
}

fn default_grid() -> usize {
    50
}

fn default_zj_max() -> f64 {
    0.5
}

fn default_lobes() -> Vec<usize> {
    vec![1, 2]
}

fn default_boundary_points() -> usize {
    41
}

fn default_tip_tolerance() -> f64 {
    1e-4
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.positive("omega_r", p.omega_r).positive("omega_q", p.omega_q).positive("g", p.g).at_least("n_max", p.n_max, 2);
    c.finite("mu_min", p.mu_min).finite("mu_max", p.mu_max).require(p.mu_max >= p.mu_min, "mu_max: must not be below mu_min");
    c.at_least("mu_points", p.mu_points, 1).at_least("zj_points", p.zj_points, 1).non_negative("zj_max", p.zj_max);
    c.at_least("boundary_points", p.boundary_points, 1).positive("tip_tolerance", p.tip_tolerance);
    for (k, &n) in p.lobes.iter().enumerate() {
        c.at_least(&format!("lobes[{k}]"), n, 1).require(n < p.n_max, format!("lobes[{k}]: lobe {n} needs n_max > {n}"));
    }
    c.finish()?;

    let site = JcParams::new(p.omega_r, p.omega_q, p.g)?;
    let space = SiteSpace::new(p.n_max)?;
    let g = p.g;
    let mu_grid: Vec<f64> = linspace(p.mu_min, p.mu_max, p.mu_points).into_iter().map(|m| p.omega_r + g * m).collect();
    let zj_grid: Vec<f64> = linspace(0.0, p.zj_max, p.zj_points).into_iter().map(|z| g * z).collect();
    let cells = phase_diagram(&site, &mu_grid, &zj_grid, &space, &MinimizeOptions::for_cutoff(p.n_max))?;
    let boundary_cells = cells.iter().filter(|c| c.at_boundary).count();
    out.csv(
        "phase_diagram.csv",
        &["mu", "zJ", "psi", "energy", "n_polariton", "phase", "at_boundary"],
        cells.iter().map(|c| {
            vec![
                num((c.mu - p.omega_r) / g),
                num(c.zj / g),
                num(c.psi),
                num(c.energy / g),
                num(c.n_polariton),
                c.phase.to_string(),
                c.at_boundary.to_string(),
            ]
        }),
    )?;

    let opts = BoundaryOptions::new(&site, p.n_max);
    let refined_space = SiteSpace::new(2 * p.n_max)?;
    let refined_opts = BoundaryOptions::new(&site, 2 * p.n_max);
    let mut rows = Vec::new();
    let mut lobes = Vec::new();
    let mut converged = true;
    for &n in &p.lobes {
        let w = mott_window(&site, n);
        let grid: Vec<f64> =
            (1..=p.boundary_points).map(|k| w.mu_lo + w.width() * k as f64 / (p.boundary_points + 1) as f64).collect();
        let zc: Vec<f64> = grid.par_iter().map(|&mu| lobe_boundary(&site, mu, &space, &opts)).collect::<Result<_, _>>()?;
        for (mu, z) in grid.iter().zip(&zc) {
            rows.push(vec![n.to_string(), num((mu - p.omega_r) / g), num(z / g)]);
        }
        let tip = lobe_tip(&site, n, &space, p.boundary_points, &opts)?;
        let refined = lobe_tip(&site, n, &refined_space, p.boundary_points, &refined_opts)?;
        let shift = (refined.zj_c - tip.zj_c).abs() / g;
        converged &= shift <= p.tip_tolerance;
        lobes.push(json!({
            "n": n,
            "window": [(w.mu_lo - p.omega_r) / g, (w.mu_hi - p.omega_r) / g],
            "tip_mu": (tip.mu - p.omega_r) / g,
            "tip_zj": tip.zj_c / g,
            "tip_zj_refined_cutoff": refined.zj_c / g,
            "tip_shift": shift,
        }));
    }
    out.csv("lobe_boundaries.csv", &["n", "mu", "zJ_c"], rows)?;

    let mut s = summary(CommandName::MeanfieldLobes, &p, ctx)?;
    s.converged = converged;
    if boundary_cells > 0 {
        s.warnings.push(format!("{boundary_cells} cells hit the ψ window or the photon cutoff; raise n_max for converged values there"));
    }
    s.results = json!({ "cells": cells.len(), "boundary_cells": boundary_cells, "lobes": lobes });
    Ok(s)
}
