//! `driven-mf`: driven-dissipative mean-field steady states over a sweep of
//! `zJ`, with seed-resolved fixed points.

use cqed_core::jc_site::JcParams;
use cqed_core::meanfield::{driven_mf_steady, DrivenMfOptions, DrivenMfOutcome, DrivenMfParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_true, summary, Context, Rates};
use crate::config::Checks;
use crate::error::CliError;
use crate::output::{num, opt, Output, Summary};
use crate::CommandName;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub omega_r: f64,
    pub g: f64,
    /// Place the qubit at `ω_r − zJ` and the drive at `ω_r − zJ − g`.
    #[serde(default = "default_true")]
    pub band_bottom: bool,
    pub omega_q: Option<f64>,
    pub omega_d: Option<f64>,
    pub zj: Vec<f64>,
    pub xi: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default = "default_cutoff")]
    pub n_max: usize,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
    #[serde(default = "default_radius")]
    pub seed_radius: f64,
    #[serde(default = "default_evolve_tolerance")]
    pub evolve_tolerance: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_chunks")]
    pub max_chunks: usize,
}

fn default_cutoff() -> usize {
    DrivenMfOptions::default().n_max
}

fn default_seeds() -> usize {
    DrivenMfOptions::default().n_seeds
}

fn default_rng_seed() -> u64 {
    DrivenMfOptions::default().rng_seed
}

fn default_radius() -> f64 {
    DrivenMfOptions::default().seed_radius
}

fn default_evolve_tolerance() -> f64 {
    DrivenMfOptions::default().evolve_tolerance
}

fn default_tolerance() -> f64 {
    DrivenMfOptions::default().tolerance
}

fn default_max_chunks() -> usize {
    DrivenMfOptions::default().max_chunks
}

fn params_at(p: &Params, zj: f64) -> Result<DrivenMfParams, CliError> {
    let rates = p.rates.dissipation();
    if p.band_bottom {
        Ok(DrivenMfParams::band_bottom(p.omega_r, p.g, zj, p.xi, rates)?)
    } else {
        let site = JcParams::new(p.omega_r, p.omega_q.unwrap(), p.g)?;
        Ok(DrivenMfParams { site, rates, xi: p.xi, omega_d: p.omega_d.unwrap(), zj })
    }
}

fn rows_for(zj: f64, outcome: &DrivenMfOutcome) -> Vec<(usize, Vec<String>)> {
    let flag = outcome.multistable().to_string();
    let mut rows = Vec::new();
    for fp in &outcome.fixed_points {
        for &seed in &fp.seeds {
            rows.push((seed, vec![num(zj), seed.to_string(), num(fp.psi.re), num(fp.psi.im), opt(fp.g2), flag.clone()]));
        }
    }
    for cycle in &outcome.limit_cycles {
        let n = cycle.orbit.len().max(1) as f64;
        let (re, im) = cycle.orbit.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        rows.push((cycle.seed, vec![num(zj), cycle.seed.to_string(), num(re / n), num(im / n), String::new(), flag.clone()]));
    }
    rows.sort_by_key(|r| r.0);
    rows
}

fn describe(zj: f64, p: &DrivenMfParams, outcome: &DrivenMfOutcome) -> Value {
    json!({
        "zj": zj,
        "omega_q": p.site.omega_q,
        "omega_d": p.omega_d,
        "multistable": outcome.multistable(),
        "seeds": outcome.seeds.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "fixed_points": outcome.fixed_points.iter().map(|f| json!({
            "re_psi": f.psi.re,
            "im_psi": f.psi.im,
            "abs_psi": f.psi.norm(),
            "n_photon": f.n_photon,
            "g2": f.g2,
            "seeds": f.seeds,
        })).collect::<Vec<_>>(),
        "limit_cycles": outcome.limit_cycles,
    })
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.positive("omega_r", p.omega_r).positive("g", p.g).non_negative("xi", p.xi).at_least("n_max", p.n_max, 2);
    c.require(!p.zj.is_empty(), "zj: at least one hopping value is required");
    for (k, &z) in p.zj.iter().enumerate() {
        c.finite(&format!("zj[{k}]"), z);
    }
    if p.band_bottom {
        c.require(p.omega_q.is_none(), "omega_q: set band_bottom = false to give the qubit frequency explicitly");
        c.require(p.omega_d.is_none(), "omega_d: set band_bottom = false to give the drive frequency explicitly");
    } else {
        c.require(p.omega_q.is_some(), "omega_q: required when band_bottom = false");
        c.require(p.omega_d.is_some(), "omega_d: required when band_bottom = false");
    }
    c.positive("seed_radius", p.seed_radius).positive("evolve_tolerance", p.evolve_tolerance).positive("tolerance", p.tolerance);
    c.at_least("max_chunks", p.max_chunks, 1);
    p.rates.check(&mut c);
    c.require(p.rates.gamma1 + p.rates.gamma_phi + p.rates.gamma_kappa > 0.0, "rates: at least one rate must be positive");
    c.finish()?;

    let options = DrivenMfOptions {
        n_max: p.n_max,
        n_seeds: p.n_seeds,
        rng_seed: p.rng_seed,
        seed_radius: p.seed_radius,
        evolve_tolerance: p.evolve_tolerance,
        tolerance: p.tolerance,
        max_chunks: p.max_chunks,
        ..Default::default()
    };
    let results: Vec<(f64, DrivenMfParams, DrivenMfOutcome)> = p
        .zj
        .par_iter()
        .map(|&zj| -> Result<_, CliError> {
            let params = params_at(&p, zj)?;
            let outcome = driven_mf_steady(&params, &options)?;
            Ok((zj, params, outcome))
        })
        .collect::<Result<_, _>>()?;
    let rows = results.iter().flat_map(|(zj, _, o)| rows_for(*zj, o).into_iter().map(|r| r.1));
    out.csv("driven_mf.csv", &["zJ", "seed", "re_psi", "im_psi", "g2", "multistable_flag"], rows)?;

    let mut s = summary(CommandName::DrivenMf, &p, ctx)?;
    let multistable = results.iter().filter(|r| r.2.multistable()).count();
    s.results = json!({
        "multistable_points": multistable,
        "points": results.iter().map(|(zj, params, o)| describe(*zj, params, o)).collect::<Vec<_>>(),
    });
    Ok(s)
}
