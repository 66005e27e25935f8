//! `dimer-g2`: photon statistics of a driven chain (two sites by default).

use cqed_core::hilbert::{expectation, LatticeSpace};
use cqed_core::jc_site::JcParams;
use cqed_core::jchm_lattice::{build_jchm, Boundary, LatticeParams};
use cqed_core::lindblad::{build_liouvillian, g2_zero, steady_state, DriveSpec, LindbladError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::blockade::check_common;
use super::{default_points, linspace, summary, Context, Rates, Steady};
use crate::config::Checks;
use crate::error::CliError;
use crate::output::{num, opt, Output, Summary};
use crate::CommandName;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub omega_r: f64,
    pub omega_q: f64,
    pub g: f64,
    /// Nearest-neighbour photon hopping.
    #[serde(default)]
    pub hopping: f64,
    #[serde(default = "default_sites")]
    pub n_sites: usize,
    #[serde(default = "default_dimer_cutoff")]
    pub n_max: usize,
    pub xi: f64,
    #[serde(default = "default_driven")]
    pub driven_sites: Vec<usize>,
    pub omega_d_min: f64,
    pub omega_d_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub steady: Steady,
}

fn default_sites() -> usize {
    2
}

fn default_dimer_cutoff() -> usize {
    3
}

fn default_driven() -> Vec<usize> {
    vec![0]
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    check_common(&mut c, p.omega_r, p.omega_q, p.g, p.n_max);
    c.finite("hopping", p.hopping).at_least("n_sites", p.n_sites, 1).non_negative("xi", p.xi);
    c.finite("omega_d_min", p.omega_d_min).finite("omega_d_max", p.omega_d_max).at_least("points", p.points, 1);
    c.require(p.omega_d_max >= p.omega_d_min, "omega_d_max: must not be below omega_d_min");
    for (k, &s) in p.driven_sites.iter().enumerate() {
        c.require(s < p.n_sites, format!("driven_sites[{k}]: site {s} outside 0..{}", p.n_sites));
    }
    p.rates.check(&mut c);
    p.steady.check(&mut c);
    c.finish()?;

    let site = JcParams::new(p.omega_r, p.omega_q, p.g)?;
    let lattice = LatticeParams::chain(p.n_sites, site, p.hopping, Boundary::Open)?;
    let space = LatticeSpace::uniform(p.n_sites, p.n_max)?;
    let h = build_jchm(&lattice, &space)?;
    let rates = p.rates.dissipation();
    let omegas = linspace(p.omega_d_min, p.omega_d_max, p.points);
    let lowers = (0..p.n_sites).map(|s| space.photon_lower(s)).collect::<Result<Vec<_>, _>>()?;
    let opts = p.steady.options();
    let per_point: Vec<Vec<Vec<String>>> = omegas
        .par_iter()
        .map(|&omega_d| -> Result<_, CliError> {
            let drive = DriveSpec { xi: p.xi, omega_d, driven_sites: p.driven_sites.clone() };
            let l = build_liouvillian(&h, &rates, Some(&drive), &space)?;
            let ss = steady_state(&l, &opts)?;
            let mut rows = Vec::with_capacity(p.n_sites);
            for (s, a) in lowers.iter().enumerate() {
                let amp = expectation(a, &ss.rho)?;
                let n = expectation(&(&a.adjoint() * a), &ss.rho)?.re;
                let g2 = match g2_zero(&ss.rho, s, &space) {
                    Ok(v) => Some(v),
                    Err(LindbladError::VacuumCorrelation(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                rows.push(vec![num(omega_d), s.to_string(), num(amp.re), num(amp.im), num(n), opt(g2)]);
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = per_point.into_iter().flatten().collect();
    let n_rows = rows.len();
    out.csv("dimer_g2.csv", &["omega_d", "site", "re_a", "im_a", "n_photon", "g2"], rows)?;

    let mut s = summary(CommandName::DimerG2, &p, ctx)?;
    s.results = json!({ "rows": n_rows, "hilbert_dim": space.total_dim() });
    Ok(s)
}
