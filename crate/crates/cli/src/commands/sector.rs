//! `sector-nonlinearity`: finite-chain blockade from sector ground energies.

use cqed_core::jchm_lattice::{nonlinearity_leading_order, nonlinearity_with_cutoff_check, periodic_chain_at_band_bottom};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{summary, Context};
use crate::config::Checks;
use crate::error::CliError;
use crate::output::{num, Output, Summary};
use crate::CommandName;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub omega_r: f64,
    pub g: f64,
    /// Hopping J on every bond; negative values put k = 0 at the band bottom.
    pub hopping: f64,
    #[serde(default = "default_sizes")]
    pub n_sites: Vec<usize>,
    #[serde(default = "default_cutoff")]
    pub n_max: usize,
    /// Relative shift of U allowed when the cutoff is raised by two.
    #[serde(default = "default_cutoff_tolerance")]
    pub cutoff_tolerance: f64,
}

fn default_sizes() -> Vec<usize> {
    vec![2, 3, 4]
}

fn default_cutoff() -> usize {
    4
}

fn default_cutoff_tolerance() -> f64 {
    1e-6
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.positive("omega_r", p.omega_r).positive("g", p.g).finite("hopping", p.hopping).at_least("n_max", p.n_max, 2);
    c.positive("cutoff_tolerance", p.cutoff_tolerance);
    c.require(!p.n_sites.is_empty(), "n_sites: at least one chain length is required");
    for (k, &n) in p.n_sites.iter().enumerate() {
        c.at_least(&format!("n_sites[{k}]"), n, 1);
    }
    c.finish()?;

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut converged = true;
    for &n in &p.n_sites {
        let lattice = periodic_chain_at_band_bottom(n, p.omega_r, p.g, p.hopping)?;
        let check = nonlinearity_with_cutoff_check(&lattice, p.n_max, p.cutoff_tolerance)?;
        let measured = check.value[0];
        let leading = nonlinearity_leading_order(p.g, n);
        let rel = (measured - leading) / leading;
        converged &= check.converged;
        rows.push(vec![n.to_string(), num(measured), num(leading), num(rel)]);
        entries.push(json!({
            "n_sites": n,
            "u_measured": measured,
            "u_leading_order": leading,
            "qubit_frequency": lattice.sites()[0].omega_q,
            "cutoff_check": check,
        }));
    }
    out.csv("sector_nonlinearity.csv", &["n_sites", "u_measured", "u_leading_order", "relative_difference"], rows)?;

    let mut s = summary(CommandName::SectorNonlinearity, &p, ctx)?;
    s.converged = converged;
    s.results = json!({ "chains": entries });
    Ok(s)
}
