//! `jc-spectrum`: analytic polariton ladder against exact diagonalization.

use cqed_core::hilbert::SiteSpace;
use cqed_core::jc_site::{hubbard_u, jc_hamiltonian, linewidth, photon_like_branch, polariton_energy, Branch, JcParams};
use cqed_core::linalg::hermitian_eigenvalues;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{default_n_max, default_true, summary, Context, Rates};
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
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_true")]
    pub rwa: bool,
    /// Relative agreement required between analytic and numeric levels.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub rates: Rates,
}

fn default_tolerance() -> f64 {
    1e-10
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.positive("omega_r", p.omega_r).positive("omega_q", p.omega_q).non_negative("g", p.g).at_least("n_max", p.n_max, 2);
    c.positive("tolerance", p.tolerance);
    p.rates.check(&mut c);
    c.finish()?;

    let site = JcParams::new(p.omega_r, p.omega_q, p.g)?;
    let space = SiteSpace::new(p.n_max)?;
    let numeric = hermitian_eigenvalues(&jc_hamiltonian(&site, &space, p.rwa).to_dense());
    let mut used = vec![false; numeric.len()];
    let mut rows = Vec::new();
    let mut max_error = 0.0f64;
    let mut levels = vec![(0usize, None, 0.0)];
    for n in 1..p.n_max {
        for b in [Branch::Minus, Branch::Plus] {
            levels.push((n, Some(b), polariton_energy(&site, n, b)));
        }
    }
    for (n, branch, analytic) in levels {
        // nearest unused numeric eigenvalue
        let k = (0..numeric.len())
            .filter(|&k| !used[k])
            .min_by(|&i, &j| (numeric[i] - analytic).abs().total_cmp(&(numeric[j] - analytic).abs()))
            .expect("spectrum has more levels than the analytic ladder");
        used[k] = true;
        let scale = analytic.abs().max(p.omega_r);
        let err = (numeric[k] - analytic).abs() / scale;
        max_error = max_error.max(err);
        let label = branch.map_or("0".to_string(), |b| b.to_string());
        rows.push(vec![n.to_string(), label, num(analytic), num(numeric[k]), num(err)]);
    }
    out.csv("jc_spectrum.csv", &["n", "branch", "energy_analytic", "energy_numeric", "relative_error"], rows)?;

    let mut s = summary(CommandName::JcSpectrum, &p, ctx)?;
    s.converged = !p.rwa || max_error <= p.tolerance;
    if !p.rwa {
        s.warnings.push("rwa = false: numeric levels include counter-rotating shifts absent from the analytic ladder".into());
    }
    s.results = json!({
        "detuning": site.detuning(),
        "max_relative_error": max_error,
        "hubbard_u": { "minus": hubbard_u(&site, Branch::Minus), "plus": hubbard_u(&site, Branch::Plus) },
        "photon_like_branch": photon_like_branch(&site).to_string(),
        "linewidth": linewidth(p.rates.gamma1, p.rates.gamma_phi, p.rates.gamma_kappa)?,
        "eigenvalues": numeric,
    });
    Ok(s)
}
