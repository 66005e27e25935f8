//! `blockade-scan`: single-site heterodyne transmission versus drive frequency.

use cqed_core::hilbert::LatticeSpace;
use cqed_core::jc_site::{polariton_energy, Branch, JcParams};
use cqed_core::jchm_lattice::LatticeParams;
use cqed_core::lindblad::{transmission_scan, ScanPoint};
use cqed_core::stats::fit_lorentzian;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_n_max, default_points, linspace, summary, Context, Rates, Steady};
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
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Drive amplitudes; one scan row block per value.
    pub xi: Vec<f64>,
    pub omega_d_min: f64,
    pub omega_d_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub rates: Rates,
    /// Extra photon loss through the output port.
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub steady: Steady,
}

pub const HEADER: [&str; 8] = ["xi", "omega_d", "re_a", "im_a", "abs_a", "abs_a_norm", "n_photon", "g2"];

pub fn check_common(c: &mut Checks, omega_r: f64, omega_q: f64, g: f64, n_max: usize) {
    c.positive("omega_r", omega_r).positive("omega_q", omega_q).non_negative("g", g).at_least("n_max", n_max, 1);
}

/// Local maxima of `ys` above `floor · max`, as indices.
pub fn peaks(ys: &[f64], floor: f64) -> Vec<usize> {
    let max = ys.iter().copied().fold(0.0, f64::max);
    (0..ys.len())
        .filter(|&k| {
            let left = k == 0 || ys[k] > ys[k - 1];
            let right = k + 1 == ys.len() || ys[k] >= ys[k + 1];
            left && right && ys[k] > floor * max && k != 0 && k + 1 != ys.len()
        })
        .collect()
}

pub struct Doublet {
    pub left: usize,
    pub right: usize,
    /// Lowest point between the two peaks.
    pub dip: usize,
}

/// The two strongest local maxima and the minimum between them.
pub fn doublet(ys: &[f64]) -> Option<Doublet> {
    let mut top = peaks(ys, 0.1);
    if top.len() < 2 {
        return None;
    }
    top.sort_by(|&i, &j| ys[j].total_cmp(&ys[i]));
    let (left, right) = (top[0].min(top[1]), top[0].max(top[1]));
    let dip = (left..=right).min_by(|&i, &j| ys[i].total_cmp(&ys[j]))?;
    Some(Doublet { left, right, dip })
}

fn describe(row: &[ScanPoint]) -> Value {
    let omegas: Vec<f64> = row.iter().map(|p| p.omega_d).collect();
    let power: Vec<f64> = row.iter().map(|p| p.abs_a * p.abs_a).collect();
    let abs: Vec<f64> = row.iter().map(|p| p.abs_a).collect();
    let peak_idx = peaks(&abs, 0.1);
    let mut result = json!({
        "xi": row[0].xi,
        "max_abs_a": abs.iter().copied().fold(0.0, f64::max),
        "peaks": peak_idx.iter().map(|&k| json!({ "omega_d": omegas[k], "abs_a": abs[k] })).collect::<Vec<_>>(),
        "lorentzian_fit": fit_lorentzian(&omegas, &power),
    });
    if let Some(d) = doublet(&abs) {
        result["doublet"] = json!({
            "dip_omega_d": omegas[d.dip],
            "dip_abs_a": abs[d.dip],
            "ratio_to_weaker_peak": abs[d.dip] / abs[d.left].min(abs[d.right]),
            "ratio_to_stronger_peak": abs[d.dip] / abs[d.left].max(abs[d.right]),
        });
    }
    result
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    check_common(&mut c, p.omega_r, p.omega_q, p.g, p.n_max);
    c.require(!p.xi.is_empty(), "xi: at least one drive amplitude is required");
    for (k, &x) in p.xi.iter().enumerate() {
        c.non_negative(&format!("xi[{k}]"), x);
    }
    c.finite("omega_d_min", p.omega_d_min).finite("omega_d_max", p.omega_d_max);
    c.require(p.omega_d_max >= p.omega_d_min, "omega_d_max: must not be below omega_d_min");
    c.at_least("points", p.points, 1).non_negative("kappa", p.kappa);
    p.rates.check(&mut c);
    p.steady.check(&mut c);
    c.finish()?;

    let site = JcParams::new(p.omega_r, p.omega_q, p.g)?;
    let lattice = LatticeParams::new(vec![site], vec![], true)?;
    let space = LatticeSpace::uniform(1, p.n_max)?;
    let mut rates = p.rates.dissipation();
    if p.kappa > 0.0 {
        rates = rates.with_port(0, p.kappa);
    }
    let omegas = linspace(p.omega_d_min, p.omega_d_max, p.points);
    let scan = transmission_scan(&lattice, &space, &rates, &[0], &p.xi, &omegas, &p.steady.options())?;
    let rows = scan.iter().map(|q| {
        vec![num(q.xi), num(q.omega_d), num(q.re_a), num(q.im_a), num(q.abs_a), num(q.abs_a_norm), num(q.n_photon), opt(q.g2)]
    });
    out.csv("blockade_scan.csv", &HEADER, rows)?;

    let mut s = summary(CommandName::BlockadeScan, &p, ctx)?;
    s.results = json!({
        "polariton_1_minus": polariton_energy(&site, 1, Branch::Minus),
        "polariton_1_plus": polariton_energy(&site, 1, Branch::Plus),
        "rows": scan.len(),
        "scans": scan.chunks(omegas.len()).map(describe).collect::<Vec<_>>(),
    });
    Ok(s)
}
