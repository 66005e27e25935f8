//! `modes`: transmission-line resonator normal modes, hopping and port rate.
//! SI inputs; frequencies are also reported divided by `frequency_unit`.

use cqed_core::resonator::{hopping_amplitude, port_rate, solve_modes, End, ResonatorSpec};
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
    /// Inductance per unit length, H/m.
    pub ell: f64,
    /// Capacitance per unit length, F/m.
    pub c: f64,
    pub length: f64,
    pub c_minus: Option<f64>,
    pub c_plus: Option<f64>,
    pub chi_minus: Option<f64>,
    pub chi_plus: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Samples of each mode function written to `mode_functions.csv`.
    #[serde(default)]
    pub samples: usize,
    /// Coupling capacitance joining the `+` end of one copy to the `−` end of the next.
    pub c_coupling: Option<f64>,
    /// Port line impedance and output capacitance for κ.
    pub z0: Option<f64>,
    pub c_out: Option<f64>,
    /// Angular frequency, in rad/s, of one reported frequency unit.
    #[serde(default = "default_unit")]
    pub frequency_unit: f64,
}

fn default_count() -> usize {
    3
}

fn default_unit() -> f64 {
    1.0
}

fn end_capacitance(c: &mut Checks, name: &str, direct: Option<f64>, chi: Option<f64>, total: f64) -> f64 {
    match (direct, chi) {
        (Some(v), None) => v,
        (None, Some(x)) => x * total,
        (None, None) => 0.0,
        (Some(_), Some(_)) => {
            c.require(false, format!("{name}: give either c_{name} or chi_{name}, not both"));
            0.0
        }
    }
}

pub fn run(p: Params, ctx: &Context, out: &mut Output) -> Result<Summary, CliError> {
    let mut c = Checks::default();
    c.positive("ell", p.ell).positive("c", p.c).positive("length", p.length).at_least("count", p.count, 1);
    c.positive("frequency_unit", p.frequency_unit);
    let total = p.c * p.length;
    let c_minus = end_capacitance(&mut c, "minus", p.c_minus, p.chi_minus, total);
    let c_plus = end_capacitance(&mut c, "plus", p.c_plus, p.chi_plus, total);
    c.non_negative("c_minus", c_minus).non_negative("c_plus", c_plus);
    if let Some(cc) = p.c_coupling {
        c.non_negative("c_coupling", cc);
    }
    c.require(p.z0.is_some() == p.c_out.is_some(), "z0: z0 and c_out must be given together");
    c.finish()?;

    let spec = ResonatorSpec::new(p.ell, p.c, p.length, c_minus, c_plus)?;
    let modes = solve_modes(&spec, p.count)?;
    out.csv(
        "modes.csv",
        &["mu", "omega_bar", "omega", "phi_minus", "phi_plus"],
        modes.iter().map(|m| {
            vec![m.mu.to_string(), num(m.omega_bar), num(m.omega), num(m.end_value(End::Minus)), num(m.end_value(End::Plus))]
        }),
    )?;
    if p.samples > 0 {
        let rows = modes.iter().flat_map(|m| m.sample(p.samples).into_iter().map(|(x, v)| vec![m.mu.to_string(), num(x), num(v)]));
        out.csv("mode_functions.csv", &["mu", "x", "phi"], rows)?;
    }

    let mut s = summary(CommandName::Modes, &p, ctx)?;
    let unit = p.frequency_unit;
    let mut mode_info = Vec::new();
    for m in &modes {
        let mut entry = json!({
            "mu": m.mu,
            "omega_bar": m.omega_bar,
            "omega": m.omega,
            "omega_in_units": m.omega / unit,
            "normalization": m.normalization(),
            "boundary_residuals": m.boundary_residuals(),
        });
        if let Some(cc) = p.c_coupling {
            let h = hopping_amplitude(m, End::Plus, m, End::Minus, cc)?;
            if !h.weak_coupling {
                s.warnings.push(format!("mode {}: coupling ratio {:.3} is not small", m.mu, h.coupling_ratio));
            }
            entry["hopping"] = json!({ "j": h.j, "j_in_units": h.j / unit, "coupling_ratio": h.coupling_ratio });
        }
        if let (Some(z0), Some(c_out)) = (p.z0, p.c_out) {
            let kappa = port_rate(z0, c_out, m.omega)?;
            entry["kappa"] = json!({ "rate": kappa, "rate_in_units": kappa / unit });
        }
        mode_info.push(entry);
    }
    s.results = json!({ "chi_minus": spec.chi_minus(), "chi_plus": spec.chi_plus(), "modes": mode_info });
    Ok(s)
}
