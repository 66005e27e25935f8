//! Normal modes of a capacitively loaded transmission-line resonator,
//! capacitive hopping between resonators and port decay rates.
//!
//! SI units throughout: henry and farad per metre, metres, farads, rad/s.
//! The resonator occupies `x ∈ [0, L_x]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative accuracy of the bisected roots.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of the normalization integral from unity.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
/// Coupling capacitance ratio above which nearest-neighbour hopping is suspect.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonatorError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("mode count must be at least 1")]
    NoModes,
    #[error("root for mode {mu} escaped its bracket [{lo}, {hi}]")]
    BracketEscape { mu: usize, lo: f64, hi: f64 },
    #[error("mode {mu} is not normalized: integral {integral}")]
    Unnormalized { mu: usize, integral: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    /// Inductance per unit length.
    pub ell: f64,
    /// Capacitance per unit length.
    pub c: f64,
    pub length: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

impl ResonatorSpec {
    pub fn new(ell: f64, c: f64, length: f64, c_minus: f64, c_plus: f64) -> Result<Self, ResonatorError> {
        let s = Self { ell, c, length, c_minus, c_plus };
        s.validate()?;
        Ok(s)
    }

    /// Builds a spec from the dimensionless end loadings χ∓ = C∓/(c L_x).
    pub fn from_chis(ell: f64, c: f64, length: f64, chi_minus: f64, chi_plus: f64) -> Result<Self, ResonatorError> {
        let total = c * length;
        Self::new(ell, c, length, chi_minus * total, chi_plus * total)
    }

    pub fn validate(&self) -> Result<(), ResonatorError> {
        for (name, value) in [("ell", self.ell), ("c", self.c), ("length", self.length)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ResonatorError::NonPositive { name, value });
            }
        }
        for (name, value) in [("c_minus", self.c_minus), ("c_plus", self.c_plus)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ResonatorError::Negative { name, value });
            }
        }
        Ok(())
    }

    pub fn chi_minus(&self) -> f64 {
        self.c_minus / self.total_capacitance()
    }

    pub fn chi_plus(&self) -> f64 {
        self.c_plus / self.total_capacitance()
    }

    pub fn total_capacitance(&self) -> f64 {
        self.c * self.length
    }

    /// `L_x √(ℓc)`, the factor converting ω to ω̄.
    pub fn time_of_flight(&self) -> f64 {
        self.length * (self.ell * self.c).sqrt()
    }
}

/// Which end of a resonator a coupler attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Minus,
    Plus,
}

/// A normal mode `Φ(x) = A cos(kx + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mode {
    pub mu: usize,
    pub omega_bar: f64,
    pub omega: f64,
    pub wavenumber: f64,
    pub phase: f64,
    pub amplitude: f64,
    spec: ResonatorSpec,
}

impl Mode {
    pub fn spec(&self) -> &ResonatorSpec {
        &self.spec
    }

    pub fn value(&self, x: f64) -> f64 {
        self.amplitude * (self.wavenumber * x + self.phase).cos()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -self.amplitude * self.wavenumber * (self.wavenumber * x + self.phase).sin()
    }

    pub fn end_value(&self, end: End) -> f64 {
        match end {
            End::Minus => self.value(0.0),
            End::Plus => self.value(self.spec.length),
        }
    }

    /// `n ≥ 2` equally spaced samples `(x, Φ(x))` over the resonator.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let x = self.spec.length * k as f64 / (n - 1) as f64;
                (x, self.value(x))
            })
            .collect()
    }

    /// `C₋Φ²(x₋) + C₊Φ²(x₊) + c∫Φ²dx` from the closed-form cosine integral.
    pub fn normalization(&self) -> f64 {
        let s = &self.spec;
        let (k, p, l) = (self.wavenumber, self.phase, s.length);
        let integral = 0.5 * l + ((2.0 * (k * l + p)).sin() - (2.0 * p).sin()) / (4.0 * k);
        s.c_minus * self.value(0.0).powi(2)
            + s.c_plus * self.value(l).powi(2)
            + s.c * self.amplitude * self.amplitude * integral
    }

    /// Same quantity with the bulk integral done by composite Simpson on
    /// `intervals` (rounded up to even) subintervals.
    pub fn normalization_quadrature(&self, intervals: usize) -> f64 {
        let s = &self.spec;
        let n = intervals.max(2).next_multiple_of(2);
        let h = s.length / n as f64;
        let f = |x: f64| self.value(x).powi(2);
        let mut sum = f(0.0) + f(s.length);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s.c_minus * f(0.0) + s.c_plus * f(s.length) + s.c * sum * h / 3.0
    }

    /// Relative residuals of `∓∂ₓΦ = ℓC∓ω²Φ` at the two ends.
    pub fn boundary_residuals(&self) -> [f64; 2] {
        let s = &self.spec;
        let w2 = self.omega * self.omega;
        let scale = self.amplitude * self.wavenumber;
        let minus = -self.derivative(0.0) - s.ell * s.c_minus * w2 * self.value(0.0);
        let plus = self.derivative(s.length) - s.ell * s.c_plus * w2 * self.value(s.length);
        [minus.abs() / scale, plus.abs() / scale]
    }

    pub fn check_normalized(&self) -> Result<(), ResonatorError> {
        let integral = self.normalization();
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ResonatorError::Unnormalized { mu: self.mu, integral });
        }
        Ok(())
    }
}

/// Left side of `ω̄ + atan(χ₋ω̄) + atan(χ₊ω̄) = μπ`, which is equivalent to
/// `tan ω̄ = −(χ₋+χ₊)ω̄ / (1 − χ₋χ₊ω̄²)` on the μ-th root and has no poles.
pub fn phase_function(omega_bar: f64, chi_minus: f64, chi_plus: f64) -> f64 {
    omega_bar + (chi_minus * omega_bar).atan() + (chi_plus * omega_bar).atan()
}

/// μ-th positive root of the mode equation, by bisection on `[(μ−1)π, μπ]`.
pub fn solve_omega_bar(mu: usize, chi_minus: f64, chi_plus: f64) -> Result<f64, ResonatorError> {
    if mu == 0 {
        return Err(ResonatorError::NoModes);
    }
    let target = mu as f64 * PI;
    let (mut lo, mut hi) = ((mu - 1) as f64 * PI, target);
    let f = |w: f64| phase_function(w, chi_minus, chi_plus) - target;
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(ResonatorError::BracketEscape { mu, lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 0.25 * ROOT_TOLERANCE * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The first `count` normal modes, normalized.
pub fn solve_modes(spec: &ResonatorSpec, count: usize) -> Result<Vec<Mode>, ResonatorError> {
    spec.validate()?;
    if count == 0 {
        return Err(ResonatorError::NoModes);
    }
    let (chi_m, chi_p) = (spec.chi_minus(), spec.chi_plus());
    (1..=count)
        .map(|mu| {
            let omega_bar = solve_omega_bar(mu, chi_m, chi_p)?;
            let wavenumber = omega_bar / spec.length;
            let mut mode = Mode {
                mu,
                omega_bar,
                omega: omega_bar / spec.time_of_flight(),
                wavenumber,
                phase: (chi_m * omega_bar).atan(),
                amplitude: 1.0,
                spec: *spec,
            };
            mode.amplitude = mode.normalization().sqrt().recip();
            mode.check_normalized()?;
            Ok(mode)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hopping {
    pub j: f64,
    /// Largest `C_c / (c L_x)` of the two resonators.
    pub coupling_ratio: f64,
    pub weak_coupling: bool,
}

/// `J = ½ √(ω ω') C_c Φ(end) Φ'(end')` for a coupling capacitor joining
/// `end_a` of one resonator to `end_b` of another.
pub fn hopping_amplitude(
    mode_a: &Mode,
    end_a: End,
    mode_b: &Mode,
    end_b: End,
    c_coupling: f64,
) -> Result<Hopping, ResonatorError> {
    if !(c_coupling >= 0.0 && c_coupling.is_finite()) {
        return Err(ResonatorError::Negative { name: "c_coupling", value: c_coupling });
    }
    mode_a.check_normalized()?;
    mode_b.check_normalized()?;
    let coupling_ratio = (c_coupling / mode_a.spec.total_capacitance()).max(c_coupling / mode_b.spec.total_capacitance());
    let weak_coupling = coupling_ratio <= WEAK_COUPLING_LIMIT;
    if !weak_coupling {
        log::warn!("coupling capacitance ratio {coupling_ratio:.3} exceeds {WEAK_COUPLING_LIMIT}; nearest-neighbour hopping is unreliable");
    }
    let j = 0.5 * (mode_a.omega * mode_b.omega).sqrt() * c_coupling * mode_a.end_value(end_a) * mode_b.end_value(end_b);
    Ok(Hopping { j, coupling_ratio, weak_coupling })
}

/// κ = 4 Z₀² C_o² ω³.
pub fn port_rate(z0: f64, c_out: f64, omega_r: f64) -> Result<f64, ResonatorError> {
    for (name, value) in [("z0", z0), ("c_out", c_out), ("omega_r", omega_r)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ResonatorError::NonPositive { name, value });
        }
    }
    Ok(4.0 * z0 * z0 * c_out * c_out * omega_r.powi(3))
}
