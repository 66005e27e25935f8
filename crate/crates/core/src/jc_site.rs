//! Single-site Jaynes-Cummings physics: Hamiltonian, dressed states,
//! polariton energies, effective Hubbard-U and linewidth.
//!
//! Units are ħ = 1 with angular frequencies throughout.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{Operator, SiteSpace, StateVector, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcError {
    #[error("coupling g must be non-negative, got {0}")]
    NegativeCoupling(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositiveFrequency { name: &'static str, value: f64 },
    #[error("rate {name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("excitation number must be at least 1 for a polariton, got {0}")]
    ZeroExcitation(usize),
    #[error("excitation number {n} exceeds the photon cutoff {n_max}")]
    ExceedsCutoff { n: usize, n_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcParams {
    pub omega_r: f64,
    pub omega_q: f64,
    pub g: f64,
}

impl JcParams {
    pub fn new(omega_r: f64, omega_q: f64, g: f64) -> Result<Self, JcError> {
        let p = Self { omega_r, omega_q, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), JcError> {
        if !(self.omega_r > 0.0) {
            return Err(JcError::NonPositiveFrequency { name: "omega_r", value: self.omega_r });
        }
        if !(self.omega_q > 0.0) {
            return Err(JcError::NonPositiveFrequency { name: "omega_q", value: self.omega_q });
        }
        if !(self.g >= 0.0) {
            return Err(JcError::NegativeCoupling(self.g));
        }
        Ok(())
    }

    /// δ = ω_r − ω_q.
    pub fn detuning(&self) -> f64 {
        self.omega_r - self.omega_q
    }

    /// χ_n = √(g²n + δ²/4).
    pub fn chi(&self, n: usize) -> f64 {
        let half = 0.5 * self.detuning();
        (self.g * self.g * n as f64 + half * half).sqrt()
    }

    /// Mixing angle θ_n ∈ [0, π/2] with tan θ_n = 2g√n / (δ + 2χ_n).
    pub fn mixing_angle(&self, n: usize) -> f64 {
        let delta = self.detuning();
        let coupling = 2.0 * self.g * (n as f64).sqrt();
        let chi = self.chi(n);
        if delta >= 0.0 {
            let denom = delta + 2.0 * chi;
            if coupling == 0.0 && denom == 0.0 {
                std::f64::consts::FRAC_PI_4
            } else {
                coupling.atan2(denom)
            }
        } else {
            // δ + 2χ = 4g²n / (2χ − δ) without cancellation; tan θ inverted
            FRAC_PI_2 - coupling.atan2(2.0 * chi - delta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

/// One rung of the Jaynes-Cummings ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonLevel {
    pub n: usize,
    pub branch: Branch,
    pub energy: f64,
    pub theta: f64,
    pub chi: f64,
}

pub fn polariton(p: &JcParams, n: usize, branch: Branch) -> Result<PolaritonLevel, JcError> {
    if n == 0 {
        return Err(JcError::ZeroExcitation(0));
    }
    Ok(PolaritonLevel {
        n,
        branch,
        energy: polariton_energy(p, n, branch),
        theta: p.mixing_angle(n),
        chi: p.chi(n),
    })
}

/// ε_n^± = ω_r n − δ/2 ± χ_n, and ε_0 = 0 for the undressed ground state.
pub fn polariton_energy(p: &JcParams, n: usize, branch: Branch) -> f64 {
    if n == 0 {
        return 0.0;
    }
    p.omega_r * n as f64 - 0.5 * p.detuning() + branch.sign() * p.chi(n)
}

/// Site Hamiltonian `ω_r a†a + ω_q σ⁺σ⁻ + g(a†σ⁻ + aσ⁺)`, plus the
/// counter-rotating `g(a†σ⁺ + aσ⁻)` when `rwa` is false.
pub fn jc_hamiltonian(p: &JcParams, space: &SiteSpace, rwa: bool) -> Operator {
    let mut entries = Vec::new();
    for n in 0..=space.photon_cutoff() {
        for e in [false, true] {
            let k = space.index(n, e);
            let diag = p.omega_r * n as f64 + if e { p.omega_q } else { 0.0 };
            entries.push((k, k, C64::new(diag, 0.0)));
        }
        if n >= 1 {
            // ⟨n,g| a†σ⁻ |n−1,e⟩ = √n
            let amp = C64::new(p.g * (n as f64).sqrt(), 0.0);
            let (up, down) = (space.index(n, false), space.index(n - 1, true));
            entries.push((up, down, amp));
            entries.push((down, up, amp));
            if !rwa {
                // ⟨n,e| a†σ⁺ |n−1,g⟩ = √n
                let (up, down) = (space.index(n, true), space.index(n - 1, false));
                entries.push((up, down, amp));
                entries.push((down, up, amp));
            }
        }
    }
    Operator::from_triplets(space.dim(), entries).with_hermitian_hint()
}

/// Dressed eigenvector `|n ±⟩` in the site basis.
///
/// `|n+⟩ = cos θ_n |n,g⟩ + sin θ_n |n−1,e⟩` and
/// `|n−⟩ = sin θ_n |n,g⟩ − cos θ_n |n−1,e⟩`, the assignment that makes
/// `|n±⟩` eigenvectors with eigenvalue `ε_n^±` for either sign of δ.
pub fn dressed_state(p: &JcParams, n: usize, branch: Branch, space: &SiteSpace) -> Result<StateVector, JcError> {
    if n == 0 {
        return Err(JcError::ZeroExcitation(0));
    }
    if n > space.photon_cutoff() {
        return Err(JcError::ExceedsCutoff { n, n_max: space.photon_cutoff() });
    }
    let theta = p.mixing_angle(n);
    let (photon_amp, qubit_amp) = match branch {
        Branch::Plus => (theta.cos(), theta.sin()),
        Branch::Minus => (theta.sin(), -theta.cos()),
    };
    let mut v = StateVector::zeros(space.dim());
    v[space.index(n, false)] = C64::new(photon_amp, 0.0);
    v[space.index(n - 1, true)] = C64::new(qubit_amp, 0.0);
    Ok(v)
}

/// U = (ε₂ − ε₁) − (ε₁ − ε₀) on the chosen branch.
pub fn hubbard_u(p: &JcParams, branch: Branch) -> f64 {
    let e1 = polariton_energy(p, 1, branch);
    let e2 = polariton_energy(p, 2, branch);
    (e2 - e1) - e1
}

/// Branch whose n = 1 polariton is photon-like (the one that stays near ω_r
/// in the dispersive limit).
pub fn photon_like_branch(p: &JcParams) -> Branch {
    if p.detuning() >= 0.0 {
        Branch::Plus
    } else {
        Branch::Minus
    }
}

/// δε = (γ₁ + 2γ_φ + γ_κ)/2.
pub fn linewidth(gamma1: f64, gamma_phi: f64, gamma_kappa: f64) -> Result<f64, JcError> {
    for (name, value) in [("gamma1", gamma1), ("gamma_phi", gamma_phi), ("gamma_kappa", gamma_kappa)] {
        if !(value >= 0.0) {
            return Err(JcError::NegativeRate { name, value });
        }
    }
    Ok(0.5 * (gamma1 + 2.0 * gamma_phi + gamma_kappa))
}

/// Numeric and analytic ladder side by side, for all n ≤ `max_n`.
pub fn ladder(p: &JcParams, max_n: usize) -> Vec<PolaritonLevel> {
    (1..=max_n)
        .flat_map(|n| [Branch::Minus, Branch::Plus].map(|b| polariton(p, n, b).expect("n ≥ 1")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::expectation;
    use crate::hilbert::DensityMatrix;
    use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, overlap};
    use approx::assert_relative_eq;

    fn params(omega_r: f64, omega_q: f64, g: f64) -> JcParams {
        JcParams::new(omega_r, omega_q, g).unwrap()
    }

    /// Eigenvalues of the numeric Hamiltonian restricted to |n,g⟩, |n−1,e⟩.
    fn numeric_doublet(p: &JcParams, space: &SiteSpace, n: usize) -> (f64, f64) {
        let h = jc_hamiltonian(p, space, true).to_dense();
        let (vals, vecs) = hermitian_eigen(&h);
        let mut found: Vec<f64> = (0..vals.len())
            .filter(|&k| {
                let w = vecs[(space.index(n, false), k)].norm_sqr() + vecs[(space.index(n - 1, true), k)].norm_sqr();
                w > 0.5
            })
            .map(|k| vals[k])
            .collect();
        found.sort_by(f64::total_cmp);
        assert_eq!(found.len(), 2, "doublet for n = {n}");
        (found[0], found[1])
    }

    #[test]
    fn uncoupled_spectrum() {
        let p = params(5.0, 4.3, 0.0);
        let space = SiteSpace::new(3).unwrap();
        let vals = hermitian_eigenvalues(&jc_hamiltonian(&p, &space, true).to_dense());
        let mut expected: Vec<f64> = (0..=3).flat_map(|n| [5.0 * n as f64, 5.0 * n as f64 + 4.3]).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&expected) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn resonant_vacuum_rabi_doublet() {
        let p = params(5.0, 5.0, 0.1);
        let (lo, hi) = numeric_doublet(&p, &SiteSpace::new(4).unwrap(), 1);
        assert_relative_eq!(lo, 4.9, epsilon = 1e-12);
        assert_relative_eq!(hi, 5.1, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_energies() {
        let p = params(5.0, 5.0, 0.1);
        assert_relative_eq!(polariton_energy(&p, 1, Branch::Plus), 5.1, epsilon = 1e-14);
        assert_relative_eq!(polariton_energy(&p, 1, Branch::Minus), 4.9, epsilon = 1e-14);
        assert_relative_eq!(polariton_energy(&p, 2, Branch::Plus), 10.0 + 0.1 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(polariton_energy(&p, 2, Branch::Minus), 10.0 - 0.1 * 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(polariton_energy(&p, 0, Branch::Plus), 0.0);
        assert!(polariton(&p, 0, Branch::Minus).is_err());
    }

    #[test]
    fn uncoupled_limit_of_lower_branch() {
        // χ_n → δ/2 as g → 0, so ε_n^− → nω_r − δ
        let p = params(5.0, 4.0, 0.0);
        for n in 1..4 {
            assert_relative_eq!(polariton_energy(&p, n, Branch::Minus), 5.0 * n as f64 - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectrum_matches_closed_form_all_rungs() {
        let space = SiteSpace::new(6).unwrap();
        for (omega_q, g) in [(5.0, 0.05), (4.8, 0.1), (5.3, 0.02)] {
            let p = params(5.0, omega_q, g);
            for n in 1..=6 {
                let (lo, hi) = numeric_doublet(&p, &space, n);
                assert_relative_eq!(lo, polariton_energy(&p, n, Branch::Minus), max_relative = 1e-10);
                assert_relative_eq!(hi, polariton_energy(&p, n, Branch::Plus), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn dressed_states_resonant_weights() {
        let p = params(5.0, 5.0, 0.1);
        let space = SiteSpace::new(3).unwrap();
        for n in 1..=3 {
            for b in [Branch::Plus, Branch::Minus] {
                let v = dressed_state(&p, n, b, &space).unwrap();
                assert_relative_eq!(v[space.index(n, false)].norm(), 0.5f64.sqrt(), epsilon = 1e-14);
                assert_relative_eq!(v[space.index(n - 1, true)].norm(), 0.5f64.sqrt(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dressed_states_match_numeric_eigenvectors() {
        let space = SiteSpace::new(5).unwrap();
        // includes the near-uncoupled check at g = 1e-6 on both detuning signs
        for (omega_q, g) in [(5.0, 0.1), (4.7, 0.1), (5.4, 0.03), (4.0, 1e-6), (6.0, 1e-6)] {
            let p = params(5.0, omega_q, g);
            let h = jc_hamiltonian(&p, &space, true);
            for n in 1..=5 {
                for b in [Branch::Plus, Branch::Minus] {
                    let v = dressed_state(&p, n, b, &space).unwrap();
                    let hv = h.mul_vec(&v).unwrap();
                    let e = polariton_energy(&p, n, b);
                    let resid = (&hv - &v * C64::new(e, 0.0)).norm();
                    assert!(resid < 1e-10 * e.abs(), "residual {resid} for n={n} {b} ωq={omega_q} g={g}");
                    let (vals, vecs) = hermitian_eigen(&h.to_dense());
                    let k = vals
                        .iter()
                        .enumerate()
                        .min_by(|a, b2| (a.1 - e).abs().total_cmp(&(b2.1 - e).abs()))
                        .unwrap()
                        .0;
                    if g > 1e-3 {
                        assert!(overlap(&v, &vecs.column(k).into_owned()) >= 1.0 - 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn dressed_state_limits_for_vanishing_coupling() {
        let space = SiteSpace::new(3).unwrap();
        // δ > 0: upper branch is the photon state |n,g⟩
        let p = params(5.0, 4.0, 1e-6);
        let v = dressed_state(&p, 2, Branch::Plus, &space).unwrap();
        assert!(v[space.index(2, false)].norm() > 1.0 - 1e-9);
        // δ < 0: upper branch is the qubit state |n−1,e⟩
        let p = params(5.0, 6.0, 1e-6);
        let v = dressed_state(&p, 2, Branch::Plus, &space).unwrap();
        assert!(v[space.index(1, true)].norm() > 1.0 - 1e-9);
        let p = params(5.0, 6.0, 0.0);
        assert_relative_eq!(p.mixing_angle(1), FRAC_PI_2);
    }

    #[test]
    fn dressed_states_orthonormal() {
        let p = params(5.0, 4.8, 0.07);
        let space = SiteSpace::new(4).unwrap();
        let states: Vec<_> = (1..=4)
            .flat_map(|n| [Branch::Plus, Branch::Minus].map(|b| dressed_state(&p, n, b, &space).unwrap()))
            .collect();
        for (i, u) in states.iter().enumerate() {
            for (j, v) in states.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(u.dotc(v).norm(), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dressed_state_beyond_cutoff() {
        let p = params(5.0, 5.0, 0.1);
        let err = dressed_state(&p, 4, Branch::Plus, &SiteSpace::new(3).unwrap());
        assert_eq!(err, Err(JcError::ExceedsCutoff { n: 4, n_max: 3 }));
    }

    #[test]
    fn hubbard_u_values() {
        let g = 0.1;
        let p = params(5.0, 5.0, g);
        assert_relative_eq!(hubbard_u(&p, Branch::Minus), g * (2.0 - 2f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(hubbard_u(&p, Branch::Minus) / g, 0.585786, epsilon = 1e-6);
        let uncoupled = params(5.0, 4.5, 0.0);
        assert_eq!(hubbard_u(&uncoupled, photon_like_branch(&uncoupled)), 0.0);
        let uncoupled = params(5.0, 5.5, 0.0);
        assert_eq!(hubbard_u(&uncoupled, photon_like_branch(&uncoupled)), 0.0);
    }

    #[test]
    fn hubbard_u_matches_numeric_ladder() {
        let space = SiteSpace::new(4).unwrap();
        for omega_q in [5.0, 4.9, 5.15] {
            let p = params(5.0, omega_q, 0.1);
            let (m1, p1) = numeric_doublet(&p, &space, 1);
            let (m2, p2) = numeric_doublet(&p, &space, 2);
            assert_relative_eq!(hubbard_u(&p, Branch::Minus), m2 - 2.0 * m1, epsilon = 1e-10);
            assert_relative_eq!(hubbard_u(&p, Branch::Plus), p2 - 2.0 * p1, epsilon = 1e-10);
        }
    }

    #[test]
    fn dispersive_u_scales_as_inverse_cube() {
        let g = 0.01;
        let u = |ratio: f64| {
            let p = params(5.0, 5.0 - ratio * g, g);
            hubbard_u(&p, photon_like_branch(&p)).abs()
        };
        let ratios = [20.0, 40.0, 80.0];
        let xs: Vec<f64> = ratios.iter().map(|r: &f64| r.ln()).collect();
        let ys: Vec<f64> = ratios.iter().map(|&r| u(r).ln()).collect();
        let slope = crate::stats::least_squares_slope(&xs, &ys);
        assert!((slope + 3.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn linewidth_cases() {
        assert_eq!(linewidth(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(linewidth(2.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(linewidth(1.0, 1.0, 1.0).unwrap(), 2.0);
        assert!(linewidth(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rwa_conserves_excitations() {
        let space = SiteSpace::new(4).unwrap();
        let p = params(5.0, 4.9, 0.2);
        let n = space.excitation_number();
        assert_eq!(jc_hamiltonian(&p, &space, true).commutator(&n).unwrap().max_abs(), 0.0);
        assert!(jc_hamiltonian(&p, &space, false).commutator(&n).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn rabi_hamiltonian_is_hermitian_with_vacuum_shift() {
        let space = SiteSpace::new(8).unwrap();
        let p = params(1.0, 1.0, 0.05);
        let h = jc_hamiltonian(&p, &space, false);
        assert!(h.is_hermitian(1e-12));
        // counter-rotating terms lower the ground energy below zero (Bloch-Siegert)
        let vals = hermitian_eigenvalues(&h.to_dense());
        assert!(vals[0] < 0.0);
        let vac = DensityMatrix::basis(space.dim(), 0);
        assert_eq!(expectation(&h, &vac).unwrap().re, 0.0);
    }
}
