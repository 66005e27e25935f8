//! Lindblad master equation in the rotating frame of a coherent drive:
//! Liouvillian assembly, time evolution, steady states and blockade
//! observables.
//!
//! Dissipators are `𝒟[L]ρ = LρL† − ½{L†L, ρ}` with jump operators
//! `√γ₁ σ⁻`, `√γ_φ σ^z` and `√(γ_κ + κ_port) a` on every site.

use std::collections::BTreeMap;

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{expectation, DensityHealth, DensityMatrix, HilbertError, LatticeSpace, Operator, C64, I};
use crate::integrate::{integrate, IntegrationError, StepControl, StepStats};
use crate::jchm_lattice::{build_jchm, LatticeError, LatticeParams};

/// Smallest `⟨a†a⟩` for which `g²(0)` is reported.
pub const PHOTON_FLOOR: f64 = 1e-12;
/// Condition estimate above which the steady-state system counts as singular.
pub const DEGENERACY_CONDITION: f64 = 1e12;
/// Relative bound `‖L(ρ)‖ ≤ tol · ‖L‖` for an accepted steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("Hamiltonian dimension {hamiltonian} does not match Hilbert space dimension {space}")]
    DimensionMismatch { hamiltonian: usize, space: usize },
    #[error("rate {name} must be non-negative, got {value}")]
    NegativeRate { name: String, value: f64 },
    #[error("drive amplitude must be non-negative, got {0}")]
    NegativeDrive(f64),
    #[error("drive frequency must be finite, got {0}")]
    InvalidDriveFrequency(f64),
    #[error("site {site} out of range for a lattice of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("a drive requires an excitation-conserving Hamiltonian (commutator norm {0:.3e}); disable counter-rotating terms")]
    NotNumberConserving(f64),
    #[error("steady state requested for a Liouvillian without dissipation")]
    NotDissipative,
    #[error("steady state is not unique (condition estimate {condition:.3e})")]
    DegenerateSteadyState { condition: f64 },
    #[error("steady state not reached by t = {t:.6e}: last change {change:.3e} above {tolerance:.1e}")]
    NotConverged { t: f64, change: f64, tolerance: f64 },
    #[error("steady-state residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("initial density matrix is invalid: {0:?}")]
    InvalidInitialState(DensityHealth),
    #[error("photon number {0:.3e} below floor; g2(0) undefined")]
    VacuumCorrelation(f64),
    #[error("sparse LU failed: {0}")]
    Factorization(String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationRates {
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    #[serde(default)]
    pub gamma_kappa: f64,
    /// Additional photon loss at output-port sites.
    #[serde(default)]
    pub kappa_ports: BTreeMap<usize, f64>,
}

impl DissipationRates {
    pub fn uniform(gamma1: f64, gamma_phi: f64, gamma_kappa: f64) -> Self {
        Self { gamma1, gamma_phi, gamma_kappa, kappa_ports: BTreeMap::new() }
    }

    pub fn with_port(mut self, site: usize, kappa: f64) -> Self {
        self.kappa_ports.insert(site, kappa);
        self
    }

    pub fn validate(&self, n_sites: usize) -> Result<(), LindbladError> {
        for (name, value) in [("gamma1", self.gamma1), ("gamma_phi", self.gamma_phi), ("gamma_kappa", self.gamma_kappa)] {
            if !(value >= 0.0) {
                return Err(LindbladError::NegativeRate { name: name.into(), value });
            }
        }
        for (&site, &value) in &self.kappa_ports {
            if site >= n_sites {
                return Err(LindbladError::SiteOutOfRange { site, n_sites });
            }
            if !(value >= 0.0) {
                return Err(LindbladError::NegativeRate { name: format!("kappa_ports[{site}]"), value });
            }
        }
        Ok(())
    }

    /// Total photon loss rate on `site`; port and uniform losses add.
    pub fn photon_loss(&self, site: usize) -> f64 {
        self.gamma_kappa + self.kappa_ports.get(&site).copied().unwrap_or(0.0)
    }

    /// Sites whose field is detected: the ports, or every site if none.
    pub fn output_sites(&self, n_sites: usize) -> Vec<usize> {
        if self.kappa_ports.is_empty() {
            (0..n_sites).collect()
        } else {
            self.kappa_ports.keys().copied().collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub xi: f64,
    pub omega_d: f64,
    pub driven_sites: Vec<usize>,
}

impl DriveSpec {
    pub fn validate(&self, n_sites: usize) -> Result<(), LindbladError> {
        if !(self.xi >= 0.0) {
            return Err(LindbladError::NegativeDrive(self.xi));
        }
        if !self.omega_d.is_finite() {
            return Err(LindbladError::InvalidDriveFrequency(self.omega_d));
        }
        if let Some(&site) = self.driven_sites.iter().find(|&&s| s >= n_sites) {
            return Err(LindbladError::SiteOutOfRange { site, n_sites });
        }
        Ok(())
    }
}

/// `ℒρ = −i(H_nh ρ − ρ H_nh†) + Σ_k c_k ρ c_k†` with `H_nh = H − (i/2)Σ c†c`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    hamiltonian: Operator,
    h_nh: Operator,
    h_nh_adj: Operator,
    jumps: Vec<(Operator, Operator)>,
    rotating_frame: bool,
    superop: Operator,
}

impl Liouvillian {
    /// Assembles the generator from a Hamiltonian and jump operators
    /// (already scaled by the square roots of their rates).
    pub fn from_parts(hamiltonian: Operator, jumps: Vec<Operator>, rotating_frame: bool) -> Self {
        let dim = hamiltonian.dim();
        let mut decay = Operator::zeros(dim);
        for c in &jumps {
            decay = &decay + &(&c.adjoint() * c);
        }
        let h_nh = &hamiltonian - &decay.scale(C64::new(0.0, 0.5));
        let h_nh_adj = h_nh.adjoint();
        let jumps: Vec<_> = jumps.into_iter().map(|c| {
            let adj = c.adjoint();
            (c, adj)
        }).collect();
        let superop = Operator::from_triplets(dim * dim, superoperator_entries(&h_nh, &jumps));
        Self { hamiltonian, h_nh, h_nh_adj, jumps, rotating_frame, superop }
    }

    /// Same dissipators with `term` added to the Hamiltonian (already in the
    /// frame of this Liouvillian).
    pub fn with_added_hamiltonian(&self, term: &Operator) -> Self {
        let jumps = self.jumps.iter().map(|(c, _)| c.clone()).collect();
        Self::from_parts((&self.hamiltonian + term).with_hermitian_hint(), jumps, self.rotating_frame)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Effective Hamiltonian (in the rotating frame if a drive is present).
    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> impl Iterator<Item = &Operator> {
        self.jumps.iter().map(|(c, _)| c)
    }

    pub fn rotating_frame(&self) -> bool {
        self.rotating_frame
    }

    pub fn is_dissipative(&self) -> bool {
        self.jumps.iter().any(|(c, _)| c.max_abs() > 0.0)
    }

    /// `ℒ(ρ)` for an arbitrary square matrix.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        self.apply_into(rho, &mut out);
        out
    }

    /// `out = ℒ(ρ)` through the sparse superoperator.
    pub fn apply_into(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        self.superop.mul_slice_into(rho.as_slice(), out.as_mut_slice());
    }

    /// `ℒ(ρ)` evaluated as matrix products, independent of the superoperator.
    pub fn apply_matrix_form(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let left = self.h_nh.mul_dense(rho);
        let right = self.h_nh_adj.dense_mul(rho);
        let mut out = (left - right) * (-I);
        for (c, c_adj) in &self.jumps {
            out += c_adj.dense_mul(&c.mul_dense(rho));
        }
        out
    }

    /// Heisenberg-picture adjoint `ℒ†(X) = i(H_nh† X − X H_nh) + Σ c†Xc`.
    pub fn apply_adjoint(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let left = self.h_nh_adj.mul_dense(x);
        let right = self.h_nh.dense_mul(x);
        let mut out = (left - right) * I;
        for (c, c_adj) in &self.jumps {
            out += c.dense_mul(&c_adj.mul_dense(x));
        }
        out
    }

    /// Upper bound on the induced norm of the superoperator.
    pub fn norm_estimate(&self) -> f64 {
        2.0 * self.h_nh.inf_norm() + self.jumps.iter().map(|(c, _)| c.inf_norm().powi(2)).sum::<f64>()
    }

    /// Superoperator entries acting on column-stacked `vec(ρ)`, where
    /// element `(i, j)` of ρ sits at `i + j·d`.
    pub fn superoperator_triplets(&self) -> Vec<(usize, usize, C64)> {
        self.superop.triplets().collect()
    }

    pub fn superoperator(&self) -> &Operator {
        &self.superop
    }

    /// Dense superoperator (small systems and tests only).
    pub fn to_dense_superoperator(&self) -> DMatrix<C64> {
        let n = self.dim() * self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.superoperator_triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

/// Builds the Liouvillian of `H` with site dissipation and an optional drive.
///
/// With a drive, everything is written in the frame rotating at `ω_d`:
/// `H → H − ω_d N + ξ Σ_m (a_m + a_m†)`, which requires `[H, N] = 0`.
pub fn build_liouvillian(
    h: &Operator,
    rates: &DissipationRates,
    drive: Option<&DriveSpec>,
    space: &LatticeSpace,
) -> Result<Liouvillian, LindbladError> {
    if h.dim() != space.total_dim() {
        return Err(LindbladError::DimensionMismatch { hamiltonian: h.dim(), space: space.total_dim() });
    }
    let n_sites = space.n_sites();
    rates.validate(n_sites)?;
    let mut hamiltonian = h.clone();
    if let Some(drive) = drive {
        drive.validate(n_sites)?;
        let number = space.excitation_number();
        let commutator = h.commutator(&number)?.max_abs();
        if commutator > 1e-12 * h.max_abs().max(1.0) {
            return Err(LindbladError::NotNumberConserving(commutator));
        }
        hamiltonian = &hamiltonian - &number.scale_real(drive.omega_d);
        for &m in &drive.driven_sites {
            let a = space.photon_lower(m)?;
            hamiltonian = &hamiltonian + &(&a + &a.adjoint()).scale_real(drive.xi);
        }
    }
    let mut jumps = Vec::new();
    for s in 0..n_sites {
        let sm = space.qubit_lower(s)?;
        if rates.gamma1 > 0.0 {
            jumps.push(sm.scale_real(rates.gamma1.sqrt()));
        }
        if rates.gamma_phi > 0.0 {
            let sz = &(&sm.adjoint() * &sm).scale_real(2.0) - &Operator::identity(space.total_dim());
            jumps.push(sz.scale_real(rates.gamma_phi.sqrt()));
        }
        let loss = rates.photon_loss(s);
        if loss > 0.0 {
            jumps.push(space.photon_lower(s)?.scale_real(loss.sqrt()));
        }
    }
    Ok(Liouvillian::from_parts(hamiltonian.with_hermitian_hint(), jumps, drive.is_some()))
}

fn superoperator_entries(h_nh: &Operator, jumps: &[(Operator, Operator)]) -> Vec<(usize, usize, C64)> {
    let d = h_nh.dim();
    let mut out = Vec::new();
    for (a, b, v) in h_nh.triplets() {
        let left = -I * v;
        let right = I * v.conj();
        for j in 0..d {
            out.push((a + j * d, b + j * d, left));
        }
        for i in 0..d {
            out.push((i + a * d, i + b * d, right));
        }
    }
    for (c, _) in jumps {
        let entries: Vec<_> = c.triplets().collect();
        for &(a, b, v) in &entries {
            for &(p, q, w) in &entries {
                out.push((p + a * d, q + b * d, v.conj() * w));
            }
        }
    }
    out
}

fn hermitize(m: &mut DMatrix<C64>) {
    let adj = m.adjoint();
    *m += adj;
    *m *= C64::new(0.5, 0.0);
}

/// Sampled solution of the master equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    /// Sample times at which an eigenvalue fell below `−1e-8` (never clipped).
    pub positivity_violations: Vec<(f64, f64)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrates `dρ/dt = ℒρ` to `t_final`, recording `samples + 1` equally
/// spaced states including the initial one. The state is re-symmetrized
/// after every accepted step.
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_final: f64,
    control: &StepControl,
    samples: usize,
) -> Result<Trajectory, LindbladError> {
    let health = rho0.health();
    if !health.is_valid() || rho0.dim() != l.dim() {
        return Err(LindbladError::InvalidInitialState(health));
    }
    let samples = samples.max(1);
    let mut y = rho0.matrix().clone();
    let mut stats = StepStats::default();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
        max_trace_drift: 0.0,
        min_eigenvalue: health.min_eigenvalue,
        positivity_violations: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let trace0 = rho0.trace();
    for k in 1..=samples {
        let t0 = t_final * (k - 1) as f64 / samples as f64;
        let t1 = t_final * k as f64 / samples as f64;
        integrate(&mut y, t0, t1, control, &mut stats, |_, r| l.apply(r), |_, r| hermitize(r))?;
        let state = DensityMatrix::new_unchecked(y.clone());
        let h = state.health();
        traj.max_trace_drift = traj.max_trace_drift.max((state.trace() - trace0).norm());
        traj.min_eigenvalue = traj.min_eigenvalue.min(h.min_eigenvalue);
        if h.min_eigenvalue < -DensityHealth::POSITIVITY_TOL {
            log::warn!("negative eigenvalue {:.3e} at t = {t1:.6e}", h.min_eigenvalue);
            traj.positivity_violations.push((t1, h.min_eigenvalue));
        }
        traj.times.push(t1);
        traj.states.push(state);
    }
    traj.accepted_steps = stats.accepted;
    traj.rejected_steps = stats.rejected;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    NullSpace,
    Evolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateOptions {
    /// Largest Hilbert dimension for the direct null-space solve.
    pub direct_threshold: usize,
    /// Convergence bound on `‖ρ(t+T) − ρ(t)‖_F` for the evolution method.
    pub tolerance: f64,
    /// Chunk length `T`; defaults to the inverse of the smallest jump rate.
    pub chunk_time: Option<f64>,
    /// Give up after this many chunks.
    pub max_chunks: usize,
    pub control: StepControl,
    /// Force a method regardless of the dimension.
    pub method: Option<SteadyMethod>,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            direct_threshold: 64,
            tolerance: 1e-8,
            chunk_time: None,
            max_chunks: 10_000,
            control: StepControl::default(),
            method: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub method: SteadyMethod,
    /// `‖ℒ(ρ)‖_F / ‖ℒ‖`.
    pub relative_residual: f64,
    pub health: DensityHealth,
    /// Condition estimate of the constrained system (null-space method).
    pub condition_estimate: Option<f64>,
    /// Total evolution time (evolution method).
    pub evolution_time: Option<f64>,
}

pub fn steady_state(l: &Liouvillian, options: &SteadyStateOptions) -> Result<SteadyState, LindbladError> {
    if !l.is_dissipative() {
        return Err(LindbladError::NotDissipative);
    }
    let method = options.method.unwrap_or(if l.dim() <= options.direct_threshold {
        SteadyMethod::NullSpace
    } else {
        SteadyMethod::Evolution
    });
    match method {
        SteadyMethod::NullSpace => steady_state_null_space(l),
        SteadyMethod::Evolution => steady_state_evolution(l, options, None),
    }
}

fn relative_residual(l: &Liouvillian, rho: &DMatrix<C64>) -> f64 {
    l.apply(rho).norm() / l.norm_estimate()
}

/// Solves `ℒ vec(ρ) = 0` with the `ρ₀₀` row replaced by `tr ρ = 1`.
///
/// A second solve against a fixed generic right-hand side estimates the
/// condition number; a degenerate stationary space makes the constrained
/// system singular and is reported instead of returning an arbitrary member.
pub fn steady_state_null_space(l: &Liouvillian) -> Result<SteadyState, LindbladError> {
    let d = l.dim();
    let n = d * d;
    let mut triplets: Vec<Triplet<usize, usize, faer::c64>> = l
        .superoperator_triplets()
        .into_iter()
        .filter(|&(r, _, _)| r != 0)
        .map(|(r, c, v)| Triplet::new(r, c, faer::c64::new(v.re, v.im)))
        .collect();
    triplets.extend((0..d).map(|k| Triplet::new(0, k * (d + 1), faer::c64::new(1.0, 0.0))));
    // explicit zero diagonal keeps the pattern structurally nonsingular
    triplets.extend((1..n).map(|k| Triplet::new(k, k, faer::c64::new(0.0, 0.0))));
    let mut col_norm = vec![0.0f64; n];
    for t in &triplets {
        col_norm[t.col] += t.val.norm();
    }
    let matrix_norm = col_norm.iter().copied().fold(0.0, f64::max);
    let m = SparseColMat::<usize, faer::c64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| LindbladError::Factorization(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| LindbladError::Factorization(format!("{e:?}")))?;

    let mut rhs = faer::Mat::<faer::c64>::zeros(n, 2);
    rhs[(0, 0)] = faer::c64::new(1.0, 0.0);
    let mut probe_norm = 0.0f64;
    for k in 0..n {
        let x = (k as f64 * 0.618_033_988_75).fract() - 0.5;
        let y = (k as f64 * 0.414_213_562_37).fract() - 0.5;
        rhs[(k, 1)] = faer::c64::new(x, y);
        probe_norm += x * x + y * y;
    }
    lu.solve_in_place_with_conj(faer::Conj::No, rhs.as_mut());
    let mut solution_norm = 0.0f64;
    for k in 0..n {
        solution_norm += rhs[(k, 1)].norm_sqr();
    }
    let condition = matrix_norm * (solution_norm / probe_norm).sqrt();
    if !(condition.is_finite() && condition < DEGENERACY_CONDITION) {
        return Err(LindbladError::DegenerateSteadyState { condition });
    }
    let mut rho = DMatrix::from_fn(d, d, |i, j| {
        let v = rhs[(i + j * d, 0)];
        C64::new(v.re, v.im)
    });
    hermitize(&mut rho);
    let tr = rho.trace();
    rho /= tr;
    finish(l, rho, SteadyMethod::NullSpace, Some(condition), None)
}

fn finish(
    l: &Liouvillian,
    rho: DMatrix<C64>,
    method: SteadyMethod,
    condition_estimate: Option<f64>,
    evolution_time: Option<f64>,
) -> Result<SteadyState, LindbladError> {
    let residual = relative_residual(l, &rho);
    let bound = match method {
        SteadyMethod::NullSpace => STEADY_RESIDUAL_TOL,
        SteadyMethod::Evolution => f64::INFINITY,
    };
    if !(residual <= bound) {
        return Err(LindbladError::ResidualTooLarge { residual, bound });
    }
    let rho = DensityMatrix::new_unchecked(rho);
    let health = rho.health();
    if health.min_eigenvalue < -DensityHealth::POSITIVITY_TOL {
        log::warn!("steady state has eigenvalue {:.3e}", health.min_eigenvalue);
    }
    Ok(SteadyState { rho, method, relative_residual: residual, health, condition_estimate, evolution_time })
}

/// Long-time evolution in chunks of length `T` until `‖ρ(t+T) − ρ(t)‖_F`
/// falls below the tolerance. Starts from `initial` or the basis state 0.
pub fn steady_state_evolution(
    l: &Liouvillian,
    options: &SteadyStateOptions,
    initial: Option<&DensityMatrix>,
) -> Result<SteadyState, LindbladError> {
    if !l.is_dissipative() {
        return Err(LindbladError::NotDissipative);
    }
    let chunk = options.chunk_time.unwrap_or_else(|| {
        let slowest = l.jumps().map(|c| c.max_abs().powi(2)).filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
        1.0 / slowest
    });
    let mut y = initial.map_or_else(|| DensityMatrix::basis(l.dim(), 0).into_matrix(), |r| r.matrix().clone());
    let mut stats = StepStats::default();
    let mut t = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..options.max_chunks {
        let previous = y.clone();
        integrate(&mut y, t, t + chunk, &options.control, &mut stats, |_, r| l.apply(r), |_, r| hermitize(r))?;
        t += chunk;
        change = (&y - &previous).norm();
        if change < options.tolerance {
            let tr = y.trace();
            y /= tr;
            return finish(l, y, SteadyMethod::Evolution, None, Some(t));
        }
    }
    Err(LindbladError::NotConverged { t, change, tolerance: options.tolerance })
}

/// `⟨a†a†aa⟩ / ⟨a†a⟩²` for the photon mode on `site`.
pub fn g2_zero(rho: &DensityMatrix, site: usize, space: &LatticeSpace) -> Result<f64, LindbladError> {
    g2_zero_mode(rho, &space.photon_lower(site)?)
}

/// Zero-delay correlation of an arbitrary mode operator `b`.
pub fn g2_zero_mode(rho: &DensityMatrix, b: &Operator) -> Result<f64, LindbladError> {
    let bd = b.adjoint();
    let n_op = &bd * b;
    let n = expectation(&n_op, rho)?.re;
    if !(n > PHOTON_FLOOR) {
        return Err(LindbladError::VacuumCorrelation(n));
    }
    let pairs = &(&bd * &bd) * &(b * b);
    Ok(expectation(&pairs, rho)?.re / (n * n))
}

/// One point of a transmission scan; `T ∼ |⟨a⟩|` of the summed output field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub xi: f64,
    pub omega_d: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub abs_a: f64,
    pub n_photon: f64,
    /// `None` where the photon number is below [`PHOTON_FLOOR`].
    pub g2: Option<f64>,
    /// `abs_a` divided by its maximum over the same drive amplitude.
    pub abs_a_norm: f64,
}

/// Observables of a steady state for the output mode `b = Σ_ports a_p`.
pub fn output_observables(rho: &DensityMatrix, output: &Operator) -> Result<(C64, f64, Option<f64>), LindbladError> {
    let a = expectation(output, rho)?;
    let n = expectation(&(&output.adjoint() * output), rho)?.re;
    let g2 = match g2_zero_mode(rho, output) {
        Ok(v) => Some(v),
        Err(LindbladError::VacuumCorrelation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok((a, n, g2))
}

pub fn output_mode(rates: &DissipationRates, space: &LatticeSpace) -> Result<Operator, LindbladError> {
    let mut b = Operator::zeros(space.total_dim());
    for s in rates.output_sites(space.n_sites()) {
        b = &b + &space.photon_lower(s)?;
    }
    Ok(b)
}

/// Steady-state transmission over the `(ξ, ω_d)` grid, ordered with `ξ`
/// slowest. Grid points are solved in parallel.
pub fn transmission_scan(
    lattice: &LatticeParams,
    space: &LatticeSpace,
    rates: &DissipationRates,
    driven_sites: &[usize],
    drive_amplitudes: &[f64],
    omega_d_grid: &[f64],
    options: &SteadyStateOptions,
) -> Result<Vec<ScanPoint>, LindbladError> {
    let h = build_jchm(lattice, space)?;
    let output = output_mode(rates, space)?;
    let grid: Vec<(f64, f64)> =
        drive_amplitudes.iter().flat_map(|&xi| omega_d_grid.iter().map(move |&w| (xi, w))).collect();
    let mut points: Vec<ScanPoint> = grid
        .par_iter()
        .map(|&(xi, omega_d)| {
            let drive = DriveSpec { xi, omega_d, driven_sites: driven_sites.to_vec() };
            let l = build_liouvillian(&h, rates, Some(&drive), space)?;
            let ss = steady_state(&l, options)?;
            let (a, n_photon, g2) = output_observables(&ss.rho, &output)?;
            Ok(ScanPoint { xi, omega_d, re_a: a.re, im_a: a.im, abs_a: a.norm(), n_photon, g2, abs_a_norm: 0.0 })
        })
        .collect::<Result<_, LindbladError>>()?;
    for row in points.chunks_mut(omega_d_grid.len().max(1)) {
        let max = row.iter().map(|p| p.abs_a).fold(0.0, f64::max);
        for p in row {
            p.abs_a_norm = if max > 0.0 { p.abs_a / max } else { 0.0 };
        }
    }
    Ok(points)
}

/// Closed-form steady amplitude of a driven damped cavity,
/// `⟨a⟩ = −ξ / (Δ − iκ_t/2)` with `Δ = ω_r − ω_d`.
pub fn driven_cavity_amplitude(xi: f64, delta: f64, kappa_total: f64) -> C64 {
    -C64::new(xi, 0.0) / C64::new(delta, -0.5 * kappa_total)
}
