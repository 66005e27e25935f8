//! Mean-field theory of the infinite lattice: the equilibrium Gutzwiller
//! phase diagram and driven-dissipative self-consistent steady states.
//!
//! The hopping is decoupled as `−zJ(a†ψ + aψ* − |ψ|²)`, so `J > 0` puts the
//! uniform photon mode at the bottom of the band, `ω_r − zJ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{expectation, CutoffCheck, DensityMatrix, HilbertError, LatticeSpace, Operator, SiteSpace, StateVector, C64, I};
use crate::integrate::{integrate, IntegrationError, StepControl, StepStats};
use crate::jc_site::{jc_hamiltonian, polariton_energy, Branch, JcError, JcParams};
use crate::lindblad::{
    build_liouvillian, g2_zero_mode, steady_state_null_space, DissipationRates, DriveSpec, Liouvillian, LindbladError,
};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues};

/// Order parameter below which a cell is Mott insulating.
pub const PSI_FLOOR: f64 = 1e-5;
/// Golden-section tolerance on ψ.
pub const PSI_TOLERANCE: f64 = 1e-7;
/// Largest ground-state weight tolerated on the highest Fock level.
pub const CUTOFF_WEIGHT_LIMIT: f64 = 1e-4;
/// Distinct driven fixed points differ by more than this.
pub const FIXED_POINT_SEPARATION: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error("hopping zJ must be non-negative for equilibrium scans, got {0}")]
    NegativeHopping(f64),
    #[error("energy minimum at the search boundary ψ_max = {psi_max}; enlarge the window or the photon cutoff")]
    BoundaryMinimum { psi_max: f64 },
    #[error("ground state at ψ = {psi} puts weight {top_population:.3e} on the photon cutoff; raise n_max")]
    CutoffSaturated { psi: f64, top_population: f64 },
    #[error("no Mott/superfluid transition in zJ ∈ [{lo}, {hi}] at μ = {mu}")]
    NoSignChange { mu: f64, lo: f64, hi: f64 },
    #[error("chemical potential {mu} lies outside the N = {n} Mott window ({lo}, {hi})")]
    OutsideWindow { mu: f64, n: usize, lo: f64, hi: f64 },
    #[error("driven mean field did not settle by t = {t:.4e} (last |Δψ| = {change:.3e})")]
    NotConverged { t: f64, change: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Site(#[from] JcError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrandCanonicalParams {
    pub site: JcParams,
    pub mu: f64,
    pub zj: f64,
}

impl GrandCanonicalParams {
    pub fn validate(&self) -> Result<(), MeanFieldError> {
        self.site.validate()?;
        if !(self.zj >= 0.0) {
            return Err(MeanFieldError::NegativeHopping(self.zj));
        }
        Ok(())
    }
}

/// `H_JC − μN − zJ(a†ψ + aψ* − |ψ|²)`, with `ω − μ` formed before
/// assembly to keep the diagonal accurate.
pub fn local_mf_hamiltonian(p: &GrandCanonicalParams, psi: C64, space: &SiteSpace) -> Operator {
    let shifted = JcParams { omega_r: p.site.omega_r - p.mu, omega_q: p.site.omega_q - p.mu, g: p.site.g };
    let mut entries: Vec<(usize, usize, C64)> = jc_hamiltonian(&shifted, space, true).triplets().collect();
    let constant = p.zj * psi.norm_sqr();
    for k in 0..space.dim() {
        entries.push((k, k, C64::new(constant, 0.0)));
    }
    for n in 1..=space.photon_cutoff() {
        let amp = (n as f64).sqrt();
        for e in [false, true] {
            let (up, down) = (space.index(n, e), space.index(n - 1, e));
            // −zJ ψ a† and −zJ ψ* a
            entries.push((up, down, -p.zj * psi * amp));
            entries.push((down, up, -p.zj * psi.conj() * amp));
        }
    }
    Operator::from_triplets(space.dim(), entries).with_hermitian_hint()
}

/// Real symmetric form of [`local_mf_hamiltonian`] for real ψ.
fn real_mf_matrix(p: &GrandCanonicalParams, psi: f64, space: &SiteSpace) -> nalgebra::DMatrix<f64> {
    let d = space.dim();
    let mut m = nalgebra::DMatrix::zeros(d, d);
    let constant = p.zj * psi * psi;
    for n in 0..=space.photon_cutoff() {
        for e in [false, true] {
            let k = space.index(n, e);
            m[(k, k)] = (p.site.omega_r - p.mu) * n as f64 + if e { p.site.omega_q - p.mu } else { 0.0 } + constant;
        }
        if n >= 1 {
            let amp = (n as f64).sqrt();
            let (a, b) = (space.index(n, false), space.index(n - 1, true));
            m[(a, b)] = p.site.g * amp;
            m[(b, a)] = p.site.g * amp;
            for e in [false, true] {
                let (up, down) = (space.index(n, e), space.index(n - 1, e));
                m[(up, down)] = -p.zj * psi * amp;
                m[(down, up)] = -p.zj * psi * amp;
            }
        }
    }
    m
}

/// Lowest eigenvalue of the local Hamiltonian at real ψ.
pub fn mf_energy(p: &GrandCanonicalParams, psi: f64, space: &SiteSpace) -> f64 {
    symmetric_eigenvalues(&real_mf_matrix(p, psi, space))[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub psi_max: f64,
    pub grid_points: usize,
    pub tolerance: f64,
}

impl MinimizeOptions {
    /// Window `ψ_max = √n_max`, the coherent amplitude that fills the cutoff.
    pub fn for_cutoff(n_max: usize) -> Self {
        Self { psi_max: (n_max as f64).sqrt(), grid_points: 48, tolerance: PSI_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderParameter {
    pub psi: C64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MfGroundState {
    pub order: OrderParameter,
    pub energy: f64,
    /// `⟨a†a + σ⁺σ⁻⟩` in the local ground state.
    pub n_polariton: f64,
}

/// Minimizes the local ground energy over real `ψ ∈ [0, ψ_max]`: a uniform
/// grid brackets the minimum, golden-section search refines it.
pub fn minimize_order_parameter(
    p: &GrandCanonicalParams,
    space: &SiteSpace,
    options: &MinimizeOptions,
) -> Result<MfGroundState, MeanFieldError> {
    p.validate()?;
    if !(options.psi_max > 0.0) || options.grid_points < 3 {
        return Err(MeanFieldError::InvalidOption(format!("bad minimizer window {options:?}")));
    }
    let energy = |psi: f64| mf_energy(p, psi, space);
    let step = options.psi_max / (options.grid_points - 1) as f64;
    let samples: Vec<f64> = (0..options.grid_points).map(|k| energy(k as f64 * step)).collect();
    let k_min = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    if k_min == options.grid_points - 1 {
        return Err(MeanFieldError::BoundaryMinimum { psi_max: options.psi_max });
    }
    let (mut lo, mut hi) = (k_min.saturating_sub(1) as f64 * step, (k_min + 1) as f64 * step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (energy(x1), energy(x2));
    let mut iterations = 0;
    while hi - lo > options.tolerance {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = energy(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = energy(x2);
        }
    }
    let mut psi = 0.5 * (lo + hi);
    let mut e_min = energy(psi);
    // the bracket may touch ψ = 0 where the minimum sits exactly on the edge
    let e0 = samples[0];
    if lo == 0.0 && e0 <= e_min {
        psi = 0.0;
        e_min = e0;
    }
    let (_, vecs) = symmetric_eigen(&real_mf_matrix(p, psi, space));
    let ground = vecs.column(0);
    let n_max = space.photon_cutoff();
    let top_population: f64 = [false, true].iter().map(|&e| ground[space.index(n_max, e)].powi(2)).sum();
    if top_population > CUTOFF_WEIGHT_LIMIT {
        return Err(MeanFieldError::CutoffSaturated { psi, top_population });
    }
    let n_polariton: f64 = (0..space.dim())
        .map(|k| {
            let (n, e) = space.decode(k);
            ground[k] * ground[k] * (n + usize::from(e)) as f64
        })
        .sum();
    Ok(MfGroundState {
        order: OrderParameter { psi: C64::new(psi, 0.0), converged: true, iterations },
        energy: e_min,
        n_polariton,
    })
}

/// Repeats the minimization at `n_max + 2` and compares ψ* and the energy.
pub fn minimize_with_cutoff_check(
    p: &GrandCanonicalParams,
    n_max: usize,
    options: &MinimizeOptions,
    tolerance: f64,
) -> Result<(MfGroundState, CutoffCheck), MeanFieldError> {
    let mut first = None;
    let check = crate::hilbert::check_cutoff_convergence(n_max, tolerance, |n| {
        let state = minimize_order_parameter(p, &SiteSpace::new(n)?, options)?;
        first.get_or_insert(state);
        Ok::<_, MeanFieldError>(vec![state.order.psi.re, state.energy])
    })?;
    Ok((first.expect("observable evaluated"), check))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "n")]
pub enum Phase {
    Mott(usize),
    Superfluid,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Mott(n) => write!(f, "mott{n}"),
            Phase::Superfluid => f.write_str("sf"),
        }
    }
}

/// Superfluid indicator used by the boundary bisection: ψ* above the floor,
/// or a condensate too large for the window or the cutoff.
fn is_superfluid(p: &GrandCanonicalParams, space: &SiteSpace, options: &MinimizeOptions) -> Result<bool, MeanFieldError> {
    if p.zj == 0.0 {
        return Ok(false);
    }
    match minimize_order_parameter(p, space, options) {
        Ok(s) => Ok(s.order.psi.norm() > PSI_FLOOR),
        Err(MeanFieldError::BoundaryMinimum { .. } | MeanFieldError::CutoffSaturated { .. }) => Ok(true),
        Err(e) => Err(e),
    }
}

/// Chemical-potential window of the N-polariton Mott state at J = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MottWindow {
    pub n: usize,
    pub mu_lo: f64,
    pub mu_hi: f64,
}

impl MottWindow {
    pub fn width(&self) -> f64 {
        self.mu_hi - self.mu_lo
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu > self.mu_lo && mu < self.mu_hi
    }
}

fn lower_energy(site: &JcParams, n: usize) -> f64 {
    polariton_energy(site, n, Branch::Minus)
}

/// `(ε_N⁻ − ε_{N−1}⁻, ε_{N+1}⁻ − ε_N⁻)`; the vacuum window is open below.
pub fn mott_window(site: &JcParams, n: usize) -> MottWindow {
    let mu_lo = if n == 0 { f64::NEG_INFINITY } else { lower_energy(site, n) - lower_energy(site, n - 1) };
    let mu_hi = lower_energy(site, n + 1) - lower_energy(site, n);
    MottWindow { n, mu_lo, mu_hi }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryOptions {
    pub zj_max: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub resolution: f64,
    pub minimize: MinimizeOptions,
}

impl BoundaryOptions {
    pub fn new(site: &JcParams, n_max: usize) -> Self {
        Self { zj_max: 2.0 * site.g.max(f64::MIN_POSITIVE), resolution: 1e-4 * site.g, minimize: MinimizeOptions::for_cutoff(n_max) }
    }
}

/// Critical `zJ` at chemical potential `mu` by bisection on the superfluid
/// indicator. Zero on a J = 0 window edge.
pub fn lobe_boundary(site: &JcParams, mu: f64, space: &SiteSpace, options: &BoundaryOptions) -> Result<f64, MeanFieldError> {
    let at = |zj: f64| GrandCanonicalParams { site: *site, mu, zj };
    let (mut lo, mut hi) = (0.0, options.zj_max);
    if !is_superfluid(&at(hi), space, &options.minimize)? {
        return Err(MeanFieldError::NoSignChange { mu, lo, hi });
    }
    while hi - lo > options.resolution {
        let mid = 0.5 * (lo + hi);
        if is_superfluid(&at(mid), space, &options.minimize)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LobeTip {
    pub n: usize,
    pub mu: f64,
    pub zj_c: f64,
}

/// Maximum of `J_c(μ)` over `grid_points` chemical potentials spanning the
/// interior of the J = 0 window of lobe `n`.
pub fn lobe_tip(site: &JcParams, n: usize, space: &SiteSpace, grid_points: usize, options: &BoundaryOptions) -> Result<LobeTip, MeanFieldError> {
    if n == 0 {
        return Err(MeanFieldError::InvalidOption("the vacuum lobe has no tip".into()));
    }
    let w = mott_window(site, n);
    let grid: Vec<f64> = (1..=grid_points).map(|k| w.mu_lo + w.width() * k as f64 / (grid_points + 1) as f64).collect();
    let boundaries: Vec<f64> =
        grid.par_iter().map(|&mu| lobe_boundary(site, mu, space, options)).collect::<Result<_, _>>()?;
    let (k, &zj_c) = boundaries.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
    Ok(LobeTip { n, mu: grid[k], zj_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub mu: f64,
    pub zj: f64,
    pub psi: f64,
    pub energy: f64,
    pub n_polariton: f64,
    pub phase: Phase,
    /// The minimum sat on `ψ_max` or saturated the cutoff; `psi` and
    /// `energy` are then not converged values.
    pub at_boundary: bool,
}

/// Phase label of every `(μ, zJ)` cell, `μ` slowest, computed in parallel.
pub fn phase_diagram(
    site: &JcParams,
    mu_grid: &[f64],
    zj_grid: &[f64],
    space: &SiteSpace,
    options: &MinimizeOptions,
) -> Result<Vec<PhaseCell>, MeanFieldError> {
    let cells: Vec<(f64, f64)> = mu_grid.iter().flat_map(|&mu| zj_grid.iter().map(move |&zj| (mu, zj))).collect();
    cells
        .par_iter()
        .map(|&(mu, zj)| {
            let p = GrandCanonicalParams { site: *site, mu, zj };
            match minimize_order_parameter(&p, space, options) {
                Ok(s) => {
                    let psi = s.order.psi.re;
                    let phase =
                        if psi < PSI_FLOOR || zj == 0.0 { Phase::Mott(s.n_polariton.round() as usize) } else { Phase::Superfluid };
                    Ok(PhaseCell { mu, zj, psi, energy: s.energy, n_polariton: s.n_polariton, phase, at_boundary: false })
                }
                Err(MeanFieldError::BoundaryMinimum { psi_max: psi } | MeanFieldError::CutoffSaturated { psi, .. }) => Ok(PhaseCell {
                    mu,
                    zj,
                    psi,
                    energy: mf_energy(&p, psi, space),
                    n_polariton: f64::NAN,
                    phase: Phase::Superfluid,
                    at_boundary: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Driven single site coupled to the mean field of its `z` neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenMfParams {
    pub site: JcParams,
    pub rates: DissipationRates,
    pub xi: f64,
    pub omega_d: f64,
    pub zj: f64,
}

impl DrivenMfParams {
    /// Qubit at the bottom of the photon band and drive at the bottom of the
    /// lower polariton band: `ω_q = ω_r − zJ`, `ω_d = ω_r − zJ − g`.
    pub fn band_bottom(omega_r: f64, g: f64, zj: f64, xi: f64, rates: DissipationRates) -> Result<Self, MeanFieldError> {
        let site = JcParams::new(omega_r, omega_r - zj, g)?;
        Ok(Self { site, rates, xi, omega_d: omega_r - zj - g, zj })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivenMfOptions {
    pub n_max: usize,
    /// Random coherent-state seeds in addition to the vacuum.
    pub n_seeds: usize,
    pub rng_seed: u64,
    /// Seed amplitudes are drawn uniformly from the disk `|α| ≤ seed_radius`.
    pub seed_radius: f64,
    /// Evolution hands over to the Newton polish once ψ changes by less
    /// than this over one chunk.
    pub evolve_tolerance: f64,
    /// Final |Δψ| of the Newton polish.
    pub tolerance: f64,
    /// Chunk length; defaults to the inverse of the smallest rate.
    pub chunk_time: Option<f64>,
    pub max_chunks: usize,
    pub control: StepControl,
}

impl Default for DrivenMfOptions {
    fn default() -> Self {
        Self {
            n_max: 6,
            n_seeds: 4,
            rng_seed: 7,
            seed_radius: 1.0,
            evolve_tolerance: 1e-4,
            tolerance: 1e-8,
            chunk_time: None,
            max_chunks: 4000,
            control: StepControl { rtol: 1e-6, atol: 1e-9, ..StepControl::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub psi: C64,
    pub rho: DensityMatrix,
    pub n_photon: f64,
    pub g2: Option<f64>,
    /// Seed indices that relaxed to this point.
    pub seeds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub seed: usize,
    /// Last sampled stretch of ψ(t).
    pub orbit: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct DrivenMfOutcome {
    pub fixed_points: Vec<FixedPoint>,
    pub limit_cycles: Vec<LimitCycle>,
    pub seeds: Vec<C64>,
}

impl DrivenMfOutcome {
    pub fn multistable(&self) -> bool {
        self.fixed_points.len() > 1
    }
}

struct DrivenModel {
    space: LatticeSpace,
    base: Liouvillian,
    a: Operator,
    a_dag: Operator,
    comm_a: Operator,
    comm_a_dag: Operator,
    params: DrivenMfParams,
}

/// Superoperator of `ρ ↦ [A, ρ]` on column-stacked `vec(ρ)`.
fn commutator_superop(op: &Operator) -> Operator {
    let d = op.dim();
    let entries: Vec<_> = op.triplets().collect();
    let mut t = Vec::with_capacity(2 * d * entries.len());
    for &(r, c, v) in &entries {
        for j in 0..d {
            t.push((r + j * d, c + j * d, v));
            t.push((j + c * d, j + r * d, -v));
        }
    }
    Operator::from_triplets(d * d, t)
}

impl DrivenModel {
    fn new(params: &DrivenMfParams, n_max: usize) -> Result<Self, MeanFieldError> {
        params.site.validate()?;
        let space = LatticeSpace::uniform(1, n_max)?;
        let h_site = jc_hamiltonian(&params.site, &space.sites()[0], true);
        let drive = DriveSpec { xi: params.xi, omega_d: params.omega_d, driven_sites: vec![0] };
        let base = build_liouvillian(&h_site, &params.rates, Some(&drive), &space)?;
        if !base.is_dissipative() {
            return Err(LindbladError::NotDissipative.into());
        }
        let a = space.photon_lower(0)?;
        let a_dag = a.adjoint();
        let comm_a = commutator_superop(&a);
        let comm_a_dag = commutator_superop(&a_dag);
        Ok(Self { space, base, a, a_dag, comm_a, comm_a_dag, params: params.clone() })
    }

    /// `ℒ₀ρ + i zJ [ψa† + ψ*a, ρ]` with ψ = tr(aρ).
    fn rhs(&self, rho: &nalgebra::DMatrix<C64>) -> nalgebra::DMatrix<C64> {
        let mut out = self.base.apply(rho);
        if self.params.zj != 0.0 {
            let psi: C64 = self.a.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum();
            let n = rho.len();
            let mut raise = vec![C64::new(0.0, 0.0); n];
            let mut lower = vec![C64::new(0.0, 0.0); n];
            self.comm_a_dag.mul_slice_into(rho.as_slice(), &mut raise);
            self.comm_a.mul_slice_into(rho.as_slice(), &mut lower);
            let (up, down) = (I * self.params.zj * psi, I * self.params.zj * psi.conj());
            for ((o, r), l) in out.as_mut_slice().iter_mut().zip(&raise).zip(&lower) {
                *o += up * r + down * l;
            }
        }
        out
    }

    /// Liouvillian with the mean field frozen at ψ.
    fn frozen(&self, psi: C64) -> Result<Liouvillian, MeanFieldError> {
        let field = &self.a_dag.scale(psi) + &self.a.scale(psi.conj());
        Ok(self.base.with_added_hamiltonian(&field.scale_real(-self.params.zj)))
    }

    fn steady_at(&self, psi: C64) -> Result<(C64, DensityMatrix), MeanFieldError> {
        let ss = steady_state_null_space(&self.frozen(psi)?)?;
        Ok((expectation(&self.a, &ss.rho)?, ss.rho))
    }

    fn chunk(&self, options: &DrivenMfOptions) -> f64 {
        options.chunk_time.unwrap_or_else(|| {
            let r = &self.params.rates;
            let slowest = [r.gamma1, r.gamma_phi, r.photon_loss(0)].into_iter().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
            1.0 / slowest
        })
    }
}

fn coherent_state(alpha: C64, space: &LatticeSpace) -> DensityMatrix {
    let n_max = space.sites()[0].photon_cutoff();
    let mut psi = StateVector::zeros(space.total_dim());
    let mut amp = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        psi[space.encode(&[(n, false)])] = amp;
    }
    DensityMatrix::from_pure(&psi)
}

enum SeedResult {
    Fixed(C64, DensityMatrix),
    Cycle(Vec<(f64, f64)>),
}

fn relax_from(model: &DrivenModel, rho0: DensityMatrix, options: &DrivenMfOptions) -> Result<SeedResult, MeanFieldError> {
    let chunk = model.chunk(options);
    let mut y = rho0.into_matrix();
    let mut stats = StepStats::default();
    let psi_of = |m: &nalgebra::DMatrix<C64>| -> C64 { model.a.triplets().map(|(r, c, v)| v * m[(c, r)]).sum() };
    let mut psi = psi_of(&y);
    let mut history: Vec<C64> = vec![psi];
    let mut t = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..options.max_chunks {
        integrate(&mut y, t, t + chunk, &options.control, &mut stats, |_, r| model.rhs(r), |_, r| {
            let adj = r.adjoint();
            *r += adj;
            *r *= C64::new(0.5, 0.0);
        })?;
        t += chunk;
        let next = psi_of(&y);
        change = (next - psi).norm();
        psi = next;
        history.push(psi);
        if change < options.evolve_tolerance {
            return polish(model, psi, options).map(|(p, rho)| SeedResult::Fixed(p, rho));
        }
    }
    // sustained oscillation of ψ over the final stretch signals a limit cycle
    let tail = &history[history.len().saturating_sub(64)..];
    let mean = tail.iter().sum::<C64>() / tail.len() as f64;
    let spread = tail.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
    if spread > FIXED_POINT_SEPARATION {
        let orbit = sample_orbit(model, y, t, chunk, options)?;
        return Ok(SeedResult::Cycle(orbit));
    }
    Err(MeanFieldError::NotConverged { t, change })
}

fn sample_orbit(
    model: &DrivenModel,
    mut y: nalgebra::DMatrix<C64>,
    t0: f64,
    chunk: f64,
    options: &DrivenMfOptions,
) -> Result<Vec<(f64, f64)>, MeanFieldError> {
    let mut stats = StepStats::default();
    let samples = 256;
    let dt = chunk / 16.0;
    let mut orbit = Vec::with_capacity(samples);
    let mut t = t0;
    for _ in 0..samples {
        integrate(&mut y, t, t + dt, &options.control, &mut stats, |_, r| model.rhs(r), |_, _| {})?;
        t += dt;
        let psi: C64 = model.a.triplets().map(|(r, c, v)| v * y[(c, r)]).sum();
        orbit.push((psi.re, psi.im));
    }
    Ok(orbit)
}

/// Newton iteration on `F(ψ) = ⟨a⟩_ss(ψ) − ψ` in the real plane, with a
/// finite-difference Jacobian.
fn polish(model: &DrivenModel, start: C64, options: &DrivenMfOptions) -> Result<(C64, DensityMatrix), MeanFieldError> {
    let mut psi = start;
    if model.params.zj == 0.0 {
        let (a, rho) = model.steady_at(psi)?;
        return Ok((a, rho));
    }
    for _ in 0..50 {
        let (a, rho) = model.steady_at(psi)?;
        let f = a - psi;
        if f.norm() < options.tolerance {
            return Ok((a, rho));
        }
        let h = 1e-6 * psi.norm().max(1e-3);
        let (ar, _) = model.steady_at(psi + h)?;
        let (ai, _) = model.steady_at(psi + I * h)?;
        let dfr = (ar - (psi + h) - f) / h;
        let dfi = (ai - (psi + I * h) - f) / h;
        // [dfr.re dfi.re; dfr.im dfi.im] · (dx, dy) = −(f.re, f.im)
        let det = dfr.re * dfi.im - dfi.re * dfr.im;
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (-f.re * dfi.im + f.im * dfi.re) / det;
        let dy = (-dfr.re * f.im + dfr.im * f.re) / det;
        let step = C64::new(dx, dy);
        psi += step;
        if step.norm() < 0.1 * options.tolerance {
            let (a, rho) = model.steady_at(psi)?;
            return Ok((a, rho));
        }
    }
    let (a, _) = model.steady_at(psi)?;
    Err(MeanFieldError::NotConverged { t: f64::NAN, change: (a - psi).norm() })
}

/// Self-consistent steady states from the vacuum and `n_seeds` random
/// coherent states. Distinct fixed points indicate multistability; seeds
/// that keep oscillating are reported as limit cycles.
pub fn driven_mf_steady(params: &DrivenMfParams, options: &DrivenMfOptions) -> Result<DrivenMfOutcome, MeanFieldError> {
    let model = DrivenModel::new(params, options.n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed);
    let mut seeds = vec![C64::new(0.0, 0.0)];
    for _ in 0..options.n_seeds {
        let r = options.seed_radius * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        seeds.push(Complex64::from_polar(r, phi));
    }
    let results: Vec<SeedResult> = seeds
        .par_iter()
        .map(|&alpha| relax_from(&model, coherent_state(alpha, &model.space), options))
        .collect::<Result<_, _>>()?;
    let mut fixed_points: Vec<FixedPoint> = Vec::new();
    let mut limit_cycles = Vec::new();
    let b = model.a.clone();
    for (k, result) in results.into_iter().enumerate() {
        match result {
            SeedResult::Fixed(psi, rho) => {
                if let Some(fp) = fixed_points.iter_mut().find(|fp| (fp.psi - psi).norm() <= FIXED_POINT_SEPARATION) {
                    fp.seeds.push(k);
                    continue;
                }
                let n_photon = expectation(&(&b.adjoint() * &b), &rho)?.re;
                let g2 = match g2_zero_mode(&rho, &b) {
                    Ok(v) => Some(v),
                    Err(LindbladError::VacuumCorrelation(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                fixed_points.push(FixedPoint { psi, rho, n_photon, g2, seeds: vec![k] });
            }
            SeedResult::Cycle(orbit) => limit_cycles.push(LimitCycle { seed: k, orbit }),
        }
    }
    Ok(DrivenMfOutcome { fixed_points, limit_cycles, seeds })
}
