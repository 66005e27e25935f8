//! Jaynes-Cummings-Hubbard Hamiltonians on arbitrary lattice graphs, excitation
//! sectors, and the finite-size blockade nonlinearity.
//!
//! The hopping term enters as `+J_ij (a_i†a_j + a_j†a_i)` with real, possibly
//! negative `J_ij`.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{embed, HilbertError, LatticeSpace, Operator};
use crate::jc_site::{jc_hamiltonian, JcError, JcParams};
use crate::linalg::{lanczos_lowest, symmetric_eigenvalues};

/// Sector dimension above which the iterative eigensolver is used.
pub const DENSE_SECTOR_LIMIT: usize = 512;
pub const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("edge ({i}, {j}) references a site outside 0..{n_sites}")]
    IndexOutOfRange { i: usize, j: usize, n_sites: usize },
    #[error("self-edge on site {0}")]
    SelfEdge(usize),
    #[error("asymmetric hopping between {i} and {j}: {forward} vs {backward}")]
    AsymmetricHopping { i: usize, j: usize, forward: f64, backward: f64 },
    #[error("edge ({i}, {j}) listed more than once")]
    DuplicateEdge { i: usize, j: usize },
    #[error("lattice has {params} sites but the Hilbert space has {space}")]
    SiteCountMismatch { params: usize, space: usize },
    #[error("excitation sectors require the rotating-wave Hamiltonian")]
    RwaRequired,
    #[error("sector N = {n} exceeds the largest representable excitation number {max}")]
    SectorTooLarge { n: usize, max: usize },
    #[error("photon cutoff {n_max} too small; need at least {needed}")]
    CutoffTooSmall { n_max: usize, needed: usize },
    #[error("photon band minimum {0} is not a valid qubit frequency")]
    InvalidBandMinimum(f64),
    #[error("iterative eigensolver did not converge (residual {residual:.3e} after {iterations} iterations)")]
    EigenNotConverged { residual: f64, iterations: usize },
    #[error("lattice file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Site(#[from] JcError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub hopping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    sites: Vec<JcParams>,
    edges: Vec<Edge>,
    rwa: bool,
}

impl LatticeParams {
    /// Validates the graph. An edge listed in both orientations with equal
    /// hopping is merged; unequal hoppings are rejected.
    pub fn new(sites: Vec<JcParams>, edges: Vec<Edge>, rwa: bool) -> Result<Self, LatticeError> {
        for s in &sites {
            s.validate()?;
        }
        let n_sites = sites.len();
        let mut seen: HashMap<(usize, usize), (Edge, bool)> = HashMap::new();
        let mut merged = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i >= n_sites || e.j >= n_sites {
                return Err(LatticeError::IndexOutOfRange { i: e.i, j: e.j, n_sites });
            }
            if e.i == e.j {
                return Err(LatticeError::SelfEdge(e.i));
            }
            let key = (e.i.min(e.j), e.i.max(e.j));
            match seen.get_mut(&key) {
                None => {
                    seen.insert(key, (e, false));
                    merged.push(e);
                }
                Some((first, reversed_seen)) => {
                    let reversed = first.i == e.j;
                    if !reversed || *reversed_seen {
                        return Err(LatticeError::DuplicateEdge { i: e.i, j: e.j });
                    }
                    if first.hopping != e.hopping {
                        return Err(LatticeError::AsymmetricHopping {
                            i: first.i,
                            j: first.j,
                            forward: first.hopping,
                            backward: e.hopping,
                        });
                    }
                    *reversed_seen = true;
                }
            }
        }
        Ok(Self { sites, edges: merged, rwa })
    }

    /// 1D chain. A periodic chain of two sites is a single bond (dimer).
    pub fn chain(n_sites: usize, site: JcParams, hopping: f64, boundary: Boundary) -> Result<Self, LatticeError> {
        let mut edges: Vec<Edge> = (0..n_sites.saturating_sub(1)).map(|i| Edge { i, j: i + 1, hopping }).collect();
        if boundary == Boundary::Periodic && n_sites > 2 {
            edges.push(Edge { i: n_sites - 1, j: 0, hopping });
        }
        Self::new(vec![site; n_sites], edges, true)
    }

    /// Square lattice of `lx × ly` sites, row-major site numbering.
    pub fn square(lx: usize, ly: usize, site: JcParams, hopping: f64, boundary: Boundary) -> Result<Self, LatticeError> {
        let idx = |x: usize, y: usize| y * lx + x;
        let mut edges = Vec::new();
        for y in 0..ly {
            for x in 0..lx {
                if x + 1 < lx {
                    edges.push(Edge { i: idx(x, y), j: idx(x + 1, y), hopping });
                } else if boundary == Boundary::Periodic && lx > 2 {
                    edges.push(Edge { i: idx(x, y), j: idx(0, y), hopping });
                }
                if y + 1 < ly {
                    edges.push(Edge { i: idx(x, y), j: idx(x, y + 1), hopping });
                } else if boundary == Boundary::Periodic && ly > 2 {
                    edges.push(Edge { i: idx(x, y), j: idx(x, 0), hopping });
                }
            }
        }
        Self::new(vec![site; lx * ly], edges, true)
    }

    pub fn with_rwa(mut self, rwa: bool) -> Self {
        self.rwa = rwa;
        self
    }

    pub fn sites(&self) -> &[JcParams] {
        &self.sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn rwa(&self) -> bool {
        self.rwa
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Single-photon matrix `diag(ω_r) + J` on the site graph.
    pub fn photon_hopping_matrix(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        let mut m = DMatrix::from_fn(n, n, |r, c| if r == c { self.sites[r].omega_r } else { 0.0 });
        for e in &self.edges {
            m[(e.i, e.j)] += e.hopping;
            m[(e.j, e.i)] += e.hopping;
        }
        m
    }

    /// Bottom of the photon band: lowest eigenvalue of the hopping matrix.
    pub fn photon_band_minimum(&self) -> f64 {
        symmetric_eigenvalues(&self.photon_hopping_matrix())[0]
    }

    /// Tunes every qubit into resonance with the bottom of the photon band.
    pub fn with_qubits_at_band_minimum(mut self) -> Result<Self, LatticeError> {
        let bottom = self.photon_band_minimum();
        if !(bottom > 0.0) {
            return Err(LatticeError::InvalidBandMinimum(bottom));
        }
        self.sites.iter_mut().for_each(|s| s.omega_q = bottom);
        Ok(self)
    }

    /// Same lattice with site `s` renamed `perm[s]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, LatticeError> {
        let mut sites = self.sites.clone();
        for (s, &p) in perm.iter().enumerate() {
            sites[p] = self.sites[s];
        }
        let edges = self.edges.iter().map(|e| Edge { i: perm[e.i], j: perm[e.j], hopping: e.hopping }).collect();
        Self::new(sites, edges, self.rwa)
    }

    /// Serializes to the lattice file format (see [`parse_lattice`]).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "rwa {}", self.rwa).unwrap();
        for s in &self.sites {
            writeln!(out, "site {} {} {}", s.omega_r, s.omega_q, s.g).unwrap();
        }
        for e in &self.edges {
            writeln!(out, "edge {} {} {}", e.i, e.j, e.hopping).unwrap();
        }
        out
    }
}

/// Parses a lattice description.
///
/// ```text
/// # comment
/// rwa true|false              (optional, default true)
/// site <omega_r> <omega_q> <g>   (sites numbered in order of appearance)
/// edge <i> <j> <J>
/// ```
pub fn parse_lattice(text: &str) -> Result<LatticeParams, LatticeError> {
    let mut sites = Vec::new();
    let mut edges = Vec::new();
    let mut rwa = true;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| LatticeError::Parse { line, message };
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("expected a number, found `{s}`")));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected a site index, found `{s}`")));
        match fields.as_slice() {
            ["rwa", v] => {
                rwa = v.parse::<bool>().map_err(|_| err(format!("expected true or false, found `{v}`")))?;
            }
            ["site", wr, wq, g] => sites.push(JcParams { omega_r: num(wr)?, omega_q: num(wq)?, g: num(g)? }),
            ["edge", i, j, hop] => edges.push(Edge { i: idx(i)?, j: idx(j)?, hopping: num(hop)? }),
            [keyword, ..] if ["rwa", "site", "edge"].contains(keyword) => {
                return Err(err(format!("wrong number of fields for `{keyword}`")));
            }
            [keyword, ..] => return Err(err(format!("unknown keyword `{keyword}`"))),
            [] => unreachable!(),
        }
    }
    LatticeParams::new(sites, edges, rwa)
}

fn check_space(params: &LatticeParams, space: &LatticeSpace) -> Result<(), LatticeError> {
    if params.n_sites() != space.n_sites() {
        return Err(LatticeError::SiteCountMismatch { params: params.n_sites(), space: space.n_sites() });
    }
    Ok(())
}

/// `H = Σ_j H_JC,j + Σ_⟨ij⟩ J_ij (a_i†a_j + h.c.)` on the full lattice space.
pub fn build_jchm(params: &LatticeParams, space: &LatticeSpace) -> Result<Operator, LatticeError> {
    check_space(params, space)?;
    let mut h = Operator::zeros(space.total_dim());
    for (s, site) in params.sites().iter().enumerate() {
        let local = jc_hamiltonian(site, &space.sites()[s], params.rwa());
        h = &h + &embed(&local, s, space)?;
    }
    let lowers: Vec<Operator> = (0..space.n_sites()).map(|s| space.photon_lower(s)).collect::<Result<_, _>>()?;
    for e in params.edges() {
        let hop = &lowers[e.i].adjoint() * &lowers[e.j];
        let term = &hop + &hop.adjoint();
        h = &h + &term.scale_real(e.hopping);
    }
    Ok(h.with_hermitian_hint())
}

type Config = Vec<(usize, bool)>;

/// Basis of the subspace with `Σ_s (n_s + e_s) = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSector {
    excitations: usize,
    configs: Vec<Config>,
    lookup: HashMap<Config, usize>,
}

impl ExcitationSector {
    pub fn excitations(&self) -> usize {
        self.excitations
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn index_of(&self, config: &[(usize, bool)]) -> Option<usize> {
        self.lookup.get(config).copied()
    }

    /// Positions of the sector basis states in the full lattice basis.
    pub fn global_indices(&self, space: &LatticeSpace) -> Vec<usize> {
        self.configs.iter().map(|c| space.encode(c)).collect()
    }
}

pub fn max_excitations(space: &LatticeSpace) -> usize {
    space.sites().iter().map(|s| s.photon_cutoff() + 1).sum()
}

pub fn sector_basis(space: &LatticeSpace, n: usize) -> Result<ExcitationSector, LatticeError> {
    let max = max_excitations(space);
    if n > max {
        return Err(LatticeError::SectorTooLarge { n, max });
    }
    let mut configs = Vec::new();
    let mut current: Config = Vec::with_capacity(space.n_sites());
    fill_configs(space, 0, n, &mut current, &mut configs);
    let lookup = configs.iter().cloned().enumerate().map(|(k, c)| (c, k)).collect();
    Ok(ExcitationSector { excitations: n, configs, lookup })
}

fn fill_configs(space: &LatticeSpace, site: usize, remaining: usize, current: &mut Config, out: &mut Vec<Config>) {
    if site == space.n_sites() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let capacity_after: usize = space.sites()[site + 1..].iter().map(|s| s.photon_cutoff() + 1).sum();
    let n_max = space.sites()[site].photon_cutoff();
    for photons in 0..=n_max.min(remaining) {
        for excited in [false, true] {
            let used = photons + usize::from(excited);
            if used > remaining || remaining - used > capacity_after {
                continue;
            }
            current.push((photons, excited));
            fill_configs(space, site + 1, remaining - used, current, out);
            current.pop();
        }
    }
}

/// Real symmetric sector Hamiltonian in sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorHamiltonian {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SectorHamiltonian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            y[r] = row.iter().map(|&(c, v)| v * x[c]).sum();
        }
    }
}

/// Builds the Hamiltonian directly in the sector basis.
pub fn sector_hamiltonian(
    params: &LatticeParams,
    space: &LatticeSpace,
    sector: &ExcitationSector,
) -> Result<SectorHamiltonian, LatticeError> {
    check_space(params, space)?;
    if !params.rwa() {
        return Err(LatticeError::RwaRequired);
    }
    let cutoffs: Vec<usize> = space.sites().iter().map(|s| s.photon_cutoff()).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sector.dim()];
    for (src, config) in sector.configs().iter().enumerate() {
        let diag: f64 = config
            .iter()
            .zip(params.sites())
            .map(|(&(n, e), p)| p.omega_r * n as f64 + if e { p.omega_q } else { 0.0 })
            .sum();
        rows[src].push((src, diag));
        let mut push = |target: &Config, amp: f64| {
            let dst = sector.index_of(target).expect("excitation-conserving move stays in sector");
            rows[dst].push((src, amp));
        };
        for (s, &(n, e)) in config.iter().enumerate() {
            let g = params.sites()[s].g;
            // a†σ⁻ and aσ⁺
            if e && n < cutoffs[s] {
                let mut t = config.clone();
                t[s] = (n + 1, false);
                push(&t, g * ((n + 1) as f64).sqrt());
            }
            if !e && n >= 1 {
                let mut t = config.clone();
                t[s] = (n - 1, true);
                push(&t, g * (n as f64).sqrt());
            }
        }
        for edge in params.edges() {
            for (to, from) in [(edge.i, edge.j), (edge.j, edge.i)] {
                let (n_to, e_to) = config[to];
                let (n_from, e_from) = config[from];
                if n_from >= 1 && n_to < cutoffs[to] {
                    let mut t = config.clone();
                    t[to] = (n_to + 1, e_to);
                    t[from] = (n_from - 1, e_from);
                    push(&t, edge.hopping * ((n_to + 1) as f64).sqrt() * (n_from as f64).sqrt());
                }
            }
        }
    }
    Ok(SectorHamiltonian { rows })
}

/// Full ascending spectrum of sector `n` (dense diagonalization).
pub fn sector_spectrum(params: &LatticeParams, space: &LatticeSpace, n: usize) -> Result<Vec<f64>, LatticeError> {
    let sector = sector_basis(space, n)?;
    let h = sector_hamiltonian(params, space, &sector)?;
    Ok(symmetric_eigenvalues(&h.to_dense()))
}

/// Lowest eigenvalue of sector `n`; iterative above [`DENSE_SECTOR_LIMIT`].
pub fn sector_ground_energy(params: &LatticeParams, space: &LatticeSpace, n: usize) -> Result<f64, LatticeError> {
    let sector = sector_basis(space, n)?;
    let h = sector_hamiltonian(params, space, &sector)?;
    if h.dim() <= DENSE_SECTOR_LIMIT {
        return Ok(symmetric_eigenvalues(&h.to_dense())[0]);
    }
    let out = lanczos_lowest(h.dim(), |x, y| h.apply(x, y), EIGEN_TOLERANCE, 600);
    if !out.converged {
        return Err(LatticeError::EigenNotConverged { residual: out.residual, iterations: out.iterations });
    }
    Ok(out.eigenvalue)
}

/// Measured `U = (E₀(2) − E₀(1)) − (E₀(1) − E₀(0))` from sector ground energies.
pub fn finite_size_nonlinearity(params: &LatticeParams, space: &LatticeSpace) -> Result<f64, LatticeError> {
    let n_max = space.sites().iter().map(|s| s.photon_cutoff()).min().unwrap_or(0);
    if n_max < 2 {
        return Err(LatticeError::CutoffTooSmall { n_max, needed: 2 });
    }
    let energies: Vec<f64> = [0usize, 1, 2]
        .par_iter()
        .map(|&n| sector_ground_energy(params, space, n))
        .collect::<Result<_, _>>()?;
    Ok((energies[2] - energies[1]) - (energies[1] - energies[0]))
}

/// Leading-order blockade nonlinearity of a periodic chain with qubits at the
/// photon band bottom, `2g(1 − √(1 − 1/(2N_s)))`.
pub fn nonlinearity_leading_order(g: f64, n_sites: usize) -> f64 {
    2.0 * g * (1.0 - (1.0 - 1.0 / (2.0 * n_sites as f64)).sqrt())
}

/// Periodic chain with every qubit at the computed band minimum.
pub fn periodic_chain_at_band_bottom(n_sites: usize, omega_r: f64, g: f64, hopping: f64) -> Result<LatticeParams, LatticeError> {
    let site = JcParams::new(omega_r, omega_r, g)?;
    LatticeParams::chain(n_sites, site, hopping, Boundary::Periodic)?.with_qubits_at_band_minimum()
}

/// Full ascending spectrum via dense diagonalization (small lattices only).
pub fn full_spectrum(params: &LatticeParams, space: &LatticeSpace) -> Result<Vec<f64>, LatticeError> {
    let h = build_jchm(params, space)?;
    Ok(crate::linalg::hermitian_eigenvalues(&h.to_dense()))
}

/// Helper used by the CLI: `U` plus its cutoff check against `n_max + 2`.
pub fn nonlinearity_with_cutoff_check(
    params: &LatticeParams,
    n_max: usize,
    tolerance: f64,
) -> Result<crate::hilbert::CutoffCheck, LatticeError> {
    crate::hilbert::check_cutoff_convergence(n_max, tolerance, |n| {
        let space = LatticeSpace::uniform(params.n_sites(), n)?;
        Ok(vec![finite_size_nonlinearity(params, &space)?])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn site(omega_r: f64, omega_q: f64, g: f64) -> JcParams {
        JcParams::new(omega_r, omega_q, g).unwrap()
    }

    #[test]
    fn edge_validation() {
        let s = vec![site(5.0, 5.0, 0.1); 3];
        let err = LatticeParams::new(s.clone(), vec![Edge { i: 0, j: 3, hopping: 0.1 }], true);
        assert!(matches!(err, Err(LatticeError::IndexOutOfRange { .. })));
        let err = LatticeParams::new(s.clone(), vec![Edge { i: 1, j: 1, hopping: 0.1 }], true);
        assert_eq!(err, Err(LatticeError::SelfEdge(1)));
        let err = LatticeParams::new(
            s.clone(),
            vec![Edge { i: 0, j: 1, hopping: 0.1 }, Edge { i: 1, j: 0, hopping: 0.2 }],
            true,
        );
        assert!(matches!(err, Err(LatticeError::AsymmetricHopping { .. })));
        let ok = LatticeParams::new(s.clone(), vec![Edge { i: 0, j: 1, hopping: 0.1 }, Edge { i: 1, j: 0, hopping: 0.1 }], true)
            .unwrap();
        assert_eq!(ok.edges().len(), 1);
        let err = LatticeParams::new(s, vec![Edge { i: 0, j: 1, hopping: 0.1 }, Edge { i: 0, j: 1, hopping: 0.1 }], true);
        assert!(matches!(err, Err(LatticeError::DuplicateEdge { .. })));
    }

    #[test]
    fn decoupled_sites_sum_spectra() {
        let params = LatticeParams::new(vec![site(5.0, 4.9, 0.1), site(5.2, 5.0, 0.05)], vec![], true).unwrap();
        let space = LatticeSpace::uniform(2, 2).unwrap();
        let full = full_spectrum(&params, &space).unwrap();
        let s0 = crate::linalg::hermitian_eigenvalues(&jc_hamiltonian(&params.sites()[0], &space.sites()[0], true).to_dense());
        let s1 = crate::linalg::hermitian_eigenvalues(&jc_hamiltonian(&params.sites()[1], &space.sites()[1], true).to_dense());
        let mut sums: Vec<f64> = s0.iter().flat_map(|a| s1.iter().map(move |b| a + b)).collect();
        sums.sort_by(f64::total_cmp);
        for (a, b) in full.iter().zip(&sums) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn tight_binding_band_on_ring() {
        let j = 0.3;
        for n_sites in [3usize, 4, 5] {
            let params = LatticeParams::chain(n_sites, site(5.0, 7.0, 0.0), j, Boundary::Periodic).unwrap();
            let space = LatticeSpace::uniform(n_sites, 1).unwrap();
            // g = 0: photon energies decouple from the qubit
            let sector = sector_basis(&space, 1).unwrap();
            let h = sector_hamiltonian(&params, &space, &sector).unwrap().to_dense();
            let photon_only: Vec<usize> =
                (0..sector.dim()).filter(|&k| sector.configs()[k].iter().all(|&(_, e)| !e)).collect();
            let sub = DMatrix::from_fn(n_sites, n_sites, |r, c| h[(photon_only[r], photon_only[c])]);
            let vals = symmetric_eigenvalues(&sub);
            let mut band: Vec<f64> = (0..n_sites).map(|k| 5.0 + 2.0 * j * (2.0 * PI * k as f64 / n_sites as f64).cos()).collect();
            band.sort_by(f64::total_cmp);
            for (a, b) in vals.iter().zip(&band) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dimer_single_excitation_matches_hand_built_matrix() {
        // basis |1_0⟩, |1_1⟩, |e_0⟩, |e_1⟩; independent 4×4 by construction
        let (wr, wq, g, j) = (5.0, 4.9, 0.1, 0.07);
        let params = LatticeParams::chain(2, site(wr, wq, g), j, Boundary::Open).unwrap();
        let space = LatticeSpace::uniform(2, 2).unwrap();
        let hand = DMatrix::from_row_slice(4, 4, &[wr, j, g, 0.0, j, wr, 0.0, g, g, 0.0, wq, 0.0, 0.0, g, 0.0, wq]);
        let expected = symmetric_eigenvalues(&hand);
        let got = sector_spectrum(&params, &space, 1).unwrap();
        assert_eq!(got.len(), 4);
        for (a, b) in got.iter().zip(&expected) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    /// Brute-force count of configurations with the given excitation total.
    fn brute_force_count(n_sites: usize, n_max: usize, n: usize) -> usize {
        let local = 2 * (n_max + 1);
        (0..local.pow(n_sites as u32))
            .filter(|&mut_idx| {
                let mut idx = mut_idx;
                let mut total = 0;
                for _ in 0..n_sites {
                    let l = idx % local;
                    idx /= local;
                    total += l / 2 + l % 2;
                }
                total == n
            })
            .count()
    }

    #[test]
    fn sector_dimensions() {
        let space = LatticeSpace::uniform(2, 2).unwrap();
        assert_eq!(sector_basis(&space, 0).unwrap().dim(), 1);
        assert_eq!(sector_basis(&space, 1).unwrap().dim(), 4);
        assert_eq!(sector_basis(&space, 2).unwrap().dim(), 8);
        assert_eq!(brute_force_count(2, 2, 2), 8);
        for n_sites in 1..=4 {
            let space = LatticeSpace::uniform(n_sites, 3).unwrap();
            assert_eq!(sector_basis(&space, 1).unwrap().dim(), 2 * n_sites);
            for n in 0..=max_excitations(&space) {
                assert_eq!(sector_basis(&space, n).unwrap().dim(), brute_force_count(n_sites, 3, n), "N_s={n_sites} N={n}");
            }
        }
        let space = LatticeSpace::uniform(2, 1).unwrap();
        assert_eq!(sector_basis(&space, 5), Err(LatticeError::SectorTooLarge { n: 5, max: 4 }));
    }

    #[test]
    fn sectors_reproduce_full_spectrum() {
        let params = LatticeParams::chain(3, site(5.0, 4.8, 0.2), -0.15, Boundary::Periodic).unwrap();
        let space = LatticeSpace::uniform(3, 2).unwrap();
        let full = full_spectrum(&params, &space).unwrap();
        let mut from_sectors: Vec<f64> = (0..=max_excitations(&space))
            .flat_map(|n| sector_spectrum(&params, &space, n).unwrap())
            .collect();
        from_sectors.sort_by(f64::total_cmp);
        assert_eq!(full.len(), from_sectors.len());
        for (a, b) in full.iter().zip(&from_sectors) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn excitation_number_conserved() {
        let params = LatticeParams::square(2, 2, site(5.0, 4.9, 0.1), 0.05, Boundary::Open).unwrap();
        let space = LatticeSpace::uniform(4, 1).unwrap();
        let h = build_jchm(&params, &space).unwrap();
        assert!(h.is_hermitian(1e-12));
        assert_eq!(h.commutator(&space.excitation_number()).unwrap().max_abs(), 0.0);
        let h_rabi = build_jchm(&params.clone().with_rwa(false), &space).unwrap();
        assert!(h_rabi.commutator(&space.excitation_number()).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn spectrum_invariant_under_ring_relabeling() {
        let params = LatticeParams::chain(4, site(5.0, 4.95, 0.1), 0.08, Boundary::Periodic).unwrap();
        let rotated = params.relabeled(&[1, 2, 3, 0]).unwrap();
        let reflected = params.relabeled(&[3, 2, 1, 0]).unwrap();
        let space = LatticeSpace::uniform(4, 2).unwrap();
        for n in 0..4 {
            let a = sector_spectrum(&params, &space, n).unwrap();
            for other in [&rotated, &reflected] {
                let b = sector_spectrum(other, &space, n).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert_relative_eq!(x, y, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn lanczos_path_agrees_with_dense() {
        let params = LatticeParams::chain(5, site(5.0, 4.9, 0.2), -0.3, Boundary::Periodic).unwrap();
        let space = LatticeSpace::uniform(5, 3).unwrap();
        let sector = sector_basis(&space, 5).unwrap();
        assert!(sector.dim() > DENSE_SECTOR_LIMIT);
        let iterative = sector_ground_energy(&params, &space, 5).unwrap();
        let dense = symmetric_eigenvalues(&sector_hamiltonian(&params, &space, &sector).unwrap().to_dense())[0];
        assert_relative_eq!(iterative, dense, epsilon = 1e-9);
    }

    #[test]
    fn leading_order_closed_forms() {
        let g = 0.7;
        assert_relative_eq!(nonlinearity_leading_order(g, 1), g * (2.0 - 2f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(nonlinearity_leading_order(g, 2), g * (2.0 - 3f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(nonlinearity_leading_order(1.0, 2), 0.267949, epsilon = 1e-6);
    }

    #[test]
    fn single_site_measured_u_is_exact() {
        let params = periodic_chain_at_band_bottom(1, 5.0, 0.1, 0.0).unwrap();
        let space = LatticeSpace::uniform(1, 3).unwrap();
        let u = finite_size_nonlinearity(&params, &space).unwrap();
        assert_relative_eq!(u, 0.1 * (2.0 - 2f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn measured_u_near_leading_order_for_strong_hopping() {
        let g = 0.01;
        let params = periodic_chain_at_band_bottom(3, 10.0, g, -50.0 * g).unwrap();
        let space = LatticeSpace::uniform(3, 2).unwrap();
        let u = finite_size_nonlinearity(&params, &space).unwrap();
        let lo = nonlinearity_leading_order(g, 3);
        assert!((u - lo).abs() < 0.05 * lo, "{u} vs {lo}");
    }

    #[test]
    fn cutoff_too_small_for_two_excitations() {
        let params = periodic_chain_at_band_bottom(2, 5.0, 0.1, -2.0).unwrap();
        let err = finite_size_nonlinearity(&params, &LatticeSpace::uniform(2, 1).unwrap());
        assert_eq!(err, Err(LatticeError::CutoffTooSmall { n_max: 1, needed: 2 }));
    }

    #[test]
    fn band_minimum_is_computed() {
        let p = LatticeParams::chain(4, site(5.0, 5.0, 0.1), 0.2, Boundary::Periodic).unwrap();
        assert_relative_eq!(p.photon_band_minimum(), 4.6, epsilon = 1e-12);
        let p = LatticeParams::chain(2, site(5.0, 5.0, 0.1), 0.2, Boundary::Periodic).unwrap();
        assert_relative_eq!(p.photon_band_minimum(), 4.8, epsilon = 1e-12);
    }

    #[test]
    fn lattice_text_round_trip() {
        let p = LatticeParams::square(2, 3, site(5.0, 4.75, 0.125), -0.0625, Boundary::Open).unwrap();
        assert_eq!(parse_lattice(&p.to_text()).unwrap(), p);
        let err = parse_lattice("site 1 2\n");
        assert!(matches!(err, Err(LatticeError::Parse { line: 1, .. })));
        let err = parse_lattice("# ok\nbogus 1\n");
        assert!(matches!(err, Err(LatticeError::Parse { line: 2, .. })));
    }
}
