//! Tensor-product operator algebra over truncated photon ⊗ qubit site spaces.
//!
//! Basis ordering is fixed so that test vectors are portable:
//!
//! * within a site the photon index is the slow index and the qubit the fast
//!   one, `local = 2 * n + q` with `q = 0` for `|g⟩` and `q = 1` for `|e⟩`;
//! * across sites, site 0 is the slowest index, so a lattice basis index is
//!   `Σ_s local_s * Π_{t > s} dim_t`.
//!
//! Hamiltonians and jump operators are stored as CSR sparse matrices
//! ([`Operator`]); density matrices are dense ([`DensityMatrix`]).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Dense state vector on a site or lattice space.
pub type StateVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Default relative tolerance for cutoff-convergence checks.
pub const DEFAULT_CUTOFF_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("photon cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),
    #[error("lattice must contain at least one site")]
    EmptyLattice,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("site index {index} out of range for lattice of {n_sites} sites")]
    SiteOutOfRange { index: usize, n_sites: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
}

/// Local Hilbert space of one site: Fock states `0..=n_max` ⊗ a two-level qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiteSpace {
    photon_cutoff: usize,
}

impl SiteSpace {
    pub const QUBIT_DIM: usize = 2;

    pub fn new(photon_cutoff: usize) -> Result<Self, HilbertError> {
        if photon_cutoff < 1 {
            return Err(HilbertError::InvalidCutoff(photon_cutoff));
        }
        Ok(Self { photon_cutoff })
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn photon_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.photon_dim() * Self::QUBIT_DIM
    }

    /// Local basis index of `|n, q⟩`.
    pub fn index(&self, photons: usize, excited: bool) -> usize {
        debug_assert!(photons <= self.photon_cutoff);
        photons * Self::QUBIT_DIM + usize::from(excited)
    }

    /// Inverse of [`SiteSpace::index`].
    pub fn decode(&self, local: usize) -> (usize, bool) {
        (local / Self::QUBIT_DIM, local % Self::QUBIT_DIM == 1)
    }

    /// `a ⊗ 1_qubit` on this site.
    pub fn photon_lower(&self) -> Operator {
        Operator::kron(&annihilation(self), &Operator::identity(Self::QUBIT_DIM))
    }

    /// `1_photon ⊗ σ⁻` on this site.
    pub fn qubit_lower(&self) -> Operator {
        Operator::kron(&Operator::identity(self.photon_dim()), &qubit_lower())
    }

    /// `a†a + σ⁺σ⁻` on this site.
    pub fn excitation_number(&self) -> Operator {
        let entries = (0..self.dim()).map(|k| {
            let (n, e) = self.decode(k);
            (k, k, C64::new((n + usize::from(e)) as f64, 0.0))
        });
        Operator::from_triplets(self.dim(), entries).with_hermitian_hint()
    }
}

/// Ordered product of site spaces; site 0 is the slowest index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeSpace {
    sites: Vec<SiteSpace>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl LatticeSpace {
    pub fn new(sites: Vec<SiteSpace>) -> Result<Self, HilbertError> {
        if sites.is_empty() {
            return Err(HilbertError::EmptyLattice);
        }
        let mut strides = vec![1; sites.len()];
        for s in (0..sites.len() - 1).rev() {
            strides[s] = strides[s + 1] * sites[s + 1].dim();
        }
        let total_dim = strides[0] * sites[0].dim();
        Ok(Self { sites, strides, total_dim })
    }

    /// `n_sites` identical sites with photon cutoff `n_max`.
    pub fn uniform(n_sites: usize, n_max: usize) -> Result<Self, HilbertError> {
        let site = SiteSpace::new(n_max)?;
        Self::new(vec![site; n_sites])
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[SiteSpace] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Result<&SiteSpace, HilbertError> {
        self.sites.get(index).ok_or(HilbertError::SiteOutOfRange {
            index,
            n_sites: self.sites.len(),
        })
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Global basis index of per-site `(photons, excited)` occupations.
    pub fn encode(&self, config: &[(usize, bool)]) -> usize {
        debug_assert_eq!(config.len(), self.sites.len());
        config
            .iter()
            .zip(&self.sites)
            .zip(&self.strides)
            .map(|(((n, e), site), stride)| site.index(*n, *e) * stride)
            .sum()
    }

    pub fn decode(&self, index: usize) -> Vec<(usize, bool)> {
        self.sites
            .iter()
            .zip(&self.strides)
            .map(|(site, stride)| site.decode((index / stride) % site.dim()))
            .collect()
    }

    /// Photon annihilation operator of site `index`, embedded.
    pub fn photon_lower(&self, index: usize) -> Result<Operator, HilbertError> {
        embed(&self.site(index)?.photon_lower(), index, self)
    }

    /// Qubit lowering operator of site `index`, embedded.
    pub fn qubit_lower(&self, index: usize) -> Result<Operator, HilbertError> {
        embed(&self.site(index)?.qubit_lower(), index, self)
    }

    /// Total excitation number `Σ_s (a†a + σ⁺σ⁻)_s`; diagonal in this basis.
    pub fn excitation_number(&self) -> Operator {
        let entries = (0..self.total_dim).map(|k| {
            let total: usize = self.decode(k).iter().map(|(n, e)| n + usize::from(*e)).sum();
            (k, k, C64::new(total as f64, 0.0))
        });
        Operator::from_triplets(self.total_dim, entries).with_hermitian_hint()
    }

    /// Vacuum `|0, g⟩^{⊗N_s}` as a basis vector.
    pub fn vacuum(&self) -> StateVector {
        let mut v = StateVector::zeros(self.total_dim);
        v[0] = ONE;
        v
    }

    /// The same lattice with every photon cutoff raised by `extra`.
    pub fn with_extra_photons(&self, extra: usize) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|s| SiteSpace { photon_cutoff: s.photon_cutoff + extra })
            .collect();
        Self::new(sites).expect("non-empty lattice stays non-empty")
    }
}

/// Square complex matrix in compressed sparse row form. Equality compares
/// the stored entries only.
#[derive(Clone)]
pub struct Operator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
    hermitian_hint: bool,
}

impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.indptr == other.indptr && self.indices == other.indices && self.values == other.values
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("dim", &self.dim)
            .field("nnz", &self.nnz())
            .field("hermitian_hint", &self.hermitian_hint)
            .finish()
    }
}

impl Operator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != ZERO {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { dim, indptr, indices, values, hermitian_hint: false }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|k| (k, k, ONE))).with_hermitian_hint()
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let entries = values.iter().enumerate().map(|(k, &v)| (k, k, C64::new(v, 0.0)));
        Self::from_triplets(values.len(), entries).with_hermitian_hint()
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self, HilbertError> {
        if m.nrows() != m.ncols() {
            return Err(HilbertError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let entries = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Ok(Self::from_triplets(m.nrows(), entries))
    }

    /// Marks the operator as Hermitian after verifying it.
    pub fn with_hermitian_hint(mut self) -> Self {
        debug_assert!(self.hermiticity_error() <= 1e-12 * self.max_abs().max(f64::MIN_POSITIVE));
        self.hermitian_hint = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())));
        out.hermitian_hint = self.hermitian_hint;
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.hermitian_hint = self.hermitian_hint && s.im == 0.0;
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum (induced ∞-norm).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    /// Kronecker product `a ⊗ b` (a is the slow index).
    pub fn kron(a: &Operator, b: &Operator) -> Operator {
        let dim = a.dim * b.dim;
        let entries = a.triplets().flat_map(|(ra, ca, va)| {
            b.triplets().map(move |(rb, cb, vb)| (ra * b.dim + rb, ca * b.dim + cb, va * vb))
        });
        let mut out = Operator::from_triplets(dim, entries.collect::<Vec<_>>());
        out.hermitian_hint = a.hermitian_hint && b.hermitian_hint;
        out
    }

    fn check_dim(&self, other: usize) -> Result<(), HilbertError> {
        if self.dim != other {
            return Err(HilbertError::DimensionMismatch { expected: self.dim, found: other });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator, HilbertError> {
        self.check_dim(other.dim)?;
        let entries = self.triplets().flat_map(|(r, k, v)| other.row(k).map(move |(c, w)| (r, c, v * w)));
        Ok(Operator::from_triplets(self.dim, entries.collect::<Vec<_>>()))
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator, HilbertError> {
        self.check_dim(other.dim)?;
        let mut out = Operator::from_triplets(self.dim, self.triplets().chain(other.triplets()).collect::<Vec<_>>());
        out.hermitian_hint = self.hermitian_hint && other.hermitian_hint;
        Ok(out)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator, HilbertError> {
        Ok(self.matmul(other)?.try_add(&other.matmul(self)?.scale_real(-1.0))?)
    }

    pub fn mul_vec(&self, v: &StateVector) -> Result<StateVector, HilbertError> {
        self.check_dim(v.len())?;
        Ok(StateVector::from_iterator(
            self.dim,
            (0..self.dim).map(|r| self.row(r).map(|(c, a)| a * v[c]).sum::<C64>()),
        ))
    }

    /// `y = self · x` on raw slices, without allocation.
    pub fn mul_slice_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            *out = self.indices[lo..hi].iter().zip(&self.values[lo..hi]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `self · m` for a dense square matrix `m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let n = m.ncols();
        let mut out = DMatrix::zeros(self.dim, n);
        for c in 0..n {
            let src = m.column(c);
            let mut dst = out.column_mut(c);
            for r in 0..self.dim {
                let mut acc = ZERO;
                for (k, a) in self.row(r) {
                    acc += a * src[k];
                }
                dst[r] = acc;
            }
        }
        out
    }

    /// `m · self` for a dense matrix `m`.
    pub fn dense_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(m.nrows(), self.dim);
        for (k, c, a) in self.triplets() {
            let src = m.column(k);
            let mut dst = out.column_mut(c);
            dst.axpy(a, &src, ONE);
        }
        out
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_add(&rhs.scale_real(-1.0)).expect("operator dimensions must agree")
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions must agree")
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale_real(self)
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

/// Truncated bosonic annihilation operator, `a[k-1, k] = √k`.
pub fn annihilation(space: &SiteSpace) -> Operator {
    let entries = (1..space.photon_dim()).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0)));
    Operator::from_triplets(space.photon_dim(), entries)
}

/// Qubit lowering operator σ⁻ in the `[|g⟩, |e⟩]` basis.
pub fn qubit_lower() -> Operator {
    Operator::from_triplets(2, [(0, 1, ONE)])
}

/// `op ⊗ 1` on every site other than `site_index`.
pub fn embed(op: &Operator, site_index: usize, space: &LatticeSpace) -> Result<Operator, HilbertError> {
    let site = space.site(site_index)?;
    if op.dim() != site.dim() {
        return Err(HilbertError::DimensionMismatch { expected: site.dim(), found: op.dim() });
    }
    let before: usize = space.sites()[..site_index].iter().map(SiteSpace::dim).product();
    let after: usize = space.sites()[site_index + 1..].iter().map(SiteSpace::dim).product();
    let left = Operator::kron(&Operator::identity(before), op);
    Ok(Operator::kron(&left, &Operator::identity(after)))
}

/// Numerical health of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityHealth {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityHealth {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    pub fn is_valid(&self) -> bool {
        self.hermiticity_error <= Self::HERMITICITY_TOL
            && self.trace_error <= Self::TRACE_TOL
            && self.min_eigenvalue >= -Self::POSITIVITY_TOL
    }
}

/// Dense density matrix ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and numerical positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, HilbertError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(HilbertError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let rho = Self { matrix };
        let health = rho.health();
        if !health.is_valid() {
            return Err(HilbertError::InvalidDensityMatrix(format!(
                "hermiticity error {:.3e}, trace error {:.3e}, min eigenvalue {:.3e}",
                health.hermiticity_error, health.trace_error, health.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation; callers report [`DensityMatrix::health`].
    pub fn new_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi / C64::new(psi.norm(), 0.0);
        Self { matrix: &v * v.adjoint() }
    }

    /// Projector on basis state `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn health(&self) -> DensityHealth {
        let m = &self.matrix;
        let hermiticity_error = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let trace_error = (m.trace() - ONE).norm();
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eigenvalue = crate::linalg::hermitian_eigenvalues(&herm)
            .first()
            .copied()
            .unwrap_or(0.0);
        DensityHealth { hermiticity_error, trace_error, min_eigenvalue }
    }

    /// Largest entry-wise distance to another density matrix.
    pub fn max_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `tr(op · ρ)`.
pub fn expectation(op: &Operator, state: &DensityMatrix) -> Result<C64, HilbertError> {
    op.check_dim(state.dim())?;
    let rho = state.matrix();
    Ok(op.triplets().map(|(r, c, v)| v * rho[(c, r)]).sum())
}

/// Outcome of repeating a computation at a larger photon cutoff.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CutoffCheck {
    pub n_max: usize,
    pub n_max_refined: usize,
    pub value: Vec<f64>,
    pub value_refined: Vec<f64>,
    pub relative_shift: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Evaluates `observable` at `n_max` and `n_max + 2` and compares the results
/// relative to their magnitude (absolute below unit scale).
pub fn check_cutoff_convergence<E>(
    n_max: usize,
    tolerance: f64,
    mut observable: impl FnMut(usize) -> Result<Vec<f64>, E>,
) -> Result<CutoffCheck, E> {
    let n_max_refined = n_max + 2;
    let value = observable(n_max)?;
    let value_refined = observable(n_max_refined)?;
    let relative_shift = value
        .iter()
        .zip(&value_refined)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(if value.len() == value_refined.len() { 0.0 } else { f64::INFINITY }, f64::max);
    Ok(CutoffCheck {
        n_max,
        n_max_refined,
        value,
        value_refined,
        relative_shift,
        tolerance,
        converged: relative_shift < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn annihilation_lowest_cutoff() {
        let a = annihilation(&SiteSpace::new(1).unwrap()).to_dense();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
    }

    #[test]
    fn annihilation_superdiagonal_and_number_spectrum() {
        let space = SiteSpace::new(3).unwrap();
        let a = annihilation(&space);
        for k in 1..4 {
            assert_relative_eq!(a.get(k - 1, k).re, (k as f64).sqrt(), epsilon = 1e-15);
        }
        assert_eq!(a.nnz(), 3);
        let n = &a.adjoint() * &a;
        let eig = crate::linalg::hermitian_eigenvalues(&n.to_dense());
        for (k, e) in eig.iter().enumerate() {
            assert_relative_eq!(*e, k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_cutoff_rejected() {
        assert_eq!(SiteSpace::new(0), Err(HilbertError::InvalidCutoff(0)));
    }

    #[test]
    fn qubit_algebra() {
        let sm = qubit_lower();
        let sp = sm.adjoint();
        let e = StateVector::from_vec(vec![ZERO, ONE]);
        let g = StateVector::from_vec(vec![ONE, ZERO]);
        assert_eq!(sm.mul_vec(&e).unwrap(), g);
        assert_eq!(sm.mul_vec(&g).unwrap(), StateVector::zeros(2));
        let anti = &(&sp * &sm) + &(&sm * &sp);
        assert_eq!(anti, Operator::identity(2));
        let sz = &(&sp * &sm) - &(&sm * &sp);
        let eig = crate::linalg::hermitian_eigenvalues(&sz.to_dense());
        assert_eq!(eig, vec![-1.0, 1.0]);
    }

    #[test]
    fn embed_identity_and_dimension() {
        let space = LatticeSpace::uniform(3, 2).unwrap();
        let id = embed(&Operator::identity(6), 1, &space).unwrap();
        assert_eq!(id, Operator::identity(216));
        let a = embed(&space.sites()[2].photon_lower(), 2, &space).unwrap();
        assert_eq!(a.dim(), space.total_dim());
    }

    #[test]
    fn embed_errors() {
        let space = LatticeSpace::uniform(2, 1).unwrap();
        assert_eq!(
            embed(&Operator::identity(3), 0, &space),
            Err(HilbertError::DimensionMismatch { expected: 4, found: 3 })
        );
        assert_eq!(
            embed(&Operator::identity(4), 2, &space),
            Err(HilbertError::SiteOutOfRange { index: 2, n_sites: 2 })
        );
    }

    #[test]
    fn distinct_sites_commute() {
        let space = LatticeSpace::uniform(2, 2).unwrap();
        let a0 = space.photon_lower(0).unwrap();
        let a1dag = space.photon_lower(1).unwrap().adjoint();
        assert_eq!(a0.commutator(&a1dag).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ordering_is_photon_then_qubit_site_zero_slowest() {
        let space = LatticeSpace::uniform(2, 1).unwrap();
        // |n0=1,e0=0; n1=0,e1=1⟩ -> local0 = 2, local1 = 1, index = 2*4 + 1
        assert_eq!(space.encode(&[(1, false), (0, true)]), 9);
        assert_eq!(space.decode(9), vec![(1, false), (0, true)]);
        let sm1 = space.qubit_lower(1).unwrap();
        assert_eq!(sm1.get(8, 9), ONE);
    }

    #[test]
    fn expectation_basics() {
        let space = LatticeSpace::uniform(1, 3).unwrap();
        let vac = DensityMatrix::from_pure(&space.vacuum());
        assert_relative_eq!(expectation(&Operator::identity(8), &vac).unwrap().re, 1.0);
        let a = space.photon_lower(0).unwrap();
        assert_eq!(expectation(&(&a.adjoint() * &a), &vac).unwrap(), ZERO);
        let excited = DensityMatrix::basis(8, space.encode(&[(0, true)]));
        let sm = space.qubit_lower(0).unwrap();
        assert_eq!(expectation(&(&sm.adjoint() * &sm), &excited).unwrap(), ONE);
        assert!(expectation(&Operator::identity(4), &vac).is_err());
    }

    #[test]
    fn truncated_commutator_is_unity_below_cutoff() {
        let space = SiteSpace::new(5).unwrap();
        let a = annihilation(&space);
        let comm = a.commutator(&a.adjoint()).unwrap();
        for k in 0..5 {
            assert_relative_eq!(comm.get(k, k).re, 1.0, epsilon = 1e-14);
        }
        assert_relative_eq!(comm.get(5, 5).re, -5.0, epsilon = 1e-14);
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 1)] = c(0.5);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn cutoff_check_reports_shift() {
        let check: CutoffCheck =
            check_cutoff_convergence::<()>(4, 1e-6, |n| Ok(vec![1.0 + 1e-3 / n as f64])).unwrap();
        assert!(!check.converged);
        assert_eq!(check.n_max_refined, 6);
        let check = check_cutoff_convergence::<()>(4, 1e-6, |_| Ok(vec![2.0])).unwrap();
        assert!(check.converged);
    }

    fn arb_site_op(dim: usize) -> impl Strategy<Value = Operator> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |vals| {
            let entries = vals.into_iter().enumerate().map(move |(k, (re, im))| (k / dim, k % dim, C64::new(re, im)));
            Operator::from_triplets(dim, entries)
        })
    }

    proptest! {
        #[test]
        fn embed_is_a_homomorphism(a in arb_site_op(4), b in arb_site_op(4), site in 0usize..2) {
            let space = LatticeSpace::uniform(2, 1).unwrap();
            let lhs = embed(&(&a * &b), site, &space).unwrap();
            let rhs = &embed(&a, site, &space).unwrap() * &embed(&b, site, &space).unwrap();
            prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
        }

        #[test]
        fn dagger_involution_and_conjugate_expectation(a in arb_site_op(4), w in proptest::collection::vec(0.01..1.0f64, 4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let total: f64 = w.iter().sum();
            let mut m = DMatrix::<C64>::zeros(4, 4);
            for (k, x) in w.iter().enumerate() { m[(k, k)] = c(x / total); }
            m[(0, 1)] = C64::new(0.01, 0.02);
            m[(1, 0)] = C64::new(0.01, -0.02);
            let rho = DensityMatrix::new_unchecked(m);
            let lhs = expectation(&a, &rho).unwrap();
            let rhs = expectation(&a.adjoint(), &rho).unwrap().conj();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
