//! Dense and iterative eigensolvers shared by the physics modules.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::C64;

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let (scale, scaled) = rescale(m);
    let mut vals: Vec<f64> = scaled.symmetric_eigenvalues().iter().map(|v| v * scale).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Ascending eigenpairs of a Hermitian matrix; column `k` of the returned
/// matrix belongs to eigenvalue `k`.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let (scale, scaled) = rescale(m);
    let eig = scaled.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k] * scale).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut vals: Vec<f64> = (m / scale).symmetric_eigenvalues().iter().map(|v| v * scale).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Ascending eigenpairs of a real symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let eig = (m / scale).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k] * scale).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn rescale(m: &DMatrix<C64>) -> (f64, DMatrix<C64>) {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (scale, m.map(|z| z / scale))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOutcome {
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lowest eigenvalue of a real symmetric operator given only its action.
///
/// Full reorthogonalization keeps the Krylov basis orthonormal, so the
/// Ritz value is reliable up to `max_iter` steps. Converged when the Ritz
/// residual `|β_m · y_m|` drops below `tol · max(1, |θ|)`.
pub fn lanczos_lowest(
    dim: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    tol: f64,
    max_iter: usize,
) -> LanczosOutcome {
    let max_iter = max_iter.min(dim).max(1);
    // deterministic, generic start vector
    let mut q: Vec<f64> = (0..dim).map(|k| 1.0 + 0.5 * ((k as f64 * 0.754_877_666).fract() - 0.5)).collect();
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last = LanczosOutcome { eigenvalue: f64::NAN, residual: f64::INFINITY, iterations: 0, converged: false };
    for it in 0..max_iter {
        matvec(&basis[it], &mut w);
        let alpha = dot(&w, &basis[it]);
        alphas.push(alpha);
        for v in &basis {
            let proj = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= proj * y);
        }
        for v in &basis {
            let proj = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= proj * y);
        }
        let beta = dot(&w, &w).sqrt();
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c || c + 1 == r {
                betas[r.min(c)]
            } else {
                0.0
            }
        });
        let (vals, vecs) = symmetric_eigen(&t);
        let theta = vals[0];
        let residual = (beta * vecs[(m - 1, 0)]).abs();
        last = LanczosOutcome {
            eigenvalue: theta,
            residual,
            iterations: it + 1,
            converged: residual <= tol * theta.abs().max(1.0),
        };
        if last.converged || beta <= f64::EPSILON * theta.abs().max(1.0) {
            last.converged = true;
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    last
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// `|⟨u|v⟩|` for normalized complex vectors.
pub fn overlap(u: &DVector<C64>, v: &DVector<C64>) -> f64 {
    u.dotc(v).norm() / (u.norm() * v.norm())
}
