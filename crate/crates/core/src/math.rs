//! Small dense-linear-algebra helpers shared across the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Kronecker product with the left factor most significant.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

pub fn mat_approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && (a - b).norm() < tol
}

/// Frobenius distance between two matrices after optimal global-phase
/// alignment of `a` onto `b`.
pub fn phase_aligned_distance(a: &CMat, b: &CMat) -> f64 {
    let inner: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    if inner.norm() < 1e-300 {
        return (a - b).norm();
    }
    let phase = inner / inner.norm();
    (a.map(|x| x / phase) - b).norm()
}

/// Hermitian conjugate.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Fix the global phase of a vector so its largest-magnitude entry is
/// real and positive.
pub fn fix_vector_phase(v: &mut DMatrix<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0;
    for (i, x) in v.iter().enumerate() {
        if x.norm() > best_norm + 1e-12 {
            best_norm = x.norm();
            best = i;
        }
    }
    if best_norm > 1e-300 {
        let phase = v[best] / best_norm;
        for x in v.iter_mut() {
            *x /= phase;
        }
    }
}

/// Euclidean projection of a real vector onto the probability simplex.
///
/// Used for the nearest positive-semidefinite unit-trace matrix: project
/// the eigenvalue vector, keep the eigenbasis.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut k = 0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
            k = i + 1;
        }
    }
    debug_assert!(k > 0);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// ⟨ψ|ρ|ψ⟩ for a pure reference state.
pub fn state_fidelity(rho: &CMat, psi: &[Complex64]) -> f64 {
    let n = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += psi[r].conj() * rho[(r, c)] * psi[c];
        }
    }
    acc.re
}

/// Trace of a matrix.
pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_dimensions_and_values() {
        let a = CMat::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]);
        let k = kron(&a, &a);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(3, 3)], Complex64::new(4.0, 0.0));
        assert_eq!(k[(1, 1)], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn phase_alignment_ignores_global_phase() {
        let a = CMat::from_row_slice(1, 2, &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let ph = Complex64::from_polar(1.0, 1.234);
        let b = a.map(|x| x * ph);
        assert!(phase_aligned_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn simplex_projection_clamps_and_normalizes() {
        let p = project_to_simplex(&[0.9, 0.3, -0.2]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        // Already a distribution: unchanged.
        let q = project_to_simplex(&[0.25, 0.75]);
        assert!((q[0] - 0.25).abs() < 1e-12 && (q[1] - 0.75).abs() < 1e-12);
    }
}
