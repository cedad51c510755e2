//! Small complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Relative tolerance for power iteration convergence.
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap for power iteration.
pub const POWER_MAX_ITERS: usize = 500;

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on a Hermitian PSD matrix using the Rayleigh quotient.
///
/// Falls back to a dense eigensolver if the cap is reached.
pub fn lambda_max(d: &CMatrix) -> PowerResult {
    let n = d.nrows();
    if n == 0 {
        return PowerResult { value: 0.0, iterations: 0, converged: true };
    }
    // deterministic start vector that is not orthogonal to generic eigenvectors
    let mut v = CVector::from_fn(n, |i, _| C64::new(1.0, 0.37 * (i as f64 + 1.0).sqrt()));
    let norm = v.norm();
    v /= C64::from(norm);
    let mut prev = f64::NAN;
    let mut y = CVector::zeros(n);
    for it in 1..=POWER_MAX_ITERS {
        y.gemv(C64::from(1.0), d, &v, C64::from(0.0));
        let rq = v.dotc(&y).re;
        let ny = y.norm();
        if ny == 0.0 {
            return PowerResult { value: 0.0, iterations: it, converged: true };
        }
        if (rq - prev).abs() <= POWER_TOL * rq.abs() {
            return PowerResult { value: rq, iterations: it, converged: true };
        }
        prev = rq;
        v.copy_from(&y);
        v /= C64::from(ny);
    }
    PowerResult {
        value: lambda_max_dense(d),
        iterations: POWER_MAX_ITERS,
        converged: false,
    }
}

/// Largest eigenvalue via a full Hermitian eigendecomposition.
pub fn lambda_max_dense(d: &CMatrix) -> f64 {
    if d.nrows() == 0 {
        return 0.0;
    }
    let h = hermitian_part(d);
    h.symmetric_eigenvalues().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// (A + A^H) / 2
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::from(0.5)
}

/// Smallest `lambda >= 0` with `sum_i w_i / (s_i + lambda)^2 <= target`.
///
/// `s` are eigenvalues of a PSD matrix (small negatives are clamped to zero),
/// `w` the squared magnitudes of the rotated linear term. Returns 0 when the
/// unconstrained point already satisfies the budget.
pub fn secular_root(w: &[f64], s: &[f64], target: f64, rel_tol: f64) -> f64 {
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let floor = smax * 1e-14;
    let g = |lam: f64| -> f64 {
        w.iter()
            .zip(s)
            .map(|(&wi, &si)| {
                let den = si.max(0.0) + lam;
                if wi == 0.0 {
                    0.0
                } else if den <= floor {
                    f64::INFINITY
                } else {
                    wi / (den * den)
                }
            })
            .sum()
    };
    if g(0.0) <= target {
        return 0.0;
    }
    let total: f64 = w.iter().sum();
    let mut lo = 0.0;
    let mut hi = (total / target).sqrt();
    if !(hi > 0.0) || !hi.is_finite() {
        return 0.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm > target {
            lo = mid;
        } else {
            hi = mid;
            if target - gm <= rel_tol * target {
                break;
            }
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    hi
}

/// Hermitian eigendecomposition returning (eigenvalues, eigenvectors).
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(a).symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}
