//! Dense spectral decompositions and tridiagonal extreme-eigenvalue bounds.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

/// Maximum dimension accepted by the dense eigensolvers.
pub const DENSE_LIMIT: usize = 4096;

/// Eigenvalues (ascending) and optionally the D-orthonormal eigenvector
/// columns of the pencil `S w = lambda D w`, i.e. `Psi^T D Psi = I`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<f64>>,
}

/// Full dense generalized eigensolve of `(S, D)` with diagonal `D`.
///
/// Works on `D^{-1/2} S D^{-1/2}` so the returned vectors satisfy
/// `Psi^T D Psi = I`.
pub fn dense_spectrum(op: &DiscreteOperator, with_vectors: bool) -> Result<Spectrum> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let dinv_sqrt: Vec<f64> = op.mass_diag().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in op.stiffness().entries() {
        m[(i, j)] = v * dinv_sqrt[i] * dinv_sqrt[j];
    }
    // enforce exact symmetry against roundoff in the scaling
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let decomp = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].total_cmp(&decomp.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| decomp.eigenvalues[k]).collect();
    let eigenvectors = if with_vectors {
        let mut psi = DMatrix::<f64>::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            for i in 0..n {
                psi[(i, col)] = decomp.eigenvectors[(i, k)] * dinv_sqrt[i];
            }
        }
        Some(psi)
    } else {
        None
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Generalized symmetric-definite eigensolve `K psi = mu W psi` for dense
/// `K`, `W` with `W` SPD; eigenvectors come back W-orthonormal.
pub fn dense_generalized(k: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    let chol = w
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigenFailure("weight matrix is not positive definite".into()))?;
    // C = L^{-1} K L^{-T}
    let l = chol.l();
    let mut c = k.clone();
    l.solve_lower_triangular_mut(&mut c);
    c.transpose_mut();
    l.solve_lower_triangular_mut(&mut c);
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let decomp = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].total_cmp(&decomp.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    // psi = L^{-T} v
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (col, &kk) in order.iter().enumerate() {
        let mut v: Vec<f64> = (0..n).map(|i| decomp.eigenvectors[(i, kk)]).collect();
        // back substitution with L^T
        for i in (0..n).rev() {
            let mut acc = v[i];
            for j in (i + 1)..n {
                acc -= l[(j, i)] * v[j];
            }
            v[i] = acc / l[(i, i)];
        }
        for i in 0..n {
            vecs[(i, col)] = v[i];
        }
    }
    Ok((vals, vecs))
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
///
/// `diag` has length n, `off` length n-1. Runs in O(n log(1/tol)) and is
/// independent of the dense QR path, which makes it usable both for cheap
/// bound computation at assembly time and as a cross-check oracle.
pub fn tridiag_extreme_eigenvalues(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n);
    // Gershgorin bracket
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i < n - 1 {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    if n == 1 {
        return (diag[0], diag[0]);
    }
    // count of eigenvalues < x via the Sturm sequence of the LDL^T pivots
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let denom = if d == 0.0 { 1e-300 } else { d };
            d = diag[i] - x - off[i - 1] * off[i - 1] / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bisect = |target: usize, mut a: f64, mut b: f64| -> f64 {
        for _ in 0..140 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if count_below(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    let lmin = bisect(1, lo, hi);
    let lmax = bisect(n, lo, hi);
    (lmin, lmax)
}

/// Extreme generalized eigenvalues of a tridiagonal `(S, diag D)` pencil.
pub fn tridiag_pencil_extremes(op: &DiscreteOperator) -> Result<(f64, f64)> {
    if !op.is_tridiagonal() {
        return Err(Error::Unsupported(
            "extreme-eigenvalue bisection requires a tridiagonal stiffness".into(),
        ));
    }
    let n = op.dim();
    let d = op.mass_diag();
    let mut main = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (i, j, v) in op.stiffness().entries() {
        if i == j {
            main[i] = v / d[i];
        } else if j == i + 1 {
            off[i] = v / (d[i] * d[j]).sqrt();
        }
    }
    Ok(tridiag_extreme_eigenvalues(&main, &off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{BoundsProvenance, CsrMatrix};
    use approx::assert_relative_eq;

    fn toy_op() -> DiscreteOperator {
        let t = [
            (0, 0, 2.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 2.0),
        ];
        DiscreteOperator::new(
            CsrMatrix::from_triplets(3, &t),
            vec![1.0, 1.0, 1.0],
            0.5,
            4.0,
            BoundsProvenance::Fallback,
        )
        .unwrap()
    }

    #[test]
    fn dense_matches_analytic_tridiagonal() {
        let spec = dense_spectrum(&toy_op(), true).unwrap();
        let expect = [2.0 - 2.0_f64.sqrt(), 2.0, 2.0 + 2.0_f64.sqrt()];
        for (a, b) in spec.eigenvalues.iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        // D-orthonormality
        let psi = spec.eigenvectors.unwrap();
        let gram = psi.transpose() * &psi;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sturm_extremes_match_dense() {
        let (lmin, lmax) = tridiag_pencil_extremes(&toy_op()).unwrap();
        assert_relative_eq!(lmin, 2.0 - 2.0_f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(lmax, 2.0 + 2.0_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn generalized_pencil_weighted_mass() {
        // S = diag(1, 4), W = diag(2, 2): mu = 0.5, 2
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = dense_generalized(&k, &w).unwrap();
        assert_relative_eq!(vals[0], 0.5, max_relative = 1e-13);
        assert_relative_eq!(vals[1], 2.0, max_relative = 1e-13);
        let g = vecs.transpose() * w * &vecs;
        assert_relative_eq!(g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 1.0, epsilon = 1e-12);
    }
}
