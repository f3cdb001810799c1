//! Independent oracles and error instrumentation.
//!
//! Everything here deliberately avoids the solver pathway: the dense oracle
//! goes through a full eigendecomposition, the uniform-mesh oracle through
//! closed-form sine modes, and the continuum oracle through a truncated
//! series with a certified tail bound.

use serde::{Deserialize, Serialize};

use crate::discretize::uniform_mode_eigenvalue;
use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;
use crate::spectrum::{dense_spectrum, DENSE_LIMIT};

/// Relative errors of a computed solution against a reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `||u - uref||_2 / ||uref||_2`
    pub l2_rel: f64,
    /// `max |u - uref| / max |uref|`
    pub linf_rel: f64,
    /// D-weighted relative error.
    pub d_norm_rel: f64,
    /// `||u - uref||_2 / ||f||_2` when the data vector is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_vs_data: Option<f64>,
    /// `max |u - uref| / max |f|` when the data vector is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf_vs_data: Option<f64>,
    /// Set when a denominator vanished and the entry is absolute.
    pub absolute_fallback: bool,
    pub oracle: String,
}

/// Computes relative l2 / l-inf / D-norm errors; a vanishing reference norm
/// downgrades the entry to an absolute error and sets the flag.
pub fn error_report(
    u: &[f64],
    uref: &[f64],
    op: &DiscreteOperator,
    data: Option<&[f64]>,
    oracle: &str,
) -> Result<ErrorReport> {
    if u.len() != uref.len() || u.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: u.len().min(uref.len()),
        });
    }
    let diff: Vec<f64> = u.iter().zip(uref).map(|(a, b)| a - b).collect();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let linf = |v: &[f64]| v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let mut absolute_fallback = false;
    let mut ratio = |num: f64, den: f64| -> f64 {
        if den == 0.0 {
            absolute_fallback = true;
            num
        } else {
            num / den
        }
    };
    let l2_rel = ratio(l2(&diff), l2(uref));
    let linf_rel = ratio(linf(&diff), linf(uref));
    let d_norm_rel = ratio(op.weighted_norm(&diff)?, op.weighted_norm(uref)?);
    let (l2_vs_data, linf_vs_data) = match data {
        Some(f) => (
            Some(ratio(l2(&diff), l2(f))),
            Some(ratio(linf(&diff), linf(f))),
        ),
        None => (None, None),
    };
    Ok(ErrorReport {
        l2_rel,
        linf_rel,
        d_norm_rel,
        l2_vs_data,
        linf_vs_data,
        absolute_fallback,
        oracle: oracle.to_string(),
    })
}

/// Applies `g(lambda)` spectrally through a dense eigendecomposition:
/// `u = sum_j g(lambda_j) (f, psi_j)_D psi_j`.
pub fn dense_spectral_apply<G>(op: &DiscreteOperator, g: G, f: &[f64]) -> Result<Vec<f64>>
where
    G: Fn(f64) -> f64,
{
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let spec = dense_spectrum(op, true)?;
    let psi = spec.eigenvectors.as_ref().unwrap();
    let mut u = vec![0.0; n];
    for (j, &lam) in spec.eigenvalues.iter().enumerate() {
        let mut coef = 0.0;
        for i in 0..n {
            coef += op.mass_diag()[i] * f[i] * psi[(i, j)];
        }
        let scale = g(lam) * coef;
        for i in 0..n {
            u[i] += scale * psi[(i, j)];
        }
    }
    Ok(u)
}

/// Dense solve of `(A^alpha + q I) u = f` via the eigen-expansion
/// (`q = 0` gives `A^{-alpha} f`).
pub fn dense_spectral_solve(
    op: &DiscreteOperator,
    alpha: f64,
    f: &[f64],
    q: f64,
) -> Result<Vec<f64>> {
    dense_spectral_apply(op, |lam| 1.0 / (lam.powf(alpha) + q), f)
}

/// Closed-form spectral solve on the uniform 1D/2D Laplacian mesh: the
/// eigenvectors are sine modes and the expansion is evaluated by separable
/// summation (O(N^{3/2}) in 2D).
///
/// `n` is the interior point count per direction; `f` has length `n^d`.
pub fn uniform_spectral_solve(
    n: usize,
    d: usize,
    alpha: f64,
    f: &[f64],
    q: f64,
) -> Result<Vec<f64>> {
    uniform_spectral_apply(n, d, |lam| 1.0 / (lam.powf(alpha) + q), f)
}

/// Same as [`uniform_spectral_solve`] with an arbitrary spectral symbol.
pub fn uniform_spectral_apply<G>(n: usize, d: usize, g: G, f: &[f64]) -> Result<Vec<f64>>
where
    G: Fn(f64) -> f64,
{
    match d {
        1 => {
            if f.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.len(),
                });
            }
            let basis = sine_basis(n);
            // fhat_j = (2/(n+1)) sum_i f_i sin(i j pi/(n+1))
            let norm = 2.0 / (n as f64 + 1.0);
            let mut u = vec![0.0; n];
            for j in 1..=n {
                let mut coef = 0.0;
                for i in 0..n {
                    coef += f[i] * basis[j - 1][i];
                }
                coef *= norm;
                let scale = g(uniform_mode_eigenvalue(n, j)) * coef;
                for i in 0..n {
                    u[i] += scale * basis[j - 1][i];
                }
            }
            Ok(u)
        }
        2 => {
            if f.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: n * n,
                    got: f.len(),
                });
            }
            let basis = sine_basis(n);
            let norm = 2.0 / (n as f64 + 1.0);
            // F-hat = Q^T F Q, row index y, column x
            let mut tmp = vec![0.0; n * n];
            for jy in 0..n {
                for ix in 0..n {
                    let mut acc = 0.0;
                    for iy in 0..n {
                        acc += basis[jy][iy] * f[iy * n + ix];
                    }
                    tmp[jy * n + ix] = acc;
                }
            }
            let mut fhat = vec![0.0; n * n];
            for jy in 0..n {
                for jx in 0..n {
                    let mut acc = 0.0;
                    for ix in 0..n {
                        acc += tmp[jy * n + ix] * basis[jx][ix];
                    }
                    fhat[jy * n + jx] = acc * norm * norm;
                }
            }
            for jy in 0..n {
                for jx in 0..n {
                    let lam = uniform_mode_eigenvalue(n, jy + 1) + uniform_mode_eigenvalue(n, jx + 1);
                    fhat[jy * n + jx] *= g(lam);
                }
            }
            // back-transform
            for jy in 0..n {
                for ix in 0..n {
                    let mut acc = 0.0;
                    for jx in 0..n {
                        acc += fhat[jy * n + jx] * basis[jx][ix];
                    }
                    tmp[jy * n + ix] = acc;
                }
            }
            let mut u = vec![0.0; n * n];
            for iy in 0..n {
                for ix in 0..n {
                    let mut acc = 0.0;
                    for jy in 0..n {
                        acc += basis[jy][iy] * tmp[jy * n + ix];
                    }
                    u[iy * n + ix] = acc;
                }
            }
            Ok(u)
        }
        _ => Err(Error::Unsupported(format!("dimension {d}"))),
    }
}

fn sine_basis(n: usize) -> Vec<Vec<f64>> {
    let np1 = n as f64 + 1.0;
    (1..=n)
        .map(|j| {
            (1..=n)
                .map(|i| (j as f64 * i as f64 * std::f64::consts::PI / np1).sin())
                .collect()
        })
        .collect()
}

/// Sign-alternating quadrant data on the unit square sampled at interior
/// grid nodes: +1 on the lower-left and upper-right quadrants, -1 on the
/// other two; interface nodes take the value of the quadrant toward the
/// lower left.  In 1D: +1 on the left half, -1 on the right.
pub fn checkerboard_rhs(n: usize, d: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::Parse("need n >= 1".into()));
    }
    let h = 1.0 / (n as f64 + 1.0);
    let left = |coord: f64| coord <= 0.5; // ties resolve toward lower-left
    match d {
        1 => Ok((1..=n)
            .map(|i| if left(i as f64 * h) { 1.0 } else { -1.0 })
            .collect()),
        2 => {
            let mut f = Vec::with_capacity(n * n);
            for iy in 1..=n {
                for ix in 1..=n {
                    let same = left(ix as f64 * h) == left(iy as f64 * h);
                    f.push(if same { 1.0 } else { -1.0 });
                }
            }
            Ok(f)
        }
        _ => Err(Error::Unsupported(format!("dimension {d}"))),
    }
}

/// Truncated continuum sine series of `(-u'')^{-alpha} f = u` on (0,1):
/// `u(x) = sum_{j<=J} (j pi)^{-2 alpha} f_j sin(j pi x)`.
///
/// `sine_coeffs = None` means `f = 1` with coefficients
/// `2 (1 - cos(j pi))/(j pi)`.  The Dirichlet-kernel tail bound
/// `sum_{j>J} a_j sin(j pi x) <= a_J csc(pi x_min / 2)` (monotone `a_j`)
/// must fall below `tol`, else the call errors out.
pub fn continuum_series_oracle(
    alpha: f64,
    sine_coeffs: Option<&[f64]>,
    truncation: usize,
    grid: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let coeff = |j: usize| -> f64 {
        match sine_coeffs {
            Some(c) => {
                if j <= c.len() {
                    c[j - 1]
                } else {
                    0.0
                }
            }
            None => {
                let jpi = j as f64 * std::f64::consts::PI;
                2.0 * (1.0 - jpi.cos()) / jpi
            }
        }
    };
    // tail bound only needed for the infinite (f = 1) series
    if sine_coeffs.is_none() {
        let xmin = grid
            .iter()
            .map(|&x| x.min(1.0 - x))
            .fold(f64::INFINITY, f64::min);
        if !(xmin > 0.0) {
            return Err(Error::Parse("grid must be interior to (0,1)".into()));
        }
        let j = truncation.max(1) as f64;
        let a_j = (4.0 / std::f64::consts::PI) * (j * std::f64::consts::PI).powf(-2.0 * alpha) / j;
        let csc = 1.0 / (std::f64::consts::PI * xmin / 2.0).sin();
        let bound = a_j * csc;
        if bound > tol {
            return Err(Error::TailBound {
                bound,
                tol,
                j: truncation,
            });
        }
    } else if let Some(c) = sine_coeffs {
        if truncation < c.len() {
            return Err(Error::TailBound {
                bound: f64::INFINITY,
                tol,
                j: truncation,
            });
        }
    }
    let mut u = vec![0.0; grid.len()];
    for j in 1..=truncation {
        let fj = coeff(j);
        if fj == 0.0 {
            continue;
        }
        let scale = (j as f64 * std::f64::consts::PI).powf(-2.0 * alpha) * fj;
        for (ui, &x) in u.iter_mut().zip(grid) {
            *ui += scale * (j as f64 * std::f64::consts::PI * x).sin();
        }
    }
    Ok(u)
}
