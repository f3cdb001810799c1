//! Gauss-Jacobi quadrature of the Balakrishnan integral after the Moebius
//! substitution onto (-1, 1).
//!
//! The rule integrates against the weight `(1-x)^{-alpha} (1+x)^{alpha-1}`;
//! nodes and weights come from the Golub-Welsch eigenproblem of the Jacobi
//! recurrence.  The shift parameter is `tau = sqrt(lambda_min lambda_max)`,
//! the asymptotically optimal choice for the spectral interval.

use nalgebra::DMatrix;

use super::PartialFractionRational;
use crate::error::{Error, Result};

/// Nodes and weights of the k-point Gauss rule for the Jacobi weight
/// `(1-x)^a (1+x)^b` on (-1, 1), by the Golub-Welsch construction.
///
/// Returned nodes are ascending; weights sum to the zeroth moment
/// `2^{a+b+1} B(a+1, b+1)`.
pub fn gauss_jacobi_rule(k: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Parse("Gauss rule needs at least one node".into()));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Parse(format!(
            "Jacobi exponents must exceed -1, got ({a}, {b})"
        )));
    }
    if k == 1 {
        // single node at the first recurrence coefficient
        let node = (b - a) / (a + b + 2.0);
        return Ok((vec![node], vec![jacobi_moment0(a, b)]));
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    t[(0, 0)] = (b - a) / (a + b + 2.0);
    for i in 0..k - 1 {
        let n = (i + 1) as f64;
        let denom = 2.0 * n + a + b;
        t[(i + 1, i + 1)] = (b * b - a * a) / (denom * (denom + 2.0));
        // the generic beta_n formula is 0/0 at n = 1 when a + b = -1;
        // the dedicated first coefficient avoids it
        let beta = if i == 0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((a + b + 2.0).powi(2) * (a + b + 3.0))
        } else {
            4.0 * n * (n + a) * (n + b) * (n + a + b)
                / (denom * denom * (denom + 1.0) * (denom - 1.0))
        };
        let off = beta.sqrt();
        t[(i, i + 1)] = off;
        t[(i + 1, i)] = off;
    }
    let decomp = t.symmetric_eigen();
    let mu0 = jacobi_moment0(a, b);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let q = decomp.eigenvectors[(0, j)];
            (decomp.eigenvalues[j], mu0 * q * q)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if pairs.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::EigenFailure("Jacobi recurrence eigensolve".into()));
    }
    Ok(pairs.into_iter().unzip())
}

fn jacobi_moment0(a: f64, b: f64) -> f64 {
    // 2^{a+b+1} Gamma(a+1) Gamma(b+1) / Gamma(a+b+2)
    super::extension::gamma_fn(a + 1.0) * super::extension::gamma_fn(b + 1.0)
        / super::extension::gamma_fn(a + b + 2.0)
        * 2f64.powf(a + b + 1.0)
}

/// Gauss-Jacobi rational approximation of `z^{-alpha}`:
/// residues `gamma_j = (2 sin(pi a) tau^{1-a}/pi) w_j/(1+theta_j)`,
/// poles `-tau (1-theta_j)/(1+theta_j)`.
pub fn gauss_jacobi(
    alpha: f64,
    k: usize,
    lambda_min: f64,
    lambda_max: f64,
) -> Result<PartialFractionRational> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
        return Err(Error::InvalidBounds {
            min: lambda_min,
            max: lambda_max,
        });
    }
    let tau = (lambda_min * lambda_max).sqrt();
    gauss_jacobi_with_tau(alpha, k, tau)
}

/// Same rule with an explicit shift parameter override.
pub fn gauss_jacobi_with_tau(alpha: f64, k: usize, tau: f64) -> Result<PartialFractionRational> {
    let (nodes, weights) = gauss_jacobi_rule(k, -alpha, alpha - 1.0)?;
    let front = 2.0 * (std::f64::consts::PI * alpha).sin() * tau.powf(1.0 - alpha)
        / std::f64::consts::PI;
    let mut terms = Vec::with_capacity(k);
    for (theta, w) in nodes.iter().zip(&weights) {
        let residue = front * w / (1.0 + theta);
        let pole = -tau * (1.0 - theta) / (1.0 + theta);
        terms.push((residue, pole));
    }
    PartialFractionRational::new(alpha, 0.0, terms, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_rule_closed_form() {
        // theta1 = 2 alpha - 1, w1 = pi/sin(pi alpha): gamma1 = tau^{1-a}/a,
        // eta1 = tau (1-a)/a
        for alpha in [0.25, 0.5, 0.7] {
            let (nodes, weights) = gauss_jacobi_rule(1, -alpha, alpha - 1.0).unwrap();
            assert_relative_eq!(nodes[0], 2.0 * alpha - 1.0, max_relative = 1e-13);
            assert_relative_eq!(
                weights[0],
                std::f64::consts::PI / (std::f64::consts::PI * alpha).sin(),
                max_relative = 1e-12
            );
            let tau = 3.7;
            let r = gauss_jacobi_with_tau(alpha, 1, tau).unwrap();
            let (c, d) = r.terms()[0];
            assert_relative_eq!(c, tau.powf(1.0 - alpha) / alpha, max_relative = 1e-12);
            assert_relative_eq!(d, -tau * (1.0 - alpha) / alpha, max_relative = 1e-12);
        }
    }

    #[test]
    fn one_point_rule_alpha_half_exact_at_tau() {
        // r(z) = 2 sqrt(tau)/(tau + z); r(tau) = tau^{-1/2}
        let tau = 2.31;
        let r = gauss_jacobi_with_tau(0.5, 1, tau).unwrap();
        assert_relative_eq!(r.eval(tau).unwrap(), tau.powf(-0.5), max_relative = 1e-13);
    }

    #[test]
    fn moments_against_numeric_integration() {
        // zeroth and first moments of the weight, integrating each half
        // after a power substitution that removes the endpoint singularity
        let alpha = 0.3;
        let (a, b) = (-alpha, alpha - 1.0);
        let n = 200_000usize;
        let h = 1.0 / n as f64;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        // left half: 1 + x = s^{1/(b+1)}, integrand (2 - y)^a with y = 1+x
        for i in 0..n {
            let s: f64 = (i as f64 + 0.5) * h;
            let y = s.powf(1.0 / (b + 1.0));
            let g = (2.0 - y).powf(a) / (b + 1.0);
            m0 += g * h;
            m1 += (y - 1.0) * g * h;
        }
        // right half: 1 - x = s^{1/(a+1)}, integrand (2 - y)^b with y = 1-x
        for i in 0..n {
            let s: f64 = (i as f64 + 0.5) * h;
            let y = s.powf(1.0 / (a + 1.0));
            let g = (2.0 - y).powf(b) / (a + 1.0);
            m0 += g * h;
            m1 += (1.0 - y) * g * h;
        }
        assert_relative_eq!(
            m0,
            std::f64::consts::PI / (std::f64::consts::PI * alpha).sin(),
            max_relative = 1e-6
        );
        let (nodes, weights) = gauss_jacobi_rule(1, a, b).unwrap();
        assert_relative_eq!(nodes[0] * weights[0], m1, max_relative = 1e-4);
    }

    #[test]
    fn sign_pattern_up_to_forty_nodes() {
        for alpha in [0.25, 0.5, 0.75] {
            for k in [1usize, 5, 12, 40] {
                let r = gauss_jacobi(alpha, k, 1.0, 1e6).unwrap();
                assert_eq!(r.solve_count(), k);
                assert!(r.has_positive_residues(), "alpha={alpha} k={k}");
                assert!(r.terms().iter().all(|&(_, d)| d < 0.0));
            }
        }
    }

    #[test]
    fn scalar_accuracy_improves_with_k() {
        let (lmin, lmax) = (10.0, 1e5);
        let mut last = f64::INFINITY;
        for k in [4, 8, 16] {
            let r = gauss_jacobi(0.5, k, lmin, lmax).unwrap();
            let mut worst: f64 = 0.0;
            let mut z = lmin;
            while z <= lmax {
                let e = (r.eval(z).unwrap() - z.powf(-0.5)).abs();
                worst = worst.max(e);
                z *= 1.25;
            }
            assert!(worst < last);
            last = worst;
        }
    }
}
