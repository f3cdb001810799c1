//! Composite-rule quadrature after the power substitution
//! `mu = (1-xi)^{sigma/alpha} xi^{-1/alpha}` of the Balakrishnan integral.
//!
//! With `sigma = kappa * max(1/alpha, 1/(1-alpha))` the transformed
//! integrand has enough bounded derivatives on [0,1] for the composite
//! trapezoid (`kappa = 2`) or Simpson (`kappa = 4`) rule.  The operator is
//! assumed normalized so its smallest eigenvalue is 1; the returned rational
//! carries the corresponding scaling record.

use super::PartialFractionRational;
use crate::error::{Error, Result};

/// Smoothness order of the composite rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothnessOrder {
    /// Composite trapezoid, sigma = 2 max(1/a, 1/(1-a)).
    Trapezoid,
    /// Composite Simpson, sigma = 4 max(1/a, 1/(1-a)).
    Simpson,
}

impl SmoothnessOrder {
    pub fn kappa(self) -> f64 {
        match self {
            SmoothnessOrder::Trapezoid => 2.0,
            SmoothnessOrder::Simpson => 4.0,
        }
    }
}

/// Builds the sigma-substituted composite rule with `msub` subintervals.
///
/// `lambda_ref` is the normalization (typically the operator's smallest
/// eigenvalue); the rational is built for the normalized variable and
/// carries `matrix_scale = 1/lambda_ref`, `prefactor = lambda_ref^{-alpha}`.
///
/// Endpoint treatment by analytic limits: at `xi = 0` the integrand tends to
/// the identity, contributing the endpoint weight to the constant term; at
/// `xi = 1` the weight factor vanishes for every admissible sigma.
pub fn sigma_quadrature(
    alpha: f64,
    order: SmoothnessOrder,
    msub: usize,
    lambda_ref: f64,
) -> Result<PartialFractionRational> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(lambda_ref > 0.0) {
        return Err(Error::InvalidBounds {
            min: lambda_ref,
            max: lambda_ref,
        });
    }
    if msub < 2 {
        return Err(Error::Parse("need at least two subintervals".into()));
    }
    if matches!(order, SmoothnessOrder::Simpson) && msub % 2 != 0 {
        return Err(Error::Parse("Simpson rule needs an even msub".into()));
    }
    let sigma = order.kappa() * (1.0 / alpha).max(1.0 / (1.0 - alpha));
    let weight_exp = sigma * (1.0 - alpha) / alpha - 1.0;
    let front = (alpha * std::f64::consts::PI).sin() / (alpha * std::f64::consts::PI);
    let h = 1.0 / msub as f64;

    let quad_weight = |i: usize| -> f64 {
        match order {
            SmoothnessOrder::Trapezoid => {
                if i == 0 || i == msub {
                    h / 2.0
                } else {
                    h
                }
            }
            SmoothnessOrder::Simpson => {
                if i == 0 || i == msub {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            }
        }
    };

    // xi = 0: integrand limit is 1 (identity contribution)
    let c0 = quad_weight(0) * front;
    let mut terms = Vec::with_capacity(msub - 1);
    for i in 1..msub {
        let xi = i as f64 * h;
        let residue = quad_weight(i)
            * front
            * (1.0 - xi).powf(weight_exp)
            * (1.0 + (sigma - 1.0) * xi)
            * xi.powf(-1.0 / alpha);
        let pole = -(1.0 - xi).powf(sigma / alpha) * xi.powf(-1.0 / alpha);
        if !residue.is_finite() || !pole.is_finite() || pole == 0.0 {
            return Err(Error::ExponentOverflow(format!(
                "sigma-rule node xi = {xi} with sigma = {sigma} leaves f64 range"
            )));
        }
        terms.push((residue, pole));
    }
    // xi = 1: weight_exp > 0 for admissible sigma, so the limit vanishes
    debug_assert!(weight_exp > 0.0);
    PartialFractionRational::new(
        alpha,
        c0,
        terms,
        lambda_ref.powf(-alpha),
        1.0 / lambda_ref,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigma_value_for_alpha_half_trapezoid() {
        // sigma = 2 * max(2, 2) = 4
        let sigma = SmoothnessOrder::Trapezoid.kappa() * (1.0 / 0.5_f64).max(1.0 / 0.5);
        assert_eq!(sigma, 4.0);
    }

    #[test]
    fn vanishing_weight_at_right_endpoint() {
        // sigma(1-a)/a - 1 > 0 makes (1-xi)^exp vanish at xi = 1
        for alpha in [0.25_f64, 0.5, 0.75] {
            for order in [SmoothnessOrder::Trapezoid, SmoothnessOrder::Simpson] {
                let sigma = order.kappa() * (1.0 / alpha).max(1.0 / (1.0 - alpha));
                let exp = sigma * (1.0 - alpha) / alpha - 1.0;
                assert!(exp > 0.0, "alpha={alpha}");
                let val: f64 = (1.0_f64 - 1.0).powf(exp);
                assert_eq!(val, 0.0);
            }
        }
    }

    #[test]
    fn scalar_convergence_order_meets_kappa_minus_half() {
        // aggregate observed order over msub 16 -> 256 at z in {1, 10, 100}
        for (alpha, order, kappa) in [
            (0.25, SmoothnessOrder::Trapezoid, 2.0),
            (0.25, SmoothnessOrder::Simpson, 4.0),
            (0.5, SmoothnessOrder::Trapezoid, 2.0),
            (0.5, SmoothnessOrder::Simpson, 4.0),
        ] {
            let err = |msub: usize| -> f64 {
                let r = sigma_quadrature(alpha, order, msub, 1.0).unwrap();
                [1.0, 10.0, 100.0]
                    .iter()
                    .map(|&z| (r.eval(z).unwrap() - z.powf(-alpha)).abs())
                    .fold(0.0, f64::max)
            };
            let (e16, e256) = (err(16), err(256));
            let observed = (e16 / e256).log2() / 4.0;
            assert!(
                observed >= kappa - 0.5,
                "alpha={alpha} kappa={kappa}: observed order {observed:.2}"
            );
        }
    }

    #[test]
    fn scaling_record_for_normalization() {
        let r = sigma_quadrature(0.5, SmoothnessOrder::Trapezoid, 32, 25.0).unwrap();
        assert_relative_eq!(r.matrix_scale(), 1.0 / 25.0, max_relative = 1e-15);
        assert_relative_eq!(r.prefactor(), 25.0_f64.powf(-0.5), max_relative = 1e-15);
        // full evaluation still approximates z^{-1/2} on the shifted interval
        let z = 80.0;
        assert_relative_eq!(r.eval(z).unwrap(), z.powf(-0.5), max_relative = 1e-3);
    }

    #[test]
    fn positive_residues_and_constant() {
        let r = sigma_quadrature(0.25, SmoothnessOrder::Simpson, 64, 1.0).unwrap();
        assert!(r.has_positive_residues());
        assert!(r.constant() > 0.0);
    }
}
