//! Sinc quadrature of the Balakrishnan integral after the exponential
//! substitution: trapezoid-type nodes `y_l = l k'` on the real line,
//! truncated asymmetrically so that both truncation errors balance the
//! quadrature error.

use super::PartialFractionRational;
use crate::error::{Error, Result};

/// Parameters of the sinc rule: step `k'` and node counts `M` (negative
/// semi-axis) and `N` (positive semi-axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincSpec {
    pub alpha: f64,
    pub kprime: f64,
    pub m_neg: usize,
    pub n_pos: usize,
}

impl SincSpec {
    /// Balanced truncation: `M = ceil(pi^2/(4 alpha k'^2))`,
    /// `N = ceil(pi^2/(4 (1-alpha) k'^2))`.
    pub fn balanced(alpha: f64, kprime: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(kprime > 0.0) {
            return Err(Error::Parse(format!("kprime must be positive, got {kprime}")));
        }
        let (m_neg, n_pos) = sinc_node_counts(alpha, kprime);
        Ok(SincSpec {
            alpha,
            kprime,
            m_neg,
            n_pos,
        })
    }

    /// Total number of shifted solves, `M + N + 1`.
    pub fn term_count(&self) -> usize {
        self.m_neg + self.n_pos + 1
    }
}

/// The balanced node counts `(M, N)` for given `alpha` and step.
pub fn sinc_node_counts(alpha: f64, kprime: f64) -> (usize, usize) {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let m = (pi2 / (4.0 * alpha * kprime * kprime)).ceil() as usize;
    let n = (pi2 / (4.0 * (1.0 - alpha) * kprime * kprime)).ceil() as usize;
    (m, n)
}

/// Builds the sinc rule as partial fractions: term `l` has residue
/// `(k' sin(pi a)/pi) e^{(1-a) y_l}` and pole `-e^{y_l}`, `l = -M..N`.
pub fn sinc_quadrature(spec: &SincSpec) -> Result<PartialFractionRational> {
    let a = spec.alpha;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::AlphaOutOfRange(a));
    }
    let kp = spec.kprime;
    let front = kp * (std::f64::consts::PI * a).sin() / std::f64::consts::PI;
    let mut terms = Vec::with_capacity(spec.term_count());
    for l in -(spec.m_neg as i64)..=(spec.n_pos as i64) {
        let y = l as f64 * kp;
        let residue = front * ((1.0 - a) * y).exp();
        let pole = -y.exp();
        if !residue.is_finite() || !pole.is_finite() {
            return Err(Error::ExponentOverflow(format!(
                "sinc node y = {y} overflows"
            )));
        }
        terms.push((residue, pole));
    }
    PartialFractionRational::new(a, 0.0, terms, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_alpha_half_kprime_one() {
        let spec = SincSpec::balanced(0.5, 1.0).unwrap();
        assert_eq!((spec.m_neg, spec.n_pos), (5, 5));
        assert_eq!(spec.term_count(), 11);
        assert_eq!(sinc_quadrature(&spec).unwrap().solve_count(), 11);
    }

    #[test]
    fn node_counts_match_reported_solve_totals() {
        // 120 solves at (alpha, k') = (0.25, 1/3) and 91 at (0.5, 1/3)
        let s = SincSpec::balanced(0.25, 1.0 / 3.0).unwrap();
        assert_eq!((s.m_neg, s.n_pos), (89, 30));
        assert_eq!(s.term_count(), 120);
        let s = SincSpec::balanced(0.5, 1.0 / 3.0).unwrap();
        assert_eq!(s.term_count(), 91);
    }

    #[test]
    fn scalar_value_improves_with_smaller_step() {
        // r(1) should approach 1^-alpha = 1 as k' decreases; with balanced
        // truncation the decay follows the truncation exponent
        let mut last = f64::INFINITY;
        for kp in [1.0, 0.5, 1.0 / 3.0] {
            let r = sinc_quadrature(&SincSpec::balanced(0.5, kp).unwrap()).unwrap();
            let err = (r.eval(1.0).unwrap() - 1.0).abs();
            assert!(
                err < last,
                "error {err} did not improve on {last} at k'={kp}"
            );
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn residues_positive_poles_negative() {
        let r = sinc_quadrature(&SincSpec::balanced(0.25, 0.5).unwrap()).unwrap();
        assert!(r.has_positive_residues());
        assert_eq!(r.constant(), 0.0);
        assert!(r.terms().iter().all(|&(_, d)| d < 0.0));
    }
}
