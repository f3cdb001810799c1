//! Diagonal Pade approximants of `(1+z)^{-alpha}` at the origin.
//!
//! The [m/m] table entry is obtained from the Taylor coefficients
//! `binom(-alpha, j)` by solving the m x m Hankel system for the denominator
//! and convolving for the numerator.  The partial-fraction form is attached:
//! all poles are real and lie left of -1.

use nalgebra::{DMatrix, DVector};

use super::PartialFractionRational;
use crate::error::{Error, Result};

/// Polynomial coefficient pair (ascending powers) plus partial fractions.
#[derive(Debug, Clone)]
pub struct PadePair {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub partial_fractions: PartialFractionRational,
}

/// The [m/m] Pade approximant of `(1+z)^{-alpha}`, m in 1..=4.
pub fn pade_table(alpha: f64, m: usize) -> Result<PadePair> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(1..=4).contains(&m) {
        return Err(Error::PadeDegree(m));
    }
    // Taylor coefficients of (1+z)^{-alpha}: t_j = prod (-(alpha+i))/(i+1)
    let mut taylor = vec![1.0f64];
    for j in 0..2 * m {
        let last = *taylor.last().unwrap();
        taylor.push(last * (-alpha - j as f64) / (j as f64 + 1.0));
    }
    // denominator: sum_{j=1..m} q_j t_{m-j+i} = -t_{m+i}, i = 1..m, q_0 = 1
    let a = DMatrix::<f64>::from_fn(m, m, |i, j| taylor[m - (j + 1) + (i + 1)]);
    let b = DVector::<f64>::from_fn(m, |i, _| -taylor[m + i + 1]);
    let q_tail = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::EigenFailure("Hankel system singular".into()))?;
    let mut q = vec![1.0];
    q.extend(q_tail.iter().copied());
    // numerator: p_k = sum_{j=0..min(k,m)} t_{k-j} q_j
    let p: Vec<f64> = (0..=m)
        .map(|k| (0..=k.min(m)).map(|j| taylor[k - j] * q[j]).sum())
        .collect();

    let poles = denominator_roots(&q)?;
    for &d in &poles {
        // poles sit strictly left of -1 for alpha < 1 and reach -1 exactly
        // in the rational alpha = 1 limit
        if !(d < -1.0 + 1e-9) {
            return Err(Error::SignPattern(format!(
                "Pade pole {d} not left of -1"
            )));
        }
    }
    // residues P(d)/Q'(d); constant term = value at infinity = p_m/q_m
    let dq: Vec<f64> = (1..=m).map(|j| q[j] * j as f64).collect();
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
    let terms: Vec<(f64, f64)> = poles
        .iter()
        .map(|&d| (horner(&p, d) / horner(&dq, d), d))
        .collect();
    let c0 = p[m] / q[m];
    let partial_fractions = PartialFractionRational::new(alpha, c0, terms, 1.0, 1.0)?;
    Ok(PadePair {
        numerator: p,
        denominator: q,
        partial_fractions,
    })
}

/// Roots of the denominator polynomial via the companion matrix of the
/// monic-reversed polynomial, Newton-polished.
fn denominator_roots(q: &[f64]) -> Result<Vec<f64>> {
    let m = q.len() - 1;
    let lead = q[m];
    if lead == 0.0 {
        return Err(Error::EigenFailure("degenerate Pade denominator".into()));
    }
    if m == 1 {
        return Ok(vec![-q[0] / q[1]]);
    }
    let comp = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if j == m - 1 {
            -q[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eigs = comp.complex_eigenvalues();
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
    let dq: Vec<f64> = (1..=m).map(|j| q[j] * j as f64).collect();
    let mut roots = Vec::with_capacity(m);
    for e in eigs.iter() {
        if e.im.abs() > 1e-9 * e.re.abs().max(1.0) {
            return Err(Error::ComplexPole { re: e.re, im: e.im });
        }
        let mut x = e.re;
        for _ in 0..3 {
            let f = horner(q, x);
            let fp = horner(&dq, x);
            if fp == 0.0 {
                break;
            }
            x -= f / fp;
        }
        roots.push(x);
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degree_one_closed_form() {
        // P1/Q1 = (2 + (1-a) z) / (2 + (1+a) z)
        let alpha = 0.37;
        let pair = pade_table(alpha, 1).unwrap();
        let (p, q) = (&pair.numerator, &pair.denominator);
        assert_relative_eq!(p[1] / p[0], (1.0 - alpha) / 2.0, max_relative = 1e-13);
        assert_relative_eq!(q[1] / q[0], (1.0 + alpha) / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn alpha_one_degree_one_is_exact() {
        let pair = pade_table(1.0, 1).unwrap();
        for &z in &[0.0, 0.5, 2.0, 10.0] {
            let r = pair.partial_fractions.eval(z).unwrap();
            assert_relative_eq!(r, 1.0 / (1.0 + z), max_relative = 1e-13);
        }
    }

    #[test]
    fn taylor_match_to_order_2m() {
        // Q_m (1+z)^{-a} - P_m = O(z^{2m+1}): check decay of the residual
        // under z -> z/2 at small z
        for m in 1..=4usize {
            let alpha = 0.5;
            let pair = pade_table(alpha, m).unwrap();
            let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
            let resid = |z: f64| {
                horner(&pair.denominator, z) * (1.0 + z).powf(-alpha)
                    - horner(&pair.numerator, z)
            };
            let (z1, z2) = (0.2, 0.1);
            let ratio = resid(z1) / resid(z2);
            let order = ratio.abs().log2();
            assert!(
                (order - (2 * m + 1) as f64).abs() < 0.5,
                "m={m}: observed order {order:.2}"
            );
        }
    }

    #[test]
    fn poles_left_of_minus_one() {
        for m in 1..=4usize {
            for alpha in [0.25, 0.5, 0.75] {
                let pair = pade_table(alpha, m).unwrap();
                assert!(pair
                    .partial_fractions
                    .terms()
                    .iter()
                    .all(|&(_, d)| d < -1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn partial_fractions_match_polynomial_ratio() {
        let pair = pade_table(0.6, 3).unwrap();
        let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
        for &z in &[0.0, 0.3, 1.0, 4.0, 50.0] {
            let ratio = horner(&pair.numerator, z) / horner(&pair.denominator, z);
            assert_relative_eq!(
                pair.partial_fractions.eval(z).unwrap(),
                ratio,
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn degree_out_of_range() {
        assert!(pade_table(0.5, 0).is_err());
        assert!(pade_table(0.5, 5).is_err());
    }
}
