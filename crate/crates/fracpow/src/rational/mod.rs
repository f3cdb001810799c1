//! Rational-function representations shared by every approximation backend.
//!
//! All constructions in this crate funnel into one form: a scalar rational
//!
//! ```text
//!     r(z) = prefactor * ( c0 + sum_i c_i / (matrix_scale * z - d_i) )
//! ```
//!
//! with strictly negative poles `d_i`, so that applying `r` to an SPD
//! operator costs one SPD shifted solve per term.  The scaling is stored
//! explicitly rather than folded into the coefficients; the same object can
//! therefore record a construction on a normalized interval together with
//! the spectral shift used at solve time.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

mod aaa;
mod bura;
mod extension;
mod gauss_jacobi;
mod pade;
mod sigma;
mod sinc;

pub use aaa::{aaa_build, AaaBuild};
pub use bura::{bura_from_table, bura_from_reader, bura_error_table, CoefficientFormat};
pub use extension::{extension_eigen, ExtensionSpec, DEFAULT_GRADING, DEFAULT_TRUNCATION};
pub use gauss_jacobi::{gauss_jacobi, gauss_jacobi_rule};
pub use pade::{pade_table, PadePair};
pub use sigma::{sigma_quadrature, SmoothnessOrder};
pub use sinc::{sinc_node_counts, sinc_quadrature, SincSpec};

/// Relative separation below which two poles are considered coincident.
/// Coincident poles are always an error: every supported construction
/// produces distinct poles, so coincidence signals a bug upstream.  The
/// measure is relative because quadrature rules legitimately place pole
/// clusters arbitrarily close to zero at fine resolutions, while staying
/// well separated relative to their own magnitude.
pub const POLE_SEPARATION: f64 = 1e-13;

/// Scalar rational in partial-fraction form with explicit scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionRational {
    alpha: f64,
    c0: f64,
    /// `(residue, pole)` pairs, poles strictly decreasing (closest to zero
    /// first) and strictly negative.
    terms: Vec<(f64, f64)>,
    prefactor: f64,
    matrix_scale: f64,
}

impl PartialFractionRational {
    pub fn new(
        alpha: f64,
        c0: f64,
        mut terms: Vec<(f64, f64)>,
        prefactor: f64,
        matrix_scale: f64,
    ) -> Result<Self> {
        if !(matrix_scale > 0.0) {
            return Err(Error::InvalidBounds {
                min: matrix_scale,
                max: matrix_scale,
            });
        }
        terms.sort_by(|a, b| b.1.total_cmp(&a.1));
        for window in terms.windows(2) {
            let (a, b) = (window[0].1, window[1].1);
            if (a - b).abs() <= POLE_SEPARATION * a.abs().max(b.abs()) {
                return Err(Error::CoincidentPoles { a, b });
            }
        }
        for &(_, d) in &terms {
            if !(d < 0.0) {
                return Err(Error::NonNegativePole { pole: d });
            }
        }
        Ok(PartialFractionRational {
            alpha,
            c0,
            terms,
            prefactor,
            matrix_scale,
        })
    }

    /// Recovers partial fractions from the product form
    /// `b * prod (z - zeta_i) / (z - d_i)` with equally many zeros and poles.
    pub fn from_product_form(
        alpha: f64,
        leading: f64,
        zeros: &[f64],
        poles: &[f64],
    ) -> Result<Self> {
        if zeros.len() != poles.len() {
            return Err(Error::DimensionMismatch {
                expected: poles.len(),
                got: zeros.len(),
            });
        }
        let c0 = leading;
        let mut terms = Vec::with_capacity(poles.len());
        for (i, &d) in poles.iter().enumerate() {
            let mut num = leading;
            for &z in zeros {
                num *= d - z;
            }
            let mut den = 1.0;
            for (j, &dj) in poles.iter().enumerate() {
                if j != i {
                    den *= d - dj;
                }
            }
            terms.push((num / den, d));
        }
        Self::new(alpha, c0, terms, 1.0, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn constant(&self) -> f64 {
        self.c0
    }

    /// `(residue, pole)` pairs, poles strictly decreasing.
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn matrix_scale(&self) -> f64 {
        self.matrix_scale
    }

    /// Number of shifted solves an application of this rational costs.
    pub fn solve_count(&self) -> usize {
        self.terms.len()
    }

    /// Returns a copy with the given scaling attached (used to move a
    /// construction from a normalized interval onto an operator's spectrum).
    pub fn with_scaling(&self, prefactor: f64, matrix_scale: f64) -> Result<Self> {
        Self::new(
            self.alpha,
            self.c0,
            self.terms.clone(),
            prefactor,
            matrix_scale,
        )
    }

    /// Evaluates `prefactor * (c0 + sum c_i / (s z - d_i))`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        let zs = self.matrix_scale * z;
        let mut acc = self.c0;
        for &(c, d) in &self.terms {
            let den = zs - d;
            if den == 0.0 {
                return Err(Error::PoleEvaluation { z, pole: d });
            }
            acc += c / den;
        }
        Ok(self.prefactor * acc)
    }

    /// All residues strictly positive (and `c0 >= 0`): the pattern every
    /// quadrature and near-best construction in this crate must satisfy,
    /// and the one that guarantees positivity preservation on M-matrices.
    pub fn has_positive_residues(&self) -> bool {
        self.c0 >= 0.0 && self.terms.iter().all(|&(c, _)| c > 0.0)
    }

    /// Writes the coefficient text format:
    /// `alpha k c0 prefactor matrixScale [tag]` then `k` lines `c_i d_i`,
    /// 17 significant digits.
    pub fn write_coefficients<W: Write>(&self, mut out: W, tag: Option<&str>) -> Result<()> {
        match tag {
            Some(t) => writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e} {}",
                self.alpha,
                self.terms.len(),
                self.c0,
                self.prefactor,
                self.matrix_scale,
                t
            )?,
            None => writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e}",
                self.alpha,
                self.terms.len(),
                self.c0,
                self.prefactor,
                self.matrix_scale
            )?,
        }
        for &(c, d) in &self.terms {
            writeln!(out, "{:.16e} {:.16e}", c, d)?;
        }
        Ok(())
    }

    pub fn write_coefficients_file<P: AsRef<Path>>(&self, path: P, tag: Option<&str>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_coefficients(file, tag)
    }

    /// Reads the coefficient format back; returns the rational and the
    /// optional format tag.
    pub fn read_coefficients<R: BufRead>(reader: R) -> Result<(Self, Option<String>)> {
        let mut lines = reader
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coefficient file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 5 || fields.len() > 6 {
            return Err(Error::Parse(format!(
                "header must have 5 or 6 fields, got {}",
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad number `{s}`")))
        };
        let alpha = parse(fields[0])?;
        let k: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad term count `{}`", fields[1])))?;
        let c0 = parse(fields[2])?;
        let prefactor = parse(fields[3])?;
        let matrix_scale = parse(fields[4])?;
        let tag = fields.get(5).map(|s| s.to_string());
        let mut terms = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("coefficient file truncated".into()))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("expected `c d`, got `{line}`")));
            }
            terms.push((parse(parts[0])?, parse(parts[1])?));
        }
        Ok((
            PartialFractionRational::new(alpha, c0, terms, prefactor, matrix_scale)?,
            tag,
        ))
    }

    pub fn read_coefficients_file<P: AsRef<Path>>(path: P) -> Result<(Self, Option<String>)> {
        let file = std::fs::File::open(path)?;
        Self::read_coefficients(BufReader::new(file))
    }
}

/// Barycentric rational data: `r(z) = sum w_j f_j/(z-z_j) / sum w_j/(z-z_j)`,
/// with `r(z_j) = f_j` by convention at the support points.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricRational {
    support: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl BarycentricRational {
    pub fn new(support: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() || support.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: values.len().min(weights.len()),
            });
        }
        for i in 0..support.len() {
            for j in 0..i {
                if support[i] == support[j] {
                    return Err(Error::CoincidentPoles {
                        a: support[i],
                        b: support[j],
                    });
                }
            }
        }
        Ok(BarycentricRational {
            support,
            values,
            weights,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn eval(&self, z: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&zj, &fj), &wj) in self.support.iter().zip(&self.values).zip(&self.weights) {
            let diff = z - zj;
            if diff == 0.0 {
                return fj;
            }
            let c = wj / diff;
            num += c * fj;
            den += c;
        }
        num / den
    }

    /// Derivative of the denominator `D(z) = sum w_j/(z - z_j)`.
    fn denominator_and_derivative(&self, z: f64) -> (f64, f64) {
        let mut d = 0.0;
        let mut dp = 0.0;
        for (&zj, &wj) in self.support.iter().zip(&self.weights) {
            let diff = z - zj;
            d += wj / diff;
            dp -= wj / (diff * diff);
        }
        (d, dp)
    }

    fn numerator(&self, z: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&zj, &fj), &wj)| wj * fj / (z - zj))
            .sum()
    }
}

/// Converts a proper barycentric rational to partial fractions.
///
/// The finite poles are the eigenvalues of the support-point pencil reduced
/// to an (m-1)-dimensional standard eigenproblem, polished by Newton steps
/// on the barycentric denominator; residues come from the limit formula
/// `c = N(d)/D'(d)` and the constant from the value at infinity.
///
/// Poles must come out real; an imaginary part above `1e-10 |pole|` or a
/// nonnegative pole is an error (the target functions here always produce
/// negative real poles).
pub fn barycentric_to_partial_fractions(
    b: &BarycentricRational,
    alpha: f64,
) -> Result<PartialFractionRational> {
    let m = b.len();
    let wsum: f64 = b.weights().iter().sum();
    let wnorm = b.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
    if wnorm == 0.0 {
        return Err(Error::ImproperRational);
    }
    // value at infinity requires a nonvanishing weight sum
    if wsum.abs() <= 1e-13 * wnorm {
        return Err(Error::ImproperRational);
    }
    let c0 = b
        .weights()
        .iter()
        .zip(b.values())
        .map(|(w, f)| w * f)
        .sum::<f64>()
        / wsum;
    if m <= 1 {
        return PartialFractionRational::new(alpha, c0, Vec::new(), 1.0, 1.0);
    }

    let poles = pencil_poles(b)?;
    // Residues first: spurious pencil roots (numerator and denominator share
    // a factor, e.g. for constant data) carry residues at roundoff level and
    // are dropped before the pole-sign check can reject them.
    let fscale = b
        .values()
        .iter()
        .fold(0.0_f64, |a, &x| a.max(x.abs()))
        .max(1e-300);
    let zmin = b
        .support()
        .iter()
        .fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    let mut terms = Vec::with_capacity(poles.len());
    for &d in &poles {
        let (_, dprime) = b.denominator_and_derivative(d);
        let num = b.numerator(d);
        let c = num / dprime;
        if c.abs() <= 1e-13 * fscale * (d.abs() + zmin) {
            continue;
        }
        if !(d < 0.0) {
            return Err(Error::NonNegativePole { pole: d });
        }
        terms.push((c, d));
    }
    PartialFractionRational::new(alpha, c0, terms, 1.0, 1.0)
}

/// Poles of the barycentric denominator: reduce the generalized companion
/// pencil of `D(z)` exactly to an (m-1)x(m-1) standard eigenproblem using a
/// Householder basis of the weight vector's orthogonal complement.
fn pencil_poles(b: &BarycentricRational) -> Result<Vec<f64>> {
    use nalgebra::DMatrix;
    let m = b.len();
    let w = b.weights();
    let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let what: Vec<f64> = w.iter().map(|x| x / wnorm).collect();

    // Householder reflector H = I - 2 v v^T mapping e1 to +-what; its last
    // m-1 columns span the complement of what.
    let sign = if what[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v: Vec<f64> = what.clone();
    v[0] += sign;
    let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= vnorm;
    }
    let house = |col: usize, i: usize| -> f64 {
        let e = if i == col { 1.0 } else { 0.0 };
        e - 2.0 * v[i] * v[col]
    };
    // p[:, c] = column c+1 of H, c = 0..m-1
    let p = DMatrix::<f64>::from_fn(m, m - 1, |i, c| house(c + 1, i));

    let z = b.support();
    // zp = Z P (row-scaled columns), pt_zp = P^T Z P
    let zp = DMatrix::<f64>::from_fn(m, m - 1, |i, c| z[i] * p[(i, c)]);
    let pt_zp = p.transpose() * &zp;
    // correction: (P^T 1)(what^T Z P) / (what^T 1)
    let what_dot_one: f64 = what.iter().sum();
    if what_dot_one.abs() < 1e-300 {
        return Err(Error::ImproperRational);
    }
    let pt_one = p.transpose() * DMatrix::<f64>::from_element(m, 1, 1.0);
    let mut what_zp = vec![0.0; m - 1];
    for c in 0..m - 1 {
        what_zp[c] = (0..m).map(|i| what[i] * zp[(i, c)]).sum();
    }
    let mut cmat = pt_zp;
    for r in 0..m - 1 {
        for c in 0..m - 1 {
            cmat[(r, c)] -= pt_one[(r, 0)] * what_zp[c] / what_dot_one;
        }
    }

    let eigs = cmat.complex_eigenvalues();
    let scale = z.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let mut poles = Vec::with_capacity(m - 1);
    for e in eigs.iter() {
        if e.im.abs() > 1e-10 * e.re.abs().max(1e-300) && e.im.abs() > 1e-14 * scale {
            return Err(Error::ComplexPole { re: e.re, im: e.im });
        }
        poles.push(e.re);
    }
    // Newton polish on D(z); the eigen step localizes the roots, Newton
    // restores full relative accuracy for poles clustered near zero.
    for d in &mut poles {
        for _ in 0..3 {
            let (dv, dp) = b.denominator_and_derivative(*d);
            if dp == 0.0 {
                break;
            }
            let step = dv / dp;
            if !step.is_finite() {
                break;
            }
            let next = *d - step;
            // keep the pole away from support points where D is singular
            if b.support().iter().any(|&zj| next == zj) {
                break;
            }
            if (next - *d).abs() <= 1e-16 * d.abs() {
                *d = next;
                break;
            }
            *d = next;
        }
    }
    poles.sort_by(|a, b| b.total_cmp(a));
    Ok(poles)
}
