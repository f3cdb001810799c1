//! Loader and validator for precomputed best-uniform-rational coefficient
//! tables.
//!
//! The tables ship as data files in the coefficient text format.  Two layouts
//! are accepted, declared by the header tag:
//!
//! * `bura-z`  — partial fractions of `r(z) = c0 + sum c_i/(z - d_i)`
//!   approximating `z^alpha` on [0,1] (`c0 > 0`, `c_i < 0`, `d_i < 0`);
//! * `bura-xi` — the reciprocal-variable form `r(1/xi)` already expanded as
//!   `~c0 + sum ~c_i/(xi - ~d_i)` (`~c0, ~c_i > 0`, `~d_i < 0`).
//!
//! A `bura-z` table is converted on load: `~d_i = 1/d_i`,
//! `~c_i = -c_i ~d_i^2`, `~c0 = c0 - sum c_i ~d_i = r(0)`, which equals the
//! best-approximation error and must be positive.  Files whose signs or pole
//! ordering violate these constraints are rejected.

use std::io::BufRead;
use std::path::Path;

use super::PartialFractionRational;
use crate::error::{Error, Result};

/// Declared layout of a coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientFormat {
    /// `z^alpha`-form data, converted on load.
    BuraZ,
    /// Already in the reciprocal form applied at solve time.
    BuraXi,
}

/// Best-approximation errors of `z^alpha` on [0,1] for the shipped
/// (alpha, degree) range; used to cross-check the constant term of loaded
/// tables.
pub fn bura_error_table(alpha: f64, k: usize) -> Option<f64> {
    const TABLE: [(f64, [f64; 6]); 3] = [
        (
            0.25,
            [2.7348e-3, 1.4312e-3, 7.8650e-4, 4.4950e-4, 2.6536e-4, 1.6100e-4],
        ),
        (
            0.50,
            [2.6896e-4, 1.0747e-4, 4.6037e-5, 2.0852e-5, 9.8893e-6, 4.8760e-6],
        ),
        (
            0.75,
            [2.8676e-5, 9.2522e-6, 3.2566e-6, 1.2288e-6, 4.9096e-7, 2.0584e-7],
        ),
    ];
    if !(5..=10).contains(&k) {
        return None;
    }
    TABLE
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|(_, row)| row[k - 5])
}

/// Loads a coefficient table and returns the reciprocal-variable rational
/// ready for `apply` (scaling is attached at solve time, not here).
pub fn bura_from_table<P: AsRef<Path>>(path: P) -> Result<PartialFractionRational> {
    let file = std::fs::File::open(path)?;
    bura_from_reader(std::io::BufReader::new(file))
}

pub fn bura_from_reader<R: BufRead>(reader: R) -> Result<PartialFractionRational> {
    let (raw, tag) = PartialFractionRational::read_coefficients(reader)?;
    let format = match tag.as_deref() {
        Some("bura-z") => CoefficientFormat::BuraZ,
        Some("bura-xi") => CoefficientFormat::BuraXi,
        other => {
            return Err(Error::Parse(format!(
                "coefficient table must be tagged bura-z or bura-xi, found {other:?}"
            )))
        }
    };
    let converted = match format {
        CoefficientFormat::BuraZ => convert_z_form(&raw)?,
        CoefficientFormat::BuraXi => raw,
    };
    validate_xi_form(&converted)?;
    Ok(converted)
}

fn convert_z_form(raw: &PartialFractionRational) -> Result<PartialFractionRational> {
    let alpha = raw.alpha();
    let c0 = raw.constant();
    let mut tilde_terms = Vec::with_capacity(raw.terms().len());
    let mut tilde_c0 = c0;
    for &(c, d) in raw.terms() {
        if !(d < 0.0) {
            return Err(Error::SignPattern(format!("z-form pole {d} not negative")));
        }
        if !(c < 0.0) {
            return Err(Error::SignPattern(format!(
                "z-form residue {c} not negative"
            )));
        }
        let dt = 1.0 / d;
        let ct = -c * dt * dt;
        tilde_c0 -= c * dt;
        tilde_terms.push((ct, dt));
    }
    if !(tilde_c0 > 0.0) {
        return Err(Error::SignPattern(format!(
            "converted constant term {tilde_c0} not positive (table is not a valid approximant)"
        )));
    }
    PartialFractionRational::new(alpha, tilde_c0, tilde_terms, 1.0, 1.0)
}

fn validate_xi_form(r: &PartialFractionRational) -> Result<()> {
    if !(r.constant() > 0.0) {
        return Err(Error::SignPattern(format!(
            "constant term {} not positive",
            r.constant()
        )));
    }
    for &(c, d) in r.terms() {
        if !(c > 0.0) {
            return Err(Error::SignPattern(format!("residue {c} not positive")));
        }
        if !(d < 0.0) {
            return Err(Error::SignPattern(format!("pole {d} not negative")));
        }
    }
    // strict decrease is enforced by construction; interlacing of the
    // original form shows up here as strictly growing residue/pole ratios,
    // checked loosely through monotone residues not being required -- but
    // poles must be strictly separated.
    for pair in r.terms().windows(2) {
        if pair[0].1 <= pair[1].1 {
            return Err(Error::SignPattern("poles not strictly decreasing".into()));
        }
    }
    // consistency with the tabulated best errors, when known: the constant
    // term equals r(0) in the z-form, the best-approximation error.
    if let Some(e) = bura_error_table(r.alpha(), r.terms().len()) {
        let rel = (r.constant() - e).abs() / e;
        if rel > 0.01 {
            return Err(Error::SignPattern(format!(
                "constant term {} deviates {rel:.2e} from the tabulated error {e}",
                r.constant()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z_form_file(body: &str) -> PartialFractionRational {
        bura_from_reader(std::io::Cursor::new(body.to_string())).unwrap()
    }

    #[test]
    fn lemma_conversion_degree_two() {
        // r(z) = 1.0 - 0.2/(z + 0.5) - 0.3/(z + 2)
        let body = "0.33 2 1.0 1 1 bura-z\n-0.2 -0.5\n-0.3 -2.0\n";
        let r = z_form_file(body);
        // ~d = (-2, -0.5), sorted decreasing: (-0.5, -2)
        assert_relative_eq!(r.terms()[0].1, -0.5, max_relative = 1e-15);
        assert_relative_eq!(r.terms()[1].1, -2.0, max_relative = 1e-15);
        // ~c = -c * ~d^2
        assert_relative_eq!(r.terms()[0].1.powi(2) * 0.3, r.terms()[0].0, max_relative = 1e-14);
        // ~c0 = c0 - sum c ~d = 1 - (-0.2*-2) - (-0.3*-0.5) = 1 - 0.4 - 0.15
        assert_relative_eq!(r.constant(), 0.45, max_relative = 1e-14);
        // and the reciprocal identity r~(xi) = r(1/xi)
        for &xi in &[0.3, 1.0, 7.0] {
            let z = 1.0 / xi;
            let direct = 1.0 - 0.2 / (z + 0.5) - 0.3 / (z + 2.0);
            assert_relative_eq!(r.eval(xi).unwrap(), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn degenerate_table_rejected() {
        // c0 = 1, c1 = -1, d1 = -1: converted constant = 1 - (-1)(-1) = 0
        let body = "0.5 1 1.0 1 1 bura-z\n-1.0 -1.0\n";
        let err = bura_from_reader(std::io::Cursor::new(body.to_string()));
        assert!(matches!(err, Err(Error::SignPattern(_))));
    }

    #[test]
    fn positive_z_form_residue_rejected() {
        let body = "0.5 1 1.0 1 1 bura-z\n0.5 -1.0\n";
        assert!(bura_from_reader(std::io::Cursor::new(body.to_string())).is_err());
    }

    #[test]
    fn missing_tag_rejected() {
        let body = "0.5 1 1.0 1 1\n-0.5 -1.0\n";
        assert!(bura_from_reader(std::io::Cursor::new(body.to_string())).is_err());
    }

    #[test]
    fn error_table_lookup() {
        assert_eq!(bura_error_table(0.5, 6), Some(1.0747e-4));
        assert_eq!(bura_error_table(0.5, 4), None);
        assert_eq!(bura_error_table(0.33, 6), None);
    }
}
