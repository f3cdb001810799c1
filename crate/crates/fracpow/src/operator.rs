//! Sparse SPD operators with diagonal mass weights.
//!
//! A [`DiscreteOperator`] represents `A = D^{-1} S` where `S` is a sparse
//! symmetric stiffness matrix and `D` a strictly positive diagonal of mass
//! weights (all ones for plain finite differences).  Spectral bounds on the
//! generalized eigenvalues of `S w = lambda D w` travel with the operator;
//! downstream rational constructions consume them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed-row sparse matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from (row, col, value) triplets.
    /// Duplicate entries are summed; columns end up sorted within each row.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet index out of range");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let cols = &self.col_idx[lo..hi];
        cols.binary_search(&j).ok().map(|k| self.values[lo + k])
    }

    /// y = M x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    /// Largest |col - row| over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.entries()
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// Checks entrywise symmetry to `rel_tol` relative tolerance.
    pub fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        for (i, j, v) in self.entries() {
            let vt = self.get(j, i).unwrap_or(0.0);
            let scale = v.abs().max(vt.abs()).max(1e-300);
            if (v - vt).abs() > rel_tol * scale {
                return Err(Error::NotSymmetric { i, j, a: v, b: vt });
            }
        }
        Ok(())
    }

    /// Positive diagonal, nonpositive off-diagonal entries.
    pub fn is_m_matrix_pattern(&self) -> bool {
        self.entries()
            .all(|(i, j, v)| if i == j { v > 0.0 } else { v <= 0.0 })
    }
}

/// How the attached spectral bounds were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundsProvenance {
    /// Closed-form eigenvalue formulas.
    Analytic,
    /// Numerically computed extreme generalized eigenvalues.
    Computed,
    /// Conservative fallback bounds (guaranteed but loose).
    Fallback,
}

/// Sparse SPD operator `A = D^{-1} S` with spectral bounds.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    stiffness: CsrMatrix,
    mass_diag: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
    provenance: BoundsProvenance,
}

impl DiscreteOperator {
    /// Validates symmetry of `S` (1e-14 relative), positivity of `D`, and
    /// ordering of the bounds.
    pub fn new(
        stiffness: CsrMatrix,
        mass_diag: Vec<f64>,
        lambda_min: f64,
        lambda_max: f64,
        provenance: BoundsProvenance,
    ) -> Result<Self> {
        if mass_diag.len() != stiffness.dim() {
            return Err(Error::DimensionMismatch {
                expected: stiffness.dim(),
                got: mass_diag.len(),
            });
        }
        stiffness.check_symmetric(1e-14)?;
        for (i, &d) in mass_diag.iter().enumerate() {
            if !(d > 0.0) {
                return Err(Error::NonPositiveMass { index: i, value: d });
            }
        }
        if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
            return Err(Error::InvalidBounds {
                min: lambda_min,
                max: lambda_max,
            });
        }
        Ok(DiscreteOperator {
            stiffness,
            mass_diag,
            lambda_min,
            lambda_max,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass_diag(&self) -> &[f64] {
        &self.mass_diag
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn bounds_provenance(&self) -> BoundsProvenance {
        self.provenance
    }

    /// True when `S` is tridiagonal; such systems are solved by direct
    /// elimination instead of CG.
    pub fn is_tridiagonal(&self) -> bool {
        self.stiffness.bandwidth() <= 1
    }

    pub fn is_m_matrix(&self) -> bool {
        self.stiffness.is_m_matrix_pattern()
    }

    /// Applies `A x = D^{-1}(S x)`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim()];
        self.stiffness.mul_vec(x, &mut y);
        for (yi, di) in y.iter_mut().zip(&self.mass_diag) {
            *yi /= di;
        }
        Ok(y)
    }

    /// `y = S x` without the mass inverse.
    pub fn apply_stiffness(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim()];
        self.stiffness.mul_vec(x, &mut y);
        Ok(y)
    }

    /// D-weighted inner product `sum_i D_i x_i y_i`.
    pub fn weighted_dot(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len().min(y.len()),
            });
        }
        Ok(x.iter()
            .zip(y)
            .zip(&self.mass_diag)
            .map(|((a, b), d)| d * a * b)
            .sum())
    }

    pub fn weighted_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.weighted_dot(x, x)?.sqrt())
    }
}
