//! Finite-difference / lumped-mass assembly of the model operators, with
//! spectral bounds attached.
//!
//! Bounds policy: closed-form eigenvalue formulas where they exist (uniform
//! meshes), a Sturm-bisection pencil solve for assembled tridiagonal
//! operators up to [`SPECTRUM_SOLVE_LIMIT`] unknowns, and guaranteed
//! fallback bounds beyond that.  The provenance travels with the operator
//! since downstream constructions (quadrature shifts, spectral scalings)
//! depend on the tightness of these numbers.

use crate::error::{Error, Result};
use crate::operator::{BoundsProvenance, CsrMatrix, DiscreteOperator};
use crate::spectrum::tridiag_pencil_extremes;

/// Largest N for which assembly computes exact extreme eigenvalues.
pub const SPECTRUM_SOLVE_LIMIT: usize = 2048;

/// How variable coefficients are sampled on cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientSampling {
    /// `a_{i-1/2} = a(x_i - h/2)` (balance-method default).
    Midpoint,
    /// `a_{i-1/2} = (1/h) \int_{x_{i-1}}^{x_i} a`.
    IntegralAverage,
}

/// 1D mesh of [0,1] with both endpoints, interior count `n = len - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Parse("mesh needs at least one interior node".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::DegenerateMesh {
                a: nodes[0],
                b: *nodes.last().unwrap(),
            });
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::DegenerateMesh { a: w[0], b: w[1] });
            }
        }
        Ok(Mesh1D { nodes })
    }

    pub fn uniform(interior: usize) -> Self {
        let h = 1.0 / (interior as f64 + 1.0);
        Mesh1D {
            nodes: (0..=interior + 1).map(|i| i as f64 * h).collect(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior_count(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Cell widths `h_i = x_i - x_{i-1}`, length `interior + 1`.
    pub fn cell_widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Closed-form extreme eigenvalues of the uniform Laplacian on `(0,1)^d`:
/// `c (n+1)^2 sin^2(pi/(2(n+1)))` and `c (n+1)^2 sin^2(pi n/(2(n+1)))` with
/// `c = 4d`.
pub fn extreme_eigs_uniform(n: usize, d: usize) -> Result<(f64, f64)> {
    if n < 1 || !(d == 1 || d == 2) {
        return Err(Error::Parse(format!("need n >= 1 and d in {{1,2}}, got n={n}, d={d}")));
    }
    let np1 = (n + 1) as f64;
    let c = 4.0 * d as f64;
    let s = |j: f64| (j * std::f64::consts::PI / (2.0 * np1)).sin().powi(2);
    Ok((c * np1 * np1 * s(1.0), c * np1 * np1 * s(n as f64)))
}

/// Analytic eigenvalue of mode `j` of the d-dimensional uniform Laplacian
/// factor (1D): `4 (n+1)^2 sin^2(j pi / (2(n+1)))`.
pub fn uniform_mode_eigenvalue(n: usize, j: usize) -> f64 {
    let np1 = (n + 1) as f64;
    4.0 * np1 * np1 * (j as f64 * std::f64::consts::PI / (2.0 * np1)).sin().powi(2)
}

/// Three-point scheme for `-(a u')' = f` on a uniform mesh with `n` interior
/// points; `D = I`.
///
/// The safe lower spectral bound scales the analytic Laplacian minimum by
/// `min a`; the quadratic form dominates that operator entrywise.  Up to
/// [`SPECTRUM_SOLVE_LIMIT`] unknowns the exact extremes are computed instead
/// and recorded as such.
pub fn assemble_1d_variable<F>(
    a: F,
    n: usize,
    sampling: CoefficientSampling,
) -> Result<DiscreteOperator>
where
    F: Fn(f64) -> f64,
{
    if n < 1 {
        return Err(Error::Parse("need n >= 1".into()));
    }
    let h = 1.0 / (n as f64 + 1.0);
    // a_{i+1/2} for i = 0..n (cell between x_i and x_{i+1})
    let mut coeff = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let lo = i as f64 * h;
        let value = match sampling {
            CoefficientSampling::Midpoint => a(lo + 0.5 * h),
            CoefficientSampling::IntegralAverage => gauss5(&a, lo, lo + h) / h,
        };
        if !(value > 0.0) {
            return Err(Error::NonPositiveCoefficient {
                x: lo + 0.5 * h,
                value,
            });
        }
        coeff.push(value);
    }
    let inv_h2 = 1.0 / (h * h);
    let mut triplets = Vec::with_capacity(3 * n);
    for i in 0..n {
        triplets.push((i, i, (coeff[i] + coeff[i + 1]) * inv_h2));
        if i + 1 < n {
            let off = -coeff[i + 1] * inv_h2;
            triplets.push((i, i + 1, off));
            triplets.push((i + 1, i, off));
        }
    }
    let s = CsrMatrix::from_triplets(n, &triplets);
    let amin = coeff.iter().cloned().fold(f64::INFINITY, f64::min);
    let amax = coeff.iter().cloned().fold(0.0_f64, f64::max);
    let (lap_min, lap_max) = extreme_eigs_uniform(n, 1)?;
    let (lmin, lmax, prov) = if n <= SPECTRUM_SOLVE_LIMIT {
        let op_tmp = DiscreteOperator::new(
            s.clone(),
            vec![1.0; n],
            amin * lap_min,
            amax * lap_max,
            BoundsProvenance::Analytic,
        )?;
        let (lo, hi) = tridiag_pencil_extremes(&op_tmp)?;
        (lo, hi, BoundsProvenance::Computed)
    } else {
        (amin * lap_min, amax * lap_max, BoundsProvenance::Analytic)
    };
    DiscreteOperator::new(s, vec![1.0; n], lmin, lmax, prov)
}

/// Standard 5-point stencil on the unit square, `n` interior points per
/// direction, `N = n^2`, `D = I`; bounds from the closed-form extremes.
pub fn assemble_2d_laplacian(n: usize) -> Result<DiscreteOperator> {
    if n < 1 {
        return Err(Error::Parse("need n >= 1".into()));
    }
    let nn = n * n;
    let h = 1.0 / (n as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    let mut triplets = Vec::with_capacity(5 * nn);
    for iy in 0..n {
        for ix in 0..n {
            let row = iy * n + ix;
            triplets.push((row, row, 4.0 * inv_h2));
            if ix + 1 < n {
                triplets.push((row, row + 1, -inv_h2));
                triplets.push((row + 1, row, -inv_h2));
            }
            if iy + 1 < n {
                triplets.push((row, row + n, -inv_h2));
                triplets.push((row + n, row, -inv_h2));
            }
        }
    }
    let (lmin, lmax) = extreme_eigs_uniform(n, 2)?;
    DiscreteOperator::new(
        CsrMatrix::from_triplets(nn, &triplets),
        vec![1.0; nn],
        lmin,
        lmax,
        BoundsProvenance::Analytic,
    )
}

/// Three-point scheme on an arbitrary mesh with lumped mass:
/// `S` per the nonuniform stencil, `D_i = (h_i + h_{i+1})/2`.
pub fn assemble_1d_nonuniform(mesh: &Mesh1D) -> Result<DiscreteOperator> {
    let n = mesh.interior_count();
    let h = mesh.cell_widths();
    let mut triplets = Vec::with_capacity(3 * n);
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        triplets.push((i, i, 1.0 / h[i] + 1.0 / h[i + 1]));
        if i + 1 < n {
            triplets.push((i, i + 1, -1.0 / h[i + 1]));
            triplets.push((i + 1, i, -1.0 / h[i + 1]));
        }
        mass.push(0.5 * (h[i] + h[i + 1]));
    }
    let s = CsrMatrix::from_triplets(n, &triplets);
    let (lmin, lmax, prov) = if n <= SPECTRUM_SOLVE_LIMIT {
        let tmp = DiscreteOperator::new(
            s.clone(),
            mass.clone(),
            1.0,
            1.0,
            BoundsProvenance::Fallback,
        )?;
        let (lo, hi) = tridiag_pencil_extremes(&tmp)?;
        (lo, hi, BoundsProvenance::Computed)
    } else {
        // lumped mass is within a factor 3 of the continuous L2 norm on
        // piecewise linears, so the Rayleigh quotient stays above pi^2/3;
        // the upper bound comes from Gershgorin on D^{-1/2} S D^{-1/2}.
        let mut hi = 0.0_f64;
        for i in 0..n {
            let mut center = 0.0;
            let mut radius = 0.0;
            if i > 0 {
                radius += (1.0 / h[i]) / (mass[i] * mass[i - 1]).sqrt();
            }
            if i + 1 < n {
                radius += (1.0 / h[i + 1]) / (mass[i] * mass[i + 1]).sqrt();
            }
            center += (1.0 / h[i] + 1.0 / h[i + 1]) / mass[i];
            hi = hi.max(center + radius);
        }
        (
            std::f64::consts::PI.powi(2) / 3.0,
            hi,
            BoundsProvenance::Fallback,
        )
    };
    DiscreteOperator::new(s, mass, lmin, lmax, prov)
}

fn gauss5<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ];
    const W: [f64; 5] = [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ];
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    X.iter()
        .zip(W)
        .map(|(&x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}
