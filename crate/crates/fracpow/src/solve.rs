//! Applying rational approximations to operators: shifted SPD solves,
//! fractional solves, and diffusion-reaction solves.
//!
//! Every rational application reduces to independent systems
//! `(sa S + sd D) w = g` that are SPD whenever `sa lambda_min + sd > 0`.
//! Tridiagonal stiffness goes through direct elimination; everything else
//! uses conjugate gradients with diagonal preconditioning.  The independent
//! shifted solves of one application may run on several workers; results
//! are merged in term order, so the output does not depend on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;
use crate::rational::{
    aaa_build, barycentric_to_partial_fractions, extension_eigen, gauss_jacobi, sigma_quadrature,
    sinc_quadrature, ExtensionSpec, PartialFractionRational, SincSpec, SmoothnessOrder,
};
use crate::reference::ErrorReport;

/// Inner-solver configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual target of the shifted solves.  Kept well below
    /// every rational-approximation error under study.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
    /// Maximum number of concurrent shifted solves.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Diagonal,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-10,
            max_iter: 20_000,
            preconditioner: Preconditioner::Diagonal,
            workers: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Parse(format!("rel_tol out of (0,1): {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Parse("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-run record: what was solved, how many systems, at what cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub parameters: serde_json::Value,
    pub solve_count: usize,
    pub iterations: Vec<usize>,
    pub final_residuals: Vec<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorReport>,
}

impl SolveReport {
    fn new(method: &str, parameters: serde_json::Value) -> Self {
        SolveReport {
            method: method.to_string(),
            parameters,
            solve_count: 0,
            iterations: Vec::new(),
            final_residuals: Vec::new(),
            wall_time_s: 0.0,
            errors: None,
        }
    }
}

/// Rational-approximation backend selector for the fractional solves.
#[derive(Debug, Clone)]
pub enum Method {
    Sinc { kprime: f64 },
    GaussJacobi { k: usize },
    Sigma { order: SmoothnessOrder, msub: usize },
    Aaa { degree: usize, samples: usize, tol: f64 },
    /// Pre-loaded reciprocal-form coefficient table.
    BuraTable { rational: PartialFractionRational },
    Extension { m: usize, truncation: f64, grading: f64 },
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Sinc { .. } => "sinc",
            Method::GaussJacobi { .. } => "gauss-jacobi",
            Method::Sigma { .. } => "sigma",
            Method::Aaa { .. } => "aaa",
            Method::BuraTable { .. } => "bura",
            Method::Extension { .. } => "extension",
        }
    }

    pub fn parameters(&self) -> serde_json::Value {
        match self {
            Method::Sinc { kprime } => serde_json::json!({ "kprime": kprime }),
            Method::GaussJacobi { k } => serde_json::json!({ "k": k }),
            Method::Sigma { order, msub } => serde_json::json!({
                "kappa": order.kappa(), "msub": msub
            }),
            Method::Aaa {
                degree,
                samples,
                tol,
            } => serde_json::json!({ "degree": degree, "samples": samples, "tol": tol }),
            Method::BuraTable { rational } => serde_json::json!({
                "k": rational.solve_count(), "alpha": rational.alpha()
            }),
            Method::Extension {
                m,
                truncation,
                grading,
            } => serde_json::json!({ "m": m, "truncation": truncation, "grading": grading }),
        }
    }

    /// Builds the partial-fraction approximant of `z^{-alpha}` for the given
    /// operator, with any spectral scaling attached.
    pub fn build(
        &self,
        op: &DiscreteOperator,
        alpha: f64,
    ) -> Result<PartialFractionRational> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        match self {
            Method::Sinc { kprime } => sinc_quadrature(&SincSpec::balanced(alpha, *kprime)?),
            Method::GaussJacobi { k } => {
                gauss_jacobi(alpha, *k, op.lambda_min(), op.lambda_max())
            }
            Method::Sigma { order, msub } => {
                sigma_quadrature(alpha, *order, *msub, op.lambda_min())
            }
            Method::Aaa { .. } | Method::BuraTable { .. } => {
                let delta = op.lambda_min();
                let base = self.build_normalized(op, alpha)?;
                base.with_scaling(delta.powf(-alpha), 1.0 / delta)
            }
            Method::Extension {
                m,
                truncation,
                grading,
            } => extension_eigen(&ExtensionSpec {
                alpha,
                m: *m,
                truncation: *truncation,
                grading: *grading,
            }),
        }
    }

    /// For the spectrally scaled backends: the approximant of `xi^{-alpha}`
    /// on `[1, lambda_max/lambda_min]` without scaling attached.
    fn build_normalized(
        &self,
        op: &DiscreteOperator,
        alpha: f64,
    ) -> Result<PartialFractionRational> {
        match self {
            Method::Aaa {
                degree,
                samples,
                tol,
            } => {
                let ratio = op.lambda_max() / op.lambda_min();
                let build = aaa_build(alpha, 1.0, ratio, *samples, *tol, degree + 1)?;
                let pfr = barycentric_to_partial_fractions(&build.rational, alpha)?;
                if !pfr.has_positive_residues() || !(pfr.constant() > 0.0) {
                    return Err(Error::SignPattern(
                        "near-best construction produced nonpositive coefficients".into(),
                    ));
                }
                Ok(pfr)
            }
            Method::BuraTable { rational } => {
                if (rational.alpha() - alpha).abs() > 1e-12 {
                    return Err(Error::Parse(format!(
                        "table is for alpha = {}, requested {}",
                        rational.alpha(),
                        alpha
                    )));
                }
                Ok(rational.clone())
            }
            _ => Err(Error::Unsupported(format!(
                "{} has no normalized form",
                self.tag()
            ))),
        }
    }
}

/// Solves `(S + c D) w = D b`, i.e. `(A + c I) w = b`, to the configured
/// relative residual.
pub fn shifted_solve(
    op: &DiscreteOperator,
    c: f64,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if c < 0.0 {
        return Err(Error::NegativeShift(c));
    }
    let g = weighted_rhs(op, b)?;
    let (w, _, _) = linear_combo_solve(op, 1.0, c, &g, cfg)?;
    Ok(w)
}

fn weighted_rhs(op: &DiscreteOperator, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: b.len(),
        });
    }
    Ok(b.iter().zip(op.mass_diag()).map(|(x, d)| x * d).collect())
}

/// Solves `(sa S + sd D) w = g` and reports `(w, iterations, residual)`.
///
/// Requires `sa >= 0` and `sa lambda_min + sd > 0` so the system is SPD.
pub fn linear_combo_solve(
    op: &DiscreteOperator,
    sa: f64,
    sd: f64,
    g: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    cfg.validate()?;
    if sa < 0.0 || sa * op.lambda_min() + sd <= 0.0 {
        return Err(Error::InvalidBounds { min: sa, max: sd });
    }
    if op.is_tridiagonal() {
        return Ok((tridiag_solve(op, sa, sd, g), 1, 0.0));
    }
    cg_solve(op, sa, sd, g, cfg)
}

/// Direct elimination for tridiagonal `sa S + sd D`.
fn tridiag_solve(op: &DiscreteOperator, sa: f64, sd: f64, g: &[f64]) -> Vec<f64> {
    let n = op.dim();
    let d = op.mass_diag();
    let mut main = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (i, j, v) in op.stiffness().entries() {
        if i == j {
            main[i] += sa * v;
        } else if j + 1 == i {
            lower[i] = sa * v;
        } else if j == i + 1 {
            upper[i] = sa * v;
        }
    }
    for i in 0..n {
        main[i] += sd * d[i];
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    c[0] = upper[0] / main[0];
    x[0] = g[0] / main[0];
    for i in 1..n {
        let m = main[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / m;
        }
        x[i] = (g[i] - lower[i] * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    x
}

/// Preconditioned conjugate gradients on `sa S + sd D`.
fn cg_solve(
    op: &DiscreteOperator,
    sa: f64,
    sd: f64,
    g: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = op.dim();
    let d = op.mass_diag();
    let sdiag = op.stiffness().diagonal();
    let precond: Vec<f64> = match cfg.preconditioner {
        Preconditioner::Diagonal => (0..n).map(|i| 1.0 / (sa * sdiag[i] + sd * d[i])).collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let apply = |x: &[f64], y: &mut [f64]| {
        op.stiffness().mul_vec(x, y);
        for i in 0..n {
            y[i] = sa * y[i] + sd * d[i] * x[i];
        }
    };
    let norm_g = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_g == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let mut x = vec![0.0; n];
    let mut r = g.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let target = cfg.rel_tol * norm_g;
    for iter in 1..=cfg.max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= target {
            return Ok((x, iter, rnorm / norm_g));
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::SolverStall {
        iterations: cfg.max_iter,
        residual: rnorm / norm_g,
        target: cfg.rel_tol,
    })
}

/// Applies a partial-fraction rational to the operator:
/// `u = prefactor (c0 f + sum c_i w_i)` with `(s A - d_i I) w_i = f`.
pub fn apply_rational(
    op: &DiscreteOperator,
    r: &PartialFractionRational,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let g = weighted_rhs(op, f)?;
    let s = r.matrix_scale();
    let terms = r.terms();
    let solved = solve_terms(op, s, terms, &g, cfg)?;

    let mut u: Vec<f64> = f.iter().map(|v| r.constant() * v).collect();
    let mut report = SolveReport::new("apply-rational", serde_json::json!({}));
    for ((w, iters, resid), &(c, _)) in solved.iter().zip(terms) {
        for i in 0..u.len() {
            u[i] += c * w[i];
        }
        report.iterations.push(*iters);
        report.final_residuals.push(*resid);
    }
    for v in &mut u {
        *v *= r.prefactor();
    }
    report.solve_count = terms.len();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// The independent shifted solves, optionally spread over workers; slot `i`
/// of the result always belongs to term `i`.
fn solve_terms(
    op: &DiscreteOperator,
    scale: f64,
    terms: &[(f64, f64)],
    g: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(Vec<f64>, usize, f64)>> {
    let k = terms.len();
    let workers = cfg.workers.max(1).min(k.max(1));
    if workers <= 1 || k <= 1 {
        return terms
            .iter()
            .map(|&(_, d)| linear_combo_solve(op, scale, -d, g, cfg))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<(Vec<f64>, usize, f64)>>>> =
        Mutex::new((0..k).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= k {
                    break;
                }
                let res = linear_combo_solve(op, scale, -terms[i].1, g, cfg);
                slots.lock().unwrap()[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("worker filled every slot"))
        .collect()
}

/// Solves `A^alpha u = f` with the chosen backend; returns the solution and
/// the run record.
pub fn fractional_solve(
    op: &DiscreteOperator,
    alpha: f64,
    method: &Method,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let r = method.build(op, alpha)?;
    let (u, mut report) = apply_rational(op, &r, f, cfg)?;
    report.method = method.tag().to_string();
    report.parameters = method.parameters();
    Ok((u, report))
}

/// Moebius composition `r / (1 + q2 r)` in partial-fraction form.
///
/// The new poles solve `1 + q2 r(xi) = 0`.  When every residue is positive,
/// `r` decreases strictly between consecutive poles, so exactly one root
/// lies in each pole gap plus one left of the last pole: these are isolated
/// by bracketed bisection and finished by Newton steps on the stable
/// partial-fraction evaluation.  For general sign patterns the roots come
/// from the companion matrix of the recombined denominator in a scaled
/// variable, and complex arithmetic noise beyond `1e-9 |root|` rejects the
/// transform.
pub fn ura_transform(
    r: &PartialFractionRational,
    q2: f64,
) -> Result<PartialFractionRational> {
    if q2 < 0.0 {
        return Err(Error::Parse(format!("q2 must be nonnegative, got {q2}")));
    }
    if q2 == 0.0 {
        return Ok(r.clone());
    }
    // fold the prefactor into the coefficients so the identity
    // rbar(z) = r(z)/(1 + q2 r(z)) holds for the full evaluation
    let p = r.prefactor();
    let c0 = p * r.constant();
    let terms: Vec<(f64, f64)> = r.terms().iter().map(|&(c, d)| (p * c, d)).collect();
    let k = terms.len();
    if k == 0 {
        let cbar = c0 / (1.0 + q2 * c0);
        return PartialFractionRational::new(r.alpha(), cbar, vec![], 1.0, r.matrix_scale());
    }

    let eval = |xi: f64| -> f64 {
        c0 + terms.iter().map(|&(c, d)| c / (xi - d)).sum::<f64>()
    };
    let deriv = |xi: f64| -> f64 {
        -terms
            .iter()
            .map(|&(c, d)| c / ((xi - d) * (xi - d)))
            .sum::<f64>()
    };

    let all_positive = c0 >= 0.0 && terms.iter().all(|&(c, _)| c > 0.0);
    let roots = if all_positive {
        bracketed_roots(&terms, c0, q2, &eval)?
    } else {
        companion_roots(&terms, c0, q2, &eval)?
    };

    let mut new_terms = Vec::with_capacity(k);
    for &rho in &roots {
        if !(rho < 0.0) {
            return Err(Error::NonNegativePole { pole: rho });
        }
        let dr = deriv(rho);
        let res = -1.0 / (q2 * q2 * dr);
        if !(res.is_finite()) {
            return Err(Error::SignPattern(format!(
                "degenerate residue at transformed pole {rho}"
            )));
        }
        new_terms.push((res, rho));
    }
    let cbar = c0 / (1.0 + q2 * c0);
    PartialFractionRational::new(r.alpha(), cbar, new_terms, 1.0, r.matrix_scale())
}

/// Root isolation for all-positive residues: one root per pole gap and one
/// in `(-inf, d_k)`.
fn bracketed_roots(
    terms: &[(f64, f64)],
    _c0: f64,
    q2: f64,
    eval: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let k = terms.len();
    let target = -1.0 / q2;
    let g = |xi: f64| eval(xi) - target;
    let mut roots = Vec::with_capacity(k);
    // gaps between consecutive poles (descending order: d[i] > d[i+1])
    for i in 0..k - 1 {
        let (hi, lo) = (terms[i].1, terms[i + 1].1);
        let mut a = lo + 1e-3 * (hi - lo);
        let mut b = hi - 1e-3 * (hi - lo);
        // expand toward the poles until the signs bracket
        let mut shrink = 1e-3;
        while g(a) <= 0.0 && shrink > 1e-305 {
            shrink *= 1e-2;
            a = lo + shrink * (hi - lo);
        }
        let mut shrink_b = 1e-3;
        while g(b) >= 0.0 && shrink_b > 1e-305 {
            shrink_b *= 1e-2;
            b = hi - shrink_b * (hi - lo);
        }
        roots.push(bisect_then_newton(a, b, &g, terms, q2));
    }
    // outermost root left of the most negative pole
    let dk = terms[k - 1].1;
    let width0 = (terms[0].1 - dk).abs().max(dk.abs()).max(1.0);
    let mut b = dk - 1e-9 * width0;
    let mut steps = 0;
    while g(b) >= 0.0 && steps < 2000 {
        b = dk - (dk - b) * 1e-2;
        steps += 1;
    }
    let mut a = dk - width0;
    steps = 0;
    while g(a) <= 0.0 && steps < 2000 {
        a = dk - (dk - a) * 4.0;
        steps += 1;
    }
    roots.push(bisect_then_newton(a, b, &g, terms, q2));
    roots.sort_by(|x, y| y.total_cmp(x));
    Ok(roots)
}

fn bisect_then_newton(
    mut a: f64,
    mut b: f64,
    g: &dyn Fn(f64) -> f64,
    terms: &[(f64, f64)],
    q2: f64,
) -> f64 {
    // g decreasing: g(a) > 0 > g(b) with a < b
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let gp: f64 = -terms
            .iter()
            .map(|&(c, d)| c / ((x - d) * (x - d)))
            .sum::<f64>();
        if gp == 0.0 {
            break;
        }
        let step = g(x) / gp;
        let next = x - step;
        if next > a && next < b {
            x = next;
        } else {
            break;
        }
    }
    let _ = q2;
    x
}

/// Companion-matrix route for general residue signs: recombine
/// `Q + q2 P` in a variable scaled so the poles sit in [-1, 0), take the
/// companion eigenvalues, and polish on the partial-fraction form.
fn companion_roots(
    terms: &[(f64, f64)],
    c0: f64,
    q2: f64,
    eval: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    use nalgebra::DMatrix;
    let k = terms.len();
    let t = terms.iter().map(|&(_, d)| d.abs()).fold(0.0, f64::max);
    let scaled: Vec<f64> = terms.iter().map(|&(_, d)| d / t).collect();
    // qpoly = prod (eta - d_i/t)
    let mut qpoly = vec![1.0];
    for &ds in &scaled {
        qpoly = poly_mul_linear(&qpoly, -ds);
    }
    // h = (1 + q2 c0) qpoly + q2 sum_i (c_i / t) prod_{j != i} (eta - d_j/t)
    let mut h: Vec<f64> = qpoly.iter().map(|&v| v * (1.0 + q2 * c0)).collect();
    for (i, &(c, _)) in terms.iter().enumerate() {
        let mut part = vec![1.0];
        for (j, &ds) in scaled.iter().enumerate() {
            if j != i {
                part = poly_mul_linear(&part, -ds);
            }
        }
        for (dst, src) in h.iter_mut().zip(part.iter()) {
            *dst += q2 * (c / t) * src;
        }
    }
    let lead = *h.last().unwrap();
    if lead.abs() < 1e-300 {
        return Err(Error::ImproperRational);
    }
    let comp = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if j == k - 1 {
            -h[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eigs = comp.complex_eigenvalues();
    let mut roots = Vec::with_capacity(k);
    for e in eigs.iter() {
        let rho = e.re * t;
        if e.im.abs() > 1e-9 * e.re.abs().max(1e-30) {
            return Err(Error::ComplexPole {
                re: rho,
                im: e.im * t,
            });
        }
        // Newton polish on 1 + q2 r
        let mut x = rho;
        for _ in 0..4 {
            let gval = 1.0 + q2 * eval(x);
            let gp = -q2
                * terms
                    .iter()
                    .map(|&(c, d)| c / ((x - d) * (x - d)))
                    .sum::<f64>();
            if gp == 0.0 || !gval.is_finite() {
                break;
            }
            x -= gval / gp;
        }
        roots.push(x);
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    Ok(roots)
}

fn poly_mul_linear(p: &[f64], constant: f64) -> Vec<f64> {
    // p(eta) * (eta + constant)
    let mut out = vec![0.0; p.len() + 1];
    for (i, &v) in p.iter().enumerate() {
        out[i] += v * constant;
        out[i + 1] += v;
    }
    out
}

/// Solves `(A^alpha + q I) u = f` by Moebius-composing the scaled base
/// approximant and applying the result.
pub fn diffusion_reaction_solve(
    op: &DiscreteOperator,
    alpha: f64,
    q: f64,
    method: &Method,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if q < 0.0 {
        return Err(Error::Parse(format!("q must be nonnegative, got {q}")));
    }
    if q == 0.0 {
        return fractional_solve(op, alpha, method, f, cfg);
    }
    let delta = op.lambda_min();
    let qprime = q * delta.powf(-alpha);
    let base = match method {
        Method::Aaa { .. } | Method::BuraTable { .. } => method.build_normalized(op, alpha)?,
        other => {
            return Err(Error::Unsupported(format!(
                "diffusion-reaction composition needs a near-best base, not {}",
                other.tag()
            )))
        }
    };
    let composed = ura_transform(&base, qprime)?;
    let scaled = composed.with_scaling(delta.powf(-alpha), 1.0 / delta)?;
    let (u, mut report) = apply_rational(op, &scaled, f, cfg)?;
    report.method = format!("{}+reaction", method.tag());
    let mut params = method.parameters();
    params["q"] = serde_json::json!(q);
    report.parameters = params;
    Ok((u, report))
}

/// Applies `A^alpha f = A (A^{-(1-alpha)} f)`.
pub fn apply_fractional_power(
    op: &DiscreteOperator,
    alpha: f64,
    method: &Method,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let (inner, mut report) = fractional_solve(op, 1.0 - alpha, method, f, cfg)?;
    let u = op.matvec(&inner)?;
    report.method = format!("{}^T-power", report.method);
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_1d_variable, uniform_mode_eigenvalue, CoefficientSampling};
    use crate::operator::{BoundsProvenance, CsrMatrix};
    use approx::assert_relative_eq;

    fn scalar_op(value: f64) -> DiscreteOperator {
        DiscreteOperator::new(
            CsrMatrix::from_triplets(1, &[(0, 0, value)]),
            vec![1.0],
            value,
            value,
            BoundsProvenance::Analytic,
        )
        .unwrap()
    }

    fn uniform_1d(n: usize) -> DiscreteOperator {
        assemble_1d_variable(|_| 1.0, n, CoefficientSampling::Midpoint).unwrap()
    }

    fn mode(n: usize, j: usize) -> Vec<f64> {
        let np1 = n as f64 + 1.0;
        (1..=n)
            .map(|i| (j as f64 * i as f64 * std::f64::consts::PI / np1).sin())
            .collect()
    }

    #[test]
    fn scalar_shifted_solve() {
        let op = scalar_op(1.0);
        let w = shifted_solve(&op, 1.0, &[2.0], &SolverConfig::default()).unwrap();
        assert_relative_eq!(w[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn negative_shift_rejected() {
        let op = scalar_op(1.0);
        assert!(matches!(
            shifted_solve(&op, -0.5, &[1.0], &SolverConfig::default()),
            Err(Error::NegativeShift(_))
        ));
    }

    #[test]
    fn eigenvector_identity_shifted() {
        let n = 31;
        let op = uniform_1d(n);
        let j = 3;
        let psi = mode(n, j);
        let lam = uniform_mode_eigenvalue(n, j);
        let c = 2.5;
        let w = shifted_solve(&op, c, &psi, &SolverConfig::default()).unwrap();
        for (wi, pi) in w.iter().zip(&psi) {
            assert_relative_eq!(*wi, pi / (lam + c), max_relative = 1e-9);
        }
    }

    #[test]
    fn first_mode_inverse_n511() {
        let n = 511;
        let op = uniform_1d(n);
        let psi = mode(n, 1);
        let lam = uniform_mode_eigenvalue(n, 1);
        let cfg = SolverConfig::default();
        let w = shifted_solve(&op, 0.0, &psi, &cfg).unwrap();
        let mut worst = 0.0_f64;
        for (wi, pi) in w.iter().zip(&psi) {
            worst = worst.max((wi - pi / lam).abs());
        }
        let scale = 1.0 / lam;
        assert!(worst / scale <= 10.0 * cfg.rel_tol.max(1e-14), "err {worst}");
    }

    #[test]
    fn cg_path_matches_direct_path() {
        // pentadiagonal forces CG; compare against tridiagonal identity
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
            if i + 2 < n {
                t.push((i, i + 2, -0.5));
                t.push((i + 2, i, -0.5));
            }
        }
        let op = DiscreteOperator::new(
            CsrMatrix::from_triplets(n, &t),
            vec![1.0; n],
            0.5,
            8.0,
            BoundsProvenance::Fallback,
        )
        .unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let cfg = SolverConfig::default();
        let w = shifted_solve(&op, 1.3, &b, &cfg).unwrap();
        // residual check: (A + cI) w - b
        let aw = op.matvec(&w).unwrap();
        let mut rnorm = 0.0_f64;
        let mut bnorm = 0.0_f64;
        for i in 0..n {
            rnorm += (aw[i] + 1.3 * w[i] - b[i]).powi(2);
            bnorm += b[i] * b[i];
        }
        assert!(rnorm.sqrt() / bnorm.sqrt() < 1e-9);
    }

    #[test]
    fn apply_identity_rational() {
        let op = uniform_1d(9);
        let r = PartialFractionRational::new(0.5, 1.0, vec![], 1.0, 1.0).unwrap();
        let f: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let (u, report) = apply_rational(&op, &r, &f, &SolverConfig::default()).unwrap();
        assert_eq!(u, f);
        assert_eq!(report.solve_count, 0);
    }

    #[test]
    fn scalar_consistency_with_eval() {
        let op = scalar_op(2.0);
        let r = PartialFractionRational::new(
            0.5,
            0.3,
            vec![(0.8, -0.5), (0.1, -4.0)],
            1.7,
            0.9,
        )
        .unwrap();
        let (u, _) = apply_rational(&op, &r, &[3.0], &SolverConfig::default()).unwrap();
        assert_relative_eq!(u[0], 3.0 * r.eval(2.0).unwrap(), max_relative = 1e-11);
    }

    #[test]
    fn eigenvector_reproduces_scalar_rational() {
        let n = 63;
        let op = uniform_1d(n);
        let r = Method::GaussJacobi { k: 12 }.build(&op, 0.5).unwrap();
        let cfg = SolverConfig::default();
        for j in [1usize, 7, 30] {
            let psi = mode(n, j);
            let lam = uniform_mode_eigenvalue(n, j);
            let (u, report) = apply_rational(&op, &r, &psi, &cfg).unwrap();
            assert_eq!(report.solve_count, 12);
            let scalar = r.eval(lam).unwrap();
            for (ui, pi) in u.iter().zip(&psi) {
                assert_relative_eq!(*ui, scalar * pi, max_relative = 1e-8, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn workers_give_identical_results() {
        let n = 127;
        let op = uniform_1d(n);
        let r = Method::Sinc { kprime: 0.7 }.build(&op, 0.5).unwrap();
        let f: Vec<f64> = (0..n).map(|i| ((i * i) as f64).sin()).collect();
        let seq = apply_rational(&op, &r, &f, &SolverConfig::default())
            .unwrap()
            .0;
        let par = apply_rational(
            &op,
            &r,
            &f,
            &SolverConfig {
                workers: 4,
                ..SolverConfig::default()
            },
        )
        .unwrap()
        .0;
        assert_eq!(seq, par);
    }

    #[test]
    fn fractional_solve_identity_operator() {
        let op = scalar_op(1.0);
        let method = Method::Sinc { kprime: 0.5 };
        let (u, _) = fractional_solve(&op, 0.5, &method, &[1.0], &SolverConfig::default()).unwrap();
        let r = method.build(&op, 0.5).unwrap();
        let scalar_err = (r.eval(1.0).unwrap() - 1.0).abs();
        assert!((u[0] - 1.0).abs() <= scalar_err + 1e-12);
    }

    #[test]
    fn ura_transform_q_zero_is_identity() {
        let r = PartialFractionRational::new(0.5, 0.2, vec![(1.0, -1.0), (0.5, -3.0)], 1.0, 1.0)
            .unwrap();
        let out = ura_transform(&r, 0.0).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn ura_transform_degree_one_closed_form() {
        let (c, d) = (0.8, -2.0);
        let q2 = 3.0;
        let r = PartialFractionRational::new(0.5, 0.0, vec![(c, d)], 1.0, 1.0).unwrap();
        let out = ura_transform(&r, q2).unwrap();
        assert_eq!(out.terms().len(), 1);
        let (cb, db) = out.terms()[0];
        assert_relative_eq!(db, d - q2 * c, max_relative = 1e-12);
        assert_relative_eq!(cb, c, max_relative = 1e-12);
    }

    #[test]
    fn ura_transform_scalar_identity() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = PartialFractionRational::new(
            0.5,
            0.05,
            vec![(0.7, -0.001), (0.4, -0.8), (2.0, -60.0), (5.0, -9000.0)],
            1.0,
            1.0,
        )
        .unwrap();
        for q2 in [0.5, 40.0, 4000.0] {
            let out = ura_transform(&r, q2).unwrap();
            for _ in 0..100 {
                let z = 10f64.powf(rng.gen_range(-2.0..5.0));
                let rv = r.eval(z).unwrap();
                let want = rv / (1.0 + q2 * rv);
                assert_relative_eq!(out.eval(z).unwrap(), want, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn ura_transform_mixed_signs_companion_route() {
        // negative residue forces the companion path; identity must hold
        let r = PartialFractionRational::new(
            0.5,
            1.2,
            vec![(0.7, -0.5), (-0.2, -4.0), (1.0, -20.0)],
            1.0,
            1.0,
        )
        .unwrap();
        let q2 = 2.0;
        let out = ura_transform(&r, q2).unwrap();
        for &z in &[0.3, 1.0, 7.7, 120.0] {
            let rv = r.eval(z).unwrap();
            assert_relative_eq!(
                out.eval(z).unwrap(),
                rv / (1.0 + q2 * rv),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn diffusion_reaction_identity_operator() {
        // A = I: u = f / (1 + q)
        let op = scalar_op(1.0);
        let method = Method::Aaa {
            degree: 6,
            samples: 2000,
            tol: 0.0,
        };
        // lambda_min = lambda_max = 1 breaks the AAA domain; widen bounds
        let op = DiscreteOperator::new(
            op.stiffness().clone(),
            vec![1.0],
            0.5,
            2.0,
            BoundsProvenance::Fallback,
        )
        .unwrap();
        let q = 3.0;
        let (u, _) =
            diffusion_reaction_solve(&op, 0.5, q, &method, &[1.0], &SolverConfig::default())
                .unwrap();
        assert_relative_eq!(u[0], 1.0 / (1.0 + q), max_relative = 1e-4);
    }

    #[test]
    fn apply_power_identity() {
        let op = scalar_op(1.0);
        let op = DiscreteOperator::new(
            op.stiffness().clone(),
            vec![1.0],
            0.5,
            2.0,
            BoundsProvenance::Fallback,
        )
        .unwrap();
        let method = Method::GaussJacobi { k: 20 };
        let (u, _) =
            apply_fractional_power(&op, 0.5, &method, &[2.0], &SolverConfig::default()).unwrap();
        assert_relative_eq!(u[0], 2.0, max_relative = 1e-6);
    }

    #[test]
    fn apply_power_eigenvector() {
        let n = 63;
        let op = uniform_1d(n);
        let j = 5;
        let psi = mode(n, j);
        let lam = uniform_mode_eigenvalue(n, j);
        let method = Method::GaussJacobi { k: 24 };
        let (u, _) =
            apply_fractional_power(&op, 0.5, &method, &psi, &SolverConfig::default()).unwrap();
        for (ui, pi) in u.iter().zip(&psi) {
            assert_relative_eq!(*ui, lam.powf(0.5) * pi, max_relative = 1e-5);
        }
    }

    #[test]
    fn alpha_validation() {
        let op = scalar_op(1.0);
        let m = Method::Sinc { kprime: 0.5 };
        assert!(matches!(
            fractional_solve(&op, 1.5, &m, &[1.0], &SolverConfig::default()),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn linearity_of_fractional_solve() {
        let n = 63;
        let op = uniform_1d(n);
        let m = Method::Sinc { kprime: 0.6 };
        let cfg = SolverConfig::default();
        let f1 = mode(n, 2);
        let f2 = mode(n, 9);
        let combo: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (u1, _) = fractional_solve(&op, 0.5, &m, &f1, &cfg).unwrap();
        let (u2, _) = fractional_solve(&op, 0.5, &m, &f2, &cfg).unwrap();
        let (uc, _) = fractional_solve(&op, 0.5, &m, &combo, &cfg).unwrap();
        for i in 0..n {
            assert_relative_eq!(
                uc[i],
                2.0 * u1[i] - 3.0 * u2[i],
                max_relative = 1e-8,
                epsilon = 1e-12
            );
        }
    }
}
