//! Marching schemes: the pseudo-parabolic pseudo-time solver and the
//! time-dependent evolution schemes built on the fractional solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;
use crate::rational::pade_table;
use crate::solve::{
    apply_fractional_power, diffusion_reaction_solve, linear_combo_solve, Method, SolveReport,
    SolverConfig,
};

/// Abort threshold for runaway explicit schemes.
const BLOWUP_FACTOR: f64 = 1e6;

/// Pseudo-time or real-time mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    points: Vec<f64>,
}

impl TimeMesh {
    /// Uniform mesh of [0, t_end] with `steps` intervals.
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end > 0.0) {
            return Err(Error::Parse("need steps >= 1 and t_end > 0".into()));
        }
        Ok(TimeMesh {
            points: (0..=steps)
                .map(|i| t_end * i as f64 / steps as f64)
                .collect(),
        })
    }

    /// Two-level graded mesh of [0, 1]: coarse points `0, 2^{l-1-L}` for
    /// `l = 1..=L+1`, each coarse interval split into `n` equal steps.
    /// Total step count `n (L+1)`.
    pub fn graded(levels: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parse("need n >= 1".into()));
        }
        let l = levels as i32;
        let mut coarse = vec![0.0];
        for j in 1..=levels + 1 {
            coarse.push(2f64.powi(j as i32 - 1 - l));
        }
        let mut points = vec![0.0];
        for pair in coarse.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for i in 1..=n {
                points.push(a + (b - a) * i as f64 / n as f64);
            }
        }
        Ok(TimeMesh { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn step_count(&self) -> usize {
        self.points.len() - 1
    }
}

/// Builds the graded pseudo-time mesh (alias kept close to the CLI verbs).
pub fn graded_time_mesh(levels: usize, n: usize) -> Result<TimeMesh> {
    TimeMesh::graded(levels, n)
}

/// Default level count tied to the spectral range: the terminal boundary
/// layer of the pseudo-time solution has width about `1/lambda_max`, so the
/// geometric refinement reaches it.
pub fn default_level_count(op: &DiscreteOperator, delta: f64) -> usize {
    (op.lambda_max() / delta).log2().ceil().max(0.0) as usize
}

/// Marches the pseudo-parabolic problem to pseudo-time 1, producing
/// `U ~ A^{-alpha} f`.
///
/// Each step applies the diagonal Pade approximant of degree `m` to
/// `k_l B (delta I + t_l B)^{-1}` with `B = A - delta I`; every
/// partial-fraction term reduces to one matvec plus one SPD solve with the
/// combination `(k_l - d t_l) S - delta (k_l - d t_l + d) D`.  The total
/// count is `m * step_count` and is recorded in the report.
pub fn pseudo_parabolic_march(
    op: &DiscreteOperator,
    alpha: f64,
    delta: f64,
    m: usize,
    mesh: &TimeMesh,
    f: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(delta > 0.0) || delta > op.lambda_min() {
        return Err(Error::DeltaTooLarge {
            delta,
            lambda_min: op.lambda_min(),
        });
    }
    if !(1..=3).contains(&m) {
        return Err(Error::PadeDegree(m));
    }
    let start = std::time::Instant::now();
    let pade = pade_table(alpha, m)?.partial_fractions;
    let c0 = pade.constant();
    let terms = pade.terms().to_vec();
    debug_assert!(terms.iter().all(|&(_, d)| d < -1.0));

    let n_dim = op.dim();
    let mut state: Vec<f64> = f.iter().map(|v| delta.powf(-alpha) * v).collect();
    let mut report = SolveReport {
        method: "pseudo-parabolic".to_string(),
        parameters: serde_json::json!({
            "m": m, "delta": delta, "steps": mesh.step_count()
        }),
        solve_count: 0,
        iterations: Vec::new(),
        final_residuals: Vec::new(),
        wall_time_s: 0.0,
        errors: None,
    };
    let d_mass = op.mass_diag();
    for l in 0..mesh.step_count() {
        let t = mesh.points()[l];
        let k = mesh.points()[l + 1] - t;
        let mut next: Vec<f64> = state.iter().map(|v| c0 * v).collect();
        for &(c, d) in &terms {
            // w solves [(k - d t) B - d delta I] w = state
            let sa = k - d * t;
            let sd = -delta * (k - d * t + d);
            let g: Vec<f64> = state
                .iter()
                .zip(d_mass)
                .map(|(v, dm)| v * dm)
                .collect();
            let (w, iters, resid) = linear_combo_solve(op, sa, sd, &g, cfg)?;
            // term value: (delta I + t B) w = (1 - t) delta w + t A w
            let aw = op.matvec(&w)?;
            let blend = (1.0 - t) * delta;
            for i in 0..n_dim {
                next[i] += c * (blend * w[i] + t * aw[i]);
            }
            report.solve_count += 1;
            report.iterations.push(iters);
            report.final_residuals.push(resid);
        }
        state = next;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((state, report))
}

/// One backward-Euler step: `(A^alpha + (1/tau) I) u_next = u/tau + source`.
fn backward_euler_step(
    op: &DiscreteOperator,
    alpha: f64,
    tau: f64,
    method: &Method,
    state: &[f64],
    source: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut rhs: Vec<f64> = state.iter().map(|v| v / tau).collect();
    if let Some(src) = source {
        for (r, s) in rhs.iter_mut().zip(src) {
            *r += s;
        }
    }
    diffusion_reaction_solve(op, alpha, 1.0 / tau, method, &rhs, cfg)
}

/// Unconditionally stable backward Euler for
/// `du/dt + A^alpha u = f(t)`, source sampled at the end of each step.
/// Returns the trajectory `u^0..u^M`.
pub fn implicit_euler_evolution<F>(
    op: &DiscreteOperator,
    alpha: f64,
    source: F,
    v0: &[f64],
    t_end: f64,
    steps: usize,
    method: &Method,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<f64>>, SolveReport)>
where
    F: Fn(f64) -> Option<Vec<f64>>,
{
    let tau = t_end / steps as f64;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(v0.to_vec());
    let mut total = SolveReport {
        method: "backward-euler".to_string(),
        parameters: serde_json::json!({
            "tau": tau, "steps": steps, "inner": method.tag()
        }),
        solve_count: 0,
        iterations: Vec::new(),
        final_residuals: Vec::new(),
        wall_time_s: 0.0,
        errors: None,
    };
    let start = std::time::Instant::now();
    for j in 0..steps {
        let t_next = tau * (j as f64 + 1.0);
        let src = source(t_next);
        let (next, rep) = backward_euler_step(
            op,
            alpha,
            tau,
            method,
            trajectory.last().unwrap(),
            src.as_deref(),
            cfg,
        )?;
        total.solve_count += rep.solve_count;
        total.iterations.extend(rep.iterations);
        total.final_residuals.extend(rep.final_residuals);
        trajectory.push(next);
    }
    total.wall_time_s = start.elapsed().as_secs_f64();
    Ok((trajectory, total))
}

/// Explicit scheme selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplicitVariant {
    /// `u_next = u - tau (A^alpha u - f)`: conditionally stable, aborts on
    /// norm growth beyond the blow-up threshold.
    Plain,
    /// Regularized: `(I + tau R)(u_next - u)/tau + A^alpha u = f` with
    /// `R = sigma (alpha A + (1-alpha) I)`; unconditionally stable for
    /// `sigma >= 0.5`.
    Regularized { sigma: f64 },
}

/// Two-level explicit schemes; `A^alpha u` is computed through
/// `A A^{-(1-alpha)} u` with the chosen backend.
pub fn explicit_evolution<F>(
    op: &DiscreteOperator,
    alpha: f64,
    source: F,
    v0: &[f64],
    t_end: f64,
    steps: usize,
    variant: ExplicitVariant,
    method: &Method,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<f64>>, SolveReport)>
where
    F: Fn(f64) -> Option<Vec<f64>>,
{
    let tau = t_end / steps as f64;
    let n = op.dim();
    let norm0 = op.weighted_norm(v0)?.max(1e-300);
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(v0.to_vec());
    let mut total = SolveReport {
        method: match variant {
            ExplicitVariant::Plain => "explicit".to_string(),
            ExplicitVariant::Regularized { .. } => "explicit-regularized".to_string(),
        },
        parameters: serde_json::json!({ "tau": tau, "steps": steps, "inner": method.tag() }),
        solve_count: 0,
        iterations: Vec::new(),
        final_residuals: Vec::new(),
        wall_time_s: 0.0,
        errors: None,
    };
    let start = std::time::Instant::now();
    for j in 0..steps {
        let t = tau * j as f64;
        let u = trajectory.last().unwrap().clone();
        let (au, rep) = apply_fractional_power(op, alpha, method, &u, cfg)?;
        total.solve_count += rep.solve_count;
        let mut residual: Vec<f64> = au;
        if let Some(src) = source(t) {
            for (r, s) in residual.iter_mut().zip(&src) {
                *r -= s;
            }
        }
        let next = match variant {
            ExplicitVariant::Plain => {
                let mut next = u.clone();
                for i in 0..n {
                    next[i] -= tau * residual[i];
                }
                next
            }
            ExplicitVariant::Regularized { sigma } => {
                // (I + tau R) delta_u = -tau residual,
                // I + tau R = (1 + tau sigma (1-alpha)) I + tau sigma alpha A
                let sa = tau * sigma * alpha;
                let sd = 1.0 + tau * sigma * (1.0 - alpha);
                let g: Vec<f64> = residual
                    .iter()
                    .zip(op.mass_diag())
                    .map(|(r, d)| -tau * r * d)
                    .collect();
                let (delta_u, iters, resid) = linear_combo_solve(op, sa, sd, &g, cfg)?;
                total.solve_count += 1;
                total.iterations.push(iters);
                total.final_residuals.push(resid);
                let mut next = u.clone();
                for i in 0..n {
                    next[i] += delta_u[i];
                }
                next
            }
        };
        let norm = op.weighted_norm(&next)?;
        if norm > BLOWUP_FACTOR * norm0 {
            return Err(Error::BlowUp {
                step: j + 1,
                factor: BLOWUP_FACTOR,
            });
        }
        trajectory.push(next);
    }
    total.wall_time_s = start.elapsed().as_secs_f64();
    Ok((trajectory, total))
}

/// One coupled component of a splitting run.
pub struct SplitComponent<'a> {
    pub op: &'a DiscreteOperator,
    pub alpha: f64,
    pub method: Method,
}

/// Sequential splitting for coupled fractional diffusion-reaction systems.
///
/// Per outer step: a backward-Euler fractional diffusion substep for every
/// component, then the reaction system `du/dt = R(u, t) + F(t)` integrated
/// by classical RK4 with four substeps starting from the diffusion output.
/// The source enters the reaction substep.
pub fn sequential_splitting<R, F>(
    components: &[SplitComponent],
    reaction: R,
    source: F,
    initial: &[Vec<f64>],
    t_end: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<Vec<f64>>>, SolveReport)>
where
    R: Fn(&[Vec<f64>], f64) -> Vec<Vec<f64>>,
    F: Fn(f64) -> Option<Vec<Vec<f64>>>,
{
    if components.is_empty() || initial.len() != components.len() {
        return Err(Error::DimensionMismatch {
            expected: components.len(),
            got: initial.len(),
        });
    }
    let dim = components[0].op.dim();
    for c in components {
        if c.op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.op.dim(),
            });
        }
    }
    let tau = t_end / steps as f64;
    let mut state: Vec<Vec<f64>> = initial.to_vec();
    let mut trajectory = vec![state.clone()];
    let norm0: f64 = state
        .iter()
        .map(|u| u.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    let mut total = SolveReport {
        method: "sequential-splitting".to_string(),
        parameters: serde_json::json!({ "tau": tau, "steps": steps, "components": components.len() }),
        solve_count: 0,
        iterations: Vec::new(),
        final_residuals: Vec::new(),
        wall_time_s: 0.0,
        errors: None,
    };
    let start = std::time::Instant::now();
    for j in 0..steps {
        let t0 = tau * j as f64;
        // diffusion substep, component by component
        for (c, u) in components.iter().zip(state.iter_mut()) {
            let (next, rep) =
                backward_euler_step(c.op, c.alpha, tau, &c.method, u, None, cfg)?;
            total.solve_count += rep.solve_count;
            *u = next;
        }
        // reaction substep: RK4 with 4 equal substeps over [t0, t0 + tau]
        let h = tau / 4.0;
        let mut t = t0;
        for _ in 0..4 {
            let rhs = |u: &[Vec<f64>], tt: f64| -> Vec<Vec<f64>> {
                let mut out = reaction(u, tt);
                if let Some(f) = source(tt) {
                    for (o, fi) in out.iter_mut().zip(&f) {
                        for (a, b) in o.iter_mut().zip(fi) {
                            *a += b;
                        }
                    }
                }
                out
            };
            let k1 = rhs(&state, t);
            let k2 = rhs(&axpy_all(&state, &k1, h / 2.0), t + h / 2.0);
            let k3 = rhs(&axpy_all(&state, &k2, h / 2.0), t + h / 2.0);
            let k4 = rhs(&axpy_all(&state, &k3, h), t + h);
            for ell in 0..state.len() {
                for i in 0..dim {
                    state[ell][i] += h / 6.0
                        * (k1[ell][i] + 2.0 * k2[ell][i] + 2.0 * k3[ell][i] + k4[ell][i]);
                }
            }
            t += h;
        }
        let norm: f64 = state
            .iter()
            .map(|u| u.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if norm > BLOWUP_FACTOR * norm0 {
            return Err(Error::BlowUp {
                step: j + 1,
                factor: BLOWUP_FACTOR,
            });
        }
        trajectory.push(state.clone());
    }
    total.wall_time_s = start.elapsed().as_secs_f64();
    Ok((trajectory, total))
}

fn axpy_all(base: &[Vec<f64>], delta: &[Vec<f64>], scale: f64) -> Vec<Vec<f64>> {
    base.iter()
        .zip(delta)
        .map(|(b, d)| b.iter().zip(d).map(|(x, y)| x + scale * y).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{BoundsProvenance, CsrMatrix};
    use approx::assert_relative_eq;

    fn scalar_op(value: f64, lo: f64, hi: f64) -> DiscreteOperator {
        DiscreteOperator::new(
            CsrMatrix::from_triplets(1, &[(0, 0, value)]),
            vec![1.0],
            lo,
            hi,
            BoundsProvenance::Analytic,
        )
        .unwrap()
    }

    #[test]
    fn graded_mesh_examples() {
        let mesh = TimeMesh::graded(1, 2).unwrap();
        assert_eq!(mesh.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(mesh.step_count(), 4);

        let mesh = TimeMesh::graded(0, 3).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in mesh.points().iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-15);
        }

        let mesh = TimeMesh::graded(4, 5).unwrap();
        assert_eq!(mesh.points().len(), 26);
    }

    #[test]
    fn march_scalar_closed_form() {
        // exact pseudo-time solution: f/(delta + t (lambda - delta))^alpha
        let (lam, delta, alpha) = (100.0, 1.0, 0.5);
        let op = scalar_op(lam, 1.0, lam);
        let mesh = TimeMesh::graded(6, 8).unwrap();
        let (u, report) =
            pseudo_parabolic_march(&op, alpha, delta, 2, &mesh, &[1.0], &SolverConfig::default())
                .unwrap();
        let exact = lam.powf(-alpha);
        // error convention relative to the data norm
        assert!(
            (u[0] - exact).abs() <= 1e-6,
            "march error {} too large",
            (u[0] - exact).abs()
        );
        assert_eq!(report.solve_count, 8 * 2 * 7);
    }

    #[test]
    fn march_degenerate_lambda_equals_delta() {
        let (lam, alpha) = (2.5, 0.3);
        let op = scalar_op(lam, lam, lam);
        let mesh = TimeMesh::graded(3, 4).unwrap();
        let (u, _) = pseudo_parabolic_march(
            &op,
            alpha,
            lam,
            1,
            &mesh,
            &[3.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(u[0], 3.0 * lam.powf(-alpha), max_relative = 1e-12);
    }

    #[test]
    fn march_rejects_large_delta() {
        let op = scalar_op(2.0, 2.0, 2.0);
        let mesh = TimeMesh::graded(2, 2).unwrap();
        assert!(matches!(
            pseudo_parabolic_march(&op, 0.5, 3.0, 1, &mesh, &[1.0], &SolverConfig::default()),
            Err(Error::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn backward_euler_scalar_recursion() {
        // A = I, f = 0: u^M = (1 + tau)^{-M} v0
        let op = DiscreteOperator::new(
            CsrMatrix::from_triplets(1, &[(0, 0, 1.0)]),
            vec![1.0],
            0.5,
            2.0,
            BoundsProvenance::Fallback,
        )
        .unwrap();
        let method = Method::Aaa {
            degree: 8,
            samples: 2000,
            tol: 0.0,
        };
        let steps = 10;
        let tau = 0.1;
        let (traj, _) = implicit_euler_evolution(
            &op,
            0.5,
            |_| None,
            &[1.0],
            tau * steps as f64,
            steps,
            &method,
            &SolverConfig::default(),
        )
        .unwrap();
        let expect = (1.0 + tau).powi(-(steps as i32));
        assert_relative_eq!(traj[steps][0], expect, max_relative = 1e-5);
    }

    #[test]
    fn splitting_reduces_to_backward_euler_without_reaction() {
        let op = scalar_op(4.0, 2.0, 8.0);
        let method = Method::Aaa {
            degree: 8,
            samples: 2000,
            tol: 0.0,
        };
        let cfg = SolverConfig::default();
        let steps = 6;
        let (traj_be, _) = implicit_euler_evolution(
            &op, 0.5, |_| None, &[1.0], 0.6, steps, &method, &cfg,
        )
        .unwrap();
        let comps = [SplitComponent {
            op: &op,
            alpha: 0.5,
            method: method.clone(),
        }];
        let (traj_sp, _) = sequential_splitting(
            &comps,
            |u, _| vec![vec![0.0; u[0].len()]],
            |_| None,
            &[vec![1.0]],
            0.6,
            steps,
            &cfg,
        )
        .unwrap();
        for j in 0..=steps {
            assert_relative_eq!(traj_be[j][0], traj_sp[j][0][0], epsilon = 1e-12);
        }
    }

    #[test]
    fn splitting_scalar_reaction_order_one()
    {
        // du/dt = -lam^a u + r u, solution e^{(r - lam^a) t}
        let (lam, alpha, r) = (9.0, 0.5, 0.7);
        let op = scalar_op(lam, 4.0, 16.0);
        let method = Method::Aaa {
            degree: 10,
            samples: 2000,
            tol: 0.0,
        };
        let cfg = SolverConfig::default();
        let exact = ((r - lam.powf(alpha)) * 1.0).exp();
        let err_at = |steps: usize| -> f64 {
            let comps = [SplitComponent {
                op: &op,
                alpha,
                method: method.clone(),
            }];
            let (traj, _) = sequential_splitting(
                &comps,
                |u, _| vec![u[0].iter().map(|x| r * x).collect()],
                |_| None,
                &[vec![1.0]],
                1.0,
                steps,
                &cfg,
            )
            .unwrap();
            (traj[steps][0][0] - exact).abs()
        };
        let (e1, e2, e3) = (err_at(8), err_at(16), err_at(32));
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        let order = 0.5 * (o1 + o2);
        assert!(
            (order - 1.0).abs() <= 0.2,
            "observed splitting order {order:.2} (errors {e1:.2e}, {e2:.2e}, {e3:.2e})"
        );
    }
}
