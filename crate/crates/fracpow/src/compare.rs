//! Matched-solve-count comparison sweeps across backends.
//!
//! Each method family maps a target solve budget onto its own refinement
//! parameter (quadrature step, node count, degree, marching mesh), runs the
//! solve, and reports the realized count together with errors against a
//! caller-supplied reference.  Rows are deterministic for a fixed
//! configuration.

use serde::Serialize;

use crate::error::Result;
use crate::operator::DiscreteOperator;
use crate::rational::SincSpec;
use crate::reference::error_report;
use crate::solve::{fractional_solve, Method, SolverConfig};
use crate::stepping::{pseudo_parabolic_march, TimeMesh};

/// Families available to `compare` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    Sinc,
    GaussJacobi,
    Aaa,
    Sigma,
    Extension,
    PseudoParabolic,
}

impl SweepFamily {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "sinc" => Some(SweepFamily::Sinc),
            "gauss-jacobi" => Some(SweepFamily::GaussJacobi),
            "aaa" => Some(SweepFamily::Aaa),
            "sigma" => Some(SweepFamily::Sigma),
            "extension" => Some(SweepFamily::Extension),
            "pseudo-parabolic" => Some(SweepFamily::PseudoParabolic),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SweepFamily::Sinc => "sinc",
            SweepFamily::GaussJacobi => "gauss-jacobi",
            SweepFamily::Aaa => "aaa",
            SweepFamily::Sigma => "sigma",
            SweepFamily::Extension => "extension",
            SweepFamily::PseudoParabolic => "pseudo-parabolic",
        }
    }
}

/// One sweep entry: a method at one solve budget.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub parameter: String,
    pub solve_count: usize,
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub wall_time_s: f64,
}

/// Largest quadrature step whose balanced node count stays within `budget`.
fn sinc_step_for_budget(alpha: f64, budget: usize) -> Option<f64> {
    let count = |kp: f64| SincSpec::balanced(alpha, kp).map(|s| s.term_count()).ok();
    let mut lo = 0.02; // large count
    let mut hi = 6.0; // small count
    if count(hi)? > budget {
        return None;
    }
    if count(lo)? <= budget {
        return Some(lo);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if count(mid)? <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Marching mesh heuristic for a solve budget: degree-1 stepping with the
/// level count capped so at least one refinement step per level fits.
fn march_mesh_for_budget(op: &DiscreteOperator, budget: usize) -> (usize, usize) {
    let delta = op.lambda_min();
    let natural = (op.lambda_max() / delta).log2().ceil().max(0.0) as usize;
    let levels = natural.min((budget / 2).saturating_sub(1)).max(0);
    let n = (budget / (levels + 1)).max(1);
    (levels, n)
}

/// Runs one family at one budget; `u_ref` is the reference solution and the
/// errors are measured relative to the data norm.
pub fn run_at_budget(
    op: &DiscreteOperator,
    alpha: f64,
    family: SweepFamily,
    budget: usize,
    f: &[f64],
    u_ref: &[f64],
    cfg: &SolverConfig,
) -> Result<Option<CompareRow>> {
    let (u, parameter, solve_count, wall) = match family {
        SweepFamily::Sinc => {
            let Some(kp) = sinc_step_for_budget(alpha, budget) else {
                return Ok(None);
            };
            let (u, rep) = fractional_solve(op, alpha, &Method::Sinc { kprime: kp }, f, cfg)?;
            (u, format!("kprime={kp:.6}"), rep.solve_count, rep.wall_time_s)
        }
        SweepFamily::GaussJacobi => {
            let (u, rep) =
                fractional_solve(op, alpha, &Method::GaussJacobi { k: budget }, f, cfg)?;
            (u, format!("k={budget}"), rep.solve_count, rep.wall_time_s)
        }
        SweepFamily::Aaa => {
            let method = Method::Aaa {
                degree: budget,
                samples: 4000,
                tol: 0.0,
            };
            let (u, rep) = fractional_solve(op, alpha, &method, f, cfg)?;
            (u, format!("degree={budget}"), rep.solve_count, rep.wall_time_s)
        }
        SweepFamily::Sigma => {
            if budget < 2 {
                return Ok(None);
            }
            let msub = (budget + 1) & !1usize; // even subinterval count
            let method = Method::Sigma {
                order: crate::rational::SmoothnessOrder::Trapezoid,
                msub,
            };
            let (u, rep) = fractional_solve(op, alpha, &method, f, cfg)?;
            (u, format!("msub={msub}"), rep.solve_count, rep.wall_time_s)
        }
        SweepFamily::Extension => {
            let method = Method::Extension {
                m: budget,
                truncation: crate::rational::DEFAULT_TRUNCATION,
                grading: crate::rational::DEFAULT_GRADING,
            };
            let (u, rep) = fractional_solve(op, alpha, &method, f, cfg)?;
            (u, format!("m={budget}"), rep.solve_count, rep.wall_time_s)
        }
        SweepFamily::PseudoParabolic => {
            let (levels, n) = march_mesh_for_budget(op, budget);
            let mesh = TimeMesh::graded(levels, n)?;
            let delta = op.lambda_min();
            let (u, rep) = pseudo_parabolic_march(op, alpha, delta, 1, &mesh, f, cfg)?;
            (
                u,
                format!("m=1,L={levels},n={n}"),
                rep.solve_count,
                rep.wall_time_s,
            )
        }
    };
    let report = error_report(&u, u_ref, op, Some(f), "reference")?;
    Ok(Some(CompareRow {
        method: family.tag().to_string(),
        parameter,
        solve_count,
        l2_rel: report.l2_vs_data.unwrap(),
        linf_rel: report.linf_vs_data.unwrap(),
        wall_time_s: wall,
    }))
}

/// Full sweep over a budget range; duplicate realized counts per family are
/// dropped (the smallest budget that realizes a count wins).
pub fn sweep(
    op: &DiscreteOperator,
    alpha: f64,
    families: &[SweepFamily],
    budgets: std::ops::RangeInclusive<usize>,
    f: &[f64],
    u_ref: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for &family in families {
        let mut seen = std::collections::BTreeSet::new();
        for budget in budgets.clone() {
            if let Some(row) = run_at_budget(op, alpha, family, budget, f, u_ref, cfg)? {
                if seen.insert(row.solve_count) {
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_1d_variable, CoefficientSampling};
    use crate::reference::uniform_spectral_solve;

    #[test]
    fn sinc_budget_search_is_tight() {
        for alpha in [0.25, 0.5] {
            for budget in [5usize, 9, 20, 40] {
                let kp = sinc_step_for_budget(alpha, budget).unwrap();
                let spec = SincSpec::balanced(alpha, kp).unwrap();
                assert!(spec.term_count() <= budget);
            }
        }
    }

    #[test]
    fn sweep_rows_have_matching_counts() {
        let n = 63;
        let op = assemble_1d_variable(|_| 1.0, n, CoefficientSampling::Midpoint).unwrap();
        let f = vec![1.0; n];
        let u_ref = uniform_spectral_solve(n, 1, 0.5, &f, 0.0).unwrap();
        let rows = sweep(
            &op,
            0.5,
            &[SweepFamily::GaussJacobi, SweepFamily::Aaa],
            6..=8,
            &f,
            &u_ref,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!(row.l2_rel.is_finite());
            assert!(row.solve_count >= 6 && row.solve_count <= 8);
        }
    }
}
