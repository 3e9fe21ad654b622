//! Constrained posture optimization.
//!
//! [`solve_posture`] finds the posture that keeps impaired joints near the
//! measured posture and functioning joints near the natural posture, subject
//! to the impaired range of motion and the handover task constraints.
//! [`multi_start_oracle`] solves the same problem by an independent penalty
//! method for verification, and [`resolve_ik_posture`] solves the variant
//! where the object position is fully prescribed.

mod augmented_lagrangian;
mod oracle;
mod problem;
mod quasi_newton;
mod task;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointArray, JointVector, KinematicModel, RigidTransform};
use crate::mobility::{impaired_bounds, ImpairmentModel, PostureContext, RoMBounds};
use crate::parallel::{map_ordered, Execution};

pub use problem::ConstraintReport;
pub use task::{Aabb, Axis, Sphere, TaskConstraints, TaskSpace};

use augmented_lagrangian::{solve_from, StartOutcome};
use problem::{PostureProblem, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Seeded starts drawn uniformly in the impaired bounds, on top of the
    /// measured and natural postures.
    pub random_starts: usize,
    pub seed: u64,
    /// Feasibility and step tolerance of the outer loop.
    pub outer_tol: f64,
    /// Gradient tolerance of the inner quasi-Newton solve.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    /// Central-difference step for constraint Jacobians (radians).
    pub fd_step: f64,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            random_starts: 6,
            seed: 0,
            outer_tol: 1e-6,
            inner_tol: 1e-8,
            max_outer: 50,
            max_inner: 200,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            fd_step: 1e-7,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Feasible but still moving when the outer iteration cap was hit.
    IterationLimit,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizationResult {
    /// Best posture found; the best attempt when not converged.
    pub q_star: JointVector,
    pub objective_value: f64,
    pub constraint_report: ConstraintReport,
    pub converged: bool,
    pub status: SolveStatus,
    /// Outer iterations spent by the selected start.
    pub iterations: usize,
    pub starts_used: usize,
    /// Object-to-target distance of the best attempt (reach problems only).
    pub closest_approach: Option<f64>,
}

/// Inputs shared by every posture solve for one user.
#[derive(Clone, Copy, Debug)]
pub struct PostureSetup<'a> {
    pub model: &'a KinematicModel,
    pub ctx: &'a PostureContext,
    pub weights: &'a ImpairmentModel,
    pub healthy: &'a RoMBounds,
    pub grasp_offset: &'a RigidTransform,
}

impl<'a> PostureSetup<'a> {
    fn problem(&self, task: TaskKind, fd_step: f64) -> Result<PostureProblem<'a>> {
        let bounds = impaired_bounds(self.healthy, self.weights, &self.ctx.q_m, self.ctx.zeta)?.bounds;
        Ok(PostureProblem {
            model: self.model,
            ctx: self.ctx,
            weights: self.weights,
            bounds,
            task,
            grasp_offset: self.grasp_offset,
            fd_step,
        })
    }
}

/// Measured posture, natural posture, then `count` seeded uniform samples in
/// `bounds`.
fn start_points(ctx: &PostureContext, bounds: &RoMBounds, count: usize, seed: u64) -> Vec<JointArray> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![*ctx.q_m.as_vector(), *ctx.q_n.as_vector()];
    for _ in 0..count {
        starts.push(JointArray::from_fn(|i, _| {
            let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
            if lo < hi {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        }));
    }
    starts
}

fn strictly_better(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-12 * (1.0 + best.abs())
}

/// Picks the winning start: lowest objective among converged starts (first
/// in start order on ties), then among feasible ones, then the least
/// infeasible attempt.
fn select(outcomes: &[StartOutcome], tol: f64) -> (usize, SolveStatus) {
    let pick = |accept: &dyn Fn(&StartOutcome) -> bool| {
        let mut best: Option<usize> = None;
        for (i, o) in outcomes.iter().enumerate() {
            if !accept(o) {
                continue;
            }
            match best {
                Some(b) if !strictly_better(o.objective, outcomes[b].objective) => {}
                _ => best = Some(i),
            }
        }
        best
    };
    if let Some(i) = pick(&|o| o.converged) {
        return (i, SolveStatus::Converged);
    }
    if let Some(i) = pick(&|o| o.violation <= tol) {
        return (i, SolveStatus::IterationLimit);
    }
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.violation < outcomes[best].violation {
            best = i;
        }
    }
    (best, SolveStatus::Infeasible)
}

fn assemble(problem: &PostureProblem<'_>, outcomes: &[StartOutcome], tol: f64) -> OptimizationResult {
    let (index, status) = select(outcomes, tol);
    let winner = outcomes[index];
    let constraint_report = problem.report(&winner.q);
    let closest_approach = match problem.task {
        TaskKind::Reach(_) => Some(constraint_report.equality),
        TaskKind::Handover(_) => None,
    };
    OptimizationResult {
        q_star: JointVector::from(winner.q),
        objective_value: winner.objective,
        constraint_report,
        converged: status == SolveStatus::Converged,
        status,
        iterations: winner.iterations,
        starts_used: outcomes.len(),
        closest_approach,
    }
}

fn run_starts(problem: &PostureProblem<'_>, options: &SolverOptions) -> OptimizationResult {
    let starts = start_points(problem.ctx, &problem.bounds, options.random_starts, options.seed);
    let outcomes = map_ordered(options.execution, &starts, |s| solve_from(problem, *s, options));
    assemble(problem, &outcomes, options.outer_tol)
}

/// Solves the handover posture problem by multi-start augmented Lagrangian.
///
/// An infeasible problem is not an error: the result carries
/// [`SolveStatus::Infeasible`], the best attempt, and its residuals.
pub fn solve_posture(
    setup: &PostureSetup<'_>,
    task: &TaskConstraints,
    options: &SolverOptions,
) -> Result<OptimizationResult> {
    let problem = setup.problem(TaskKind::Handover(*task), options.fd_step)?;
    Ok(run_starts(&problem, options))
}

/// Minimizes the same objective with the object position fixed at `target`
/// and only the impaired joint bounds as further constraints.
pub fn resolve_ik_posture(
    setup: &PostureSetup<'_>,
    target: &Vector3<f64>,
    options: &SolverOptions,
) -> Result<OptimizationResult> {
    if !target.iter().all(|c| c.is_finite()) {
        return Err(Error::Parameter("reach target must be finite".into()));
    }
    let problem = setup.problem(TaskKind::Reach(*target), options.fd_step)?;
    Ok(run_starts(&problem, options))
}

/// Residuals of `q` against `bounds` and the handover constraints, computed
/// exactly as [`solve_posture`] checks them.
pub fn constraint_residuals(
    model: &KinematicModel,
    q: &JointVector,
    bounds: &RoMBounds,
    task: &TaskConstraints,
    grasp_offset: &RigidTransform,
) -> ConstraintReport {
    // Objective terms are unused by the residual computation.
    let ctx = PostureContext {
        q_m: *q,
        q_n: *q,
        alpha: 0.0,
        zeta: 0.0,
    };
    let weights = ImpairmentModel::healthy();
    let problem = PostureProblem {
        model,
        ctx: &ctx,
        weights: &weights,
        bounds: *bounds,
        task: TaskKind::Handover(*task),
        grasp_offset,
        fd_step: SolverOptions::default().fd_step,
    };
    problem.report(q.as_vector())
}

const ORACLE_FEASIBILITY_TOL: f64 = 1e-6;

fn oracle_result(problem: &PostureProblem<'_>, starts: &[JointArray], execution: Execution) -> OptimizationResult {
    let runs = map_ordered(execution, starts, |s| oracle::penalty_descent_from(problem, *s));
    let outcomes: Vec<StartOutcome> = runs
        .iter()
        .map(|r| StartOutcome {
            q: r.q,
            objective: r.objective,
            violation: r.violation,
            converged: r.violation <= ORACLE_FEASIBILITY_TOL,
            iterations: r.stages,
        })
        .collect();
    assemble(problem, &outcomes, ORACLE_FEASIBILITY_TOL)
}

/// Brute-force reference: quadratic-penalty descent from the measured and
/// natural postures plus `n_starts` seeded uniform samples in the impaired
/// bounds; returns the best feasible result.
pub fn multi_start_oracle(
    setup: &PostureSetup<'_>,
    task: &TaskConstraints,
    n_starts: usize,
    seed: u64,
    execution: Execution,
) -> Result<OptimizationResult> {
    if n_starts == 0 {
        return Err(Error::Parameter("oracle needs at least one start".into()));
    }
    let problem = setup.problem(TaskKind::Handover(*task), SolverOptions::default().fd_step)?;
    let starts = start_points(setup.ctx, &problem.bounds, n_starts, seed);
    Ok(oracle_result(&problem, &starts, execution))
}

/// Quadratic-penalty descent from a single given start.
pub fn penalty_descent(
    setup: &PostureSetup<'_>,
    task: &TaskConstraints,
    start: &JointVector,
) -> Result<OptimizationResult> {
    let problem = setup.problem(TaskKind::Handover(*task), SolverOptions::default().fd_step)?;
    Ok(oracle_result(&problem, &[*start.as_vector()], Execution::Sequential))
}
