//! Multi-start quadratic-penalty descent, used to cross-check the augmented
//! Lagrangian solver.
//!
//! Shares only the problem definition with the main solver: no multipliers,
//! a fixed penalty schedule, and objective gradients taken by central
//! differences instead of the analytic expression.

use crate::kinematics::{JointArray, JOINT_COUNT};

use super::problem::PostureProblem;
use super::quasi_newton::{minimize, BfgsOptions, Smooth};

const PENALTY_SCHEDULE: [f64; 9] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9];
const OBJECTIVE_FD_STEP: f64 = 1e-6;

struct QuadraticPenalty<'p, 'a> {
    problem: &'p PostureProblem<'a>,
    penalty: f64,
}

impl QuadraticPenalty<'_, '_> {
    fn objective_gradient(&self, x: &JointArray) -> JointArray {
        JointArray::from_fn(|k, _| {
            let mut plus = *x;
            plus[k] += OBJECTIVE_FD_STEP;
            let mut minus = *x;
            minus[k] -= OBJECTIVE_FD_STEP;
            (self.problem.objective(&plus) - self.problem.objective(&minus)) / (plus[k] - minus[k])
        })
    }
}

impl Smooth for QuadraticPenalty<'_, '_> {
    fn value(&self, x: &JointArray) -> f64 {
        let p = self.problem;
        let c = p.constraints(x);
        let mut sq = 0.0;
        for j in 0..p.eq_count() {
            sq += c.eq[j] * c.eq[j];
        }
        for j in 0..p.ineq_count() {
            sq += c.ineq[j].max(0.0).powi(2);
        }
        for i in 0..JOINT_COUNT {
            sq += (p.bounds.lower[i] - x[i]).max(0.0).powi(2);
            sq += (x[i] - p.bounds.upper[i]).max(0.0).powi(2);
        }
        p.objective(x) + self.penalty * sq
    }

    fn value_and_gradient(&self, x: &JointArray) -> (f64, JointArray) {
        let p = self.problem;
        let (c, jac) = p.constraints_with_jacobian(x);
        let mut grad = self.objective_gradient(x);
        let two_rho = 2.0 * self.penalty;
        for j in 0..p.eq_count() {
            grad += jac.eq[j] * (two_rho * c.eq[j]);
        }
        for j in 0..p.ineq_count() {
            grad += jac.ineq[j] * (two_rho * c.ineq[j].max(0.0));
        }
        for i in 0..JOINT_COUNT {
            grad[i] -= two_rho * (p.bounds.lower[i] - x[i]).max(0.0);
            grad[i] += two_rho * (x[i] - p.bounds.upper[i]).max(0.0);
        }
        (self.value(x), grad)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PenaltyOutcome {
    pub q: JointArray,
    pub objective: f64,
    pub violation: f64,
    pub stages: usize,
}

pub(crate) fn penalty_descent_from(problem: &PostureProblem<'_>, start: JointArray) -> PenaltyOutcome {
    let options = BfgsOptions {
        gradient_tol: 1e-9,
        max_iterations: 400,
        max_step: 0.5,
    };
    let mut x = start;
    for penalty in PENALTY_SCHEDULE {
        x = minimize(&QuadraticPenalty { problem, penalty }, x, &options).x;
    }
    PenaltyOutcome {
        q: x,
        objective: problem.objective(&x),
        violation: problem.violation(&x),
        stages: PENALTY_SCHEDULE.len(),
    }
}
