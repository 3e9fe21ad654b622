//! Powell-Hestenes-Rockafellar augmented Lagrangian for a single start.
//!
//! Inequalities enter as `max(0, mu + rho g)^2` terms without slack
//! variables; joint bounds are treated as linear inequalities with exact
//! gradients, the task constraints with finite-difference Jacobians.

use crate::kinematics::{JointArray, JOINT_COUNT};

use super::problem::{PostureProblem, MAX_EQ, MAX_INEQ};
use super::quasi_newton::{minimize, BfgsOptions, Smooth};
use super::SolverOptions;

/// Outcome of one start.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StartOutcome {
    pub q: JointArray,
    pub objective: f64,
    pub violation: f64,
    /// Feasible within tolerance and stationary between outer iterations.
    pub converged: bool,
    pub iterations: usize,
}

struct Multipliers {
    eq: [f64; MAX_EQ],
    ineq: [f64; MAX_INEQ],
    lower: JointArray,
    upper: JointArray,
}

struct AugmentedLagrangian<'p, 'a> {
    problem: &'p PostureProblem<'a>,
    multipliers: &'p Multipliers,
    penalty: f64,
}

impl AugmentedLagrangian<'_, '_> {
    /// Shifted inequality term `max(0, mu + rho g)`.
    fn shifted(&self, mu: f64, g: f64) -> f64 {
        (mu + self.penalty * g).max(0.0)
    }

    fn inequality_term(&self, mu: f64, g: f64) -> f64 {
        let s = self.shifted(mu, g);
        (s * s - mu * mu) / (2.0 * self.penalty)
    }

    fn bound_residuals(&self, x: &JointArray) -> (JointArray, JointArray) {
        let b = &self.problem.bounds;
        (
            JointArray::from_fn(|i, _| b.lower[i] - x[i]),
            JointArray::from_fn(|i, _| x[i] - b.upper[i]),
        )
    }
}

impl Smooth for AugmentedLagrangian<'_, '_> {
    fn value(&self, x: &JointArray) -> f64 {
        let p = self.problem;
        let m = self.multipliers;
        let c = p.constraints(x);
        let mut total = p.objective(x);
        for j in 0..p.eq_count() {
            total += m.eq[j] * c.eq[j] + 0.5 * self.penalty * c.eq[j] * c.eq[j];
        }
        for j in 0..p.ineq_count() {
            total += self.inequality_term(m.ineq[j], c.ineq[j]);
        }
        let (lower, upper) = self.bound_residuals(x);
        for i in 0..JOINT_COUNT {
            total += self.inequality_term(m.lower[i], lower[i]);
            total += self.inequality_term(m.upper[i], upper[i]);
        }
        total
    }

    fn value_and_gradient(&self, x: &JointArray) -> (f64, JointArray) {
        let p = self.problem;
        let m = self.multipliers;
        let (c, jac) = p.constraints_with_jacobian(x);
        let mut total = p.objective(x);
        let mut grad = p.objective_gradient(x);
        for j in 0..p.eq_count() {
            total += m.eq[j] * c.eq[j] + 0.5 * self.penalty * c.eq[j] * c.eq[j];
            grad += jac.eq[j] * (m.eq[j] + self.penalty * c.eq[j]);
        }
        for j in 0..p.ineq_count() {
            total += self.inequality_term(m.ineq[j], c.ineq[j]);
            grad += jac.ineq[j] * self.shifted(m.ineq[j], c.ineq[j]);
        }
        let (lower, upper) = self.bound_residuals(x);
        for i in 0..JOINT_COUNT {
            total += self.inequality_term(m.lower[i], lower[i]);
            total += self.inequality_term(m.upper[i], upper[i]);
            grad[i] += self.shifted(m.upper[i], upper[i]) - self.shifted(m.lower[i], lower[i]);
        }
        (total, grad)
    }
}

pub(crate) fn solve_from(
    problem: &PostureProblem<'_>,
    start: JointArray,
    options: &SolverOptions,
) -> StartOutcome {
    let mut multipliers = Multipliers {
        eq: [0.0; MAX_EQ],
        ineq: [0.0; MAX_INEQ],
        lower: JointArray::zeros(),
        upper: JointArray::zeros(),
    };
    let inner = BfgsOptions {
        gradient_tol: options.inner_tol,
        max_iterations: options.max_inner,
        max_step: 0.5,
    };
    let mut penalty = options.initial_penalty;
    let mut x = start;
    let mut previous_violation = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for outer in 0..options.max_outer {
        iterations = outer + 1;
        let lagrangian = AugmentedLagrangian {
            problem,
            multipliers: &multipliers,
            penalty,
        };
        let inner_outcome = minimize(&lagrangian, x, &inner);
        if !inner_outcome.converged {
            log::trace!(
                "inner solve stopped after {} iterations at penalty {penalty:e}",
                inner_outcome.iterations
            );
        }
        let next = inner_outcome.x;

        let c = problem.constraints(&next);
        for j in 0..problem.eq_count() {
            multipliers.eq[j] += penalty * c.eq[j];
        }
        for j in 0..problem.ineq_count() {
            multipliers.ineq[j] = (multipliers.ineq[j] + penalty * c.ineq[j]).max(0.0);
        }
        for i in 0..JOINT_COUNT {
            let lower = problem.bounds.lower[i] - next[i];
            let upper = next[i] - problem.bounds.upper[i];
            multipliers.lower[i] = (multipliers.lower[i] + penalty * lower).max(0.0);
            multipliers.upper[i] = (multipliers.upper[i] + penalty * upper).max(0.0);
        }

        let violation = problem.violation(&next);
        let step = (next - x).amax();
        x = next;
        if outer > 0 && violation <= options.outer_tol && step <= options.outer_tol {
            converged = true;
            break;
        }
        if violation > 0.25 * previous_violation {
            penalty = (penalty * options.penalty_growth).min(options.max_penalty);
        }
        previous_violation = violation;
    }

    StartOutcome {
        q: x,
        objective: problem.objective(&x),
        violation: problem.violation(&x),
        converged,
        iterations,
    }
}
