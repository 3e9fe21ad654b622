//! Dense BFGS minimizer for the eight-dimensional posture subproblems.

use nalgebra::SMatrix;

use crate::kinematics::{JointArray, JOINT_COUNT};

type Hessian = SMatrix<f64, JOINT_COUNT, JOINT_COUNT>;

pub(crate) trait Smooth {
    fn value(&self, x: &JointArray) -> f64;
    fn value_and_gradient(&self, x: &JointArray) -> (f64, JointArray);
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BfgsOptions {
    /// Stop once the max-norm of the gradient drops below this.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Cap on the max-norm of a single step (radians).
    pub max_step: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BfgsOutcome {
    pub x: JointArray,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Armijo backtracking with safeguarded quadratic interpolation.
fn line_search(
    f: &impl Smooth,
    x: &JointArray,
    value: f64,
    slope: f64,
    direction: &JointArray,
) -> Option<(JointArray, f64)> {
    let mut t = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let candidate = x + direction * t;
        let trial = f.value(&candidate);
        if trial.is_finite() && trial <= value + ARMIJO_C1 * t * slope {
            return Some((candidate, trial));
        }
        let next = if trial.is_finite() {
            let denom = 2.0 * (trial - value - slope * t);
            if denom > 0.0 {
                -slope * t * t / denom
            } else {
                0.5 * t
            }
        } else {
            0.1 * t
        };
        t = next.clamp(0.1 * t, 0.5 * t);
    }
    None
}

pub(crate) fn minimize(f: &impl Smooth, x0: JointArray, options: &BfgsOptions) -> BfgsOutcome {
    let mut x = x0;
    let (mut value, mut grad) = f.value_and_gradient(&x);
    let mut inverse_hessian = Hessian::identity();
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        if grad.amax() <= options.gradient_tol {
            return BfgsOutcome {
                x,
                iterations,
                converged: true,
            };
        }
        iterations += 1;

        let mut direction = -(inverse_hessian * grad);
        if grad.dot(&direction) >= 0.0 {
            inverse_hessian = Hessian::identity();
            fresh = true;
            direction = -grad;
        }
        let longest = direction.amax();
        if longest > options.max_step {
            direction *= options.max_step / longest;
        }

        let slope = grad.dot(&direction);
        let Some((next, _)) = line_search(f, &x, value, slope, &direction) else {
            if fresh {
                // Steepest descent made no progress either: numerical floor.
                break;
            }
            inverse_hessian = Hessian::identity();
            fresh = true;
            continue;
        };

        let (next_value, next_grad) = f.value_and_gradient(&next);
        let s = next - x;
        let y = next_grad - grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                inverse_hessian = Hessian::identity() * (sy / y.norm_squared());
                fresh = false;
            }
            let rho = 1.0 / sy;
            let left = Hessian::identity() - s * y.transpose() * rho;
            inverse_hessian = left * inverse_hessian * left.transpose() + s * s.transpose() * rho;
        }

        let stalled = s.amax() <= 1e-14 * (1.0 + x.amax())
            && (value - next_value).abs() <= 1e-16 * (1.0 + value.abs());
        x = next;
        value = next_value;
        grad = next_grad;
        if stalled {
            break;
        }
    }

    BfgsOutcome {
        x,
        iterations,
        converged: grad.amax() <= options.gradient_tol,
    }
}
