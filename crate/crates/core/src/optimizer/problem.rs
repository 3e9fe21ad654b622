//! The posture problem as seen by the solvers: objective, joint bounds, and
//! the nonlinear task constraints with finite-difference Jacobians.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::kinematics::{
    horizontal_distance, JointArray, JointVector, KinematicModel, RigidTransform, JOINT_COUNT,
};
use crate::mobility::{objective, objective_gradient, ImpairmentModel, PostureContext, RoMBounds};

use super::task::TaskConstraints;

pub(crate) const MAX_EQ: usize = 3;
pub(crate) const MAX_INEQ: usize = 9;

/// Residuals of a candidate posture, in radians for joint bounds and meters
/// for everything else. Values `<= 0` are satisfied; the equality residual
/// is signed and satisfied at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `max(lower - q, q - upper)` per joint.
    pub bounds: [f64; JOINT_COUNT],
    /// Signed distance of the object to the task space (handover only).
    pub task_space: Option<f64>,
    /// `p_obj - p_task` for handovers; object-to-target distance for reaches.
    pub equality: f64,
    /// `d_safe_th - d_obj` (handover only).
    pub safety: Option<f64>,
    /// `d_elbow_th - d_elbow` (handover only).
    pub elbow: Option<f64>,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        let mut worst = self.equality.abs();
        for r in self
            .bounds
            .iter()
            .copied()
            .chain(self.task_space)
            .chain(self.safety)
            .chain(self.elbow)
        {
            worst = worst.max(r);
        }
        worst.max(0.0)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum TaskKind {
    Handover(TaskConstraints),
    /// Full object position prescribed.
    Reach(Vector3<f64>),
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct ConstraintValues {
    pub eq: [f64; MAX_EQ],
    pub ineq: [f64; MAX_INEQ],
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConstraintJacobian {
    pub eq: [JointArray; MAX_EQ],
    pub ineq: [JointArray; MAX_INEQ],
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PostureProblem<'a> {
    pub model: &'a KinematicModel,
    pub ctx: &'a PostureContext,
    pub weights: &'a ImpairmentModel,
    pub bounds: RoMBounds,
    pub task: TaskKind,
    pub grasp_offset: &'a RigidTransform,
    pub fd_step: f64,
}

impl PostureProblem<'_> {
    pub fn objective(&self, q: &JointArray) -> f64 {
        objective(&JointVector::from(*q), self.ctx, self.weights)
    }

    pub fn objective_gradient(&self, q: &JointArray) -> JointArray {
        *objective_gradient(&JointVector::from(*q), self.ctx, self.weights).as_vector()
    }

    pub fn eq_count(&self) -> usize {
        match &self.task {
            TaskKind::Handover(_) => 1,
            TaskKind::Reach(_) => 3,
        }
    }

    pub fn ineq_count(&self) -> usize {
        match &self.task {
            TaskKind::Handover(tc) => tc.task_space.residual_count() + 2,
            TaskKind::Reach(_) => 0,
        }
    }

    fn object_and_elbow(&self, q: &JointArray) -> (Vector3<f64>, Vector3<f64>) {
        let frames = self.model.frames(&JointVector::from(*q));
        let object = frames[JOINT_COUNT].transform_point(&self.grasp_offset.translation);
        (object, frames[4].translation)
    }

    pub fn constraints(&self, q: &JointArray) -> ConstraintValues {
        let (object, elbow) = self.object_and_elbow(q);
        let mut values = ConstraintValues::default();
        match &self.task {
            TaskKind::Handover(tc) => {
                values.eq[0] = object[tc.equality_axis.index()] - tc.p_task;
                let mut n = 0;
                tc.task_space.residuals(&object, &mut |r| {
                    values.ineq[n] = r;
                    n += 1;
                });
                let origin = Vector3::zeros();
                values.ineq[n] = tc.d_safe_th - horizontal_distance(&object, &origin);
                values.ineq[n + 1] = tc.d_elbow_th - horizontal_distance(&elbow, &origin);
            }
            TaskKind::Reach(target) => {
                for a in 0..3 {
                    values.eq[a] = object[a] - target[a];
                }
            }
        }
        values
    }

    /// Values and central-difference Jacobian of the nonlinear constraints.
    pub fn constraints_with_jacobian(&self, q: &JointArray) -> (ConstraintValues, ConstraintJacobian) {
        let values = self.constraints(q);
        let mut jac = ConstraintJacobian {
            eq: [JointArray::zeros(); MAX_EQ],
            ineq: [JointArray::zeros(); MAX_INEQ],
        };
        let (n_eq, n_ineq) = (self.eq_count(), self.ineq_count());
        let h = self.fd_step;
        for k in 0..JOINT_COUNT {
            let mut plus = *q;
            plus[k] += h;
            let mut minus = *q;
            minus[k] -= h;
            let step = plus[k] - minus[k];
            let (cp, cm) = (self.constraints(&plus), self.constraints(&minus));
            for j in 0..n_eq {
                jac.eq[j][k] = (cp.eq[j] - cm.eq[j]) / step;
            }
            for j in 0..n_ineq {
                jac.ineq[j][k] = (cp.ineq[j] - cm.ineq[j]) / step;
            }
        }
        (values, jac)
    }

    pub fn report(&self, q: &JointArray) -> ConstraintReport {
        let mut bounds = [0.0; JOINT_COUNT];
        for (i, b) in bounds.iter_mut().enumerate() {
            *b = (self.bounds.lower[i] - q[i]).max(q[i] - self.bounds.upper[i]);
        }
        let values = self.constraints(q);
        match &self.task {
            TaskKind::Handover(tc) => {
                let n_space = tc.task_space.residual_count();
                let space = values.ineq[..n_space]
                    .iter()
                    .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                ConstraintReport {
                    bounds,
                    task_space: Some(space),
                    equality: values.eq[0],
                    safety: Some(values.ineq[n_space]),
                    elbow: Some(values.ineq[n_space + 1]),
                }
            }
            TaskKind::Reach(_) => ConstraintReport {
                bounds,
                task_space: None,
                equality: Vector3::new(values.eq[0], values.eq[1], values.eq[2]).norm(),
                safety: None,
                elbow: None,
            },
        }
    }

    pub fn violation(&self, q: &JointArray) -> f64 {
        self.report(q).max_violation()
    }
}
