//! Residual mobility of the user: impairment weights, impaired range of
//! motion, compensation cost and the posture objective.

use log::warn;

use crate::error::{Error, Result};
use crate::kinematics::{JointArray, JointVector, JOINT_COUNT, JOINT_NAMES, WRIST_JOINTS};

/// Per-joint mobility loss in [0, 1]; 1 is a blocked joint, 0 a healthy one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpairmentModel {
    weights: JointArray,
}

impl ImpairmentModel {
    pub fn new(weights: [f64; JOINT_COUNT]) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::Parameter(format!(
                    "impairment weight for {} must lie in [0, 1], got {w}",
                    JOINT_NAMES[i]
                )));
            }
        }
        Ok(ImpairmentModel {
            weights: JointArray::from(weights),
        })
    }

    pub fn healthy() -> Self {
        ImpairmentModel {
            weights: JointArray::zeros(),
        }
    }

    /// Both wrist joints blocked, everything else healthy.
    pub fn wrist_locked() -> Self {
        let mut weights = JointArray::zeros();
        for i in WRIST_JOINTS {
            weights[i] = 1.0;
        }
        ImpairmentModel { weights }
    }

    pub fn weights(&self) -> &JointArray {
        &self.weights
    }

    /// Diagonal of `I - W`.
    pub fn complement(&self) -> JointArray {
        self.weights.map(|w| 1.0 - w)
    }

    /// Zero-based indices of joints with complete functional loss.
    pub fn blocked_indices(&self) -> Vec<usize> {
        (0..JOINT_COUNT).filter(|&i| self.weights[i] == 1.0).collect()
    }
}

/// Joint limits in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoMBounds {
    pub lower: JointVector,
    pub upper: JointVector,
}

impl RoMBounds {
    pub fn new(lower: JointVector, upper: JointVector) -> Result<Self> {
        for i in 0..JOINT_COUNT {
            if lower[i] > upper[i] {
                return Err(Error::Parameter(format!(
                    "{}: lower bound {} exceeds upper bound {}",
                    JOINT_NAMES[i], lower[i], upper[i]
                )));
            }
        }
        Ok(RoMBounds { lower, upper })
    }

    pub fn contains(&self, q: &JointVector) -> bool {
        (0..JOINT_COUNT).all(|i| q[i] >= self.lower[i] && q[i] <= self.upper[i])
    }

    pub fn clamp(&self, q: &JointVector) -> JointVector {
        let v = JointArray::from_fn(|i, _| q[i].clamp(self.lower[i], self.upper[i]));
        JointVector::from(v)
    }

    pub fn width(&self, joint: usize) -> f64 {
        self.upper[joint] - self.lower[joint]
    }
}

/// Impaired bounds plus a record of every clamp applied while computing them.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpairedBounds {
    pub bounds: RoMBounds,
    /// Joints where the measured posture lay outside the healthy range.
    pub posture_clamped: Vec<usize>,
    /// Joints where `q_m ± zeta` reached past the healthy range.
    pub bounds_clamped: Vec<usize>,
}

pub fn impaired_bounds(
    healthy: &RoMBounds,
    w: &ImpairmentModel,
    q_m: &JointVector,
    zeta: f64,
) -> Result<ImpairedBounds> {
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::Parameter(format!("zeta must be >= 0, got {zeta}")));
    }
    let mut posture_clamped = Vec::new();
    let mut bounds_clamped = Vec::new();
    let mut lower = [0.0; JOINT_COUNT];
    let mut upper = [0.0; JOINT_COUNT];
    for i in 0..JOINT_COUNT {
        let (lo, hi) = (healthy.lower[i], healthy.upper[i]);
        let q = q_m[i].clamp(lo, hi);
        if q != q_m[i] {
            posture_clamped.push(i);
        }
        let wi = w.weights[i];
        // Convex-combination form of the shrunk bounds: reduces exactly to
        // the healthy limits at w = 0 and to q -/+ zeta at w = 1.
        let mut l = (1.0 - wi) * lo + wi * (q - zeta);
        let mut u = (1.0 - wi) * hi + wi * (q + zeta);
        if l < lo || u > hi {
            bounds_clamped.push(i);
            l = l.max(lo);
            u = u.min(hi);
        }
        lower[i] = l;
        upper[i] = u;
    }
    if !posture_clamped.is_empty() {
        warn!(
            "measured posture outside healthy range at joints {:?}; clamped",
            posture_clamped.iter().map(|&i| JOINT_NAMES[i]).collect::<Vec<_>>()
        );
    }
    Ok(ImpairedBounds {
        bounds: RoMBounds::new(JointVector::new(lower)?, JointVector::new(upper)?)?,
        posture_clamped,
        bounds_clamped,
    })
}

/// Measured posture, natural posture and the two weighting parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PostureContext {
    pub q_m: JointVector,
    pub q_n: JointVector,
    pub alpha: f64,
    pub zeta: f64,
}

impl PostureContext {
    pub fn new(q_m: JointVector, q_n: JointVector, alpha: f64, zeta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::Parameter(format!("zeta must be >= 0, got {zeta}")));
        }
        Ok(PostureContext {
            q_m,
            q_n,
            alpha,
            zeta,
        })
    }
}

/// Squared deviation of the functioning joints from the natural posture,
/// each joint weighted by its remaining mobility.
pub fn compensation_cost(q: &JointVector, q_n: &JointVector, w: &ImpairmentModel) -> f64 {
    (q.as_vector() - q_n.as_vector())
        .component_mul(&w.complement())
        .norm_squared()
}

pub fn objective(q: &JointVector, ctx: &PostureContext, w: &ImpairmentModel) -> f64 {
    let impaired = (q.as_vector() - ctx.q_m.as_vector())
        .component_mul(w.weights())
        .norm_squared();
    impaired + ctx.alpha * compensation_cost(q, &ctx.q_n, w)
}

pub fn objective_gradient(q: &JointVector, ctx: &PostureContext, w: &ImpairmentModel) -> JointVector {
    let wsq = w.weights().component_mul(w.weights());
    let c = w.complement();
    let csq = c.component_mul(&c);
    let g = (q.as_vector() - ctx.q_m.as_vector()).component_mul(&wsq) * 2.0
        + (q.as_vector() - ctx.q_n.as_vector()).component_mul(&csq) * (2.0 * ctx.alpha);
    JointVector::from(g)
}
