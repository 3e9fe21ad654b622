use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    fn distance_to(&self, p: &Vector3<f64>) -> f64 {
        let mut sq = 0.0;
        for a in 0..3 {
            let d = (self.min[a] - p[a]).max(p[a] - self.max[a]).max(0.0);
            sq += d * d;
        }
        sq.sqrt()
    }
}

/// Reachable region of the robot: a sphere around its base, a box, or the
/// intersection of both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskSpace {
    pub sphere: Option<Sphere>,
    pub bounding_box: Option<Aabb>,
}

impl TaskSpace {
    pub fn new(sphere: Option<Sphere>, bounding_box: Option<Aabb>) -> Result<Self> {
        let space = TaskSpace {
            sphere,
            bounding_box,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn sphere(center: Vector3<f64>, radius: f64) -> Result<Self> {
        Self::new(Some(Sphere { center, radius }), None)
    }

    pub fn aabb(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        Self::new(None, Some(Aabb { min, max }))
    }

    fn validate(&self) -> Result<()> {
        if self.sphere.is_none() && self.bounding_box.is_none() {
            return Err(Error::Validation("task space needs a sphere or a box".into()));
        }
        if let Some(s) = &self.sphere {
            if !(s.radius > 0.0 && s.radius.is_finite()) || !s.center.iter().all(|c| c.is_finite()) {
                return Err(Error::Validation(format!(
                    "task-space sphere radius must be positive, got {}",
                    s.radius
                )));
            }
        }
        if let Some(b) = &self.bounding_box {
            if !(0..3).all(|a| b.min[a] < b.max[a]) {
                return Err(Error::Validation("task-space box has zero or negative extent".into()));
            }
        }
        if let (Some(s), Some(b)) = (&self.sphere, &self.bounding_box) {
            if b.distance_to(&s.center) >= s.radius {
                return Err(Error::Validation(
                    "task-space sphere and box do not overlap".into(),
                ));
            }
        }
        Ok(())
    }

    /// Residuals `<= 0` inside: the sphere term first, then `min - p` and
    /// `p - max` per axis for the box.
    pub(crate) fn residuals(&self, p: &Vector3<f64>, out: &mut impl FnMut(f64)) {
        if let Some(s) = &self.sphere {
            out((p - s.center).norm() - s.radius);
        }
        if let Some(b) = &self.bounding_box {
            for a in 0..3 {
                out(b.min[a] - p[a]);
                out(p[a] - b.max[a]);
            }
        }
    }

    pub(crate) fn residual_count(&self) -> usize {
        usize::from(self.sphere.is_some()) + if self.bounding_box.is_some() { 6 } else { 0 }
    }

    /// Largest of the constraint residuals: Euclidean signed distance for the
    /// sphere, max-norm signed distance for the box.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        self.residuals(p, &mut |r| worst = worst.max(r));
        worst
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.signed_distance(p) <= 0.0
    }

    /// Whether the plane `{p[axis] = value}` passes through the region.
    pub fn plane_intersects(&self, axis: Axis, value: f64) -> bool {
        let a = axis.index();
        let others = [(a + 1) % 3, (a + 2) % 3];
        let disk = match &self.sphere {
            Some(s) => {
                let offset = value - s.center[a];
                if offset.abs() >= s.radius {
                    return false;
                }
                Some((s.center, (s.radius * s.radius - offset * offset).sqrt()))
            }
            None => None,
        };
        match (&self.bounding_box, disk) {
            (Some(b), disk) => {
                if value < b.min[a] || value > b.max[a] {
                    return false;
                }
                match disk {
                    None => true,
                    Some((center, r)) => {
                        let sq: f64 = others
                            .iter()
                            .map(|&o| {
                                let d = (b.min[o] - center[o]).max(center[o] - b.max[o]).max(0.0);
                                d * d
                            })
                            .sum();
                        sq.sqrt() < r
                    }
                }
            }
            (None, _) => true,
        }
    }
}

/// Task requirements of one handover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskConstraints {
    pub task_space: TaskSpace,
    pub equality_axis: Axis,
    pub p_task: f64,
    /// Minimum horizontal object-to-pelvis distance.
    pub d_safe_th: f64,
    /// Minimum horizontal elbow-to-pelvis distance.
    pub d_elbow_th: f64,
}

impl TaskConstraints {
    pub fn new(
        task_space: TaskSpace,
        equality_axis: Axis,
        p_task: f64,
        d_safe_th: f64,
        d_elbow_th: f64,
    ) -> Result<Self> {
        for (name, v) in [("d_safe_th", d_safe_th), ("d_elbow_th", d_elbow_th)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !p_task.is_finite() || !task_space.plane_intersects(equality_axis, p_task) {
            return Err(Error::Validation(format!(
                "task plane {:?} = {p_task} m does not intersect the task space",
                equality_axis
            )));
        }
        Ok(TaskConstraints {
            task_space,
            equality_axis,
            p_task,
            d_safe_th,
            d_elbow_th,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_plane_intersection() {
        let space = TaskSpace::sphere(Vector3::new(0.8, 0.0, 0.0), 0.85).unwrap();
        assert!(space.plane_intersects(Axis::Y, -0.45));
        assert!(space.plane_intersects(Axis::Y, 0.84));
        assert!(!space.plane_intersects(Axis::Y, 0.86));
        assert!(!space.plane_intersects(Axis::X, -0.1));
    }

    #[test]
    fn sphere_and_box_intersection() {
        let space = TaskSpace::new(
            Some(Sphere {
                center: Vector3::new(0.0, 0.0, 0.0),
                radius: 1.0,
            }),
            Some(Aabb {
                min: Vector3::new(0.5, -2.0, -2.0),
                max: Vector3::new(2.0, 2.0, 2.0),
            }),
        )
        .unwrap();
        assert!(space.plane_intersects(Axis::Y, 0.0));
        // Disk radius at y = 0.9 is sqrt(0.19) < 0.5: misses the box.
        assert!(!space.plane_intersects(Axis::Y, 0.9));
        assert!(!space.plane_intersects(Axis::X, 0.2));
        assert!(space.plane_intersects(Axis::X, 0.6));
    }

    #[test]
    fn rejects_degenerate_regions() {
        assert!(TaskSpace::sphere(Vector3::zeros(), 0.0).is_err());
        assert!(TaskSpace::aabb(Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0)).is_err());
        assert!(TaskSpace::new(None, None).is_err());
        let far_box = Aabb {
            min: Vector3::new(5.0, 5.0, 5.0),
            max: Vector3::new(6.0, 6.0, 6.0),
        };
        let s = Sphere {
            center: Vector3::zeros(),
            radius: 1.0,
        };
        assert!(TaskSpace::new(Some(s), Some(far_box)).is_err());
    }

    #[test]
    fn boundary_has_zero_signed_distance() {
        let space = TaskSpace::sphere(Vector3::zeros(), 0.5).unwrap();
        assert_eq!(space.signed_distance(&Vector3::new(0.5, 0.0, 0.0)), 0.0);
        let cube = TaskSpace::aabb(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(cube.signed_distance(&Vector3::new(1.0, 0.5, 0.5)), 0.0);
        assert!(cube.signed_distance(&Vector3::new(0.5, 0.5, 0.5)) < 0.0);
    }

    #[test]
    fn task_constraint_validation() {
        let space = TaskSpace::sphere(Vector3::new(0.8, 0.0, 0.0), 0.85).unwrap();
        assert!(TaskConstraints::new(space, Axis::Y, -0.2, 0.2, 0.25).is_ok());
        assert!(TaskConstraints::new(space, Axis::Y, -0.2, -0.1, 0.25).is_err());
        assert!(TaskConstraints::new(space, Axis::Y, 1.2, 0.2, 0.25).is_err());
    }
}
