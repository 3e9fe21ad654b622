//! Robot handover paths (clamped B-splines in Cartesian space) and the
//! simulated user approach (minimum-jerk quintics in joint space).

use nalgebra::{Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, RigidTransform};

/// Position plus orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn from_position(position: Vector3<f64>) -> Self {
        Pose::new(position, UnitQuaternion::identity())
    }

    pub fn from_transform(t: &RigidTransform) -> Self {
        let rotation = Rotation3::from_matrix(&t.rotation);
        Pose::new(t.translation, UnitQuaternion::from_rotation_matrix(&rotation))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose,
}

/// Clamped uniform B-spline from a start pose to a goal pose.
///
/// Control points lie on the start-goal segment at the progress values
/// below; the first and last three coincide with the endpoints, so velocity
/// and acceleration vanish at both ends. Orientation follows the same
/// progress via spherical interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianTrajectory {
    degree: usize,
    start: Pose,
    goal: Pose,
    control_points: Vec<Vector3<f64>>,
    progress: Vec<f64>,
    knots: Vec<f64>,
    duration: f64,
}

fn progress_values(degree: usize) -> Vec<f64> {
    match degree {
        3 => vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        _ => vec![0.0, 0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0, 1.0],
    }
}

/// Two interior knots at thirds, endpoints repeated `degree + 1` times.
fn clamped_knots(degree: usize, control_count: usize) -> Vec<f64> {
    let interior = control_count - degree - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    knots
}

/// de Boor evaluation on the parameter range `[0, 1]`.
fn de_boor<T>(degree: usize, knots: &[f64], control: &[T], u: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = control.len();
    if u >= knots[n] {
        return control[n - 1];
    }
    let u = u.max(knots[degree]);
    // Span index k with knots[k] <= u < knots[k + 1].
    let mut k = degree;
    while k + 1 < n && knots[k + 1] <= u {
        k += 1;
    }
    let mut d: Vec<T> = control[k - degree..=k].to_vec();
    for r in 1..=degree {
        for j in (r..=degree).rev() {
            let i = j + k - degree;
            let denom = knots[i + degree + 1 - r] - knots[i];
            let a = if denom > 0.0 { (u - knots[i]) / denom } else { 0.0 };
            d[j] = d[j - 1] * (1.0 - a) + d[j] * a;
        }
    }
    d[degree]
}

impl CartesianTrajectory {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn control_points(&self) -> &[Vector3<f64>] {
        &self.control_points
    }

    pub fn start(&self) -> &Pose {
        &self.start
    }

    pub fn goal(&self) -> &Pose {
        &self.goal
    }

    /// Pose at time `t`, clamped to `[0, duration]`.
    pub fn evaluate(&self, t: f64) -> Pose {
        let u = (t / self.duration).clamp(0.0, 1.0);
        let position = de_boor(self.degree, &self.knots, &self.control_points, u);
        let s = de_boor(self.degree, &self.knots, &self.progress, u).clamp(0.0, 1.0);
        let orientation = if u >= 1.0 {
            self.goal.orientation
        } else {
            self.start.orientation.slerp(&self.goal.orientation, s)
        };
        Pose::new(position, orientation)
    }
}

/// Plans a clamped B-spline of degree 3 or 5 from `start` to `goal`.
pub fn plan_bspline(start: Pose, goal: Pose, duration: f64, degree: usize) -> Result<CartesianTrajectory> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Parameter(format!("duration must be positive, got {duration}")));
    }
    if degree != 3 && degree != 5 {
        return Err(Error::Parameter(format!("B-spline degree must be 3 or 5, got {degree}")));
    }
    let progress = progress_values(degree);
    let delta = goal.position - start.position;
    let control_points = progress
        .iter()
        .map(|&c| if c >= 1.0 { goal.position } else { start.position + delta * c })
        .collect();
    let knots = clamped_knots(degree, progress.len());
    Ok(CartesianTrajectory {
        degree,
        start,
        goal,
        control_points,
        progress,
        knots,
        duration,
    })
}

/// Number of steps for `duration` at nominal spacing `dt`; the effective
/// spacing is `duration / steps`.
fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Parameter(format!("duration must be positive, got {duration}")));
    }
    Ok(((duration / dt).round() as usize).max(1))
}

/// Samples at uniform times from 0 to the duration inclusive.
pub fn sample_cartesian(traj: &CartesianTrajectory, dt: f64) -> Result<Vec<TimedPose>> {
    let n = step_count(traj.duration, dt)?;
    let step = traj.duration / n as f64;
    Ok((0..=n)
        .map(|k| {
            let t = if k == n { traj.duration } else { k as f64 * step };
            TimedPose {
                t,
                pose: traj.evaluate(t),
            }
        })
        .collect())
}

/// Uniformly sampled joint-space motion.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTrajectory {
    start_time: f64,
    dt: f64,
    samples: Vec<JointVector>,
    resampled: bool,
}

impl JointTrajectory {
    pub fn new(dt: f64, samples: Vec<JointVector>) -> Result<Self> {
        Self::with_start(0.0, dt, samples, false)
    }

    pub(crate) fn with_start(
        start_time: f64,
        dt: f64,
        samples: Vec<JointVector>,
        resampled: bool,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Input(format!("sample spacing must be positive, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::Input(format!(
                "a trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(JointTrajectory {
            start_time,
            dt,
            samples,
            resampled,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn samples(&self) -> &[JointVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    /// Set when an ingested log was interpolated onto a uniform grid.
    pub fn resampled(&self) -> bool {
        self.resampled
    }

    pub fn last(&self) -> &JointVector {
        self.samples.last().expect("trajectories hold at least 2 samples")
    }
}

/// Minimum-jerk time scaling `10 tau^3 - 15 tau^4 + 6 tau^5`.
pub fn min_jerk_progress(tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
}

/// Per-joint minimum-jerk motion from `q_start` to `q_goal`.
pub fn min_jerk_joint_motion(
    q_start: &JointVector,
    q_goal: &JointVector,
    duration: f64,
    dt: f64,
) -> Result<JointTrajectory> {
    let n = step_count(duration, dt)?;
    let delta = q_goal.as_vector() - q_start.as_vector();
    let samples = (0..=n)
        .map(|k| {
            if k == n {
                *q_goal
            } else {
                let s = min_jerk_progress(k as f64 / n as f64);
                JointVector::from(q_start.as_vector() + delta * s)
            }
        })
        .collect();
    JointTrajectory::with_start(0.0, duration / n as f64, samples, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose(p: [f64; 3], rpy: [f64; 3]) -> Pose {
        Pose::new(
            Vector3::from(p),
            UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
        )
    }

    #[test]
    fn rejects_bad_degree_and_duration() {
        let p = Pose::from_position(Vector3::zeros());
        assert!(plan_bspline(p, p, 1.0, 4).is_err());
        assert!(plan_bspline(p, p, 0.0, 5).is_err());
        assert!(plan_bspline(p, p, f64::NAN, 3).is_err());
    }

    #[test]
    fn knot_layout() {
        assert_eq!(clamped_knots(3, 6), vec![0., 0., 0., 0., 1. / 3., 2. / 3., 1., 1., 1., 1.]);
        assert_eq!(clamped_knots(5, 8).len(), 14);
    }

    #[test]
    fn constant_when_start_equals_goal() {
        let p = pose([0.4, -0.1, 0.3], [0.1, 0.2, 0.3]);
        let traj = plan_bspline(p, p, 3.0, 5).unwrap();
        for s in sample_cartesian(&traj, 0.1).unwrap() {
            assert!((s.pose.position - p.position).amax() < 1e-15);
            assert!(s.pose.orientation.angle_to(&p.orientation) < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_exact() {
        let (a, b) = (pose([0.1, 0.2, 0.3], [0.0, 0.0, 0.0]), pose([0.7, -0.4, 0.1], [0.5, -0.2, 1.0]));
        for degree in [3, 5] {
            let traj = plan_bspline(a, b, 2.5, degree).unwrap();
            assert_eq!(traj.evaluate(0.0).position, a.position);
            assert_eq!(traj.evaluate(2.5).position, b.position);
            assert_eq!(traj.evaluate(2.5).orientation, b.orientation);
            assert!(traj.evaluate(0.0).orientation.angle_to(&a.orientation) < 1e-12);
        }
    }

    #[test]
    fn duration_step_gives_two_samples() {
        let traj = plan_bspline(pose([0.; 3], [0.; 3]), pose([1., 0., 0.], [0.; 3]), 3.0, 5).unwrap();
        let s = sample_cartesian(&traj, 3.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].t, 3.0);
        assert!(sample_cartesian(&traj, 0.0).is_err());
    }

    #[test]
    fn midpoint_of_min_jerk() {
        let a = JointVector::new([0.1, -0.2, 0.3, 0.0, 1.5, 0.2, -0.1, 0.05]).unwrap();
        let b = JointVector::new([-0.3, 0.4, 0.1, 0.2, 0.9, -0.4, 0.3, -0.2]).unwrap();
        let traj = min_jerk_joint_motion(&a, &b, 2.0, 0.01).unwrap();
        let mid = traj.samples()[100];
        let expected = (a.as_vector() + b.as_vector()) * 0.5;
        assert!((mid.as_vector() - expected).amax() < 1e-15);
        assert_eq!(traj.samples()[0], a);
        assert_eq!(*traj.last(), b);
    }

    #[test]
    fn constant_min_jerk() {
        let a = JointVector::new([0.3; 8]).unwrap();
        let traj = min_jerk_joint_motion(&a, &a, 1.0, 0.1).unwrap();
        assert!(traj.samples().iter().all(|q| *q == a));
    }

    fn position() -> impl Strategy<Value = [f64; 3]> {
        [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
    }

    proptest! {
        #[test]
        fn boundary_velocity_vanishes(a in position(), b in position(), degree in prop::sample::select(vec![3usize, 5])) {
            let traj = plan_bspline(pose(a, [0.; 3]), pose(b, [0.; 3]), 3.0, degree).unwrap();
            let h = 1e-6;
            let v0 = (traj.evaluate(h).position - traj.evaluate(0.0).position) / h;
            let v1 = (traj.evaluate(3.0).position - traj.evaluate(3.0 - h).position) / h;
            prop_assert!(v0.norm() <= 1e-9 && v1.norm() <= 1e-9, "{} {}", v0.norm(), v1.norm());
        }

        #[test]
        fn continuous_at_interior_knots(a in position(), b in position(), degree in prop::sample::select(vec![3usize, 5])) {
            let traj = plan_bspline(pose(a, [0.; 3]), pose(b, [0.; 3]), 1.0, degree).unwrap();
            for knot in [1.0 / 3.0, 2.0 / 3.0] {
                let eps = 1e-10;
                let left = traj.evaluate(knot - eps).position;
                let right = traj.evaluate(knot + eps).position;
                let at = traj.evaluate(knot).position;
                prop_assert!((left - at).amax() <= 1e-9 && (right - at).amax() <= 1e-9);
            }
        }

        #[test]
        fn chord_length_bounds_displacement(a in position(), b in position(), dt in 0.01..0.5f64) {
            let traj = plan_bspline(pose(a, [0.; 3]), pose(b, [0.; 3]), 3.0, 5).unwrap();
            let s = sample_cartesian(&traj, dt).unwrap();
            let chords: f64 = s.windows(2).map(|w| (w[1].pose.position - w[0].pose.position).norm()).sum();
            prop_assert!(chords >= (Vector3::from(b) - Vector3::from(a)).norm() - 1e-12);
        }

        #[test]
        fn refinement_preserves_shared_samples(a in position(), b in position(), n in 2usize..50) {
            let traj = plan_bspline(pose(a, [0.; 3]), pose(b, [0.; 3]), 3.0, 5).unwrap();
            let coarse = sample_cartesian(&traj, 3.0 / n as f64).unwrap();
            let fine = sample_cartesian(&traj, 1.5 / n as f64).unwrap();
            for (k, c) in coarse.iter().enumerate() {
                prop_assert!((fine[2 * k].pose.position - c.pose.position).amax() <= 1e-12);
            }
        }

        #[test]
        fn min_jerk_is_monotone(start in prop::array::uniform8(-2.0..2.0f64), goal in prop::array::uniform8(-2.0..2.0f64)) {
            let a = JointVector::new(start).unwrap();
            let b = JointVector::new(goal).unwrap();
            let traj = min_jerk_joint_motion(&a, &b, 1.0, 0.01).unwrap();
            for i in 0..8 {
                let sign = (goal[i] - start[i]).signum();
                for w in traj.samples().windows(2) {
                    prop_assert!(sign * (w[1][i] - w[0][i]) >= -1e-15);
                }
                let (lo, hi) = (start[i].min(goal[i]), start[i].max(goal[i]));
                prop_assert!(traj.samples().iter().all(|q| q[i] >= lo - 1e-15 && q[i] <= hi + 1e-15));
            }
        }
    }
}
