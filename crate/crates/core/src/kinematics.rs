//! Trunk and arm kinematic chain of the prosthesis user.
//!
//! The chain has eight revolute joints: spine flexion, three shoulder
//! rotations, elbow flexion, forearm pronation and two wrist rotations. Frames
//! follow the standard (distal) Denavit-Hartenberg convention. The world frame
//! sits at the pelvis with +z vertical and the user facing +x; lateral offsets
//! to the user's right are negative y.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Index, Mul};

use nalgebra::{Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of joints in the chain.
pub const JOINT_COUNT: usize = 8;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "spine_flexion",
    "shoulder_abduction",
    "shoulder_flexion",
    "shoulder_rotation",
    "elbow_flexion",
    "forearm_pronation",
    "wrist_flexion",
    "wrist_deviation",
];

/// Zero-based indices of the two wrist joints.
pub const WRIST_JOINTS: [usize; 2] = [6, 7];

pub type JointArray = SVector<f64, JOINT_COUNT>;

/// Joint angles in radians, ordered as [`JOINT_NAMES`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointVector(JointArray);

impl JointVector {
    pub fn new(values: [f64; JOINT_COUNT]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidJointVector(format!(
                "joint {} ({}) is not finite",
                i + 1,
                JOINT_NAMES[i]
            )));
        }
        Ok(JointVector(JointArray::from(values)))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let array: [f64; JOINT_COUNT] = values.try_into().map_err(|_| {
            Error::InvalidJointVector(format!(
                "expected {JOINT_COUNT} joint values, got {}",
                values.len()
            ))
        })?;
        Self::new(array)
    }

    pub fn from_degrees(values: [f64; JOINT_COUNT]) -> Result<Self> {
        Self::new(values.map(f64::to_radians))
    }

    pub fn zeros() -> Self {
        JointVector(JointArray::zeros())
    }

    pub fn as_vector(&self) -> &JointArray {
        &self.0
    }

    pub fn to_array(&self) -> [f64; JOINT_COUNT] {
        self.0.into()
    }

    pub fn to_degrees(&self) -> [f64; JOINT_COUNT] {
        self.to_array().map(f64::to_degrees)
    }

    /// Copy with joint `index` (zero-based) replaced.
    pub fn with_joint(mut self, index: usize, value: f64) -> Self {
        self.0[index] = value;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

impl From<JointArray> for JointVector {
    fn from(v: JointArray) -> Self {
        JointVector(v)
    }
}

impl Index<usize> for JointVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

/// Rotation plus translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    const ORTHONORMAL_TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = RigidTransform {
            rotation,
            translation,
        };
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::Parameter("transform has non-finite entries".into()));
        }
        if !t.is_proper(Self::ORTHONORMAL_TOL) {
            return Err(Error::Parameter(
                "rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation built from roll, pitch and yaw (radians, applied about fixed
    /// x, y, z in that order).
    pub fn from_rpy_translation(rpy: [f64; 3], translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        RigidTransform {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Standard DH link transform `Rz(theta) Tz(d) Tx(a) Rx(alpha)`.
    pub fn denavit_hartenberg(theta: f64, a: f64, alpha: f64, d: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = alpha.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
            translation: Vector3::new(a * ct, a * st, d),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Checks orthonormality and a positive determinant within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        (gram - Matrix3::identity()).amax() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

/// Segment vectors in meters. The `z` component of each segment is its long
/// axis; `x` and `y` are offsets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyDimensions {
    pub spine: Vector3<f64>,
    pub humerus: Vector3<f64>,
    pub radius: Vector3<f64>,
}

impl BodyDimensions {
    pub fn new(spine: Vector3<f64>, humerus: Vector3<f64>, radius: Vector3<f64>) -> Result<Self> {
        let dims = BodyDimensions {
            spine,
            humerus,
            radius,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn zeros() -> Self {
        BodyDimensions {
            spine: Vector3::zeros(),
            humerus: Vector3::zeros(),
            radius: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.segments() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidDimensions(format!("{name} has non-finite components")));
            }
            if v.z < 0.0 {
                return Err(Error::InvalidDimensions(format!(
                    "{name} long-axis length {} is negative",
                    v.z
                )));
            }
        }
        Ok(())
    }

    /// Long-axis lengths of spine, humerus and radius.
    pub fn dominant_lengths(&self) -> [f64; 3] {
        [self.spine.z, self.humerus.z, self.radius.z]
    }

    /// Sum of the norms of all segment vectors; an upper bound on how far any
    /// frame can be from the pelvis.
    pub fn total_length(&self) -> f64 {
        self.segments().iter().map(|(_, v)| v.abs().sum()).sum()
    }

    fn segments(&self) -> [(&'static str, Vector3<f64>); 3] {
        [
            ("spine", self.spine),
            ("humerus", self.humerus),
            ("radius", self.radius),
        ]
    }
}

/// Segment lengths as fractions of body height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioTable {
    pub spine: [f64; 3],
    pub humerus: [f64; 3],
    pub radius: [f64; 3],
}

impl Default for RatioTable {
    /// Pelvis-to-shoulder height and half shoulder breadth for the spine;
    /// upper arm and forearm long axes. Offsets not listed are zero.
    fn default() -> Self {
        RatioTable {
            spine: [0.0, 0.13, 0.288],
            humerus: [0.0, 0.0, 0.186],
            radius: [0.0, 0.0, 0.146],
        }
    }
}

pub fn scale_from_anthropometry(height: f64, ratios: &RatioTable) -> Result<BodyDimensions> {
    if !(height > 0.5 && height < 2.5) {
        return Err(Error::Anthropometry(format!(
            "height {height} m outside (0.5, 2.5)"
        )));
    }
    let all = ratios.spine.iter().chain(&ratios.humerus).chain(&ratios.radius);
    if !all.clone().all(|r| r.is_finite()) {
        return Err(Error::Anthropometry("ratio table has non-finite entries".into()));
    }
    let scale = |r: [f64; 3]| Vector3::from(r) * height;
    BodyDimensions::new(scale(ratios.spine), scale(ratios.humerus), scale(ratios.radius))
        .map_err(|e| Error::Anthropometry(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DHRow {
    /// One-based joint number.
    pub joint_index: usize,
    pub theta_offset: f64,
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
}

impl DHRow {
    pub fn transform(&self, q: f64) -> RigidTransform {
        RigidTransform::denavit_hartenberg(q + self.theta_offset, self.a, self.alpha, self.d)
    }
}

/// Immutable chain description: DH rows plus the pelvis-to-frame-0 transform.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicModel {
    dims: BodyDimensions,
    rows: [DHRow; JOINT_COUNT],
    base: RigidTransform,
}

pub fn build_model(dims: BodyDimensions) -> Result<KinematicModel> {
    dims.validate()?;
    let (s, h, r) = (dims.spine, dims.humerus, dims.radius);
    let row = |joint_index, theta_offset, a, alpha, d| DHRow {
        joint_index,
        theta_offset,
        a,
        alpha,
        d,
    };
    let rows = [
        row(1, 0.0, s.z, -FRAC_PI_2, -s.y),
        row(2, 0.0, 0.0, FRAC_PI_2, -s.x),
        row(3, FRAC_PI_2, 0.0, FRAC_PI_2, 0.0),
        row(4, -FRAC_PI_2, -h.x, FRAC_PI_2, -h.z),
        row(5, PI, 0.0, FRAC_PI_2, -h.y),
        row(6, FRAC_PI_2, -r.y, FRAC_PI_2, -r.z),
        row(7, FRAC_PI_2, 0.0, FRAC_PI_2, -r.x),
        row(8, 0.0, 0.0, 0.0, 0.0),
    ];
    // Frame 0: x up along the spine, z along the lateral flexion axis, so
    // positive spine flexion tips the trunk forward.
    let base = RigidTransform {
        rotation: Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0),
        translation: Vector3::zeros(),
    };
    Ok(KinematicModel { dims, rows, base })
}

/// Pelvis-frame poses of the body landmarks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentPoses {
    pub pelvis: RigidTransform,
    pub spine: RigidTransform,
    pub shoulder: RigidTransform,
    pub elbow: RigidTransform,
    pub wrist: RigidTransform,
    pub hand: RigidTransform,
}

impl SegmentPoses {
    pub const LANDMARKS: [&'static str; 6] =
        ["pelvis", "spine", "shoulder", "elbow", "wrist", "hand"];

    pub fn landmarks(&self) -> [(&'static str, &RigidTransform); 6] {
        [
            ("pelvis", &self.pelvis),
            ("spine", &self.spine),
            ("shoulder", &self.shoulder),
            ("elbow", &self.elbow),
            ("wrist", &self.wrist),
            ("hand", &self.hand),
        ]
    }
}

impl KinematicModel {
    pub fn dims(&self) -> &BodyDimensions {
        &self.dims
    }

    pub fn rows(&self) -> &[DHRow; JOINT_COUNT] {
        &self.rows
    }

    pub fn base(&self) -> &RigidTransform {
        &self.base
    }

    /// Frame 0 through frame 8 in the pelvis frame.
    pub fn frames(&self, q: &JointVector) -> [RigidTransform; JOINT_COUNT + 1] {
        let mut frames = [self.base; JOINT_COUNT + 1];
        for (i, row) in self.rows.iter().enumerate() {
            frames[i + 1] = frames[i] * row.transform(q[i]);
        }
        frames
    }

    pub fn hand_pose(&self, q: &JointVector) -> RigidTransform {
        self.frames(q)[JOINT_COUNT]
    }

    /// Elbow position only; frame 4 closes the humerus.
    pub fn elbow_position(&self, q: &JointVector) -> Vector3<f64> {
        let mut t = self.base;
        for (i, row) in self.rows.iter().take(4).enumerate() {
            t = t * row.transform(q[i]);
        }
        t.translation
    }
}

pub fn forward_kinematics(model: &KinematicModel, q: &JointVector) -> SegmentPoses {
    let frames = model.frames(q);
    let first = model.rows[0];
    // Top of the lumbar segment on the midline, before the lateral shoulder offset.
    let spine = model.base
        * RigidTransform::denavit_hartenberg(q[0] + first.theta_offset, first.a, first.alpha, 0.0);
    SegmentPoses {
        pelvis: frames[0],
        spine,
        shoulder: frames[3],
        elbow: frames[4],
        wrist: frames[6],
        hand: frames[8],
    }
}

/// Pose of the handled object: the hand pose composed with the grasp offset.
pub fn object_pose(
    model: &KinematicModel,
    q: &JointVector,
    grasp_offset: &RigidTransform,
) -> RigidTransform {
    model.hand_pose(q) * *grasp_offset
}

/// Distance between the ground-plane projections of two points.
pub fn horizontal_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn subject(height: f64) -> KinematicModel {
        build_model(scale_from_anthropometry(height, &RatioTable::default()).unwrap()).unwrap()
    }

    fn joint_strategy() -> impl Strategy<Value = JointVector> {
        proptest::array::uniform8(-PI..PI).prop_map(|a| JointVector::new(a).unwrap())
    }

    #[test]
    fn axis_five_row_matches_table() {
        let dims = BodyDimensions::new(
            Vector3::new(0.01, 0.2, 0.5),
            Vector3::new(0.02, 0.03, 0.3),
            Vector3::new(0.0, 0.0, 0.25),
        )
        .unwrap();
        let model = build_model(dims).unwrap();
        let row = model.rows()[4];
        assert_eq!(row.joint_index, 5);
        assert_eq!(row.theta_offset, PI);
        assert_eq!(row.a, 0.0);
        assert_eq!(row.alpha, FRAC_PI_2);
        assert_eq!(row.d, -0.03);
    }

    #[test]
    fn zero_dimensions_collapse_to_pelvis() {
        let model = build_model(BodyDimensions::zeros()).unwrap();
        let q = JointVector::new([0.3, -1.0, 0.2, 2.0, 1.1, -0.4, 0.5, 0.1]).unwrap();
        for frame in model.frames(&q) {
            assert_eq!(frame.translation.norm(), 0.0);
        }
        for (_, pose) in forward_kinematics(&model, &q).landmarks() {
            assert_eq!(pose.translation.norm(), 0.0);
        }
    }

    #[test]
    fn rejects_negative_long_axis() {
        let err = BodyDimensions::new(
            Vector3::new(0.0, 0.1, -0.5),
            Vector3::zeros(),
            Vector3::zeros(),
        );
        assert!(matches!(err, Err(Error::InvalidDimensions(_))));
        let mut dims = BodyDimensions::zeros();
        dims.radius.x = f64::NAN;
        assert!(matches!(build_model(dims), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn anthropometric_scaling() {
        let tall = scale_from_anthropometry(1.83, &RatioTable::default()).unwrap();
        let short = scale_from_anthropometry(1.58, &RatioTable::default()).unwrap();
        let lengths = tall.dominant_lengths();
        assert!(lengths.iter().all(|&l| l > 0.0));
        let mut sum = 0.0;
        for l in lengths {
            let next = sum + l;
            assert!(next > sum);
            sum = next;
        }
        assert!(sum < 1.83);
        for (s, t) in short.dominant_lengths().iter().zip(tall.dominant_lengths()) {
            assert!(*s < t);
        }
        assert!(build_model(tall).is_ok());

        let zeros = RatioTable {
            spine: [0.0; 3],
            humerus: [0.0; 3],
            radius: [0.0; 3],
        };
        assert_eq!(scale_from_anthropometry(1.7, &zeros).unwrap(), BodyDimensions::zeros());
        assert!(matches!(
            scale_from_anthropometry(2.5, &RatioTable::default()),
            Err(Error::Anthropometry(_))
        ));
        assert!(matches!(
            scale_from_anthropometry(0.4, &RatioTable::default()),
            Err(Error::Anthropometry(_))
        ));
    }

    #[test]
    fn wrist_joints_do_not_move_proximal_landmarks() {
        let model = subject(1.83);
        let q = JointVector::new([0.1, -0.3, -0.6, 0.2, 1.2, 0.3, 0.0, 0.0]).unwrap();
        let moved = q.with_joint(6, 0.7).with_joint(7, -0.4);
        let a = forward_kinematics(&model, &q);
        let b = forward_kinematics(&model, &moved);
        assert_eq!(a.elbow.translation, b.elbow.translation);
        assert_eq!(a.shoulder.translation, b.shoulder.translation);
        assert_eq!(a.elbow.rotation, b.elbow.rotation);
    }

    #[test]
    fn natural_posture_geometry() {
        // Arm hanging with the elbow at 90 degrees; the shoulder sits on the
        // right of the pelvis at spine height.
        let model = subject(1.83);
        let q_n = JointVector::from_degrees([0.0, 0.0, 0.0, 0.0, 90.0, 0.0, 0.0, 0.0]).unwrap();
        let poses = forward_kinematics(&model, &q_n);
        let dims = model.dims();
        assert_abs_diff_eq!(
            poses.shoulder.translation,
            Vector3::new(0.0, -dims.spine.y, dims.spine.z),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            poses.elbow.translation,
            Vector3::new(0.0, -dims.spine.y, dims.spine.z - dims.humerus.z),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            (poses.wrist.translation - poses.elbow.translation).norm(),
            dims.radius.z,
            epsilon = 1e-12
        );
    }

    #[test]
    fn identity_grasp_offset_gives_hand_pose() {
        let model = subject(1.7);
        let q = JointVector::new([0.2, 0.1, -0.5, 0.3, 1.0, 0.2, 0.05, -0.05]).unwrap();
        let hand = forward_kinematics(&model, &q).hand;
        assert_eq!(object_pose(&model, &q, &RigidTransform::identity()), hand);
    }

    #[test]
    fn translated_grasp_offset_follows_hand_x_axis() {
        let model = subject(1.7);
        let q = JointVector::zeros();
        let hand = forward_kinematics(&model, &q).hand;
        let offset = RigidTransform::from_translation(Vector3::new(0.05, 0.0, 0.0));
        let obj = object_pose(&model, &q, &offset);
        let expected = hand.translation + hand.rotation.column(0) * 0.05;
        assert_abs_diff_eq!(obj.translation, expected, epsilon = 1e-12);
        assert_eq!(obj.rotation, hand.rotation);
    }

    #[test]
    fn horizontal_distance_examples() {
        let o = Vector3::zeros();
        assert_eq!(horizontal_distance(&o, &o), 0.0);
        assert_eq!(horizontal_distance(&o, &Vector3::new(0.0, 0.0, 1.0)), 0.0);
        assert_abs_diff_eq!(
            horizontal_distance(&Vector3::new(0.3, 0.4, 7.0), &o),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn joint_vector_rejects_non_finite() {
        assert!(JointVector::new([0.0, 0.0, f64::INFINITY, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(JointVector::from_slice(&[0.0; 7]).is_err());
    }

    #[test]
    fn rigid_transform_rejects_reflection() {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflect, Vector3::zeros()).is_err());
        assert!(RigidTransform::new(Matrix3::identity(), Vector3::new(1.0, 2.0, 3.0)).is_ok());
    }

    proptest! {
        #[test]
        fn rotations_stay_orthonormal(q in joint_strategy()) {
            let model = subject(1.83);
            for frame in model.frames(&q) {
                prop_assert!(frame.is_proper(1e-9));
            }
            for (_, pose) in forward_kinematics(&model, &q).landmarks() {
                prop_assert!(pose.is_proper(1e-9));
            }
        }

        #[test]
        fn shoulder_to_elbow_is_humerus_length(q in joint_strategy(), h in 1.0..2.2f64) {
            let model = subject(h);
            let poses = forward_kinematics(&model, &q);
            let d = (poses.elbow.translation - poses.shoulder.translation).norm();
            prop_assert!((d - model.dims().humerus.z).abs() <= 1e-9);
        }

        #[test]
        fn joints_never_move_proximal_frames(
            q in joint_strategy(),
            joint in 0usize..JOINT_COUNT,
            delta in -1.0..1.0f64,
        ) {
            let model = subject(1.6);
            let moved = q.with_joint(joint, q[joint] + delta);
            let a = model.frames(&q);
            let b = model.frames(&moved);
            // Joint i (one-based) rotates about z_{i-1}; frames 0..i-1 are fixed.
            for k in 0..=joint {
                prop_assert_eq!(a[k], b[k]);
            }
        }

        #[test]
        fn object_position_is_lipschitz(
            q in joint_strategy(),
            dir in proptest::array::uniform8(-1.0..1.0f64),
            step in 1e-6..1e-2f64,
        ) {
            let model = subject(1.75);
            let offset = RigidTransform::from_translation(Vector3::new(-0.08, 0.02, 0.0));
            let dir = JointArray::from(dir);
            prop_assume!(dir.norm() > 1e-3);
            let dq = dir.normalize() * step;
            let moved = JointVector::from(q.as_vector() + dq);
            let a = object_pose(&model, &q, &offset).translation;
            let b = object_pose(&model, &moved, &offset).translation;
            let lipschitz = model.dims().total_length() + offset.translation.norm();
            prop_assert!((a - b).norm() <= lipschitz * dq.norm() + 1e-12);
        }

        #[test]
        fn horizontal_distance_is_pseudometric(
            a in proptest::array::uniform3(-5.0..5.0f64),
            b in proptest::array::uniform3(-5.0..5.0f64),
            c in proptest::array::uniform3(-5.0..5.0f64),
        ) {
            let (a, b, c) = (Vector3::from(a), Vector3::from(b), Vector3::from(c));
            prop_assert_eq!(horizontal_distance(&a, &b), horizontal_distance(&b, &a));
            let flat = Vector3::new(a.x, a.y, c.z);
            prop_assert_eq!(horizontal_distance(&a, &flat), 0.0);
            prop_assert!(
                horizontal_distance(&a, &c)
                    <= horizontal_distance(&a, &b) + horizontal_distance(&b, &c) + 1e-12
            );
        }
    }
}
