//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use handover_core::harness::{load_scenario, Scenario};
use handover_core::kinematics::{
    build_model, object_pose, scale_from_anthropometry, BodyDimensions, JointVector, KinematicModel, RatioTable,
    RigidTransform,
};
use handover_core::mobility::{impaired_bounds, ImpairmentModel, PostureContext, RoMBounds};
use handover_core::optimizer::{Axis, PostureSetup, TaskConstraints, TaskSpace};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.scn"))
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).expect("bundled scenario loads")
}

// ---------------------------------------------------------------------------
// Transform-chain oracle: plain 4x4 arrays, one elementary transform at a
// time, table values written out literally.

pub type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn ident() -> M4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn rot_z(t: f64) -> M4 {
    let mut m = ident();
    m[0][0] = t.cos();
    m[0][1] = -t.sin();
    m[1][0] = t.sin();
    m[1][1] = t.cos();
    m
}

fn rot_x(t: f64) -> M4 {
    let mut m = ident();
    m[1][1] = t.cos();
    m[1][2] = -t.sin();
    m[2][1] = t.sin();
    m[2][2] = t.cos();
    m
}

fn trans(x: f64, y: f64, z: f64) -> M4 {
    let mut m = ident();
    m[0][3] = x;
    m[1][3] = y;
    m[2][3] = z;
    m
}

/// Frames 0..=8 of the chain for segment vectors `s`, `h`, `r`.
pub fn oracle_frames(s: [f64; 3], h: [f64; 3], r: [f64; 3], q: [f64; 8]) -> Vec<M4> {
    // (theta offset, a, alpha, d) per joint.
    let table = [
        (0.0, s[2], -FRAC_PI_2, -s[1]),
        (0.0, 0.0, FRAC_PI_2, -s[0]),
        (FRAC_PI_2, 0.0, FRAC_PI_2, 0.0),
        (-FRAC_PI_2, -h[0], FRAC_PI_2, -h[2]),
        (PI, 0.0, FRAC_PI_2, -h[1]),
        (FRAC_PI_2, -r[1], FRAC_PI_2, -r[2]),
        (FRAC_PI_2, 0.0, FRAC_PI_2, -r[0]),
        (0.0, 0.0, 0.0, 0.0),
    ];
    // Pelvis frame: frame-0 x up, y forward, z to the left.
    let base: M4 = [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut frames = vec![base];
    let mut t = base;
    for (i, (off, a, alpha, d)) in table.iter().enumerate() {
        let link = mul(&mul(&mul(&rot_z(q[i] + off), &trans(0.0, 0.0, *d)), &trans(*a, 0.0, 0.0)), &rot_x(*alpha));
        t = mul(&t, &link);
        frames.push(t);
    }
    frames
}

pub fn oracle_position(m: &M4) -> Vector3<f64> {
    Vector3::new(m[0][3], m[1][3], m[2][3])
}

pub fn oracle_point(m: &M4, p: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
        m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
        m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
    )
}

pub fn random_dims(rng: &mut impl Rng) -> BodyDimensions {
    let mut seg = |long: f64| Vector3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.2..0.2), rng.random_range(0.0..long));
    let (s, h, r) = (seg(0.6), seg(0.4), seg(0.35));
    BodyDimensions::new(s, h, r).unwrap()
}

pub fn random_q(rng: &mut impl Rng) -> JointVector {
    JointVector::new(std::array::from_fn(|_| rng.random_range(-PI..PI))).unwrap()
}

// ---------------------------------------------------------------------------
// Owned posture problem for solver tests.

pub struct Instance {
    pub model: KinematicModel,
    pub ctx: PostureContext,
    pub weights: ImpairmentModel,
    pub healthy: RoMBounds,
    pub grasp: RigidTransform,
    pub task: TaskConstraints,
}

impl Instance {
    pub fn setup(&self) -> PostureSetup<'_> {
        PostureSetup {
            model: &self.model,
            ctx: &self.ctx,
            weights: &self.weights,
            healthy: &self.healthy,
            grasp_offset: &self.grasp,
        }
    }

    pub fn bounds(&self) -> RoMBounds {
        impaired_bounds(&self.healthy, &self.weights, &self.ctx.q_m, self.ctx.zeta).unwrap().bounds
    }

    pub fn object(&self, q: &JointVector) -> Vector3<f64> {
        object_pose(&self.model, q, &self.grasp).translation
    }
}

pub fn from_scenario(s: &Scenario, p_task: f64) -> Instance {
    Instance {
        model: s.model(),
        ctx: s.context(),
        weights: s.impairment,
        healthy: s.subject.healthy,
        grasp: s.grasp_offset,
        task: s.task_constraints(p_task).unwrap(),
    }
}

pub fn default_healthy() -> RoMBounds {
    use handover_core::harness::{DEFAULT_ROM_LOWER_DEG, DEFAULT_ROM_UPPER_DEG};
    RoMBounds::new(
        JointVector::from_degrees(DEFAULT_ROM_LOWER_DEG).unwrap(),
        JointVector::from_degrees(DEFAULT_ROM_UPPER_DEG).unwrap(),
    )
    .unwrap()
}

fn uniform_in(rng: &mut impl Rng, b: &RoMBounds) -> JointVector {
    JointVector::new(std::array::from_fn(|i| {
        let (lo, hi) = (b.lower[i], b.upper[i]);
        if lo < hi {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    }))
    .unwrap()
}

/// Random instance that is feasible by construction: a witness posture is
/// drawn inside the impaired bounds and every constraint is placed so that
/// the witness satisfies it.
pub fn random_feasible_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let height = rng.random_range(1.5..1.95);
    let model = build_model(scale_from_anthropometry(height, &RatioTable::default()).unwrap()).unwrap();
    let healthy = default_healthy();
    let q_n = JointVector::from_degrees([0.0, 0.0, 0.0, 0.0, 90.0, 0.0, 0.0, 0.0]).unwrap();

    let weights = ImpairmentModel::new(std::array::from_fn(|i| match rng.random_range(0..4) {
        _ if i >= 6 && seed.is_multiple_of(2) => 1.0,
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..1.0),
    }))
    .unwrap();
    // Measured posture: natural posture perturbed, kept inside the healthy range.
    let q_m = healthy.clamp(&JointVector::from(
        q_n.as_vector() + nalgebra::SVector::<f64, 8>::from_fn(|_, _| rng.random_range(-0.4..0.4)),
    ));
    let alpha = rng.random_range(0.02..1.0);
    let zeta = rng.random_range(1.0f64..10.0).to_radians();
    let ctx = PostureContext::new(q_m, q_n, alpha, zeta).unwrap();
    let grasp = RigidTransform::from_translation(Vector3::new(-0.08, 0.0, 0.0));

    let bounds = impaired_bounds(&healthy, &weights, &q_m, zeta).unwrap().bounds;
    let witness = uniform_in(&mut rng, &bounds);
    let obj = object_pose(&model, &witness, &grasp).translation;
    let elbow = model.elbow_position(&witness);

    let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let center = obj + dir.normalize() * rng.random_range(0.0..0.6);
    let space = TaskSpace::sphere(center, 0.85).unwrap();
    let axis = [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)];
    let d_obj = handover_core::kinematics::horizontal_distance(&obj, &Vector3::zeros());
    let d_elb = handover_core::kinematics::horizontal_distance(&elbow, &Vector3::zeros());
    let task = TaskConstraints::new(
        space,
        axis,
        obj[axis.index()],
        rng.random_range(0.0..1.0) * d_obj.min(0.2),
        rng.random_range(0.0..1.0) * d_elb.min(0.25),
    )
    .unwrap();
    Instance {
        model,
        ctx,
        weights,
        healthy,
        grasp,
        task,
    }
}
