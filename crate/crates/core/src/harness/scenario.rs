//! Scenario files: TOML in degrees and meters, validated into radians.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kinematics::{
    build_model, scale_from_anthropometry, JointVector, KinematicModel, RatioTable, RigidTransform,
    JOINT_COUNT,
};
use crate::mobility::{ImpairmentModel, PostureContext, RoMBounds};
use crate::optimizer::{Aabb, Axis, SolverOptions, Sphere, TaskConstraints, TaskSpace};
use crate::parallel::Execution;
use crate::trajectory::Pose;

/// Healthy range of motion used when a scenario gives none (degrees).
pub const DEFAULT_ROM_LOWER_DEG: [f64; JOINT_COUNT] = [-30.0, -150.0, -170.0, -90.0, 0.0, -90.0, -70.0, -30.0];
pub const DEFAULT_ROM_UPPER_DEG: [f64; JOINT_COUNT] = [90.0, 40.0, 50.0, 90.0, 145.0, 90.0, 80.0, 20.0];
/// Elbow flexed 90 degrees, everything else neutral.
pub const DEFAULT_NATURAL_POSTURE_DEG: [f64; JOINT_COUNT] = [0.0, 0.0, 0.0, 0.0, 90.0, 0.0, 0.0, 0.0];

pub const DEFAULT_DT: f64 = 1.0 / 60.0;
const DEFAULT_DURATION: f64 = 3.0;
const DEFAULT_DEGREE: usize = 5;
const DEFAULT_ROBOT_BASE: [f64; 3] = [0.8, 0.0, 0.0];
const DEFAULT_REACH: f64 = 0.85;
const DEFAULT_ROBOT_HOME: [f64; 3] = [0.5, 0.0, 0.3];
const DEFAULT_PASSER_SHOULDER: [f64; 3] = [0.9, 0.0, 0.45];
const DEFAULT_CHEST_RATIO: f64 = 0.72;
const DEFAULT_PELVIS_RATIO: f64 = 0.53;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    seed: Option<u64>,
    subject: RawSubject,
    impairment: Option<RawImpairment>,
    parameters: RawParameters,
    task: RawTask,
    passer: Option<RawPasser>,
    solver: Option<RawSolver>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubject {
    height_m: f64,
    natural_posture_deg: Option<[f64; JOINT_COUNT]>,
    initial_posture_deg: Option<[f64; JOINT_COUNT]>,
    ratios: Option<RatioTable>,
    healthy_rom_deg: Option<RawRom>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRom {
    lower: [f64; JOINT_COUNT],
    upper: [f64; JOINT_COUNT],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpairment {
    weights: [f64; JOINT_COUNT],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    alpha: f64,
    zeta_deg: f64,
    d_safe_th_m: f64,
    d_elbow_th_m: f64,
    dt_s: Option<f64>,
    approach_duration_s: Option<f64>,
    robot_duration_s: Option<f64>,
    bspline_degree: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    equality_axis: Option<Axis>,
    p_task_m: Vec<f64>,
    task_space: Option<RawTaskSpace>,
    grasp_offset: Option<RawGrasp>,
    robot_home_m: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTaskSpace {
    robot_base_m: Option<[f64; 3]>,
    radius_m: Option<f64>,
    box_min_m: Option<[f64; 3]>,
    box_max_m: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrasp {
    translation_m: [f64; 3],
    rpy_deg: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPasser {
    shoulder_m: Option<[f64; 3]>,
    chest_height_ratio: Option<f64>,
    pelvis_height_ratio: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    random_starts: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub height: f64,
    pub ratios: RatioTable,
    pub q_n: JointVector,
    /// Posture at the start of every approach; also the measured posture the
    /// impaired bounds are centered on.
    pub q_start: JointVector,
    pub healthy: RoMBounds,
}

/// Heuristic human passer for the baseline condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Passer {
    /// Only the forward (`x`) coordinate is used; height and lateral offset
    /// come from the subject and the commanded `p_task`.
    pub shoulder: Vector3<f64>,
    pub chest_height_ratio: f64,
    pub pelvis_height_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub subject: Subject,
    pub impairment: ImpairmentModel,
    pub alpha: f64,
    pub zeta: f64,
    pub d_safe_th: f64,
    pub d_elbow_th: f64,
    pub dt: f64,
    pub approach_duration: f64,
    pub robot_duration: f64,
    pub bspline_degree: usize,
    pub equality_axis: Axis,
    pub p_task: Vec<f64>,
    pub task_space: TaskSpace,
    pub grasp_offset: RigidTransform,
    pub robot_home: Pose,
    pub passer: Passer,
    pub random_starts: usize,
}

fn finite_all(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

fn joints_deg(field: &str, values: [f64; JOINT_COUNT]) -> Result<JointVector> {
    JointVector::from_degrees(values).map_err(|e| Error::load(field, e.to_string()))
}

fn point(field: &str, values: [f64; 3]) -> Result<Vector3<f64>> {
    if !finite_all(&values) {
        return Err(Error::load(field, "must be finite"));
    }
    Ok(Vector3::from(values))
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::load(field, format!("must be a finite value >= 0, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::load(field, format!("must be a finite value > 0, got {v}")))
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let deserializer = toml::Deserializer::parse(text).map_err(|e| Error::load("<document>", e.message()))?;
        let raw: RawScenario = serde_path_to_error::deserialize(deserializer).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<document>".to_string() } else { path };
            Error::load(field, e.inner().message())
        })?;
        Self::validate(raw)
    }

    fn validate(raw: RawScenario) -> Result<Self> {
        let subject = Self::subject(raw.subject)?;

        let impairment = match raw.impairment {
            Some(imp) => ImpairmentModel::new(imp.weights).map_err(|e| Error::load("impairment.weights", e.to_string()))?,
            None => {
                log::info!("no impairment block; assuming all joints healthy");
                ImpairmentModel::healthy()
            }
        };

        let p = raw.parameters;
        let alpha = non_negative("parameters.alpha", p.alpha)?;
        let zeta = non_negative("parameters.zeta_deg", p.zeta_deg)?.to_radians();
        let d_safe_th = non_negative("parameters.d_safe_th_m", p.d_safe_th_m)?;
        let d_elbow_th = non_negative("parameters.d_elbow_th_m", p.d_elbow_th_m)?;
        let dt = positive("parameters.dt_s", p.dt_s.unwrap_or(DEFAULT_DT))?;
        let approach_duration = positive(
            "parameters.approach_duration_s",
            p.approach_duration_s.unwrap_or(DEFAULT_DURATION),
        )?;
        let robot_duration = positive("parameters.robot_duration_s", p.robot_duration_s.unwrap_or(DEFAULT_DURATION))?;
        let bspline_degree = p.bspline_degree.unwrap_or(DEFAULT_DEGREE);
        if bspline_degree != 3 && bspline_degree != 5 {
            return Err(Error::load("parameters.bspline_degree", format!("must be 3 or 5, got {bspline_degree}")));
        }

        let t = raw.task;
        let task_space = Self::task_space(t.task_space)?;
        let equality_axis = t.equality_axis.unwrap_or(Axis::Y);
        if t.p_task_m.is_empty() {
            return Err(Error::load("task.p_task_m", "must list at least one value"));
        }
        for (i, &v) in t.p_task_m.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::load(format!("task.p_task_m[{i}]"), "must be finite"));
            }
            // Reuses the constraint constructor's plane check.
            TaskConstraints::new(task_space, equality_axis, v, d_safe_th, d_elbow_th)?;
        }
        let grasp_offset = match t.grasp_offset {
            Some(g) => {
                let rpy = g.rpy_deg.unwrap_or([0.0; 3]);
                if !finite_all(&rpy) {
                    return Err(Error::load("task.grasp_offset.rpy_deg", "must be finite"));
                }
                let translation = point("task.grasp_offset.translation_m", g.translation_m)?;
                RigidTransform::from_rpy_translation(rpy.map(f64::to_radians), translation)
            }
            None => RigidTransform::identity(),
        };
        let robot_home = point("task.robot_home_m", t.robot_home_m.unwrap_or(DEFAULT_ROBOT_HOME))?;
        if !task_space.contains(&robot_home) {
            return Err(Error::load("task.robot_home_m", "robot home position lies outside the task space"));
        }

        let passer = raw.passer.unwrap_or(RawPasser {
            shoulder_m: None,
            chest_height_ratio: None,
            pelvis_height_ratio: None,
        });
        let passer = Passer {
            shoulder: point("passer.shoulder_m", passer.shoulder_m.unwrap_or(DEFAULT_PASSER_SHOULDER))?,
            chest_height_ratio: positive(
                "passer.chest_height_ratio",
                passer.chest_height_ratio.unwrap_or(DEFAULT_CHEST_RATIO),
            )?,
            pelvis_height_ratio: positive(
                "passer.pelvis_height_ratio",
                passer.pelvis_height_ratio.unwrap_or(DEFAULT_PELVIS_RATIO),
            )?,
        };

        let random_starts = raw
            .solver
            .and_then(|s| s.random_starts)
            .unwrap_or(SolverOptions::default().random_starts);

        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            seed: raw.seed.unwrap_or(0),
            subject,
            impairment,
            alpha,
            zeta,
            d_safe_th,
            d_elbow_th,
            dt,
            approach_duration,
            robot_duration,
            bspline_degree,
            equality_axis,
            p_task: t.p_task_m,
            task_space,
            grasp_offset,
            robot_home: Pose::from_position(robot_home),
            passer,
            random_starts,
        })
    }

    fn subject(raw: RawSubject) -> Result<Subject> {
        let ratios = raw.ratios.unwrap_or_default();
        scale_from_anthropometry(raw.height_m, &ratios).map_err(|e| Error::load("subject.height_m", e.to_string()))?;
        let rom = raw.healthy_rom_deg.unwrap_or(RawRom {
            lower: DEFAULT_ROM_LOWER_DEG,
            upper: DEFAULT_ROM_UPPER_DEG,
        });
        let healthy = RoMBounds::new(
            joints_deg("subject.healthy_rom_deg.lower", rom.lower)?,
            joints_deg("subject.healthy_rom_deg.upper", rom.upper)?,
        )
        .map_err(|e| Error::load("subject.healthy_rom_deg", e.to_string()))?;
        let q_n = joints_deg(
            "subject.natural_posture_deg",
            raw.natural_posture_deg.unwrap_or(DEFAULT_NATURAL_POSTURE_DEG),
        )?;
        if !healthy.contains(&q_n) {
            return Err(Error::load("subject.natural_posture_deg", "lies outside the healthy range of motion"));
        }
        let q_start = match raw.initial_posture_deg {
            Some(v) => joints_deg("subject.initial_posture_deg", v)?,
            None => q_n,
        };
        Ok(Subject {
            height: raw.height_m,
            ratios,
            q_n,
            q_start,
            healthy,
        })
    }

    fn task_space(raw: Option<RawTaskSpace>) -> Result<TaskSpace> {
        let raw = raw.unwrap_or(RawTaskSpace {
            robot_base_m: None,
            radius_m: None,
            box_min_m: None,
            box_max_m: None,
        });
        let sphere = Sphere {
            center: point("task.task_space.robot_base_m", raw.robot_base_m.unwrap_or(DEFAULT_ROBOT_BASE))?,
            radius: positive("task.task_space.radius_m", raw.radius_m.unwrap_or(DEFAULT_REACH))?,
        };
        let bounding_box = match (raw.box_min_m, raw.box_max_m) {
            (None, None) => None,
            (Some(min), Some(max)) => Some(Aabb {
                min: point("task.task_space.box_min_m", min)?,
                max: point("task.task_space.box_max_m", max)?,
            }),
            (Some(_), None) => return Err(Error::load("task.task_space.box_max_m", "required with box_min_m")),
            (None, Some(_)) => return Err(Error::load("task.task_space.box_min_m", "required with box_max_m")),
        };
        TaskSpace::new(Some(sphere), bounding_box).map_err(|e| Error::load("task.task_space", e.to_string()))
    }

    pub fn model(&self) -> KinematicModel {
        let dims = scale_from_anthropometry(self.subject.height, &self.subject.ratios)
            .expect("dimensions validated at load");
        build_model(dims).expect("dimensions validated at load")
    }

    pub fn context(&self) -> PostureContext {
        PostureContext::new(self.subject.q_start, self.subject.q_n, self.alpha, self.zeta)
            .expect("parameters validated at load")
    }

    pub fn task_constraints(&self, p_task: f64) -> Result<TaskConstraints> {
        TaskConstraints::new(self.task_space, self.equality_axis, p_task, self.d_safe_th, self.d_elbow_th)
    }

    /// Object position chosen by the heuristic human passer: halfway between
    /// the passer's shoulder and the user's pelvis, at the user's chest
    /// height, at the commanded offset along the equality axis.
    pub fn passer_target(&self, p_task: f64) -> Vector3<f64> {
        let mut target = Vector3::new(
            0.5 * self.passer.shoulder.x,
            0.0,
            (self.passer.chest_height_ratio - self.passer.pelvis_height_ratio) * self.subject.height,
        );
        target[self.equality_axis.index()] = p_task;
        target
    }

    /// Solver options for the `entry`-th task value; each entry draws its
    /// random starts from its own stream.
    pub fn solver_options(&self, entry: usize, execution: Execution) -> SolverOptions {
        SolverOptions {
            random_starts: self.random_starts,
            seed: derive_seed(self.seed, entry as u64),
            execution,
            ..SolverOptions::default()
        }
    }
}

/// SplitMix64 step over the scenario seed and entry index.
fn derive_seed(seed: u64, entry: u64) -> u64 {
    let mut z = seed.wrapping_add(entry.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_toml_str(&text)
}
