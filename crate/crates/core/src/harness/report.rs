//! Serializable session reports. Angles are in degrees, lengths in meters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, JOINT_COUNT};
use crate::metrics::{compare_conditions, ComparisonSummary, MetricReport, ScenarioMetrics};
use crate::optimizer::{ConstraintReport, SolveStatus};
use crate::trajectory::JointTrajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Condition {
    /// Human passing: the passer picks the pose, the user adapts.
    Hp,
    /// Robot passing: the pose comes from the posture optimization.
    Rp,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::Hp => "HP",
            Condition::Rp => "RP",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub bounds_deg: [f64; JOINT_COUNT],
    pub task_space_m: Option<f64>,
    pub equality_m: f64,
    pub safety_m: Option<f64>,
    pub elbow_m: Option<f64>,
    /// Largest residual in solver units (radians and meters).
    pub max_violation: f64,
}

impl From<&ConstraintReport> for ResidualReport {
    fn from(r: &ConstraintReport) -> Self {
        ResidualReport {
            bounds_deg: r.bounds.map(f64::to_degrees),
            task_space_m: r.task_space,
            equality_m: r.equality,
            safety_m: r.safety,
            elbow_m: r.elbow,
            max_violation: r.max_violation(),
        }
    }
}

/// One commanded task value within a condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub index: usize,
    pub label: String,
    pub p_task_m: f64,
    pub status: SolveStatus,
    pub converged: bool,
    pub q_star_deg: [f64; JOINT_COUNT],
    pub objective: f64,
    pub residuals: ResidualReport,
    pub iterations: usize,
    pub starts_used: usize,
    /// Distance between the reached and the requested object position (HP).
    pub closest_approach_m: Option<f64>,
    pub object_position_m: [f64; 3],
    /// Sampled robot path (RP only).
    pub robot_path_m: Option<Vec<[f64; 3]>>,
    /// Present when the entry was simulated, i.e. its solve converged.
    pub metrics: Option<MetricReport>,
    pub trajectory: Option<TrajectoryReport>,
}

/// Uniformly sampled approach motion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub dt_s: f64,
    pub q_deg: Vec<[f64; JOINT_COUNT]>,
}

impl TrajectoryReport {
    pub fn from_trajectory(traj: &JointTrajectory) -> Self {
        TrajectoryReport {
            dt_s: traj.dt(),
            q_deg: traj.samples().iter().map(|q| q.to_degrees()).collect(),
        }
    }

    pub fn to_trajectory(&self) -> Result<JointTrajectory> {
        let samples = self.q_deg.iter().map(|r| JointVector::from_degrees(*r)).collect::<Result<Vec<_>>>()?;
        JointTrajectory::new(self.dt_s, samples)
    }
}

impl EntryReport {
    pub fn q_star(&self) -> Result<JointVector> {
        JointVector::from_degrees(self.q_star_deg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRun {
    pub condition: Condition,
    pub entries: Vec<EntryReport>,
}

impl ConditionRun {
    /// Metrics of the simulated entries, labelled for comparison.
    pub fn scenario_metrics(&self) -> Vec<ScenarioMetrics> {
        self.entries
            .iter()
            .filter_map(|e| {
                e.metrics.map(|metrics| ScenarioMetrics {
                    scenario: e.label.clone(),
                    metrics,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub scenario: String,
    pub seed: u64,
    pub runs: Vec<ConditionRun>,
    /// RP relative to HP, over the entries simulated in both.
    pub comparison: Option<ComparisonSummary>,
}

impl SessionReport {
    pub fn run(&self, condition: Condition) -> Option<&ConditionRun> {
        self.runs.iter().find(|r| r.condition == condition)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Compares `b` against `a` on the entries simulated in both.
pub fn compare_runs(a: &ConditionRun, b: &ConditionRun) -> Result<ComparisonSummary> {
    let (ma, mb) = (a.scenario_metrics(), b.scenario_metrics());
    let shared = |m: &[ScenarioMetrics], other: &[ScenarioMetrics]| -> Vec<ScenarioMetrics> {
        m.iter()
            .filter(|x| other.iter().any(|y| y.scenario == x.scenario))
            .cloned()
            .collect()
    };
    let (sa, sb) = (shared(&ma, &mb), shared(&mb, &ma));
    if sa.len() < ma.len().max(mb.len()) {
        log::warn!(
            "comparing {} of {} {} and {} {} entries; the rest were not simulated in both",
            sa.len(),
            ma.len(),
            a.condition,
            mb.len(),
            b.condition
        );
    }
    compare_conditions(&sa, &sb)
}
