//! Session metrics: task duration, functioning-joint usage, interaction
//! cost, jerk cost, and blocked-joint excursion, plus condition comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, JOINT_COUNT};
use crate::mobility::{compensation_cost, ImpairmentModel};
use crate::trajectory::JointTrajectory;

/// Joint speed (degrees per second, Euclidean over all joints) above which
/// a logged motion counts as started.
pub const MOTION_ONSET_DEG_PER_S: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Task duration (s).
    pub t_f: f64,
    /// Mean compensation cost over the samples.
    pub psi_bar: f64,
    /// Compensation cost at the final (interaction) posture.
    pub psi_interaction: f64,
    /// Jerk cost (rad^2/s^5).
    pub jerk: f64,
    /// Largest blocked-joint deviation from the reference (degrees).
    pub wrist_excursion_max: f64,
    pub samples: usize,
}

/// Mean of the compensation cost over `samples`.
pub fn mean_compensation_cost(samples: &[JointVector], q_n: &JointVector, w: &ImpairmentModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("cannot average over an empty trajectory".into()));
    }
    let total: f64 = samples.iter().map(|q| compensation_cost(q, q_n, w)).sum();
    Ok(total / samples.len() as f64)
}

/// Compensation cost of the posture held at the handover.
pub fn interaction_cost(q_final: &JointVector, q_n: &JointVector, w: &ImpairmentModel) -> f64 {
    compensation_cost(q_final, q_n, w)
}

/// Second difference at every sample, unscaled: central in the interior,
/// second-order one-sided at both ends.
fn second_differences(q: &[JointVector]) -> Vec<[f64; JOINT_COUNT]> {
    let k = q.len();
    (0..k)
        .map(|i| {
            std::array::from_fn(|j| match i {
                0 => 2.0 * q[0][j] - 5.0 * q[1][j] + 4.0 * q[2][j] - q[3][j],
                _ if i == k - 1 => {
                    2.0 * q[k - 1][j] - 5.0 * q[k - 2][j] + 4.0 * q[k - 3][j] - q[k - 4][j]
                }
                _ => q[i + 1][j] - 2.0 * q[i][j] + q[i - 1][j],
            })
        })
        .collect()
}

/// `dt * sum_k |jerk[k]|^2`, with jerk the central difference of the
/// numerically differentiated acceleration (one-sided at the ends).
pub fn jerk_cost(traj: &JointTrajectory) -> Result<f64> {
    let q = traj.samples();
    let k = q.len();
    if k < 4 {
        return Err(Error::Input(format!("jerk cost needs at least 4 samples, got {k}")));
    }
    let a = second_differences(q);
    let mut sum = 0.0;
    for i in 0..k {
        #[allow(clippy::needless_range_loop)]
        for j in 0..JOINT_COUNT {
            let jerk = match i {
                0 => (-3.0 * a[0][j] + 4.0 * a[1][j] - a[2][j]) / 2.0,
                _ if i == k - 1 => (3.0 * a[k - 1][j] - 4.0 * a[k - 2][j] + a[k - 3][j]) / 2.0,
                _ => (a[i + 1][j] - a[i - 1][j]) / 2.0,
            };
            sum += jerk * jerk;
        }
    }
    Ok(sum / traj.dt().powi(5))
}

/// Largest max-abs deviation of the `blocked` joints from `q_ref` over all
/// samples, in degrees.
pub fn wrist_excursion(samples: &[JointVector], q_ref: &JointVector, blocked: &[usize]) -> Result<f64> {
    if blocked.is_empty() {
        return Err(Error::Input("wrist excursion needs at least one blocked joint".into()));
    }
    if let Some(&bad) = blocked.iter().find(|&&i| i >= JOINT_COUNT) {
        return Err(Error::Input(format!("joint index {bad} out of range")));
    }
    let worst = samples
        .iter()
        .flat_map(|q| blocked.iter().map(move |&i| (q[i] - q_ref[i]).abs()))
        .fold(0.0, f64::max);
    Ok(worst.to_degrees())
}

/// Time from the first sample whose joint speed exceeds the onset threshold
/// to the last sample; zero if the motion never starts.
pub fn motion_duration(traj: &JointTrajectory) -> f64 {
    let q = traj.samples();
    let threshold = MOTION_ONSET_DEG_PER_S.to_radians() * traj.dt();
    q.windows(2)
        .position(|w| (w[1].as_vector() - w[0].as_vector()).norm() > threshold)
        .map_or(0.0, |k| (q.len() - 1 - k) as f64 * traj.dt())
}

/// All metrics of one trajectory. `t_f` overrides the duration measured by
/// motion onset (simulated sessions use the configured approach time).
/// With no blocked joints the excursion is reported as zero.
pub fn evaluate(
    traj: &JointTrajectory,
    q_n: &JointVector,
    w: &ImpairmentModel,
    wrist_ref: &JointVector,
    t_f: Option<f64>,
) -> Result<MetricReport> {
    let blocked = w.blocked_indices();
    let wrist_excursion_max = if blocked.is_empty() {
        0.0
    } else {
        wrist_excursion(traj.samples(), wrist_ref, &blocked)?
    };
    Ok(MetricReport {
        t_f: t_f.unwrap_or_else(|| motion_duration(traj)),
        psi_bar: mean_compensation_cost(traj.samples(), q_n, w)?,
        psi_interaction: interaction_cost(traj.last(), q_n, w),
        jerk: jerk_cost(traj)?,
        wrist_excursion_max,
        samples: traj.len(),
    })
}

/// Metrics labelled with the scenario they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub scenario: String,
    pub metrics: MetricReport,
}

/// Percent change `100 (b - a) / a` per metric; `None` where `a = 0` and
/// `b != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricChanges {
    pub t_f: Option<f64>,
    pub psi_bar: Option<f64>,
    pub psi_interaction: Option<f64>,
    pub jerk: Option<f64>,
    pub wrist_excursion_max: Option<f64>,
}

pub fn percent_change(a: f64, b: f64) -> Option<f64> {
    if a == b {
        Some(0.0)
    } else if a == 0.0 {
        None
    } else {
        Some(100.0 * (b - a) / a)
    }
}

impl MetricChanges {
    fn between(a: &MetricReport, b: &MetricReport) -> Self {
        MetricChanges {
            t_f: percent_change(a.t_f, b.t_f),
            psi_bar: percent_change(a.psi_bar, b.psi_bar),
            psi_interaction: percent_change(a.psi_interaction, b.psi_interaction),
            jerk: percent_change(a.jerk, b.jerk),
            wrist_excursion_max: percent_change(a.wrist_excursion_max, b.wrist_excursion_max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub scenario: String,
    pub a: MetricReport,
    pub b: MetricReport,
    pub change: MetricChanges,
}

/// Condition B relative to condition A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    /// Mean over the scenarios where the change is defined; `None` if it is
    /// undefined everywhere.
    pub mean_change: MetricChanges,
    pub scenarios: Vec<ScenarioComparison>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

fn index_by_scenario<'a>(side: &str, reports: &'a [ScenarioMetrics]) -> Result<BTreeMap<&'a str, &'a MetricReport>> {
    let mut map = BTreeMap::new();
    for r in reports {
        if map.insert(r.scenario.as_str(), &r.metrics).is_some() {
            return Err(Error::Input(format!("duplicate scenario `{}` in {side}", r.scenario)));
        }
    }
    Ok(map)
}

/// Pairs reports by scenario label (in `a`'s order) and computes percent
/// changes of `b` against `a`.
pub fn compare_conditions(a: &[ScenarioMetrics], b: &[ScenarioMetrics]) -> Result<ComparisonSummary> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("comparison needs at least one scenario per condition".into()));
    }
    let by_a = index_by_scenario("condition A", a)?;
    let by_b = index_by_scenario("condition B", b)?;
    if by_a.keys().ne(by_b.keys()) {
        return Err(Error::Input("conditions cover different scenario sets".into()));
    }
    let scenarios: Vec<ScenarioComparison> = a
        .iter()
        .map(|ra| {
            let rb = by_b[ra.scenario.as_str()];
            ScenarioComparison {
                scenario: ra.scenario.clone(),
                a: ra.metrics,
                b: *rb,
                change: MetricChanges::between(&ra.metrics, rb),
            }
        })
        .collect();
    let mean = |f: fn(&MetricChanges) -> Option<f64>| mean_defined(scenarios.iter().map(|s| f(&s.change)));
    Ok(ComparisonSummary {
        mean_change: MetricChanges {
            t_f: mean(|c| c.t_f),
            psi_bar: mean(|c| c.psi_bar),
            psi_interaction: mean(|c| c.psi_interaction),
            jerk: mean(|c| c.jerk),
            wrist_excursion_max: mean(|c| c.wrist_excursion_max),
        },
        scenarios,
    })
}
