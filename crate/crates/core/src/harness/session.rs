//! Simulated HP and RP sessions over a scenario's task values.

use crate::error::Result;
use crate::kinematics::object_pose;
use crate::metrics;
use crate::optimizer::{resolve_ik_posture, solve_posture, OptimizationResult, PostureSetup, SolveStatus};
use crate::parallel::{map_ordered, Execution};
use crate::trajectory::{min_jerk_joint_motion, plan_bspline, sample_cartesian, Pose};

use super::report::{compare_runs, Condition, ConditionRun, EntryReport, ResidualReport, SessionReport, TrajectoryReport};
use super::scenario::Scenario;

/// Label pairing the same task value across conditions.
pub fn entry_label(scenario: &Scenario, p_task: f64) -> String {
    let axis = match scenario.equality_axis.index() {
        0 => "x",
        1 => "y",
        _ => "z",
    };
    format!("{}/{axis}={p_task}", scenario.name)
}

/// Solves the posture for one task value under `condition`.
pub fn solve_entry(
    scenario: &Scenario,
    condition: Condition,
    entry: usize,
    execution: Execution,
) -> Result<OptimizationResult> {
    let model = scenario.model();
    let ctx = scenario.context();
    let setup = PostureSetup {
        model: &model,
        ctx: &ctx,
        weights: &scenario.impairment,
        healthy: &scenario.subject.healthy,
        grasp_offset: &scenario.grasp_offset,
    };
    let p_task = scenario.p_task[entry];
    let options = scenario.solver_options(entry, execution);
    match condition {
        Condition::Rp => solve_posture(&setup, &scenario.task_constraints(p_task)?, &options),
        Condition::Hp => resolve_ik_posture(&setup, &scenario.passer_target(p_task), &options),
    }
}

fn run_entry(scenario: &Scenario, condition: Condition, entry: usize, execution: Execution) -> Result<EntryReport> {
    let result = solve_entry(scenario, condition, entry, execution)?;
    let model = scenario.model();
    let object = object_pose(&model, &result.q_star, &scenario.grasp_offset);
    let p_task = scenario.p_task[entry];
    let converged = result.status == SolveStatus::Converged;
    if !converged {
        log::warn!(
            "{condition} entry {entry} ({} = {p_task} m): {:?}, max violation {:.3e}",
            scenario.name,
            result.status,
            result.constraint_report.max_violation()
        );
    }

    let (mut robot_path_m, mut metrics, mut trajectory) = (None, None, None);
    if converged {
        if condition == Condition::Rp {
            let path = plan_bspline(
                scenario.robot_home,
                Pose::from_transform(&object),
                scenario.robot_duration,
                scenario.bspline_degree,
            )?;
            let samples = sample_cartesian(&path, scenario.dt)?;
            robot_path_m = Some(samples.iter().map(|s| s.pose.position.into()).collect());
        }
        let q_m = scenario.subject.q_start;
        let approach = min_jerk_joint_motion(&q_m, &result.q_star, scenario.approach_duration, scenario.dt)?;
        metrics = Some(metrics::evaluate(
            &approach,
            &scenario.subject.q_n,
            &scenario.impairment,
            &q_m,
            Some(scenario.approach_duration),
        )?);
        trajectory = Some(TrajectoryReport::from_trajectory(&approach));
    }

    Ok(EntryReport {
        index: entry,
        label: entry_label(scenario, p_task),
        p_task_m: p_task,
        status: result.status,
        converged,
        q_star_deg: result.q_star.to_degrees(),
        objective: result.objective_value,
        residuals: ResidualReport::from(&result.constraint_report),
        iterations: result.iterations,
        starts_used: result.starts_used,
        closest_approach_m: result.closest_approach,
        object_position_m: object.translation.into(),
        robot_path_m,
        metrics,
        trajectory,
    })
}

fn run_condition(scenario: &Scenario, condition: Condition, execution: Execution) -> Result<ConditionRun> {
    let indices: Vec<usize> = (0..scenario.p_task.len()).collect();
    let entries = map_ordered(execution, &indices, |&i| run_entry(scenario, condition, i, execution))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionRun { condition, entries })
}

/// Runs the requested conditions in order; the comparison (RP against HP)
/// is filled in when both are present.
pub fn run_conditions(scenario: &Scenario, conditions: &[Condition], execution: Execution) -> Result<SessionReport> {
    let runs = conditions
        .iter()
        .map(|&c| run_condition(scenario, c, execution))
        .collect::<Result<Vec<_>>>()?;
    let hp = runs.iter().find(|r| r.condition == Condition::Hp);
    let rp = runs.iter().find(|r| r.condition == Condition::Rp);
    let comparison = match (hp, rp) {
        (Some(a), Some(b)) if !a.scenario_metrics().is_empty() && !b.scenario_metrics().is_empty() => {
            compare_runs(a, b).ok()
        }
        _ => None,
    };
    Ok(SessionReport {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        runs,
        comparison,
    })
}

pub fn run_session(scenario: &Scenario, condition: Condition, execution: Execution) -> Result<SessionReport> {
    run_conditions(scenario, &[condition], execution)
}
