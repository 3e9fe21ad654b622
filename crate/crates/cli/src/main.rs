use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use handover_core::harness::{
    compare_runs, export_frames, ingest_motion_log, load_scenario, read_report, run_conditions, solve_entry,
    write_report, Condition, ResidualReport, Scenario, SessionReport,
};
use handover_core::kinematics::object_pose;
use handover_core::metrics;
use handover_core::optimizer::SolveStatus;
use handover_core::{Error, Execution};
use serde_json::json;

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "handover", version, about = "Mobility-aware handover simulator")]
struct Cli {
    /// Evaluate multi-start solves and task sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionArg {
    Hp,
    Rp,
    Both,
}

impl ConditionArg {
    fn conditions(self) -> Vec<Condition> {
        match self {
            ConditionArg::Hp => vec![Condition::Hp],
            ConditionArg::Rp => vec![Condition::Rp],
            ConditionArg::Both => vec![Condition::Hp, Condition::Rp],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SingleCondition {
    Hp,
    Rp,
}

impl From<SingleCondition> for Condition {
    fn from(c: SingleCondition) -> Self {
        match c {
            SingleCondition::Hp => Condition::Hp,
            SingleCondition::Rp => Condition::Rp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the handover posture for one task value and print it.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Task value in meters along the scenario's equality axis.
        #[arg(long, allow_hyphen_values = true)]
        p_task: f64,
        #[arg(long, value_enum, default_value = "rp")]
        condition: SingleCondition,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scenario's full sweep and write the report and frame files.
    Session {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        condition: ConditionArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Sample spacing in seconds (overrides the scenario).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Compare two session reports (B relative to A).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Condition to take from report A (default: its first run).
        #[arg(long, value_enum)]
        condition_a: Option<SingleCondition>,
        /// Condition to take from report B (default: its first run).
        #[arg(long, value_enum)]
        condition_b: Option<SingleCondition>,
    },
    /// Compute metrics of a recorded motion log.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        /// Scenario providing the natural posture and impairment weights.
        #[arg(long)]
        scenario: PathBuf,
        /// Target sample spacing in seconds (default: the scenario's).
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_IO
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values always serialize"));
}

fn load(path: &Path, seed: Option<u64>, dt: Option<f64>) -> Result<Scenario, Error> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("--dt must be positive, got {dt}")));
        }
        scenario.dt = dt;
    }
    Ok(scenario)
}

fn solve(
    path: &Path,
    p_task: f64,
    condition: Condition,
    seed: Option<u64>,
    execution: Execution,
) -> Result<u8, Error> {
    let mut scenario = load(path, seed, None)?;
    scenario.task_constraints(p_task)?;
    scenario.p_task = vec![p_task];
    let result = solve_entry(&scenario, condition, 0, execution)?;
    let object = object_pose(&scenario.model(), &result.q_star, &scenario.grasp_offset);
    print_json(&json!({
        "condition": condition,
        "p_task_m": p_task,
        "status": result.status,
        "q_star_deg": result.q_star.to_degrees(),
        "objective": result.objective_value,
        "object_position_m": [object.translation.x, object.translation.y, object.translation.z],
        "residuals": ResidualReport::from(&result.constraint_report),
        "iterations": result.iterations,
        "starts_used": result.starts_used,
        "closest_approach_m": result.closest_approach,
    }));
    Ok(if result.status == SolveStatus::Infeasible { EXIT_INFEASIBLE } else { 0 })
}

fn session(
    path: &Path,
    condition: ConditionArg,
    seed: Option<u64>,
    out_dir: &Path,
    dt: Option<f64>,
    execution: Execution,
) -> Result<u8, Error> {
    let scenario = load(path, seed, dt)?;
    let report = run_conditions(&scenario, &condition.conditions(), execution)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let report_path = out_dir.join(format!("{}_report.json", scenario.name));
    let frames_path = out_dir.join(format!("{}_frames.csv", scenario.name));
    write_report(&report, &report_path)?;
    let records = export_frames(&report, &scenario, &frames_path)?;

    for run in &report.runs {
        for e in &run.entries {
            match &e.metrics {
                Some(m) => println!(
                    "{} {:<24} {:?}  psi_bar {:.4}  psi_int {:.4}  J {:.4}  wrist {:.3} deg",
                    run.condition, e.label, e.status, m.psi_bar, m.psi_interaction, m.jerk, m.wrist_excursion_max
                ),
                None => println!(
                    "{} {:<24} {:?}  max violation {:.3e}",
                    run.condition, e.label, e.status, e.residuals.max_violation
                ),
            }
        }
    }
    if let Some(c) = &report.comparison {
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:+.1}%"));
        println!(
            "RP vs HP: psi_bar {}  psi_int {}  J {}",
            fmt(c.mean_change.psi_bar),
            fmt(c.mean_change.psi_interaction),
            fmt(c.mean_change.jerk)
        );
    }
    println!("wrote {} and {} ({records} frames)", report_path.display(), frames_path.display());

    let all_infeasible = report
        .runs
        .iter()
        .any(|r| r.entries.iter().all(|e| e.status == SolveStatus::Infeasible));
    Ok(if all_infeasible { EXIT_INFEASIBLE } else { 0 })
}

fn pick_run(report: &SessionReport, condition: Option<SingleCondition>, which: &str) -> Result<usize, Error> {
    match condition {
        Some(c) => {
            let c = Condition::from(c);
            report
                .runs
                .iter()
                .position(|r| r.condition == c)
                .ok_or_else(|| Error::Input(format!("report {which} has no {c} run")))
        }
        None if report.runs.is_empty() => Err(Error::Input(format!("report {which} has no runs"))),
        None => Ok(0),
    }
}

fn compare(
    a: &Path,
    b: &Path,
    condition_a: Option<SingleCondition>,
    condition_b: Option<SingleCondition>,
) -> Result<u8, Error> {
    let (ra, rb) = (read_report(a)?, read_report(b)?);
    let run_a = &ra.runs[pick_run(&ra, condition_a, "A")?];
    let run_b = &rb.runs[pick_run(&rb, condition_b, "B")?];
    let summary = compare_runs(run_a, run_b)?;
    print_json(&serde_json::to_value(&summary).map_err(|e| Error::Format(e.to_string()))?);
    Ok(0)
}

fn ingest(log: &Path, scenario: &Path, dt: Option<f64>) -> Result<u8, Error> {
    let scenario = load(scenario, None, dt)?;
    let traj = ingest_motion_log(log, scenario.dt)?;
    let first = traj.samples()[0];
    let report = metrics::evaluate(&traj, &scenario.subject.q_n, &scenario.impairment, &first, None)?;
    print_json(&json!({
        "resampled": traj.resampled(),
        "dt_s": traj.dt(),
        "metrics": report,
    }));
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let outcome = match cli.command {
        Command::Solve {
            scenario,
            p_task,
            condition,
            seed,
        } => solve(&scenario, p_task, condition.into(), seed, execution),
        Command::Session {
            scenario,
            condition,
            seed,
            out_dir,
            dt,
        } => session(&scenario, condition, seed, &out_dir, dt, execution),
        Command::Compare {
            a,
            b,
            condition_a,
            condition_b,
        } => compare(&a, &b, condition_a, condition_b),
        Command::Ingest { log, scenario, dt } => ingest(&log, &scenario, dt),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
