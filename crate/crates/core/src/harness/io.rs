//! CSV motion logs, frame exports, and report files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, object_pose, JointVector, JOINT_COUNT};
use crate::trajectory::JointTrajectory;

use super::report::SessionReport;
use super::scenario::Scenario;

/// Column names of a motion log.
pub fn motion_log_header() -> Vec<String> {
    std::iter::once("time_s".to_string())
        .chain((1..=JOINT_COUNT).map(|i| format!("q{i}_deg")))
        .collect()
}

/// Landmarks written per frame record, in column order.
pub const FRAME_LANDMARKS: [&str; 7] = ["pelvis", "spine", "shoulder", "elbow", "wrist", "hand", "object"];

/// Frame-export columns: `t_s`, then `x`, `y`, `z` (meters) per landmark,
/// then the condition, entry index, task value and the joint angles the
/// positions were computed from.
pub fn frame_header() -> Vec<String> {
    let mut cols = vec!["t_s".to_string()];
    for name in FRAME_LANDMARKS {
        for axis in ["x", "y", "z"] {
            cols.push(format!("{name}_{axis}_m"));
        }
    }
    cols.extend(["condition", "entry", "p_task_m"].map(String::from));
    cols.extend((1..=JOINT_COUNT).map(|i| format!("q{i}_deg")));
    cols
}

/// Relative tolerance for treating log timestamps as uniformly spaced.
const UNIFORM_TOL: f64 = 1e-6;

fn ingest_error(row: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        message: message.into(),
    }
}

/// Reads a motion log (`time_s`, `q1_deg`..`q8_deg`). Logs that are not
/// uniformly spaced at `dt` are linearly resampled onto a grid of spacing
/// `dt` starting at the first timestamp. Row numbers in errors are file line
/// numbers, the header being row 1.
pub fn ingest_motion_log(path: &Path, dt: f64) -> Result<JointTrajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);

    let header = reader.headers().map_err(|e| ingest_error(1, e.to_string()))?;
    let expected = motion_log_header();
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(ingest_error(1, format!("expected columns {}", expected.join(","))));
    }

    let mut times = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            ingest_error(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != expected.len() {
            return Err(ingest_error(row, format!("expected {} columns, found {}", expected.len(), record.len())));
        }
        let mut values = [0.0; JOINT_COUNT + 1];
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| ingest_error(row, format!("column `{}`: `{field}` is not a number", expected[i])))?;
            if !v.is_finite() {
                return Err(ingest_error(row, format!("column `{}` is not finite", expected[i])));
            }
            values[i] = v;
        }
        if let Some(&prev) = times.last() {
            if values[0] <= prev {
                return Err(ingest_error(row, format!("time {} does not increase (previous {prev})", values[0])));
            }
        }
        times.push(values[0]);
        let mut q = [0.0; JOINT_COUNT];
        q.copy_from_slice(&values[1..]);
        rows.push(JointVector::from_degrees(q).map_err(|e| ingest_error(row, e.to_string()))?);
    }
    if rows.len() < 2 {
        return Err(ingest_error(rows.len() + 1, "a motion log needs at least 2 samples"));
    }

    let span = times[times.len() - 1] - times[0];
    let spacing = span / (times.len() - 1) as f64;
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - spacing).abs() <= UNIFORM_TOL * spacing);
    if uniform && (spacing - dt).abs() <= UNIFORM_TOL * dt {
        return JointTrajectory::with_start(times[0], spacing, rows, false);
    }

    log::info!("resampling {} onto a {dt} s grid", path.display());
    let steps = (span / dt * (1.0 + 1e-12)).floor() as usize;
    if steps < 1 {
        return Err(Error::Input(format!("log spans {span} s, shorter than one {dt} s step")));
    }
    let mut samples = Vec::with_capacity(steps + 1);
    let mut seg = 0;
    for k in 0..=steps {
        let t = (times[0] + k as f64 * dt).min(times[times.len() - 1]);
        while seg + 2 < times.len() && times[seg + 1] < t {
            seg += 1;
        }
        let s = ((t - times[seg]) / (times[seg + 1] - times[seg])).clamp(0.0, 1.0);
        let q = rows[seg].as_vector() * (1.0 - s) + rows[seg + 1].as_vector() * s;
        samples.push(JointVector::from(q));
    }
    JointTrajectory::with_start(times[0], dt, samples, true)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// Writes `traj` as a motion log.
pub fn write_motion_log(traj: &JointTrajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(motion_log_header()).map_err(|e| csv_io(path, e))?;
    for (k, q) in traj.samples().iter().enumerate() {
        let record = std::iter::once(traj.time(k)).chain(q.to_degrees()).map(|v| v.to_string());
        w.write_record(record).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one record per approach sample of every simulated entry, with
/// landmark positions recomputed from the reported joint angles. Returns
/// the number of records.
pub fn export_frames(report: &SessionReport, scenario: &Scenario, path: &Path) -> Result<usize> {
    let model = scenario.model();
    let mut w = csv_writer(path)?;
    w.write_record(frame_header()).map_err(|e| csv_io(path, e))?;
    let mut count = 0;
    for run in &report.runs {
        for entry in &run.entries {
            let Some(traj) = &entry.trajectory else {
                continue;
            };
            for (k, q_deg) in traj.q_deg.iter().enumerate() {
                let q = JointVector::from_degrees(*q_deg)?;
                let poses = forward_kinematics(&model, &q);
                let object = object_pose(&model, &q, &scenario.grasp_offset);
                let mut record = vec![(k as f64 * traj.dt_s).to_string()];
                for (_, pose) in poses.landmarks() {
                    record.extend(pose.translation.iter().map(|v| v.to_string()));
                }
                record.extend(object.translation.iter().map(|v| v.to_string()));
                record.push(run.condition.to_string());
                record.push(entry.index.to_string());
                record.push(entry.p_task_m.to_string());
                record.extend(q_deg.iter().map(|v| v.to_string()));
                w.write_record(&record).map_err(|e| csv_io(path, e))?;
                count += 1;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

pub fn write_report(report: &SessionReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<SessionReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SessionReport::from_json(&text)
}
