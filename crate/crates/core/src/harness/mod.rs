//! Scenario files, simulated sessions, and file I/O for the CLI.

mod io;
mod report;
mod scenario;
mod session;

pub use io::{
    export_frames, frame_header, ingest_motion_log, motion_log_header, read_report, write_motion_log,
    write_report, FRAME_LANDMARKS,
};
pub use report::{compare_runs, Condition, ConditionRun, EntryReport, ResidualReport, SessionReport, TrajectoryReport};
pub use scenario::{
    load_scenario, Passer, Scenario, Subject, DEFAULT_DT, DEFAULT_NATURAL_POSTURE_DEG, DEFAULT_ROM_LOWER_DEG,
    DEFAULT_ROM_UPPER_DEG,
};
pub use session::{entry_label, run_conditions, run_session, solve_entry};
