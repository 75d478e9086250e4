//! Trials, sweeps, and the statistics behind the externalization test.

pub mod results;
pub mod scan;
pub mod select;
pub mod stats;
pub mod sweep;
pub mod trial;

pub use trial::{
    average_reward_curve, run_controller, run_trial, short_hash, AgentSpec, Controller, EnvConfig,
    LearnerController, TrialConfig, TrialRecord,
};
pub use scan::{externalization_scan, PValueMatrix, ResultTable, ScanReport, Verdict, SIGNIFICANCE};
pub use select::{two_stage_select, Selection};
pub use stats::{one_sided_test, welch_test, WelchTest};
pub use results::{read_record, write_record, Stage, SummaryRow};
pub use sweep::{analyze_dir, analyze_rows, run_sweep, Analysis, AnalyzedCell, CellOutcome, Profile, SweepOutcome};
