//! Scenario ingestion, suite orchestration and report emission for the
//! homogeom engine.

pub mod error;
pub mod report;
pub mod run;
pub mod scenario;
pub mod suite;

pub use error::InputError;
pub use report::{Check, Fact, Format, Report, SuiteReport, Verdict};
pub use run::{run, RunOptions};
pub use scenario::{Kind, PolicySpec, Scenario};
pub use suite::suite;

/// Exit code of a single report: 0 pass, 1 fail or FALSIFICATION.
pub fn exit_code(report: &Report) -> i32 {
    match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail | Verdict::Falsification => 1,
    }
}
