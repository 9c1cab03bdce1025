//! Evaluation over the generated schedule: limits, timeouts, stopping
//! rules, out-of-process controllers and trace statistics.

mod external;
mod limits;
mod report;
mod run;
mod stats;

pub use external::ExternalController;
pub use limits::{Limits, SeedSpec};
pub use report::{check_termination, EnvResult, EvalReport, StopReason, Verdict, MAX_CONSECUTIVE_TIMEOUTS, MIN_COMPLETION};
pub use run::{run_episode, run_evaluation, ControllerSpec, EvalConfig};
pub use stats::{quantile, replay_stats, trace_stats, CurvePoint, ReplaySummary, TraceStats};
