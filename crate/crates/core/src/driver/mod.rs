//! Scenario construction, the outer iteration, sweeps and persistence.

mod config;
mod diagnostics;
pub mod io;
mod iterate;
mod scenario;
mod schedule;
mod sweep;

pub use config::{GridConfig, RunConfig, ScheduleConfig, StepConfig, TimeGridConfig, Tolerances};
pub use diagnostics::Diagnostics;
pub use iterate::{e_set, run_iterations, schedule_for, ESetRow, IterationRow, RunOutcome, RunReport, StepStop};
pub use scenario::{chi, make_scenario, scenario_from_field, RhoBar, Scenario};
pub use schedule::{default_delta, default_p, IterationSchedule, Mode};
pub use crate::fit::{loglog_fit, Fit};
pub use sweep::{select_snapshots, sweep, Axis, Selection, SweepConfig, SweepPoint, SweepReport, SWEEP_TERMS};
