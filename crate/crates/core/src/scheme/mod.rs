//! One perturbation step: time partition, cutoffs, perturbations, the seven
//! defect terms and the parameter selection.

mod cutoffs;
mod params;
mod step;
mod tau;

pub use cutoffs::{cutoff_from_norms, defect_cutoff, DefectCutoff, TimePartition};
pub use params::{choose_exponents, exponent_conditions, Exponents, Ladder, SchemeParams};
pub use step::{
    admissible_ladders, default_ladder, ladder_constants, perturb_step, AttemptSummary, ConclusionCheck, Conclusions, DefectTriple, LadderSource,
    SnapshotOutput, SnapshotStats, StepContext, StepOutcome, StepReport, StepRun, StepStatus, TauReport, TERMS,
};
pub use tau::{c0_norm, choose_tau, flow_margins, interval_flows, search_tau, TauCandidate, TauChoice};
