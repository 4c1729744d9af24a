use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{lp, lp_vec, w1p_vec};
use crate::scheme::{choose_exponents, default_ladder, ladder_constants, perturb_step, DefectTriple, StepReport, StepStatus};

use super::config::{ScheduleConfig, Tolerances};
use super::diagnostics::Diagnostics;
use super::io::save_triple;
use super::schedule::{default_p, IterationSchedule, Mode};

#[derive(Debug, Clone, Serialize)]
pub struct IterationRow {
    pub q: usize,
    pub status: StepStatus,
    pub binding: Vec<String>,
    pub p: f64,
    pub eta: f64,
    pub delta: f64,
    /// `max_t |R_q(t)|_{L^1}`
    pub r_in_l1: f64,
    /// `max_t |R_{q+1}(t)|_{L^1}`
    pub r_out_l1: f64,
    pub rho_change_l1: f64,
    pub u_change_c0: f64,
    pub u_change_w1p: f64,
    /// `M / eta_q`, measured `M` of this step
    pub u_c0_bound: f64,
    pub m: f64,
    pub pde_residual: f64,
}

/// Exact-equality check at a time where `R_0` vanishes.
#[derive(Debug, Clone, Serialize)]
pub struct ESetRow {
    pub q: usize,
    pub k: usize,
    pub t: f64,
    pub rho_identical: bool,
    pub u_identical: bool,
}

/// A step the lattice could not resolve; the iteration stops there.
#[derive(Debug, Clone, Serialize)]
pub struct StepStop {
    pub q: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: StepStatus,
    pub stopped: Option<StepStop>,
    pub schedule: IterationSchedule,
    pub rows: Vec<IterationRow>,
    /// `sum_q max_t |rho_{q+1} - rho_q|_{L^1}` over all steps
    pub rho_distance: f64,
    /// the same sum restricted to steps that completed
    pub rho_distance_completed: f64,
    pub rho_budget: f64,
    pub e_set: Vec<ESetRow>,
    pub e_set_exact: bool,
    pub ceiling: String,
    pub steps: Vec<StepReport>,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub diagnostics: Diagnostics,
    pub last: DefectTriple,
}

/// Failures caused by the lattice rather than by the inputs.
fn resolution_bounded(e: &Error) -> bool {
    matches!(e, Error::Resolution(_) | Error::TimeResolution(_) | Error::IntegrationAccuracy(_) | Error::FlowAccuracy(_))
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Times where the initial defect is exactly zero.
pub fn e_set(r0: &DefectTriple) -> Vec<usize> {
    (0..r0.times().len())
        .filter(|&k| r0.r.at(k).comps().iter().all(|c| c.data().iter().all(|&v| v == 0.0)))
        .collect()
}

fn ceiling_note(schedule: &IterationSchedule, d: usize, n: usize) -> String {
    let need = schedule
        .ps
        .iter()
        .filter_map(|&p| choose_exponents(p, d, 1.0).ok())
        .map(|e| 4.0 * 2f64.powf(e.beta + e.gamma))
        .fold(0.0, f64::max);
    format!(
        "Q = {} steps; the exponent ladder at lambda = 2 needs n >= {need:.0} per step (n = {n}), and every further step \
         multiplies the required resolution by the ladder, so deeper iteration is out of reach on this lattice",
        schedule.steps
    )
}

/// Apply the step `Q` times with `(p_q, eta_q, delta_q)`; write every triple
/// to `out/q{q}` when `out` is given. A step the lattice cannot resolve ends
/// the run as PARTIAL; other step errors propagate.
pub fn run_iterations(
    start: &DefectTriple,
    schedule: &IterationSchedule,
    tolerances: &Tolerances,
    out: Option<&Path>,
) -> Result<RunOutcome> {
    let grid = start.grid();
    let times = start.times();
    let e = e_set(start);
    if let Some(dir) = out {
        save_triple(&dir.join("q0"), start)?;
    }
    let mut current = start.clone();
    let mut rows = Vec::new();
    let mut e_rows = Vec::new();
    let mut steps = Vec::new();
    let mut diagnostics = Diagnostics::default();
    let mut stopped = None;
    for q in 0..schedule.steps {
        let params = tolerances.params(schedule.ps[q], schedule.etas[q], schedule.deltas[q]);
        let outcome = match perturb_step(&current, &params) {
            Ok(o) => o,
            Err(e) if resolution_bounded(&e) => {
                stopped = Some(StepStop { q, reason: e.to_string() });
                break;
            }
            Err(source) => return Err(Error::Step { q, source: Box::new(source) }),
        };
        let next = outcome.output;
        let report = outcome.report;
        let mut rho_change = 0.0f64;
        let mut u_c0 = 0.0f64;
        let mut u_w1p = 0.0f64;
        for k in 0..times.len() {
            rho_change = rho_change.max(lp(&next.rho.at(k).sub(current.rho.at(k)), 1.0));
            let du = next.u.at(k).sub(current.u.at(k));
            u_c0 = u_c0.max(du.max_abs());
            u_w1p = u_w1p.max(w1p_vec(&du, params.p));
        }
        for &k in &e {
            e_rows.push(ESetRow {
                q,
                k,
                t: times.t(k),
                rho_identical: bits_equal(next.rho.at(k).data(), current.rho.at(k).data()),
                u_identical: next
                    .u
                    .at(k)
                    .comps()
                    .iter()
                    .zip(current.u.at(k).comps())
                    .all(|(a, b)| bits_equal(a.data(), b.data())),
            });
        }
        for s in &report.snapshots {
            diagnostics.push_snapshot(q, s);
        }
        let l1_max = |t: &DefectTriple| t.r.snaps().iter().map(|r| lp_vec(r, 1.0)).fold(0.0, f64::max);
        rows.push(IterationRow {
            q,
            status: report.status,
            binding: report.binding.clone(),
            p: params.p,
            eta: params.eta,
            delta: params.delta,
            r_in_l1: l1_max(&current),
            r_out_l1: l1_max(&next),
            rho_change_l1: rho_change,
            u_change_c0: u_c0,
            u_change_w1p: u_w1p,
            u_c0_bound: report.m / params.eta,
            m: report.m,
            pde_residual: report.pde_residual,
        });
        if let Some(dir) = out {
            save_triple(&dir.join(format!("q{}", q + 1)), &next)?;
        }
        steps.push(report);
        current = next;
    }
    let rho_distance = rows.iter().map(|r| r.rho_change_l1).fold(0.0, |a, b| a + b);
    let rho_distance_completed =
        rows.iter().filter(|r| r.status == StepStatus::Complete).map(|r| r.rho_change_l1).fold(0.0, |a, b| a + b);
    let e_set_exact = e_rows.iter().all(|r| r.rho_identical && r.u_identical);
    let partial = stopped.is_some() || rows.iter().any(|r| r.status == StepStatus::Partial) || !e_set_exact;
    let report = RunReport {
        status: if partial { StepStatus::Partial } else { StepStatus::Complete },
        stopped,
        schedule: schedule.clone(),
        rows,
        rho_distance,
        rho_distance_completed,
        rho_budget: schedule.rho_budget(),
        e_set: e_rows,
        e_set_exact,
        ceiling: ceiling_note(schedule, grid.d(), grid.n()),
        steps,
    };
    Ok(RunOutcome { report, diagnostics, last: current })
}

/// Schedule for `start`: `delta_{-1} = max_t |R_0|_{L^1}` and `M` from the
/// ladder the first step will use.
pub fn schedule_for(
    start: &DefectTriple,
    cfg: &ScheduleConfig,
    tolerances: &Tolerances,
    epsilon: f64,
    mode: Mode,
) -> Result<IterationSchedule> {
    let grid = start.grid();
    let d = grid.d();
    let p0 = cfg.ps.as_ref().and_then(|v| v.first().copied()).unwrap_or_else(|| default_p(0, d));
    let m = if cfg.steps == 0 {
        0.0
    } else {
        let ladder = match tolerances.ladder {
            Some(l) => l,
            None => default_ladder(&choose_exponents(p0, d, tolerances.margin)?, grid)?.0,
        };
        ladder_constants(ladder, grid)?.m
    };
    let delta_init = start.r.snaps().iter().map(|r| lp_vec(r, 1.0)).fold(0.0, f64::max);
    IterationSchedule::new(cfg.steps, d, delta_init, m, epsilon, mode, cfg.deltas.clone(), cfg.ps.clone())
}
