use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, Fit};
use crate::scheme::{DefectTriple, Ladder, LadderSource, SchemeParams, SnapshotStats, StepContext, TimePartition};

/// Swept parameter: `lambda'`, `lambda''`, `mu'`, `mu''` or `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lambda,
    Lambda2,
    Mu,
    Mu2,
    Tau,
}

/// Which snapshots enter the per-value ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// midpoints of primary intervals: only `(lambda', mu')` blocks are present
    Primary,
    /// midpoints of secondary intervals
    Secondary,
    /// interval boundaries, where both parities overlap
    Overlap,
    All,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub ladder: Ladder,
    pub p: f64,
    pub eta: f64,
    pub delta: f64,
    pub tau: f64,
    pub selection: Selection,
}

/// Every quantity the sweep tracks, in ledger order.
pub const SWEEP_TERMS: [&str; 11] = [
    "interaction",
    "flow",
    "psi",
    "quadr",
    "transport",
    "nash",
    "corr",
    "quadr_improved",
    "transport_improved",
    "quadr_closure",
    "transport_closure",
];

fn term_values(s: &SnapshotStats) -> [f64; 11] {
    let t = s.terms;
    [
        t[0],
        t[1],
        t[2],
        t[3],
        t[4],
        t[5],
        t[6],
        s.improved_l1[0],
        s.improved_l1[1],
        s.closure_l1[0],
        s.closure_l1[1],
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub ladder: Ladder,
    pub tau: f64,
    pub snapshots: Vec<usize>,
    /// max over the selected snapshots, in [`SWEEP_TERMS`] order
    pub terms: Vec<f64>,
    pub max_inverse_norm: f64,
    pub max_inverse_deviation: f64,
    /// `2 - max |DPhi^-1|`
    pub inverse_margin: f64,
    /// `delta/4 - |R0|_{C^0} max |Id - DPhi^-1|`
    pub flow_defect_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub axis: Axis,
    pub selection: Selection,
    pub points: Vec<SweepPoint>,
    pub fits: Vec<Fit>,
}

impl SweepReport {
    pub fn fit(&self, term: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.term == term)
    }
}

/// Snapshot indices of `selection` at which the defect cutoff is positive.
pub fn select_snapshots(ctx: &StepContext, selection: &Selection) -> Result<Vec<usize>> {
    let times = ctx.input().times();
    let part = &ctx.partition;
    let at = |t: f64| -> Option<usize> {
        let pos = t * times.steps() as f64;
        ((pos - pos.round()).abs() < 1e-9).then(|| pos.round() as usize)
    };
    let ks: Vec<usize> = match selection {
        Selection::Primary | Selection::Secondary => {
            let want = *selection == Selection::Primary;
            (0..part.count()).filter(|&i| part.is_primary(i) == want).filter_map(|i| at(part.midpoint(i))).collect()
        }
        Selection::Overlap => (1..part.count()).filter_map(|i| at(i as f64 * part.tau())).collect(),
        Selection::All => (0..times.len()).collect(),
        Selection::Indices(v) => v.clone(),
    };
    let ks: Vec<usize> = ks.into_iter().filter(|&k| k < times.len() && ctx.psi.values[k] > 0.0).collect();
    if ks.is_empty() {
        return Err(Error::Parameter(format!("selection {selection:?} contains no snapshot with psi > 0")));
    }
    Ok(ks)
}

fn as_divisor(v: f64) -> Result<usize> {
    let l = v.round();
    if (v - l).abs() > 1e-12 || l < 1.0 || !(l as usize).is_power_of_two() {
        return Err(Error::Parameter(format!("oscillation {v} must be a power of two")));
    }
    Ok(l as usize)
}

fn point(ctx: &StepContext, value: f64, selection: &Selection) -> Result<SweepPoint> {
    let ks = select_snapshots(ctx, selection)?;
    let stats = ctx.run_selected(&ks)?;
    let mut terms = vec![0.0f64; SWEEP_TERMS.len()];
    for s in &stats {
        for (m, v) in terms.iter_mut().zip(term_values(s)) {
            *m = m.max(v);
        }
    }
    let delta = ctx.params().delta;
    Ok(SweepPoint {
        value,
        ladder: ctx.ladder,
        tau: ctx.partition.tau(),
        snapshots: ks,
        terms,
        max_inverse_norm: ctx.tau.max_inverse_norm,
        max_inverse_deviation: ctx.tau.max_inverse_deviation,
        inverse_margin: 2.0 - ctx.tau.max_inverse_norm,
        flow_defect_margin: delta / 4.0 - ctx.tau.flow_defect,
    })
}

/// Per-value term ledgers along one axis, with log-log fits of every term.
pub fn sweep(input: &DefectTriple, cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut params = SchemeParams::new(cfg.p, cfg.eta, cfg.delta);
    params.tau = Some(cfg.tau);
    params.ladder = Some(cfg.ladder);
    let mut points = Vec::new();
    if cfg.axis == Axis::Tau {
        for &tau in &cfg.values {
            TimePartition::new(tau)?;
            params.tau = Some(tau);
            let ctx = StepContext::new(input, &params)?;
            points.push(point(&ctx, tau, &cfg.selection)?);
        }
    } else {
        let mut ctx = StepContext::new(input, &params)?;
        for &v in &cfg.values {
            let mut l = cfg.ladder;
            match cfg.axis {
                Axis::Lambda => l.lambda1 = as_divisor(v)?,
                Axis::Lambda2 => l.lambda2 = as_divisor(v)?,
                Axis::Mu => l.mu1 = v,
                Axis::Mu2 => l.mu2 = v,
                Axis::Tau => unreachable!(),
            }
            ctx.set_ladder(l, LadderSource::Fixed)?;
            points.push(point(&ctx, v, &cfg.selection)?);
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let fits = SWEEP_TERMS
        .iter()
        .enumerate()
        .map(|(i, name)| loglog_fit(name, &xs, &points.iter().map(|p| p.terms[i]).collect::<Vec<_>>()))
        .collect();
    Ok(SweepReport { axis: cfg.axis, selection: cfg.selection.clone(), points, fits })
}
