use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::{inverse_flow_with, CharacteristicMaps, Diffeo, FlowOptions};
use crate::scheme::cutoffs::TimePartition;
use crate::time::TimeField;

/// Flow maps `Phi_i` of every interval of `partition`, each on the support of its cutoff.
pub fn interval_flows(maps: &CharacteristicMaps, partition: &TimePartition, opts: FlowOptions) -> Result<Vec<Diffeo>> {
    let times = maps.times();
    (0..partition.count())
        .map(|i| {
            let anchor = partition.anchor(i, times)?;
            inverse_flow_with(maps, anchor, partition.window(i, times), opts)
        })
        .collect()
}

/// `(max_i |DPhi_i^{-1}|, max_i |Id - DPhi_i^{-1}|)` over the windows, operator norms.
pub fn flow_margins(flows: &[Diffeo]) -> (f64, f64) {
    let mut inv = 1.0f64;
    let mut dev = 0.0f64;
    for f in flows {
        if f.is_identity() {
            continue;
        }
        for k in f.window.0..=f.window.1 {
            let s = f.snapshot(k);
            inv = inv.max(s.inverse_jacobian_norm());
            dev = dev.max(s.inverse_deviation());
        }
    }
    (inv, dev)
}

#[derive(Debug, Clone, Serialize)]
pub struct TauCandidate {
    pub tau: f64,
    pub max_inverse_norm: f64,
    pub max_inverse_deviation: f64,
    /// `|R0|_{C^0} max |Id - DPhi^{-1}|`
    pub flow_defect: f64,
    pub inverse_ok: bool,
    pub flow_defect_ok: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TauChoice {
    pub tau: f64,
    pub passed: bool,
    pub flows: Vec<Diffeo>,
    pub candidates: Vec<TauCandidate>,
}

/// `max_t max_x |R0(t, x)|`
pub fn c0_norm(r0: &TimeField<VectorField>) -> f64 {
    r0.snaps().iter().fold(0.0f64, |m, r| m.max(r.max_abs()))
}

/// Halve `tau` from 1/2 until both flow conditions hold; `passed = false` when
/// the time lattice runs out first (the last candidate with flows is returned).
pub fn search_tau(maps: &CharacteristicMaps, r0_c0: f64, delta: f64, opts: FlowOptions) -> Result<TauChoice> {
    let times = maps.times();
    let dt = times.dt();
    let mut tau = 0.5;
    let mut candidates = Vec::new();
    let mut last: Option<(f64, Vec<Diffeo>)> = None;
    while tau >= 4.0 * dt - 1e-15 {
        let partition = TimePartition::new(tau)?;
        let flows = match interval_flows(maps, &partition, opts) {
            Ok(f) => f,
            Err(Error::IntegrationAccuracy(msg)) => {
                candidates.push(TauCandidate {
                    tau,
                    max_inverse_norm: f64::NAN,
                    max_inverse_deviation: f64::NAN,
                    flow_defect: f64::NAN,
                    inverse_ok: false,
                    flow_defect_ok: false,
                    note: Some(msg),
                });
                tau /= 2.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (inv, dev) = flow_margins(&flows);
        let c = TauCandidate {
            tau,
            max_inverse_norm: inv,
            max_inverse_deviation: dev,
            flow_defect: r0_c0 * dev,
            inverse_ok: inv <= 2.0,
            flow_defect_ok: r0_c0 * dev <= delta / 4.0,
            note: None,
        };
        let ok = c.inverse_ok && c.flow_defect_ok;
        candidates.push(c);
        if ok {
            return Ok(TauChoice { tau, passed: true, flows, candidates });
        }
        last = Some((tau, flows));
        tau /= 2.0;
    }
    match last {
        Some((tau, flows)) => Ok(TauChoice { tau, passed: false, flows, candidates }),
        None => Err(Error::TimeResolution(format!(
            "no time scale >= 4 dt = {} produced accurate flows",
            4.0 * dt
        ))),
    }
}

/// The first `tau = 2^{-m}` with `max_i |DPhi_i^{-1}| <= 2` and
/// `|R0|_{C^0} max_i |Id - DPhi_i^{-1}| <= delta / 4`.
pub fn choose_tau(
    u0: &TimeField<VectorField>,
    r0: &TimeField<VectorField>,
    delta: f64,
    opts: FlowOptions,
) -> Result<TauChoice> {
    let maps = CharacteristicMaps::new(u0, (0, u0.times().steps()), opts)?;
    let choice = search_tau(&maps, c0_norm(r0), delta, opts)?;
    if !choice.passed {
        let c = choice.candidates.last().expect("candidate");
        return Err(Error::TimeResolution(format!(
            "tau reached {} (4 dt) with max |DPhi^-1| = {:.3e} and |R0| |Id - DPhi^-1| = {:.3e} (delta/4 = {:.3e})",
            choice.tau,
            c.max_inverse_norm,
            c.flow_defect,
            delta / 4.0
        )));
    }
    Ok(choice)
}
