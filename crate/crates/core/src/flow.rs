//! Inverse flow maps of a divergence-free velocity, traced along characteristics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::interp::OffGrid;
use crate::ops::mapped_points;
use crate::spectral::{divergence, gradient, jacobian};
use crate::time::{TimeField, TimeGrid};

/// `Phi(x) = x + disp(x)` at one time, with its Jacobian and inverse Jacobian.
#[derive(Debug, Clone)]
pub struct DiffeoSnapshot {
    grid: Grid,
    disp: Option<VectorField>,
    jac: Option<MatrixField>,
    jac_inv: Option<MatrixField>,
}

impl DiffeoSnapshot {
    pub fn identity(grid: Grid) -> Self {
        DiffeoSnapshot { grid, disp: None, jac: None, jac_inv: None }
    }

    pub fn from_displacement(disp: VectorField) -> Self {
        let grid = disp.grid();
        let jac = MatrixField::identity(grid).add(&jacobian(&disp));
        let jac_inv = jac.inverse_cofactor();
        DiffeoSnapshot { grid, disp: Some(disp), jac: Some(jac), jac_inv: Some(jac_inv) }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_identity(&self) -> bool {
        self.disp.is_none()
    }

    pub fn displacement(&self) -> Option<&VectorField> {
        self.disp.as_ref()
    }

    pub fn jacobian(&self) -> MatrixField {
        self.jac.clone().unwrap_or_else(|| MatrixField::identity(self.grid))
    }

    pub fn inverse_jacobian(&self) -> MatrixField {
        self.jac_inv.clone().unwrap_or_else(|| MatrixField::identity(self.grid))
    }

    pub fn inverse_jacobian_ref(&self) -> Option<&MatrixField> {
        self.jac_inv.as_ref()
    }

    /// Points `scale * Phi(x)`, flattened.
    pub fn points(&self, scale: f64) -> Vec<f64> {
        mapped_points(self.disp.as_ref(), self.grid, scale)
    }

    pub fn det_residual(&self) -> f64 {
        match &self.jac {
            None => 0.0,
            Some(j) => j.determinant().map(|v| v - 1.0).max_abs(),
        }
    }

    /// Max entrywise `|DPhi (DPhi)^{-1} - Id|`.
    pub fn inverse_residual(&self) -> f64 {
        let (Some(j), Some(ji)) = (&self.jac, &self.jac_inv) else {
            return 0.0;
        };
        let d = self.grid.d();
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d * d];
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            j.at(i, &mut a);
            ji.at(i, &mut b);
            for r in 0..d {
                for c in 0..d {
                    let s: f64 = (0..d).map(|k| a[r * d + k] * b[k * d + c]).sum();
                    worst = worst.max((s - if r == c { 1.0 } else { 0.0 }).abs());
                }
            }
        }
        worst
    }

    /// `max |DPhi|` (operator norm).
    pub fn jacobian_norm(&self) -> f64 {
        self.jac.as_ref().map_or(1.0, |j| j.max_operator_norm())
    }

    pub fn inverse_jacobian_norm(&self) -> f64 {
        self.jac_inv.as_ref().map_or(1.0, |j| j.max_operator_norm())
    }

    /// `max |Id - (DPhi)^{-1}|` (operator norm).
    pub fn inverse_deviation(&self) -> f64 {
        self.jac_inv
            .as_ref()
            .map_or(0.0, |j| MatrixField::identity(self.grid).sub(j).max_operator_norm())
    }
}

/// Inverse flow map anchored at snapshot `anchor`, stored on a window of snapshots.
#[derive(Debug, Clone)]
pub struct Diffeo {
    pub anchor: usize,
    pub times: TimeGrid,
    pub window: (usize, usize),
    grid: Grid,
    disps: Vec<Option<VectorField>>,
    pub det_residual: f64,
    pub inverse_residual: f64,
}

impl Diffeo {
    pub fn identity(grid: Grid, times: TimeGrid, anchor: usize, window: (usize, usize)) -> Self {
        Diffeo {
            anchor,
            times,
            window,
            grid,
            disps: vec![None; window.1 - window.0 + 1],
            det_residual: 0.0,
            inverse_residual: 0.0,
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        k >= self.window.0 && k <= self.window.1
    }

    pub fn is_identity(&self) -> bool {
        self.disps.iter().all(|d| d.is_none())
    }

    pub fn displacement(&self, k: usize) -> Option<&VectorField> {
        if !self.contains(k) {
            return None;
        }
        self.disps[k - self.window.0].as_ref()
    }

    /// Snapshot at time index `k`, which must lie in the window.
    pub fn snapshot(&self, k: usize) -> DiffeoSnapshot {
        assert!(self.contains(k), "snapshot {k} outside flow window {:?}", self.window);
        match &self.disps[k - self.window.0] {
            None => DiffeoSnapshot::identity(self.grid),
            Some(d) => DiffeoSnapshot::from_displacement(d.clone()),
        }
    }

    /// Max over interior window snapshots of `|d_t Phi + (u0 . grad) Phi|`,
    /// with five-point centred differences (three-point next to the window ends).
    pub fn transport_residual(&self, u0: &TimeField<VectorField>) -> f64 {
        let (lo, hi) = self.window;
        if hi < lo + 2 {
            return 0.0;
        }
        let dt = self.times.dt();
        let d = self.grid.d();
        let zero = VectorField::zeros(self.grid);
        let disp = |k: usize| self.displacement(k).unwrap_or(&zero);
        let mut worst = 0.0f64;
        for k in lo + 1..hi {
            let u = u0.at(k);
            for a in 0..d {
                let dtd = if k >= lo + 2 && k + 2 <= hi {
                    let mut s = disp(k + 1).comp(a).sub(disp(k - 1).comp(a)).scale(8.0);
                    s.axpy(-1.0, disp(k + 2).comp(a));
                    s.axpy(1.0, disp(k - 2).comp(a));
                    s.scale(1.0 / (12.0 * dt))
                } else {
                    disp(k + 1).comp(a).sub(disp(k - 1).comp(a)).scale(0.5 / dt)
                };
                let adv = u.dot(&gradient(disp(k).comp(a)));
                worst = worst.max(dtd.add(&adv).add(u.comp(a)).max_abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub substeps: usize,
    pub det_tolerance: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { substeps: 4, det_tolerance: 1e-3 }
    }
}

struct VelocitySampler<'a> {
    u0: &'a TimeField<VectorField>,
    cache: Vec<(f64, OffGrid)>,
}

impl<'a> VelocitySampler<'a> {
    fn field_at(&self, s: f64) -> Vec<ScalarField> {
        let tg = self.u0.times();
        let n = tg.steps();
        let dt = tg.dt();
        let pos = s / dt;
        let kr = pos.round();
        if (pos - kr).abs() < 1e-12 {
            return self.u0.at(kr as usize).comps().to_vec();
        }
        // cubic Lagrange through four neighbouring snapshots
        let k0 = (pos.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
        let ks = [k0, k0 + 1, k0 + 2, k0 + 3];
        let w: Vec<f64> = ks
            .iter()
            .map(|&k| {
                ks.iter()
                    .filter(|&&m| m != k)
                    .map(|&m| (pos - m as f64) / (k as f64 - m as f64))
                    .product()
            })
            .collect();
        let first = self.u0.at(ks[0]);
        if ks.iter().all(|&k| self.u0.at(k) == first) {
            return first.comps().to_vec();
        }
        (0..first.comps().len())
            .map(|a| {
                let mut out = self.u0.at(ks[0]).comp(a).scale(w[0]);
                for m in 1..4 {
                    out.axpy(w[m], self.u0.at(ks[m]).comp(a));
                }
                out
            })
            .collect()
    }

    fn eval(&mut self, s: f64, pts: &[f64]) -> Vec<Vec<f64>> {
        if let Some((_, ev)) = self.cache.iter().find(|(t, _)| *t == s) {
            return ev.eval(pts);
        }
        let comps = self.field_at(s);
        let refs: Vec<&ScalarField> = comps.iter().collect();
        let ev = OffGrid::new(&refs);
        let out = ev.eval(pts);
        if self.cache.len() >= 3 {
            self.cache.remove(0);
        }
        self.cache.push((s, ev));
        out
    }
}

fn rk4_march(sampler: &mut VelocitySampler, y: &mut [f64], t0: f64, t1: f64, substeps: usize, d: usize) {
    let h = (t1 - t0) / substeps as f64;
    let npts = y.len() / d;
    let flat = |v: Vec<Vec<f64>>| -> Vec<f64> {
        let mut out = vec![0.0; npts * d];
        for (a, comp) in v.into_iter().enumerate() {
            for (p, val) in comp.into_iter().enumerate() {
                out[p * d + a] = val;
            }
        }
        out
    };
    for s in 0..substeps {
        let t = t0 + s as f64 * h;
        let k1 = flat(sampler.eval(t, y));
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = flat(sampler.eval(t + 0.5 * h, &y2));
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = flat(sampler.eval(t + 0.5 * h, &y3));
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = flat(sampler.eval(t + h, &y4));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn is_zero_velocity(u0: &TimeField<VectorField>, lo: usize, hi: usize) -> bool {
    (lo..=hi).all(|k| u0.at(k).comps().iter().all(|c| c.data().iter().all(|&v| v == 0.0)))
}

/// One-step characteristic maps of `u0`: for each `k`, the endpoints of
/// `dy/ds = u0(s, y)` started at the lattice at `t_k` and run to `t_{k+1}`
/// (forward) or `t_{k-1}` (backward). `None` marks a step with zero velocity.
pub struct CharacteristicMaps {
    grid: Grid,
    times: TimeGrid,
    range: (usize, usize),
    forward: Vec<Option<Vec<f64>>>,
    backward: Vec<Option<Vec<f64>>>,
}

impl CharacteristicMaps {
    /// Maps for every step inside snapshots `range`.
    pub fn new(u0: &TimeField<VectorField>, range: (usize, usize), opts: FlowOptions) -> Result<Self> {
        let times = u0.times();
        let grid = u0.at(0).grid();
        let d = grid.d();
        let n = times.steps();
        if range.0 > range.1 || range.1 > n {
            return Err(Error::Parameter(format!("snapshot range {range:?} outside 0..={n}")));
        }
        if opts.substeps < 4 {
            return Err(Error::Parameter("flow integration needs at least 4 substeps per time step".into()));
        }
        for k in range.0..=range.1 {
            let u = u0.at(k);
            let scale = crate::norms::ck_vec(u, 1).max(1.0);
            let div = divergence(u).max_abs();
            if div > 1e-8 * scale {
                return Err(Error::Precondition(format!(
                    "velocity is not divergence-free at snapshot {k} (|div u| = {div:.3e})"
                )));
            }
        }
        let base = mapped_points(None, grid, 1.0);
        // the cubic time interpolant reads up to two snapshots beyond a step
        let quiet = |k0: usize, k1: usize| is_zero_velocity(u0, k0.saturating_sub(2), (k1 + 2).min(n));
        let mut sampler = VelocitySampler { u0, cache: Vec::new() };
        let mut forward = Vec::with_capacity(range.1 - range.0);
        for k in range.0..range.1 {
            if quiet(k, k + 1) {
                forward.push(None);
                continue;
            }
            let mut y = base.clone();
            rk4_march(&mut sampler, &mut y, times.t(k), times.t(k + 1), opts.substeps, d);
            forward.push(Some(y));
        }
        sampler.cache.clear();
        let mut backward = Vec::with_capacity(range.1 - range.0);
        for k in (range.0 + 1..=range.1).rev() {
            if quiet(k - 1, k) {
                backward.push(None);
                continue;
            }
            let mut y = base.clone();
            rk4_march(&mut sampler, &mut y, times.t(k), times.t(k - 1), opts.substeps, d);
            backward.push(Some(y));
        }
        backward.reverse();
        Ok(CharacteristicMaps { grid, times, range, forward, backward })
    }

    pub fn range(&self) -> (usize, usize) {
        self.range
    }

    pub fn times(&self) -> TimeGrid {
        self.times
    }

    /// Endpoints of the step from `t_k` to `t_{k+1}`.
    fn forward(&self, k: usize) -> Option<&Vec<f64>> {
        self.forward[k - self.range.0].as_ref()
    }

    /// Endpoints of the step from `t_k` to `t_{k-1}`.
    fn backward(&self, k: usize) -> Option<&Vec<f64>> {
        self.backward[k - 1 - self.range.0].as_ref()
    }
}

/// `disp_k(x) = Y(x) - x + disp_next(Y(x))`, with `Y` the one-step endpoints.
fn compose_step(grid: Grid, base: &[f64], ends: &[f64], next: Option<&VectorField>) -> VectorField {
    let d = grid.d();
    let carried = next.map(|v| {
        let refs: Vec<&ScalarField> = v.comps().iter().collect();
        OffGrid::new(&refs).eval(ends)
    });
    let comps = (0..d)
        .map(|a| {
            let v = (0..grid.len())
                .map(|p| {
                    let shift = ends[p * d + a] - base[p * d + a];
                    shift + carried.as_ref().map_or(0.0, |c| c[a][p])
                })
                .collect();
            ScalarField::from_vec(grid, v).expect("sized")
        })
        .collect();
    VectorField::new(comps).expect("d")
}

/// Solve `d_t Phi + (u0 . grad) Phi = 0`, `Phi(t_anchor) = id`, on snapshots `window`.
///
/// The characteristic from `t_k` to the anchor is the one-step map to the
/// neighbouring snapshot followed by the already known remainder, which is
/// read off the neighbour's displacement by trigonometric interpolation.
pub fn inverse_flow_with(maps: &CharacteristicMaps, anchor: usize, window: (usize, usize), opts: FlowOptions) -> Result<Diffeo> {
    let (grid, times) = (maps.grid, maps.times);
    if anchor < window.0 || anchor > window.1 || window.1 >= times.len() {
        return Err(Error::Parameter(format!("anchor {anchor} outside window {window:?}")));
    }
    if window.0 < maps.range.0 || window.1 > maps.range.1 {
        return Err(Error::Parameter(format!("window {window:?} outside the traced range {:?}", maps.range)));
    }
    let base = mapped_points(None, grid, 1.0);
    let mut disps: Vec<Option<VectorField>> = vec![None; window.1 - window.0 + 1];
    for k in (window.0..anchor).rev() {
        let next = disps[k + 1 - window.0].clone();
        disps[k - window.0] = match maps.forward(k) {
            None => next,
            Some(ends) => Some(compose_step(grid, &base, ends, next.as_ref())),
        };
    }
    for k in anchor + 1..=window.1 {
        let prev = disps[k - 1 - window.0].clone();
        disps[k - window.0] = match maps.backward(k) {
            None => prev,
            Some(ends) => Some(compose_step(grid, &base, ends, prev.as_ref())),
        };
    }
    let mut det_res = 0.0f64;
    let mut inv_res = 0.0f64;
    for disp in disps.iter().flatten() {
        let snap = DiffeoSnapshot::from_displacement(disp.clone());
        det_res = det_res.max(snap.det_residual());
        inv_res = inv_res.max(snap.inverse_residual());
    }
    if det_res > opts.det_tolerance {
        return Err(Error::IntegrationAccuracy(format!(
            "det DPhi deviates from 1 by {det_res:.3e} (tolerance {:.1e})",
            opts.det_tolerance
        )));
    }
    Ok(Diffeo { anchor, times, window, grid, disps, det_residual: det_res, inverse_residual: inv_res })
}

/// [`inverse_flow_with`] on maps traced over the window only.
pub fn inverse_flow(
    u0: &TimeField<VectorField>,
    anchor: usize,
    window: (usize, usize),
    opts: FlowOptions,
) -> Result<Diffeo> {
    if anchor < window.0 || anchor > window.1 || window.1 >= u0.times().len() {
        return Err(Error::Parameter(format!("anchor {anchor} outside window {window:?}")));
    }
    let maps = CharacteristicMaps::new(u0, window, opts)?;
    inverse_flow_with(&maps, anchor, window, opts)
}

/// `(DPhi)^{-1} (G o (scale Phi))`, with `G` given on its own lattice.
pub fn pullback_scaled(g: &VectorField, scale: f64, phi: &DiffeoSnapshot) -> VectorField {
    let grid = phi.grid();
    let pts = phi.points(scale);
    let refs: Vec<&ScalarField> = g.comps().iter().collect();
    let vals = OffGrid::new(&refs).eval(&pts);
    let composed = VectorField::new(
        vals.into_iter().map(|v| ScalarField::from_vec(grid, v).expect("sized")).collect(),
    )
    .expect("d");
    match phi.inverse_jacobian_ref() {
        None => composed,
        Some(m) => m.apply(&composed),
    }
}

/// `(DPhi)^{-1} (G o Phi)`; divergence-free whenever `G` is.
pub fn pullback_divfree(g: &VectorField, phi: &DiffeoSnapshot) -> VectorField {
    if phi.is_identity() && g.grid() == phi.grid() {
        return g.clone();
    }
    pullback_scaled(g, 1.0, phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct CofactorCheck {
    pub k: u32,
    pub lhs: f64,
    pub jacobian_norm: f64,
    pub constant: f64,
    pub bound: f64,
    pub fitted_constant: f64,
    pub holds: bool,
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

/// Bound on `D^k (DPhi)^{-1}` by a power of the `C^k` norm of `DPhi`.
///
/// `k = 0` uses operator norms and constant 1; `k = 1` uses entrywise maxima
/// and the cofactor-expansion constant `(d-1) (d-1)!`.
pub fn cofactor_norm_check(phi: &DiffeoSnapshot, k: u32) -> Result<CofactorCheck> {
    let d = phi.grid().d();
    let p = (d - 1) as i32;
    let (lhs, jn, constant) = match k {
        0 => (phi.inverse_jacobian_norm(), phi.jacobian_norm(), 1.0),
        1 => {
            let jac = phi.jacobian();
            let inv = phi.inverse_jacobian();
            let deriv_max = |m: &MatrixField| {
                m.entries()
                    .iter()
                    .map(|e| gradient(e).comps().iter().fold(0.0f64, |a, c| a.max(c.max_abs())))
                    .fold(0.0f64, f64::max)
            };
            let lhs = deriv_max(&inv);
            let ck = jac.max_entry().max(deriv_max(&jac));
            (lhs, ck, (d - 1) as f64 * factorial(d - 1))
        }
        _ => return Err(Error::Parameter(format!("cofactor bound implemented for k <= 1, got {k}"))),
    };
    let rhs = jn.powi(p);
    let bound = constant * rhs;
    Ok(CofactorCheck {
        k,
        lhs,
        jacobian_norm: jn,
        constant,
        bound,
        fitted_constant: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        holds: lhs <= bound * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady(grid: Grid, n_t: usize, f: impl Fn(&[f64], usize) -> f64 + Copy) -> TimeField<VectorField> {
        let tg = TimeGrid::new(n_t).unwrap();
        TimeField::from_fn(tg, |_| VectorField::from_fn(grid, f))
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = Grid::new(3, 8).unwrap();
        let u = steady(g, 8, |_, _| 0.0);
        let phi = inverse_flow(&u, 4, (2, 6), FlowOptions::default()).unwrap();
        assert!(phi.is_identity());
        assert!(phi.snapshot(3).is_identity());
    }

    #[test]
    fn constant_velocity_translates() {
        let g = Grid::new(3, 8).unwrap();
        let c = [0.3, -0.2, 0.1];
        let u = steady(g, 8, move |_, a| c[a]);
        let phi = inverse_flow(&u, 4, (0, 8), FlowOptions::default()).unwrap();
        for k in 0..=8 {
            let dt = (4.0 - k as f64) / 8.0;
            let zero = VectorField::zeros(g);
            let disp = phi.displacement(k).unwrap_or(&zero);
            for a in 0..3 {
                assert!(disp.comp(a).data().iter().all(|v| (v - dt * c[a]).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn rejects_compressible_velocity() {
        let g = Grid::new(3, 8).unwrap();
        let u = steady(g, 8, |x, a| if a == 0 { (2.0 * std::f64::consts::PI * x[0]).sin() } else { 0.0 });
        assert!(matches!(inverse_flow(&u, 4, (2, 6), FlowOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn identity_cofactor_bound_is_tight() {
        let g = Grid::new(3, 8).unwrap();
        let c = cofactor_norm_check(&DiffeoSnapshot::identity(g), 0).unwrap();
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.bound, 1.0);
        assert!(c.holds);
    }
}
