//! Right inverses of the divergence: the standard `grad inverse_laplacian` and
//! an improved operator for oscillatory products `f (g_lambda o Phi)` that
//! gains a factor `1/lambda`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{pullback_scaled, DiffeoSnapshot};
use crate::interp::OffGrid;
use crate::norms::{ck, lp};
use crate::ops::{dilate_onto, dilate_vector_onto};
use crate::spectral::{divergence, gradient, std_antidiv_centered};

pub use crate::spectral::std_antidiv;

const MEASURE_TOLERANCE: f64 = 1e-5;

fn check_dilation(g_n: usize, lambda: usize, n: usize) -> Result<()> {
    if lambda == 0 || n % lambda != 0 || (lambda * g_n) % n != 0 {
        return Err(Error::Resolution(format!(
            "oscillation {lambda} is incompatible with lattices n = {n} (field) and n = {g_n} (profile)"
        )));
    }
    Ok(())
}

fn check_measure_preserving(phi: &DiffeoSnapshot) -> Result<()> {
    let r = phi.det_residual();
    if r > MEASURE_TOLERANCE {
        return Err(Error::Precondition(format!("flow map is not measure preserving (|det - 1| = {r:.3e})")));
    }
    Ok(())
}

/// `g_lambda o Phi` sampled on the lattice of `phi`.
pub fn compose_dilated(g: &ScalarField, lambda: usize, phi: &DiffeoSnapshot) -> Result<ScalarField> {
    let grid = phi.grid();
    check_dilation(g.grid().n(), lambda, grid.n())?;
    if phi.is_identity() {
        return dilate_onto(g, lambda, grid);
    }
    let pts = phi.points(lambda as f64);
    let v = OffGrid::new(&[g]).eval(&pts).pop().expect("one field");
    ScalarField::from_vec(grid, v)
}

/// The oscillatory half of a product: `g_lambda o Phi` and `(DPhi)^{-1} (G_lambda o Phi)` with `G = grad inverse_laplacian g`.
#[derive(Debug, Clone)]
pub struct OscillatoryFactor {
    pub lambda: usize,
    pub composed: ScalarField,
    pub potential: VectorField,
}

impl OscillatoryFactor {
    pub fn new(g: &ScalarField, lambda: usize, phi: &DiffeoSnapshot) -> Result<Self> {
        let scale = g.max_abs().max(1.0);
        if g.mean().abs() > 1e-9 * scale {
            return Err(Error::Precondition(format!("profile mean {:.3e} is not zero", g.mean())));
        }
        check_measure_preserving(phi)?;
        let big_g = std_antidiv_centered(g);
        Self::from_parts(g, &big_g, lambda, phi)
    }

    /// Build from a profile and its precomputed `grad inverse_laplacian`.
    pub fn from_parts(g: &ScalarField, big_g: &VectorField, lambda: usize, phi: &DiffeoSnapshot) -> Result<Self> {
        let grid = phi.grid();
        check_dilation(g.grid().n(), lambda, grid.n())?;
        if phi.is_identity() {
            Ok(OscillatoryFactor {
                lambda,
                composed: dilate_onto(g, lambda, grid)?,
                potential: dilate_vector_onto(big_g, lambda, grid)?,
            })
        } else {
            Ok(OscillatoryFactor {
                lambda,
                composed: compose_dilated(g, lambda, phi)?,
                potential: pullback_scaled(big_g, lambda as f64, phi),
            })
        }
    }

    /// Build from an already composed profile value and potential.
    pub fn from_composed(lambda: usize, composed: ScalarField, potential: VectorField) -> Self {
        OscillatoryFactor { lambda, composed, potential }
    }
}

/// Accumulates `sum_m c_m R(f_m (g_m)_{lambda_m} o Phi_m)` so the whole sum
/// costs a single inverse Laplacian.
pub struct ImprovedAccumulator {
    direct: VectorField,
    inner: ScalarField,
    target: ScalarField,
}

impl ImprovedAccumulator {
    pub fn new(grid: crate::grid::Grid) -> Self {
        ImprovedAccumulator {
            direct: VectorField::zeros(grid),
            inner: ScalarField::zeros(grid),
            target: ScalarField::zeros(grid),
        }
    }

    pub fn add(&mut self, coef: f64, f: &ScalarField, grad_f: &VectorField, factor: &OscillatoryFactor) {
        if coef == 0.0 {
            return;
        }
        let c = coef / factor.lambda as f64;
        self.direct.axpy(1.0, &factor.potential.scale_by(&f.scale(c)));
        self.inner.axpy(c, &grad_f.dot(&factor.potential));
        self.target.axpy(1.0, &f.scale(coef).mul(&factor.composed));
    }

    /// The antidivergence and its target `sum c f g_lambda o Phi - mean`.
    /// The constant mean of the direct term is removed; the divergence does not see it.
    pub fn finish(self) -> (VectorField, ScalarField) {
        let corr = std_antidiv_centered(&self.inner);
        let direct = self.direct.map_comps(|c| c.subtract_mean());
        (direct.sub(&corr), self.target.subtract_mean())
    }

    /// [`finish`](Self::finish) plus `grad inverse_laplacian` of the lattice residual
    /// `target - div u`, which is nonzero only through unresolved (Nyquist) content of the profiles.
    pub fn finish_closed(self) -> ClosedAntidiv {
        let (improved, target) = self.finish();
        let closure = std_antidiv_centered(&target.sub(&divergence(&improved)));
        let residual = divergence(&improved.add(&closure)).sub(&target).max_abs();
        ClosedAntidiv { improved, closure, target, residual }
    }
}

pub struct ClosedAntidiv {
    pub improved: VectorField,
    pub closure: VectorField,
    pub target: ScalarField,
    /// `|div(improved + closure) - target|_inf`
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AntidivLedger {
    pub lambda: usize,
    pub f_c1: f64,
    pub g_l1: f64,
    pub g_c0: f64,
    pub jacobian_c0: f64,
    pub u_l1: f64,
    pub u_mean: f64,
}

#[derive(Debug, Clone)]
pub struct AntidivResult {
    pub u: VectorField,
    pub residual: f64,
    pub target_c0: f64,
    pub ledger: AntidivLedger,
}

fn finish_result(
    u: VectorField,
    target: ScalarField,
    lambda: usize,
    f_c1: f64,
    g: (f64, f64),
    jac: f64,
) -> AntidivResult {
    let residual = divergence(&u).sub(&target).max_abs();
    let u_l1 = crate::norms::lp_vec(&u, 1.0);
    let u_mean = u.mean().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    AntidivResult {
        residual,
        target_c0: target.max_abs(),
        ledger: AntidivLedger { lambda, f_c1, g_l1: g.0, g_c0: g.1, jacobian_c0: jac, u_l1, u_mean },
        u,
    }
}

/// Improved antidivergence of `f (g_lambda o Phi) - mean` for scalar `f`, `g`.
pub fn improved_antidiv(
    f: &ScalarField,
    g: &ScalarField,
    lambda: usize,
    phi: &DiffeoSnapshot,
) -> Result<AntidivResult> {
    let factor = OscillatoryFactor::new(g, lambda, phi)?;
    let mut acc = ImprovedAccumulator::new(phi.grid());
    acc.add(1.0, f, &gradient(f), &factor);
    let (u, target) = acc.finish();
    Ok(finish_result(u, target, lambda, ck(f, 1), (lp(g, 1.0), g.max_abs()), phi.jacobian_norm()))
}

/// Vector variant: `f . (g_lambda o Phi) - mean`, summed componentwise.
pub fn improved_antidiv_vec(
    f: &VectorField,
    g: &VectorField,
    lambda: usize,
    phi: &DiffeoSnapshot,
) -> Result<AntidivResult> {
    let mut acc = ImprovedAccumulator::new(phi.grid());
    let mut f_c1 = 0.0f64;
    for (fc, gc) in f.comps().iter().zip(g.comps()) {
        let factor = OscillatoryFactor::new(gc, lambda, phi)?;
        acc.add(1.0, fc, &gradient(fc), &factor);
        f_c1 = f_c1.max(ck(fc, 1));
    }
    let (u, target) = acc.finish();
    let gn = g.pointwise_norm();
    Ok(finish_result(u, target, lambda, f_c1, (lp(&gn, 1.0), gn.max_abs()), phi.jacobian_norm()))
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderGap {
    pub lambda: usize,
    pub p: f64,
    pub lhs: f64,
    pub product: f64,
    pub gap: f64,
    /// `lambda^{-1/p} |f|_{C^1} |DPhi|^{d-1} |g|_{L^p}`; the bound is `product + C_p * unit`.
    pub unit: f64,
}

impl HolderGap {
    pub fn bound(&self, c_p: f64) -> f64 {
        self.product + c_p * self.unit
    }
}

pub fn holder_gap(
    f: &ScalarField,
    g: &ScalarField,
    lambda: usize,
    p: f64,
    phi: &DiffeoSnapshot,
) -> Result<HolderGap> {
    let composed = compose_dilated(g, lambda, phi)?;
    let lhs = lp(&f.mul(&composed), p);
    let product = lp(f, p) * lp(g, p);
    let d = f.grid().d();
    let unit = (lambda as f64).powf(-1.0 / p) * ck(f, 1) * phi.jacobian_norm().powi(d as i32 - 1) * lp(g, p);
    Ok(HolderGap { lambda, p, lhs, product, gap: lhs - product, unit })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanOscillation {
    pub lambda: usize,
    pub lhs: f64,
    pub bound: f64,
}

pub fn mean_osc_bound(
    f: &ScalarField,
    g: &ScalarField,
    lambda: usize,
    phi: &DiffeoSnapshot,
) -> Result<MeanOscillation> {
    let scale = g.max_abs().max(1.0);
    if g.mean().abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!("profile mean {:.3e} is not zero", g.mean())));
    }
    let composed = compose_dilated(g, lambda, phi)?;
    let lhs = f.mul(&composed).mean().abs();
    let d = f.grid().d();
    let bound = (d as f64).sqrt() * ck(f, 1) * phi.jacobian_norm().powi(d as i32 - 1) * lp(g, 1.0)
        / lambda as f64;
    Ok(MeanOscillation { lambda, lhs, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn constant_f_collapses_to_dilated_potential() {
        let fine = Grid::new(3, 16).unwrap();
        let coarse = Grid::new(3, 8).unwrap();
        let g = ScalarField::from_fn(coarse, |x| (2.0 * PI * x[1]).sin() * (2.0 * PI * x[2]).cos());
        let f = ScalarField::constant(fine, 1.0);
        let res = improved_antidiv(&f, &g, 2, &DiffeoSnapshot::identity(fine)).unwrap();
        let expect = dilate_vector_onto(&std_antidiv(&g).unwrap(), 2, fine).unwrap().scale(0.5);
        assert!(res.u.sub(&expect).max_abs() < 1e-14);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn rejects_mean_and_bad_lambda() {
        let g8 = Grid::new(3, 8).unwrap();
        let f = ScalarField::constant(g8, 1.0);
        let id = DiffeoSnapshot::identity(g8);
        assert!(matches!(improved_antidiv(&f, &ScalarField::constant(g8, 1.0), 2, &id), Err(Error::Precondition(_))));
        let g = ScalarField::from_fn(g8, |x| (2.0 * PI * x[0]).cos());
        assert!(matches!(improved_antidiv(&f, &g, 3, &id), Err(Error::Resolution(_))));
    }

    #[test]
    fn constant_f_has_no_holder_gap() {
        let g16 = Grid::new(3, 16).unwrap();
        let f = ScalarField::constant(g16, 2.0);
        let g = ScalarField::from_fn(Grid::new(3, 8).unwrap(), |x| (2.0 * PI * x[0]).cos() + 0.3 * (2.0 * PI * x[2]).sin());
        let h = holder_gap(&f, &g, 2, 1.0, &DiffeoSnapshot::identity(g16)).unwrap();
        assert!(h.gap.abs() < 1e-12);
        let m = mean_osc_bound(&f, &g, 2, &DiffeoSnapshot::identity(g16)).unwrap();
        assert!(m.lhs < 1e-15);
    }
}
