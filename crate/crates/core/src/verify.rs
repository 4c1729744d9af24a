//! Numerical verification batteries: the Mikado contract and the calculus lemmas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::antidiv::{holder_gap, improved_antidiv, mean_osc_bound, std_antidiv};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::fit::{loglog_fit, Fit};
use crate::flow::{cofactor_norm_check, inverse_flow, pullback_divfree, DiffeoSnapshot, FlowOptions};
use crate::grid::Grid;
use crate::mikado::{build_family, measure_constants, MikadoConstants};
use crate::norms::{ck, ck_vec, lp, lp_vec};
use crate::ops::compose;
use crate::spectral::divergence;
use crate::time::{TimeField, TimeGrid};

use std::f64::consts::PI;

/// One pass/fail line: `value <= limit`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub lemma: &'static str,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(lemma: &'static str, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { lemma, name: name.into(), value, limit, passed: value <= limit }
    }

    /// `|value - target| <= tol`, stored as the deviation.
    pub fn band(lemma: &'static str, name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check { lemma, name: name.into(), value: (value - target).abs(), limit: tol, passed: (value - target).abs() <= tol }
    }
}

/// Zero-mean trigonometric polynomial with `modes` random wavevectors in `[-kmax, kmax]^d`.
pub fn random_field(grid: Grid, kmax: i64, modes: usize, rng: &mut impl Rng) -> ScalarField {
    let d = grid.d();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let k: Vec<f64> = loop {
                let k: Vec<i64> = (0..d).map(|_| rng.gen_range(-kmax..=kmax)).collect();
                if k.iter().any(|&v| v != 0) {
                    break k.into_iter().map(|v| v as f64).collect();
                }
            };
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(k, a, ph)| a * (2.0 * PI * k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + ph).cos())
            .sum()
    })
}

/// `f` plus a constant offset, so the product lemmas see nonzero means too.
fn shifted(f: ScalarField, c: f64) -> ScalarField {
    f.map(|v| v + c)
}

/// Steady cyclic shear `amp (sin 2 pi x_2, sin 2 pi x_3, sin 2 pi x_1)` (indices mod `d`); divergence free.
pub fn cyclic_shear(grid: Grid, amp: f64) -> VectorField {
    let d = grid.d();
    VectorField::from_fn(grid, |x, a| amp * (2.0 * PI * x[(a + 1) % d]).sin())
}

/// Inverse flow of the steady cyclic shear, anchored at `t = 1/2`, sampled at `t = 0`.
pub fn cyclic_flow_map(grid: Grid, amp: f64, n_t: usize) -> Result<DiffeoSnapshot> {
    let times = TimeGrid::new(n_t)?;
    let u = cyclic_shear(grid, amp);
    let u0 = TimeField::from_fn(times, |_| u.clone());
    let phi = inverse_flow(&u0, n_t / 2, (0, n_t), FlowOptions::default())?;
    Ok(phi.snapshot(0))
}

/// Exact inverse flow of `(sin 2 pi x_2, 0, ..)` after time `s`: `x - s sin(2 pi x_2) e_1`.
pub fn shear_map(grid: Grid, s: f64) -> DiffeoSnapshot {
    DiffeoSnapshot::from_displacement(VectorField::from_fn(grid, |x, a| {
        if a == 0 {
            -s * (2.0 * PI * x[1]).sin()
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct MikadoRow {
    pub mu: f64,
    pub axis: usize,
    pub theta_mean: f64,
    pub w_mean: f64,
    /// `max_a |mean(Theta W_a) - delta_{a j}|`
    pub theta_w_mean_error: f64,
    pub div_w: f64,
    pub w_c1: f64,
    pub div_theta_w: f64,
    pub theta_w_c1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub field: &'static str,
    pub k: u32,
    pub r: String,
    pub expected: f64,
    pub fit: Fit,
}

#[derive(Debug, Clone, Serialize)]
pub struct MikadoReport {
    pub d: usize,
    pub n: usize,
    pub mus: Vec<f64>,
    pub rows: Vec<MikadoRow>,
    pub cross_products_zero: bool,
    pub scaling: Vec<ScalingFit>,
    pub constants: MikadoConstants,
    pub checks: Vec<Check>,
}

impl MikadoReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Moments, divergences, supports and `L^r` scaling of the families at every `mu`.
pub fn mikado_contract(d: usize, n: usize, mus: &[f64]) -> Result<MikadoReport> {
    if mus.is_empty() {
        return Err(Error::Parameter("need at least one concentration".into()));
    }
    let grid = Grid::new(d, n)?;
    let exps = (d as i32 - 1, 0);
    let mut rows = Vec::new();
    let mut cross = true;
    let mut all = Vec::new();
    for &mu in mus {
        let fam = build_family(mu, grid, exps)?;
        for (j, p) in fam.iter().enumerate() {
            let tw = p.w.scale_by(&p.theta);
            let means = tw.mean();
            let err = means
                .iter()
                .enumerate()
                .map(|(a, m)| (m - if a == j { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            rows.push(MikadoRow {
                mu,
                axis: j,
                theta_mean: p.theta.mean().abs(),
                w_mean: p.w.mean().iter().fold(0.0f64, |m, v| m.max(v.abs())),
                theta_w_mean_error: err,
                div_w: divergence(&p.w).max_abs(),
                w_c1: ck_vec(&p.w, 1),
                div_theta_w: divergence(&tw).max_abs(),
                theta_w_c1: ck_vec(&tw, 1),
            });
            for (k, q) in fam.iter().enumerate() {
                if k != j {
                    cross &= p.theta.data().iter().zip(q.w_axis().data()).all(|(t, w)| t * w == 0.0);
                }
            }
        }
        all.extend(fam);
    }
    let constants = measure_constants(&all)?;
    let mut scaling = Vec::new();
    for field in ["theta", "w"] {
        for k in [0u32, 1] {
            for r in ["1", "2", "inf"] {
                let sel: Vec<_> =
                    constants.rows.iter().filter(|s| s.field == field && s.k == k && s.r == r && s.axis == 0).collect();
                let xs: Vec<f64> = sel.iter().map(|s| s.mu).collect();
                let ys: Vec<f64> = sel.iter().map(|s| s.norm).collect();
                let name = if field == "theta" { "theta" } else { "w" };
                scaling.push(ScalingFit {
                    field: name,
                    k,
                    r: r.into(),
                    expected: sel[0].exponent,
                    fit: loglog_fit("norm", &xs, &ys),
                });
            }
        }
    }
    let worst = |f: fn(&MikadoRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let mut checks = vec![
        Check::new("mikado", "|mean Theta|", worst(|r| r.theta_mean), 1e-8),
        Check::new("mikado", "|mean W|", worst(|r| r.w_mean), 1e-8),
        Check::new("mikado", "|mean Theta W - e_j|", worst(|r| r.theta_w_mean_error), 1e-6),
        Check::new("mikado", "|div W| / |W|_C1", worst(|r| r.div_w / r.w_c1), 1e-6),
        Check::new("mikado", "|div Theta W| / |Theta W|_C1", worst(|r| r.div_theta_w / r.theta_w_c1), 1e-6),
        Check::new("mikado", "cross-direction products nonzero", if cross { 0.0 } else { 1.0 }, 0.0),
    ];
    if mus.len() >= 2 {
        for s in &scaling {
            let slope = s.fit.slope.unwrap_or(f64::NAN);
            checks.push(Check::band(
                "mikado",
                format!("slope of |D^{} {}|_{} (expected {})", s.k, s.field, s.r, s.expected),
                slope,
                s.expected,
                0.15,
            ));
        }
    }
    Ok(MikadoReport { d, n, mus: mus.to_vec(), rows, cross_products_zero: cross, scaling, constants, checks })
}

/// Sizes and seeds of the lemma battery.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryOptions {
    pub seed: u64,
    pub n: usize,
    pub std_trials: usize,
    pub improved_trials: usize,
    pub product_trials: usize,
    pub shear_amplitude: f64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions { seed: 7, n: 32, std_trials: 50, improved_trials: 20, product_trials: 100, shear_amplitude: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFit {
    pub name: String,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Fit,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub options: BatteryOptions,
    /// largest measured `gap / unit` for `p = 1, 2`; checked against [`holder_constant`]
    pub holder_constants: [f64; 2],
    /// largest `|grad inverse_laplacian f|_{L^p} / |f|_{L^p}` on two independent batches, `p = 1, 2`
    pub std_antidiv_constants: [[f64; 2]; 2],
    pub sweeps: Vec<SweepFit>,
    pub checks: Vec<Check>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn lemma(&self, lemma: &str) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.lemma == lemma).collect()
    }
}

fn std_antidiv_checks(o: &BatteryOptions, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<[[f64; 2]; 2]> {
    let grid = Grid::new(3, 16)?;
    let mut worst = 0.0f64;
    for _ in 0..o.std_trials {
        let f = random_field(grid, 6, 8, rng);
        let u = std_antidiv(&f)?;
        worst = worst.max(divergence(&u).sub(&f).max_abs() / f.max_abs());
    }
    // the ratio peaks on the lowest shell, so the constant batches draw single low modes
    let mut consts = [[0.0f64; 2]; 2];
    for t in 0..o.std_trials {
        let f = random_field(grid, 1, 1, rng);
        let u = std_antidiv(&f)?;
        for (i, p) in [1.0, 2.0].into_iter().enumerate() {
            consts[t % 2][i] = consts[t % 2][i].max(lp_vec(&u, p) / lp(&f, p));
        }
    }
    checks.push(Check::new("std_antidiv", format!("relative |div grad inverse_laplacian f - f| over {} fields", o.std_trials), worst, 1e-10));
    for (i, p) in ["1", "2"].iter().enumerate() {
        let (a, b) = (consts[0][i], consts[1][i]);
        checks.push(Check::new("std_antidiv", format!("C_{p} batch spread"), (a - b).abs() / a.max(b), 0.05));
    }
    Ok(consts)
}

fn improved_checks(o: &BatteryOptions, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>, sweeps: &mut Vec<SweepFit>) -> Result<()> {
    let grid = Grid::new(3, o.n)?;
    let flow = cyclic_flow_map(grid, o.shear_amplitude, 16)?;
    let mut worst = 0.0f64;
    let mut worst_mean = 0.0f64;
    for t in 0..o.improved_trials {
        let lambda = [2usize, 4][t % 2];
        let phi = match t % 4 {
            0 | 1 => DiffeoSnapshot::identity(grid),
            2 => shear_map(grid, 0.1),
            _ => flow.clone(),
        };
        let f = shifted(random_field(grid, 2, 4, rng), rng.gen_range(-1.0..1.0));
        let g = random_field(Grid::new(3, o.n / lambda)?, 1, 4, rng);
        let res = improved_antidiv(&f, &g, lambda, &phi)?;
        worst = worst.max(res.residual / (ck(&f, 1) * g.max_abs()));
        worst_mean = worst_mean.max(res.ledger.u_mean);
    }
    checks.push(Check::new(
        "improved_antidiv",
        format!("|div u - target| / (|f|_C1 |g|_C0) over {} cases (identity, shear and flow maps)", o.improved_trials),
        worst,
        1e-6,
    ));
    checks.push(Check::new("improved_antidiv", "|mean u|", worst_mean, 1e-10));

    // fixed f, g (on its own 8^3 lattice) and Phi = identity; the field lattice is 8 lambda
    let g = ScalarField::from_fn(Grid::new(3, 8)?, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
    let lambdas = [4usize, 8, 16, 32];
    let mut values = Vec::new();
    for &l in &lambdas {
        let fine = Grid::new(3, 8 * l)?;
        let f = ScalarField::from_fn(fine, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[2]).sin());
        values.push(improved_antidiv(&f, &g, l, &DiffeoSnapshot::identity(fine))?.ledger.u_l1);
    }
    let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
    let fit = loglog_fit("u_l1", &xs, &values);
    checks.push(Check::band("improved_antidiv", "slope of |u|_L1 in lambda", fit.slope.unwrap_or(f64::NAN), -1.0, 0.15));
    sweeps.push(SweepFit { name: "improved_antidiv_l1".into(), lambdas: xs, values, fit });
    Ok(())
}

/// Random `(f, g, lambda)` for the product lemmas; `g` lives on the coarse lattice.
fn product_case(grid: Grid, rng: &mut ChaCha8Rng, zero_mean_g: bool) -> Result<(ScalarField, ScalarField, usize)> {
    let lambda = [2usize, 4][rng.gen_range(0..2)];
    let f = shifted(random_field(grid, 2, 4, rng), rng.gen_range(-1.0..1.0));
    let g = random_field(Grid::new(grid.d(), grid.n() / lambda)?, 1, 3, rng);
    let g = if zero_mean_g { g } else { shifted(g, rng.gen_range(-1.0..1.0)) };
    Ok((f, g, lambda))
}

/// `(p d)^{1/p}`: cells of side `1/lambda` carry exact copies of `g`, and `|f|^p` oscillates
/// by at most `p |f|^{p-1} d |f|_{C^1} / lambda` across one, with `|f|_{C^1}` the largest partial.
pub fn holder_constant(p: f64, d: usize) -> f64 {
    (p * d as f64).powf(1.0 / p)
}

/// Returns the largest measured `gap / unit` for `p = 1, 2`.
fn holder_checks(o: &BatteryOptions, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>, sweeps: &mut Vec<SweepFit>) -> Result<[f64; 2]> {
    let grid = Grid::new(3, o.n)?;
    let flow = cyclic_flow_map(grid, o.shear_amplitude, 16)?;
    let mut fitted = [0.0f64; 2];
    for (label, use_flow) in [("identity", false), ("flow map", true)] {
        for (i, p) in [1.0, 2.0].into_iter().enumerate() {
            let c = holder_constant(p, grid.d());
            let mut fails = 0;
            for _ in 0..o.product_trials {
                let (f, g, lambda) = product_case(grid, rng, false)?;
                let phi = if use_flow { flow.clone() } else { DiffeoSnapshot::identity(grid) };
                let h = holder_gap(&f, &g, lambda, p, &phi)?;
                fitted[i] = fitted[i].max(h.gap / h.unit);
                if h.lhs > h.bound(c) {
                    fails += 1;
                }
            }
            checks.push(Check::new(
                "improved_holder",
                format!("p = {p}, {label}: trials violating the bound (of {})", o.product_trials),
                fails as f64,
                0.0,
            ));
        }
    }
    // decay of the gap for fixed f (sign changing, every mode present) and g
    let g = ScalarField::from_fn(Grid::new(3, 8)?, |x| 1.0 + (2.0 * PI * x[0]).cos());
    let lambdas = [4usize, 8, 16, 32];
    for p in [1.0, 2.0] {
        let mut values = Vec::new();
        for &l in &lambdas {
            let fine = Grid::new(3, 8 * l)?;
            let f = ScalarField::from_fn(fine, |x| {
                (2.0 * PI * x[0]).sin() + 0.4 / (1.5 + (2.0 * PI * x[0]).cos()) + 0.2 * (2.0 * PI * x[1]).cos()
            });
            values.push(holder_gap(&f, &g, l, p, &DiffeoSnapshot::identity(fine))?.gap.abs());
        }
        let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
        let fit = loglog_fit("gap", &xs, &values);
        checks.push(Check::band(
            "improved_holder",
            format!("p = {p}: slope of the gap in lambda"),
            fit.slope.unwrap_or(f64::NAN),
            -1.0 / p,
            0.15,
        ));
        sweeps.push(SweepFit { name: format!("holder_gap_p{p}"), lambdas: xs, values, fit });
    }
    Ok(fitted)
}

fn mean_value_checks(o: &BatteryOptions, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>, sweeps: &mut Vec<SweepFit>) -> Result<()> {
    let grid = Grid::new(3, o.n)?;
    let flow = cyclic_flow_map(grid, o.shear_amplitude, 16)?;
    for (label, use_flow) in [("identity", false), ("flow map", true)] {
        let mut fails = 0;
        for _ in 0..o.product_trials {
            let (f, g, lambda) = product_case(grid, rng, true)?;
            let phi = if use_flow { flow.clone() } else { DiffeoSnapshot::identity(grid) };
            let m = mean_osc_bound(&f, &g, lambda, &phi)?;
            if m.lhs > m.bound {
                fails += 1;
            }
        }
        checks.push(Check::new(
            "mean_value",
            format!("{label}: trials violating the bound (of {})", o.product_trials),
            fails as f64,
            0.0,
        ));
    }
    // f with every Fourier mode present, so the mean does not vanish identically
    let g = ScalarField::from_fn(Grid::new(3, 8)?, |x| (2.0 * PI * (x[0] + x[1])).cos());
    let lambdas = [4usize, 8, 16, 32];
    let mut values = Vec::new();
    for &l in &lambdas {
        let fine = Grid::new(3, 8 * l)?;
        let f = ScalarField::from_fn(fine, |x| 1.0 / (1.5 + (2.0 * PI * (x[0] + x[1])).cos()));
        values.push(mean_osc_bound(&f, &g, l, &DiffeoSnapshot::identity(fine))?.lhs);
    }
    let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
    let fit = loglog_fit("mean", &xs, &values);
    checks.push(Check::new("mean_value", "slope of |mean f g_lambda| in lambda (at most -1 + 0.15)", fit.slope.unwrap_or(f64::NAN), -0.85));
    sweeps.push(SweepFit { name: "mean_oscillation".into(), lambdas: xs, values, fit });
    Ok(())
}

fn flow_checks(o: &BatteryOptions, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>, sweeps: &mut Vec<SweepFit>) -> Result<()> {
    let grid = Grid::new(3, o.n)?;
    let opts = FlowOptions::default();

    // measure preservation along a nonlinear flow
    let times = TimeGrid::new(16)?;
    let u = cyclic_shear(grid, 0.2);
    let u0 = TimeField::from_fn(times, |_| u.clone());
    let phi = inverse_flow(&u0, 8, (0, 16), opts)?;
    let det = (0..=16).map(|k| phi.snapshot(k).det_residual()).fold(0.0, f64::max);
    checks.push(Check::new("flow", "max |det DPhi - 1|", det, 1e-5));
    let snap = phi.snapshot(0);

    // steady shear against its closed form
    let sh = VectorField::from_fn(grid, |x, a| if a == 0 { (2.0 * PI * x[1]).sin() } else { 0.0 });
    let sh0 = TimeField::from_fn(times, |_| sh.clone());
    let shear = inverse_flow(&sh0, 8, (0, 16), opts)?;
    let mut err = 0.0f64;
    for k in 0..=16 {
        let exact = shear_map(grid, times.t(k) - 0.5);
        let zero = VectorField::zeros(grid);
        let got = shear.displacement(k).unwrap_or(&zero);
        err = err.max(got.sub(exact.displacement().unwrap_or(&zero)).max_abs());
    }
    checks.push(Check::new("flow", "shear flow map against the closed form", err, 1e-6));

    // pullback divergence identity
    let g = VectorField::new((0..3).map(|_| random_field(grid, 2, 4, rng)).collect())?;
    let lhs = divergence(&pullback_divfree(&g, &snap));
    let rhs = compose(&divergence(&g), snap.displacement().expect("nontrivial"), 1.0);
    checks.push(Check::new(
        "flow",
        "|div((DPhi)^-1 G o Phi) - (div G) o Phi| / |G|_C1",
        lhs.sub(&rhs).max_abs() / ck_vec(&g, 1),
        1e-5,
    ));

    // norms under measure-preserving maps
    let f = random_field(grid, 2, 4, rng);
    let fphi = compose(&f, snap.displacement().expect("nontrivial"), 1.0);
    checks.push(Check::new("flow", "relative |f o Phi|_L2 - |f|_L2", (lp(&fphi, 2.0) - lp(&f, 2.0)).abs() / lp(&f, 2.0), 1e-6));

    // cofactor bounds
    for k in [0u32, 1] {
        let c = cofactor_norm_check(&snap, k)?;
        checks.push(Check::new("flow", format!("|D^{k} (DPhi)^-1| over its cofactor bound"), c.lhs / c.bound, 1.0 + 1e-12));
    }

    // refinement: time-dependent shear, closed form x - (S(t) - S(1/2)) sin(2 pi x_2) e_1, S = sin(pi t)/pi
    let small = Grid::new(3, 8)?;
    let steps = [8usize, 16, 32, 64];
    let mut errs = Vec::new();
    for &n_t in &steps {
        let tg = TimeGrid::new(n_t)?;
        let field = TimeField::from_fn(tg, |k| {
            let c = (PI * tg.t(k)).cos();
            VectorField::from_fn(small, move |x, a| if a == 0 { c * (2.0 * PI * x[1]).sin() } else { 0.0 })
        });
        let phi = inverse_flow(&field, n_t / 2, (0, n_t), opts)?;
        let s = |t: f64| (PI * t).sin() / PI;
        let mut e = 0.0f64;
        let zero = VectorField::zeros(small);
        for k in 0..=n_t {
            let exact = shear_map(small, s(tg.t(k)) - s(0.5));
            e = e.max(phi.displacement(k).unwrap_or(&zero).sub(exact.displacement().unwrap_or(&zero)).max_abs());
        }
        errs.push(e);
    }
    let xs: Vec<f64> = steps.iter().map(|&n| n as f64).collect();
    let fit = loglog_fit("error", &xs, &errs);
    checks.push(Check::band("flow", "refinement order in dt", -fit.slope.unwrap_or(f64::NAN), 4.0, 0.3));
    sweeps.push(SweepFit { name: "flow_refinement".into(), lambdas: xs, values: errs, fit });
    Ok(())
}

/// The calculus lemmas: antidivergences, improved Holder, mean value, flow maps.
pub fn lemma_battery(o: &BatteryOptions) -> Result<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut checks = Vec::new();
    let mut sweeps = Vec::new();
    let std_antidiv_constants = std_antidiv_checks(o, &mut rng, &mut checks)?;
    improved_checks(o, &mut rng, &mut checks, &mut sweeps)?;
    let holder_constants = holder_checks(o, &mut rng, &mut checks, &mut sweeps)?;
    mean_value_checks(o, &mut rng, &mut checks, &mut sweeps)?;
    flow_checks(o, &mut rng, &mut checks, &mut sweeps)?;
    Ok(LemmaReport { options: o.clone(), holder_constants, std_antidiv_constants, sweeps, checks })
}
