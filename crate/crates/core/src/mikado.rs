//! Mikado densities and fields: concentrated tubes along coordinate
//! directions with `mean(Theta) = 0`, `mean(W) = 0` and `mean(Theta W) = e_j`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::norms::lp;
use crate::quadrature::integrate;

/// Support radius of the profile in units of `1/mu`.
pub const SUPPORT_RADIUS: f64 = 0.5;

fn bump(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - rho * rho)).exp()
    }
}

fn bump_derivative(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        let q = 1.0 - rho * rho;
        bump(rho) * (-2.0 * rho / (q * q))
    }
}

/// Surface area of the unit sphere in `R^m`.
fn sphere_area(m: usize) -> f64 {
    // 2 pi^(m/2) / Gamma(m/2), Gamma by recursion from 1 or 1/2
    let half = m as f64 / 2.0;
    let mut gamma = if m % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if m % 2 == 0 { 1.0 } else { 0.5 };
    while x < half - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

/// Radial profile `phi(y) = c (1 - s rho^2) exp(-1/(1 - rho^2))`, `rho = |y| / r0`,
/// on `R^(d-1)`, with `s` fixing `int phi = 0` and `c` fixing `int phi^2 = 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MikadoProfile {
    pub d: usize,
    pub shape: f64,
    pub amplitude: f64,
}

impl MikadoProfile {
    pub fn new(d: usize) -> Self {
        let m = d - 1;
        let rad = |f: &dyn Fn(f64) -> f64| integrate(|r| f(r) * r.powi(m as i32 - 1), 0.0, 1.0, 64, 16);
        let s = rad(&bump) / rad(&|r| r * r * bump(r));
        let sq = rad(&|r| ((1.0 - s * r * r) * bump(r)).powi(2));
        let c = 1.0 / (sphere_area(m) * SUPPORT_RADIUS.powi(m as i32) * sq).sqrt();
        MikadoProfile { d, shape: s, amplitude: c }
    }

    /// `phi` at distance `r` from the axis.
    pub fn value(&self, r: f64) -> f64 {
        let rho = r / SUPPORT_RADIUS;
        self.amplitude * (1.0 - self.shape * rho * rho) * bump(rho)
    }

    /// `d phi / d r`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let rho = r / SUPPORT_RADIUS;
        let inner = -2.0 * self.shape * rho * bump(rho) + (1.0 - self.shape * rho * rho) * bump_derivative(rho);
        self.amplitude * inner / SUPPORT_RADIUS
    }

    fn radial_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let m = self.d - 1;
        sphere_area(m)
            * integrate(|r| f(r) * r.powi(m as i32 - 1), 0.0, SUPPORT_RADIUS, 64, 16)
    }

    pub fn integral(&self) -> f64 {
        self.radial_integral(|r| self.value(r))
    }

    pub fn integral_sq(&self) -> f64 {
        self.radial_integral(|r| self.value(r).powi(2))
    }

    pub fn integral_abs(&self) -> f64 {
        self.radial_integral(|r| self.value(r).abs())
    }
}

fn periodic(z: f64) -> f64 {
    z - z.round()
}

/// Transverse offset of the tube axis for direction `axis` (0-based).
pub fn tube_offset(d: usize, axis: usize) -> Vec<f64> {
    let c = (axis + 1) as f64 / (2.0 * d as f64);
    (0..d).map(|a| if a == axis { 0.0 } else { c }).collect()
}

/// Analytic description of one tube, with lattice-calibrated profile constants.
#[derive(Debug, Clone, Serialize)]
pub struct MikadoShape {
    pub d: usize,
    pub axis: usize,
    pub mu: f64,
    pub a: i32,
    pub b: i32,
    /// radial correction and amplitude after lattice calibration
    pub shape: f64,
    pub amplitude: f64,
    pub offset: Vec<f64>,
}

impl MikadoShape {
    fn distance(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut r2 = 0.0;
        let mut dir = vec![0.0; self.d];
        for a in 0..self.d {
            if a != self.axis {
                let z = periodic(x[a] - self.offset[a]);
                dir[a] = z;
                r2 += z * z;
            }
        }
        (r2.sqrt(), dir)
    }

    /// Calibrated profile at scaled distance `r = mu * dist`.
    fn profile(&self, r: f64) -> f64 {
        let rho = r / SUPPORT_RADIUS;
        self.amplitude * (1.0 - self.shape * rho * rho) * bump(rho)
    }

    fn profile_derivative(&self, r: f64) -> f64 {
        let rho = r / SUPPORT_RADIUS;
        let inner = -2.0 * self.shape * rho * bump(rho) + (1.0 - self.shape * rho * rho) * bump_derivative(rho);
        self.amplitude * inner / SUPPORT_RADIUS
    }

    /// `(Theta(x), W_axis(x))` at any point of the torus.
    pub fn eval(&self, x: &[f64]) -> (f64, f64) {
        let (dist, _) = self.distance(x);
        let p = self.profile(self.mu * dist);
        (self.mu.powi(self.a) * p, self.mu.powi(self.b) * p)
    }

    /// Gradient of the bare profile term `phi(mu dist(x))`.
    pub fn profile_gradient(&self, x: &[f64], out: &mut [f64]) {
        let (dist, dir) = self.distance(x);
        out.iter_mut().for_each(|v| *v = 0.0);
        if dist == 0.0 || self.mu * dist >= SUPPORT_RADIUS {
            return;
        }
        let g = self.profile_derivative(self.mu * dist) * self.mu / dist;
        for a in 0..self.d {
            out[a] = g * dir[a];
        }
    }

    pub fn theta_scale(&self) -> f64 {
        self.mu.powi(self.a)
    }

    pub fn w_scale(&self) -> f64 {
        self.mu.powi(self.b)
    }
}

/// A sampled Mikado density and field for one direction.
#[derive(Debug, Clone)]
pub struct MikadoPair {
    pub shape: MikadoShape,
    pub theta: ScalarField,
    pub w: VectorField,
}

impl MikadoPair {
    pub fn axis(&self) -> usize {
        self.shape.axis
    }

    pub fn mu(&self) -> f64 {
        self.shape.mu
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid()
    }

    /// Nonzero component of `W`.
    pub fn w_axis(&self) -> &ScalarField {
        self.w.comp(self.shape.axis)
    }

    pub fn theta_w(&self) -> ScalarField {
        self.theta.mul(self.w_axis())
    }

    fn sampled_gradient(&self, scale: f64) -> VectorField {
        let g = self.grid();
        let mut out = vec![vec![0.0; g.len()]; g.d()];
        let mut x = vec![0.0; g.d()];
        let mut grad = vec![0.0; g.d()];
        for i in 0..g.len() {
            g.point(i, &mut x);
            self.shape.profile_gradient(&x, &mut grad);
            for a in 0..g.d() {
                out[a][i] = scale * grad[a];
            }
        }
        VectorField::new(out.into_iter().map(|v| ScalarField::from_vec(g, v).expect("sized")).collect())
            .expect("d")
    }

    /// Analytic gradient of `Theta`, sampled.
    pub fn theta_gradient(&self) -> VectorField {
        self.sampled_gradient(self.shape.theta_scale())
    }

    /// Analytic gradient of the nonzero component of `W`, sampled.
    pub fn w_gradient(&self) -> VectorField {
        self.sampled_gradient(self.shape.w_scale())
    }

    /// Same construction with the profile multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> MikadoPair {
        let mut shape = self.shape.clone();
        shape.amplitude *= factor;
        MikadoPair { shape, theta: self.theta.scale(factor), w: self.w.scale(factor) }
    }
}

/// Build the pair for direction `axis` (0-based) at concentration `mu` with
/// scaling exponents `(a, b)`, `a + b = d - 1`.
pub fn build_mikado(axis: usize, mu: f64, grid: Grid, exponents: (i32, i32)) -> Result<MikadoPair> {
    let d = grid.d();
    let n = grid.n();
    let (a, b) = exponents;
    if axis >= d {
        return Err(Error::Parameter(format!("direction {axis} out of range for d = {d}")));
    }
    if a + b != d as i32 - 1 {
        return Err(Error::Parameter(format!("exponents ({a}, {b}) must sum to d - 1 = {}", d - 1)));
    }
    if mu <= 2.0 * d as f64 {
        return Err(Error::Parameter(format!("concentration {mu} must exceed 2d = {}", 2 * d)));
    }
    if (n as f64) < 4.0 * mu {
        return Err(Error::Resolution(format!("n = {n} does not resolve concentration {mu} (need n >= 4 mu)")));
    }
    let offset = tube_offset(d, axis);
    let continuous = MikadoProfile::new(d);
    let mut shape = MikadoShape {
        d,
        axis,
        mu,
        a,
        b,
        shape: continuous.shape,
        amplitude: 1.0,
        offset,
    };

    // cross-section sample: all lattice points with coordinate `axis` = 0
    let stride = grid.stride(axis);
    let cross: Vec<usize> = (0..grid.len()).filter(|&i| (i / stride) % n == 0).collect();
    let mut x = vec![0.0; d];
    let mut rhos = Vec::with_capacity(cross.len());
    for &i in &cross {
        grid.point(i, &mut x);
        rhos.push(mu * shape.distance(&x).0 / SUPPORT_RADIUS);
    }
    let s0: f64 = crate::field::fsum(rhos.iter().map(|&r| bump(r)));
    let s2: f64 = crate::field::fsum(rhos.iter().map(|&r| r * r * bump(r)));
    if s2 <= 0.0 {
        return Err(Error::Resolution(format!("no lattice points inside the tube at mu = {mu}, n = {n}")));
    }
    shape.shape = s0 / s2;
    let sq = crate::field::fsum(rhos.iter().map(|&r| ((1.0 - shape.shape * r * r) * bump(r)).powi(2)))
        / cross.len() as f64;
    shape.amplitude = 1.0 / (mu.powi(d as i32 - 1) * sq).sqrt();

    let mut prof = vec![0.0; grid.len()];
    let mut idx = vec![0usize; d];
    let section: Vec<f64> = rhos
        .iter()
        .map(|&r| shape.amplitude * (1.0 - shape.shape * r * r) * bump(r))
        .collect();
    // broadcast the cross-section along the tube direction
    for (k, &i) in cross.iter().enumerate() {
        grid.unflat(i, &mut idx);
        for m in 0..n {
            idx[axis] = m;
            prof[grid.flat(&idx)] = section[k];
        }
    }
    let ta = shape.theta_scale();
    let wb = shape.w_scale();
    let theta = ScalarField::from_vec(grid, prof.iter().map(|p| ta * p).collect())?;
    let w_axis = ScalarField::from_vec(grid, prof.into_iter().map(|p| wb * p).collect())?;
    let w = VectorField::along(&w_axis, axis);
    Ok(MikadoPair { shape, theta, w })
}

/// Pairs for all `d` directions, with support disjointness verified.
pub fn build_family(mu: f64, grid: Grid, exponents: (i32, i32)) -> Result<Vec<MikadoPair>> {
    let d = grid.d();
    // analytic separation of tube axes j and k
    for j in 0..d {
        for k in j + 1..d {
            let oj = tube_offset(d, j);
            let ok = tube_offset(d, k);
            let sep: f64 = (0..d)
                .filter(|&a| a != j && a != k)
                .map(|a| periodic(oj[a] - ok[a]).powi(2))
                .sum::<f64>()
                .sqrt();
            if sep <= 2.0 * SUPPORT_RADIUS / mu {
                return Err(Error::Construction(format!(
                    "tubes {j} and {k} intersect at mu = {mu} (axis separation {sep:.4})"
                )));
            }
        }
    }
    let pairs: Vec<MikadoPair> =
        (0..d).map(|j| build_mikado(j, mu, grid, exponents)).collect::<Result<_>>()?;
    for j in 0..d {
        for k in 0..d {
            if j != k
                && pairs[j]
                    .theta
                    .data()
                    .iter()
                    .zip(pairs[k].w_axis().data())
                    .any(|(t, w)| t * w != 0.0)
            {
                return Err(Error::Construction(format!("supports of directions {j} and {k} overlap")));
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub mu: f64,
    pub axis: usize,
    pub field: &'static str,
    pub k: u32,
    pub r: String,
    pub norm: f64,
    pub exponent: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MikadoConstants {
    pub m0: f64,
    pub m1: f64,
    pub m: f64,
    pub rows: Vec<ScalingRow>,
    /// per mu: (sum_j |Theta|_1, sum_j |W|_inf, sum_j |Theta W|_1)
    pub sums: Vec<(f64, [f64; 3])>,
    pub sums_within_quarter_m: bool,
}

/// `M = 4 d max{M0, M0^2, M0 + M1}`
pub fn combine_constants(d: usize, m0: f64, m1: f64) -> f64 {
    4.0 * d as f64 * m0.max(m0 * m0).max(m0 + m1)
}

/// Normalised `L^r` norms of `D^k Theta`, `D^k W` over the sweep, and the derived constants.
pub fn measure_constants(pairs: &[MikadoPair]) -> Result<MikadoConstants> {
    let mus: Vec<f64> = {
        let mut v: Vec<f64> = pairs.iter().map(|p| p.mu()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    if mus.is_empty() {
        return Err(Error::Parameter("measuring constants needs at least one pair".into()));
    }
    let d = pairs[0].grid().d();
    let dm1 = (d - 1) as f64;
    let mut rows = Vec::new();
    for p in pairs {
        let (a, b) = (p.shape.a as f64, p.shape.b as f64);
        let fields: [(&'static str, f64, ScalarField, ScalarField); 2] = [
            ("theta", a, p.theta.clone(), p.theta_gradient().pointwise_norm()),
            ("w", b, p.w_axis().clone(), p.w_gradient().pointwise_norm()),
        ];
        for (name, base, f0, f1) in fields.iter() {
            for (k, f) in [(0u32, f0), (1u32, f1)] {
                for (rlabel, rinv, norm) in [
                    ("1", 1.0, lp(f, 1.0)),
                    ("2", 0.5, lp(f, 2.0)),
                    ("inf", 0.0, f.max_abs()),
                ] {
                    let exponent = base + k as f64 - dm1 * rinv;
                    rows.push(ScalingRow {
                        mu: p.mu(),
                        axis: p.axis(),
                        field: name,
                        k,
                        r: rlabel.into(),
                        norm,
                        exponent,
                        normalized: norm / p.mu().powf(exponent),
                    });
                }
            }
        }
    }
    let m0 = rows.iter().filter(|r| r.k == 0).fold(0.0f64, |m, r| m.max(r.normalized));
    let m1 = rows.iter().filter(|r| r.k == 1).fold(0.0f64, |m, r| m.max(r.normalized));
    let m = combine_constants(d, m0, m1);
    let mut sums = Vec::new();
    let mut ok = true;
    for &mu in &mus {
        let at: Vec<&MikadoPair> = pairs.iter().filter(|p| p.mu() == mu).collect();
        let s = [
            at.iter().map(|p| lp(&p.theta, 1.0)).sum::<f64>(),
            at.iter().map(|p| p.w_axis().max_abs()).sum::<f64>(),
            at.iter().map(|p| lp(&p.theta_w(), 1.0)).sum::<f64>(),
        ];
        ok &= s.iter().all(|&v| v <= m / 4.0);
        sums.push((mu, s));
    }
    Ok(MikadoConstants { m0, m1, m, rows, sums, sums_within_quarter_m: ok })
}
