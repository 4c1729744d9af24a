use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::scheme::DefectTriple;
use crate::spectral::std_antidiv;
use crate::time::{TimeField, TimeGrid};

fn e(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-1.0 / z).exp()
    }
}

fn de(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        e(z) / (z * z)
    }
}

/// Smooth switch-on `chi`, zero on `[0, 1/4]` and one on `[3/4, 1]`, with `chi'`.
pub fn chi(t: f64) -> (f64, f64) {
    let z = 2.0 * (t - 0.25);
    if z <= 0.0 {
        return (0.0, 0.0);
    }
    if z >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (e(z), e(1.0 - z));
    let (da, db) = (de(z), -de(1.0 - z));
    let s = a + b;
    (a / s, 2.0 * (da * s - a * (da + db)) / (s * s))
}

/// Zero-mean density switched on by `chi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RhoBar {
    /// `amplitude cos(2 pi m x_axis)`
    Cosine { amplitude: f64, axis: usize, wavenumber: u32 },
}

impl Default for RhoBar {
    fn default() -> Self {
        RhoBar::Cosine { amplitude: 1.0, axis: 0, wavenumber: 1 }
    }
}

impl RhoBar {
    pub fn sample(&self, grid: Grid) -> Result<ScalarField> {
        match *self {
            RhoBar::Cosine { amplitude, axis, wavenumber } => {
                if axis >= grid.d() {
                    return Err(Error::Config(format!("axis {axis} out of range for d = {}", grid.d())));
                }
                let k = 2.0 * std::f64::consts::PI * wavenumber as f64;
                Ok(ScalarField::from_fn(grid, |x| amplitude * (k * x[axis]).cos()))
            }
        }
    }

    /// Closed form of `grad inverse_laplacian rho_bar`.
    pub fn potential(&self, grid: Grid) -> VectorField {
        match *self {
            RhoBar::Cosine { amplitude, axis, wavenumber } => {
                let k = 2.0 * std::f64::consts::PI * wavenumber as f64;
                VectorField::from_fn(grid, |x, a| if a == axis { amplitude * (k * x[axis]).sin() / k } else { 0.0 })
            }
        }
    }
}

/// `rho0 = chi(t) rho_bar`, `u0 = 0`, `R0 = -chi'(t) grad inverse_laplacian rho_bar`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub rho_bar: ScalarField,
    pub potential: VectorField,
    pub triple: DefectTriple,
    /// `|computed - closed form|_inf` of the potential, when a closed form exists
    pub potential_error: f64,
}

pub fn make_scenario(spec: &RhoBar, times: TimeGrid, grid: Grid) -> Result<Scenario> {
    let rho_bar = spec.sample(grid)?;
    scenario_from_field(rho_bar, times, Some(spec.potential(grid)))
}

pub fn scenario_from_field(rho_bar: ScalarField, times: TimeGrid, closed: Option<VectorField>) -> Result<Scenario> {
    let grid = rho_bar.grid();
    let scale = rho_bar.max_abs().max(1.0);
    if rho_bar.mean().abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!("rho_bar has mean {:.3e}", rho_bar.mean())));
    }
    let potential = std_antidiv(&rho_bar)?;
    let potential_error = closed.map_or(0.0, |c| c.sub(&potential).max_abs());
    let rho = TimeField::from_fn(times, |k| rho_bar.scale(chi(times.t(k)).0));
    let u = TimeField::from_fn(times, |_| VectorField::zeros(grid));
    let r = TimeField::from_fn(times, |k| potential.scale(-chi(times.t(k)).1));
    Ok(Scenario { rho_bar, potential, triple: DefectTriple::new(rho, u, r)?, potential_error })
}
