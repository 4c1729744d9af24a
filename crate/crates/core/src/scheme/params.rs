use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::grid::Grid;

/// Exponents of the oscillation/concentration ladder `lambda' = lambda`,
/// `mu' = lambda^alpha`, `lambda'' = lambda^beta`, `mu'' = lambda^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Left sides of the four strict inequalities; the ladder is admissible when all are negative.
pub fn exponent_conditions(e: &Exponents, p: f64, d: usize) -> [f64; 4] {
    let q = 1.0 - (d as f64 - 1.0) / p;
    [
        1.0 + e.alpha * q,
        e.beta + e.gamma * q,
        1.0 + e.alpha - e.beta,
        1.0 + e.alpha * d as f64 - e.beta - e.gamma * (d as f64 - 1.0),
    ]
}

/// Smallest integer strictly above `margin * bound`.
fn above(bound: f64, margin: f64) -> f64 {
    (margin * bound).floor() + 1.0
}

/// Fix `alpha`, then `beta`, then `gamma` above their lower bounds (times `margin`).
pub fn choose_exponents(p: f64, d: usize, margin: f64) -> Result<Exponents> {
    let dm1 = d as f64 - 1.0;
    if !(p >= 1.0 && p < dm1) {
        return Err(Error::Infeasible(format!("need 1 <= p < d - 1 = {dm1}, got p = {p}")));
    }
    if margin < 1.0 {
        return Err(Error::Parameter(format!("safety margin must be at least 1, got {margin}")));
    }
    let gap = dm1 / p - 1.0;
    let alpha = above((1.0 / gap).max(1.0), margin);
    let beta = above(1.0 + alpha, margin);
    let gamma = above((beta / gap).max((1.0 + alpha * d as f64 - beta) / dm1).max(1.0), margin);
    let mut e = Exponents { alpha, beta, gamma };
    // guard against a bound landing exactly on an integer after rounding
    while exponent_conditions(&e, p, d).iter().any(|&c| c >= 0.0) {
        e.gamma += 1.0;
        if exponent_conditions(&e, p, d)[0] >= 0.0 {
            e.alpha += 1.0;
            e.beta = e.beta.max(e.alpha + 2.0);
        }
        if exponent_conditions(&e, p, d)[2] >= 0.0 {
            e.beta += 1.0;
        }
    }
    Ok(e)
}

/// Concrete oscillations and concentrations for the two parities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub lambda1: usize,
    pub mu1: f64,
    pub lambda2: usize,
    pub mu2: f64,
}

fn nearest_divisor(v: f64, n: usize) -> usize {
    // divisors of a power of two are powers of two
    let e = v.max(1.0).log2().round().clamp(0.0, n.trailing_zeros() as f64);
    1usize << e as u32
}

impl Ladder {
    /// The ladder for base oscillation `lambda`, oscillations rounded to divisors of `n`.
    pub fn from_base(lambda: usize, e: &Exponents, n: usize) -> Ladder {
        let l = lambda as f64;
        Ladder {
            lambda1: nearest_divisor(l, n),
            mu1: l.powf(e.alpha),
            lambda2: nearest_divisor(l.powf(e.beta), n),
            mu2: l.powf(e.gamma),
        }
    }

    /// Largest ladder the lattice can carry: `lambda' = 1`, `mu' = 2d + 1`,
    /// then the largest `lambda''` leaving room for `mu'' > 2d + 1`.
    pub fn budget(grid: Grid) -> Result<Ladder> {
        let d = grid.d();
        let n = grid.n();
        let mu1 = 2.0 * d as f64 + 1.0;
        let mut lambda2 = n;
        while lambda2 > 1 && ((n / lambda2) as f64) < 4.0 * (mu1 + 1.0) {
            lambda2 /= 2;
        }
        let mu2 = ((n / lambda2) / 4) as f64;
        let l = Ladder { lambda1: 1, mu1, lambda2, mu2 };
        l.check(grid)?;
        Ok(l)
    }

    /// `(lambda, mu)` of the primary (first, third, ...) or secondary intervals.
    pub fn parity(&self, primary: bool) -> (usize, f64) {
        if primary {
            (self.lambda1, self.mu1)
        } else {
            (self.lambda2, self.mu2)
        }
    }

    pub fn check(&self, grid: Grid) -> Result<()> {
        let d = grid.d();
        let n = grid.n();
        for (lambda, mu) in [(self.lambda1, self.mu1), (self.lambda2, self.mu2)] {
            if mu <= 2.0 * d as f64 {
                return Err(Error::Parameter(format!("concentration {mu} must exceed 2d = {}", 2 * d)));
            }
            if lambda == 0 || n % lambda != 0 {
                return Err(Error::Resolution(format!("oscillation {lambda} does not divide n = {n}")));
            }
            if ((n / lambda) as f64) < 4.0 * mu {
                return Err(Error::Resolution(format!(
                    "n = {n} cannot carry oscillation {lambda} with concentration {mu} (need n >= {})",
                    (4.0 * lambda as f64 * mu).ceil()
                )));
            }
        }
        Ok(())
    }
}

/// Inputs of one perturbation step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeParams {
    pub p: f64,
    pub eta: f64,
    pub delta: f64,
    /// fixed time scale; chosen by [`choose_tau`](crate::scheme::choose_tau) when absent
    pub tau: Option<f64>,
    /// explicit ladder; searched from the exponents when absent
    pub ladder: Option<Ladder>,
    pub margin: f64,
    pub flow_substeps: usize,
    pub det_tolerance: f64,
    /// B-residual tolerance relative to `|u0|_{C^1}`
    pub flow_tolerance: f64,
}

impl SchemeParams {
    pub fn new(p: f64, eta: f64, delta: f64) -> Self {
        SchemeParams {
            p,
            eta,
            delta,
            tau: None,
            ladder: None,
            margin: 1.0,
            flow_substeps: 4,
            det_tolerance: 1e-3,
            flow_tolerance: 1e-5,
        }
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions { substeps: self.flow_substeps, det_tolerance: self.det_tolerance }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Parameter(format!("amplitude split eta must be positive, got {}", self.eta)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Parameter(format!("target defect delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_examples() {
        let e = choose_exponents(1.0, 3, 1.0).unwrap();
        assert_eq!((e.alpha, e.beta, e.gamma), (2.0, 4.0, 5.0));
        assert_eq!(choose_exponents(1.9, 3, 1.0).unwrap().alpha, 20.0);
        assert!(matches!(choose_exponents(2.0, 3, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn budget_ladder_fits() {
        let l = Ladder::budget(Grid::new(3, 64).unwrap()).unwrap();
        assert_eq!(l, Ladder { lambda1: 1, mu1: 7.0, lambda2: 2, mu2: 8.0 });
        assert!(Ladder::budget(Grid::new(3, 16).unwrap()).is_err());
    }
}
