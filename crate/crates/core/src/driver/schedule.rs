use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which closeness estimate fixes `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    RhoClose,
    UClose,
}

/// Targets `delta_q`, amplitude splits `eta_q = sigma delta_{q-1}^{-1/2}` and exponents `p_q`.
#[derive(Debug, Clone, Serialize)]
pub struct IterationSchedule {
    pub steps: usize,
    /// `delta_{-1} = max_t |R_0(t)|_{L^1}`
    pub delta_init: f64,
    pub deltas: Vec<f64>,
    pub etas: Vec<f64>,
    pub ps: Vec<f64>,
    pub sigma: f64,
    pub m: f64,
    pub epsilon: f64,
    pub mode: Mode,
}

/// `4^{-q}`
pub fn default_delta(q: usize) -> f64 {
    0.25f64.powi(q as i32)
}

/// `(d - 1)(1 - 2^{-q-1})`
pub fn default_p(q: usize, d: usize) -> f64 {
    (d as f64 - 1.0) * (1.0 - 0.5f64.powi(q as i32 + 1))
}

impl IterationSchedule {
    /// Defaults for any sequence left empty; explicit sequences must have `steps` entries.
    pub fn new(
        steps: usize,
        d: usize,
        delta_init: f64,
        m: f64,
        epsilon: f64,
        mode: Mode,
        deltas: Option<Vec<f64>>,
        ps: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !(epsilon > 0.0) || (steps > 0 && !(m > 0.0)) {
            return Err(Error::Config(format!("epsilon ({epsilon}) and M ({m}) must be positive")));
        }
        let deltas = deltas.unwrap_or_else(|| (0..steps).map(default_delta).collect());
        let ps = ps.unwrap_or_else(|| (0..steps).map(|q| default_p(q, d)).collect());
        if deltas.len() != steps || ps.len() != steps {
            return Err(Error::Config(format!("schedule sequences must have {steps} entries")));
        }
        if deltas.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("every delta_q must be positive".into()));
        }
        if ps.windows(2).any(|w| w[1] < w[0]) || ps.iter().any(|&p| p < 1.0 || p >= d as f64 - 1.0) {
            return Err(Error::Config(format!("p_q must be nondecreasing in [1, {})", d - 1)));
        }
        let prev = |q: usize| if q == 0 { delta_init } else { deltas[q - 1] };
        let sum: f64 = (0..steps).map(|q| prev(q).sqrt()).fold(0.0, |a, b| a + b);
        let sigma = match mode {
            _ if steps == 0 => 1.0,
            Mode::RhoClose => epsilon / (m * sum),
            Mode::UClose => m * sum / epsilon,
        };
        let etas = (0..steps).map(|q| sigma / prev(q).sqrt()).collect();
        Ok(IterationSchedule { steps, delta_init, deltas, etas, ps, sigma, m, epsilon, mode })
    }

    /// `M sigma sum_q delta_{q-1}^{1/2}`: the rho distance budget (equal to epsilon in rho-close mode).
    pub fn rho_budget(&self) -> f64 {
        let prev = |q: usize| if q == 0 { self.delta_init } else { self.deltas[q - 1] };
        self.m * self.sigma * (0..self.steps).map(|q| prev(q).sqrt()).fold(0.0, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_close_budget_is_epsilon() {
        let s = IterationSchedule::new(3, 3, 0.4, 50.0, 0.1, Mode::RhoClose, None, None).unwrap();
        assert!((s.rho_budget() - 0.1).abs() < 1e-15);
        assert_eq!(s.ps, vec![1.0, 1.5, 1.75]);
        assert_eq!(s.deltas, vec![1.0, 0.25, 0.0625]);
        assert!((s.etas[1] * 1.0f64.sqrt() - s.sigma).abs() < 1e-15);
    }
}
