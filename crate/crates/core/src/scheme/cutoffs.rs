use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::norms::lp_vec;
use crate::time::{dt_scalar, TimeField, TimeGrid};

/// `exp(-1/(1-s^2))` on `|s| < 1` and its derivative in `s`.
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (-1.0 / q).exp();
    (v, v * (-2.0 * s / (q * q)))
}

/// Partition of unity `sum_i alpha_i^2 = 1` on `[0, 1]`, one cutoff per
/// interval `I_i = [i tau, (i+1) tau]`, `i = 0..N`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimePartition {
    tau: f64,
    count: usize,
}

impl TimePartition {
    pub fn new(tau: f64) -> Result<Self> {
        let inv = 1.0 / tau;
        let count = inv.round();
        if !(tau > 0.0) || (inv - count).abs() > 1e-9 * inv {
            return Err(Error::Parameter(format!("time scale {tau} is not the reciprocal of an integer")));
        }
        if count < 2.0 {
            return Err(Error::Parameter("the odd/even interleaving needs at least two intervals".into()));
        }
        Ok(TimePartition { tau, count: count as usize })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `t_i = (i + 1/2) tau`
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.tau
    }

    /// Support `[(i - 1/3) tau, (i + 4/3) tau]` of `alpha_i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        ((i as f64 - 1.0 / 3.0) * self.tau, (i as f64 + 4.0 / 3.0) * self.tau)
    }

    /// Intervals of the first, third, ... position use `(lambda', mu')`.
    pub fn is_primary(&self, i: usize) -> bool {
        i % 2 == 0
    }

    fn raw(&self, i: usize, t: f64) -> (f64, f64) {
        let half = 5.0 / 6.0 * self.tau;
        let (v, dv) = bump((t - self.midpoint(i)) / half);
        (v, dv / half)
    }

    fn neighbours(&self, t: f64) -> std::ops::Range<usize> {
        let c = (t / self.tau).floor() as isize;
        let lo = (c - 1).clamp(0, self.count as isize) as usize;
        let hi = (c + 2).clamp(0, self.count as isize) as usize;
        lo..hi
    }

    /// `(alpha_i(t), alpha_i'(t))`
    pub fn alpha(&self, i: usize, t: f64) -> (f64, f64) {
        let (b, db) = self.raw(i, t);
        if b == 0.0 {
            return (0.0, 0.0);
        }
        let mut s = 0.0;
        let mut ds = 0.0;
        for j in self.neighbours(t) {
            let (v, dv) = self.raw(j, t);
            s += v * v;
            ds += 2.0 * v * dv;
        }
        let r = s.sqrt();
        (b / r, db / r - 0.5 * b * ds / (s * r))
    }

    /// Indices with `alpha_i(t) > 0`.
    pub fn active(&self, t: f64) -> Vec<usize> {
        self.neighbours(t).filter(|&i| self.raw(i, t).0 > 0.0).collect()
    }

    /// Snapshot index of `t_i`; requires `n_t tau` even.
    pub fn anchor(&self, i: usize, times: TimeGrid) -> Result<usize> {
        let pos = self.midpoint(i) * times.steps() as f64;
        let k = pos.round();
        if (pos - k).abs() > 1e-9 {
            return Err(Error::TimeResolution(format!(
                "midpoint {} is not a time-lattice point for n_t = {} (need n_t tau even)",
                self.midpoint(i),
                times.steps()
            )));
        }
        Ok(k as usize)
    }

    /// Snapshot indices covering the support of `alpha_i` inside `[0, 1]`.
    pub fn window(&self, i: usize, times: TimeGrid) -> (usize, usize) {
        let n = times.steps() as f64;
        let (a, b) = self.support(i);
        let lo = (a.max(0.0) * n + 1e-9).floor().max(0.0) as usize;
        let hi = ((b.min(1.0) * n - 1e-9).ceil() as usize).min(times.steps());
        (lo, hi)
    }
}

/// `psi(t)`, a smooth ramp of the time-mollified curve `s(t) = |R0(t)|_{L^1}`,
/// sampled on the time lattice.
#[derive(Debug, Clone, Serialize)]
pub struct DefectCutoff {
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    pub norms: Vec<f64>,
    pub smoothed: Vec<f64>,
    /// ramp runs from `lo` to `hi`; `[delta/8, delta/4]` shrunk by the mollification error
    pub lo: f64,
    pub hi: f64,
    pub mollified: bool,
    pub max_derivative: f64,
}

fn ramp(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let e = |v: f64| (-1.0 / v).exp();
        e(z) / (e(z) + e(1.0 - z))
    }
}

/// Binomial smoothing over five snapshots (width `2 dt`), ends clamped.
fn mollify(s: &[f64]) -> Vec<f64> {
    const W: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let n = s.len() as isize;
    (0..n)
        .map(|k| {
            W.iter()
                .enumerate()
                .map(|(m, w)| w * s[(k + m as isize - 2).clamp(0, n - 1) as usize])
                .sum::<f64>()
                / 16.0
        })
        .collect()
}

pub fn defect_cutoff(r0: &TimeField<VectorField>, delta: f64) -> Result<DefectCutoff> {
    let norms: Vec<f64> = r0.snaps().iter().map(|r| lp_vec(r, 1.0)).collect();
    cutoff_from_norms(norms, delta, r0.times())
}

pub fn cutoff_from_norms(norms: Vec<f64>, delta: f64, times: TimeGrid) -> Result<DefectCutoff> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let smooth = mollify(&norms);
    let m = norms.iter().zip(&smooth).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let (smoothed, m, mollified) =
        if m < delta / 16.0 { (smooth, m, true) } else { (norms.clone(), 0.0, false) };
    let lo = delta / 8.0 + m;
    let hi = delta / 4.0 - m;
    let values: Vec<f64> = smoothed.iter().map(|&s| ramp((s - lo) / (hi - lo))).collect();
    // psi is flat wherever it sits at 0 or 1
    let derivative: Vec<f64> = dt_scalar(&values, times.dt())
        .into_iter()
        .zip(&values)
        .map(|(d, &v)| if v == 0.0 || v == 1.0 { 0.0 } else { d })
        .collect();
    let max_derivative = derivative.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(DefectCutoff { values, derivative, norms, smoothed, lo, hi, mollified, max_derivative })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        for tau in [0.5, 0.25, 0.125] {
            let p = TimePartition::new(tau).unwrap();
            for s in 0..=1000 {
                let t = s as f64 / 1000.0;
                let sum: f64 = (0..p.count()).map(|i| p.alpha(i, t).0.powi(2)).sum();
                assert!((sum - 1.0).abs() < 1e-12, "tau {tau} t {t} sum {sum}");
                let act = p.active(t);
                assert!(act.len() <= 2);
                if act.len() == 2 {
                    assert_ne!(act[0] % 2, act[1] % 2);
                }
            }
        }
        assert!(TimePartition::new(0.3).is_err());
        assert!(TimePartition::new(1.0).is_err());
    }

    #[test]
    fn alpha_derivative_matches_differences() {
        let p = TimePartition::new(0.25).unwrap();
        let h = 1e-6;
        for s in 1..100 {
            let t = s as f64 / 100.0;
            for i in 0..4 {
                let fd = (p.alpha(i, t + h).0 - p.alpha(i, t - h).0) / (2.0 * h);
                assert!((fd - p.alpha(i, t).1).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn cutoff_levels() {
        let tg = TimeGrid::new(16).unwrap();
        let zero = cutoff_from_norms(vec![0.0; 17], 1.0, tg).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let big = cutoff_from_norms(vec![0.3; 17], 1.0, tg).unwrap();
        assert!(big.values.iter().all(|&v| v == 1.0));
    }
}
