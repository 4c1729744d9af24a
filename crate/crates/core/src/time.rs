use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};

/// Uniform time lattice `t_k = k / n_t`, `k = 0..=n_t`, on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    n_t: usize,
}

impl TimeGrid {
    pub fn new(n_t: usize) -> Result<Self> {
        if n_t < 2 {
            return Err(Error::TimeResolution(format!("need at least 2 time steps, got {n_t}")));
        }
        Ok(TimeGrid { n_t })
    }

    pub fn steps(&self) -> usize {
        self.n_t
    }

    pub fn len(&self) -> usize {
        self.n_t + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_t as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.n_t as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_t).map(|k| self.t(k)).collect()
    }
}

/// Linear operations needed for time differencing.
pub trait Linear: Clone {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self;
}

impl Linear for ScalarField {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.scale(terms[0].0);
        for (c, f) in &terms[1..] {
            out.axpy(*c, f);
        }
        out
    }
}

impl Linear for VectorField {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.scale(terms[0].0);
        for (c, f) in &terms[1..] {
            out.axpy(*c, f);
        }
        out
    }
}

/// Snapshots of a field on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeField<T> {
    times: TimeGrid,
    snaps: Vec<T>,
}

impl<T> TimeField<T> {
    pub fn new(times: TimeGrid, snaps: Vec<T>) -> Result<Self> {
        if snaps.len() != times.len() {
            return Err(Error::TimeResolution(format!(
                "expected {} snapshots, got {}",
                times.len(),
                snaps.len()
            )));
        }
        Ok(TimeField { times, snaps })
    }

    pub fn from_fn(times: TimeGrid, f: impl FnMut(usize) -> T) -> Self {
        TimeField { times, snaps: (0..times.len()).map(f).collect() }
    }

    pub fn times(&self) -> TimeGrid {
        self.times
    }

    pub fn at(&self, k: usize) -> &T {
        &self.snaps[k]
    }

    pub fn snaps(&self) -> &[T] {
        &self.snaps
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeField<U> {
        TimeField { times: self.times, snaps: self.snaps.iter().map(f).collect() }
    }
}

impl<T: Linear> TimeField<T> {
    /// Second-order time derivative at snapshot `k`: centred inside, one-sided at the ends.
    pub fn dt_at(&self, k: usize) -> T {
        let h = self.times.dt();
        let n = self.times.steps();
        let s = &self.snaps;
        if k == 0 {
            T::lin_comb(&[(-1.5 / h, &s[0]), (2.0 / h, &s[1]), (-0.5 / h, &s[2])])
        } else if k == n {
            T::lin_comb(&[(1.5 / h, &s[n]), (-2.0 / h, &s[n - 1]), (0.5 / h, &s[n - 2])])
        } else {
            T::lin_comb(&[(0.5 / h, &s[k + 1]), (-0.5 / h, &s[k - 1])])
        }
    }

    pub fn dt(&self) -> TimeField<T> {
        TimeField { times: self.times, snaps: (0..self.times.len()).map(|k| self.dt_at(k)).collect() }
    }
}

/// Second-order derivative of scalar samples on the time lattice.
pub fn dt_scalar(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len() - 1;
    (0..=n)
        .map(|k| {
            if k == 0 {
                (-1.5 * vals[0] + 2.0 * vals[1] - 0.5 * vals[2]) / h
            } else if k == n {
                (1.5 * vals[n] - 2.0 * vals[n - 1] + 0.5 * vals[n - 2]) / h
            } else {
                (vals[k + 1] - vals[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let tg = TimeGrid::new(8).unwrap();
        let v: Vec<f64> = tg.times().iter().map(|t| 3.0 * t * t - t).collect();
        let d = dt_scalar(&v, tg.dt());
        for (k, t) in tg.times().iter().enumerate() {
            assert!((d[k] - (6.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
