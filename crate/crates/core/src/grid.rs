use crate::error::{Error, Result};

/// Uniform lattice on the unit torus `[0,1)^d` with `n` points per axis.
///
/// Samples are stored row-major: axis 0 varies slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    d: usize,
    n: usize,
}

impl Grid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::Grid(format!("dimension must be at least 3, got {d}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Grid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Grid { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn unflat(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.d).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    /// Coordinates of lattice point `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let h = self.h();
        let mut f = flat;
        for a in (0..self.d).rev() {
            out[a] = (f % self.n) as f64 * h;
            f /= self.n;
        }
    }

    /// Coarser grid with `n / factor` points per axis.
    pub fn coarsen(&self, factor: usize) -> Result<Grid> {
        if factor == 0 || self.n % factor != 0 {
            return Err(Error::Resolution(format!(
                "factor {factor} does not divide n = {}",
                self.n
            )));
        }
        Grid::new(self.d, self.n / factor)
    }
}

/// Signed wavenumber of FFT index `i` on an `n`-point axis.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(2, 16).is_err());
        assert!(Grid::new(3, 12).is_err());
        assert!(Grid::new(3, 4).is_err());
        assert!(Grid::new(3, 16).is_ok());
    }

    #[test]
    fn flat_roundtrip() {
        let g = Grid::new(3, 8).unwrap();
        let mut idx = [0usize; 3];
        for f in 0..g.len() {
            g.unflat(f, &mut idx);
            assert_eq!(g.flat(&idx), f);
        }
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn wavenumbers() {
        assert_eq!(wavenumber(0, 8), 0);
        assert_eq!(wavenumber(3, 8), 3);
        assert_eq!(wavenumber(4, 8), 4);
        assert_eq!(wavenumber(5, 8), -3);
        assert_eq!(wavenumber(7, 8), -1);
    }
}
