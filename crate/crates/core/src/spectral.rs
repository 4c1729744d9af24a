//! Fourier-spectral calculus on the lattice.
//!
//! Derivative symbols zero the Nyquist wavenumber, so `divergence(gradient(f))`
//! and `laplacian(f)` share one symbol and `inverse_laplacian` inverts it
//! exactly on every mode where it is nonzero.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::{wavenumber, Grid};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().expect("fft cache");
    map.entry(n)
        .or_insert_with(|| {
            let mut p = FftPlanner::new();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalised in-place `d`-dimensional FFT of a row-major `n^d` array.
pub fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    let mut buf: Vec<Complex64> = Vec::new();
    for axis in (0..d - 1).rev() {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = n * stride;
        buf.resize(block, Complex64::default());
        for chunk in data.chunks_mut(block) {
            // transpose the n x stride block to stride x n, transform rows, transpose back
            for m in 0..n {
                for s in 0..stride {
                    buf[s * n + m] = chunk[m * stride + s];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for m in 0..n {
                for s in 0..stride {
                    chunk[m * stride + s] = buf[s * n + m];
                }
            }
        }
    }
}

/// Per-axis derivative wavenumbers `2 pi k`, with the Nyquist entry zeroed.
pub fn kappa(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i == n / 2 { 0.0 } else { 2.0 * PI * wavenumber(i, n) as f64 })
        .collect()
}

/// Normalised Fourier coefficients `c_k = N^{-1} sum_x f(x) e^{-2 pi i k.x}`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(f: &ScalarField) -> Self {
        let g = f.grid();
        let mut coeffs: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut coeffs, g.n(), g.d(), false);
        let s = 1.0 / g.len() as f64;
        for c in coeffs.iter_mut() {
            *c *= s;
        }
        Spectrum { grid: g, coeffs }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn to_field(&self) -> ScalarField {
        let g = self.grid;
        let mut buf = self.coeffs.clone();
        fft_nd(&mut buf, g.n(), g.d(), true);
        ScalarField::from_vec(g, buf.into_iter().map(|c| c.re).collect()).expect("sized")
    }

    /// Multiply each coefficient by `sym(kappa_vector)`.
    pub fn apply_symbol(&self, sym: impl Fn(&[f64]) -> Complex64) -> Spectrum {
        let g = self.grid;
        let k = kappa(g.n());
        let mut idx = vec![0usize; g.d()];
        let mut kv = vec![0.0; g.d()];
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(f, &c)| {
                g.unflat(f, &mut idx);
                for a in 0..g.d() {
                    kv[a] = k[idx[a]];
                }
                c * sym(&kv)
            })
            .collect();
        Spectrum { grid: g, coeffs }
    }

    /// Largest `|k_a|` over modes with `|c_k| > rel * max |c|`, per axis.
    pub fn effective_bandwidth(&self, rel: f64) -> Vec<usize> {
        let g = self.grid;
        let cmax = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let mut out = vec![0usize; g.d()];
        if cmax == 0.0 {
            return out;
        }
        let mut idx = vec![0usize; g.d()];
        for (f, c) in self.coeffs.iter().enumerate() {
            if c.norm() > rel * cmax {
                g.unflat(f, &mut idx);
                for a in 0..g.d() {
                    out[a] = out[a].max(wavenumber(idx[a], g.n()).unsigned_abs() as usize);
                }
            }
        }
        out
    }
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    Spectrum::forward(f).apply_symbol(|k| I * k[axis]).to_field()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let s = Spectrum::forward(f);
    gradient_of_spectrum(&s)
}

fn gradient_of_spectrum(s: &Spectrum) -> VectorField {
    let d = s.grid().d();
    VectorField::new((0..d).map(|a| s.apply_symbol(|k| I * k[a]).to_field()).collect())
        .expect("d components")
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let g = v.grid();
    let mut acc = vec![Complex64::default(); g.len()];
    let k = kappa(g.n());
    let mut idx = vec![0usize; g.d()];
    for a in 0..g.d() {
        let s = Spectrum::forward(v.comp(a));
        for (f, c) in s.coeffs.iter().enumerate() {
            g.unflat(f, &mut idx);
            acc[f] += I * k[idx[a]] * c;
        }
    }
    Spectrum { grid: g, coeffs: acc }.to_field()
}

/// Spectral Jacobian `(Dv)_{ab} = d_b v_a`.
pub fn jacobian(v: &VectorField) -> MatrixField {
    let d = v.grid().d();
    let mut entries = Vec::with_capacity(d * d);
    for a in 0..d {
        let grad = gradient(v.comp(a));
        entries.extend(grad.into_comps());
    }
    MatrixField::new(entries).expect("d x d")
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    Spectrum::forward(f)
        .apply_symbol(|k| Complex64::new(-k.iter().map(|x| x * x).sum::<f64>(), 0.0))
        .to_field()
}

fn check_zero_mean(f: &ScalarField, what: &str) -> Result<()> {
    let m = f.mean();
    let scale = f.max_abs().max(1.0);
    if m.abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!("{what}: input mean {m:.3e} is not zero")));
    }
    Ok(())
}

fn inverse_laplacian_spectrum(f: &ScalarField) -> Spectrum {
    Spectrum::forward(f).apply_symbol(|k| {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / k2, 0.0)
        }
    })
}

/// Fourier multiplier `-1/(4 pi^2 |k|^2)`; the zero mode maps to zero.
pub fn inverse_laplacian(f: &ScalarField) -> Result<ScalarField> {
    check_zero_mean(f, "inverse_laplacian")?;
    Ok(inverse_laplacian_spectrum(f).to_field())
}

/// Standard antidivergence `grad inverse_laplacian f`.
pub fn std_antidiv(f: &ScalarField) -> Result<VectorField> {
    check_zero_mean(f, "std_antidiv")?;
    Ok(gradient_of_spectrum(&inverse_laplacian_spectrum(f)))
}

/// `grad inverse_laplacian` applied after removing the mean.
pub fn std_antidiv_centered(f: &ScalarField) -> VectorField {
    gradient_of_spectrum(&inverse_laplacian_spectrum(&f.subtract_mean()))
}

/// All second derivatives `d_a d_b f`, `a <= b`.
pub fn second_derivatives(f: &ScalarField) -> Vec<ScalarField> {
    let s = Spectrum::forward(f);
    let d = f.grid().d();
    let mut out = Vec::new();
    for a in 0..d {
        for b in a..d {
            out.push(s.apply_symbol(|k| Complex64::new(-k[a] * k[b], 0.0)).to_field());
        }
    }
    out
}

/// Zero all modes with some `|k_a| > kmax`.
pub fn truncate(f: &ScalarField, kmax: usize) -> ScalarField {
    let g = f.grid();
    let n = g.n();
    let mut s = Spectrum::forward(f);
    let mut idx = vec![0usize; g.d()];
    for (fl, c) in s.coeffs.iter_mut().enumerate() {
        g.unflat(fl, &mut idx);
        if idx.iter().any(|&i| wavenumber(i, n).unsigned_abs() as usize > kmax) {
            *c = Complex64::default();
        }
    }
    s.to_field()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid {
        Grid::new(3, n).unwrap()
    }

    #[test]
    fn roundtrip() {
        let f = ScalarField::from_fn(g(8), |x| (x[0] * 3.1).sin() + x[1] * x[2]);
        let back = Spectrum::forward(&f).to_field();
        for (a, b) in f.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_derivative() {
        let two_pi = 2.0 * PI;
        let f = ScalarField::from_fn(g(16), |x| (two_pi * (2.0 * x[0] - 3.0 * x[2])).sin());
        let dz = partial(&f, 2);
        let max_err = ScalarField::from_fn(g(16), |x| -3.0 * two_pi * (two_pi * (2.0 * x[0] - 3.0 * x[2])).cos())
            .sub(&dz)
            .max_abs();
        assert!(max_err < 1e-11, "{max_err}");
    }

    #[test]
    fn inverse_laplacian_of_mode() {
        let two_pi = 2.0 * PI;
        let f = ScalarField::from_fn(g(16), |x| (two_pi * (x[0] + x[1])).cos());
        let u = inverse_laplacian(&f).unwrap();
        let expect = -1.0 / (2.0 * two_pi * two_pi);
        let err = f.scale(expect).sub(&u).max_abs();
        assert!(err < 1e-15, "{err}");
        assert!(inverse_laplacian(&ScalarField::constant(g(8), 1.0)).is_err());
    }
}
