//! Evaluation of lattice fields at off-lattice points through their
//! trigonometric interpolant.
//!
//! Narrow spectra are summed directly. Full spectra go through a type-2
//! non-uniform FFT: deconvolve, upsample by two, then interpolate with an
//! exponential-of-semicircle kernel.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::field::ScalarField;
use crate::grid::{wavenumber, Grid};
use crate::quadrature::gauss_legendre;
use crate::spectral::{fft_nd, Spectrum};

const WIDTH: usize = 10;
const BETA: f64 = 2.30 * WIDTH as f64;
const UPSAMPLE: usize = 2;
const DIRECT_MAX_MODES: usize = 512;
const SPECTRUM_FLOOR: f64 = 1e-14;

fn es_kernel(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (BETA * ((1.0 - z * z).sqrt() - 1.0)).exp()
    }
}

enum Mode {
    Direct { kmax: Vec<usize>, coeffs: Vec<Vec<Complex64>> },
    Nufft { m: usize, fine: Vec<Vec<f64>> },
}

/// Evaluator for one or more scalar fields sharing a grid.
pub struct OffGrid {
    grid: Grid,
    mode: Mode,
}

/// Coarse lattice indices and weights representing wavenumber `k` (Nyquist split in half).
fn nyquist_split(i: usize, n: usize) -> [(i64, f64); 2] {
    if i == n / 2 {
        [((n / 2) as i64, 0.5), (-((n / 2) as i64), 0.5)]
    } else {
        [(wavenumber(i, n), 1.0), (0, 0.0)]
    }
}

impl OffGrid {
    pub fn new(fields: &[&ScalarField]) -> Self {
        let grid = fields[0].grid();
        let d = grid.d();
        let spectra: Vec<Spectrum> = fields.iter().map(|f| Spectrum::forward(f)).collect();
        let mut kmax = vec![0usize; d];
        for s in &spectra {
            for (a, k) in s.effective_bandwidth(SPECTRUM_FLOOR).into_iter().enumerate() {
                kmax[a] = kmax[a].max(k);
            }
        }
        let modes: usize = kmax.iter().map(|k| 2 * k + 1).product();
        if modes <= DIRECT_MAX_MODES {
            OffGrid { grid, mode: Self::build_direct(grid, &spectra, kmax) }
        } else {
            OffGrid { grid, mode: Self::build_nufft(grid, &spectra) }
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.mode, Mode::Direct { .. })
    }

    fn build_direct(grid: Grid, spectra: &[Spectrum], kmax: Vec<usize>) -> Mode {
        let d = grid.d();
        let n = grid.n();
        let dims: Vec<usize> = kmax.iter().map(|k| 2 * k + 1).collect();
        let total: usize = dims.iter().product();
        let mut idx = vec![0usize; d];
        let mut coeffs = Vec::new();
        for s in spectra {
            let mut boxc = vec![Complex64::default(); total];
            for (f, &c) in s.coeffs().iter().enumerate() {
                if c == Complex64::default() {
                    continue;
                }
                grid.unflat(f, &mut idx);
                let splits: Vec<[(i64, f64); 2]> = idx.iter().map(|&i| nyquist_split(i, n)).collect();
                'combo: for mask in 0..(1usize << d) {
                    let mut flat = 0usize;
                    let mut w = 1.0;
                    for a in 0..d {
                        let (k, wk) = splits[a][(mask >> a) & 1];
                        if wk == 0.0 || k.unsigned_abs() as usize > kmax[a] {
                            continue 'combo;
                        }
                        w *= wk;
                        flat = flat * dims[a] + (k + kmax[a] as i64) as usize;
                    }
                    boxc[flat] += c * w;
                }
            }
            coeffs.push(boxc);
        }
        Mode::Direct { kmax, coeffs }
    }

    fn build_nufft(grid: Grid, spectra: &[Spectrum]) -> Mode {
        let d = grid.d();
        let n = grid.n();
        let m = UPSAMPLE * n;
        let half = WIDTH as f64 / (2.0 * m as f64);
        let (gx, gw) = gauss_legendre(120);
        // per-wavenumber deconvolution factors 1 / (m * Psi(k))
        let deconv = |k: i64| -> f64 {
            let psi: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(z, w)| w * es_kernel(*z) * (2.0 * PI * k as f64 * half * z).cos())
                .sum::<f64>()
                * half;
            1.0 / (m as f64 * psi)
        };
        let fac: Vec<f64> = (0..=n / 2).map(|k| deconv(k as i64)).collect();
        let fine_grid_len = m.pow(d as u32);
        let mut idx = vec![0usize; d];
        let mut fine = Vec::new();
        for s in spectra {
            let mut buf = vec![Complex64::default(); fine_grid_len];
            for (f, &c) in s.coeffs().iter().enumerate() {
                if c == Complex64::default() {
                    continue;
                }
                grid.unflat(f, &mut idx);
                let splits: Vec<[(i64, f64); 2]> = idx.iter().map(|&i| nyquist_split(i, n)).collect();
                for mask in 0..(1usize << d) {
                    let mut flat = 0usize;
                    let mut w = 1.0;
                    let mut ok = true;
                    for a in 0..d {
                        let (k, wk) = splits[a][(mask >> a) & 1];
                        if wk == 0.0 {
                            ok = false;
                            break;
                        }
                        w *= wk * fac[k.unsigned_abs() as usize];
                        flat = flat * m + k.rem_euclid(m as i64) as usize;
                    }
                    if ok {
                        buf[flat] += c * w;
                    }
                }
            }
            fft_nd(&mut buf, m, d, true);
            fine.push(buf.into_iter().map(|c| c.re).collect());
        }
        Mode::Nufft { m, fine }
    }

    /// Evaluate every field at the points `pts` (flattened, `d` coordinates each, any real values).
    pub fn eval(&self, pts: &[f64]) -> Vec<Vec<f64>> {
        let d = self.grid.d();
        let npts = pts.len() / d;
        match &self.mode {
            Mode::Direct { kmax, coeffs } => {
                let mut out = vec![vec![0.0; npts]; coeffs.len()];
                let dims: Vec<usize> = kmax.iter().map(|k| 2 * k + 1).collect();
                let mut phases: Vec<Vec<Complex64>> = dims.iter().map(|&m| vec![Complex64::default(); m]).collect();
                let mut work: Vec<Complex64> = Vec::new();
                for p in 0..npts {
                    for a in 0..d {
                        let y = pts[p * d + a];
                        let base = Complex64::from_polar(1.0, 2.0 * PI * y);
                        let mut e = Complex64::from_polar(1.0, -2.0 * PI * y * kmax[a] as f64);
                        for v in phases[a].iter_mut() {
                            *v = e;
                            e *= base;
                        }
                    }
                    for (c, o) in coeffs.iter().zip(out.iter_mut()) {
                        work.clear();
                        work.extend_from_slice(c);
                        let mut len = work.len();
                        for a in (0..d).rev() {
                            let m = dims[a];
                            let outer = len / m;
                            for r in 0..outer {
                                let mut s = Complex64::default();
                                for k in 0..m {
                                    s += work[r * m + k] * phases[a][k];
                                }
                                work[r] = s;
                            }
                            len = outer;
                        }
                        o[p] = work[0].re;
                    }
                }
                out
            }
            Mode::Nufft { m, fine } => {
                let m = *m;
                let mut out = vec![vec![0.0; npts]; fine.len()];
                let half = WIDTH as f64 / 2.0;
                let mut wts = vec![[0.0f64; WIDTH]; d];
                let mut ids = vec![[0usize; WIDTH]; d];
                for p in 0..npts {
                    for a in 0..d {
                        let y = pts[p * d + a];
                        let u = (y - y.floor()) * m as f64;
                        let l0 = (u - half).ceil();
                        for t in 0..WIDTH {
                            let l = l0 + t as f64;
                            wts[a][t] = es_kernel((l - u) / half);
                            ids[a][t] = (l as i64).rem_euclid(m as i64) as usize;
                        }
                    }
                    if d == 3 {
                        for (f, o) in fine.iter().zip(out.iter_mut()) {
                            let mut acc = 0.0;
                            for t0 in 0..WIDTH {
                                let b0 = ids[0][t0] * m * m;
                                let mut acc1 = 0.0;
                                for t1 in 0..WIDTH {
                                    let b1 = b0 + ids[1][t1] * m;
                                    let row = &f[b1..b1 + m];
                                    let mut acc2 = 0.0;
                                    for t2 in 0..WIDTH {
                                        acc2 += row[ids[2][t2]] * wts[2][t2];
                                    }
                                    acc1 += acc2 * wts[1][t1];
                                }
                                acc += acc1 * wts[0][t0];
                            }
                            o[p] = acc;
                        }
                    } else {
                        let total = WIDTH.pow(d as u32);
                        for (f, o) in fine.iter().zip(out.iter_mut()) {
                            let mut acc = 0.0;
                            for comb in 0..total {
                                let mut c = comb;
                                let mut flat = 0usize;
                                let mut w = 1.0;
                                for a in (0..d).rev() {
                                    let t = c % WIDTH;
                                    c /= WIDTH;
                                    w *= wts[a][t];
                                    flat += ids[a][t] * m.pow((d - 1 - a) as u32);
                                }
                                acc += f[flat] * w;
                            }
                            o[p] = acc;
                        }
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_matches_trig_polynomial() {
        let g = Grid::new(3, 16).unwrap();
        let tp = 2.0 * PI;
        let exact = |x: &[f64]| (tp * x[0]).cos() + 0.5 * (tp * (2.0 * x[1] - x[2])).sin();
        let f = ScalarField::from_fn(g, exact);
        let ev = OffGrid::new(&[&f]);
        assert!(ev.is_direct());
        let pts = [0.123, 0.77, 0.5, -0.3, 1.9, 0.01];
        let v = ev.eval(&pts);
        for p in 0..2 {
            assert!((v[0][p] - exact(&pts[p * 3..p * 3 + 3])).abs() < 1e-13);
        }
    }

    #[test]
    fn nufft_matches_direct_sum() {
        let g = Grid::new(3, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.4).powi(2) + (x[2] - 0.6).powi(2);
            (-30.0 * r2).exp()
        });
        let ev = OffGrid::new(&[&f]);
        assert!(!ev.is_direct());
        // reference: brute-force trigonometric interpolant
        let s = Spectrum::forward(&f);
        let pts = [0.31, 0.47, 0.913, 0.02, 0.5, 0.77];
        let v = ev.eval(&pts);
        let n = 16;
        let mut idx = [0usize; 3];
        let scale = s.coeffs().iter().map(|c| c.norm()).sum::<f64>();
        for p in 0..2 {
            let y = &pts[p * 3..p * 3 + 3];
            let mut acc = 0.0;
            for (fl, c) in s.coeffs().iter().enumerate() {
                g.unflat(fl, &mut idx);
                // Nyquist terms enter as cosines
                let mut term = *c;
                for a in 0..3 {
                    let k = wavenumber(idx[a], n) as f64;
                    if idx[a] == n / 2 {
                        term *= (PI * n as f64 * y[a]).cos();
                    } else {
                        term *= Complex64::from_polar(1.0, 2.0 * PI * k * y[a]);
                    }
                }
                acc += term.re;
            }
            assert!((v[0][p] - acc).abs() < 1e-8 * scale, "{} vs {}", v[0][p], acc);
        }
    }

    #[test]
    fn nufft_reproduces_lattice_values() {
        let g = Grid::new(3, 8).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 7.0).sin() * (x[1] + 0.3 * x[2]).cos());
        let ev = OffGrid::new(&[&f]);
        let mut pts = Vec::new();
        let mut x = [0.0; 3];
        for i in 0..g.len() {
            g.point(i, &mut x);
            pts.extend_from_slice(&x);
        }
        let v = ev.eval(&pts);
        for (a, b) in v[0].iter().zip(f.data()) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }
}
