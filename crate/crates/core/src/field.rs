use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Compensated (Neumaier) sum in a fixed order.
pub fn fsum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
    mean: OnceLock<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.data == other.data
    }
}

impl ScalarField {
    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(ScalarField { grid, data, mean: OnceLock::new() })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, data: vec![0.0; grid.len()], mean: OnceLock::new() }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, data: vec![c; grid.len()], mean: OnceLock::new() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.d()];
        let data = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        ScalarField { grid, data, mean: OnceLock::new() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        self.mean = OnceLock::new();
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Lattice mean, cached.
    pub fn mean(&self) -> f64 {
        *self
            .mean
            .get_or_init(|| fsum(self.data.iter().copied()) / self.data.len() as f64)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
            mean: OnceLock::new(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            mean: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.mean = OnceLock::new();
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn subtract_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }
}

/// Vector field with `d` components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(Error::Grid("vector field needs components".into()));
        };
        let g = first.grid();
        if comps.len() != g.d() || comps.iter().any(|c| c.grid() != g) {
            return Err(Error::Grid("vector components must match the grid dimension".into()));
        }
        Ok(VectorField { comps })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { comps: (0..grid.d()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64], usize) -> f64) -> Self {
        VectorField {
            comps: (0..grid.d()).map(|a| ScalarField::from_fn(grid, |x| f(x, a))).collect(),
        }
    }

    /// `s * e_axis`
    pub fn along(s: &ScalarField, axis: usize) -> Self {
        let g = s.grid();
        let comps = (0..g.d())
            .map(|a| if a == axis { s.clone() } else { ScalarField::zeros(g) })
            .collect();
        VectorField { comps }
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid()
    }

    pub fn comp(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.comps[a]
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<ScalarField> {
        self.comps
    }

    pub fn map_comps(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField { comps: self.comps.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        VectorField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        VectorField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_comps(|s| s.scale(c))
    }

    pub fn scale_by(&self, s: &ScalarField) -> Self {
        self.map_comps(|c| c.mul(s))
    }

    pub fn axpy(&mut self, c: f64, o: &Self) {
        for (a, b) in self.comps.iter_mut().zip(&o.comps) {
            a.axpy(c, b);
        }
    }

    pub fn dot(&self, o: &Self) -> ScalarField {
        let g = self.grid();
        let mut out = vec![0.0; g.len()];
        for (a, b) in self.comps.iter().zip(&o.comps) {
            for (o, (x, y)) in out.iter_mut().zip(a.data().iter().zip(b.data())) {
                *o += x * y;
            }
        }
        ScalarField::from_vec(g, out).expect("same grid")
    }

    /// Pointwise Euclidean norm.
    pub fn pointwise_norm(&self) -> ScalarField {
        self.dot(self).map(f64::sqrt)
    }

    pub fn mean(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.mean()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.pointwise_norm().max_abs()
    }
}

/// `d x d` matrix field, entries stored row-major: `entry(r, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    d: usize,
    entries: Vec<ScalarField>,
}

impl MatrixField {
    pub fn new(entries: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::Grid("matrix field needs entries".into()));
        };
        let g = first.grid();
        let d = g.d();
        if entries.len() != d * d || entries.iter().any(|e| e.grid() != g) {
            return Err(Error::Grid("matrix entries must form a d x d array".into()));
        }
        Ok(MatrixField { d, entries })
    }

    pub fn identity(grid: Grid) -> Self {
        let d = grid.d();
        let entries = (0..d * d)
            .map(|k| ScalarField::constant(grid, if k / d == k % d { 1.0 } else { 0.0 }))
            .collect();
        MatrixField { d, entries }
    }

    pub fn grid(&self) -> Grid {
        self.entries[0].grid()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entry(&self, r: usize, c: usize) -> &ScalarField {
        &self.entries[r * self.d + c]
    }

    /// Matrix at lattice point `i`, row-major.
    pub fn at(&self, i: usize, out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.data()[i];
        }
    }

    pub fn from_pointwise(grid: Grid, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let d = grid.d();
        let mut bufs = vec![vec![0.0; grid.len()]; d * d];
        let mut m = vec![0.0; d * d];
        for i in 0..grid.len() {
            f(i, &mut m);
            for (b, v) in bufs.iter_mut().zip(&m) {
                b[i] = *v;
            }
        }
        MatrixField {
            d,
            entries: bufs
                .into_iter()
                .map(|b| ScalarField::from_vec(grid, b).expect("sized"))
                .collect(),
        }
    }

    pub fn apply(&self, v: &VectorField) -> VectorField {
        let g = self.grid();
        let d = self.d;
        let comps = (0..d)
            .map(|r| {
                let mut out = vec![0.0; g.len()];
                for c in 0..d {
                    let e = self.entry(r, c).data();
                    let x = v.comp(c).data();
                    for i in 0..out.len() {
                        out[i] += e[i] * x[i];
                    }
                }
                ScalarField::from_vec(g, out).expect("sized")
            })
            .collect();
        VectorField { comps }
    }

    /// `M^T v`
    pub fn apply_transpose(&self, v: &VectorField) -> VectorField {
        self.transpose().apply(v)
    }

    pub fn transpose(&self) -> Self {
        let d = self.d;
        let entries = (0..d * d).map(|k| self.entry(k % d, k / d).clone()).collect();
        MatrixField { d, entries }
    }

    pub fn add(&self, o: &Self) -> Self {
        MatrixField {
            d: self.d,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        MatrixField {
            d: self.d,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn determinant(&self) -> ScalarField {
        let g = self.grid();
        let d = self.d;
        let mut m = vec![0.0; d * d];
        let data = (0..g.len())
            .map(|i| {
                self.at(i, &mut m);
                crate::linalg::det(&m, d)
            })
            .collect();
        ScalarField::from_vec(g, data).expect("sized")
    }

    /// Inverse via the cofactor formula `adj(M) / det(M)`.
    pub fn inverse_cofactor(&self) -> Self {
        let g = self.grid();
        let d = self.d;
        let mut m = vec![0.0; d * d];
        MatrixField::from_pointwise(g, |i, out| {
            self.at(i, &mut m);
            crate::linalg::inverse_cofactor(&m, d, out);
        })
    }

    /// Max over the lattice of the spectral (operator 2-) norm.
    pub fn max_operator_norm(&self) -> f64 {
        let g = self.grid();
        let d = self.d;
        let mut m = vec![0.0; d * d];
        let mut best = 0.0f64;
        for i in 0..g.len() {
            self.at(i, &mut m);
            best = best.max(crate::linalg::operator_norm(&m, d));
        }
        best
    }

    /// Max over lattice and entries of `|M_rc|`.
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, e| m.max(e.max_abs()))
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }
}
