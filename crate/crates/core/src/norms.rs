//! Lattice norms. Vector fields use the pointwise Euclidean norm, derivatives
//! of vector fields the pointwise Frobenius norm.

use crate::field::{fsum, ScalarField, VectorField};
use crate::spectral::{gradient, jacobian, second_derivatives};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Lp(f64),
    Linf,
    Ck(u32),
    W1p(f64),
}

impl Norm {
    pub fn label(&self) -> String {
        match self {
            Norm::Lp(p) => format!("L{p}"),
            Norm::Linf => "Linf".into(),
            Norm::Ck(k) => format!("C{k}"),
            Norm::W1p(p) => format!("W1,{p}"),
        }
    }
}

/// `(h^d sum |f|^p)^(1/p)` of nonnegative samples.
pub fn lp_of_abs(vals: &[f64], p: f64) -> f64 {
    let n = vals.len() as f64;
    if p == 1.0 {
        fsum(vals.iter().map(|v| v.abs())) / n
    } else if p == 2.0 {
        (fsum(vals.iter().map(|v| v * v)) / n).sqrt()
    } else {
        (fsum(vals.iter().map(|v| v.abs().powf(p))) / n).powf(1.0 / p)
    }
}

pub fn lp(f: &ScalarField, p: f64) -> f64 {
    lp_of_abs(f.data(), p)
}

pub fn lp_vec(v: &VectorField, p: f64) -> f64 {
    lp(&v.pointwise_norm(), p)
}

pub fn ck(f: &ScalarField, k: u32) -> f64 {
    let mut m = f.max_abs();
    if k >= 1 {
        m = m.max(gradient(f).comps().iter().fold(0.0f64, |a, c| a.max(c.max_abs())));
    }
    if k >= 2 {
        m = m.max(second_derivatives(f).iter().fold(0.0f64, |a, c| a.max(c.max_abs())));
    }
    assert!(k <= 2, "C^k norms implemented for k <= 2");
    m
}

pub fn ck_vec(v: &VectorField, k: u32) -> f64 {
    let mut m = v.max_abs();
    if k >= 1 {
        let jac = jacobian(v);
        let d = v.grid().d();
        for b in 0..d {
            let col = VectorField::new((0..d).map(|a| jac.entry(a, b).clone()).collect()).expect("d");
            m = m.max(col.max_abs());
        }
    }
    assert!(k <= 1, "vector C^k norms implemented for k <= 1");
    m
}

/// `||f||_p + ||Df||_p`
pub fn w1p(f: &ScalarField, p: f64) -> f64 {
    lp(f, p) + lp_vec(&gradient(f), p)
}

pub fn w1p_vec(v: &VectorField, p: f64) -> f64 {
    let jac = jacobian(v);
    let frob = jac
        .entries()
        .iter()
        .skip(1)
        .fold(jac.entries()[0].mul(&jac.entries()[0]), |acc, e| acc.add(&e.mul(e)))
        .map(f64::sqrt);
    lp_vec(v, p) + lp(&frob, p)
}

pub fn norm(f: &ScalarField, which: Norm) -> f64 {
    match which {
        Norm::Lp(p) => lp(f, p),
        Norm::Linf => f.max_abs(),
        Norm::Ck(k) => ck(f, k),
        Norm::W1p(p) => w1p(f, p),
    }
}

pub fn norm_vec(v: &VectorField, which: Norm) -> f64 {
    match which {
        Norm::Lp(p) => lp_vec(v, p),
        Norm::Linf => v.max_abs(),
        Norm::Ck(k) => ck_vec(v, k),
        Norm::W1p(p) => w1p_vec(v, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn sine_norms() {
        let g = Grid::new(3, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        assert!((lp(&f, 2.0) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((lp(&f, 1.0) - 2.0 / PI).abs() < 1e-2);
        assert!((ck(&f, 1) - 2.0 * PI).abs() < 1e-12);
        assert!((ck(&f, 2) - 4.0 * PI * PI).abs() < 1e-10);
        assert!((w1p(&f, 2.0) - 0.5f64.sqrt() * (1.0 + 2.0 * PI)).abs() < 1e-12);
    }
}
