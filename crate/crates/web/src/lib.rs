//! Browser bindings: a Mikado cross-section, the standard antidivergence of a
//! Fourier mode, and the exponent chooser.
//!
//! The `*_native` functions carry the logic and are tested on the host; the
//! exported wrappers only translate errors into JS strings.

use convex_transport::mikado::build_mikado;
use convex_transport::scheme::{choose_exponents, exponent_conditions};
use convex_transport::spectral::{divergence, std_antidiv};
use convex_transport::{Grid, ScalarField};
use wasm_bindgen::prelude::*;

const D: usize = 3;

/// Values on the plane `x[axis] = 0`, row-major over the remaining two axes.
fn plane(f: &ScalarField, axis: usize) -> Vec<f64> {
    let n = f.grid().n();
    let data = f.data();
    let (p, q) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let stride = |a: usize| n.pow((D - 1 - a) as u32);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(data[i * stride(p) + j * stride(q)]);
        }
    }
    out
}

fn grid(n: usize) -> Result<Grid, String> {
    if n > 64 {
        return Err(format!("n = {n} is too large for the browser (max 64)"));
    }
    Grid::new(D, n).map_err(|e| e.to_string())
}

/// Cross-section of Theta for the tube along `axis`, followed by
/// `[min, max, mean]` of the full field.
pub fn mikado_slice_native(mu: f64, n: usize, axis: usize) -> Result<Vec<f64>, String> {
    let pair = build_mikado(axis, mu, grid(n)?, (2, 0)).map_err(|e| e.to_string())?;
    let th = &pair.theta;
    let mut out = plane(th, axis);
    let lo = th.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = th.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.extend([lo, hi, th.mean()]);
    Ok(out)
}

/// `|u|` on the plane `x0 = 0` for `u = grad inverse_laplacian cos(2 pi k.x)`,
/// followed by `[max |u|, max |div u - f|]`.
pub fn antidiv_mode_native(k: [i32; 3], n: usize) -> Result<Vec<f64>, String> {
    let g = grid(n)?;
    let f = ScalarField::from_fn(g, |x| {
        let phase = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>();
        (2.0 * std::f64::consts::PI * phase).cos()
    });
    let u = std_antidiv(&f).map_err(|e| e.to_string())?;
    let mag = u.pointwise_norm();
    let residual = divergence(&u).sub(&f).max_abs();
    let mut out = plane(&mag, 0);
    out.extend([mag.max_abs(), residual]);
    Ok(out)
}

/// `[alpha, beta, gamma, c1, c2, c3, c4]`; every `c` is negative on success.
pub fn exponents_native(p: f64, d: usize, margin: f64) -> Result<Vec<f64>, String> {
    let e = choose_exponents(p, d, margin).map_err(|e| e.to_string())?;
    let mut out = vec![e.alpha, e.beta, e.gamma];
    out.extend(exponent_conditions(&e, p, d));
    Ok(out)
}

#[wasm_bindgen]
pub fn mikado_slice(mu: f64, n: usize, axis: usize) -> Result<Vec<f64>, JsValue> {
    mikado_slice_native(mu, n, axis).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn antidiv_mode(k0: i32, k1: i32, k2: i32, n: usize) -> Result<Vec<f64>, JsValue> {
    antidiv_mode_native([k0, k1, k2], n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn exponents(p: f64, d: usize, margin: f64) -> Result<Vec<f64>, JsValue> {
    exponents_native(p, d, margin).map_err(|e| JsValue::from_str(&e))
}
