use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::interp::OffGrid;

/// `g_lambda(x) = g(lambda x)` sampled on `target`, an exact lattice permutation.
///
/// Requires that `lambda * x` lands on the lattice of `g` for every point of
/// `target`, i.e. `target.n()` divides `lambda * g.n()`.
pub fn dilate_onto(g: &ScalarField, lambda: usize, target: Grid) -> Result<ScalarField> {
    let src = g.grid();
    if lambda == 0 || src.d() != target.d() || (lambda * src.n()) % target.n() != 0 {
        return Err(Error::Resolution(format!(
            "cannot dilate an n={} field by {lambda} onto n={}",
            src.n(),
            target.n()
        )));
    }
    let step = lambda * src.n() / target.n();
    let d = src.d();
    let ns = src.n();
    let mut idx = vec![0usize; d];
    let mut sidx = vec![0usize; d];
    let data = (0..target.len())
        .map(|f| {
            target.unflat(f, &mut idx);
            for a in 0..d {
                sidx[a] = (idx[a] * step) % ns;
            }
            g.data()[src.flat(&sidx)]
        })
        .collect();
    ScalarField::from_vec(target, data)
}

/// `g_lambda(x) = g(lambda x)` on the same grid; `lambda` must divide `n`.
pub fn dilate(g: &ScalarField, lambda: usize) -> Result<ScalarField> {
    if lambda == 0 || g.grid().n() % lambda != 0 {
        return Err(Error::Resolution(format!(
            "dilation factor {lambda} does not divide n = {}",
            g.grid().n()
        )));
    }
    dilate_onto(g, lambda, g.grid())
}

pub fn dilate_vector_onto(v: &VectorField, lambda: usize, target: Grid) -> Result<VectorField> {
    VectorField::new(
        v.comps()
            .iter()
            .map(|c| dilate_onto(c, lambda, target))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Points `scale * (x + disp(x))` for every lattice point `x` of `disp`.
pub fn mapped_points(disp: Option<&VectorField>, grid: Grid, scale: f64) -> Vec<f64> {
    let d = grid.d();
    let mut pts = vec![0.0; grid.len() * d];
    let mut x = vec![0.0; d];
    for i in 0..grid.len() {
        grid.point(i, &mut x);
        for a in 0..d {
            let y = x[a] + disp.map_or(0.0, |v| v.comp(a).data()[i]);
            pts[i * d + a] = scale * y;
        }
    }
    pts
}

/// `f(scale * Phi(x))` with `Phi(x) = x + disp(x)`, via the trigonometric interpolant of `f`.
pub fn compose(f: &ScalarField, disp: &VectorField, scale: f64) -> ScalarField {
    compose_many(&[f], disp, scale).pop().expect("one field")
}

pub fn compose_many(fs: &[&ScalarField], disp: &VectorField, scale: f64) -> Vec<ScalarField> {
    let grid = disp.grid();
    let pts = mapped_points(Some(disp), grid, scale);
    OffGrid::new(fs)
        .eval(&pts)
        .into_iter()
        .map(|v| ScalarField::from_vec(grid, v).expect("sized"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilate_is_permutation_of_samples() {
        let g = Grid::new(3, 8).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] + 10.0 * x[1] + 100.0 * x[2]);
        let d2 = dilate(&f, 2).unwrap();
        let mut x = [0.0; 3];
        for i in 0..g.len() {
            g.point(i, &mut x);
            let y: Vec<f64> = x.iter().map(|v| (2.0 * v) % 1.0).collect();
            assert_eq!(d2.data()[i], y[0] + 10.0 * y[1] + 100.0 * y[2]);
        }
        assert!(dilate(&f, 3).is_err());
    }

    #[test]
    fn tiling_from_coarse() {
        let c = Grid::new(3, 8).unwrap();
        let f = Grid::new(3, 16).unwrap();
        let coarse = ScalarField::from_fn(c, |x| (x[0] * 3.0).sin() + x[2]);
        let tiled = dilate_onto(&coarse, 2, f).unwrap();
        let mut x = [0.0; 3];
        for i in 0..f.len() {
            f.point(i, &mut x);
            let y: Vec<f64> = x.iter().map(|v| (2.0 * v) % 1.0).collect();
            assert!((tiled.data()[i] - ((y[0] * 3.0).sin() + y[2])).abs() < 1e-15);
        }
    }
}
