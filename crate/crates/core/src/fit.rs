use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares slope of `log y` on `log x` with a 95% interval.
#[derive(Debug, Clone, Serialize)]
pub struct Fit {
    pub term: &'static str,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub points: usize,
    pub note: Option<String>,
}

pub fn loglog_fit(term: &'static str, xs: &[f64], ys: &[f64]) -> Fit {
    let none = |note: String| Fit { term, slope: None, intercept: None, ci: None, points: xs.len(), note: Some(note) };
    if ys.iter().all(|&y| y == 0.0) {
        return none("identically zero".into());
    }
    if ys.iter().any(|&y| !(y > 0.0)) || xs.iter().any(|&x| !(x > 0.0)) {
        return none("non-positive values".into());
    }
    if xs.len() < 2 {
        return none("needs at least two points".into());
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return none("axis values coincide".into());
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ci = if lx.len() > 2 {
        let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (sse / (n - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, n - 2.0).expect("dof > 0").inverse_cdf(0.975);
        Some((slope - t * se, slope + t * se))
    } else {
        None
    };
    Fit { term, slope: Some(slope), intercept: Some(intercept), ci, points: xs.len(), note: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        let f = loglog_fit("t", &xs, &ys);
        assert!((f.slope.unwrap() + 1.5).abs() < 1e-12);
        let (lo, hi) = f.ci.unwrap();
        assert!(hi - lo < 1e-9);
        assert!(loglog_fit("z", &xs, &[0.0; 4]).slope.is_none());
    }
}
