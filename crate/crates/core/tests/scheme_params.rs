use convex_transport::scheme::{choose_exponents, cutoff_from_norms, exponent_conditions, Ladder, TimePartition};
use convex_transport::{Error, Grid, TimeGrid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chosen_exponents_satisfy_all_conditions(d in 3usize..7, frac in 0.0f64..0.999) {
        let p = 1.0 + frac * (d as f64 - 2.0);
        let e = choose_exponents(p, d, 1.0).unwrap();
        let c = exponent_conditions(&e, p, d);
        prop_assert!(c.iter().all(|&v| v < 0.0), "{:?} -> {:?}", e, c);
        prop_assert!(e.alpha >= 1.0 && e.beta > 1.0 + e.alpha - 1e-12);
    }
}

#[test]
fn exponents_reject_supercritical_integrability() {
    for d in 3..6 {
        let top = d as f64 - 1.0;
        assert!(matches!(choose_exponents(top, d, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(choose_exponents(top + 0.5, d, 1.0), Err(Error::Infeasible(_))));
    }
    assert!(choose_exponents(0.5, 3, 1.0).is_err());
    assert!(choose_exponents(1.5, 3, 0.5).is_err());
}

#[test]
fn partition_derivative_and_interleaving() {
    let p = TimePartition::new(0.25).unwrap();
    assert_eq!(p.count(), 4);
    let h = 1e-6;
    for s in 1..200 {
        let t = s as f64 / 200.0;
        for i in 0..p.count() {
            let fd = (p.alpha(i, t + h).0 - p.alpha(i, t - h).0) / (2.0 * h);
            assert!((fd - p.alpha(i, t).1).abs() < 1e-4 * (1.0 + fd.abs()), "i {i} t {t}");
        }
        // cutoffs of equal parity never overlap
        let act = p.active(t);
        for a in &act {
            for b in &act {
                assert!(a == b || p.is_primary(*a) != p.is_primary(*b), "t {t}: {act:?}");
            }
        }
    }
    assert!(TimePartition::new(1.0).is_err());
    assert!(TimePartition::new(0.3).is_err());
}

#[test]
fn anchors_need_even_lattice_multiples() {
    let p = TimePartition::new(0.25).unwrap();
    assert_eq!(p.anchor(1, TimeGrid::new(16).unwrap()).unwrap(), 6);
    assert!(p.anchor(1, TimeGrid::new(4).unwrap()).is_err());
}

#[test]
fn defect_cutoff_ramps_between_eighth_and_quarter() {
    let times = TimeGrid::new(32).unwrap();
    let delta = 1.0;
    // a step in the defect norm: the raw curve, no mollification possible
    let norms: Vec<f64> = (0..=32).map(|k| if k < 16 { 0.0 } else { 2.0 }).collect();
    let c = cutoff_from_norms(norms.clone(), delta, times).unwrap();
    for (k, (&v, &s)) in c.values.iter().zip(&c.smoothed).enumerate() {
        assert!((0.0..=1.0).contains(&v));
        if s <= c.lo {
            assert_eq!(v, 0.0, "k {k}");
        }
        if s >= c.hi {
            assert_eq!(v, 1.0, "k {k}");
        }
    }
    assert!(c.lo >= delta / 8.0 && c.hi <= delta / 4.0);
    // below delta/8 everywhere: psi vanishes identically
    let quiet = cutoff_from_norms(vec![0.1; 33], delta, times).unwrap();
    assert!(quiet.values.iter().all(|&v| v == 0.0));
    assert!(cutoff_from_norms(norms, 0.0, times).is_err());
}

#[test]
fn budget_ladder_fits_the_lattice() {
    let grid = Grid::new(3, 32).unwrap();
    let l = Ladder::budget(grid).unwrap();
    l.check(grid).unwrap();
    assert_eq!(l.lambda1, 1);
    assert!(l.mu1 > 6.0 && l.mu2 > 6.0);
    let thin = Ladder { lambda1: 1, mu1: 6.0, lambda2: 1, mu2: 7.0 };
    assert!(thin.check(grid).is_err());
    let coarse = Ladder { lambda1: 2, mu1: 7.0, lambda2: 4, mu2: 7.0 };
    assert!(coarse.check(grid).is_err());
    assert!(Ladder::budget(Grid::new(3, 16).unwrap()).is_err());
}
