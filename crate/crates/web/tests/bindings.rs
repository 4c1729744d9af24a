use convex_transport_web::{antidiv_mode_native, exponents_native, mikado_slice_native};

#[test]
fn mikado_slice_is_zero_mean_with_one_tube() {
    let v = mikado_slice_native(7.0, 32, 2).unwrap();
    assert_eq!(v.len(), 32 * 32 + 3);
    let (lo, hi, mean) = (v[1024], v[1025], v[1026]);
    assert!(mean.abs() < 1e-10 * hi);
    assert!(hi > 0.0 && lo < 0.0);
    // the peak sits on the plane since the tube runs across it
    let peak = v[..1024].iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(peak, hi);
    assert!(mikado_slice_native(4.0, 32, 0).is_err());
    assert!(mikado_slice_native(7.0, 128, 0).is_err());
}

#[test]
fn antidiv_of_a_mode_has_closed_form_size() {
    let v = antidiv_mode_native([1, 2, 0], 16).unwrap();
    let (max_u, residual) = (v[256], v[257]);
    let k = (5.0f64).sqrt();
    assert!((max_u - 1.0 / (2.0 * std::f64::consts::PI * k)).abs() < 1e-12);
    assert!(residual < 1e-12);
}

#[test]
fn exponents_satisfy_their_conditions() {
    let v = exponents_native(1.5, 4, 1.0).unwrap();
    assert_eq!(v.len(), 7);
    assert!(v[3..].iter().all(|&c| c < 0.0));
    assert!(exponents_native(2.0, 3, 1.0).is_err());
}
