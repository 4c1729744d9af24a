use std::fs;

use convex_transport::driver::io::{load_triple, read_scalar, read_vector, save_triple, write_scalar, write_vector};
use convex_transport::driver::{
    make_scenario, run_iterations, schedule_for, Diagnostics, Mode, RhoBar, RunConfig, ScheduleConfig, Tolerances,
};
use convex_transport::{Grid, ScalarField, TimeGrid, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn awkward_values(grid: Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specials = [0.0, -0.0, f64::MIN_POSITIVE / 8.0, f64::MAX, -1e-300, 1.0 / 3.0];
    let data = (0..grid.len())
        .map(|i| if i < specials.len() { specials[i] } else { rng.gen_range(-1e3..1e3) })
        .collect();
    ScalarField::from_vec(grid, data).unwrap()
}

#[test]
fn scalar_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(3, 8).unwrap();
    let f = awkward_values(grid, 1);
    let path = dir.path().join("f.bin");
    write_scalar(&path, &f).unwrap();
    let g = read_scalar(&path).unwrap();
    assert_eq!(g.grid(), grid);
    assert!(f.data().iter().zip(g.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn vector_round_trip_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(3, 8).unwrap();
    let v = VectorField::new((0..3).map(|s| awkward_values(grid, 10 + s)).collect()).unwrap();
    let path = dir.path().join("v.bin");
    write_vector(&path, &v).unwrap();
    let bytes = fs::read(&path).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    let header: serde_json::Value = serde_json::from_slice(&bytes[..nl]).unwrap();
    assert_eq!(header["d"], 3);
    assert_eq!(header["n"], 8);
    assert_eq!(header["components"], 3);
    assert_eq!(header["dtype"], "f64");
    assert_eq!(header["order"], "row-major");
    assert_eq!(bytes.len() - nl - 1, 3 * 512 * 8);
    let w = read_vector(&path).unwrap();
    for (a, b) in v.comps().iter().zip(w.comps()) {
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn truncated_and_padded_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(3, 8).unwrap();
    let path = dir.path().join("f.bin");
    write_scalar(&path, &awkward_values(grid, 2)).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_scalar(&path).is_err());
    let mut padded = bytes.clone();
    padded.extend_from_slice(&[0u8; 8]);
    fs::write(&path, &padded).unwrap();
    assert!(read_scalar(&path).is_err());
    // a vector file is not a scalar
    let v = VectorField::zeros(grid);
    write_vector(&path, &v).unwrap();
    assert!(read_scalar(&path).is_err());
}

#[test]
fn zero_step_run_reproduces_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let sc = make_scenario(&RhoBar::default(), TimeGrid::new(8).unwrap(), Grid::new(3, 8).unwrap()).unwrap();
    let tol = Tolerances::default();
    let cfg = ScheduleConfig { steps: 0, deltas: None, ps: None };
    let schedule = schedule_for(&sc.triple, &cfg, &tol, 0.1, Mode::RhoClose).unwrap();
    let out = run_iterations(&sc.triple, &schedule, &tol, Some(dir.path())).unwrap();
    assert!(out.report.rows.is_empty());
    assert_eq!(out.report.rho_distance, 0.0);
    let back = load_triple(&dir.path().join("q0")).unwrap();
    for k in 0..=8 {
        let same = |a: &ScalarField, b: &ScalarField| a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same(back.rho.at(k), sc.triple.rho.at(k)));
        assert!(sc.triple.u.at(k).comps().iter().zip(back.u.at(k).comps()).all(|(a, b)| same(a, b)));
        assert!(sc.triple.r.at(k).comps().iter().zip(back.r.at(k).comps()).all(|(a, b)| same(a, b)));
    }
}

#[test]
fn triple_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let sc = make_scenario(&RhoBar::default(), TimeGrid::new(8).unwrap(), Grid::new(3, 8).unwrap()).unwrap();
    save_triple(dir.path(), &sc.triple).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("triple.json")).unwrap()).unwrap();
    assert_eq!(meta["n_t"], 8);
    let back = load_triple(dir.path()).unwrap();
    assert_eq!(back.times().len(), 9);
    assert_eq!(back.rho.at(5).data(), sc.triple.rho.at(5).data());
}

#[test]
fn diagnostics_csv_is_deterministic() {
    let build = || {
        let mut d = Diagnostics::default();
        d.push(0, 0.25, "quadr", "L1", 1.0 / 3.0);
        d.push(1, 0.5, "nash", "L1", 1e-300);
        d.to_csv()
    };
    let a = build();
    assert_eq!(a, build());
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("q,t,term,norm,value"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert_eq!(row[2], "quadr");
    // full precision survives a text round trip
    assert_eq!(row[4].parse::<f64>().unwrap(), 1.0 / 3.0);
}

#[test]
fn config_rejects_unknown_blocks_and_bad_grids() {
    let ok = r#"{"grid":{"d":3,"n":32},"timegrid":{"n_t":16}}"#;
    let cfg = RunConfig::from_json(ok).unwrap();
    assert_eq!(cfg.schedule.steps, 0);
    assert!(RunConfig::from_json(r#"{"grid":{"d":3,"n":32},"timegrid":{"n_t":16},"extra":1}"#).is_err());
    assert!(RunConfig::from_json(r#"{"grid":{"d":3,"n":24},"timegrid":{"n_t":16}}"#).is_err());
    assert!(RunConfig::from_json(r#"{"grid":{"d":2,"n":32},"timegrid":{"n_t":16}}"#).is_err());
}
