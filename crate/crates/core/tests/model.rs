mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singular_pmp::controls::{Action, SingularControl};
use singular_pmp::model::{
    builtin_problem, singular_block, validate_problem, NoiseBatch, ProblemSpec, TimeGrid, BUILTIN_NAMES,
};
use singular_pmp::sde::{cost, simulate, ControlRef};
use singular_pmp::Error;

#[test]
fn example1_passes_validation() {
    let spec: ProblemSpec<f64> = builtin_problem("example1").unwrap();
    let report = validate_problem(&spec).unwrap();
    assert!(report.passed(), "{:?}", report.violations());
    assert_eq!(spec.horizon(), 1.0);
    assert_eq!(spec.x0(), &[0.0]);
}

#[test]
fn every_builtin_validates() {
    for name in BUILTIN_NAMES {
        let spec: ProblemSpec<f64> = builtin_problem(name).unwrap();
        assert!(validate_problem(&spec).unwrap().passed(), "{name}");
    }
}

#[test]
fn negative_singular_cost_is_flagged() {
    let spec = Scalar1 {
        singular_cost: konst(-1.0),
        ..Default::default()
    }
    .build();
    let report = validate_problem(&spec).unwrap();
    assert!(!report.passed());
    assert!(!report.check("singular_cost_nonnegative").unwrap().passed);
}

#[test]
fn wrong_terminal_gradient_is_flagged() {
    // g = x², declared g_x = 2.2x
    let spec = Scalar1 {
        terminal: poly(&[(1.0, 2, 0)]),
        terminal_x: poly(&[(2.2, 1, 0)]),
        ..Default::default()
    }
    .build();
    let report = validate_problem(&spec).unwrap();
    assert!(!report.check("gradient_consistency:terminal_cost_x").unwrap().passed);
    assert!(report.check("gradient_consistency:drift_x").unwrap().passed);
}

#[test]
fn validation_is_deterministic() {
    let spec = Scalar1 {
        terminal: poly(&[(1.0, 2, 0)]),
        terminal_x: poly(&[(2.2, 1, 0)]),
        ..Default::default()
    }
    .build();
    let a = serde_json::to_string(&validate_problem(&spec).unwrap()).unwrap();
    let b = serde_json::to_string(&validate_problem(&spec).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_builtin_lists_the_names() {
    let err = builtin_problem::<f64>("example3").unwrap_err();
    let Error::UnknownBuiltin { available, .. } = &err else {
        panic!("{err:?}")
    };
    for name in BUILTIN_NAMES {
        assert!(available.contains(name));
    }
}

#[test]
fn json_round_trip_is_exact_at_random_probes() {
    for name in BUILTIN_NAMES {
        let spec: ProblemSpec<f64> = builtin_problem(name).unwrap();
        let back = ProblemSpec::<f64>::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back.u1_grid(), spec.u1_grid());
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let t = rng.random_range(0.0..1.0);
            let x = [rng.random_range(-5.0..5.0)];
            let a = spec.u1_grid()[rng.random_range(0..spec.u1_grid().len())].clone();
            let act = Action::Point(&a);
            let (mut u, mut v) = ([0.0], [0.0]);
            spec.drift(t, &x, act, &mut u);
            back.drift(t, &x, act, &mut v);
            assert_eq!(u, v);
            spec.diffusion(t, &x, act, &mut u);
            back.diffusion(t, &x, act, &mut v);
            assert_eq!(u, v);
            spec.running_cost_x(t, &x, act, &mut u);
            back.running_cost_x(t, &x, act, &mut v);
            assert_eq!(u, v);
            spec.singular_cost(t, &mut u);
            back.singular_cost(t, &mut v);
            assert_eq!(u, v);
            assert_eq!(spec.running_cost(t, &x, act), back.running_cost(t, &x, act));
            assert_eq!(spec.terminal_cost(&x), back.terminal_cost(&x));
        }
    }
}

#[test]
fn malformed_json_is_rejected() {
    assert!(ProblemSpec::<f64>::from_json("{\"name\": 1}").is_err());
    let spec: ProblemSpec<f64> = builtin_problem("example1").unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&spec.to_json().unwrap()).unwrap();
    v["u1_grid"] = serde_json::json!([]);
    assert!(ProblemSpec::<f64>::from_json(&v.to_string()).is_err());
}

#[test]
fn singular_block_rejects_nonpositive_kappa() {
    assert!(singular_block::<f64>(0.0).is_err());
    let spec = singular_block::<f64>(1.0).unwrap();
    let mut k = [0.0];
    spec.singular_cost(0.5, &mut k);
    assert_eq!(k, [1.0]);
}

#[test]
fn singular_block_optimum_has_no_push() {
    // brute force over all nondecreasing ξ on 4 cells with increments in {0, ½, 1}
    let spec = singular_block::<f64>(1.0).unwrap();
    let steps = 4;
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let noise = NoiseBatch::generate(4, 2000, &grid, 1).unwrap();
    let u = constant(-0.5, steps);
    let c = ControlRef::Strict(&u);
    let mut best = (f64::INFINITY, usize::MAX);
    let mut base = 0.0;
    for code in 0..3usize.pow(steps as u32) {
        let incs: Vec<Vec<f64>> = (0..steps)
            .map(|j| vec![((code / 3usize.pow(j as u32)) % 3) as f64 * 0.5])
            .collect();
        let total: f64 = incs.iter().map(|v| v[0]).sum();
        let xi = SingularControl::shared(incs).unwrap();
        let traj = simulate(&spec, c, &xi, &grid, &noise).unwrap();
        let j = cost(&spec, c, &xi, &traj).unwrap().total.mean;
        if code == 0 {
            base = j;
            assert!((j + 0.25).abs() < 0.1);
        }
        // common noise: the cost moves by (1 + κ) per unit of push
        assert!((j - base - 2.0 * total).abs() < 1e-9);
        if j < best.0 {
            best = (j, code);
        }
    }
    assert_eq!(best.1, 0);
}
