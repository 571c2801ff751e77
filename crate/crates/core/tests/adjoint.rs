mod common;

use common::*;
use proptest::prelude::*;
use singular_pmp::adjoint::{
    adjoint_bsde, adjoint_explicit, auxiliary_processes, duality_check, duality_residual, variational_inequality_value,
    AdjointMethod, RegressionConfig,
};
use singular_pmp::controls::SingularControl;
use singular_pmp::model::{builtin_problem, ProblemSpec, BUILTIN_NAMES};
use singular_pmp::sde::{fundamental_solutions, simulate, simulate_variational, ControlRef};
use singular_pmp::Error;

fn example(name: &str) -> ProblemSpec<f64> {
    builtin_problem(name).unwrap()
}

fn rms(a: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in a {
        s += v * v;
        n += 1;
    }
    (s / n as f64).sqrt()
}

/// `g(x) = x`, no running cost, no state dependence: `p ≡ 1`.
fn unit_gradient() -> ProblemSpec<f64> {
    Scalar1 {
        drift: poly(&[(1.0, 0, 1)]),
        diffusion: konst(1.0),
        terminal: poly(&[(1.0, 1, 0)]),
        terminal_x: konst(1.0),
        ..Default::default()
    }
    .build()
}

#[test]
fn unit_terminal_gradient_gives_constant_adjoint() {
    let spec = unit_gradient();
    let (grid, noise) = setup(20, 300, 4);
    let v = constant(1.0, 20);
    let c = ControlRef::Strict(&v);
    let traj = simulate(&spec, c, &no_push(20), &grid, &noise).unwrap();
    let fund = fundamental_solutions(&spec, c, &traj, &noise).unwrap();
    let cfg = RegressionConfig::default();
    let ex = adjoint_explicit(&spec, c, &traj, &fund, &cfg).unwrap();
    assert!(ex.p().iter().all(|&p| (p - 1.0).abs() < 1e-12));
    assert!(ex.big_p().is_none());
    let bs = adjoint_bsde(&spec, c, &traj, &noise, &cfg).unwrap();
    assert!(bs.p().iter().all(|&p| (p - 1.0).abs() < 1e-12));
    assert!(bs.big_p().unwrap().iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn closed_form_adjoint_on_the_pure_noise_path() {
    // x = W, h_x = 2x, g = 0: p_t = 2 W_t (T − t) and P_t = 2 (T − t)
    let spec = example("example2_stochastic");
    let (grid, noise) = setup(100, 10_000, 2024);
    let v = constant(0.0, 100);
    let c = ControlRef::Strict(&v);
    let traj = simulate(&spec, c, &no_push(100), &grid, &noise).unwrap();
    let cfg = RegressionConfig { degree: 1 };
    let bs = adjoint_bsde(&spec, c, &traj, &noise, &cfg).unwrap();
    let fund = fundamental_solutions(&spec, c, &traj, &noise).unwrap();
    let ex = adjoint_explicit(&spec, c, &traj, &fund, &cfg).unwrap();
    let paths = traj.paths();
    let p_err = rms((0..paths).flat_map(|q| {
        let (traj, bs, grid) = (&traj, &bs, &grid);
        (0..=100).map(move |j| bs.p_at(q, j)[0] - 2.0 * traj.state(q, j)[0] * (1.0 - grid.t(j)))
    }));
    let big_p_err = rms((0..paths).flat_map(|q| {
        let (bs, grid) = (&bs, &grid);
        (0..100).map(move |j| bs.big_p_at(q, j).unwrap()[0] - 2.0 * (1.0 - grid.t(j)))
    }));
    let agree = rms(bs.p().iter().zip(ex.p().iter()).map(|(a, b)| a - b));
    assert!(p_err <= 5e-2, "p rmse {p_err}");
    assert!(big_p_err <= 5e-2, "P rmse {big_p_err}");
    assert!(agree <= 5e-2, "route agreement {agree}");
    assert_eq!(bs.method(), AdjointMethod::BsdeRegression);
    assert_eq!(bs.diagnostics().basis_sizes[50], 2);
}

#[test]
fn example1_relaxed_optimum_has_zero_adjoint() {
    let spec = example("example1");
    let (grid, noise) = setup(50, 1, 0);
    let mu = relaxed(half_half(), 50);
    let c = ControlRef::Relaxed(&mu);
    let traj = simulate(&spec, c, &no_push(50), &grid, &noise).unwrap();
    let fund = fundamental_solutions(&spec, c, &traj, &noise).unwrap();
    let ex = adjoint_explicit(&spec, c, &traj, &fund, &RegressionConfig::default()).unwrap();
    assert!(ex.p().iter().all(|&p| p == 0.0));
}

#[test]
fn zero_cost_gradients_give_exactly_zero_adjoint() {
    let spec = Scalar1 {
        drift: poly(&[(1.0, 0, 1)]),
        diffusion: konst(1.0),
        ..Default::default()
    }
    .build();
    let (grid, noise) = setup(30, 500, 1);
    let v = constant(1.0, 30);
    let c = ControlRef::Strict(&v);
    let traj = simulate(&spec, c, &no_push(30), &grid, &noise).unwrap();
    let bs = adjoint_bsde(&spec, c, &traj, &noise, &RegressionConfig::default()).unwrap();
    assert!(bs
        .p()
        .iter()
        .chain(bs.big_p().unwrap().iter())
        .all(|&v| v.abs() <= 1e-10));
}

#[test]
fn terminal_value_is_exact_for_both_routes() {
    let spec = Scalar1 {
        drift: poly(&[(-0.5, 1, 0), (1.0, 0, 1)]),
        drift_x: konst(-0.5),
        diffusion: konst(0.4),
        running: poly(&[(1.0, 2, 0)]),
        running_x: poly(&[(2.0, 1, 0)]),
        terminal: poly(&[(1.0, 4, 0)]),
        terminal_x: poly(&[(4.0, 3, 0)]),
        x0: 0.3,
        ..Default::default()
    }
    .build();
    let (grid, noise) = setup(40, 400, 6);
    let v = constant(1.0, 40);
    let c = ControlRef::Strict(&v);
    let traj = simulate(&spec, c, &no_push(40), &grid, &noise).unwrap();
    let fund = fundamental_solutions(&spec, c, &traj, &noise).unwrap();
    let cfg = RegressionConfig::default();
    for pair in [
        adjoint_explicit(&spec, c, &traj, &fund, &cfg).unwrap(),
        adjoint_bsde(&spec, c, &traj, &noise, &cfg).unwrap(),
    ] {
        for q in 0..traj.paths() {
            assert_eq!(pair.p_at(q, 40)[0], 4.0 * traj.terminal(q)[0].powi(3));
        }
    }
}

#[test]
fn routes_agree_on_builtins() {
    for name in BUILTIN_NAMES {
        let spec = example(name);
        let paths = if spec.is_deterministic() { 1 } else { 10_000 };
        let (grid, noise) = setup(100, paths, 31);
        let mu = relaxed(half_half(), 100);
        let c = ControlRef::Relaxed(&mu);
        let traj = simulate(&spec, c, &no_push(100), &grid, &noise).unwrap();
        let fund = fundamental_solutions(&spec, c, &traj, &noise).unwrap();
        let cfg = RegressionConfig::default();
        let ex = adjoint_explicit(&spec, c, &traj, &fund, &cfg).unwrap();
        let bs = adjoint_bsde(&spec, c, &traj, &noise, &cfg).unwrap();
        let agree = rms(bs.p().iter().zip(ex.p().iter()).map(|(a, b)| a - b));
        assert!(agree <= 5e-2, "{name}: {agree}");
    }
}

#[test]
fn too_few_paths_for_the_basis_is_an_error() {
    let spec = example("example2_stochastic");
    let (grid, noise) = setup(10, 2, 0);
    let v = constant(0.0, 10);
    let c = ControlRef::Strict(&v);
    let traj = simulate(&spec, c, &no_push(10), &grid, &noise).unwrap();
    assert!(matches!(
        adjoint_bsde(&spec, c, &traj, &noise, &RegressionConfig { degree: 3 }),
        Err(Error::RankDeficient { .. })
    ));
}

#[test]
fn duality_identity_on_example2() {
    let spec = example("example2_stochastic");
    let (grid, noise) = setup(100, 10_000, 17);
    let (mu, q) = (relaxed(half_half(), 100), dirac(1.0, 100));
    let xi = no_push(100);
    let r = duality_check(
        &spec,
        (ControlRef::Relaxed(&mu), &xi),
        (ControlRef::Relaxed(&q), &xi),
        &grid,
        &noise,
        &RegressionConfig::default(),
    )
    .unwrap();
    assert!(r.within(3.0, 0.0), "{r:?}");
}

#[test]
fn duality_identity_with_state_dependent_coefficients() {
    let spec = Scalar1 {
        drift: poly(&[(-0.5, 1, 0), (1.0, 0, 1)]),
        drift_x: konst(-0.5),
        diffusion: poly(&[(0.2, 1, 0), (0.3, 0, 0)]),
        diffusion_x: konst(0.2),
        running: poly(&[(1.0, 2, 0)]),
        running_x: poly(&[(2.0, 1, 0)]),
        terminal: poly(&[(1.0, 2, 0)]),
        terminal_x: poly(&[(2.0, 1, 0)]),
        x0: 0.5,
        ..Default::default()
    }
    .build();
    let (grid, noise) = setup(100, 10_000, 3);
    let (mu, q) = (relaxed(half_half(), 100), dirac(0.0, 100));
    let xi = no_push(100);
    let base = (ControlRef::Relaxed(&mu), &xi);
    let dir = (ControlRef::Relaxed(&q), &xi);
    let traj = simulate(&spec, base.0, &xi, &grid, &noise).unwrap();
    let z = simulate_variational(&spec, base, dir, &traj, &noise).unwrap();
    let fund = fundamental_solutions(&spec, base.0, &traj, &noise).unwrap();
    let cfg = RegressionConfig::default();
    let adj = adjoint_explicit(&spec, base.0, &traj, &fund, &cfg).unwrap();
    let aux = auxiliary_processes(&spec, base.0, &traj, &fund, &z, &adj, &noise, &cfg).unwrap();
    assert!(aux.alpha().slice(ndarray::s![.., 0, ..]).iter().all(|&a| a == 0.0));
    assert!(aux.terminal_identity_defect() < 1e-12);
    let r = duality_residual(&spec, &aux, &z, &traj);
    // the pathwise gap is the inverse defect of the fundamental pair, O(√Δt) per path
    assert!(
        r.residual <= 3.0 * r.std_error + 2e-2 * r.rhs.mean.abs().max(1e-3),
        "{r:?}"
    );

    // P recovered from Q agrees with the BSDE estimate
    let big_p = aux.martingale_p(&spec, base.0, &traj, &fund, &adj);
    let bs = adjoint_bsde(&spec, base.0, &traj, &noise, &cfg).unwrap();
    let diff = rms(big_p
        .slice(ndarray::s![.., ..100, .., ..])
        .iter()
        .zip(bs.big_p().unwrap().slice(ndarray::s![.., ..100, .., ..]).iter())
        .map(|(a, b)| a - b));
    assert!(diff < 0.1, "{diff}");
}

#[test]
fn duality_is_trivial_toward_the_base() {
    let spec = example("example2_stochastic");
    let (grid, noise) = setup(20, 200, 1);
    let mu = relaxed(half_half(), 20);
    let xi = no_push(20);
    let base = (ControlRef::Relaxed(&mu), &xi);
    let r = duality_check(&spec, base, base, &grid, &noise, &RegressionConfig::default()).unwrap();
    assert_eq!((r.residual, r.lhs.mean, r.rhs.mean), (0.0, 0.0, 0.0));
}

#[test]
fn duality_on_deterministic_example1_matches_the_ode_oracle() {
    // g = 0 so both sides vanish; the variational state itself follows z' = 1
    let spec = example("example1");
    let (grid, noise) = setup(100, 1, 0);
    let (mu, q) = (relaxed(half_half(), 100), dirac(1.0, 100));
    let xi = no_push(100);
    let r = duality_check(
        &spec,
        (ControlRef::Relaxed(&mu), &xi),
        (ControlRef::Relaxed(&q), &xi),
        &grid,
        &noise,
        &RegressionConfig::default(),
    )
    .unwrap();
    let oracle = 0.0 * rk4(|_, _| 1.0, 0.0, 1.0, 100);
    assert!((r.lhs.mean - oracle).abs() <= 1e-6 + grid.dt());
    assert!(r.residual <= 1e-6 + grid.dt());
}

#[test]
fn variational_inequality_examples() {
    // example2_separated at the half-half optimum toward δ₀: ∫(1 − 0)² dt = T
    let spec = example("example2_separated");
    let (grid, noise) = setup(100, 1, 0);
    let (mu, q) = (relaxed(half_half(), 100), dirac(0.0, 100));
    let xi = no_push(100);
    let base = (ControlRef::Relaxed(&mu), &xi);
    let traj = simulate(&spec, base.0, &xi, &grid, &noise).unwrap();
    let adj = adjoint_bsde(&spec, base.0, &traj, &noise, &RegressionConfig::default()).unwrap();
    let v = variational_inequality_value(&spec, base, (ControlRef::Relaxed(&q), &xi), &adj, &traj).unwrap();
    assert!((v.mean - 1.0).abs() < 1e-12);
    let same = variational_inequality_value(&spec, base, base, &adj, &traj).unwrap();
    assert_eq!(same.mean, 0.0);

    // singular_block: a unit push at one cell is priced by k + G p = 1 + 1
    let spec = example("singular_block");
    let (grid, noise) = setup(100, 2000, 5);
    let v = constant(-0.5, 100);
    let traj = simulate(&spec, ControlRef::Strict(&v), &xi, &grid, &noise).unwrap();
    let adj = adjoint_bsde(
        &spec,
        ControlRef::Strict(&v),
        &traj,
        &noise,
        &RegressionConfig::default(),
    )
    .unwrap();
    let eta = SingularControl::shared((0..100).map(|j| vec![if j == 30 { 1.0 } else { 0.0 }]).collect()).unwrap();
    let val = variational_inequality_value(
        &spec,
        (ControlRef::Strict(&v), &xi),
        (ControlRef::Strict(&v), &eta),
        &adj,
        &traj,
    )
    .unwrap();
    assert!((val.mean - 2.0).abs() < 1e-9, "{val:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_terminal_cost_gives_its_slope(slope in -3.0f64..3.0, seed in 0u64..100) {
        let spec = Scalar1 {
            drift: poly(&[(1.0, 0, 1)]),
            diffusion: konst(1.0),
            terminal: poly(&[(slope, 1, 0)]),
            terminal_x: konst(slope),
            ..Default::default()
        }
        .build();
        let (grid, noise) = setup(10, 100, seed);
        let v = constant(0.0, 10);
        let c = ControlRef::Strict(&v);
        let traj = simulate(&spec, c, &no_push(10), &grid, &noise).unwrap();
        let bs = adjoint_bsde(&spec, c, &traj, &noise, &RegressionConfig::default()).unwrap();
        prop_assert!(bs.p().iter().all(|&p| (p - slope).abs() < 1e-10));
    }
}
