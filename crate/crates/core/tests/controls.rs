mod common;

use common::*;
use proptest::prelude::*;
use singular_pmp::controls::{
    chattering, chattering_periodic, convex_combine, occupation_fractions, Measure, PerturbationSpec, RelaxedControl,
    SingularControl, StrictControl,
};
use singular_pmp::model::{builtin_problem, ProblemSpec};

fn grid21() -> Vec<f64> {
    (0..21).map(|i| (i as f64 - 10.0) / 10.0).collect()
}

/// Random measure on the 21-point grid from index/weight pairs.
fn measure_from(picks: &[(usize, f64)]) -> Measure<f64> {
    let g = grid21();
    let total: f64 = picks.iter().map(|p| p.1).sum();
    let atoms = picks.iter().map(|&(i, _)| vec![g[i]]).collect();
    let mut w: Vec<f64> = picks.iter().map(|p| p.1 / total).collect();
    let tail: f64 = w[1..].iter().sum();
    w[0] = 1.0 - tail;
    Measure::new(atoms, w).unwrap()
}

fn picks() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..21, 0.05f64..1.0), 1..5)
}

#[test]
fn dirac_integral_is_evaluation() {
    let m = Measure::dirac(vec![0.3f64]);
    assert_eq!(m.integrate(|a| a[0].sin()).unwrap(), 0.3f64.sin());
    let u = constant(0.7, 5);
    let q = RelaxedControl::dirac_embed(&u);
    for j in 0..5 {
        assert_eq!(q.measure(0, j).integrate(|a| a[0] * a[0]).unwrap(), 0.7 * 0.7);
    }
}

#[test]
fn integrate_reports_non_finite_values() {
    assert!(half_half().integrate(|a| 1.0 / (a[0] + 1.0)).is_err());
}

#[test]
fn mixing_two_diracs() {
    let (mu, q) = (dirac(0.0, 3), dirac(1.0, 3));
    let pert = PerturbationSpec::new(0.5, q, no_push(3)).unwrap();
    let (mix, _) = convex_combine((&mu, &no_push(3)), &pert).unwrap();
    let m = mix.measure(0, 1);
    assert_eq!(m.integrate(|a| a[0]).unwrap(), 0.5);
    assert_eq!(m.len(), 2);
}

#[test]
fn theta_out_of_range_is_rejected() {
    assert!(PerturbationSpec::new(1.5, dirac(0.0, 2), no_push(2)).is_err());
    assert!(PerturbationSpec::new(-0.1, dirac(0.0, 2), no_push(2)).is_err());
}

#[test]
fn chattering_examples() {
    // single atom: constant output at every refinement
    for n in [1, 3, 8] {
        let u = chattering(&dirac(0.4, 2), n).unwrap();
        assert_eq!(u.steps(), 2 * n);
        assert!((0..2 * n).all(|s| u.value(0, s) == [0.4]));
    }
    let u = chattering(&relaxed(half_half(), 1), 2).unwrap();
    assert_eq!((u.value(0, 0), u.value(0, 1)), (&[-1.0][..], &[1.0][..]));
    let occ = occupation_fractions(&u, 0, 0..2);
    assert_eq!(occ.weights(), &[0.5, 0.5]);

    // N = n cells, one sub-step per half: the sign-alternating pattern of the bang-bang sequence
    let n = 8;
    let u = chattering(&relaxed(half_half(), n), 2).unwrap();
    for s in 0..2 * n {
        assert_eq!(u.value(0, s)[0], if s % 2 == 0 { -1.0 } else { 1.0 });
    }
    assert_eq!(occupation_fractions(&u, 0, 0..2 * n).weights(), &[0.5, 0.5]);
}

#[test]
fn chattering_reports_the_minimum_refinement() {
    let m = Measure::new(vec![vec![-1.0], vec![0.0], vec![1.0]], vec![0.5, 0.25, 0.25]).unwrap();
    let err = chattering(&relaxed(m, 1), 2).unwrap_err();
    assert!(
        matches!(
            err,
            singular_pmp::Error::ChatteringTooCoarse {
                requested: 2,
                minimum: 3
            }
        ),
        "{err:?}"
    );
}

#[test]
fn periodic_chattering_keeps_the_grid() {
    let u = chattering_periodic(&relaxed(half_half(), 16), 4).unwrap();
    assert_eq!(u.steps(), 16);
    assert_eq!(occupation_fractions(&u, 0, 0..16).weights(), &[0.5, 0.5]);
    assert!(chattering_periodic(&relaxed(half_half(), 10), 4).is_err());
}

#[test]
fn controls_json_round_trip() {
    let u = StrictControl::shared(vec![vec![1.0], vec![-1.0]]).unwrap();
    let back: StrictControl<f64> = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
    assert_eq!(back, u);
    let q = relaxed(half_half(), 3);
    let back: RelaxedControl<f64> = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
    assert_eq!(back, q);
    let xi = SingularControl::per_path(vec![vec![vec![0.0], vec![2.0]], vec![vec![1.0], vec![0.0]]]).unwrap();
    let back: SingularControl<f64> = serde_json::from_str(&serde_json::to_string(&xi).unwrap()).unwrap();
    assert_eq!(back, xi);
    assert_eq!(xi.cumulative(0, 2), vec![2.0]);
    assert!(SingularControl::shared(vec![vec![-1.0]]).is_err());
}

#[test]
fn controls_are_checked_against_the_problem() {
    let spec: ProblemSpec<f64> = builtin_problem("example1").unwrap();
    assert!(constant(1.0, 4).check(&spec, 4, 1).is_ok());
    assert!(constant(0.5, 4).check(&spec, 4, 1).is_err());
    assert!(constant(1.0, 4).check(&spec, 5, 1).is_err());
}

type TestFunction = (fn(f64) -> f64, f64);

fn test_functions() -> Vec<TestFunction> {
    // (f, max |f| over [−1, 1])
    vec![
        (|a| a, 1.0),
        (|a| a * a, 1.0),
        (|a| (3.0 * a).sin(), 1.0),
        (|a| (1.0 - a * a).powi(2), 1.0),
        (|a| (2.0 * a).cos(), 1.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_is_linear(p in picks(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let m = measure_from(&p);
        let f = |a: &[f64]| a[0].sin();
        let g = |a: &[f64]| a[0] * a[0] - 0.3;
        let lhs = m.integrate(|a| alpha * f(a) + beta * g(a)).unwrap();
        let rhs = alpha * m.integrate(f).unwrap() + beta * m.integrate(g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
    }

    #[test]
    fn convex_combine_stays_admissible(
        a in picks(), b in picks(), theta in 0.0f64..=1.0,
        xs in prop::collection::vec(0.0f64..2.0, 4), ys in prop::collection::vec(0.0f64..2.0, 4),
    ) {
        let mu = relaxed(measure_from(&a), 4);
        let q = relaxed(measure_from(&b), 4);
        let xi = SingularControl::shared(xs.iter().map(|&v| vec![v]).collect()).unwrap();
        let eta = SingularControl::shared(ys.iter().map(|&v| vec![v]).collect()).unwrap();
        let pert = PerturbationSpec::new(theta, q, eta).unwrap();
        let (mix, push) = convex_combine((&mu, &xi), &pert).unwrap();
        for j in 0..4 {
            let w: f64 = mix.measure(0, j).weights().iter().sum();
            prop_assert!((w - 1.0).abs() <= 1e-12);
            prop_assert!(mix.measure(0, j).weights().iter().all(|&w| w >= 0.0));
            let inc = push.increment(0, j)[0];
            prop_assert!(inc >= 0.0);
            prop_assert!((inc - ((1.0 - theta) * xs[j] + theta * ys[j])).abs() <= 1e-15 * (1.0 + inc));
        }
    }

    #[test]
    fn chattering_time_averages_converge(p in picks(), cells in 1usize..4) {
        let m = measure_from(&p);
        let q = relaxed(m.clone(), cells);
        let g = grid21();
        for n in [2usize, 4, 8, 16] {
            let u = match chattering(&q, n) {
                Ok(u) => u,
                Err(singular_pmp::Error::ChatteringTooCoarse { minimum, .. }) => {
                    prop_assert!(minimum > n);
                    continue;
                }
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            };
            let steps = u.steps();
            prop_assert!((0..steps).all(|s| g.contains(&u.value(0, s)[0])));
            for (f, sup) in test_functions() {
                let avg = (0..steps).map(|s| f(u.value(0, s)[0])).sum::<f64>() / steps as f64;
                let target = m.integrate(|a| f(a[0])).unwrap();
                prop_assert!((avg - target).abs() <= 2.0 * sup / n as f64 + 1e-12, "n = {n}: {avg} vs {target}");
            }
        }
    }
}
