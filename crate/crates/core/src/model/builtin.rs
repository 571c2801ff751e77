//! The worked examples shipped with the toolkit.

use super::{AssumptionsBox, Coefficients, DeclaredConvexity, Dims, Expr, Monomial, ProblemSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BUILTIN_NAMES: [&str; 4] = [
    "example1",
    "example2_separated",
    "example2_stochastic",
    "singular_block",
];

/// Looks a built-in up by name (`singular_block` uses `κ = 1`).
pub fn builtin_problem<S: Scalar>(name: &str) -> Result<ProblemSpec<S>> {
    match name {
        "example1" => example1(),
        "example2_separated" => example2(false),
        "example2_stochastic" => example2(true),
        "singular_block" => singular_block(S::one()),
        other => Err(Error::UnknownBuiltin {
            name: other.into(),
            available: BUILTIN_NAMES.join(", "),
        }),
    }
}

const SCALAR: Dims = Dims { n: 1, d: 1, k: 1, m: 1 };

fn c<S: Scalar>(v: f64) -> Expr<S> {
    Expr::constant(v)
}

fn x_squared<S: Scalar>() -> Monomial<S> {
    Monomial::new(1.0).x(0, 2)
}

fn two_x<S: Scalar>() -> Expr<S> {
    Expr::poly(vec![Monomial::new(2.0).x(0, 1)])
}

fn control_a<S: Scalar>() -> Expr<S> {
    Expr::poly(vec![Monomial::new(1.0).a(0, 1)])
}

/// Points `lo, lo + step, …, hi` written as `(i − offset) / denom` so they are correctly rounded.
fn uniform_grid<S: Scalar>(count: usize, offset: f64, denom: f64) -> Vec<Vec<S>> {
    (0..count).map(|i| vec![S::lit((i as f64 - offset) / denom)]).collect()
}

#[allow(clippy::too_many_arguments)]
fn scalar_problem<S: Scalar>(
    name: &str,
    drift: Expr<S>,
    diffusion: Expr<S>,
    gain: Expr<S>,
    running: Expr<S>,
    running_x: Expr<S>,
    terminal: Expr<S>,
    terminal_x: Expr<S>,
    singular_cost: Expr<S>,
    grid: Vec<Vec<S>>,
) -> Result<ProblemSpec<S>> {
    let coefficients = Coefficients {
        drift: vec![drift],
        diffusion: vec![vec![diffusion]],
        singular_gain: vec![vec![gain]],
        running_cost: running,
        terminal_cost: terminal,
        singular_cost: vec![singular_cost],
        drift_x: vec![vec![c(0.0)]],
        diffusion_x: vec![vec![vec![c(0.0)]]],
        running_cost_x: vec![running_x],
        terminal_cost_x: vec![terminal_x],
    };
    ProblemSpec::new(
        name,
        SCALAR,
        S::one(),
        vec![S::zero()],
        coefficients,
        grid,
        AssumptionsBox::default(),
        DeclaredConvexity::default(),
    )
}

/// `dx = a dt`, `x₀ = 0`, cost `∫ x² dt`, `U₁ = {−1, 1}`, `T = 1`; no singular part (`G = 0`, `k = 0`).
fn example1<S: Scalar>() -> Result<ProblemSpec<S>> {
    scalar_problem(
        "example1",
        control_a(),
        c(0.0),
        c(0.0),
        Expr::poly(vec![x_squared()]),
        two_x(),
        c(0.0),
        c(0.0),
        c(0.0),
        vec![vec![S::lit(-1.0)], vec![S::one()]],
    )
}

/// `dx = a dt (+ dW)`, cost `∫ x² + (1 − a²)² dt`, `U₁` = 21 points on `[−1, 1]`.
fn example2<S: Scalar>(stochastic: bool) -> Result<ProblemSpec<S>> {
    let running = Expr::poly(vec![
        x_squared(),
        Monomial::new(1.0),
        Monomial::new(-2.0).a(0, 2),
        Monomial::new(1.0).a(0, 4),
    ]);
    scalar_problem(
        if stochastic {
            "example2_stochastic"
        } else {
            "example2_separated"
        },
        control_a(),
        c(if stochastic { 1.0 } else { 0.0 }),
        c(0.0),
        running,
        two_x(),
        c(0.0),
        c(0.0),
        c(0.0),
        uniform_grid(21, 10.0, 10.0),
    )
}

/// `dx = a dt + dW + dξ`, cost `E[x_T + ∫ a² dt + κ ξ_T]`, `U₁` = 9 points on `[−1, 1]`.
///
/// The adjoint is `p ≡ 1`, so `k + G p = κ + 1 > 0`: pushing is never worth it and
/// the optimum is `u ≡ −1/2`, `ξ ≡ 0`.
pub fn singular_block<S: Scalar>(kappa: S) -> Result<ProblemSpec<S>> {
    if !(kappa > S::zero()) {
        return Err(Error::InvalidProblem("singular_block needs κ > 0".into()));
    }
    scalar_problem(
        "singular_block",
        control_a(),
        c(1.0),
        c(1.0),
        Expr::poly(vec![Monomial::new(1.0).a(0, 2)]),
        c(0.0),
        Expr::poly(vec![Monomial::new(1.0).x(0, 1)]),
        c(1.0),
        Expr::Constant { value: kappa },
        uniform_grid(9, 4.0, 4.0),
    )
}
