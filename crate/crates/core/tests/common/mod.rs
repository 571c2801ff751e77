#![allow(dead_code)]

use singular_pmp::controls::{Measure, RelaxedControl, SingularControl, StrictControl};
use singular_pmp::model::{
    AssumptionsBox, Coefficients, DeclaredConvexity, Dims, Expr, Monomial, NoiseBatch, ProblemSpec, TimeGrid,
};

/// `Σ c·x^i·a^j` over `(c, i, j)` triples.
pub fn poly(terms: &[(f64, u32, u32)]) -> Expr<f64> {
    Expr::poly(
        terms
            .iter()
            .map(|&(c, i, j)| Monomial::new(c).x(0, i).a(0, j))
            .collect(),
    )
}

pub fn konst(v: f64) -> Expr<f64> {
    Expr::constant(v)
}

/// One-dimensional problem assembled field by field; everything defaults to zero.
pub struct Scalar1 {
    pub drift: Expr<f64>,
    pub drift_x: Expr<f64>,
    pub diffusion: Expr<f64>,
    pub diffusion_x: Expr<f64>,
    pub gain: Expr<f64>,
    pub singular_cost: Expr<f64>,
    pub running: Expr<f64>,
    pub running_x: Expr<f64>,
    pub terminal: Expr<f64>,
    pub terminal_x: Expr<f64>,
    pub grid: Vec<f64>,
    pub x0: f64,
    pub horizon: f64,
}

impl Default for Scalar1 {
    fn default() -> Self {
        Self {
            drift: konst(0.0),
            drift_x: konst(0.0),
            diffusion: konst(0.0),
            diffusion_x: konst(0.0),
            gain: konst(0.0),
            singular_cost: konst(0.0),
            running: konst(0.0),
            running_x: konst(0.0),
            terminal: konst(0.0),
            terminal_x: konst(0.0),
            grid: vec![-1.0, 0.0, 1.0],
            x0: 0.0,
            horizon: 1.0,
        }
    }
}

impl Scalar1 {
    pub fn build(self) -> ProblemSpec<f64> {
        let coefficients = Coefficients {
            drift: vec![self.drift],
            diffusion: vec![vec![self.diffusion]],
            singular_gain: vec![vec![self.gain]],
            running_cost: self.running,
            terminal_cost: self.terminal,
            singular_cost: vec![self.singular_cost],
            drift_x: vec![vec![self.drift_x]],
            diffusion_x: vec![vec![vec![self.diffusion_x]]],
            running_cost_x: vec![self.running_x],
            terminal_cost_x: vec![self.terminal_x],
        };
        ProblemSpec::new(
            "fixture",
            Dims { n: 1, d: 1, k: 1, m: 1 },
            self.horizon,
            vec![self.x0],
            coefficients,
            self.grid.into_iter().map(|v| vec![v]).collect(),
            AssumptionsBox::default(),
            DeclaredConvexity::default(),
        )
        .expect("valid fixture")
    }
}

pub fn half_half() -> Measure<f64> {
    Measure::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap()
}

pub fn relaxed(m: Measure<f64>, steps: usize) -> RelaxedControl<f64> {
    RelaxedControl::constant(m, steps).unwrap()
}

pub fn dirac(v: f64, steps: usize) -> RelaxedControl<f64> {
    relaxed(Measure::dirac(vec![v]), steps)
}

pub fn constant(v: f64, steps: usize) -> StrictControl<f64> {
    StrictControl::constant(vec![v], steps).unwrap()
}

pub fn no_push(steps: usize) -> SingularControl<f64> {
    SingularControl::zero(steps, 1)
}

pub fn setup(steps: usize, paths: usize, seed: u64) -> (TimeGrid<f64>, NoiseBatch<f64>) {
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let noise = NoiseBatch::generate(seed, paths, &grid, 1).unwrap();
    (grid, noise)
}

/// Classical RK4 for a scalar ODE `y' = f(t, y)` on `[0, t_end]` with `n` steps.
pub fn rk4(f: impl Fn(f64, f64) -> f64, y0: f64, t_end: f64, n: usize) -> f64 {
    let h = t_end / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}
