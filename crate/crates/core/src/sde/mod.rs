//! Euler–Maruyama simulation of the controlled state, the variational equation
//! and the fundamental matrix solutions, plus cost quadrature and export.

mod checks;
mod cost;
mod export;
mod fundamental;
mod variational;

pub use checks::{finite_difference_statistic, mean_square_gaps, perturbed_gap, sup_mean_square_gap};
pub use cost::{cost, CostBreakdown};
pub use export::{read_binary, write_binary, write_csv, BinaryHeader};
pub use fundamental::{fundamental_solutions, FundamentalPair};
pub use variational::{simulate_variational, VariationalEnsemble};

use ndarray::Array3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controls::{Action, RelaxedControl, SingularControl, StrictControl};
use crate::error::{Error, Result};
use crate::model::{NoiseBatch, ProblemSpec, TimeGrid};
use crate::scalar::Scalar;

/// A strict or relaxed control, borrowed for simulation.
#[derive(Debug, Clone, Copy)]
pub enum ControlRef<'a, S> {
    Strict(&'a StrictControl<S>),
    Relaxed(&'a RelaxedControl<S>),
}

impl<'a, S: Scalar> ControlRef<'a, S> {
    #[inline]
    pub fn action(&self, path: usize, step: usize) -> Action<'a, S> {
        match *self {
            ControlRef::Strict(v) => Action::Point(v.value(path, step)),
            ControlRef::Relaxed(q) => Action::Mixture(q.measure(path, step)),
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            ControlRef::Strict(v) => v.steps(),
            ControlRef::Relaxed(q) => q.steps(),
        }
    }

    pub fn paths(&self) -> Option<usize> {
        match self {
            ControlRef::Strict(v) => v.paths(),
            ControlRef::Relaxed(q) => q.paths(),
        }
    }

    pub fn check(&self, spec: &ProblemSpec<S>, steps: usize, paths: usize) -> Result<()> {
        match self {
            ControlRef::Strict(v) => v.check(spec, steps, paths),
            ControlRef::Relaxed(q) => q.check(spec, steps, paths),
        }
    }

    /// The control as a measure-valued one (Dirac embedding for strict controls).
    pub fn to_relaxed(&self) -> RelaxedControl<S> {
        match self {
            ControlRef::Strict(v) => RelaxedControl::dirac_embed(v),
            ControlRef::Relaxed(q) => (*q).clone(),
        }
    }

    pub fn kind(&self) -> ControlKind {
        match self {
            ControlRef::Strict(_) => ControlKind::Strict,
            ControlRef::Relaxed(_) => ControlKind::Relaxed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    Strict,
    Relaxed,
}

/// Simulated states `x[path][j][i]` on the grid knots `t_0..t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble<S> {
    states: Array3<S>,
    grid: TimeGrid<S>,
    seed: u64,
    kind: ControlKind,
}

impl<S: Scalar> TrajectoryEnsemble<S> {
    pub fn states(&self) -> &Array3<S> {
        &self.states
    }

    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    /// Seed of the noise batch that generated the paths.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
    }

    pub fn paths(&self) -> usize {
        self.states.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.states.shape()[2]
    }

    #[inline]
    pub fn state(&self, path: usize, step: usize) -> &[S] {
        let n = self.dim();
        let flat = self.states.as_slice().expect("standard layout");
        let start = (path * (self.grid.steps() + 1) + step) * n;
        &flat[start..start + n]
    }

    pub fn terminal(&self, path: usize) -> &[S] {
        self.state(path, self.grid.steps())
    }
}

/// Runs `f` for each path in parallel; results come back in path order and the
/// lowest failing path determines the error.
pub(crate) fn par_paths<T, F>(paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..paths).into_par_iter().map(&f).collect();
    results.into_iter().collect()
}

pub(crate) fn stack<S: Scalar>(rows: Vec<Vec<S>>, shape: (usize, usize, usize)) -> Array3<S> {
    let flat: Vec<S> = rows.into_iter().flatten().collect();
    Array3::from_shape_vec(shape, flat).expect("shape matches data")
}

pub(crate) fn check_noise<S: Scalar>(spec: &ProblemSpec<S>, grid: &TimeGrid<S>, noise: &NoiseBatch<S>) -> Result<()> {
    if noise.steps() != grid.steps() {
        return Err(Error::Dimension {
            what: "noise steps".into(),
            expected: grid.steps(),
            found: noise.steps(),
        });
    }
    if noise.dim() != spec.dims().d {
        return Err(Error::Dimension {
            what: "noise dimension".into(),
            expected: spec.dims().d,
            found: noise.dim(),
        });
    }
    if noise.dt() != grid.dt() {
        return Err(Error::InvalidProblem("noise step size differs from grid".into()));
    }
    Ok(())
}

/// Euler–Maruyama for the controlled state:
/// `x_{j+1} = x_j + b̄ Δt + σ̄ ΔW_j + G(t_j) Δη_j`, with coefficients averaged
/// over the cell's measure for relaxed controls.
pub fn simulate<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    singular: &SingularControl<S>,
    grid: &TimeGrid<S>,
    noise: &NoiseBatch<S>,
) -> Result<TrajectoryEnsemble<S>> {
    check_noise(spec, grid, noise)?;
    let paths = noise.paths();
    control.check(spec, grid.steps(), paths)?;
    singular.check(spec, grid.steps(), paths)?;
    let dims = spec.dims();
    let (n, d, m) = (dims.n, dims.d, dims.m);
    let steps = grid.steps();
    let dt = grid.dt();
    let rows = par_paths(paths, |path| {
        let mut xs = Vec::with_capacity((steps + 1) * n);
        xs.extend_from_slice(spec.x0());
        let mut b = vec![S::zero(); n];
        let mut sig = vec![S::zero(); n * d];
        let mut gain = vec![S::zero(); n * m];
        for j in 0..steps {
            let t = grid.t(j);
            let x = &xs[j * n..(j + 1) * n];
            let act = control.action(path, j);
            spec.drift(t, x, act, &mut b);
            spec.diffusion(t, x, act, &mut sig);
            let dw = noise.at(path, j);
            let deta = singular.increment(path, j);
            let mut next = Vec::with_capacity(n);
            for i in 0..n {
                let mut v = x[i] + b[i] * dt;
                for l in 0..d {
                    v = v + sig[i * d + l] * dw[l];
                }
                next.push(v);
            }
            if deta.iter().any(|e| *e != S::zero()) {
                spec.singular_gain(t, &mut gain);
                for (i, v) in next.iter_mut().enumerate() {
                    for r in 0..m {
                        *v = *v + gain[i * m + r] * deta[r];
                    }
                }
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { path, step: j + 1 });
            }
            xs.extend(next);
        }
        Ok(xs)
    })?;
    Ok(TrajectoryEnsemble {
        states: stack(rows, (paths, steps + 1, n)),
        grid: *grid,
        seed: noise.seed(),
        kind: control.kind(),
    })
}

pub fn simulate_strict<S: Scalar>(
    spec: &ProblemSpec<S>,
    v: &StrictControl<S>,
    eta: &SingularControl<S>,
    grid: &TimeGrid<S>,
    noise: &NoiseBatch<S>,
) -> Result<TrajectoryEnsemble<S>> {
    simulate(spec, ControlRef::Strict(v), eta, grid, noise)
}

pub fn simulate_relaxed<S: Scalar>(
    spec: &ProblemSpec<S>,
    q: &RelaxedControl<S>,
    eta: &SingularControl<S>,
    grid: &TimeGrid<S>,
    noise: &NoiseBatch<S>,
) -> Result<TrajectoryEnsemble<S>> {
    simulate(spec, ControlRef::Relaxed(q), eta, grid, noise)
}
