use serde::{Deserialize, Serialize};

use super::{par_paths, ControlRef, TrajectoryEnsemble};
use crate::controls::SingularControl;
use crate::error::Result;
use crate::model::ProblemSpec;
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Cost estimate split into its three parts, with the per-path totals kept for
/// paired comparisons on common noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CostBreakdown<S> {
    pub total: Estimate<S>,
    pub running: Estimate<S>,
    pub terminal: Estimate<S>,
    pub singular: Estimate<S>,
    #[serde(skip)]
    pub per_path: Vec<S>,
}

/// `J = E[g(x_N) + Σ_j h̄(t_j, x_j, μ_j) Δt + Σ_j k(t_j)·Δη_j]` (left-point quadrature).
pub fn cost<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    singular: &SingularControl<S>,
    trajectory: &TrajectoryEnsemble<S>,
) -> Result<CostBreakdown<S>> {
    let grid = trajectory.grid();
    let steps = grid.steps();
    let paths = trajectory.paths();
    control.check(spec, steps, paths)?;
    singular.check(spec, steps, paths)?;
    let m = spec.dims().m;
    let dt = grid.dt();
    let parts = par_paths(paths, |path| {
        let mut running = S::zero();
        let mut sing = S::zero();
        let mut k = vec![S::zero(); m];
        for j in 0..steps {
            let t = grid.t(j);
            running = running + spec.running_cost(t, trajectory.state(path, j), control.action(path, j)) * dt;
            let deta = singular.increment(path, j);
            if deta.iter().any(|e| *e != S::zero()) {
                spec.singular_cost(t, &mut k);
                for (kr, &e) in k.iter().zip(deta) {
                    sing = sing + *kr * e;
                }
            }
        }
        let terminal = spec.terminal_cost(trajectory.terminal(path));
        Ok((running, terminal, sing))
    })?;
    let pick = |f: fn(&(S, S, S)) -> S| parts.iter().map(f).collect::<Vec<S>>();
    let per_path: Vec<S> = parts.iter().map(|&(r, g, s)| g + r + s).collect();
    Ok(CostBreakdown {
        total: Estimate::from_samples(&per_path),
        running: Estimate::from_samples(&pick(|p| p.0)),
        terminal: Estimate::from_samples(&pick(|p| p.1)),
        singular: Estimate::from_samples(&pick(|p| p.2)),
        per_path,
    })
}
