use crate::controls::SingularControl;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::pmp::{HamiltonianEval, HamiltonianInputs};
use crate::scalar::Scalar;
use crate::sde::{par_paths, ControlRef, TrajectoryEnsemble};
use crate::stats::Estimate;

use super::AdjointPair;

/// Monte Carlo estimate of
/// `E Σ_j [𝓗(t_j, x_j, q_j, p_j, P_j) − 𝓗(t_j, x_j, μ_j, p_j, P_j)] Δt
///  + E Σ_j (k(t_j) + G(t_j)ᵀ p_j)·(Δη_j − Δξ_j)`.
///
/// A pair without `P` is accepted only when the diffusion does not depend on
/// the control, in which case the `σ:P` terms cancel.
pub fn variational_inequality_value<S: Scalar>(
    spec: &ProblemSpec<S>,
    base: (ControlRef<'_, S>, &SingularControl<S>),
    direction: (ControlRef<'_, S>, &SingularControl<S>),
    adjoint: &AdjointPair<S>,
    trajectory: &TrajectoryEnsemble<S>,
) -> Result<Estimate<S>> {
    let grid = trajectory.grid();
    let (paths, steps) = (trajectory.paths(), grid.steps());
    if adjoint.paths() != paths || adjoint.steps() != steps {
        return Err(Error::InvalidProblem("adjoint does not match the trajectory".into()));
    }
    for c in [base.0, direction.0] {
        c.check(spec, steps, paths)?;
    }
    base.1.check(spec, steps, paths)?;
    direction.1.check(spec, steps, paths)?;
    if adjoint.big_p().is_none() && spec.coefficients().diffusion.iter().flatten().any(|e| e.uses_a()) {
        return Err(Error::InvalidProblem(
            "the diffusion depends on the control, so the adjoint needs its P component".into(),
        ));
    }
    let dims = spec.dims();
    let (n, m) = (dims.n, dims.m);
    let dt = grid.dt();
    let samples = par_paths(paths, |path| {
        let mut eval = HamiltonianEval::new(spec);
        let mut gain = vec![S::zero(); n * m];
        let mut k = vec![S::zero(); m];
        let mut acc = S::zero();
        for j in 0..steps {
            let inp = HamiltonianInputs {
                t: grid.t(j),
                x: trajectory.state(path, j),
                p: adjoint.p_at(path, j),
                big_p: adjoint.big_p_at(path, j).unwrap_or(&[]),
            };
            let (q, mu) = (direction.0.action(path, j), base.0.action(path, j));
            acc = acc + (eval.action(&inp, q) - eval.action(&inp, mu)) * dt;
            let (deta, dxi) = (direction.1.increment(path, j), base.1.increment(path, j));
            if deta.iter().zip(dxi).any(|(a, b)| a != b) {
                spec.singular_gain(inp.t, &mut gain);
                spec.singular_cost(inp.t, &mut k);
                for r in 0..m {
                    let slack = (0..n).fold(k[r], |s, i| s + gain[i * m + r] * inp.p[i]);
                    acc = acc + slack * (deta[r] - dxi[r]);
                }
            }
        }
        Ok(acc)
    })?;
    Ok(Estimate::from_samples(&samples))
}
