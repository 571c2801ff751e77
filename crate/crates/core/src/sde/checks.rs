//! Convergence statistics comparing ensembles on common noise.

use super::{simulate, simulate_relaxed, ControlRef, TrajectoryEnsemble, VariationalEnsemble};
use crate::controls::{convex_combine, PerturbationSpec, SingularControl};
use crate::error::{Error, Result};
use crate::model::{NoiseBatch, ProblemSpec};
use crate::scalar::Scalar;

/// `(1/M) Σ_paths |x^a_j − x^b_j|²` at every knot, summed in path order.
pub fn mean_square_gaps<S: Scalar>(a: &TrajectoryEnsemble<S>, b: &TrajectoryEnsemble<S>) -> Result<Vec<S>> {
    if a.states().shape() != b.states().shape() {
        return Err(Error::InvalidProblem("ensembles have different shapes".into()));
    }
    let (paths, knots) = (a.paths(), a.grid().steps() + 1);
    let scale = S::one() / S::from_count(paths);
    Ok((0..knots)
        .map(|j| {
            let mut acc = S::zero();
            for p in 0..paths {
                for (x, y) in a.state(p, j).iter().zip(b.state(p, j)) {
                    acc = acc + (*x - *y) * (*x - *y);
                }
            }
            acc * scale
        })
        .collect())
}

/// `sup_j (1/M) Σ |x^a_j − x^b_j|²`.
pub fn sup_mean_square_gap<S: Scalar>(a: &TrajectoryEnsemble<S>, b: &TrajectoryEnsemble<S>) -> Result<S> {
    Ok(mean_square_gaps(a, b)?.into_iter().fold(S::zero(), S::max))
}

/// `sup_j E|x^θ_j − x_j|²` for the perturbed control `(μ, ξ) + θ[(q, η) − (μ, ξ)]`.
pub fn perturbed_gap<S: Scalar>(
    spec: &ProblemSpec<S>,
    base: (ControlRef<'_, S>, &SingularControl<S>),
    perturbation: &PerturbationSpec<S>,
    trajectory: &TrajectoryEnsemble<S>,
    noise: &NoiseBatch<S>,
) -> Result<S> {
    let mu = base.0.to_relaxed();
    let (q, eta) = convex_combine((&mu, base.1), perturbation)?;
    let perturbed = simulate_relaxed(spec, &q, &eta, trajectory.grid(), noise)?;
    sup_mean_square_gap(&perturbed, trajectory)
}

/// `max_j (1/M) Σ |(x^θ_j − x_j)/θ − z_j|²`: consistency of the variational
/// process with finite differences of the state, on common noise.
pub fn finite_difference_statistic<S: Scalar>(
    spec: &ProblemSpec<S>,
    base: (ControlRef<'_, S>, &SingularControl<S>),
    perturbation: &PerturbationSpec<S>,
    trajectory: &TrajectoryEnsemble<S>,
    variational: &VariationalEnsemble<S>,
    noise: &NoiseBatch<S>,
) -> Result<S> {
    let theta = perturbation.theta;
    if theta <= S::zero() {
        return Err(Error::InvalidTheta(theta.as_f64()));
    }
    let mu = base.0.to_relaxed();
    let (q, eta) = convex_combine((&mu, base.1), perturbation)?;
    let perturbed = simulate(spec, ControlRef::Relaxed(&q), &eta, trajectory.grid(), noise)?;
    let (paths, knots) = (trajectory.paths(), trajectory.grid().steps() + 1);
    let scale = S::one() / S::from_count(paths);
    let mut worst = S::zero();
    for j in 0..knots {
        let mut acc = S::zero();
        for p in 0..paths {
            let (xt, x, z) = (perturbed.state(p, j), trajectory.state(p, j), variational.at(p, j));
            for i in 0..x.len() {
                let e = (xt[i] - x[i]) / theta - z[i];
                acc = acc + e * e;
            }
        }
        worst = worst.max(acc * scale);
    }
    Ok(worst)
}
