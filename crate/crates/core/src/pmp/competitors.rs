use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controls::{SingularControl, StrictControl};
use crate::error::{Error, Result};
use crate::model::{NoiseBatch, ProblemSpec, TimeGrid};
use crate::scalar::Scalar;
use crate::sde::{cost, simulate, ControlRef};
use crate::stats::Estimate;

/// Random strict controls (each cell uniform on the U₁ grid), half of them with
/// a few random singular increments in `[0, 1)`.
pub fn random_competitors<S: Scalar>(
    spec: &ProblemSpec<S>,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(StrictControl<S>, SingularControl<S>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u1 = spec.u1_grid();
    let m = spec.dims().m;
    (0..count)
        .map(|_| {
            let cells = (0..steps).map(|_| u1[rng.random_range(0..u1.len())].clone()).collect();
            let v = StrictControl::shared(cells)?;
            let eta = if m > 0 && rng.random_bool(0.5) {
                let mut incs = vec![vec![S::zero(); m]; steps];
                for _ in 0..rng.random_range(1..=3) {
                    let (j, r) = (rng.random_range(0..steps), rng.random_range(0..m));
                    incs[j][r] = incs[j][r] + S::lit(rng.random_range(0.0..1.0));
                }
                SingularControl::shared(incs)?
            } else {
                SingularControl::zero(steps, m)
            };
            Ok((v, eta))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CompetitorOutcome<S> {
    pub index: usize,
    pub cost: Estimate<S>,
    /// Paired `J(competitor) − J(candidate)` on common noise.
    pub difference: Estimate<S>,
    /// The competitor is cheaper by more than `sigmas` standard errors.
    pub strictly_better: bool,
}

/// Costs every competitor on the candidate's noise and compares paired per-path costs.
pub fn compare_with_competitors<S: Scalar>(
    spec: &ProblemSpec<S>,
    candidate_costs: &[S],
    competitors: &[(StrictControl<S>, SingularControl<S>)],
    grid: &TimeGrid<S>,
    noise: &NoiseBatch<S>,
    sigmas: S,
) -> Result<Vec<CompetitorOutcome<S>>> {
    if candidate_costs.len() != noise.paths() {
        return Err(Error::InvalidProblem(
            "candidate costs do not match the noise batch".into(),
        ));
    }
    competitors
        .iter()
        .enumerate()
        .map(|(index, (v, eta))| {
            let traj = simulate(spec, ControlRef::Strict(v), eta, grid, noise)?;
            let c = cost(spec, ControlRef::Strict(v), eta, &traj)?;
            let diffs: Vec<S> = c.per_path.iter().zip(candidate_costs).map(|(&a, &b)| a - b).collect();
            let difference = Estimate::from_samples(&diffs);
            Ok(CompetitorOutcome {
                index,
                cost: c.total,
                strictly_better: difference.mean < -sigmas * difference.std_error,
                difference,
            })
        })
        .collect()
}
