use ndarray::{Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use super::explicit::cost_gradient_sums;
use super::regression::{RegressionConfig, SliceRegressor};
use super::{adjoint_explicit, AdjointPair, HxEval};
use crate::controls::SingularControl;
use crate::error::{Error, Result};
use crate::model::{NoiseBatch, ProblemSpec, TimeGrid};
use crate::scalar::Scalar;
use crate::sde::{
    check_noise, fundamental_solutions, simulate, simulate_variational, ControlRef, FundamentalPair,
    TrajectoryEnsemble, VariationalEnsemble,
};
use crate::stats::Estimate;

/// `α_t = Ψ_t z_t`, the terminal functional `X`, `Y_t = Φ_tᵀ p_t` and the
/// regression estimate of the martingale integrand `Q` of `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryProcesses<S> {
    alpha: Array3<S>,
    x: Array2<S>,
    y: Array3<S>,
    q: Array4<S>,
    running: Array2<S>,
}

impl<S: Scalar> AuxiliaryProcesses<S> {
    pub fn alpha(&self) -> &Array3<S> {
        &self.alpha
    }

    /// `X = Φ_Tᵀ g_x(x_T) + ∫_0^T Φ_sᵀ h̄_x ds`, one row per path.
    pub fn terminal_functional(&self) -> &Array2<S> {
        &self.x
    }

    pub fn y(&self) -> &Array3<S> {
        &self.y
    }

    /// `Q[path][j][i][l]` for cells `j < N`.
    pub fn q(&self) -> &Array4<S> {
        &self.q
    }

    /// `max |Y_T + ∫_0^T Φᵀ h̄_x ds − X|` over paths and components.
    pub fn terminal_identity_defect(&self) -> S {
        let (paths, knots, n) = self.y.dim();
        let mut worst = S::zero();
        for p in 0..paths {
            for i in 0..n {
                let d = self.y[[p, knots - 1, i]] + self.running[[p, i]] - self.x[[p, i]];
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// `P = Ψᵀ Q − (∂_x σ̄)ᵀ p` on cells `j < N`, zero at `t_N`.
    pub fn martingale_p(
        &self,
        spec: &ProblemSpec<S>,
        control: ControlRef<'_, S>,
        trajectory: &TrajectoryEnsemble<S>,
        fundamentals: &FundamentalPair<S>,
        adjoint: &AdjointPair<S>,
    ) -> Array4<S> {
        let grid = trajectory.grid();
        let (paths, cells, n, d) = self.q.dim();
        let mut out = Array4::zeros((paths, cells + 1, n, d));
        let mut eval = HxEval::new(spec);
        let mut corr = vec![S::zero(); n * d];
        for path in 0..paths {
            for j in 0..cells {
                eval.load(spec, grid.t(j), trajectory.state(path, j), control.action(path, j));
                eval.sigma_x_t_p(adjoint.p_at(path, j), &mut corr);
                let psi = fundamentals.psi_at(path, j);
                for i in 0..n {
                    for l in 0..d {
                        let v = (0..n).fold(S::zero(), |acc, k| acc + psi[k * n + i] * self.q[[path, j, k, l]]);
                        out[[path, j, i, l]] = v - corr[i * d + l];
                    }
                }
            }
        }
        out
    }
}

/// Builds the auxiliary processes from a variational ensemble, the fundamental
/// pair and an adjoint `p` computed on the same noise.
#[allow(clippy::too_many_arguments)]
pub fn auxiliary_processes<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    trajectory: &TrajectoryEnsemble<S>,
    fundamentals: &FundamentalPair<S>,
    variational: &VariationalEnsemble<S>,
    adjoint: &AdjointPair<S>,
    noise: &NoiseBatch<S>,
    config: &RegressionConfig,
) -> Result<AuxiliaryProcesses<S>> {
    let grid = trajectory.grid();
    check_noise(spec, grid, noise)?;
    let dims = spec.dims();
    let (paths, steps, n, d) = (trajectory.paths(), grid.steps(), dims.n, dims.d);
    if adjoint.paths() != paths || adjoint.steps() != steps {
        return Err(Error::InvalidProblem("adjoint does not match the trajectory".into()));
    }
    let dt = grid.dt();
    let mut alpha = Array3::zeros((paths, steps + 1, n));
    let mut y = Array3::zeros((paths, steps + 1, n));
    for path in 0..paths {
        for j in 0..=steps {
            let (psi, phi) = (fundamentals.psi_at(path, j), fundamentals.phi_at(path, j));
            let (z, p) = (variational.at(path, j), adjoint.p_at(path, j));
            for i in 0..n {
                alpha[[path, j, i]] = (0..n).fold(S::zero(), |acc, k| acc + psi[i * n + k] * z[k]);
                y[[path, j, i]] = (0..n).fold(S::zero(), |acc, k| acc + phi[k * n + i] * p[k]);
            }
        }
    }
    let sums = cost_gradient_sums(spec, control, trajectory, fundamentals)?;
    let mut x = Array2::zeros((paths, n));
    let mut running = Array2::zeros((paths, n));
    for path in 0..paths {
        for i in 0..n {
            x[[path, i]] = sums[[path, 0, i]];
            running[[path, i]] = sums[[path, 0, i]] - sums[[path, steps, i]];
        }
    }

    let mut q = Array4::zeros((paths, steps, n, d));
    for j in 0..steps {
        let reg = SliceRegressor::new(paths, n, config.degree, j, |p| trajectory.state(p, j))?;
        for l in 0..d {
            let mut fitted = vec![vec![S::zero(); paths]; n];
            for (i, slot) in fitted.iter_mut().enumerate() {
                let target: Vec<S> = (0..paths)
                    .map(|p| {
                        let psi = fundamentals.psi_at(p, j);
                        let inc = noise.at(p, j)[l] / dt;
                        (0..n).fold(S::zero(), |acc, k| {
                            acc + psi[k * n + i] * (y[[p, j + 1, k]] - y[[p, j, k]]) * inc
                        })
                    })
                    .collect();
                *slot = reg.fit(&target);
            }
            for p in 0..paths {
                let phi = fundamentals.phi_at(p, j);
                for i in 0..n {
                    q[[p, j, i, l]] = (0..n).fold(S::zero(), |acc, k| acc + phi[k * n + i] * fitted[k][p]);
                }
            }
        }
    }
    Ok(AuxiliaryProcesses {
        alpha,
        x,
        y,
        q,
        running,
    })
}

/// Both sides of `E[α_T·Y_T] = E[g_x(x_T)·z_T]` and the paired difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DualityResidual<S> {
    pub lhs: Estimate<S>,
    pub rhs: Estimate<S>,
    /// `|Ê[α_T·Y_T − g_x(x_T)·z_T]|`
    pub residual: S,
    pub std_error: S,
}

impl<S: Scalar> DualityResidual<S> {
    pub fn within(&self, sigmas: S, slack: S) -> bool {
        self.residual <= sigmas * self.std_error + slack
    }
}

pub fn duality_residual<S: Scalar>(
    spec: &ProblemSpec<S>,
    auxiliary: &AuxiliaryProcesses<S>,
    variational: &VariationalEnsemble<S>,
    trajectory: &TrajectoryEnsemble<S>,
) -> DualityResidual<S> {
    let (paths, knots, n) = auxiliary.y.dim();
    let last = knots - 1;
    let mut gx = vec![S::zero(); n];
    let (mut lhs, mut rhs, mut diff) = (Vec::new(), Vec::new(), Vec::new());
    for p in 0..paths {
        spec.terminal_cost_x(trajectory.terminal(p), &mut gx);
        let z = variational.at(p, last);
        let l = (0..n).fold(S::zero(), |acc, i| {
            acc + auxiliary.alpha[[p, last, i]] * auxiliary.y[[p, last, i]]
        });
        let r = (0..n).fold(S::zero(), |acc, i| acc + gx[i] * z[i]);
        lhs.push(l);
        rhs.push(r);
        diff.push(l - r);
    }
    let d = Estimate::from_samples(&diff);
    DualityResidual {
        lhs: Estimate::from_samples(&lhs),
        rhs: Estimate::from_samples(&rhs),
        residual: d.mean.abs(),
        std_error: d.std_error,
    }
}

/// Simulates the base pair, the variational process toward `direction`, the
/// fundamental solutions and the explicit adjoint on common noise, then
/// evaluates the duality residual.
pub fn duality_check<S: Scalar>(
    spec: &ProblemSpec<S>,
    base: (ControlRef<'_, S>, &SingularControl<S>),
    direction: (ControlRef<'_, S>, &SingularControl<S>),
    grid: &TimeGrid<S>,
    noise: &NoiseBatch<S>,
    config: &RegressionConfig,
) -> Result<DualityResidual<S>> {
    let traj = simulate(spec, base.0, base.1, grid, noise)?;
    let z = simulate_variational(spec, base, direction, &traj, noise)?;
    let fund = fundamental_solutions(spec, base.0, &traj, noise)?;
    let adj = adjoint_explicit(spec, base.0, &traj, &fund, config)?;
    let aux = auxiliary_processes(spec, base.0, &traj, &fund, &z, &adj, noise, config)?;
    Ok(duality_residual(spec, &aux, &z, &traj))
}
