use ndarray::Array3;
use rayon::prelude::*;

use super::regression::{rms_diff, RegressionConfig, SliceRegressor};
use super::{AdjointMethod, AdjointPair, HxEval, RegressionDiagnostics};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::scalar::Scalar;
use crate::sde::{par_paths, stack, ControlRef, FundamentalPair, TrajectoryEnsemble};

/// Pathwise `S_j = Φ_Nᵀ g_x(x_N) + Σ_{i≥j} Φ_iᵀ h̄_x(t_i, x_i, μ_i) Δt`, shape `(M, N+1, n)`.
pub(crate) fn cost_gradient_sums<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    trajectory: &TrajectoryEnsemble<S>,
    fundamentals: &FundamentalPair<S>,
) -> Result<Array3<S>> {
    let grid = trajectory.grid();
    let (paths, steps, n) = (trajectory.paths(), grid.steps(), spec.dims().n);
    if fundamentals.phi().shape()[..2] != [paths, steps + 1] {
        return Err(Error::InvalidProblem(
            "fundamental solutions do not match the trajectory".into(),
        ));
    }
    let dt = grid.dt();
    let rows = par_paths(paths, |path| {
        let mut sums = vec![S::zero(); (steps + 1) * n];
        let mut gx = vec![S::zero(); n];
        spec.terminal_cost_x(trajectory.terminal(path), &mut gx);
        let phi = fundamentals.phi_at(path, steps);
        for j in 0..n {
            sums[steps * n + j] = (0..n).fold(S::zero(), |acc, i| acc + phi[i * n + j] * gx[i]);
        }
        let mut eval = HxEval::new(spec);
        for k in (0..steps).rev() {
            eval.load(spec, grid.t(k), trajectory.state(path, k), control.action(path, k));
            let phi = fundamentals.phi_at(path, k);
            for j in 0..n {
                let add = (0..n).fold(S::zero(), |acc, i| acc + phi[i * n + j] * eval.hx()[i]);
                sums[k * n + j] = sums[(k + 1) * n + j] + add * dt;
            }
        }
        Ok(sums)
    })?;
    Ok(stack(rows, (paths, steps + 1, n)))
}

/// `p_t = E[Ψ_tᵀ Φ_Tᵀ g_x(x_T) + Ψ_tᵀ ∫_t^T Φ_sᵀ h̄_x ds | F_t]`, with the
/// conditional expectation replaced by regression on the time-`t` state.
/// `p_N = g_x(x_N)` exactly. No martingale part is produced.
pub fn adjoint_explicit<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    trajectory: &TrajectoryEnsemble<S>,
    fundamentals: &FundamentalPair<S>,
    config: &RegressionConfig,
) -> Result<AdjointPair<S>> {
    let grid = trajectory.grid();
    let (paths, steps, n) = (trajectory.paths(), grid.steps(), spec.dims().n);
    control.check(spec, steps, paths)?;
    let sums = cost_gradient_sums(spec, control, trajectory, fundamentals)?;
    let flat = sums.as_slice().expect("standard layout");

    // slices are independent, so regress them in parallel
    let slices: Vec<Result<(Vec<S>, usize, f64)>> = (0..steps)
        .into_par_iter()
        .map(|j| {
            let reg = SliceRegressor::new(paths, n, config.degree, j, |p| trajectory.state(p, j))?;
            let mut fitted = vec![S::zero(); paths * n];
            let mut sq = 0.0;
            for i in 0..n {
                let target: Vec<S> = (0..paths)
                    .map(|p| {
                        let psi = fundamentals.psi_at(p, j);
                        let s = &flat[(p * (steps + 1) + j) * n..][..n];
                        (0..n).fold(S::zero(), |acc, k| acc + psi[k * n + i] * s[k])
                    })
                    .collect();
                let fit = reg.fit(&target);
                sq += rms_diff(&fit, &target).as_f64().powi(2);
                for p in 0..paths {
                    fitted[p * n + i] = fit[p];
                }
            }
            Ok((fitted, reg.basis_size(), sq.sqrt()))
        })
        .collect();

    let mut p = Array3::zeros((paths, steps + 1, n));
    let mut basis_sizes = Vec::with_capacity(steps);
    let mut residual_rms = Vec::with_capacity(steps);
    for (j, slice) in slices.into_iter().enumerate() {
        let (fitted, size, res) = slice?;
        for path in 0..paths {
            for i in 0..n {
                p[[path, j, i]] = fitted[path * n + i];
            }
        }
        basis_sizes.push(size);
        residual_rms.push(res);
    }
    let mut gx = vec![S::zero(); n];
    for path in 0..paths {
        spec.terminal_cost_x(trajectory.terminal(path), &mut gx);
        for i in 0..n {
            p[[path, steps, i]] = gx[i];
        }
    }
    Ok(AdjointPair {
        p,
        big_p: None,
        method: AdjointMethod::Explicit,
        diagnostics: RegressionDiagnostics {
            degree: config.degree,
            basis_sizes,
            residual_rms,
        },
    })
}
