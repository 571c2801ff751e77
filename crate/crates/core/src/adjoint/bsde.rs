use ndarray::{Array3, Array4};

use super::regression::{rms_diff, RegressionConfig, SliceRegressor};
use super::{AdjointMethod, AdjointPair, HxEval, RegressionDiagnostics};
use crate::error::Result;
use crate::model::{NoiseBatch, ProblemSpec};
use crate::scalar::Scalar;
use crate::sde::{check_noise, par_paths, ControlRef, TrajectoryEnsemble};

/// Backward regression for `dp = −H_x(t, x, μ, p, P) dt + P dW`, `p_T = g_x(x_T)`.
///
/// At each step, with `m_j` the projection of `p_{j+1}`:
/// `P_j = E[(p_{j+1} − m_j) ΔW_jᵀ / Δt | x_j]` and
/// `p_j = E[p_{j+1} + H_x(t_j, x_j, μ_j, p_{j+1}, P_j) Δt | x_j]`.
/// Subtracting `m_j` leaves the estimator of `P` unbiased and removes most of its
/// variance. `P_N` is stored as zero.
pub fn adjoint_bsde<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    trajectory: &TrajectoryEnsemble<S>,
    noise: &NoiseBatch<S>,
    config: &RegressionConfig,
) -> Result<AdjointPair<S>> {
    let grid = trajectory.grid();
    check_noise(spec, grid, noise)?;
    let dims = spec.dims();
    let (paths, steps, n, d) = (trajectory.paths(), grid.steps(), dims.n, dims.d);
    control.check(spec, steps, paths)?;
    let dt = grid.dt();

    let mut p = Array3::<S>::zeros((paths, steps + 1, n));
    let mut big_p = Array4::<S>::zeros((paths, steps + 1, n, d));
    let mut gx = vec![S::zero(); n];
    for path in 0..paths {
        spec.terminal_cost_x(trajectory.terminal(path), &mut gx);
        for i in 0..n {
            p[[path, steps, i]] = gx[i];
        }
    }
    let mut basis_sizes = vec![0; steps];
    let mut residual_rms = vec![0.0; steps];

    for j in (0..steps).rev() {
        let reg = SliceRegressor::new(paths, n, config.degree, j, |q| trajectory.state(q, j))?;
        basis_sizes[j] = reg.basis_size();
        let next: Vec<Vec<S>> = (0..n).map(|i| (0..paths).map(|q| p[[q, j + 1, i]]).collect()).collect();

        // martingale part
        let mut pj = vec![S::zero(); paths * n * d];
        for (i, next_i) in next.iter().enumerate() {
            let mean = reg.fit(next_i);
            for l in 0..d {
                let target: Vec<S> = (0..paths)
                    .map(|q| (next_i[q] - mean[q]) * noise.at(q, j)[l] / dt)
                    .collect();
                for (q, v) in reg.fit(&target).into_iter().enumerate() {
                    pj[q * n * d + i * d + l] = v;
                }
            }
        }

        // drift: p_{j+1} + H_x Δt, assembled per path
        let t = grid.t(j);
        let targets = par_paths(paths, |q| {
            let mut eval = HxEval::new(spec);
            eval.load(spec, t, trajectory.state(q, j), control.action(q, j));
            let pn: Vec<S> = next.iter().map(|v| v[q]).collect();
            let mut hx = vec![S::zero(); n];
            eval.gradient(&pn, Some(&pj[q * n * d..(q + 1) * n * d]), &mut hx);
            Ok(pn.iter().zip(&hx).map(|(&a, &h)| a + h * dt).collect::<Vec<S>>())
        })?;
        let mut sq = 0.0;
        for i in 0..n {
            let target: Vec<S> = targets.iter().map(|v| v[i]).collect();
            let fit = reg.fit(&target);
            sq += rms_diff(&fit, &target).as_f64().powi(2);
            for (q, v) in fit.into_iter().enumerate() {
                p[[q, j, i]] = v;
            }
        }
        residual_rms[j] = sq.sqrt();
        for q in 0..paths {
            for i in 0..n {
                for l in 0..d {
                    big_p[[q, j, i, l]] = pj[q * n * d + i * d + l];
                }
            }
        }
    }
    Ok(AdjointPair {
        p,
        big_p: Some(big_p),
        method: AdjointMethod::BsdeRegression,
        diagnostics: RegressionDiagnostics {
            degree: config.degree,
            basis_sizes,
            residual_rms,
        },
    })
}
