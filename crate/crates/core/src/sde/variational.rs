use ndarray::Array3;

use super::{check_noise, par_paths, stack, ControlRef, TrajectoryEnsemble};
use crate::controls::SingularControl;
use crate::error::{Error, Result};
use crate::model::{NoiseBatch, ProblemSpec};
use crate::scalar::Scalar;

/// First-order state sensitivity `z` along a convex perturbation, `z_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEnsemble<S> {
    z: Array3<S>,
}

impl<S: Scalar> VariationalEnsemble<S> {
    pub fn values(&self) -> &Array3<S> {
        &self.z
    }

    #[inline]
    pub fn at(&self, path: usize, step: usize) -> &[S] {
        let n = self.z.shape()[2];
        let steps = self.z.shape()[1];
        let flat = self.z.as_slice().expect("standard layout");
        let start = (path * steps + step) * n;
        &flat[start..start + n]
    }
}

/// Euler scheme for the linearized state along the direction `(q, η) − (μ, ξ)`:
///
/// `z_{j+1} = z_j + (B z_j + b̄_q − b̄_μ) Δt + Σ_l (C_l z_j + σ̄_q,l − σ̄_μ,l) ΔW_l + G(t_j)(Δη − Δξ)_j`
///
/// with `B = ∫b_x dμ` and `C_l = ∫∂_x σ_{·l} dμ` along the base trajectory.
pub fn simulate_variational<S: Scalar>(
    spec: &ProblemSpec<S>,
    base: (ControlRef<'_, S>, &SingularControl<S>),
    direction: (ControlRef<'_, S>, &SingularControl<S>),
    trajectory: &TrajectoryEnsemble<S>,
    noise: &NoiseBatch<S>,
) -> Result<VariationalEnsemble<S>> {
    let grid = trajectory.grid();
    check_noise(spec, grid, noise)?;
    let paths = trajectory.paths();
    if noise.paths() != paths || noise.seed() != trajectory.seed() {
        return Err(Error::InvalidProblem(
            "variational equation needs the noise of its base trajectory".into(),
        ));
    }
    let steps = grid.steps();
    base.0.check(spec, steps, paths)?;
    base.1.check(spec, steps, paths)?;
    direction.0.check(spec, steps, paths)?;
    direction.1.check(spec, steps, paths)?;
    let dims = spec.dims();
    let (n, d, m) = (dims.n, dims.d, dims.m);
    let dt = grid.dt();
    let rows = par_paths(paths, |path| {
        let mut zs = vec![S::zero(); n];
        zs.reserve(steps * n);
        let mut bx = vec![S::zero(); n * n];
        let mut sx = vec![S::zero(); d * n * n];
        let (mut b_mu, mut b_q) = (vec![S::zero(); n], vec![S::zero(); n]);
        let (mut s_mu, mut s_q) = (vec![S::zero(); n * d], vec![S::zero(); n * d]);
        let mut gain = vec![S::zero(); n * m];
        for j in 0..steps {
            let t = grid.t(j);
            let x = trajectory.state(path, j);
            let mu = base.0.action(path, j);
            let q = direction.0.action(path, j);
            spec.drift_x(t, x, mu, &mut bx);
            spec.diffusion_x(t, x, mu, &mut sx);
            spec.drift(t, x, mu, &mut b_mu);
            spec.drift(t, x, q, &mut b_q);
            spec.diffusion(t, x, mu, &mut s_mu);
            spec.diffusion(t, x, q, &mut s_q);
            let dw = noise.at(path, j);
            let z = &zs[j * n..(j + 1) * n];
            let mut next = Vec::with_capacity(n);
            for i in 0..n {
                let mut drift = b_q[i] - b_mu[i];
                for k in 0..n {
                    drift = drift + bx[i * n + k] * z[k];
                }
                let mut v = z[i] + drift * dt;
                for l in 0..d {
                    let mut vol = s_q[i * d + l] - s_mu[i * d + l];
                    for k in 0..n {
                        vol = vol + sx[l * n * n + i * n + k] * z[k];
                    }
                    v = v + vol * dw[l];
                }
                next.push(v);
            }
            let (deta, dxi) = (direction.1.increment(path, j), base.1.increment(path, j));
            if deta.iter().zip(dxi).any(|(a, b)| a != b) {
                spec.singular_gain(t, &mut gain);
                for (i, v) in next.iter_mut().enumerate() {
                    for r in 0..m {
                        *v = *v + gain[i * m + r] * (deta[r] - dxi[r]);
                    }
                }
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { path, step: j + 1 });
            }
            zs.extend(next);
        }
        Ok(zs)
    })?;
    Ok(VariationalEnsemble {
        z: stack(rows, (paths, steps + 1, n)),
    })
}
