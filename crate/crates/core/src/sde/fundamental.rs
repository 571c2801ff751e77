use ndarray::Array4;

use super::{check_noise, par_paths, ControlRef, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::linalg::{distance_from_identity, identity, matmul};
use crate::model::{NoiseBatch, ProblemSpec};
use crate::scalar::Scalar;

/// `Φ` solves the linearized homogeneous equation and `Ψ` its inverse equation;
/// both start at the identity. Stored `[path][j][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPair<S> {
    phi: Array4<S>,
    psi: Array4<S>,
}

impl<S: Scalar> FundamentalPair<S> {
    pub fn phi(&self) -> &Array4<S> {
        &self.phi
    }

    pub fn psi(&self) -> &Array4<S> {
        &self.psi
    }

    fn block(a: &Array4<S>, path: usize, step: usize) -> &[S] {
        let sh = a.shape();
        let nn = sh[2] * sh[3];
        let start = (path * sh[1] + step) * nn;
        &a.as_slice().expect("standard layout")[start..start + nn]
    }

    /// Row-major `n×n` value of `Φ` at one knot.
    #[inline]
    pub fn phi_at(&self, path: usize, step: usize) -> &[S] {
        Self::block(&self.phi, path, step)
    }

    #[inline]
    pub fn psi_at(&self, path: usize, step: usize) -> &[S] {
        Self::block(&self.psi, path, step)
    }

    /// `max |Ψ_t Φ_t − I|` over paths and knots (entrywise).
    pub fn inverse_defect(&self) -> S {
        let sh = self.phi.shape();
        let n = sh[2];
        let mut prod = vec![S::zero(); n * n];
        let mut worst = S::zero();
        for path in 0..sh[0] {
            for j in 0..sh[1] {
                matmul(self.psi_at(path, j), self.phi_at(path, j), n, n, n, &mut prod);
                worst = worst.max(distance_from_identity(&prod, n));
            }
        }
        worst
    }

    /// `max_path sup_t (|Φ_t|² + |Ψ_t|²)` with Frobenius norms.
    pub fn bound_probe(&self) -> S {
        let sh = self.phi.shape();
        let mut worst = S::zero();
        for path in 0..sh[0] {
            for j in 0..sh[1] {
                let sq = |a: &[S]| a.iter().map(|&v| v * v).sum::<S>();
                worst = worst.max(sq(self.phi_at(path, j)) + sq(self.psi_at(path, j)));
            }
        }
        worst
    }
}

/// Euler–Maruyama for
/// `dΦ = B Φ dt + Σ_l C_l Φ dW_l` and
/// `dΨ = Ψ(−B + Σ_l C_l C_l) dt − Σ_l Ψ C_l dW_l`,
/// with `B = ∫b_x dμ`, `C_l = ∫∂_x σ_{·l} dμ` along the base trajectory.
/// The inverse property is monitored through [`FundamentalPair::inverse_defect`],
/// never enforced.
pub fn fundamental_solutions<S: Scalar>(
    spec: &ProblemSpec<S>,
    control: ControlRef<'_, S>,
    trajectory: &TrajectoryEnsemble<S>,
    noise: &NoiseBatch<S>,
) -> Result<FundamentalPair<S>> {
    let grid = trajectory.grid();
    check_noise(spec, grid, noise)?;
    let paths = trajectory.paths();
    if noise.paths() != paths || noise.seed() != trajectory.seed() {
        return Err(Error::InvalidProblem(
            "fundamental solutions need the noise of their base trajectory".into(),
        ));
    }
    let steps = grid.steps();
    control.check(spec, steps, paths)?;
    let dims = spec.dims();
    let (n, d) = (dims.n, dims.d);
    let nn = n * n;
    let dt = grid.dt();
    let rows = par_paths(paths, |path| {
        let mut phi = identity::<S>(n);
        let mut psi = identity::<S>(n);
        phi.reserve(steps * nn);
        psi.reserve(steps * nn);
        let mut bx = vec![S::zero(); nn];
        let mut sx = vec![S::zero(); d * nn];
        let mut tmp = vec![S::zero(); nn];
        let mut cc = vec![S::zero(); nn];
        for j in 0..steps {
            let t = grid.t(j);
            let x = trajectory.state(path, j);
            let act = control.action(path, j);
            spec.drift_x(t, x, act, &mut bx);
            spec.diffusion_x(t, x, act, &mut sx);
            let dw = noise.at(path, j);
            let phi_j = phi[j * nn..(j + 1) * nn].to_vec();
            let psi_j = psi[j * nn..(j + 1) * nn].to_vec();

            // Φ increment: (B dt + Σ C_l dW_l) Φ
            let mut gen = vec![S::zero(); nn];
            for (g, &b) in gen.iter_mut().zip(&bx) {
                *g = b * dt;
            }
            for l in 0..d {
                for (g, &c) in gen.iter_mut().zip(&sx[l * nn..(l + 1) * nn]) {
                    *g = *g + c * dw[l];
                }
            }
            matmul(&gen, &phi_j, n, n, n, &mut tmp);
            phi.extend(phi_j.iter().zip(&tmp).map(|(&a, &b)| a + b));

            // Ψ increment: Ψ ((−B + Σ C_l C_l) dt − Σ C_l dW_l)
            let mut gen = vec![S::zero(); nn];
            for (g, &b) in gen.iter_mut().zip(&bx) {
                *g = -b * dt;
            }
            for l in 0..d {
                let c = &sx[l * nn..(l + 1) * nn];
                matmul(c, c, n, n, n, &mut cc);
                for ((g, &sq), &cv) in gen.iter_mut().zip(&cc).zip(c) {
                    *g = *g + sq * dt - cv * dw[l];
                }
            }
            matmul(&psi_j, &gen, n, n, n, &mut tmp);
            psi.extend(psi_j.iter().zip(&tmp).map(|(&a, &b)| a + b));

            let fresh = (j + 1) * nn..(j + 2) * nn;
            if phi[fresh.clone()].iter().chain(&psi[fresh]).any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { path, step: j + 1 });
            }
        }
        Ok((phi, psi))
    })?;
    let (phi, psi): (Vec<Vec<S>>, Vec<Vec<S>>) = rows.into_iter().unzip();
    let shape = (paths, steps + 1, n, n);
    Ok(FundamentalPair {
        phi: Array4::from_shape_vec(shape, phi.into_iter().flatten().collect()).expect("shape"),
        psi: Array4::from_shape_vec(shape, psi.into_iter().flatten().collect()).expect("shape"),
    })
}
