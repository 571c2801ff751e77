//! The adjoint pair `(p, P)` by two routes (explicit conditional expectation and
//! backward regression on the linear BSDE), the auxiliary processes behind the
//! duality identity, and the variational-inequality functional.

mod auxiliary;
mod bsde;
mod explicit;
mod inequality;
mod regression;

pub use auxiliary::{auxiliary_processes, duality_check, duality_residual, AuxiliaryProcesses, DualityResidual};
pub use bsde::adjoint_bsde;
pub use explicit::adjoint_explicit;
pub use inequality::variational_inequality_value;
pub use regression::RegressionConfig;

use ndarray::{Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::controls::Action;
use crate::model::ProblemSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointMethod {
    Explicit,
    BsdeRegression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDiagnostics {
    pub degree: usize,
    /// Basis size used at each slice `0..N`.
    pub basis_sizes: Vec<usize>,
    /// RMS of target minus fitted value for the `p` regression at each slice.
    pub residual_rms: Vec<f64>,
}

/// `p[path][j][i]` and, when available, `P[path][j][i][l]` on the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair<S> {
    p: Array3<S>,
    big_p: Option<Array4<S>>,
    method: AdjointMethod,
    diagnostics: RegressionDiagnostics,
}

impl<S: Scalar> AdjointPair<S> {
    pub fn p(&self) -> &Array3<S> {
        &self.p
    }

    pub fn big_p(&self) -> Option<&Array4<S>> {
        self.big_p.as_ref()
    }

    pub fn method(&self) -> AdjointMethod {
        self.method
    }

    pub fn diagnostics(&self) -> &RegressionDiagnostics {
        &self.diagnostics
    }

    pub fn paths(&self) -> usize {
        self.p.shape()[0]
    }

    pub fn steps(&self) -> usize {
        self.p.shape()[1] - 1
    }

    #[inline]
    pub fn p_at(&self, path: usize, step: usize) -> &[S] {
        let sh = self.p.shape();
        let start = (path * sh[1] + step) * sh[2];
        &self.p.as_slice().expect("standard layout")[start..start + sh[2]]
    }

    /// Row-major `n×d` block of `P`, if this pair carries one.
    #[inline]
    pub fn big_p_at(&self, path: usize, step: usize) -> Option<&[S]> {
        self.big_p.as_ref().map(|a| {
            let sh = a.shape();
            let w = sh[2] * sh[3];
            let start = (path * sh[1] + step) * w;
            &a.as_slice().expect("standard layout")[start..start + w]
        })
    }

    /// Attaches a martingale part (for instance the one recovered from the
    /// auxiliary processes) to an explicit-route pair.
    pub fn with_big_p(mut self, big_p: Array4<S>) -> Self {
        self.big_p = Some(big_p);
        self
    }
}

/// Gradient `H_x = h̄_x + b̄_xᵀ p + Σ_l (∂_x σ̄_{·l})ᵀ P_{·l}` at one point, with scratch buffers.
pub(crate) struct HxEval<S> {
    n: usize,
    d: usize,
    hx: Vec<S>,
    bx: Vec<S>,
    sx: Vec<S>,
}

impl<S: Scalar> HxEval<S> {
    pub(crate) fn new(spec: &ProblemSpec<S>) -> Self {
        let dims = spec.dims();
        let (n, d) = (dims.n, dims.d);
        Self {
            n,
            d,
            hx: vec![S::zero(); n],
            bx: vec![S::zero(); n * n],
            sx: vec![S::zero(); d * n * n],
        }
    }

    /// Loads `h̄_x`, `b̄_x` and `∂_x σ̄` at `(t, x, action)`.
    pub(crate) fn load(&mut self, spec: &ProblemSpec<S>, t: S, x: &[S], action: Action<'_, S>) {
        spec.running_cost_x(t, x, action, &mut self.hx);
        spec.drift_x(t, x, action, &mut self.bx);
        spec.diffusion_x(t, x, action, &mut self.sx);
    }

    pub(crate) fn hx(&self) -> &[S] {
        &self.hx
    }

    /// `H_x` for the loaded point; `big_p` row-major `n×d`, or `None` for zero.
    pub(crate) fn gradient(&self, p: &[S], big_p: Option<&[S]>, out: &mut [S]) {
        let (n, d) = (self.n, self.d);
        for j in 0..n {
            let mut v = self.hx[j];
            for i in 0..n {
                v = v + self.bx[i * n + j] * p[i];
            }
            if let Some(pp) = big_p {
                for l in 0..d {
                    for i in 0..n {
                        v = v + self.sx[l * n * n + i * n + j] * pp[i * d + l];
                    }
                }
            }
            out[j] = v;
        }
    }

    /// `(∂_x σ̄_{·l})ᵀ p` written into column `l` of a row-major `n×d` block.
    pub(crate) fn sigma_x_t_p(&self, p: &[S], out: &mut [S]) {
        let (n, d) = (self.n, self.d);
        for l in 0..d {
            for j in 0..n {
                let mut v = S::zero();
                for i in 0..n {
                    v = v + self.sx[l * n * n + i * n + j] * p[i];
                }
                out[j * d + l] = v;
            }
        }
    }
}
