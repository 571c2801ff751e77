//! Per-slice least-squares regression on polynomials of the standardized state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    /// Total degree of the polynomial basis.
    pub degree: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self { degree: 2 }
    }
}

/// Exponent vectors of all monomials in `vars` variables of total degree ≤ `degree`,
/// constant first.
fn exponents(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; vars]];
    for total in 1..=degree {
        let mut current = vec![0; vars];
        fill(&mut current, 0, total, &mut out);
    }
    out
}

fn fill(current: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=left).rev() {
        current[pos] = e;
        fill(current, pos + 1, left - e, out);
    }
    current[pos] = 0;
}

/// Least-squares projection onto the basis evaluated at one time slice.
pub(crate) struct SliceRegressor<S> {
    ls: LeastSquares<S>,
    design: Vec<S>,
    rows: usize,
}

impl<S: Scalar> SliceRegressor<S> {
    /// `state(path)` gives the conditioning state of each path. Components
    /// without spread across paths are dropped from the basis.
    pub(crate) fn new<'a, F>(paths: usize, dim: usize, degree: usize, step: usize, state: F) -> Result<Self>
    where
        F: Fn(usize) -> &'a [S],
        S: 'a,
    {
        let count = S::from_count(paths);
        let mut kept: Vec<(usize, S, S)> = Vec::new();
        for i in 0..dim {
            let mean = (0..paths).map(|p| state(p)[i]).sum::<S>() / count;
            let var = (0..paths).map(|p| (state(p)[i] - mean).powi(2)).sum::<S>() / count;
            let sd = var.sqrt();
            if sd > S::epsilon().sqrt() * (S::one() + mean.abs()) {
                kept.push((i, mean, sd));
            }
        }
        let basis = if kept.is_empty() {
            vec![vec![]]
        } else {
            exponents(kept.len(), degree)
        };
        let cols = basis.len();
        let mut design = vec![S::zero(); paths * cols];
        for p in 0..paths {
            let x = state(p);
            let z: Vec<S> = kept.iter().map(|&(i, m, s)| (x[i] - m) / s).collect();
            for (c, e) in basis.iter().enumerate() {
                let v = e
                    .iter()
                    .zip(&z)
                    .fold(S::one(), |acc, (&k, &zi)| acc * zi.powi(k as i32));
                design[c * paths + p] = v;
            }
        }
        let rcond = S::lit(1e-10).max(S::epsilon() * S::lit(100.0));
        let ls = LeastSquares::factor(design.clone(), paths, cols, rcond).ok_or(Error::RankDeficient {
            step,
            basis_size: cols,
            paths,
        })?;
        Ok(Self {
            ls,
            design,
            rows: paths,
        })
    }

    pub(crate) fn basis_size(&self) -> usize {
        self.ls.cols()
    }

    /// Fitted values of the projection of `target` at every path.
    pub(crate) fn fit(&self, target: &[S]) -> Vec<S> {
        let coef = self.ls.solve(target);
        let mut out = vec![S::zero(); self.rows];
        for (c, &beta) in coef.iter().enumerate() {
            if beta == S::zero() {
                continue;
            }
            let col = &self.design[c * self.rows..(c + 1) * self.rows];
            for (o, &v) in out.iter_mut().zip(col) {
                *o = *o + beta * v;
            }
        }
        out
    }
}

/// Root-mean-square of `a − b`.
pub(crate) fn rms_diff<S: Scalar>(a: &[S], b: &[S]) -> S {
    if a.is_empty() {
        return S::zero();
    }
    let s: S = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (s / S::from_count(a.len())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_counts() {
        assert_eq!(exponents(1, 2).len(), 3);
        assert_eq!(exponents(2, 2).len(), 6);
        assert_eq!(exponents(3, 1).len(), 4);
        assert_eq!(exponents(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn quadratic_target_recovered_exactly() {
        let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0 - 2.0]).collect();
        let reg = SliceRegressor::new(50, 1, 2, 0, |p| &xs[p]).unwrap();
        let target: Vec<f64> = xs.iter().map(|x| 3.0 - x[0] + 0.5 * x[0] * x[0]).collect();
        let fit = reg.fit(&target);
        assert!(rms_diff(&fit, &target) < 1e-12);
    }

    #[test]
    fn degenerate_state_falls_back_to_constant() {
        let xs = vec![vec![0.0f64]; 20];
        let reg = SliceRegressor::new(20, 1, 2, 0, |p| &xs[p]).unwrap();
        assert_eq!(reg.basis_size(), 1);
        let target: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(reg.fit(&target).iter().all(|v| (v - 9.5).abs() < 1e-12));
        assert!(reg.fit(&[0.0; 20]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_paths_is_rank_deficient() {
        let xs: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            SliceRegressor::new(2, 1, 2, 3, |p| &xs[p]),
            Err(Error::RankDeficient {
                step: 3,
                basis_size: 3,
                paths: 2
            })
        ));
    }
}
