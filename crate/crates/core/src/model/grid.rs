use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform partition `0 = t₀ < … < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TimeGrid<S> {
    steps: usize,
    horizon: S,
}

impl<S: Scalar> TimeGrid<S> {
    pub fn new(horizon: S, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("the time grid needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon > S::zero()) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn dt(&self) -> S {
        self.horizon / S::from_count(self.steps)
    }

    /// Knot `t_j`; the last knot is exactly `T`.
    pub fn t(&self, j: usize) -> S {
        if j == self.steps {
            self.horizon
        } else {
            S::from_count(j) * self.dt()
        }
    }

    pub fn knots(&self) -> Vec<S> {
        (0..=self.steps).map(|j| self.t(j)).collect()
    }

    /// Grid with each cell split into `factor` equal sub-steps.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.steps * factor)
    }
}

/// Brownian increments `ΔW` of shape `(paths, steps, d)`.
///
/// Path `i` is drawn from its own ChaCha8 stream (`seed`, stream `i`), so an
/// ensemble's first paths do not depend on how many paths were requested or
/// on thread scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch<S> {
    seed: u64,
    dt: S,
    increments: Array3<S>,
}

impl<S: Scalar> NoiseBatch<S> {
    pub fn generate(seed: u64, paths: usize, grid: &TimeGrid<S>, dim: usize) -> Result<Self> {
        if paths == 0 || dim == 0 {
            return Err(Error::Config("noise needs at least one path and one dimension".into()));
        }
        let steps = grid.steps();
        let sqrt_dt = grid.dt().sqrt().as_f64();
        let rows: Vec<Vec<S>> = (0..paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p as u64);
                (0..steps * dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        S::lit(z * sqrt_dt)
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<S> = rows.into_iter().flatten().collect();
        let increments =
            Array3::from_shape_vec((paths, steps, dim), flat).expect("noise shape is consistent by construction");
        Ok(Self {
            seed,
            dt: grid.dt(),
            increments,
        })
    }

    /// Wraps externally produced increments.
    pub fn from_increments(seed: u64, dt: S, increments: Array3<S>) -> Self {
        Self { seed, dt, increments }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn paths(&self) -> usize {
        self.increments.shape()[0]
    }

    pub fn steps(&self) -> usize {
        self.increments.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.increments.shape()[2]
    }

    pub fn increments(&self) -> &Array3<S> {
        &self.increments
    }

    /// `ΔW` for one path and step.
    pub fn at(&self, path: usize, step: usize) -> &[S] {
        let row = self.increments.slice(ndarray::s![path, step, ..]);
        row.to_slice().expect("standard layout")
    }

    /// Sums groups of `factor` consecutive increments: the same Brownian path seen on a coarser grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::Config(format!(
                "cannot coarsen {} steps by {factor}",
                self.steps()
            )));
        }
        let (m, n, d) = (self.paths(), self.steps() / factor, self.dim());
        let mut out = Array3::zeros((m, n, d));
        for p in 0..m {
            for j in 0..n {
                for l in 0..d {
                    let mut acc = S::zero();
                    for r in 0..factor {
                        acc = acc + self.increments[[p, j * factor + r, l]];
                    }
                    out[[p, j, l]] = acc;
                }
            }
        }
        Ok(Self {
            seed: self.seed,
            dt: self.dt * S::from_count(factor),
            increments: out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots_hit_endpoints() {
        let g = TimeGrid::new(1.0f64, 3).unwrap();
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(3), 1.0);
        assert_eq!(g.knots().len(), 4);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let g = TimeGrid::new(1.0f64, 50).unwrap();
        let a = NoiseBatch::generate(42, 64, &g, 2).unwrap();
        let b = NoiseBatch::generate(42, 64, &g, 2).unwrap();
        assert_eq!(a, b);
        let c = NoiseBatch::generate(43, 64, &g, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn paths_do_not_depend_on_batch_size() {
        let g = TimeGrid::new(1.0f64, 20).unwrap();
        let small = NoiseBatch::generate(9, 3, &g, 1).unwrap();
        let large = NoiseBatch::generate(9, 30, &g, 1).unwrap();
        for p in 0..3 {
            for j in 0..20 {
                assert_eq!(small.at(p, j), large.at(p, j));
            }
        }
    }

    #[test]
    fn increments_have_variance_dt() {
        let g = TimeGrid::new(2.0f64, 10).unwrap();
        let w = NoiseBatch::generate(1, 20_000, &g, 1).unwrap();
        let n = w.increments().len() as f64;
        let mean: f64 = w.increments().iter().sum::<f64>() / n;
        let var: f64 = w.increments().iter().map(|v| v * v).sum::<f64>() / n;
        // dt = 0.2; 2e5 samples
        assert!(mean.abs() < 5.0 * (0.2f64 / n).sqrt());
        assert!((var - 0.2).abs() < 5.0 * 0.2 * (2.0 / n).sqrt());
    }
}
