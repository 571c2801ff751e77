//! Monte Carlo summary statistics with fixed-order reductions.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Estimate<S> {
    pub mean: S,
    pub std_error: S,
}

impl<S: Scalar> Estimate<S> {
    pub fn exact(value: S) -> Self {
        Self {
            mean: value,
            std_error: S::zero(),
        }
    }

    /// Summarizes per-path samples. Identical samples (deterministic problems)
    /// return the common value exactly with zero error.
    pub fn from_samples(samples: &[S]) -> Self {
        let Some(&first) = samples.first() else {
            return Self::exact(S::zero());
        };
        if samples.iter().all(|&s| s == first) {
            return Self::exact(first);
        }
        let m = S::from_count(samples.len());
        let mean = samples.iter().copied().sum::<S>() / m;
        if samples.len() < 2 {
            return Self::exact(mean);
        }
        let var = samples.iter().map(|&s| (s - mean) * (s - mean)).sum::<S>() / S::from_count(samples.len() - 1);
        Self {
            mean,
            std_error: (var / m).sqrt(),
        }
    }

    /// `|mean| <= sigmas * std_error + slack`
    pub fn consistent_with_zero(&self, sigmas: S, slack: S) -> bool {
        self.mean.abs() <= sigmas * self.std_error + slack
    }
}

/// Mean of squares of a sample.
pub fn mean_square<S: Scalar>(samples: impl IntoIterator<Item = S>) -> S {
    let mut n = 0usize;
    let mut acc = S::zero();
    for s in samples {
        acc = acc + s * s;
        n += 1;
    }
    if n == 0 {
        S::zero()
    } else {
        acc / S::from_count(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_exact() {
        let e = Estimate::from_samples(&[0.1f64; 1000]);
        assert_eq!(e.mean, 0.1);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn standard_error_of_two_points() {
        let e = Estimate::from_samples(&[1.0f64, 3.0]);
        assert_eq!(e.mean, 2.0);
        // sample variance 2, se = sqrt(2/2)
        assert!((e.std_error - 1.0).abs() < 1e-15);
    }
}
