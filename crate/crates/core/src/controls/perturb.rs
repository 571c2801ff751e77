use serde::{Deserialize, Serialize};

use super::{Cells, RelaxedControl, SingularControl};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Step size `θ ∈ [0, 1]` and direction `(q, η)` of a convex perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PerturbationSpec<S> {
    pub theta: S,
    pub control: RelaxedControl<S>,
    pub singular: SingularControl<S>,
}

impl<S: Scalar> PerturbationSpec<S> {
    pub fn new(theta: S, control: RelaxedControl<S>, singular: SingularControl<S>) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            control,
            singular,
        })
    }
}

fn check_theta<S: Scalar>(theta: S) -> Result<()> {
    if !(theta >= S::zero() && theta <= S::one()) {
        return Err(Error::InvalidTheta(theta.as_f64()));
    }
    Ok(())
}

fn merged_paths(a: Option<usize>, b: Option<usize>) -> Result<Option<usize>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::InvalidControl(format!("base has {x} paths, direction has {y}"))),
        (x, y) => Ok(x.or(y)),
    }
}

fn combine<T, F>(a: &Cells<T>, b: &Cells<T>, mut f: F) -> Result<Cells<T>>
where
    F: FnMut(&T, &T) -> T,
{
    if a.steps != b.steps {
        return Err(Error::InvalidControl(format!(
            "base has {} cells, direction has {}",
            a.steps, b.steps
        )));
    }
    let paths = merged_paths(a.paths, b.paths)?;
    let data = (0..paths.unwrap_or(1))
        .flat_map(|p| (0..a.steps).map(move |j| (p, j)))
        .map(|(p, j)| f(a.get(p, j), b.get(p, j)))
        .collect();
    Ok(Cells {
        steps: a.steps,
        paths,
        data,
    })
}

/// `(μ^θ, ξ^θ) = (μ, ξ) + θ[(q, η) − (μ, ξ)]`. Returns the base unchanged at
/// `θ = 0` and the direction at `θ = 1`.
pub fn convex_combine<S: Scalar>(
    base: (&RelaxedControl<S>, &SingularControl<S>),
    direction: &PerturbationSpec<S>,
) -> Result<(RelaxedControl<S>, SingularControl<S>)> {
    let theta = direction.theta;
    check_theta(theta)?;
    let (mu, xi) = base;
    let (q, eta) = (&direction.control, &direction.singular);
    if mu.dim != q.dim || xi.dim != eta.dim {
        return Err(Error::InvalidControl("base and direction dimensions differ".into()));
    }
    if theta == S::zero() {
        // still reject mismatched grids
        combine(&mu.cells, &q.cells, |a, _| a.clone())?;
        combine(&xi.cells, &eta.cells, |a, _| a.clone())?;
        return Ok((mu.clone(), xi.clone()));
    }
    if theta == S::one() {
        combine(&mu.cells, &q.cells, |a, _| a.clone())?;
        combine(&xi.cells, &eta.cells, |a, _| a.clone())?;
        return Ok((q.clone(), eta.clone()));
    }
    let one_minus = S::one() - theta;
    let cells = combine(&mu.cells, &q.cells, |a, b| a.mix(b, theta))?;
    let incs = combine(&xi.cells, &eta.cells, |a, b| {
        a.iter().zip(b).map(|(&x, &y)| one_minus * x + theta * y).collect()
    })?;
    Ok((
        RelaxedControl { cells, dim: mu.dim },
        SingularControl {
            cells: incs,
            dim: xi.dim,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::Measure;

    fn point(v: f64, steps: usize) -> RelaxedControl<f64> {
        RelaxedControl::constant(Measure::dirac(vec![v]), steps).unwrap()
    }

    #[test]
    fn half_step_between_diracs() {
        let (mu, xi) = (point(0.0, 3), SingularControl::zero(3, 1));
        let dir = PerturbationSpec::new(
            0.5,
            point(1.0, 3),
            SingularControl::shared(vec![vec![1.0], vec![0.0], vec![2.0]]).unwrap(),
        )
        .unwrap();
        let (m, x) = convex_combine((&mu, &xi), &dir).unwrap();
        for j in 0..3 {
            assert_eq!(m.measure(0, j).atoms(), &[vec![0.0], vec![1.0]]);
            assert_eq!(m.measure(0, j).weights(), &[0.5, 0.5]);
        }
        assert_eq!(x.increment(0, 2), &[1.0]);
    }

    #[test]
    fn endpoints_are_exact() {
        let (mu, xi) = (point(-1.0, 2), SingularControl::zero(2, 1));
        let q = point(1.0, 2);
        let eta = SingularControl::shared(vec![vec![0.3], vec![0.1]]).unwrap();
        let zero = PerturbationSpec {
            theta: 0.0,
            control: q.clone(),
            singular: eta.clone(),
        };
        assert_eq!(convex_combine((&mu, &xi), &zero).unwrap(), (mu.clone(), xi.clone()));
        let one = PerturbationSpec {
            theta: 1.0,
            control: q.clone(),
            singular: eta.clone(),
        };
        assert_eq!(convex_combine((&mu, &xi), &one).unwrap(), (q, eta));
    }

    #[test]
    fn theta_outside_unit_interval_rejected() {
        let q = point(1.0, 2);
        let eta = SingularControl::zero(2, 1);
        assert!(matches!(
            PerturbationSpec::new(1.5, q.clone(), eta.clone()),
            Err(Error::InvalidTheta(_))
        ));
        let bad = PerturbationSpec {
            theta: -0.1,
            control: q.clone(),
            singular: eta.clone(),
        };
        assert!(convex_combine((&q, &eta), &bad).is_err());
    }

    #[test]
    fn shared_base_with_per_path_direction() {
        let mu = point(0.0, 2);
        let xi = SingularControl::zero(2, 1);
        let q = RelaxedControl::per_path(vec![
            vec![Measure::dirac(vec![1.0]), Measure::dirac(vec![1.0])],
            vec![Measure::dirac(vec![-1.0]), Measure::dirac(vec![-1.0])],
        ])
        .unwrap();
        let dir = PerturbationSpec::new(0.25, q, xi.clone()).unwrap();
        let (m, _) = convex_combine((&mu, &xi), &dir).unwrap();
        assert_eq!(m.paths(), Some(2));
        assert_eq!(m.measure(1, 1).atoms(), &[vec![-1.0], vec![0.0]]);
        assert_eq!(m.measure(1, 1).weights(), &[0.25, 0.75]);
    }
}
