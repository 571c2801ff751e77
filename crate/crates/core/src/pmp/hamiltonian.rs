use crate::controls::{Action, Measure};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::scalar::{cmp_points, Scalar};

/// Arguments of `H(t, x, ·, p, P)` other than the control. `big_p` is row-major
/// `n×d`; an empty slice stands for `P = 0`.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianInputs<'a, S> {
    pub t: S,
    pub x: &'a [S],
    pub p: &'a [S],
    pub big_p: &'a [S],
}

impl<S: Scalar> HamiltonianInputs<'_, S> {
    fn check(&self, spec: &ProblemSpec<S>) -> Result<()> {
        let dims = spec.dims();
        let bad = |what: &str, expected, found| {
            Err(Error::Dimension {
                what: what.into(),
                expected,
                found,
            })
        };
        if self.x.len() != dims.n {
            return bad("x", dims.n, self.x.len());
        }
        if self.p.len() != dims.n {
            return bad("p", dims.n, self.p.len());
        }
        if !self.big_p.is_empty() && self.big_p.len() != dims.n * dims.d {
            return bad("P", dims.n * dims.d, self.big_p.len());
        }
        Ok(())
    }
}

/// Evaluates `h + b·p + σ:P` with reusable buffers.
pub(crate) struct HamiltonianEval<'s, S> {
    spec: &'s ProblemSpec<S>,
    b: Vec<S>,
    sig: Vec<S>,
}

impl<'s, S: Scalar> HamiltonianEval<'s, S> {
    pub(crate) fn new(spec: &'s ProblemSpec<S>) -> Self {
        let dims = spec.dims();
        Self {
            spec,
            b: vec![S::zero(); dims.n],
            sig: vec![S::zero(); dims.n * dims.d],
        }
    }

    pub(crate) fn point(&mut self, inp: &HamiltonianInputs<'_, S>, a: &[S]) -> S {
        let spec = self.spec;
        let pt = Action::Point(a);
        let mut h = spec.running_cost(inp.t, inp.x, pt);
        spec.drift(inp.t, inp.x, pt, &mut self.b);
        for (b, p) in self.b.iter().zip(inp.p) {
            h = h + *b * *p;
        }
        if !inp.big_p.is_empty() {
            spec.diffusion(inp.t, inp.x, pt, &mut self.sig);
            for (s, pp) in self.sig.iter().zip(inp.big_p) {
                h = h + *s * *pp;
            }
        }
        h
    }

    pub(crate) fn action(&mut self, inp: &HamiltonianInputs<'_, S>, action: Action<'_, S>) -> S {
        action.average(|a| self.point(inp, a))
    }

    /// Values at every U₁ grid point, in grid order.
    pub(crate) fn grid_values(&mut self, inp: &HamiltonianInputs<'_, S>, out: &mut [S]) {
        let grid = self.spec.u1_grid();
        for (o, a) in out.iter_mut().zip(grid) {
            *o = self.point(inp, a);
        }
    }
}

/// Index of the smallest value; ties go to the lexicographically smallest point.
pub(crate) fn argmin_index<S: Scalar>(grid: &[Vec<S>], values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] || (v == values[best] && cmp_points(&grid[i], &grid[best]).is_lt()) {
            best = i;
        }
    }
    best
}

/// `H(t, x, v, p, P) = h(t, x, v) + b(t, x, v)·p + σ(t, x, v):P`.
pub fn hamiltonian_strict<S: Scalar>(spec: &ProblemSpec<S>, inputs: &HamiltonianInputs<'_, S>, v: &[S]) -> Result<S> {
    inputs.check(spec)?;
    if v.len() != spec.dims().k {
        return Err(Error::Dimension {
            what: "v".into(),
            expected: spec.dims().k,
            found: v.len(),
        });
    }
    Ok(HamiltonianEval::new(spec).point(inputs, v))
}

/// `𝓗(t, x, q, p, P) = ∫ H(t, x, a, p, P) q(da)`, affine in the weights of `q`.
pub fn hamiltonian_relaxed<S: Scalar>(
    spec: &ProblemSpec<S>,
    inputs: &HamiltonianInputs<'_, S>,
    q: &Measure<S>,
) -> Result<S> {
    inputs.check(spec)?;
    if q.dim() != spec.dims().k {
        return Err(Error::Dimension {
            what: "q atoms".into(),
            expected: spec.dims().k,
            found: q.dim(),
        });
    }
    Ok(HamiltonianEval::new(spec).action(inputs, Action::Mixture(q)))
}

/// Exhaustive minimum over the U₁ grid. Since `𝓗` is affine in the measure,
/// this is also the infimum over all measures on the grid.
pub fn minimize_hamiltonian<S: Scalar>(
    spec: &ProblemSpec<S>,
    inputs: &HamiltonianInputs<'_, S>,
) -> Result<(Vec<S>, S)> {
    inputs.check(spec)?;
    let grid = spec.u1_grid();
    let mut values = vec![S::zero(); grid.len()];
    HamiltonianEval::new(spec).grid_values(inputs, &mut values);
    let best = argmin_index(grid, &values);
    Ok((grid[best].clone(), values[best]))
}
