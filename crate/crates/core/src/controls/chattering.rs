use std::ops::Range;

use super::{Cells, Measure, RelaxedControl, StrictControl};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest-remainder apportionment of `slots` among the weights. `None` if a
/// positive weight would get no slot.
fn apportion<S: Scalar>(weights: &[S], slots: usize) -> Option<Vec<usize>> {
    let total = S::from_count(slots);
    let quotas: Vec<f64> = weights.iter().map(|&w| (w * total).as_f64()).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // stable: ties go to the earlier (smaller) atom
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take(slots.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    // weights summing to slightly above one can overshoot by a slot
    let mut excess = counts.iter().sum::<usize>().saturating_sub(slots);
    for &i in order.iter().rev() {
        if excess == 0 {
            break;
        }
        if counts[i] > 1 {
            counts[i] -= 1;
            excess -= 1;
        }
    }
    if counts.contains(&0) {
        None
    } else {
        Some(counts)
    }
}

fn minimum_slots<S: Scalar>(weights: &[S], from: usize) -> usize {
    let mut n = from.max(weights.len());
    while apportion(weights, n).is_none() {
        n += 1;
    }
    n
}

/// Fills `slots` consecutive sub-steps with the atoms of `m` in canonical order.
fn fill_block<S: Scalar>(m: &Measure<S>, slots: usize, out: &mut Vec<Vec<S>>) -> Result<()> {
    let counts = apportion(m.weights(), slots).ok_or_else(|| Error::ChatteringTooCoarse {
        requested: slots,
        minimum: minimum_slots(m.weights(), slots + 1),
    })?;
    for (a, c) in m.atoms().iter().zip(counts) {
        out.extend(std::iter::repeat_n(a.clone(), c));
    }
    Ok(())
}

fn strict_from_blocks<S: Scalar>(
    q: &RelaxedControl<S>,
    blocks: impl Fn(usize) -> Result<Vec<Vec<S>>>,
) -> Result<StrictControl<S>> {
    let paths = q.paths();
    let data: Vec<Vec<Vec<S>>> = (0..paths.unwrap_or(1)).map(&blocks).collect::<Result<_>>()?;
    let steps = data[0].len();
    let cells = Cells {
        steps,
        paths,
        data: data.into_iter().flatten().collect(),
    };
    Ok(StrictControl { cells, dim: q.dim() })
}

/// Strict control on the grid refined `n` times: each base cell is split into
/// `n` sub-steps, handed out to its atoms in consecutive blocks whose lengths are
/// the largest-remainder apportionment of the weights.
pub fn chattering<S: Scalar>(q: &RelaxedControl<S>, n: usize) -> Result<StrictControl<S>> {
    if n == 0 {
        return Err(Error::ChatteringTooCoarse {
            requested: 0,
            minimum: 1,
        });
    }
    strict_from_blocks(q, |p| {
        let mut out = Vec::with_capacity(q.steps() * n);
        for j in 0..q.steps() {
            fill_block(q.measure(p, j), n, &mut out)?;
        }
        Ok(out)
    })
}

/// Strict control on the grid of `q` itself with `periods` chattering periods.
/// Each period averages the measures of its cells and apportions its sub-steps
/// among the atoms of the average. The cell count must be a multiple of `periods`.
pub fn chattering_periodic<S: Scalar>(q: &RelaxedControl<S>, periods: usize) -> Result<StrictControl<S>> {
    if periods == 0 || !q.steps().is_multiple_of(periods) {
        return Err(Error::InvalidControl(format!(
            "{periods} periods do not divide {} cells",
            q.steps()
        )));
    }
    let len = q.steps() / periods;
    strict_from_blocks(q, |p| {
        let mut out = Vec::with_capacity(q.steps());
        for k in 0..periods {
            let avg = Measure::average((k * len..(k + 1) * len).map(|j| q.measure(p, j)));
            fill_block(&avg, len, &mut out)?;
        }
        Ok(out)
    })
}

/// Empirical occupation measure of a strict control over a range of cells.
pub fn occupation_fractions<S: Scalar>(u: &StrictControl<S>, path: usize, cells: Range<usize>) -> Measure<S> {
    let count = S::from_count(cells.len());
    let atoms: Vec<Vec<S>> = cells.clone().map(|j| u.value(path, j).to_vec()).collect();
    let weights = vec![S::one() / count; atoms.len()];
    Measure::canonical(atoms, weights)
}
