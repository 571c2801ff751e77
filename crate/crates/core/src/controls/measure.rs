//! Finite discrete probability measures on the control grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cmp_points, Scalar};

/// A probability measure `Σ wⱼ δ_{aⱼ}` with canonical (sorted, merged) atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile<S>", bound = "S: Scalar")]
pub struct Measure<S> {
    atoms: Vec<Vec<S>>,
    weights: Vec<S>,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct MeasureFile<S> {
    atoms: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> TryFrom<MeasureFile<S>> for Measure<S> {
    type Error = Error;
    fn try_from(f: MeasureFile<S>) -> Result<Self> {
        Measure::new(f.atoms, f.weights)
    }
}

impl<S: Scalar> Measure<S> {
    /// Builds a measure, merging repeated atoms and dropping zero weights.
    /// Weights must be finite, nonnegative and sum to one.
    pub fn new(atoms: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidControl(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidControl("measure has no atoms".into()));
        }
        let dim = atoms[0].len();
        let mut pairs = Vec::with_capacity(atoms.len());
        for (a, w) in atoms.into_iter().zip(weights) {
            if a.len() != dim {
                return Err(Error::InvalidControl("atoms of differing dimension".into()));
            }
            if !w.is_finite() || w < S::zero() {
                return Err(Error::InvalidControl(format!("weight {w} is not a probability")));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidControl("non-finite atom".into()));
            }
            if w > S::zero() {
                pairs.push((a, w));
            }
        }
        pairs.sort_by(|x, y| cmp_points(&x.0, &y.0));
        let mut merged: Vec<(Vec<S>, S)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 = last.1 + w,
                _ => merged.push((a, w)),
            }
        }
        let total: S = merged.iter().map(|p| p.1).sum();
        if merged.is_empty() || (total - S::one()).abs() > S::unit_tolerance() {
            return Err(Error::InvalidControl(format!("weights sum to {total}, not 1")));
        }
        let (atoms, weights) = merged.into_iter().unzip();
        Ok(Self { atoms, weights })
    }

    pub fn dirac(point: Vec<S>) -> Self {
        Self {
            atoms: vec![point],
            weights: vec![S::one()],
        }
    }

    pub fn atoms(&self) -> &[Vec<S>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[S], S)> {
        self.atoms.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// `Σⱼ wⱼ f(aⱼ)`; a non-finite value of `f` is reported with the offending atom.
    pub fn integrate<F>(&self, mut f: F) -> Result<S>
    where
        F: FnMut(&[S]) -> S,
    {
        let mut acc = S::zero();
        for (a, w) in self.iter() {
            let v = f(a);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    function: "integrand".into(),
                    input: format!("atom {a:?}"),
                });
            }
            acc = acc + w * v;
        }
        Ok(acc)
    }

    /// Vector-valued integral, written into `out`.
    pub fn integrate_into<F>(&self, out: &mut [S], mut f: F) -> Result<()>
    where
        F: FnMut(&[S], &mut [S]),
    {
        let mut buf = vec![S::zero(); out.len()];
        out.iter_mut().for_each(|o| *o = S::zero());
        for (a, w) in self.iter() {
            f(a, &mut buf);
            if let Some(v) = buf.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    function: "integrand".into(),
                    input: format!("atom {a:?} (value {v})"),
                });
            }
            for (o, &b) in out.iter_mut().zip(&buf) {
                *o = *o + w * b;
            }
        }
        Ok(())
    }

    /// `(1 − θ)·self + θ·other`, merged on shared atoms.
    pub(crate) fn mix(&self, other: &Self, theta: S) -> Self {
        let one_minus = S::one() - theta;
        let atoms = self.atoms.iter().chain(&other.atoms).cloned().collect();
        let weights = self
            .weights
            .iter()
            .map(|&w| one_minus * w)
            .chain(other.weights.iter().map(|&w| theta * w))
            .collect();
        Self::canonical(atoms, weights)
    }

    /// Equal-weight average of several measures.
    pub(crate) fn average<'a>(measures: impl IntoIterator<Item = &'a Self>) -> Self {
        let list: Vec<&Self> = measures.into_iter().collect();
        let scale = S::one() / S::from_count(list.len());
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for m in list {
            for (a, w) in m.iter() {
                atoms.push(a.to_vec());
                weights.push(w * scale);
            }
        }
        Self::canonical(atoms, weights)
    }

    /// Canonicalizes already-valid weights without re-checking the total.
    pub(crate) fn canonical(atoms: Vec<Vec<S>>, weights: Vec<S>) -> Self {
        let mut pairs: Vec<(Vec<S>, S)> = atoms.into_iter().zip(weights).filter(|p| p.1 > S::zero()).collect();
        pairs.sort_by(|x, y| cmp_points(&x.0, &y.0));
        let mut merged: Vec<(Vec<S>, S)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 = last.1 + w,
                _ => merged.push((a, w)),
            }
        }
        let (atoms, weights) = merged.into_iter().unzip();
        Self { atoms, weights }
    }
}

/// The control acting on one grid cell of one path: a point of U₁ or a measure on it.
#[derive(Debug, Clone, Copy)]
pub enum Action<'a, S> {
    Point(&'a [S]),
    Mixture(&'a Measure<S>),
}

impl<'a, S: Scalar> Action<'a, S> {
    /// Averages a vector-valued map over the action. Points and unit Diracs are
    /// evaluated directly, so a Dirac embedding reproduces strict evaluation bit for bit.
    #[inline]
    pub fn average_into<F>(&self, out: &mut [S], mut fill: F)
    where
        F: FnMut(&[S], &mut [S]),
    {
        match *self {
            Action::Point(a) => fill(a, out),
            Action::Mixture(m) if m.is_dirac() && m.weights[0] == S::one() => fill(&m.atoms[0], out),
            Action::Mixture(m) => {
                let mut buf = vec![S::zero(); out.len()];
                out.iter_mut().for_each(|o| *o = S::zero());
                for (a, w) in m.iter() {
                    fill(a, &mut buf);
                    for (o, &b) in out.iter_mut().zip(&buf) {
                        *o = *o + w * b;
                    }
                }
            }
        }
    }

    #[inline]
    pub fn average<F>(&self, mut f: F) -> S
    where
        F: FnMut(&[S]) -> S,
    {
        match *self {
            Action::Point(a) => f(a),
            Action::Mixture(m) if m.is_dirac() && m.weights[0] == S::one() => f(&m.atoms[0]),
            Action::Mixture(m) => m.iter().fold(S::zero(), |acc, (a, w)| acc + w * f(a)),
        }
    }
}
