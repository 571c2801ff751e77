//! Strict, relaxed and singular controls on a time grid, their convex
//! perturbations, and the chattering approximation of relaxed controls.

mod chattering;
mod measure;
mod perturb;

pub use chattering::{chattering, chattering_periodic, occupation_fractions};
pub use measure::{Action, Measure};
pub use perturb::{convex_combine, PerturbationSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::scalar::Scalar;

/// Per-cell values, either shared by every path or given separately per path.
#[derive(Debug, Clone, PartialEq)]
pub struct Cells<T> {
    steps: usize,
    paths: Option<usize>,
    data: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CellsFile<T> {
    Shared { cells: Vec<T> },
    PerPath { paths: Vec<Vec<T>> },
}

impl<T> Cells<T> {
    fn shared(cells: Vec<T>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidControl("control has no cells".into()));
        }
        Ok(Self {
            steps: cells.len(),
            paths: None,
            data: cells,
        })
    }

    fn per_path(paths: Vec<Vec<T>>) -> Result<Self> {
        let steps = paths.first().map_or(0, Vec::len);
        if steps == 0 {
            return Err(Error::InvalidControl("control has no cells".into()));
        }
        if paths.iter().any(|p| p.len() != steps) {
            return Err(Error::InvalidControl("paths have differing cell counts".into()));
        }
        let count = paths.len();
        Ok(Self {
            steps,
            paths: Some(count),
            data: paths.into_iter().flatten().collect(),
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `None` when one sequence of cells is shared by all paths.
    pub fn paths(&self) -> Option<usize> {
        self.paths
    }

    #[inline]
    pub fn get(&self, path: usize, step: usize) -> &T {
        match self.paths {
            None => &self.data[step],
            Some(_) => &self.data[path * self.steps + step],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    fn map<U>(&self, f: impl FnMut(&T) -> U) -> Cells<U> {
        Cells {
            steps: self.steps,
            paths: self.paths,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn check_paths(&self, paths: usize) -> Result<()> {
        match self.paths {
            Some(p) if p != paths => Err(Error::InvalidControl(format!(
                "control has {p} paths, ensemble has {paths}"
            ))),
            _ => Ok(()),
        }
    }
}

impl<T: Serialize + Clone> Serialize for Cells<T> {
    fn serialize<Z: serde::Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let file = match self.paths {
            None => CellsFile::Shared {
                cells: self.data.clone(),
            },
            Some(_) => CellsFile::PerPath {
                paths: self.data.chunks(self.steps).map(<[T]>::to_vec).collect(),
            },
        };
        file.serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Cells<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let built = match CellsFile::deserialize(d)? {
            CellsFile::Shared { cells } => Cells::shared(cells),
            CellsFile::PerPath { paths } => Cells::per_path(paths),
        };
        built.map_err(serde::de::Error::custom)
    }
}

fn check_point<S: Scalar>(v: &[S], dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::InvalidControl(format!(
            "{what} of dimension {} where {dim} is required",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidControl(format!("non-finite {what} {v:?}")));
    }
    Ok(())
}

/// A U₁-valued control `v`, one point per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Cells<Vec<S>>", into = "Cells<Vec<S>>", bound = "S: Scalar")]
pub struct StrictControl<S> {
    cells: Cells<Vec<S>>,
    dim: usize,
}

impl<S: Scalar> TryFrom<Cells<Vec<S>>> for StrictControl<S> {
    type Error = Error;
    fn try_from(cells: Cells<Vec<S>>) -> Result<Self> {
        let dim = cells.data[0].len();
        for v in cells.iter() {
            check_point(v, dim, "control value")?;
        }
        Ok(Self { cells, dim })
    }
}

impl<S: Scalar> From<StrictControl<S>> for Cells<Vec<S>> {
    fn from(c: StrictControl<S>) -> Self {
        c.cells
    }
}

impl<S: Scalar> StrictControl<S> {
    pub fn shared(cells: Vec<Vec<S>>) -> Result<Self> {
        Cells::shared(cells)?.try_into()
    }

    pub fn per_path(paths: Vec<Vec<Vec<S>>>) -> Result<Self> {
        Cells::per_path(paths)?.try_into()
    }

    pub fn constant(value: Vec<S>, steps: usize) -> Result<Self> {
        Self::shared(vec![value; steps])
    }

    pub fn steps(&self) -> usize {
        self.cells.steps()
    }

    pub fn paths(&self) -> Option<usize> {
        self.cells.paths()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self, path: usize, step: usize) -> &[S] {
        self.cells.get(path, step)
    }

    pub fn cells(&self) -> &Cells<Vec<S>> {
        &self.cells
    }

    /// Every value must lie on the problem's U₁ grid.
    pub fn check(&self, spec: &ProblemSpec<S>, steps: usize, paths: usize) -> Result<()> {
        check_shape(self.steps(), steps, self.dim, spec.dims().k, "strict control")?;
        self.cells.check_paths(paths)?;
        if let Some(v) = self.cells.iter().find(|v| !spec.in_u1(v)) {
            return Err(Error::InvalidControl(format!("value {v:?} is not on the U1 grid")));
        }
        Ok(())
    }
}

fn check_shape(steps: usize, want_steps: usize, dim: usize, want_dim: usize, what: &str) -> Result<()> {
    if steps != want_steps {
        return Err(Error::InvalidControl(format!(
            "{what} has {steps} cells, grid has {want_steps}"
        )));
    }
    if dim != want_dim {
        return Err(Error::InvalidControl(format!(
            "{what} has dimension {dim}, problem needs {want_dim}"
        )));
    }
    Ok(())
}

/// A measure-valued control `q`: one probability measure on U₁ per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Cells<Measure<S>>", into = "Cells<Measure<S>>", bound = "S: Scalar")]
pub struct RelaxedControl<S> {
    cells: Cells<Measure<S>>,
    dim: usize,
}

impl<S: Scalar> TryFrom<Cells<Measure<S>>> for RelaxedControl<S> {
    type Error = Error;
    fn try_from(cells: Cells<Measure<S>>) -> Result<Self> {
        let dim = cells.data[0].dim();
        if cells.iter().any(|m| m.dim() != dim) {
            return Err(Error::InvalidControl("measures of differing dimension".into()));
        }
        Ok(Self { cells, dim })
    }
}

impl<S: Scalar> From<RelaxedControl<S>> for Cells<Measure<S>> {
    fn from(c: RelaxedControl<S>) -> Self {
        c.cells
    }
}

impl<S: Scalar> RelaxedControl<S> {
    pub fn shared(cells: Vec<Measure<S>>) -> Result<Self> {
        Cells::shared(cells)?.try_into()
    }

    pub fn per_path(paths: Vec<Vec<Measure<S>>>) -> Result<Self> {
        Cells::per_path(paths)?.try_into()
    }

    pub fn constant(measure: Measure<S>, steps: usize) -> Result<Self> {
        Self::shared(vec![measure; steps])
    }

    /// Each cell becomes the unit point mass at the strict value.
    pub fn dirac_embed(v: &StrictControl<S>) -> Self {
        Self {
            cells: v.cells.map(|a| Measure::dirac(a.clone())),
            dim: v.dim,
        }
    }

    pub fn steps(&self) -> usize {
        self.cells.steps()
    }

    pub fn paths(&self) -> Option<usize> {
        self.cells.paths()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn measure(&self, path: usize, step: usize) -> &Measure<S> {
        self.cells.get(path, step)
    }

    pub fn cells(&self) -> &Cells<Measure<S>> {
        &self.cells
    }

    /// Every atom must lie on the problem's U₁ grid.
    pub fn check(&self, spec: &ProblemSpec<S>, steps: usize, paths: usize) -> Result<()> {
        check_shape(self.steps(), steps, self.dim, spec.dims().k, "relaxed control")?;
        self.cells.check_paths(paths)?;
        for m in self.cells.iter() {
            if let Some(a) = m.atoms().iter().find(|a| !spec.in_u1(a)) {
                return Err(Error::InvalidControl(format!("atom {a:?} is not on the U1 grid")));
            }
        }
        Ok(())
    }
}

/// Increments `Δηⱼ ≥ 0` of a nondecreasing process with `η₀ = 0`; increment `j`
/// belongs to the cell `(tⱼ, tⱼ₊₁]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Cells<Vec<S>>", into = "Cells<Vec<S>>", bound = "S: Scalar")]
pub struct SingularControl<S> {
    cells: Cells<Vec<S>>,
    dim: usize,
}

impl<S: Scalar> TryFrom<Cells<Vec<S>>> for SingularControl<S> {
    type Error = Error;
    fn try_from(cells: Cells<Vec<S>>) -> Result<Self> {
        let dim = cells.data[0].len();
        for v in cells.iter() {
            check_point(v, dim, "singular increment")?;
            if v.iter().any(|x| *x < S::zero()) {
                return Err(Error::InvalidControl(format!("negative singular increment {v:?}")));
            }
        }
        Ok(Self { cells, dim })
    }
}

impl<S: Scalar> From<SingularControl<S>> for Cells<Vec<S>> {
    fn from(c: SingularControl<S>) -> Self {
        c.cells
    }
}

impl<S: Scalar> SingularControl<S> {
    pub fn zero(steps: usize, dim: usize) -> Self {
        Self {
            cells: Cells {
                steps,
                paths: None,
                data: vec![vec![S::zero(); dim]; steps],
            },
            dim,
        }
    }

    pub fn shared(cells: Vec<Vec<S>>) -> Result<Self> {
        Cells::shared(cells)?.try_into()
    }

    pub fn per_path(paths: Vec<Vec<Vec<S>>>) -> Result<Self> {
        Cells::per_path(paths)?.try_into()
    }

    pub fn steps(&self) -> usize {
        self.cells.steps()
    }

    pub fn paths(&self) -> Option<usize> {
        self.cells.paths()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn increment(&self, path: usize, step: usize) -> &[S] {
        self.cells.get(path, step)
    }

    /// `η_{tⱼ}` as the left-limit partial sum of the increments before cell `j`.
    pub fn cumulative(&self, path: usize, step: usize) -> Vec<S> {
        let mut eta = vec![S::zero(); self.dim];
        for j in 0..step {
            for (e, &d) in eta.iter_mut().zip(self.increment(path, j)) {
                *e = *e + d;
            }
        }
        eta
    }

    pub fn cells(&self) -> &Cells<Vec<S>> {
        &self.cells
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|v| v.iter().all(|x| *x == S::zero()))
    }

    pub fn check(&self, spec: &ProblemSpec<S>, steps: usize, paths: usize) -> Result<()> {
        check_shape(self.steps(), steps, self.dim, spec.dims().m, "singular control")?;
        self.cells.check_paths(paths)
    }
}
