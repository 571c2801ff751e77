use serde::{Deserialize, Serialize};

use super::hamiltonian::{argmin_index, HamiltonianEval, HamiltonianInputs};
use crate::adjoint::{AdjointMethod, AdjointPair};
use crate::controls::SingularControl;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::scalar::Scalar;
use crate::sde::{par_paths, ControlKind, ControlRef, TrajectoryEnsemble};
use crate::stats::Estimate;

/// Thresholds of the verifier. `tol_H` is relative: a point violates minimality
/// when its gap exceeds `tol_H·(1 + |𝓗|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    #[serde(rename = "tol_H")]
    pub tol_h: f64,
    #[serde(rename = "tol_S")]
    pub tol_s: f64,
    #[serde(rename = "tol_F")]
    pub tol_f: f64,
    /// Largest admissible fraction of (path, time) points violating minimality.
    pub max_violation_fraction: f64,
    /// Standard errors allowed below zero in the variational inequality.
    pub sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_h: 1e-3,
            tol_s: 1e-6,
            tol_f: 1e-9,
            max_violation_fraction: 0.01,
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionId {
    HamiltonianMinimality,
    Nonnegativity,
    FlatOff,
    VariationalInequality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub id: ConditionId,
    pub passed: bool,
    /// Violation fraction, minimum slack, flat-off mass or worst direction value.
    pub statistic: f64,
    pub threshold: f64,
    pub std_error: Option<f64>,
    /// Worst pointwise gap (minimality) or worst slack / mass location value.
    pub worst: Option<f64>,
    pub location: Option<String>,
    pub detail: String,
}

/// Value of the variational-inequality functional along one sampled direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRecord {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub problem: String,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub control: ControlKind,
    pub adjoint_method: AdjointMethod,
    pub regression_degree: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub conditions: Vec<ConditionRecord>,
    pub directions: Vec<DirectionRecord>,
    pub config: ReportConfig,
}

impl VerificationReport {
    pub fn condition(&self, id: ConditionId) -> &ConditionRecord {
        self.conditions
            .iter()
            .find(|c| c.id == id)
            .expect("every condition is recorded")
    }
}

struct PathStats<S> {
    violations: usize,
    worst_gap: (S, usize),
    abs_h: S,
    dirac: Vec<S>,
    argmin: S,
    min_slack: (S, usize, usize),
    flat: S,
    unit: Vec<S>,
    no_singular: S,
}

/// Cells whose unit singular increments are tried as directions.
fn probe_cells(steps: usize) -> Vec<usize> {
    let mut cells = vec![0, steps / 2, steps - 1];
    cells.dedup();
    cells
}

/// Checks pointwise Hamiltonian minimality, nonnegativity of `k + Gᵀp`, the
/// flat-off condition on `ξ` and the variational inequality over a finite
/// direction set: the pointwise argmin, every constant grid point, unit singular
/// increments at a few cells, and switching the singular part off.
pub fn verify_necessary<S: Scalar>(
    spec: &ProblemSpec<S>,
    candidate: (ControlRef<'_, S>, &SingularControl<S>),
    adjoint: &AdjointPair<S>,
    trajectory: &TrajectoryEnsemble<S>,
    tolerances: &Tolerances,
) -> Result<VerificationReport> {
    let grid = trajectory.grid();
    let (paths, steps) = (trajectory.paths(), grid.steps());
    if adjoint.paths() != paths || adjoint.steps() != steps {
        return Err(Error::InvalidProblem("adjoint does not match the trajectory".into()));
    }
    candidate.0.check(spec, steps, paths)?;
    candidate.1.check(spec, steps, paths)?;
    if adjoint.big_p().is_none() && spec.coefficients().diffusion.iter().flatten().any(|e| e.uses_a()) {
        return Err(Error::InvalidProblem(
            "the diffusion depends on the control, so the adjoint needs its P component".into(),
        ));
    }
    let dims = spec.dims();
    let (n, m) = (dims.n, dims.m);
    let u1 = spec.u1_grid();
    let dt = grid.dt();
    let tol_h = S::lit(tolerances.tol_h);
    let tol_s = S::lit(tolerances.tol_s);
    let cells = probe_cells(steps);

    let stats = par_paths(paths, |path| {
        let mut eval = HamiltonianEval::new(spec);
        let mut values = vec![S::zero(); u1.len()];
        let mut st = PathStats {
            violations: 0,
            worst_gap: (S::neg_infinity(), 0),
            abs_h: S::zero(),
            dirac: vec![S::zero(); u1.len()],
            argmin: S::zero(),
            min_slack: (S::infinity(), 0, 0),
            flat: S::zero(),
            unit: vec![S::zero(); cells.len() * m],
            no_singular: S::zero(),
        };
        for j in 0..steps {
            let inp = HamiltonianInputs {
                t: grid.t(j),
                x: trajectory.state(path, j),
                p: adjoint.p_at(path, j),
                big_p: adjoint.big_p_at(path, j).unwrap_or(&[]),
            };
            let h = eval.action(&inp, candidate.0.action(path, j));
            eval.grid_values(&inp, &mut values);
            let min = values[argmin_index(u1, &values)];
            let gap = h - min;
            if gap > tol_h * (S::one() + h.abs()) {
                st.violations += 1;
            }
            if gap > st.worst_gap.0 {
                st.worst_gap = (gap, j);
            }
            st.abs_h = st.abs_h + h.abs();
            for (acc, &v) in st.dirac.iter_mut().zip(&values) {
                *acc = *acc + (v - h) * dt;
            }
            st.argmin = st.argmin + (min - h) * dt;
        }
        let mut gain = vec![S::zero(); n * m];
        let mut k = vec![S::zero(); m];
        for j in 0..=steps {
            let t = grid.t(j);
            spec.singular_gain(t, &mut gain);
            spec.singular_cost(t, &mut k);
            let p = adjoint.p_at(path, j);
            for r in 0..m {
                let slack = (0..n).fold(k[r], |s, i| s + gain[i * m + r] * p[i]);
                if slack < st.min_slack.0 {
                    st.min_slack = (slack, j, r);
                }
                if j < steps {
                    let dxi = candidate.1.increment(path, j)[r];
                    if slack > tol_s {
                        st.flat = st.flat + dxi;
                    }
                    st.no_singular = st.no_singular - slack * dxi;
                    if let Some(c) = cells.iter().position(|&c| c == j) {
                        st.unit[c * m + r] = slack;
                    }
                }
            }
        }
        Ok(st)
    })?;

    let points = (paths * steps) as f64;
    let violations: usize = stats.iter().map(|s| s.violations).sum();
    let fraction = violations as f64 / points;
    let (worst_path, worst) = stats.iter().enumerate().fold((0, &stats[0]), |best, (i, s)| {
        if s.worst_gap.0 > best.1.worst_gap.0 {
            (i, s)
        } else {
            best
        }
    });
    let mut conditions = vec![ConditionRecord {
        id: ConditionId::HamiltonianMinimality,
        passed: fraction <= tolerances.max_violation_fraction,
        statistic: fraction,
        threshold: tolerances.max_violation_fraction,
        std_error: None,
        worst: Some(worst.worst_gap.0.as_f64()),
        location: Some(format!("path {worst_path}, step {}", worst.worst_gap.1)),
        detail: format!(
            "{violations} of {} points exceed tol_H·(1 + |H|) with tol_H = {}",
            paths * steps,
            tolerances.tol_h
        ),
    }];

    let (slack_path, slack) = stats.iter().enumerate().fold((0, &stats[0]), |best, (i, s)| {
        if s.min_slack.0 < best.1.min_slack.0 {
            (i, s)
        } else {
            best
        }
    });
    let min_slack = if m == 0 { 0.0 } else { slack.min_slack.0.as_f64() };
    conditions.push(ConditionRecord {
        id: ConditionId::Nonnegativity,
        passed: min_slack >= -tolerances.tol_s,
        statistic: min_slack,
        threshold: -tolerances.tol_s,
        std_error: None,
        worst: Some(min_slack),
        location: Some(format!(
            "path {slack_path}, step {}, component {}",
            slack.min_slack.1, slack.min_slack.2
        )),
        detail: "minimum of k_i(t) + G_i(t)·p_t over paths, knots and components".into(),
    });

    let (flat_path, flat) =
        stats.iter().enumerate().fold(
            (0, &stats[0]),
            |best, (i, s)| if s.flat > best.1.flat { (i, s) } else { best },
        );
    conditions.push(ConditionRecord {
        id: ConditionId::FlatOff,
        passed: flat.flat.as_f64() <= tolerances.tol_f,
        statistic: flat.flat.as_f64(),
        threshold: tolerances.tol_f,
        std_error: None,
        worst: Some(flat.flat.as_f64()),
        location: Some(format!("path {flat_path}")),
        detail: format!(
            "largest per-path singular mass placed where the slack exceeds tol_S = {}",
            tolerances.tol_s
        ),
    });

    // variational inequality over the sampled directions
    let mean_abs_h = stats.iter().map(|s| s.abs_h.as_f64()).sum::<f64>() / points;
    let allowance = tolerances.tol_h * grid.horizon().as_f64() * (1.0 + mean_abs_h);
    let mut directions = Vec::new();
    let mut push = |name: String, samples: Vec<S>| {
        let e = Estimate::from_samples(&samples);
        let (value, se) = (e.mean.as_f64(), e.std_error.as_f64());
        let threshold = -(tolerances.sigmas * se + allowance);
        directions.push(DirectionRecord {
            name,
            value,
            std_error: se,
            threshold,
            passed: value >= threshold,
        });
    };
    push("argmin".into(), stats.iter().map(|s| s.argmin).collect());
    for (i, a) in u1.iter().enumerate() {
        push(format!("dirac:{a:?}"), stats.iter().map(|s| s.dirac[i]).collect());
    }
    for (c, &cell) in cells.iter().enumerate() {
        for r in 0..m {
            push(
                format!("unit-increment:{r}@{cell}"),
                stats.iter().map(|s| s.unit[c * m + r]).collect(),
            );
        }
    }
    push("no-singular".into(), stats.iter().map(|s| s.no_singular).collect());
    let worst_dir = directions
        .iter()
        .min_by(|a, b| (a.value - a.threshold).total_cmp(&(b.value - b.threshold)))
        .expect("direction set is never empty");
    conditions.push(ConditionRecord {
        id: ConditionId::VariationalInequality,
        passed: directions.iter().all(|d| d.passed),
        statistic: worst_dir.value,
        threshold: worst_dir.threshold,
        std_error: Some(worst_dir.std_error),
        worst: Some(worst_dir.value),
        location: Some(worst_dir.name.clone()),
        detail: format!(
            "{} sampled directions; the listed one has the smallest margin",
            directions.len()
        ),
    });

    Ok(VerificationReport {
        passed: conditions.iter().all(|c| c.passed),
        conditions,
        directions,
        config: ReportConfig {
            problem: spec.name().to_string(),
            steps,
            paths,
            seed: trajectory.seed(),
            control: candidate.0.kind(),
            adjoint_method: adjoint.method(),
            regression_degree: adjoint.diagnostics().degree,
            tolerances: *tolerances,
        },
    })
}
