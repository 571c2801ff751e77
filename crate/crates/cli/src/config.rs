//! Run configuration: parsing, overrides and resolution into core objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use singular_pmp::adjoint::{AdjointMethod, RegressionConfig};
use singular_pmp::controls::{Measure, RelaxedControl, SingularControl, StrictControl};
use singular_pmp::model::{builtin_problem, ProblemSpec};
use singular_pmp::pmp::{ConvexityOptions, Tolerances};

use crate::CliError;

/// A built-in problem name or a JSON problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Builtin(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: usize,
    /// Mandatory once overrides are applied; there is no clock-based default.
    pub seed: Option<u64>,
}

/// A control given by name (`half_half`, `dirac:<v>`, `constant:<v>`,
/// `example1_vn:<n>`) or a JSON file holding `{"strict": …}` or `{"relaxed": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSource {
    Named(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub cell: usize,
    pub amount: f64,
    #[serde(default)]
    pub component: usize,
}

/// `"zero"`, a single injected increment, or a JSON file of increments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularSource {
    #[default]
    Zero,
    Inject(Injection),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    pub control: ControlSource,
    #[serde(default)]
    pub singular: SingularSource,
}

/// Chattering approximations `uⁿ` of `target` repeat its occupation `n` times
/// over `[0, T]` on the target's own grid, so every `n` must divide `grid.steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatterConfig {
    pub target: ControlSource,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjointConfig {
    pub method: AdjointMethod,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        Self {
            method: AdjointMethod::BsdeRegression,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Midpoint-probe pairs per convexity check.
    pub pairs: usize,
    pub seed: u64,
    /// Random competitors costed against a certified candidate.
    pub competitors: usize,
    pub competitor_seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let c = ConvexityOptions::default();
        Self {
            pairs: c.pairs,
            seed: c.seed,
            competitors: 200,
            competitor_seed: 2024,
        }
    }
}

impl CertifyConfig {
    pub fn convexity(&self) -> ConvexityOptions {
        ConvexityOptions {
            pairs: self.pairs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub grid: GridConfig,
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub candidate: Option<CandidateConfig>,
    #[serde(default)]
    pub chatter: Option<ChatterConfig>,
    #[serde(default)]
    pub adjoint: AdjointConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
}

/// A candidate after resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Strict(StrictControl<f64>),
    Relaxed(RelaxedControl<f64>),
}

impl Control {
    pub fn as_ref(&self) -> singular_pmp::sde::ControlRef<'_, f64> {
        match self {
            Control::Strict(u) => singular_pmp::sde::ControlRef::Strict(u),
            Control::Relaxed(q) => singular_pmp::sde::ControlRef::Relaxed(q),
        }
    }

    pub fn to_relaxed(&self) -> RelaxedControl<f64> {
        self.as_ref().to_relaxed()
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ControlFile {
    Strict(StrictControl<f64>),
    Relaxed(RelaxedControl<f64>),
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    /// Parses a config file; relative file references are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::from_json(&read(path)?)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_error(format!("malformed config: {e}")))
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let ProblemSource::File { file } = &mut self.problem {
            fix(file);
        }
        if let Some(c) = &mut self.candidate {
            if let ControlSource::File { file } = &mut c.control {
                fix(file);
            }
            if let SingularSource::File(file) = &mut c.singular {
                fix(file);
            }
        }
        if let Some(ControlSource::File { file }) = self.chatter.as_mut().map(|c| &mut c.target) {
            fix(file);
        }
    }

    /// Applies overrides and checks that every numeric field is positive and a seed is present.
    pub fn resolve(mut self, overrides: Overrides) -> Result<Self, CliError> {
        if let Some(seed) = overrides.seed {
            self.monte_carlo.seed = Some(seed);
        }
        if let Some(paths) = overrides.paths {
            self.monte_carlo.paths = paths;
        }
        if let Some(steps) = overrides.steps {
            self.grid.steps = steps;
        }
        if self.monte_carlo.seed.is_none() {
            return Err(config_error("monte_carlo.seed is required (or pass --seed)"));
        }
        if self.grid.steps == 0 || self.monte_carlo.paths == 0 {
            return Err(config_error("grid.steps and monte_carlo.paths must be positive"));
        }
        let t = &self.tolerances;
        let tols = [t.tol_h, t.tol_s, t.tol_f, t.max_violation_fraction, t.sigmas];
        if tols.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_error("tolerances must be positive"));
        }
        if let Some(c) = &self.chatter {
            if c.n.is_empty() || c.n.contains(&0) {
                return Err(config_error("chatter.n must be a nonempty list of positive integers"));
            }
        }
        if self.certify.pairs == 0 {
            return Err(config_error("certify.pairs must be positive"));
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.monte_carlo.seed.expect("resolved configs carry a seed")
    }

    pub fn problem(&self) -> Result<ProblemSpec<f64>, CliError> {
        match &self.problem {
            ProblemSource::Builtin(name) => builtin_problem(name).map_err(|e| config_error(e.to_string())),
            ProblemSource::File { file } => {
                ProblemSpec::from_json(&read(file)?).map_err(|e| config_error(format!("{}: {e}", file.display())))
            }
        }
    }

    pub fn candidate(&self) -> Result<&CandidateConfig, CliError> {
        self.candidate
            .as_ref()
            .ok_or_else(|| config_error("this command needs a `candidate` section"))
    }

    pub fn chatter(&self) -> Result<&ChatterConfig, CliError> {
        self.chatter
            .as_ref()
            .ok_or_else(|| config_error("this command needs a `chatter` section"))
    }
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("`{text}` is not a point")))
        })
        .collect::<Result<_, _>>()?;
    if v.len() != dim {
        return Err(config_error(format!(
            "`{text}` has {} components, the control has {dim}",
            v.len()
        )));
    }
    Ok(v)
}

/// `+1` on `[kT/n, (k+1)T/n)` for even `k`, `−1` for odd `k`, sampled at the left knots.
pub fn example1_vn(n: usize, steps: usize) -> Result<StrictControl<f64>, CliError> {
    if n == 0 {
        return Err(config_error("example1_vn needs n > 0"));
    }
    let cells = (0..steps)
        .map(|j| {
            if (j * n / steps).is_multiple_of(2) {
                vec![1.0]
            } else {
                vec![-1.0]
            }
        })
        .collect();
    StrictControl::shared(cells).map_err(|e| config_error(e.to_string()))
}

pub fn resolve_control(source: &ControlSource, spec: &ProblemSpec<f64>, steps: usize) -> Result<Control, CliError> {
    let k = spec.dims().k;
    let invalid = |e: singular_pmp::Error| config_error(e.to_string());
    let control = match source {
        ControlSource::File { file } => {
            match serde_json::from_str(&read(file)?).map_err(|e| config_error(format!("{}: {e}", file.display())))? {
                ControlFile::Strict(u) => Control::Strict(u),
                ControlFile::Relaxed(q) => Control::Relaxed(q),
            }
        }
        ControlSource::Named(name) => {
            let (head, arg) = name.split_once(':').unwrap_or((name.as_str(), ""));
            match head {
                "half_half" if k == 1 => {
                    let m = Measure::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).map_err(invalid)?;
                    Control::Relaxed(RelaxedControl::constant(m, steps).map_err(invalid)?)
                }
                "dirac" => {
                    let m = Measure::dirac(parse_point(arg, k)?);
                    Control::Relaxed(RelaxedControl::constant(m, steps).map_err(invalid)?)
                }
                "constant" => Control::Strict(StrictControl::constant(parse_point(arg, k)?, steps).map_err(invalid)?),
                "example1_vn" if k == 1 => {
                    let n = arg.parse().map_err(|_| config_error(format!("`{name}` needs an integer n")))?;
                    Control::Strict(example1_vn(n, steps)?)
                }
                _ => {
                    return Err(config_error(format!(
                        "unknown candidate `{name}`; expected half_half, dirac:<v>, constant:<v>, example1_vn:<n> or {{\"file\": …}}"
                    )))
                }
            }
        }
    };
    Ok(control)
}

pub fn resolve_singular(
    source: &SingularSource,
    spec: &ProblemSpec<f64>,
    steps: usize,
) -> Result<SingularControl<f64>, CliError> {
    let m = spec.dims().m;
    match source {
        SingularSource::Zero => Ok(SingularControl::zero(steps, m)),
        SingularSource::Inject(inj) => {
            if inj.cell >= steps || inj.component >= m {
                return Err(config_error(format!(
                    "injection at cell {} component {} is out of range",
                    inj.cell, inj.component
                )));
            }
            let mut cells = vec![vec![0.0; m]; steps];
            cells[inj.cell][inj.component] = inj.amount;
            SingularControl::shared(cells).map_err(|e| config_error(e.to_string()))
        }
        SingularSource::File(file) => {
            serde_json::from_str(&read(file)?).map_err(|e| config_error(format!("{}: {e}", file.display())))
        }
    }
}
