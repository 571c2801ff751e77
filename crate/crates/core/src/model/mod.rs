//! Control problems: dimensions, coefficient sets, the control grid and
//! assumption probes, plus the built-in worked examples.

mod builtin;
mod expr;
mod grid;
mod validate;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin_problem, singular_block, BUILTIN_NAMES};
pub use expr::{Expr, Monomial};
pub use grid::{NoiseBatch, TimeGrid};
pub use validate::{validate_problem, AssumptionCheck, ValidationReport};

use crate::controls::Action;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// state
    pub n: usize,
    /// Brownian motion
    pub d: usize,
    /// absolutely continuous control
    pub k: usize,
    /// singular control
    pub m: usize,
}

/// Coefficients of the controlled equation and the cost, each entry an [`Expr`]
/// in `(t, x, a)`. State gradients are declared, not derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Coefficients<S> {
    /// `b`, length n
    pub drift: Vec<Expr<S>>,
    /// `σ`, n rows × d columns
    pub diffusion: Vec<Vec<Expr<S>>>,
    /// `G(t)`, n rows × m columns
    pub singular_gain: Vec<Vec<Expr<S>>>,
    /// `h`
    pub running_cost: Expr<S>,
    /// `g`
    pub terminal_cost: Expr<S>,
    /// `k(t)`, length m
    pub singular_cost: Vec<Expr<S>>,
    /// `∂bᵢ/∂xⱼ` as `[i][j]`
    pub drift_x: Vec<Vec<Expr<S>>>,
    /// `∂σᵢₗ/∂xⱼ` as `[l][i][j]`
    pub diffusion_x: Vec<Vec<Vec<Expr<S>>>>,
    pub running_cost_x: Vec<Expr<S>>,
    pub terminal_cost_x: Vec<Expr<S>>,
}

/// Region sampled by the assumption probes and the bounds they are held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", default)]
pub struct AssumptionsBox<S> {
    pub x_min: S,
    pub x_max: S,
    pub probes: usize,
    pub seed: u64,
    /// bound on `|b_x|, |σ_x|, |h_x|, |g_x|`
    pub gradient_bound: S,
    /// `C` in `|b| + |σ| ≤ C(1 + |x| + |a|)`
    pub growth_bound: S,
    /// bound on `|b|, |σ|, |h|, |G|` over the box
    pub coefficient_bound: S,
}

impl<S: Scalar> Default for AssumptionsBox<S> {
    fn default() -> Self {
        Self {
            x_min: S::lit(-5.0),
            x_max: S::lit(5.0),
            probes: 200,
            seed: 7,
            gradient_bound: S::lit(1e4),
            growth_bound: S::lit(1e3),
            coefficient_bound: S::lit(1e4),
        }
    }
}

/// Convexity the problem author vouches for; anything not declared is probed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeclaredConvexity {
    pub terminal_cost: bool,
    pub hamiltonian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemFile<S>", bound = "S: Scalar")]
pub struct ProblemSpec<S> {
    name: String,
    dims: Dims,
    horizon: S,
    x0: Vec<S>,
    coefficients: Coefficients<S>,
    u1_grid: Vec<Vec<S>>,
    assumptions_box: AssumptionsBox<S>,
    #[serde(default)]
    declared_convex: DeclaredConvexity,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct ProblemFile<S> {
    name: String,
    dims: Dims,
    horizon: S,
    x0: Vec<S>,
    coefficients: Coefficients<S>,
    u1_grid: Vec<Vec<S>>,
    #[serde(default)]
    assumptions_box: AssumptionsBox<S>,
    #[serde(default)]
    declared_convex: DeclaredConvexity,
}

impl<S: Scalar> TryFrom<ProblemFile<S>> for ProblemSpec<S> {
    type Error = Error;
    fn try_from(f: ProblemFile<S>) -> Result<Self> {
        ProblemSpec::new(
            f.name,
            f.dims,
            f.horizon,
            f.x0,
            f.coefficients,
            f.u1_grid,
            f.assumptions_box,
            f.declared_convex,
        )
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidProblem(msg.into())
}

fn check_len(what: &str, len: usize, expected: usize) -> Result<()> {
    if len != expected {
        return Err(Error::Dimension {
            what: what.into(),
            expected,
            found: len,
        });
    }
    Ok(())
}

fn check_expr<S: Scalar>(
    what: &str,
    e: &Expr<S>,
    dims: &Dims,
    allow_t: bool,
    allow_x: bool,
    allow_a: bool,
) -> Result<()> {
    let (nx, na) = e.arity();
    if nx > dims.n || na > dims.k {
        return Err(bad(format!(
            "{what} indexes {nx} state / {na} control variables, problem has {} / {}",
            dims.n, dims.k
        )));
    }
    if (!allow_t && e.uses_t()) || (!allow_x && e.uses_x()) || (!allow_a && e.uses_a()) {
        let mut allowed = Vec::new();
        if allow_t {
            allowed.push("t");
        }
        if allow_x {
            allowed.push("x");
        }
        if allow_a {
            allowed.push("a");
        }
        return Err(bad(format!("{what} may only depend on ({})", allowed.join(", "))));
    }
    Ok(())
}

impl<S: Scalar> ProblemSpec<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dims: Dims,
        horizon: S,
        x0: Vec<S>,
        coefficients: Coefficients<S>,
        u1_grid: Vec<Vec<S>>,
        assumptions_box: AssumptionsBox<S>,
        declared_convex: DeclaredConvexity,
    ) -> Result<Self> {
        let Dims { n, d, k, m } = dims;
        if n == 0 || d == 0 || k == 0 || m == 0 {
            return Err(bad("all dimensions must be positive"));
        }
        if !(horizon.is_finite() && horizon > S::zero()) {
            return Err(bad("horizon must be positive and finite"));
        }
        check_len("x0", x0.len(), n)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(bad("x0 must be finite"));
        }
        if u1_grid.is_empty() {
            return Err(bad("the control grid U1 is empty"));
        }
        for p in &u1_grid {
            check_len("U1 grid point", p.len(), k)?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(bad("U1 grid points must be finite"));
            }
        }
        let b = &assumptions_box;
        if !(b.x_min < b.x_max) || b.probes == 0 {
            return Err(bad("assumptions box must be nonempty with at least one probe"));
        }

        let c = &coefficients;
        check_len("drift", c.drift.len(), n)?;
        for e in &c.drift {
            check_expr("drift", e, &dims, true, true, true)?;
        }
        check_len("diffusion rows", c.diffusion.len(), n)?;
        for row in &c.diffusion {
            check_len("diffusion columns", row.len(), d)?;
            for e in row {
                check_expr("diffusion", e, &dims, true, true, true)?;
            }
        }
        check_len("singular_gain rows", c.singular_gain.len(), n)?;
        for row in &c.singular_gain {
            check_len("singular_gain columns", row.len(), m)?;
            for e in row {
                check_expr("singular_gain", e, &dims, true, false, false)?;
            }
        }
        check_expr("running_cost", &c.running_cost, &dims, true, true, true)?;
        check_expr("terminal_cost", &c.terminal_cost, &dims, false, true, false)?;
        check_len("singular_cost", c.singular_cost.len(), m)?;
        for e in &c.singular_cost {
            check_expr("singular_cost", e, &dims, true, false, false)?;
        }
        check_len("drift_x rows", c.drift_x.len(), n)?;
        for row in &c.drift_x {
            check_len("drift_x columns", row.len(), n)?;
            for e in row {
                check_expr("drift_x", e, &dims, true, true, true)?;
            }
        }
        check_len("diffusion_x blocks", c.diffusion_x.len(), d)?;
        for block in &c.diffusion_x {
            check_len("diffusion_x rows", block.len(), n)?;
            for row in block {
                check_len("diffusion_x columns", row.len(), n)?;
                for e in row {
                    check_expr("diffusion_x", e, &dims, true, true, true)?;
                }
            }
        }
        check_len("running_cost_x", c.running_cost_x.len(), n)?;
        for e in &c.running_cost_x {
            check_expr("running_cost_x", e, &dims, true, true, true)?;
        }
        check_len("terminal_cost_x", c.terminal_cost_x.len(), n)?;
        for e in &c.terminal_cost_x {
            check_expr("terminal_cost_x", e, &dims, false, true, false)?;
        }

        Ok(Self {
            name: name.into(),
            dims,
            horizon,
            x0,
            coefficients,
            u1_grid,
            assumptions_box,
            declared_convex,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn x0(&self) -> &[S] {
        &self.x0
    }

    pub fn coefficients(&self) -> &Coefficients<S> {
        &self.coefficients
    }

    pub fn u1_grid(&self) -> &[Vec<S>] {
        &self.u1_grid
    }

    pub fn assumptions_box(&self) -> &AssumptionsBox<S> {
        &self.assumptions_box
    }

    pub fn declared_convex(&self) -> DeclaredConvexity {
        self.declared_convex
    }

    /// Returns a copy with another coefficient set; shapes are re-validated.
    pub fn with_coefficients(&self, coefficients: Coefficients<S>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.dims,
            self.horizon,
            self.x0.clone(),
            coefficients,
            self.u1_grid.clone(),
            self.assumptions_box.clone(),
            self.declared_convex,
        )
    }

    pub fn with_u1_grid(&self, u1_grid: Vec<Vec<S>>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.dims,
            self.horizon,
            self.x0.clone(),
            self.coefficients.clone(),
            u1_grid,
            self.assumptions_box.clone(),
            self.declared_convex,
        )
    }

    pub fn with_declared_convexity(mut self, declared: DeclaredConvexity) -> Self {
        self.declared_convex = declared;
        self
    }

    /// True when every diffusion entry is identically zero.
    pub fn is_deterministic(&self) -> bool {
        self.coefficients.diffusion.iter().flatten().all(Expr::is_zero)
    }

    /// Whether `a` is (exactly) a point of the control grid.
    pub fn in_u1(&self, a: &[S]) -> bool {
        self.u1_grid.iter().any(|p| p.as_slice() == a)
    }

    // ---- coefficient evaluation; `action` is a grid point or a measure ----

    pub fn drift(&self, t: S, x: &[S], action: Action<'_, S>, out: &mut [S]) {
        let exprs = &self.coefficients.drift;
        action.average_into(out, |a, o| {
            for (oi, e) in o.iter_mut().zip(exprs) {
                *oi = e.eval(t, x, a);
            }
        });
    }

    /// Row-major `n×d`.
    pub fn diffusion(&self, t: S, x: &[S], action: Action<'_, S>, out: &mut [S]) {
        let rows = &self.coefficients.diffusion;
        action.average_into(out, |a, o| {
            for (oi, e) in o.iter_mut().zip(rows.iter().flatten()) {
                *oi = e.eval(t, x, a);
            }
        });
    }

    /// Row-major `n×n`.
    pub fn drift_x(&self, t: S, x: &[S], action: Action<'_, S>, out: &mut [S]) {
        let rows = &self.coefficients.drift_x;
        action.average_into(out, |a, o| {
            for (oi, e) in o.iter_mut().zip(rows.iter().flatten()) {
                *oi = e.eval(t, x, a);
            }
        });
    }

    /// `d` consecutive row-major `n×n` blocks.
    pub fn diffusion_x(&self, t: S, x: &[S], action: Action<'_, S>, out: &mut [S]) {
        let blocks = &self.coefficients.diffusion_x;
        action.average_into(out, |a, o| {
            for (oi, e) in o.iter_mut().zip(blocks.iter().flatten().flatten()) {
                *oi = e.eval(t, x, a);
            }
        });
    }

    pub fn running_cost(&self, t: S, x: &[S], action: Action<'_, S>) -> S {
        let e = &self.coefficients.running_cost;
        action.average(|a| e.eval(t, x, a))
    }

    pub fn running_cost_x(&self, t: S, x: &[S], action: Action<'_, S>, out: &mut [S]) {
        let exprs = &self.coefficients.running_cost_x;
        action.average_into(out, |a, o| {
            for (oi, e) in o.iter_mut().zip(exprs) {
                *oi = e.eval(t, x, a);
            }
        });
    }

    pub fn terminal_cost(&self, x: &[S]) -> S {
        self.coefficients.terminal_cost.eval(S::zero(), x, &[])
    }

    pub fn terminal_cost_x(&self, x: &[S], out: &mut [S]) {
        for (o, e) in out.iter_mut().zip(&self.coefficients.terminal_cost_x) {
            *o = e.eval(S::zero(), x, &[]);
        }
    }

    /// Row-major `n×m`.
    pub fn singular_gain(&self, t: S, out: &mut [S]) {
        for (o, e) in out.iter_mut().zip(self.coefficients.singular_gain.iter().flatten()) {
            *o = e.eval(t, &[], &[]);
        }
    }

    pub fn singular_cost(&self, t: S, out: &mut [S]) {
        for (o, e) in out.iter_mut().zip(&self.coefficients.singular_cost) {
            *o = e.eval(t, &[], &[]);
        }
    }
}
