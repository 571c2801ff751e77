//! The subcommands. Each returns its exit code and a short human-readable summary.

use ndarray::Array3;
use serde::Serialize;
use singular_pmp::adjoint::{
    adjoint_bsde, adjoint_explicit, auxiliary_processes, AdjointMethod, AdjointPair, RegressionDiagnostics,
};
use singular_pmp::controls::{chattering_periodic, RelaxedControl, SingularControl};
use singular_pmp::model::{NoiseBatch, ProblemSpec, TimeGrid};
use singular_pmp::pmp::{
    certify_sufficient, compare_with_competitors, random_competitors, verify_necessary, CompetitorOutcome, ConditionId,
};
use singular_pmp::sde::{
    cost, fundamental_solutions, simulate, simulate_variational, sup_mean_square_gap, ControlKind, ControlRef,
    CostBreakdown, TrajectoryEnsemble,
};
use singular_pmp::stats::Estimate;

use crate::config::{resolve_control, resolve_singular, Control, RunConfig};
use crate::output::OutputDir;
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;

/// Everything a command needs after the config is resolved.
struct Setup {
    spec: ProblemSpec<f64>,
    grid: TimeGrid<f64>,
    noise: NoiseBatch<f64>,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let spec = cfg.problem()?;
    let grid = TimeGrid::new(spec.horizon(), cfg.grid.steps).map_err(|e| CliError::Config(e.to_string()))?;
    let noise = NoiseBatch::generate(cfg.seed(), cfg.monte_carlo.paths, &grid, spec.dims().d)?;
    Ok(Setup { spec, grid, noise })
}

fn candidate(cfg: &RunConfig, s: &Setup) -> Result<(Control, SingularControl<f64>), CliError> {
    let c = cfg.candidate()?;
    let steps = cfg.grid.steps;
    let control = resolve_control(&c.control, &s.spec, steps)?;
    let singular = resolve_singular(&c.singular, &s.spec, steps)?;
    let paths = cfg.monte_carlo.paths;
    control
        .as_ref()
        .check(&s.spec, steps, paths)
        .map_err(|e| CliError::Config(e.to_string()))?;
    singular
        .check(&s.spec, steps, paths)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((control, singular))
}

#[derive(Debug, Serialize)]
struct Moments {
    mean: f64,
    variance: f64,
}

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    problem: &'a str,
    control: ControlKind,
    steps: usize,
    paths: usize,
    seed: u64,
    deterministic: bool,
}

fn info<'a>(cfg: &RunConfig, s: &'a Setup, control: &Control) -> RunInfo<'a> {
    RunInfo {
        problem: s.spec.name(),
        control: control.as_ref().kind(),
        steps: cfg.grid.steps,
        paths: cfg.monte_carlo.paths,
        seed: cfg.seed(),
        deterministic: s.spec.is_deterministic(),
    }
}

impl Moments {
    /// Mean and unbiased variance (zero for a single sample).
    fn of(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let variance = if xs.len() < 2 {
            0.0
        } else {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
        };
        Self { mean, variance }
    }
}

fn terminal_moments(traj: &TrajectoryEnsemble<f64>) -> Vec<Moments> {
    (0..traj.dim())
        .map(|i| Moments::of(&(0..traj.paths()).map(|p| traj.terminal(p)[i]).collect::<Vec<_>>()))
        .collect()
}

fn describe_cost(c: &CostBreakdown<f64>) -> String {
    format!("cost {:.12e} (SE {:.3e})", c.total.mean, c.total.std_error)
}

pub fn simulate_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let (control, xi) = candidate(cfg, &s)?;
    let traj = simulate(&s.spec, control.as_ref(), &xi, &s.grid, &s.noise)?;
    let c = cost(&s.spec, control.as_ref(), &xi, &traj)?;
    out.ensemble("trajectories", traj.states().view(), &s.grid, "x", cfg.seed())?;

    #[derive(Serialize)]
    struct Summary<'a> {
        run: RunInfo<'a>,
        terminal_state: Vec<Moments>,
        cost: &'a CostBreakdown<f64>,
    }
    let summary = Summary {
        run: info(cfg, &s, &control),
        terminal_state: terminal_moments(&traj),
        cost: &c,
    };
    out.json("summary.json", "summary", &summary)?;
    Ok((
        EXIT_OK,
        format!(
            "simulated {} paths of {}; {}",
            cfg.monte_carlo.paths,
            s.spec.name(),
            describe_cost(&c)
        ),
    ))
}

pub fn cost_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let (control, xi) = candidate(cfg, &s)?;
    let traj = simulate(&s.spec, control.as_ref(), &xi, &s.grid, &s.noise)?;
    let c = cost(&s.spec, control.as_ref(), &xi, &traj)?;

    #[derive(Serialize)]
    struct Report<'a> {
        run: RunInfo<'a>,
        cost: &'a CostBreakdown<f64>,
    }
    out.json(
        "cost.json",
        "cost",
        &Report {
            run: info(cfg, &s, &control),
            cost: &c,
        },
    )?;
    Ok((EXIT_OK, format!("{}: {}", s.spec.name(), describe_cost(&c))))
}

/// Runs the adjoint route from the config. The explicit route has no martingale
/// part of its own; `P` is recovered from the auxiliary processes.
fn adjoint_for(
    cfg: &RunConfig,
    s: &Setup,
    control: ControlRef<'_, f64>,
    xi: &SingularControl<f64>,
    traj: &TrajectoryEnsemble<f64>,
) -> Result<AdjointPair<f64>, CliError> {
    match cfg.adjoint.method {
        AdjointMethod::BsdeRegression => Ok(adjoint_bsde(&s.spec, control, traj, &s.noise, &cfg.regression)?),
        AdjointMethod::Explicit => {
            let fund = fundamental_solutions(&s.spec, control, traj, &s.noise)?;
            let adj = adjoint_explicit(&s.spec, control, traj, &fund, &cfg.regression)?;
            // α is irrelevant to P, so the base itself serves as direction
            let z = simulate_variational(&s.spec, (control, xi), (control, xi), traj, &s.noise)?;
            let aux = auxiliary_processes(&s.spec, control, traj, &fund, &z, &adj, &s.noise, &cfg.regression)?;
            let big_p = aux.martingale_p(&s.spec, control, traj, &fund, &adj);
            Ok(adj.with_big_p(big_p))
        }
    }
}

pub fn adjoint_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let (control, xi) = candidate(cfg, &s)?;
    let traj = simulate(&s.spec, control.as_ref(), &xi, &s.grid, &s.noise)?;
    let adj = adjoint_for(cfg, &s, control.as_ref(), &xi, &traj)?;
    out.ensemble("adjoint_p", adj.p().view(), &s.grid, "p", cfg.seed())?;
    if let Some(big_p) = adj.big_p() {
        let (paths, knots, n, d) = big_p.dim();
        let flat =
            Array3::from_shape_vec((paths, knots, n * d), big_p.iter().copied().collect()).expect("same element count");
        out.ensemble("adjoint_big_p", flat.view(), &s.grid, "P", cfg.seed())?;
    }

    #[derive(Serialize)]
    struct Report<'a> {
        run: RunInfo<'a>,
        method: AdjointMethod,
        diagnostics: &'a RegressionDiagnostics,
        initial_p: Vec<Moments>,
    }
    let n = s.spec.dims().n;
    let initial_p = (0..n)
        .map(|i| Moments::of(&(0..adj.paths()).map(|p| adj.p_at(p, 0)[i]).collect::<Vec<_>>()))
        .collect::<Vec<_>>();
    let p0 = initial_p[0].mean;
    let report = Report {
        run: info(cfg, &s, &control),
        method: adj.method(),
        diagnostics: adj.diagnostics(),
        initial_p,
    };
    out.json("adjoint.json", "adjoint-diagnostics", &report)?;
    Ok((
        EXIT_OK,
        format!(
            "adjoint of {} ({:?}); mean p_0[0] = {p0:.6e}",
            s.spec.name(),
            adj.method()
        ),
    ))
}

pub fn verify_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let (control, xi) = candidate(cfg, &s)?;
    let traj = simulate(&s.spec, control.as_ref(), &xi, &s.grid, &s.noise)?;
    let adj = adjoint_for(cfg, &s, control.as_ref(), &xi, &traj)?;
    let report = verify_necessary(&s.spec, (control.as_ref(), &xi), &adj, &traj, &cfg.tolerances)?;
    out.json("verification.json", "verification-report", &report)?;

    let mut lines = vec![format!(
        "{}: necessary conditions {}",
        s.spec.name(),
        verdict(report.passed)
    )];
    for c in &report.conditions {
        lines.push(format!(
            "  {:<24} {} statistic {:.6e} threshold {:.3e}",
            id_name(c.id),
            verdict(c.passed),
            c.statistic,
            c.threshold
        ));
    }
    Ok((if report.passed { EXIT_OK } else { EXIT_FAILED }, lines.join("\n")))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn id_name(id: ConditionId) -> &'static str {
    match id {
        ConditionId::HamiltonianMinimality => "hamiltonian-minimality",
        ConditionId::Nonnegativity => "nonnegativity",
        ConditionId::FlatOff => "flat-off",
        ConditionId::VariationalInequality => "variational-inequality",
    }
}

pub fn certify_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let (control, xi) = candidate(cfg, &s)?;
    let traj = simulate(&s.spec, control.as_ref(), &xi, &s.grid, &s.noise)?;
    let adj = adjoint_for(cfg, &s, control.as_ref(), &xi, &traj)?;
    let cert = certify_sufficient(
        &s.spec,
        (control.as_ref(), &xi),
        &adj,
        &traj,
        &cfg.tolerances,
        &cfg.certify.convexity(),
    )?;
    out.json("certificate.json", "sufficiency-certificate", &cert)?;
    let mut lines = vec![format!(
        "{}: {}",
        s.spec.name(),
        if cert.certified { "certified" } else { "not certified" }
    )];
    let mut code = if cert.certified { EXIT_OK } else { EXIT_FAILED };

    if cert.certified && cfg.certify.competitors > 0 {
        let base = cost(&s.spec, control.as_ref(), &xi, &traj)?;
        let rivals = random_competitors(
            &s.spec,
            cfg.grid.steps,
            cfg.certify.competitors,
            cfg.certify.competitor_seed,
        )?;
        let outcomes = compare_with_competitors(
            &s.spec,
            &base.per_path,
            &rivals,
            &s.grid,
            &s.noise,
            cfg.tolerances.sigmas,
        )?;
        let better = outcomes.iter().filter(|o| o.strictly_better).count();
        let closest = outcomes.iter().map(|o| o.difference.mean).fold(f64::INFINITY, f64::min);

        #[derive(Serialize)]
        struct Comparison<'a> {
            candidate_cost: Estimate<f64>,
            competitors: usize,
            seed: u64,
            strictly_better: usize,
            smallest_difference: f64,
            outcomes: &'a [CompetitorOutcome<f64>],
        }
        out.json(
            "competitors.json",
            "competitor-comparison",
            &Comparison {
                candidate_cost: base.total,
                competitors: outcomes.len(),
                seed: cfg.certify.competitor_seed,
                strictly_better: better,
                smallest_difference: closest,
                outcomes: &outcomes,
            },
        )?;
        lines.push(format!(
            "  {} competitors, {better} strictly better; smallest paired difference {closest:.6e}",
            outcomes.len()
        ));
        if better > 0 {
            code = EXIT_FAILED;
        }
    }
    Ok((code, lines.join("\n")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChatterRow {
    pub n: usize,
    pub traj_gap: f64,
    pub cost_gap: f64,
    pub se: f64,
}

fn paired(a: &[f64], b: &[f64]) -> Estimate<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Estimate::from_samples(&d)
}

fn chatter_row(
    s: &Setup,
    q: &RelaxedControl<f64>,
    xi: &SingularControl<f64>,
    base: &TrajectoryEnsemble<f64>,
    base_cost: &CostBreakdown<f64>,
    n: usize,
) -> Result<ChatterRow, CliError> {
    let u = chattering_periodic(q, n)?;
    let traj = simulate(&s.spec, ControlRef::Strict(&u), xi, &s.grid, &s.noise)?;
    let ju = cost(&s.spec, ControlRef::Strict(&u), xi, &traj)?;
    let d = paired(&ju.per_path, &base_cost.per_path);
    Ok(ChatterRow {
        n,
        traj_gap: sup_mean_square_gap(&traj, base)?,
        cost_gap: d.mean.abs(),
        se: d.std_error,
    })
}

pub fn chatter_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Result<(i32, String), CliError> {
    let s = setup(cfg)?;
    let ch = cfg.chatter()?;
    let steps = cfg.grid.steps;
    let q = resolve_control(&ch.target, &s.spec, steps)?.to_relaxed();
    q.check(&s.spec, steps, cfg.monte_carlo.paths)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let xi = match &cfg.candidate {
        Some(c) => resolve_singular(&c.singular, &s.spec, steps)?,
        None => SingularControl::zero(steps, s.spec.dims().m),
    };
    let base = simulate(&s.spec, ControlRef::Relaxed(&q), &xi, &s.grid, &s.noise)?;
    let base_cost = cost(&s.spec, ControlRef::Relaxed(&q), &xi, &base)?;
    let rows =
        ch.n.iter()
            .map(|&n| chatter_row(&s, &q, &xi, &base, &base_cost, n))
            .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("n,traj_gap,cost_gap,SE\n");
    for r in &rows {
        csv.push_str(&format!("{},{:e},{:e},{:e}\n", r.n, r.traj_gap, r.cost_gap, r.se));
    }
    out.text("chatter.csv", "csv", &csv)?;
    let mut lines = vec![format!(
        "{}: chattering convergence, relaxed cost {:.6e}",
        s.spec.name(),
        base_cost.total.mean
    )];
    lines.extend(rows.iter().map(|r| {
        format!(
            "  n = {:>4}  traj_gap {:.6e}  cost_gap {:.6e}  SE {:.3e}",
            r.n, r.traj_gap, r.cost_gap, r.se
        )
    }));
    Ok((EXIT_OK, lines.join("\n")))
}
