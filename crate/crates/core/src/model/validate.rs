//! Statistical probes of the standing assumptions on a problem's coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ProblemSpec;
use crate::controls::Action;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Outcome of one probe: the measured statistic against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub problem: String,
    pub probes: usize,
    pub seed: u64,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Probe<S> {
    t: S,
    x: Vec<S>,
    a: Vec<S>,
}

fn finite<S: Scalar>(values: &[S], function: &str, p: &Probe<S>) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            function: function.into(),
            input: format!("t = {}, x = {:?}, a = {:?}", p.t, p.x, p.a),
        })
    }
}

fn max_abs<S: Scalar>(v: &[S]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs().as_f64()))
}

/// Probes gradient consistency, `k ≥ 0`, boundedness and linear growth at random
/// points of the assumptions box. Deterministic for a given box seed; never
/// mutates the problem.
pub fn validate_problem<S: Scalar>(spec: &ProblemSpec<S>) -> Result<ValidationReport> {
    let bx = spec.assumptions_box();
    let dims = spec.dims();
    let (n, d, m) = (dims.n, dims.d, dims.m);
    let mut rng = ChaCha8Rng::seed_from_u64(bx.seed);
    let horizon = spec.horizon().as_f64();
    let (lo, hi) = (bx.x_min.as_f64(), bx.x_max.as_f64());
    let grid = spec.u1_grid();

    let probes: Vec<Probe<S>> = (0..bx.probes)
        .map(|i| {
            // include both endpoints of [0, T]
            let t = match i {
                0 => 0.0,
                1 => horizon,
                _ => rng.random_range(0.0..=horizon),
            };
            Probe {
                t: S::lit(t),
                x: (0..n).map(|_| S::lit(rng.random_range(lo..=hi))).collect(),
                a: grid[rng.random_range(0..grid.len())].clone(),
            }
        })
        .collect();

    let fd_tol = 1e-4f64.max(50.0 * S::epsilon().as_f64().powf(2.0 / 3.0));
    let step_scale = S::epsilon().cbrt();

    let mut k_min = f64::INFINITY;
    let mut worst_fd = [0.0f64; 4];
    let mut worst_fd_at = [String::new(), String::new(), String::new(), String::new()];
    let mut grad_max = 0.0f64;
    let mut growth_max = 0.0f64;
    let mut coef_max = 0.0f64;

    let mut b = vec![S::zero(); n];
    let mut sig = vec![S::zero(); n * d];
    let mut bx_decl = vec![S::zero(); n * n];
    let mut sx_decl = vec![S::zero(); d * n * n];
    let mut hx_decl = vec![S::zero(); n];
    let mut gx_decl = vec![S::zero(); n];
    let mut gain = vec![S::zero(); n * m];
    let mut kvec = vec![S::zero(); m];
    let mut b_up = vec![S::zero(); n];
    let mut b_dn = vec![S::zero(); n];
    let mut s_up = vec![S::zero(); n * d];
    let mut s_dn = vec![S::zero(); n * d];

    for p in &probes {
        let act = Action::Point(&p.a);
        spec.drift(p.t, &p.x, act, &mut b);
        finite(&b, "drift", p)?;
        spec.diffusion(p.t, &p.x, act, &mut sig);
        finite(&sig, "diffusion", p)?;
        let h = spec.running_cost(p.t, &p.x, act);
        finite(&[h], "running_cost", p)?;
        let g = spec.terminal_cost(&p.x);
        finite(&[g], "terminal_cost", p)?;
        spec.drift_x(p.t, &p.x, act, &mut bx_decl);
        finite(&bx_decl, "drift_x", p)?;
        spec.diffusion_x(p.t, &p.x, act, &mut sx_decl);
        finite(&sx_decl, "diffusion_x", p)?;
        spec.running_cost_x(p.t, &p.x, act, &mut hx_decl);
        finite(&hx_decl, "running_cost_x", p)?;
        spec.terminal_cost_x(&p.x, &mut gx_decl);
        finite(&gx_decl, "terminal_cost_x", p)?;
        spec.singular_gain(p.t, &mut gain);
        finite(&gain, "singular_gain", p)?;
        spec.singular_cost(p.t, &mut kvec);
        finite(&kvec, "singular_cost", p)?;

        k_min = kvec.iter().fold(k_min, |acc, v| acc.min(v.as_f64()));
        grad_max = grad_max
            .max(max_abs(&bx_decl))
            .max(max_abs(&sx_decl))
            .max(max_abs(&hx_decl))
            .max(max_abs(&gx_decl));
        let size = |v: &[S]| v.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
        let growth = (size(&b) + size(&sig)) / (1.0 + size(&p.x) + size(&p.a));
        growth_max = growth_max.max(growth);
        coef_max = coef_max
            .max(max_abs(&b))
            .max(max_abs(&sig))
            .max(h.abs().as_f64())
            .max(max_abs(&gain));

        // central differences in each state direction
        let mut xp = p.x.clone();
        for j in 0..n {
            let step = step_scale * (S::one() + p.x[j].abs());
            xp[j] = p.x[j] + step;
            spec.drift(p.t, &xp, act, &mut b_up);
            spec.diffusion(p.t, &xp, act, &mut s_up);
            let h_up = spec.running_cost(p.t, &xp, act);
            let g_up = spec.terminal_cost(&xp);
            xp[j] = p.x[j] - step;
            spec.drift(p.t, &xp, act, &mut b_dn);
            spec.diffusion(p.t, &xp, act, &mut s_dn);
            let h_dn = spec.running_cost(p.t, &xp, act);
            let g_dn = spec.terminal_cost(&xp);
            xp[j] = p.x[j];
            let two_h = (step + step).as_f64();
            let rel = |fd: f64, decl: S| (fd - decl.as_f64()).abs() / decl.abs().as_f64().max(1.0);
            let mut record = |slot: usize, fd: f64, decl: S, label: String| {
                let r = rel(fd, decl);
                if r > worst_fd[slot] {
                    worst_fd[slot] = r;
                    worst_fd_at[slot] = label;
                }
            };
            for i in 0..n {
                let fd = (b_up[i] - b_dn[i]).as_f64() / two_h;
                record(
                    0,
                    fd,
                    bx_decl[i * n + j],
                    format!("∂b{i}/∂x{j} at t = {}, x = {:?}", p.t, p.x),
                );
            }
            for i in 0..n {
                for l in 0..d {
                    let fd = (s_up[i * d + l] - s_dn[i * d + l]).as_f64() / two_h;
                    record(
                        1,
                        fd,
                        sx_decl[l * n * n + i * n + j],
                        format!("∂σ{i}{l}/∂x{j} at t = {}, x = {:?}", p.t, p.x),
                    );
                }
            }
            record(
                2,
                (h_up - h_dn).as_f64() / two_h,
                hx_decl[j],
                format!("∂h/∂x{j} at x = {:?}", p.x),
            );
            record(
                3,
                (g_up - g_dn).as_f64() / two_h,
                gx_decl[j],
                format!("∂g/∂x{j} at x = {:?}", p.x),
            );
        }
    }

    let mut checks = vec![AssumptionCheck {
        name: "control_grid".into(),
        passed: !grid.is_empty(),
        measured: grid.len() as f64,
        threshold: 1.0,
        detail: format!("{} grid points in R^{}", grid.len(), dims.k),
    }];
    checks.push(AssumptionCheck {
        name: "singular_cost_nonnegative".into(),
        passed: k_min >= 0.0,
        measured: k_min,
        threshold: 0.0,
        detail: "minimum of k_i(t) over probe times".into(),
    });
    for (slot, name) in ["drift_x", "diffusion_x", "running_cost_x", "terminal_cost_x"]
        .iter()
        .enumerate()
    {
        checks.push(AssumptionCheck {
            name: format!("gradient_consistency:{name}"),
            passed: worst_fd[slot] <= fd_tol,
            measured: worst_fd[slot],
            threshold: fd_tol,
            detail: if worst_fd_at[slot].is_empty() {
                "declared gradient matches central differences".into()
            } else {
                format!("worst relative mismatch at {}", worst_fd_at[slot])
            },
        });
    }
    checks.push(AssumptionCheck {
        name: "gradient_bound".into(),
        passed: grad_max <= bx.gradient_bound.as_f64(),
        measured: grad_max,
        threshold: bx.gradient_bound.as_f64(),
        detail: "max |b_x|, |σ_x|, |h_x|, |g_x| over probes".into(),
    });
    checks.push(AssumptionCheck {
        name: "linear_growth".into(),
        passed: growth_max <= bx.growth_bound.as_f64(),
        measured: growth_max,
        threshold: bx.growth_bound.as_f64(),
        detail: "max (|b| + |σ|) / (1 + |x| + |a|) over probes".into(),
    });
    checks.push(AssumptionCheck {
        name: "coefficient_bound".into(),
        passed: coef_max <= bx.coefficient_bound.as_f64(),
        measured: coef_max,
        threshold: bx.coefficient_bound.as_f64(),
        detail: "max |b|, |σ|, |h|, |G| over the box".into(),
    });

    Ok(ValidationReport {
        problem: spec.name().to_string(),
        probes: bx.probes,
        seed: bx.seed,
        checks,
    })
}
