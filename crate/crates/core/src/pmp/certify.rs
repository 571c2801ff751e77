use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{HamiltonianEval, HamiltonianInputs};
use super::verify::{verify_necessary, Tolerances, VerificationReport};
use crate::adjoint::AdjointPair;
use crate::controls::SingularControl;
use crate::error::Result;
use crate::model::ProblemSpec;
use crate::scalar::Scalar;
use crate::sde::{ControlRef, TrajectoryEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexityOptions {
    /// Random `(x, x′)` pairs per probe (per time slice for the Hamiltonian).
    pub pairs: usize,
    pub seed: u64,
}

impl Default for ConvexityOptions {
    fn default() -> Self {
        Self { pairs: 1000, seed: 11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityMethod {
    Declared,
    MidpointProbe,
}

/// Evidence for convexity of one function of `x`. `worst_defect` is the largest
/// relative midpoint excess `(f(mid) − avg) / (1 + |f(x)| + |f(x′)|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityEvidence {
    pub subject: String,
    pub method: ConvexityMethod,
    pub probes: usize,
    pub worst_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyCertificate {
    pub certified: bool,
    pub terminal_convexity: ConvexityEvidence,
    pub hamiltonian_convexity: ConvexityEvidence,
    pub conditions: VerificationReport,
}

fn tolerance<S: Scalar>() -> f64 {
    1e-10f64.max(1e4 * S::epsilon().as_f64())
}

fn random_point<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<S> {
    (0..n).map(|_| S::lit(rng.random_range(lo..=hi))).collect()
}

fn declared(subject: &str) -> ConvexityEvidence {
    ConvexityEvidence {
        subject: subject.into(),
        method: ConvexityMethod::Declared,
        probes: 0,
        worst_defect: 0.0,
        tolerance: 0.0,
        passed: true,
    }
}

/// Relative midpoint excess of a function at one pair.
fn defect<S: Scalar>(f_a: S, f_b: S, f_mid: S) -> f64 {
    let avg = (f_a + f_b) / S::lit(2.0);
    ((f_mid - avg) / (S::one() + f_a.abs() + f_b.abs())).as_f64()
}

/// Certifies optimality when `g` and `x ↦ 𝓗(t, x, q, p_t, P_t)` are convex and the
/// necessary conditions hold. Convexity comes from the problem's declared flags
/// or from midpoint probes in the assumptions box: `pairs` random pairs for `g`,
/// and per time slice `pairs` random pairs at every U₁ point with `(p, P)` of a
/// random path. Checking the grid points suffices since `𝓗` is affine in `q`.
pub fn certify_sufficient<S: Scalar>(
    spec: &ProblemSpec<S>,
    candidate: (ControlRef<'_, S>, &SingularControl<S>),
    adjoint: &AdjointPair<S>,
    trajectory: &TrajectoryEnsemble<S>,
    tolerances: &Tolerances,
    options: &ConvexityOptions,
) -> Result<SufficiencyCertificate> {
    let conditions = verify_necessary(spec, candidate, adjoint, trajectory, tolerances)?;
    let flags = spec.declared_convex();
    let bx = spec.assumptions_box();
    let (lo, hi) = (bx.x_min.as_f64(), bx.x_max.as_f64());
    let n = spec.dims().n;
    let tol = tolerance::<S>();
    let mid = |a: &[S], b: &[S]| -> Vec<S> { a.iter().zip(b).map(|(&u, &v)| (u + v) / S::lit(2.0)).collect() };

    let terminal_convexity = if flags.terminal_cost {
        declared("terminal_cost")
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..options.pairs {
            let a: Vec<S> = random_point(&mut rng, n, lo, hi);
            let b: Vec<S> = random_point(&mut rng, n, lo, hi);
            let d = defect(
                spec.terminal_cost(&a),
                spec.terminal_cost(&b),
                spec.terminal_cost(&mid(&a, &b)),
            );
            worst = worst.max(d);
        }
        ConvexityEvidence {
            subject: "terminal_cost".into(),
            method: ConvexityMethod::MidpointProbe,
            probes: options.pairs,
            worst_defect: worst.max(0.0),
            tolerance: tol,
            passed: worst <= tol,
        }
    };

    let hamiltonian_convexity = if flags.hamiltonian {
        declared("hamiltonian")
    } else {
        let grid = trajectory.grid();
        let paths = trajectory.paths();
        let u1 = spec.u1_grid();
        let per_slice: Vec<f64> = (0..grid.steps())
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(j as u64 + 1);
                let mut eval = HamiltonianEval::new(spec);
                let mut worst = f64::NEG_INFINITY;
                for _ in 0..options.pairs {
                    let path = rng.random_range(0..paths);
                    let a: Vec<S> = random_point(&mut rng, n, lo, hi);
                    let b: Vec<S> = random_point(&mut rng, n, lo, hi);
                    let c = mid(&a, &b);
                    let big_p = adjoint.big_p_at(path, j).unwrap_or(&[]);
                    let at = |x| HamiltonianInputs {
                        t: grid.t(j),
                        x,
                        p: adjoint.p_at(path, j),
                        big_p,
                    };
                    for v in u1 {
                        let fa = eval.point(&at(&a), v);
                        let fb = eval.point(&at(&b), v);
                        let fc = eval.point(&at(&c), v);
                        worst = worst.max(defect(fa, fb, fc));
                    }
                }
                worst
            })
            .collect();
        let worst = per_slice.into_iter().fold(f64::NEG_INFINITY, f64::max);
        ConvexityEvidence {
            subject: "hamiltonian".into(),
            method: ConvexityMethod::MidpointProbe,
            probes: options.pairs * grid.steps() * u1.len(),
            worst_defect: worst.max(0.0),
            tolerance: tol,
            passed: worst <= tol,
        }
    };

    Ok(SufficiencyCertificate {
        certified: terminal_convexity.passed && hamiltonian_convexity.passed && conditions.passed,
        terminal_convexity,
        hamiltonian_convexity,
        conditions,
    })
}
