//! Multi-start preconditioned gradient descent on the Galerkin coefficients.
//!
//! The estimate is an upper bound for the Yamabe constant of `[h_t]`: every
//! iterate is an admissible conformal factor, so no value below the true
//! infimum can be produced (up to quadrature error).

use super::{aubin_constant, eh_energy, ConformalFactor, ProductSpace};
use crate::error::{Result, YamabeError};
use crate::exec::{map_indexed, ExecPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Steps whose node minimum of `u` falls to or below this are rejected.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Relative decrease below which a restart is declared converged.
    pub tol: f64,
    pub max_iter: usize,
    pub exec: ExecPolicy,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { restarts: 8, seed: 42, tol: 1e-6, max_iter: 400, exec: ExecPolicy::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub restart: usize,
    pub iter: usize,
    pub quotient: f64,
    pub step: f64,
    pub min_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Constant,
    FirstCoordinate,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartStatus {
    Converged,
    MaxIterations,
    PositivityBreach,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub start: StartKind,
    pub status: RestartStatus,
    pub iterations: usize,
    pub final_quotient: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub estimate: f64,
    pub minimizer: ConformalFactor,
    /// Restart that produced the estimate (lowest index on ties).
    pub best_restart: usize,
    pub energy: f64,
    pub aubin_bound: f64,
    pub trace: Vec<TraceRow>,
    pub restarts: Vec<RestartSummary>,
    pub basis_size: usize,
}

impl MinimizeResult {
    /// `ℰ(h_t) - estimate`; positive when a lower-energy metric was found.
    pub fn energy_gap(&self) -> f64 {
        self.energy - self.estimate
    }

    /// `aubin_bound - estimate`.
    pub fn aubin_gap(&self) -> f64 {
        self.aubin_bound - self.estimate
    }
}

struct RestartOutcome {
    summary: RestartSummary,
    trace: Vec<TraceRow>,
    coeffs: Option<Vec<f64>>,
}

/// Seed for restart `r`, independent of scheduling.
fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn start_point(space: &ProductSpace, r: usize, seed: u64) -> (StartKind, Vec<f64>) {
    match r {
        0 => (StartKind::Constant, space.constant()),
        1 => {
            let mut c = space.constant();
            if let Ok(x1) = space.sphere_coordinate(0) {
                for (a, b) in c.iter_mut().zip(&x1) {
                    *a += 0.3 * b;
                }
            }
            (StartKind::FirstCoordinate, c)
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, r));
            let mut c = space.constant();
            for (v, lam) in c.iter_mut().zip(space.eigenvalues()).skip(1) {
                *v = 0.2 * rng.random_range(-1.0..1.0) / (1.0 + lam);
            }
            (StartKind::Random, c)
        }
    }
}

/// Rescales so that `∫ u^p dμ = V`; the quotient is invariant under this.
fn normalize(space: &ProductSpace, coeffs: &mut [f64], power_integral: f64) {
    let scale = (space.volume() / power_integral).powf(1.0 / space.exponent());
    coeffs.iter_mut().for_each(|c| *c *= scale);
}

fn run_restart(space: &ProductSpace, r: usize, opts: &MinimizeOptions) -> Result<RestartOutcome> {
    let (start, mut coeffs) = start_point(space, r, opts.seed);
    let breach = |trace| RestartOutcome {
        summary: RestartSummary {
            restart: r,
            start,
            status: RestartStatus::PositivityBreach,
            iterations: 0,
            final_quotient: None,
        },
        trace,
        coeffs: None,
    };
    let first = space.evaluate(&coeffs, false)?;
    if first.min_u <= POSITIVITY_FLOOR {
        return Ok(breach(Vec::new()));
    }
    normalize(space, &mut coeffs, first.power_integral);
    let mut eval = space.evaluate(&coeffs, true)?;
    let mut q = eval.quotient;
    let mut grad = eval.gradient.take().expect("requested");
    let mut trace = vec![TraceRow { restart: r, iter: 0, quotient: q, step: 0.0, min_u: eval.min_u }];

    // diagonal preconditioner from the quotient's Hessian at u ≡ 1
    let n = space.family().n() as f64;
    let s = space.family().scalar_curvature();
    let pp2 = space.exponent() + 2.0;
    let scale = 2.0 * space.volume().powf(2.0 / n);
    let precond: Vec<f64> = space.eigenvalues().iter().map(|lam| 1.0 / (scale * (pp2 * lam + s))).collect();

    let mut status = RestartStatus::MaxIterations;
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        let dir: Vec<f64> = grad.iter().zip(&precond).map(|(g, p)| -g * p).collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) || -slope <= (opts.tol * q.abs()).powi(2) {
            status = RestartStatus::Converged;
            break;
        }
        step = (2.0 * step).min(MAX_STEP);
        let accepted = loop {
            let trial: Vec<f64> = coeffs.iter().zip(&dir).map(|(c, d)| c + step * d).collect();
            let e = space.evaluate(&trial, false)?;
            if e.min_u > POSITIVITY_FLOOR && e.quotient <= q + ARMIJO * step * slope {
                break Some((trial, e.power_integral));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((mut trial, power)) = accepted else {
            status = RestartStatus::Converged;
            break;
        };
        normalize(space, &mut trial, power);
        let mut next = space.evaluate(&trial, true)?;
        if next.quotient > q || next.min_u <= POSITIVITY_FLOOR {
            // rescaling moved the value by rounding only; stop at the last iterate
            status = RestartStatus::Converged;
            break;
        }
        let decrease = q - next.quotient;
        coeffs = trial;
        q = next.quotient;
        grad = next.gradient.take().expect("requested");
        iterations = iter;
        trace.push(TraceRow { restart: r, iter, quotient: q, step, min_u: next.min_u });
        if decrease <= opts.tol * 1e-3 * q.abs() {
            status = RestartStatus::Converged;
            break;
        }
    }
    Ok(RestartOutcome {
        summary: RestartSummary { restart: r, start, status, iterations, final_quotient: Some(q) },
        trace,
        coeffs: Some(coeffs),
    })
}

/// Minimizes the Yamabe quotient over the trial space with `opts.restarts`
/// independent starts: `u ≡ 1`, `1 + 0.3 x¹`, then seeded random
/// perturbations of `1`.
pub fn minimize_quotient(space: &ProductSpace, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let restarts = opts.restarts.max(1);
    let outcomes = map_indexed(opts.exec, restarts, |r| run_restart(space, r, opts));
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut summaries = Vec::with_capacity(restarts);
    for outcome in outcomes {
        let outcome = outcome?;
        trace.extend(outcome.trace);
        if let (Some(q), Some(c)) = (outcome.summary.final_quotient, outcome.coeffs) {
            if best.as_ref().is_none_or(|(_, bq, _)| q < *bq) {
                best = Some((outcome.summary.restart, q, c));
            }
        }
        summaries.push(outcome.summary);
    }
    let (best_restart, estimate, coeffs) = best.ok_or(YamabeError::PositivityBreach { restarts })?;
    let minimizer = space.conformal_factor(coeffs)?;
    let fam = space.family();
    Ok(MinimizeResult {
        estimate,
        minimizer,
        best_restart,
        energy: eh_energy(fam),
        aubin_bound: aubin_constant(fam.n())?,
        trace,
        restarts: summaries,
        basis_size: space.dim(),
    })
}
