//! Eigenvalue obstruction along the squeezed family: classification of each
//! `t`, sweeps over `t`, explicit energy-lowering certificates, and a
//! heuristic bracket for the largest `t` at which no lower energy was found.

use crate::error::{invalid, Result, YamabeError};
use crate::exec::{map_indexed, ExecPolicy};
use crate::functional::{
    eh_energy, expansion_coefficient, minimize_quotient, perturbation_energy, MinimizeOptions, ProductSpace, TrialSpace,
};
use crate::product::ProductFamily;
use serde::Serialize;

/// Tolerance on `|λ₁ - s/(n-1)|` below which a family is classified as
/// `equality`.
pub const EQUALITY_TOL: f64 = 1e-10;

/// Tolerance on `|t - 1|` for the Einstein label.
pub const EINSTEIN_TOL: f64 = 1e-12;

/// Default step for energy-lowering certificates.
pub const CERTIFICATE_TAU: f64 = 0.05;

/// Relative agreement required between the measured drop and `|c₂| τ²`.
pub const CERTIFICATE_REL_TOL: f64 = 0.2;

const CERTIFICATE_DEGREE: usize = 8;
const MAX_HALVINGS: u32 = 24;

/// Outcome of comparing `λ₁` with `s/(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NecessaryTest {
    Holds,
    Equality,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Einstein,
    NecessaryHolds,
    Equality,
    Violated,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Einstein => "einstein",
            Classification::NecessaryHolds => "necessary_holds",
            Classification::Equality => "equality",
            Classification::Violated => "violated",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compares `λ₁(h_t)` with `s/(n-1)`; equality within [`EQUALITY_TOL`].
pub fn yamabe_necessary_test(fam: &ProductFamily) -> NecessaryTest {
    let lambda1 = fam.product_lambda1();
    let threshold = fam.threshold();
    if (lambda1 - threshold).abs() <= EQUALITY_TOL {
        NecessaryTest::Equality
    } else if lambda1 > threshold {
        NecessaryTest::Holds
    } else {
        NecessaryTest::Violated
    }
}

/// [`yamabe_necessary_test`], with `t = 1` reported as `einstein`.
pub fn classify(fam: &ProductFamily) -> Classification {
    if (fam.t() - 1.0).abs() <= EINSTEIN_TOL {
        return Classification::Einstein;
    }
    match yamabe_necessary_test(fam) {
        NecessaryTest::Holds => Classification::NecessaryHolds,
        NecessaryTest::Equality => Classification::Equality,
        NecessaryTest::Violated => Classification::Violated,
    }
}

/// `k/(k-1)`: the test holds on `[1, k/(k-1)]` and fails beyond.
pub fn critical_parameter(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(YamabeError::InvalidDimension { min: 2, got: k as i64 });
    }
    Ok(k as f64 / (k as f64 - 1.0))
}

/// Explicit conformal factor `1 + τ f` with lower energy than `h_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Identifier of `f`; always the first ambient coordinate of the sphere.
    pub function: String,
    pub tau: f64,
    pub energy: f64,
    pub perturbed_energy: f64,
    /// `energy - perturbed_energy`, positive.
    pub drop: f64,
    /// `|c₂| τ²` from the second variation.
    pub predicted_drop: f64,
    /// `⨍ f dμ`, zero up to rounding.
    pub mean: f64,
}

impl Certificate {
    pub fn relative_error(&self) -> f64 {
        (self.drop - self.predicted_drop).abs() / self.predicted_drop
    }
}

fn certificate_space(fam: &ProductFamily) -> Result<ProductSpace> {
    ProductSpace::new(*fam, 1, CERTIFICATE_DEGREE, TrialSpace::Zonal, ExecPolicy::Sequential)
}

/// Perturbs `h_t` by `u = 1 + τ x¹` and measures the energy drop.
///
/// Starts at `tau` and halves it until the measured drop is positive and
/// within [`CERTIFICATE_REL_TOL`] of the quadratic prediction; close to the
/// critical parameter the quartic term needs a smaller step.
pub fn destabilizing_direction(fam: &ProductFamily, tau: f64) -> Result<Certificate> {
    if yamabe_necessary_test(fam) != NecessaryTest::Violated {
        return Err(YamabeError::NotViolated { lambda1: fam.product_lambda1(), threshold: fam.threshold() });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("certificate step must be positive, got {tau}")));
    }
    let space = certificate_space(fam)?;
    let f = space.sphere_coordinate(0)?;
    let coef = expansion_coefficient(&space, &f)?;
    let energy = perturbation_energy(&space, &f, 0.0)?;
    let mean = space.integrate_nodes(&space.node_values(&f)?) / space.volume();
    let mut step = tau;
    for _ in 0..=MAX_HALVINGS {
        let perturbed_energy = perturbation_energy(&space, &f, step)?;
        let cert = Certificate {
            function: "x1".to_string(),
            tau: step,
            energy,
            perturbed_energy,
            drop: energy - perturbed_energy,
            predicted_drop: -coef * step * step,
            mean,
        };
        if cert.drop > 0.0 && cert.relative_error() <= CERTIFICATE_REL_TOL {
            return Ok(cert);
        }
        step *= 0.5;
    }
    Err(YamabeError::NoCertificate { tau })
}

/// One point of a `t`-sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub t: f64,
    pub scalar: f64,
    pub lambda1: f64,
    pub threshold: f64,
    pub classification: Classification,
    pub eh_energy: f64,
    pub minimizer_estimate: Option<f64>,
    pub certificate: Option<Certificate>,
}

impl ScanRecord {
    /// Closed-form fields only.
    pub fn closed_form(fam: &ProductFamily) -> Self {
        ScanRecord {
            t: fam.t(),
            scalar: fam.scalar_curvature(),
            lambda1: fam.product_lambda1(),
            threshold: fam.threshold(),
            classification: classify(fam),
            eh_energy: eh_energy(fam),
            minimizer_estimate: None,
            certificate: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub with_minimizer: bool,
    pub minimizer: MinimizeOptions,
    pub l_max: u32,
    pub degree: usize,
    pub trial: TrialSpace,
    /// Attach a [`Certificate`] to every violated point (sphere factors only).
    pub certificates: bool,
    pub exec: ExecPolicy,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            with_minimizer: false,
            minimizer: MinimizeOptions::default(),
            l_max: 6,
            degree: 24,
            trial: TrialSpace::Zonal,
            certificates: true,
            exec: ExecPolicy::Parallel,
        }
    }
}

/// `steps` uniformly spaced values from `t_min` to `t_max`, endpoints included.
/// A single step evaluates `t_min` alone and accepts `t_min == t_max`.
pub fn scan_grid(t_min: f64, t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_min >= 1.0) || !t_max.is_finite() {
        return Err(invalid(format!("t must be ≥ 1, got t_min = {t_min}")));
    }
    match steps {
        0 => Err(invalid("scan needs at least one step")),
        1 if t_max >= t_min => Ok(vec![t_min]),
        _ if t_max > t_min => {
            let span = t_max - t_min;
            let last = (steps - 1) as f64;
            Ok((0..steps).map(|i| if i + 1 == steps { t_max } else { t_min + span * i as f64 / last }).collect())
        }
        _ => Err(invalid(format!("empty t range [{t_min}, {t_max}]"))),
    }
}

fn scan_point(template: &ProductFamily, t: f64, opts: &ScanOptions) -> Result<ScanRecord> {
    let fam = template.with_t(t)?;
    let mut rec = ScanRecord::closed_form(&fam);
    let grid_ok = fam.factor().radius().is_some();
    if opts.certificates && grid_ok && rec.classification == Classification::Violated {
        rec.certificate = match destabilizing_direction(&fam, CERTIFICATE_TAU) {
            Ok(cert) => Some(cert),
            // closed-form records are still meaningful beyond the gridded dimensions
            Err(YamabeError::UnsupportedGrid(_)) => None,
            Err(e) => return Err(e),
        };
    }
    if opts.with_minimizer {
        let space = ProductSpace::new(fam, opts.l_max, opts.degree, opts.trial, opts.minimizer.exec)?;
        rec.minimizer_estimate = Some(minimize_quotient(&space, &opts.minimizer)?.estimate);
    }
    Ok(rec)
}

/// Evaluates the family at each point of [`scan_grid`]; records come back in
/// `t` order whatever the execution policy.
pub fn scan(
    template: &ProductFamily,
    t_min: f64,
    t_max: f64,
    steps: usize,
    opts: &ScanOptions,
) -> Result<Vec<ScanRecord>> {
    let ts = scan_grid(t_min, t_max, steps)?;
    map_indexed(opts.exec, ts.len(), |i| scan_point(template, ts[i], opts)).into_iter().collect()
}

/// Where on the grid the minimizer first found energy below `ℰ(h_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketKind {
    /// Last passing point and first failing point.
    Straddle,
    /// The first grid point already fails.
    NoPassingPoint,
    /// No point fails.
    AllPass,
}

/// Numerical bracket for the largest `T` such that `h_t` looks Yamabe on
/// `[1, T]`. A passing point only means the search found nothing lower, so
/// the result is heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalTBracket {
    pub t_low: f64,
    pub t_high: f64,
    pub kind: BracketKind,
    pub degenerate: bool,
    pub heuristic: bool,
}

/// Brackets the end of the longest prefix of `records` (in `t` order) whose
/// estimates satisfy `estimate ≥ eh_energy - tol`.
pub fn bracket_maximal_t(records: &[ScanRecord], tol: f64) -> Result<MaximalTBracket> {
    if records.is_empty() {
        return Err(invalid("bracket needs at least one scan record"));
    }
    let estimates = records
        .iter()
        .map(|r| r.minimizer_estimate.ok_or_else(|| invalid(format!("no minimizer estimate at t = {}", r.t))))
        .collect::<Result<Vec<f64>>>()?;
    let prefix = records.iter().zip(&estimates).take_while(|(r, e)| **e >= r.eh_energy - tol).count();
    let first = records[0].t;
    let last = records[records.len() - 1].t;
    let (t_low, t_high, kind) = match prefix {
        0 => (first, first, BracketKind::NoPassingPoint),
        p if p == records.len() => (last, last, BracketKind::AllPass),
        p => (records[p - 1].t, records[p].t, BracketKind::Straddle),
    };
    Ok(MaximalTBracket { t_low, t_high, kind, degenerate: kind != BracketKind::Straddle, heuristic: true })
}
