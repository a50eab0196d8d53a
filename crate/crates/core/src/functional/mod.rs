//! The normalized Einstein–Hilbert energy on the product family, the Yamabe
//! quotient in the conformal class `[h_t]`, its second variation along
//! eigenfunctions, and a Galerkin minimizer for the Yamabe constant.

mod minimize;
mod space;
mod variation;

pub use minimize::{
    minimize_quotient, MinimizeOptions, MinimizeResult, RestartStatus, RestartSummary, StartKind, TraceRow,
    POSITIVITY_FLOOR,
};
pub use space::{ConformalFactor, Evaluation, ProductSpace, TrialSpace};
pub use variation::{expansion_coefficient, perturbation_energy};

use crate::error::{Result, YamabeError};
use crate::product::ProductFamily;
use crate::sphere::{gamma_half, sphere_volume};
use serde::Serialize;
use std::f64::consts::PI;

/// Conformal exponent `p = 2n/(n - 2)`.
pub fn conformal_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// `ℰ(h_t) = s · V^{2/n}` (constant scalar curvature).
pub fn eh_energy(fam: &ProductFamily) -> f64 {
    fam.scalar_curvature() * fam.volume().powf(2.0 / fam.n() as f64)
}

/// `ℰ` of the round unit `n`-sphere, computed as `s V^{2/n}`.
pub fn round_sphere_energy(n: usize) -> Result<f64> {
    let v = sphere_volume(n as i64)?;
    Ok((n * (n - 1)) as f64 * v.powf(2.0 / n as f64))
}

/// Aubin's universal upper bound `n(n-1)π [2√π / Γ((n+1)/2)]^{2/n}`.
pub fn aubin_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(YamabeError::InvalidDimension { min: 3, got: n as i64 });
    }
    let nf = n as f64;
    let base = 2.0 * PI.sqrt() / gamma_half(n as u32 + 1);
    Ok(nf * (nf - 1.0) * PI * base.powf(2.0 / nf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub volume: f64,
    pub scalar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yamabe_quotient: Option<f64>,
    pub aubin_bound: f64,
}

impl EnergyReport {
    pub fn for_family(fam: &ProductFamily) -> Result<Self> {
        Ok(EnergyReport {
            energy: eh_energy(fam),
            volume: fam.volume(),
            scalar: fam.scalar_curvature(),
            yamabe_quotient: None,
            aubin_bound: aubin_constant(fam.n())?,
        })
    }
}
