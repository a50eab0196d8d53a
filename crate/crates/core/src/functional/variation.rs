//! Second variation of the energy along `u_τ = 1 + τ f`, `f` an eigenfunction.

use super::{eh_energy, ProductSpace};
use crate::error::Result;
use crate::product::ProductFamily;

/// `ℰ(u_τ^{p-2} h_t)` for `u_τ = 1 + τ f`.
pub fn perturbation_energy(space: &ProductSpace, f: &[f64], tau: f64) -> Result<f64> {
    let coeffs: Vec<f64> = space.constant().iter().zip(f).map(|(one, fv)| one + tau * fv).collect();
    let u = space.conformal_factor(coeffs)?;
    space.yamabe_quotient(&u)
}

/// The `τ²` coefficient of `ℰ(u_τ)` for an eigenfunction with eigenvalue
/// `lambda` and mean square `⨍ f²`:
/// `s V^{2/n} · (-4/(n-2)) · (1 - λ (n-1)/s) · ⨍ f²`.
pub fn second_variation_coefficient(fam: &ProductFamily, lambda: f64, mean_square: f64) -> f64 {
    let n = fam.n() as f64;
    let s = fam.scalar_curvature();
    eh_energy(fam) * (-4.0 / (n - 2.0)) * (1.0 - lambda * (n - 1.0) / s) * mean_square
}

/// [`second_variation_coefficient`] for a function given in the space's basis.
/// Fails unless `f` lies in a single eigenspace.
pub fn expansion_coefficient(space: &ProductSpace, f: &[f64]) -> Result<f64> {
    let lambda = space.eigenvalue_of(f)?;
    Ok(second_variation_coefficient(space.family(), lambda, space.mean_square(f)))
}
