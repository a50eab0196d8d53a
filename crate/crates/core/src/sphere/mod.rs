//! Round-sphere geometry: volumes, Laplace spectra, quadrature grids and
//! harmonic bases.
//!
//! The Laplacian throughout is the positive operator `Δ = d*d`, so the
//! spectrum of the unit `k`-sphere is `j (j + k - 1)`, `j = 0, 1, 2, ...`.

mod harmonics;
mod quadrature;

pub use harmonics::{harmonic_basis, zonal_basis, BasisFunction, SpectralBasis};
pub use quadrature::{gauss_grid, gauss_legendre, pairwise_sum, QuadratureGrid};

use crate::error::{Result, YamabeError};
use std::f64::consts::PI;

/// `Γ(m / 2)` for a positive integer `m`, by the half-integer recurrence.
pub(crate) fn gamma_half(m: u32) -> f64 {
    assert!(m > 0, "gamma_half needs a positive argument");
    let (mut value, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target {
        value *= x;
        x += 1.0;
    }
    value
}

/// `k`-volume of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub fn sphere_volume(k: i64) -> Result<f64> {
    if k < 1 {
        return Err(YamabeError::InvalidDimension { min: 1, got: k });
    }
    let half = (k + 1) as u32;
    Ok(2.0 * PI.powf(half as f64 / 2.0) / gamma_half(half))
}

/// Eigenvalue `j (j + k - 1)` of `Δ` on degree-`j` harmonics of the unit `S^k`.
pub fn sphere_eigenvalue(k: i64, j: i64) -> Result<f64> {
    if k < 1 {
        return Err(YamabeError::InvalidDimension { min: 1, got: k });
    }
    if j < 0 {
        return Err(YamabeError::NegativeDegree(j));
    }
    Ok((j * (j + k - 1)) as f64)
}

fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of the space of degree-`j` spherical harmonics on `S^k`.
pub fn sphere_multiplicity(k: i64, j: i64) -> Result<u64> {
    if k < 1 {
        return Err(YamabeError::InvalidDimension { min: 1, got: k });
    }
    if j < 0 {
        return Err(YamabeError::NegativeDegree(j));
    }
    let (k, j) = (k as u64, j as u64);
    let lower = if j >= 2 { binomial(j + k - 2, k) } else { 0 };
    Ok(binomial(j + k, k) - lower)
}
