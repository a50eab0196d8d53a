//! The squeezed product family `h_t = g_unit ⊕ t⁻¹ h` on `S^k × X^ℓ`, where
//! `(X, h)` is Einstein with `Ric = (k - 1) h`.
//!
//! Every quantity here is a closed form; nothing is differentiated
//! numerically.

use crate::error::{invalid, Result, YamabeError};
use crate::sphere::sphere_volume;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorKind {
    Sphere { radius: f64 },
    Abstract,
}

/// A compact Einstein manifold `(X^ℓ, h)` described by its closed-form data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinFactor {
    dim: usize,
    einstein_constant: f64,
    volume: f64,
    lambda1: f64,
    kind: FactorKind,
}

impl EinsteinFactor {
    /// Round `ℓ`-sphere of the given radius.
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!(
                "a sphere factor needs dimension at least 2 to be positive Einstein, got {dim}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("sphere radius must be positive, got {radius}")));
        }
        let r2 = radius * radius;
        Ok(EinsteinFactor {
            dim,
            einstein_constant: (dim as f64 - 1.0) / r2,
            volume: radius.powi(dim as i32) * sphere_volume(dim as i64)?,
            lambda1: dim as f64 / r2,
            kind: FactorKind::Sphere { radius },
        })
    }

    /// Round `ℓ`-sphere scaled so that `Ric = einstein_constant · h`.
    pub fn sphere_with_einstein_constant(dim: usize, einstein_constant: f64) -> Result<Self> {
        if !(einstein_constant > 0.0) {
            return Err(invalid("einstein constant of a sphere factor must be positive"));
        }
        Self::sphere(dim, ((dim as f64 - 1.0) / einstein_constant).sqrt())
    }

    /// An Einstein factor known only through its closed-form data.
    pub fn abstract_factor(dim: usize, einstein_constant: f64, volume: f64, lambda1: f64) -> Result<Self> {
        if dim < 1 {
            return Err(YamabeError::InvalidDimension { min: 1, got: dim as i64 });
        }
        if !(volume > 0.0 && lambda1 > 0.0) {
            return Err(invalid("factor volume and lambda1 must be positive"));
        }
        Ok(EinsteinFactor { dim, einstein_constant, volume, lambda1, kind: FactorKind::Abstract })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn einstein_constant(&self) -> f64 {
        self.einstein_constant
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn radius(&self) -> Option<f64> {
        match self.kind {
            FactorKind::Sphere { radius } => Some(radius),
            FactorKind::Abstract => None,
        }
    }
}

/// `(S^k × X^ℓ, h_t)` with `h_t = g_unit ⊕ t⁻¹ h`, `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductFamily {
    k: usize,
    factor: EinsteinFactor,
    t: f64,
}

const EINSTEIN_TOL: f64 = 1e-12;

impl ProductFamily {
    pub fn new(k: usize, factor: EinsteinFactor, t: f64) -> Result<Self> {
        if k < 2 {
            return Err(YamabeError::InvalidDimension { min: 2, got: k as i64 });
        }
        if k + factor.dim() < 3 {
            return Err(invalid("total dimension n = k + l must be at least 3"));
        }
        if !(t >= 1.0) || !t.is_finite() {
            return Err(invalid(format!("t must be ≥ 1, got {t}")));
        }
        let expected = k as f64 - 1.0;
        if (factor.einstein_constant() - expected).abs() > EINSTEIN_TOL * expected.max(1.0) {
            return Err(invalid(format!(
                "factor must have Ricci curvature k - 1 = {expected}, got {}",
                factor.einstein_constant()
            )));
        }
        Ok(ProductFamily { k, factor, t })
    }

    /// `S^k × S^ℓ` with the `ℓ`-sphere scaled to Einstein constant `k - 1`.
    pub fn sphere_product(k: usize, l: usize, t: f64) -> Result<Self> {
        if k < 2 {
            return Err(YamabeError::InvalidDimension { min: 2, got: k as i64 });
        }
        let factor = EinsteinFactor::sphere_with_einstein_constant(l, k as f64 - 1.0)?;
        Self::new(k, factor, t)
    }

    /// Same sphere and factor, different squeezing parameter.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.k, self.factor, t)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.factor.dim()
    }

    pub fn n(&self) -> usize {
        self.k + self.factor.dim()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn factor(&self) -> &EinsteinFactor {
        &self.factor
    }

    /// `s = (k - 1)(k + t ℓ)`.
    pub fn scalar_curvature(&self) -> f64 {
        (self.k as f64 - 1.0) * (self.k as f64 + self.t * self.l() as f64)
    }

    /// Ricci eigenvalues against `h_t` on the sphere and factor blocks.
    pub fn ricci_block_eigenvalues(&self) -> (f64, f64) {
        (self.k as f64 - 1.0, self.t * self.factor.einstein_constant())
    }

    /// Trace of the block Ricci tensor; agrees with [`Self::scalar_curvature`].
    pub fn ricci_trace(&self) -> f64 {
        let (a, b) = self.ricci_block_eigenvalues();
        self.k as f64 * a + self.l() as f64 * b
    }

    /// `s / (n - 1)`, the right-hand side of the eigenvalue test.
    pub fn threshold(&self) -> f64 {
        self.scalar_curvature() / (self.n() as f64 - 1.0)
    }

    /// Block eigenvalues of `ρ = r - s/(n-1) h_t`.
    pub fn rho_block_eigenvalues(&self) -> (f64, f64) {
        let (a, b) = self.ricci_block_eigenvalues();
        let c = self.threshold();
        (a - c, b - c)
    }

    /// Volume `Vol(S^k) · Vol(X, h) · t^{-ℓ/2}`.
    pub fn volume(&self) -> f64 {
        sphere_volume(self.k as i64).expect("k >= 2") * self.factor.volume() * self.t.powf(-(self.l() as f64) / 2.0)
    }

    /// Smallest positive eigenvalue of `Δ` on the product:
    /// `min(k, t λ₁(X, h))`.
    pub fn product_lambda1(&self) -> f64 {
        (self.k as f64).min(self.t * self.factor.lambda1())
    }

    /// Lichnerowicz bound `n (k - 1)/(n - 1)` from `Ric ≥ (k - 1) h_t`.
    pub fn lichnerowicz_lower_bound(&self) -> f64 {
        let n = self.n() as f64;
        n * (self.k as f64 - 1.0) / (n - 1.0)
    }

    pub fn is_einstein(&self) -> bool {
        let (a, b) = self.ricci_block_eigenvalues();
        (a - b).abs() <= EINSTEIN_TOL * a.abs().max(1.0)
    }

    pub fn to_spec(&self) -> FamilySpec {
        FamilySpec {
            k: self.k,
            l: self.l(),
            t: self.t,
            factor: match self.factor.kind() {
                FactorKind::Sphere { .. } => FactorTag::Sphere,
                FactorKind::Abstract => FactorTag::Abstract,
            },
            volume: match self.factor.kind() {
                FactorKind::Sphere { .. } => None,
                FactorKind::Abstract => Some(self.factor.volume()),
            },
            lambda1: match self.factor.kind() {
                FactorKind::Sphere { .. } => None,
                FactorKind::Abstract => Some(self.factor.lambda1()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorTag {
    Sphere,
    Abstract,
}

/// Serialized family, e.g. `{"k":2,"l":2,"t":2.0,"factor":"sphere"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub k: usize,
    pub l: usize,
    pub t: f64,
    pub factor: FactorTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
}

impl TryFrom<FamilySpec> for ProductFamily {
    type Error = YamabeError;

    fn try_from(spec: FamilySpec) -> Result<Self> {
        match spec.factor {
            FactorTag::Sphere => ProductFamily::sphere_product(spec.k, spec.l, spec.t),
            FactorTag::Abstract => {
                let (Some(volume), Some(lambda1)) = (spec.volume, spec.lambda1) else {
                    return Err(invalid("abstract factor needs volume and lambda1"));
                };
                let factor = EinsteinFactor::abstract_factor(spec.l, spec.k as f64 - 1.0, volume, lambda1)?;
                ProductFamily::new(spec.k, factor, spec.t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fam(k: usize, l: usize, t: f64) -> ProductFamily {
        ProductFamily::sphere_product(k, l, t).unwrap()
    }

    #[test]
    fn scalar_curvature_examples() {
        assert_eq!(fam(2, 2, 2.0).scalar_curvature(), 6.0);
        assert_eq!(fam(2, 2, 1.0).scalar_curvature(), 4.0);
        // two S^3 factors, each of scalar curvature 6
        assert_eq!(fam(3, 3, 1.0).scalar_curvature(), 12.0);
        assert_eq!(fam(3, 3, 1.0).ricci_trace(), 12.0);
    }

    #[test]
    fn ricci_and_rho_blocks() {
        assert_eq!(fam(2, 2, 2.0).ricci_block_eigenvalues(), (1.0, 2.0));
        let (a, b) = fam(3, 2, 1.0).ricci_block_eigenvalues();
        assert_eq!(a, 2.0);
        assert_relative_eq!(b, 2.0, max_relative = 1e-14);
        let f = fam(2, 2, 1.5);
        assert_eq!(f.ricci_block_eigenvalues(), (1.0, 1.5));
        assert_eq!(f.ricci_trace(), 5.0);
        assert_eq!(fam(2, 2, 2.0).rho_block_eigenvalues(), (-1.0, 0.0));
        let (a, b) = f.rho_block_eigenvalues();
        assert_relative_eq!(a, -2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(b, -1.0 / 6.0, max_relative = 1e-14);
        let (a, b) = fam(3, 3, 1.0).rho_block_eigenvalues();
        assert_eq!(a, b);
        assert_relative_eq!(a, 2.0 - 12.0 / 5.0, max_relative = 1e-15);
    }

    #[test]
    fn volumes() {
        assert_relative_eq!(fam(2, 2, 1.0).volume(), 16.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(fam(2, 2, 2.0).volume(), 8.0 * PI * PI, max_relative = 1e-14);
        // S^2 of radius 1/√2 at t = 1 for k = 3
        assert_relative_eq!(fam(3, 2, 1.0).volume(), 2.0 * PI * PI * 2.0 * PI, max_relative = 1e-14);
        let f = ProductFamily::new(3, EinsteinFactor::sphere(2, 1.0 / 2f64.sqrt()).unwrap(), 1.0);
        assert!(f.is_ok());
    }

    #[test]
    fn lambda1_and_lichnerowicz() {
        for t in [1.0, 1.5, 2.0, 3.0] {
            assert_eq!(fam(2, 2, t).product_lambda1(), 2.0);
        }
        assert_relative_eq!(fam(2, 2, 1.0).lichnerowicz_lower_bound(), 4.0 / 3.0, max_relative = 1e-15);
        assert!(ProductFamily::sphere_product(2, 2, 0.9).is_err());
        // ℓ > k: the factor supplies the bass note at t = 1
        assert_relative_eq!(fam(2, 3, 1.0).product_lambda1(), 1.5, max_relative = 1e-15);
    }

    #[test]
    fn einstein_only_at_t_one() {
        assert!(fam(2, 2, 1.0).is_einstein());
        assert!(!fam(2, 2, 1.0 + 1e-9).is_einstein());
    }

    #[test]
    fn static_critical_coincidence() {
        for k in 2..6 {
            let tc = k as f64 / (k as f64 - 1.0);
            let (a, b) = fam(k, k, tc).rho_block_eigenvalues();
            assert!((a + 1.0).abs() < 1e-12 && b.abs() < 1e-12, "k={k}: {a} {b}");
            let (a, _) = fam(k, k, tc + 0.01).rho_block_eigenvalues();
            assert!((a + 1.0).abs() > 1e-4);
        }
    }

    #[test]
    fn rejects_mismatched_factor() {
        let f = EinsteinFactor::sphere(2, 1.0).unwrap();
        assert!(ProductFamily::new(3, f, 1.0).is_err());
        assert!(EinsteinFactor::sphere(1, 1.0).is_err());
    }

    #[test]
    fn sphere_factor_consistency() {
        let f = EinsteinFactor::sphere(3, 0.7).unwrap();
        assert_relative_eq!(f.einstein_constant(), 2.0 / 0.49, max_relative = 1e-12);
        assert_relative_eq!(f.lambda1(), 3.0 / 0.49, max_relative = 1e-12);
        assert_relative_eq!(f.volume(), 0.7f64.powi(3) * 2.0 * PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn spec_json_shape() {
        let spec = fam(2, 2, 2.0).to_spec();
        let back = ProductFamily::try_from(spec).unwrap();
        assert_eq!(back, fam(2, 2, 2.0));
        assert_eq!(spec.factor, FactorTag::Sphere);
    }

    proptest! {
        #[test]
        fn trace_consistency(k in 2usize..=3, l in 2usize..=3, t in 1.0f64..4.0) {
            let f = fam(k, l, t);
            let kf = k as f64;
            let block = kf * (kf - 1.0) + l as f64 * t * (kf - 1.0);
            prop_assert!((block - f.scalar_curvature()).abs() <= 1e-12 * block);
            prop_assert!((f.ricci_trace() - f.scalar_curvature()).abs() <= 1e-12 * block);
        }

        #[test]
        fn lichnerowicz_is_a_lower_bound(k in 2usize..=4, l in 2usize..=4, t in 1.0f64..4.0) {
            let f = fam(k, l, t);
            prop_assert!(f.lichnerowicz_lower_bound() <= f.product_lambda1() + 1e-12);
        }
    }
}
