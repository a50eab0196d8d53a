//! Static potentials on the critical squeezed product: the potential `f = x¹`
//! pulled back from the sphere factor, exact block-curvature residuals, the
//! geodesic ODE, the zero set `Z = f⁻¹(0)`, and the Einstein metric
//! `g + f² dθ²` identified with a round join.

mod geodesic;
mod upstairs;

pub use geodesic::{TangentVector, ZeroSetReport, GEODESIC_STEPS};
pub use upstairs::{upstairs_identification, upstairs_sample_grid, UpstairsReport};

use crate::error::{invalid, Result};
use crate::exec::ExecPolicy;
use crate::functional::{conformal_exponent, ProductSpace, TrialSpace};
use crate::product::{FamilySpec, ProductFamily};
use crate::scan::critical_parameter;
use serde::Serialize;

/// Residuals at or below this mark a candidate as static.
pub const STATIC_TOL: f64 = 1e-8;

/// Degree of the Galerkin basis used for co-kernel pairings.
pub const COKERNEL_LMAX: u32 = 4;

/// `f = slope · x¹ + offset` on the unit sphere factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potential {
    pub slope: f64,
    pub offset: f64,
}

impl Potential {
    pub const X1: Potential = Potential { slope: 1.0, offset: 0.0 };

    pub fn constant(c: f64) -> Self {
        Potential { slope: 0.0, offset: c }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.slope * x[0] + self.offset
    }

    /// Gradient of the ambient extension.
    fn ambient_gradient(&self, dim: usize) -> Vec<f64> {
        let mut g = vec![0.0; dim];
        g[0] = self.slope;
        g
    }

    /// Flips the sign when needed so that `∫_{x¹>0} f dμ > 0`.
    fn normalized(self) -> (Self, bool) {
        let lead = if self.slope != 0.0 { self.slope } else { self.offset };
        if lead < 0.0 {
            (Potential { slope: -self.slope, offset: -self.offset }, true)
        } else {
            (self, false)
        }
    }
}

/// Orthonormal basis of `T_x S^k = x^⊥` (Gram–Schmidt on the coordinate axes).
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut basis: Vec<Vec<f64>> = vec![x.to_vec()];
    for axis in 0..m {
        let mut v = vec![0.0; m];
        v[axis] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= d * bi);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|vi| *vi /= norm);
            basis.push(v);
        }
        if basis.len() == m {
            break;
        }
    }
    basis.split_off(1)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A function on `(S^k × X, h_t)` pulled back from the sphere, with exact
/// value, gradient and Hessian evaluators.
///
/// Every quantity below is independent of the point on `X`, so node sets
/// consist of sphere points only: the sphere quadrature nodes plus the poles
/// `±e₁`.
#[derive(Debug, Clone)]
pub struct StaticCandidate {
    family: ProductFamily,
    potential: Potential,
    sign_flipped: bool,
    space: ProductSpace,
    nodes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `sup |(Δf) g + ∇∇f - f r|`, entrywise in an orthonormal frame.
    pub static_residual: f64,
    /// `sup |Δf - s/(n-1) f|`.
    pub trace_residual: f64,
    /// `sup |∇∇f - ρ f|`, entrywise in an orthonormal frame.
    pub hessian_residual: f64,
    /// `∫ |∇f|² dμ / ∫ f² dμ`.
    pub rayleigh: f64,
    /// `|∫ f dμ|`.
    pub mean: f64,
}

impl StaticCandidate {
    /// `f = x¹` on the family at `t = k/(k-1)` with a round `S^ℓ` factor.
    pub fn critical(k: usize, l: usize) -> Result<Self> {
        let fam = ProductFamily::sphere_product(k, l, critical_parameter(k)?)?;
        Self::new(fam, Potential::X1)
    }

    pub fn new(family: ProductFamily, potential: Potential) -> Result<Self> {
        let space = ProductSpace::new(
            family,
            COKERNEL_LMAX,
            2 * COKERNEL_LMAX as usize,
            TrialSpace::Full,
            ExecPolicy::Sequential,
        )?;
        let (potential, sign_flipped) = potential.normalized();
        let m = family.k() + 1;
        let mut nodes: Vec<Vec<f64>> = space.sphere_grid().nodes().map(<[f64]>::to_vec).collect();
        for sign in [1.0, -1.0] {
            let mut pole = vec![0.0; m];
            pole[0] = sign;
            nodes.push(pole);
        }
        Ok(StaticCandidate { family, potential, sign_flipped, space, nodes })
    }

    pub fn family(&self) -> &ProductFamily {
        &self.family
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    /// Whether the supplied potential was negated by sign normalization.
    pub fn sign_flipped(&self) -> bool {
        self.sign_flipped
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    /// Sphere points at which residuals are evaluated.
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.potential.value(x)
    }

    /// Gradient of `f` at `x`, as an ambient vector tangent to the sphere.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.potential.ambient_gradient(x.len());
        let radial = dot(&g, x);
        g.iter().zip(x).map(|(gi, xi)| gi - radial * xi).collect()
    }

    /// `∇∇f(u, v)` for tangent vectors at `x`:
    /// `D²F(u, v) - (x · ∇F) ⟨u, v⟩`, and `D²F = 0` for an affine `F`.
    pub fn hessian(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let radial = dot(&self.potential.ambient_gradient(x.len()), x);
        -radial * dot(u, v)
    }

    /// Positive Laplacian `Δf = -tr ∇∇f`.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        -tangent_frame(x).iter().map(|e| self.hessian(x, e, e)).sum::<f64>()
    }

    /// Sphere block of the Hessian in [`tangent_frame`].
    fn hessian_block(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let frame = tangent_frame(x);
        frame.iter().map(|a| frame.iter().map(|b| self.hessian(x, a, b)).collect()).collect()
    }

    /// Largest entry of `hess ⊕ 0 + diag(α I_k, β I_ℓ)` where `(α, β)` is
    /// supplied per node.
    fn block_residual(&self, coefficients: impl Fn(&[f64]) -> (f64, f64)) -> f64 {
        let mut worst = 0.0f64;
        for x in &self.nodes {
            let h = self.hessian_block(x);
            let (alpha, beta) = coefficients(x);
            for (i, row) in h.iter().enumerate() {
                for (j, &hij) in row.iter().enumerate() {
                    let entry = if i == j { hij + alpha } else { hij };
                    worst = worst.max(entry.abs());
                }
            }
            if self.family.l() > 0 {
                worst = worst.max(beta.abs());
            }
        }
        worst
    }

    /// `sup_nodes |(Δf) g + ∇∇f - f r|` with `r = (k-1) g_unit ⊕ (k-1) h`.
    pub fn static_residual(&self) -> f64 {
        let (r1, r2) = self.family.ricci_block_eigenvalues();
        self.block_residual(|x| {
            let (f, lap) = (self.value(x), self.laplacian(x));
            (lap - f * r1, lap - f * r2)
        })
    }

    /// `sup_nodes |Δf - (s/(n-1)) f|`.
    pub fn trace_identity(&self) -> f64 {
        let c = self.family.threshold();
        self.nodes.iter().map(|x| (self.laplacian(x) - c * self.value(x)).abs()).fold(0.0, f64::max)
    }

    /// `sup_nodes |∇∇f - ρ f|` with `ρ = r - s/(n-1) h_t`.
    pub fn hessian_identity(&self) -> f64 {
        let (p1, p2) = self.family.rho_block_eigenvalues();
        self.block_residual(|x| {
            let f = self.value(x);
            (-p1 * f, -p2 * f)
        })
    }

    /// Sphere-only form `sup_nodes |∇∇f + f g_unit|`.
    pub fn sphere_hessian_identity(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in &self.nodes {
            let f = self.value(x);
            for (i, row) in self.hessian_block(x).iter().enumerate() {
                for (j, &hij) in row.iter().enumerate() {
                    let entry = if i == j { hij + f } else { hij };
                    worst = worst.max(entry.abs());
                }
            }
        }
        worst
    }

    /// `∫_M a dμ` for `a` pulled back from the sphere.
    fn sphere_integral(&self, a: impl Fn(&[f64]) -> f64) -> f64 {
        let factor_volume: f64 = crate::sphere::pairwise_sum(self.space.factor_weights());
        self.space.sphere_grid().integrate(a) * factor_volume
    }

    /// `∫ |∇f|² dμ / ∫ f² dμ` by quadrature.
    pub fn rayleigh_quotient(&self) -> f64 {
        let grad = self.sphere_integral(|x| {
            let g = self.gradient(x);
            dot(&g, &g)
        });
        let mass = self.sphere_integral(|x| self.value(x).powi(2));
        grad / mass
    }

    /// `∫ f dμ`.
    pub fn mean(&self) -> f64 {
        self.sphere_integral(|x| self.value(x))
    }

    /// `max_nodes |f|`.
    pub fn max_abs(&self) -> f64 {
        self.nodes.iter().map(|x| self.value(x).abs()).fold(0.0, f64::max)
    }

    pub fn residuals(&self) -> ResidualReport {
        ResidualReport {
            static_residual: self.static_residual(),
            trace_residual: self.trace_identity(),
            hessian_residual: self.hessian_identity(),
            rayleigh: self.rayleigh_quotient(),
            mean: self.mean().abs(),
        }
    }

    /// `∫ f ((n-1) Δφ - s φ) dμ` for the basis function `φ_i ⊗ ψ_j` with
    /// flat index `phi` in [`Self::space`].
    pub fn cokernel_pairing(&self, phi: usize) -> Result<f64> {
        let sp = &self.space;
        if phi >= sp.dim() {
            return Err(invalid(format!("basis index {phi} out of range (dimension {})", sp.dim())));
        }
        let l2 = sp.factor_basis().len();
        let (i, j) = (phi / l2, phi % l2);
        let sb = sp.sphere_basis();
        let fb = sp.factor_basis();
        let sphere_part = sp
            .sphere_grid()
            .weights()
            .iter()
            .enumerate()
            .map(|(a, w)| w * self.value(sp.sphere_grid().node(a)) * sb.node_value(a, i));
        let sphere_part: f64 = crate::sphere::pairwise_sum(&sphere_part.collect::<Vec<_>>());
        let factor_terms: Vec<f64> =
            sp.factor_weights().iter().enumerate().map(|(b, w)| w * fb.node_value(b, j)).collect();
        let factor_part = crate::sphere::pairwise_sum(&factor_terms);
        let n = self.family.n() as f64;
        let multiplier = (n - 1.0) * sp.eigenvalues()[phi] - self.family.scalar_curvature();
        Ok(multiplier * sphere_part * factor_part)
    }

    /// Largest `|cokernel_pairing|` over the whole basis.
    pub fn max_cokernel_pairing(&self) -> Result<f64> {
        (0..self.space.dim()).try_fold(0.0f64, |acc, phi| Ok(acc.max(self.cokernel_pairing(phi)?.abs())))
    }

    /// Spread `max - min` over product nodes of `((p+2)Δu + s u)/u^{p-1}` at
    /// `u ≡ 1`; zero when the scalar curvature is constant.
    pub fn scalar_constancy(&self) -> Result<f64> {
        let sp = &self.space;
        let one = sp.constant();
        let u = sp.node_values(&one)?;
        let lap = sp.node_values(&sp.apply_laplacian(&one))?;
        let p = conformal_exponent(self.family.n());
        let s = self.family.scalar_curvature();
        let vals = u.iter().zip(&lap).map(|(&u, &lu)| ((p + 2.0) * lu + s * u) / u.powf(p - 1.0));
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Ok(hi - lo)
    }
}

/// Geodesic ODE deviations for three canonical unit velocities at the pole
/// `e₁`: along the sphere, along the factor, and split evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicChecks {
    pub sphere: f64,
    pub factor: f64,
    pub mixed: f64,
}

/// Everything the `static-check` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct StaticReport {
    pub family: FamilySpec,
    pub critical_t: f64,
    pub potential: Potential,
    pub sign_flipped: bool,
    pub threshold: f64,
    pub residuals: ResidualReport,
    pub sphere_hessian_residual: f64,
    pub max_abs_f: f64,
    pub scalar_constancy: f64,
    pub geodesic: GeodesicChecks,
    pub zero_set: ZeroSetReport,
    pub cokernel_max: f64,
    pub cokernel_basis_size: usize,
    pub upstairs: UpstairsReport,
    pub is_static: bool,
    /// `-f` solves the same linear equation, giving a second Einstein metric.
    pub reflected_potential_static: bool,
}

/// Number of `Z` samples and upstairs `(r, θ)` samples in [`static_check`].
pub const REPORT_SAMPLES: usize = 100;

/// Runs every check on `cand`.
pub fn static_check(cand: &StaticCandidate) -> Result<StaticReport> {
    let fam = cand.family();
    let k = fam.k();
    let mut pole = vec![0.0; k + 1];
    pole[0] = 1.0;
    let mut e2 = vec![0.0; k + 1];
    e2[1] = 1.0;
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut factor_dir = vec![0.0; fam.l()];
    factor_dir[0] = 1.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let sphere_v = TangentVector::new(e2.clone(), vec![0.0; fam.l()]);
    let factor_v = TangentVector::new(vec![0.0; k + 1], factor_dir.clone());
    let mixed_v =
        TangentVector::new(e2.iter().map(|v| v * half).collect(), factor_dir.iter().map(|v| v * half).collect());
    let geodesic = GeodesicChecks {
        sphere: cand.geodesic_transport(&pole, &sphere_v, two_pi, GEODESIC_STEPS)?,
        factor: cand.geodesic_transport(&pole, &factor_v, two_pi, GEODESIC_STEPS)?,
        mixed: cand.geodesic_transport(&pole, &mixed_v, two_pi, GEODESIC_STEPS)?,
    };
    let residuals = cand.residuals();
    let is_static = residuals.static_residual <= STATIC_TOL;
    Ok(StaticReport {
        family: fam.to_spec(),
        critical_t: critical_parameter(k)?,
        potential: cand.potential(),
        sign_flipped: cand.sign_flipped(),
        threshold: fam.threshold(),
        residuals,
        sphere_hessian_residual: cand.sphere_hessian_identity(),
        max_abs_f: cand.max_abs(),
        scalar_constancy: cand.scalar_constancy()?,
        geodesic,
        zero_set: cand.zero_set_diagnostics(REPORT_SAMPLES)?,
        cokernel_max: cand.max_cokernel_pairing()?,
        cokernel_basis_size: cand.space().dim(),
        upstairs: upstairs_identification(fam, &upstairs_sample_grid(10, 10))?,
        is_static,
        reflected_potential_static: is_static,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn critical() -> StaticCandidate {
        StaticCandidate::critical(2, 2).unwrap()
    }

    #[test]
    fn genuine_example_is_static() {
        let c = critical();
        let r = c.residuals();
        assert!(r.static_residual <= 1e-12, "{r:?}");
        assert!(r.trace_residual <= 1e-12);
        assert!(r.hessian_residual <= 1e-12);
        assert_relative_eq!(r.rayleigh, 2.0, max_relative = 1e-12);
        assert!(r.mean <= 1e-10);
        assert_relative_eq!(c.max_abs(), 1.0, max_relative = 1e-15);
        assert!(c.sphere_hessian_identity() <= 1e-15);
    }

    #[test]
    fn constants_are_not_static() {
        let c = StaticCandidate::new(*critical().family(), Potential::constant(1.0)).unwrap();
        // r has entries k - 1 = 1 and t(k - 1) = 2
        assert_relative_eq!(c.static_residual(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.trace_identity(), 2.0, max_relative = 1e-15);
        assert_eq!(c.rayleigh_quotient(), 0.0);
    }

    #[test]
    fn off_critical_block_mismatch() {
        let fam = ProductFamily::sphere_product(2, 2, 1.5).unwrap();
        let c = StaticCandidate::new(fam, Potential::X1).unwrap();
        assert_relative_eq!(c.static_residual(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn k3_trace_identity() {
        let c = StaticCandidate::critical(3, 2).unwrap();
        assert_eq!(c.family().threshold(), 3.0);
        assert!(c.trace_identity() <= 1e-12);
        assert_relative_eq!(c.rayleigh_quotient(), 3.0, max_relative = 1e-12);
        assert!(c.static_residual() <= 1e-12);
    }

    #[test]
    fn laplacian_of_x1_is_k_x1() {
        for k in [2usize, 3] {
            let c = StaticCandidate::critical(k, 2).unwrap();
            for x in c.nodes() {
                assert!((c.laplacian(x) - k as f64 * x[0]).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn sign_normalization() {
        let fam = *critical().family();
        let c = StaticCandidate::new(fam, Potential { slope: -1.0, offset: 0.0 }).unwrap();
        assert!(c.sign_flipped());
        assert_eq!(c.potential(), Potential::X1);
        let half: f64 = c.space().sphere_grid().integrate(|x| if x[0] > 0.0 { c.value(x) } else { 0.0 });
        assert!(half > 0.0);
    }

    #[test]
    fn hessian_matches_second_differences_along_geodesics() {
        let c = StaticCandidate::critical(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nx = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            let frame = tangent_frame(&x);
            let coeffs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v = vec![0.0; 4];
            for (cf, e) in coeffs.iter().zip(&frame) {
                v.iter_mut().zip(e).for_each(|(vi, ei)| *vi += cf * ei);
            }
            let nv = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|vi| *vi /= nv);
            let along = |s: f64| -> f64 {
                let p: Vec<f64> = x.iter().zip(&v).map(|(a, b)| s.cos() * a + s.sin() * b).collect();
                c.value(&p)
            };
            let fd = (along(h) - 2.0 * along(0.0) + along(-h)) / (h * h);
            assert!((fd - c.hessian(&x, &v, &v)).abs() <= 1e-6);
        }
    }

    #[test]
    fn tangent_frames_are_orthonormal() {
        let x = [0.6, 0.0, 0.8, 0.0];
        let f = tangent_frame(&x);
        assert_eq!(f.len(), 3);
        for (i, a) in f.iter().enumerate() {
            assert!(dot(a, &x).abs() <= 1e-15);
            for (j, b) in f.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn cokernel_vanishes_on_the_critical_family() {
        let c = critical();
        assert!(c.max_cokernel_pairing().unwrap() <= 1e-10);
        assert_eq!(c.space().dim(), 25 * 25);
        // off critical, the x¹ mode pairs nontrivially
        let fam = ProductFamily::sphere_product(2, 2, 1.5).unwrap();
        let off = StaticCandidate::new(fam, Potential::X1).unwrap();
        assert!(off.max_cokernel_pairing().unwrap() > 1.0);
        assert!(c.cokernel_pairing(c.space().dim()).is_err());
    }

    #[test]
    fn scalar_curvature_is_constant() {
        assert!(critical().scalar_constancy().unwrap() <= 1e-10);
    }

    #[test]
    fn full_report() {
        let r = static_check(&critical()).unwrap();
        assert!(r.is_static && r.reflected_potential_static);
        assert!(r.geodesic.sphere <= 1e-6 && r.geodesic.factor <= 1e-12 && r.geodesic.mixed <= 1e-6);
        assert!(r.upstairs.mismatch <= 1e-12);
        let off = StaticCandidate::new(ProductFamily::sphere_product(2, 2, 1.5).unwrap(), Potential::X1).unwrap();
        assert!(!static_check(&off).unwrap().is_static);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trace_residual_is_linear_in_distance_to_critical(k in 2usize..4, l in 2usize..4, dt in -0.45f64..1.5) {
            let tc = critical_parameter(k).unwrap();
            let t = tc + dt;
            prop_assume!(t >= 1.0);
            let fam = ProductFamily::sphere_product(k, l, t).unwrap();
            let c = StaticCandidate::new(fam, Potential::X1).unwrap();
            let slope = (l * (k - 1)) as f64 / (k + l - 1) as f64;
            prop_assert!((c.trace_identity() - slope * dt.abs()).abs() <= 1e-8);
        }
    }
}
