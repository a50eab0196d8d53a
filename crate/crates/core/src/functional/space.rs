use super::conformal_exponent;
use crate::error::{invalid, Result, YamabeError};
use crate::exec::{map_indexed, ExecPolicy};
use crate::product::ProductFamily;
use crate::sphere::{gauss_grid, harmonic_basis, zonal_basis, QuadratureGrid, SpectralBasis};
use serde::{Deserialize, Serialize};

/// Trial space for conformal factors on `S^k × S^ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialSpace {
    /// Products of zonal harmonics `P_i(x¹) Q_j(y¹)`.
    #[default]
    Zonal,
    /// All products of harmonics of degree `≤ l_max` on each factor.
    Full,
}

/// Sphere rows handled by one parallel task. Fixed so that the reduction
/// order does not depend on the thread count.
const ROW_BLOCK: usize = 8;

/// Tensor-product discretization of `(S^k × S^ℓ, h_t)`: a quadrature grid and
/// a spectral basis on each factor.
///
/// Functions are stored as row-major coefficient matrices `C[i][j]` against
/// `φ_i ⊗ ψ_j`, where `φ_i` lives on the unit `S^k` and `ψ_j` on the unit
/// `S^ℓ`. The factor is isometric to a round `ℓ`-sphere of squared radius
/// `c = ρ² / t`, so its gradients pick up `1/c` and its weights `c^{ℓ/2}`.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    family: ProductFamily,
    trial: TrialSpace,
    exec: ExecPolicy,
    sphere_grid: QuadratureGrid,
    factor_grid: QuadratureGrid,
    sphere_basis: SpectralBasis,
    factor_basis: SpectralBasis,
    factor_weights: Vec<f64>,
    inv_factor_scale: f64,
    exponent: f64,
    int_exponent: Option<i32>,
    eigenvalues: Vec<f64>,
}

/// Quotient data for one coefficient matrix.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `∫ ((p+2)|∇u|² + s u²) dμ`
    pub numerator: f64,
    /// `∫ u^p dμ`
    pub power_integral: f64,
    pub quotient: f64,
    pub min_u: f64,
    pub gradient: Option<Vec<f64>>,
}

struct Partial {
    numerator: f64,
    power: f64,
    min_u: f64,
    grad_num: Vec<f64>,
    grad_pow: Vec<f64>,
}

/// A conformal factor `u > 0` with `g̃ = u^{p-2} h_t`, stored as basis
/// coefficients plus its values at every product node.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    coeffs: Vec<f64>,
    node_values: Vec<f64>,
    exponent: f64,
}

impl ConformalFactor {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn min_value(&self) -> f64 {
        self.node_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl ProductSpace {
    /// Builds grids exact to `degree` on both factors and bases of degree
    /// `≤ l_max`.
    pub fn new(family: ProductFamily, l_max: u32, degree: usize, trial: TrialSpace, exec: ExecPolicy) -> Result<Self> {
        let radius = family.factor().radius().ok_or_else(|| {
            invalid("grid numerics need a round sphere factor; abstract factors are closed-form only")
        })?;
        let (k, l) = (family.k(), family.l());
        let sphere_grid = gauss_grid(k, degree)?;
        let factor_grid = gauss_grid(l, degree)?;
        let (sphere_basis, factor_basis) = match trial {
            TrialSpace::Zonal => (zonal_basis(k, l_max, &sphere_grid)?, zonal_basis(l, l_max, &factor_grid)?),
            TrialSpace::Full => (harmonic_basis(k, l_max, &sphere_grid)?, harmonic_basis(l, l_max, &factor_grid)?),
        };
        let scale = radius * radius / family.t();
        let vol_scale = scale.powf(l as f64 / 2.0);
        let factor_weights = factor_grid.weights().iter().map(|w| w * vol_scale).collect();
        let inv_factor_scale = 1.0 / scale;
        let exponent = conformal_exponent(family.n());
        let int_exponent = (exponent.fract() == 0.0).then_some(exponent as i32);
        let mut eigenvalues = Vec::with_capacity(sphere_basis.len() * factor_basis.len());
        for i in 0..sphere_basis.len() {
            for j in 0..factor_basis.len() {
                eigenvalues.push(sphere_basis.eigenvalue(i) + inv_factor_scale * factor_basis.eigenvalue(j));
            }
        }
        Ok(ProductSpace {
            family,
            trial,
            exec,
            sphere_grid,
            factor_grid,
            sphere_basis,
            factor_basis,
            factor_weights,
            inv_factor_scale,
            exponent,
            int_exponent,
            eigenvalues,
        })
    }

    pub fn family(&self) -> &ProductFamily {
        &self.family
    }

    pub fn trial(&self) -> TrialSpace {
        self.trial
    }

    pub fn exec(&self) -> ExecPolicy {
        self.exec
    }

    pub fn with_exec(mut self, exec: ExecPolicy) -> Self {
        self.exec = exec;
        self
    }

    pub fn sphere_grid(&self) -> &QuadratureGrid {
        &self.sphere_grid
    }

    pub fn factor_grid(&self) -> &QuadratureGrid {
        &self.factor_grid
    }

    pub fn sphere_basis(&self) -> &SpectralBasis {
        &self.sphere_basis
    }

    pub fn factor_basis(&self) -> &SpectralBasis {
        &self.factor_basis
    }

    /// Factor quadrature weights including the `c^{ℓ/2}` volume scaling.
    pub fn factor_weights(&self) -> &[f64] {
        &self.factor_weights
    }

    /// `t / ρ²`: converts unit-sphere eigenvalues and squared gradients on
    /// the factor into those of `h_t`.
    pub fn inv_factor_scale(&self) -> f64 {
        self.inv_factor_scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Number of coefficients `L₁ · L₂`.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.sphere_grid.len() * self.factor_grid.len()
    }

    /// Quadrature volume of `(S^k × S^ℓ, h_t)`.
    pub fn volume(&self) -> f64 {
        self.sphere_grid.weight_sum() * crate::sphere::pairwise_sum(&self.factor_weights)
    }

    /// Laplace eigenvalue of `φ_i ⊗ ψ_j` in flat index `i L₂ + j`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn index(&self, sphere: usize, factor: usize) -> usize {
        sphere * self.factor_basis.len() + factor
    }

    /// Coefficients of the constant function `1`.
    pub fn constant(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        c[0] = 1.0;
        c
    }

    /// Coefficients of the raw ambient coordinate `x^{axis+1}` on the sphere
    /// factor, pulled back to the product.
    pub fn sphere_coordinate(&self, axis: usize) -> Result<Vec<f64>> {
        let b = self
            .sphere_basis
            .coordinate_function(axis)
            .ok_or_else(|| invalid(format!("coordinate x{} is not in the trial space", axis + 1)))?;
        let mut c = vec![0.0; self.dim()];
        c[self.index(b, 0)] = 1.0 / ((self.family.k() + 1) as f64).sqrt();
        Ok(c)
    }

    /// Mean square `⨍ f² dμ` of a coefficient vector (the basis is
    /// orthonormal for the averaged measure).
    pub fn mean_square(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().map(|c| c * c).sum()
    }

    /// The common eigenvalue of all nonzero modes of `coeffs`.
    pub fn eigenvalue_of(&self, coeffs: &[f64]) -> Result<f64> {
        let mut found: Option<f64> = None;
        for (c, lam) in coeffs.iter().zip(&self.eigenvalues) {
            if *c == 0.0 {
                continue;
            }
            match found {
                None => found = Some(*lam),
                Some(l) if (l - lam).abs() <= 1e-12 * l.abs().max(1.0) => {}
                Some(_) => return Err(YamabeError::NotAnEigenfunction),
            }
        }
        found.ok_or(YamabeError::NotAnEigenfunction)
    }

    /// Spectral Laplacian: multiplies each mode by its eigenvalue.
    pub fn apply_laplacian(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs.iter().zip(&self.eigenvalues).map(|(c, l)| c * l).collect()
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(invalid(format!("expected {} coefficients, got {}", self.dim(), coeffs.len())));
        }
        Ok(())
    }

    /// Values at every product node, sphere index major.
    pub fn node_values(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs)?;
        let (n1, n2) = (self.sphere_grid.len(), self.factor_grid.len());
        let (l1, l2) = (self.sphere_basis.len(), self.factor_basis.len());
        let rows = map_indexed(self.exec, n1, |a| {
            let ac = self.sphere_row_times(a, coeffs);
            (0..n2)
                .map(|b| (0..l2).map(|j| ac[j] * self.factor_basis.node_value(b, j)).sum::<f64>())
                .collect::<Vec<f64>>()
        });
        debug_assert!(rows.iter().all(|r| r.len() == n2) && l1 > 0);
        Ok(rows.concat())
    }

    fn sphere_row_times(&self, a: usize, coeffs: &[f64]) -> Vec<f64> {
        let (l1, l2) = (self.sphere_basis.len(), self.factor_basis.len());
        let mut ac = vec![0.0; l2];
        for i in 0..l1 {
            let phi = self.sphere_basis.node_value(a, i);
            if phi == 0.0 {
                continue;
            }
            for j in 0..l2 {
                ac[j] += phi * coeffs[i * l2 + j];
            }
        }
        ac
    }

    /// Wraps coefficients as a conformal factor after checking `u > 0` at
    /// every node.
    pub fn conformal_factor(&self, coeffs: Vec<f64>) -> Result<ConformalFactor> {
        let node_values = self.node_values(&coeffs)?;
        let min = node_values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(YamabeError::NonPositiveFactor { min });
        }
        Ok(ConformalFactor { coeffs, node_values, exponent: self.exponent })
    }

    /// Grid degree needed to integrate `u^p` exactly for these coefficients
    /// (for non-integer `p`, the degree of the nearest polynomial bound).
    pub fn required_degree(&self, coeffs: &[f64]) -> (usize, usize) {
        let l2 = self.factor_basis.len();
        let mut d1 = 0;
        let mut d2 = 0;
        for (idx, c) in coeffs.iter().enumerate() {
            if *c != 0.0 {
                d1 = d1.max(self.sphere_basis.functions()[idx / l2].degree);
                d2 = d2.max(self.factor_basis.functions()[idx % l2].degree);
            }
        }
        let need = |d: u32| (self.exponent * d as f64).ceil().max(2.0 * d as f64) as usize;
        (need(d1), need(d2))
    }

    fn check_degree(&self, coeffs: &[f64]) -> Result<()> {
        let (d1, d2) = self.required_degree(coeffs);
        let (e1, e2) = (self.sphere_grid.exactness_degree(), self.factor_grid.exactness_degree());
        if d1 > e1 {
            return Err(YamabeError::InsufficientExactness { required: d1, available: e1 });
        }
        if d2 > e2 {
            return Err(YamabeError::InsufficientExactness { required: d2, available: e2 });
        }
        Ok(())
    }

    #[inline]
    fn pow_p(&self, u: f64) -> f64 {
        match self.int_exponent {
            Some(p) => u.powi(p),
            None => u.powf(self.exponent),
        }
    }

    #[inline]
    fn pow_p_minus_1(&self, u: f64) -> f64 {
        match self.int_exponent {
            Some(p) => u.powi(p - 1),
            None => u.powf(self.exponent - 1.0),
        }
    }

    /// Yamabe quotient
    /// `∫((p+2)|∇u|² + s u²) dμ / (∫ u^p dμ)^{2/p}` of a positive factor.
    pub fn yamabe_quotient(&self, u: &ConformalFactor) -> Result<f64> {
        self.check_degree(&u.coeffs)?;
        Ok(self.evaluate(&u.coeffs, false)?.quotient)
    }

    /// Quotient and its gradient with respect to the coefficients.
    pub fn quotient_and_gradient(&self, coeffs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let e = self.evaluate(coeffs, true)?;
        if !(e.min_u > 0.0) {
            return Err(YamabeError::NonPositiveFactor { min: e.min_u });
        }
        Ok((e.quotient, e.gradient.expect("requested")))
    }

    /// Raw quadrature evaluation; does not reject non-positive `u` (the
    /// caller inspects `min_u`).
    pub fn evaluate(&self, coeffs: &[f64], with_gradient: bool) -> Result<Evaluation> {
        self.check_len(coeffs)?;
        let n1 = self.sphere_grid.len();
        let blocks = n1.div_ceil(ROW_BLOCK);
        let partials = map_indexed(self.exec, blocks, |blk| {
            let mut acc = self.empty_partial(with_gradient);
            for a in blk * ROW_BLOCK..((blk + 1) * ROW_BLOCK).min(n1) {
                self.accumulate_row(a, coeffs, with_gradient, &mut acc);
            }
            acc
        });
        let mut total = self.empty_partial(with_gradient);
        for p in &partials {
            total.numerator += p.numerator;
            total.power += p.power;
            total.min_u = total.min_u.min(p.min_u);
            for (t, v) in total.grad_num.iter_mut().zip(&p.grad_num) {
                *t += v;
            }
            for (t, v) in total.grad_pow.iter_mut().zip(&p.grad_pow) {
                *t += v;
            }
        }
        let p = self.exponent;
        let denom = total.power.powf(2.0 / p);
        let quotient = total.numerator / denom;
        let gradient = with_gradient.then(|| {
            let c = (2.0 / p) * total.numerator / (denom * total.power);
            total.grad_num.iter().zip(&total.grad_pow).map(|(gn, gp)| gn / denom - c * gp).collect()
        });
        Ok(Evaluation {
            numerator: total.numerator,
            power_integral: total.power,
            quotient,
            min_u: total.min_u,
            gradient,
        })
    }

    fn empty_partial(&self, with_gradient: bool) -> Partial {
        let m = if with_gradient { self.dim() } else { 0 };
        Partial { numerator: 0.0, power: 0.0, min_u: f64::INFINITY, grad_num: vec![0.0; m], grad_pow: vec![0.0; m] }
    }

    fn accumulate_row(&self, a: usize, coeffs: &[f64], with_gradient: bool, acc: &mut Partial) {
        let sb = &self.sphere_basis;
        let fb = &self.factor_basis;
        let (l1, l2) = (sb.len(), fb.len());
        let (amb1, amb2) = (sb.dim() + 1, fb.dim() + 1);
        let s = self.family.scalar_curvature();
        let pp2 = self.exponent + 2.0;
        let wa = self.sphere_grid.weights()[a];
        let inv_c = self.inv_factor_scale;

        // contract the sphere index of C with the row-a values and gradients
        let ac = self.sphere_row_times(a, coeffs);
        let mut gac = vec![0.0; amb1 * l2];
        for i in 0..l1 {
            let g = sb.node_gradient(a, i);
            for d in 0..amb1 {
                if g[d] == 0.0 {
                    continue;
                }
                for j in 0..l2 {
                    gac[d * l2 + j] += g[d] * coeffs[i * l2 + j];
                }
            }
        }

        let mut r0 = vec![0.0; if with_gradient { l2 } else { 0 }];
        let mut r1 = vec![0.0; if with_gradient { amb1 * l2 } else { 0 }];
        let mut rp = vec![0.0; if with_gradient { l2 } else { 0 }];
        let mut g1 = vec![0.0; amb1];
        let mut g2 = vec![0.0; amb2];
        let mut num = 0.0;
        let mut pow = 0.0;
        for (b, wb) in self.factor_weights.iter().enumerate() {
            let w = wa * wb;
            let mut u = 0.0;
            g1.iter_mut().for_each(|v| *v = 0.0);
            g2.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..l2 {
                let psi = fb.node_value(b, j);
                u += ac[j] * psi;
                for d in 0..amb1 {
                    g1[d] += gac[d * l2 + j] * psi;
                }
                let gpsi = fb.node_gradient(b, j);
                for e in 0..amb2 {
                    g2[e] += ac[j] * gpsi[e];
                }
            }
            let grad1: f64 = g1.iter().map(|v| v * v).sum();
            let grad2: f64 = g2.iter().map(|v| v * v).sum::<f64>() * inv_c;
            num += w * (pp2 * (grad1 + grad2) + s * u * u);
            pow += w * self.pow_p(u);
            acc.min_u = acc.min_u.min(u);
            if with_gradient {
                let su = w * s * u;
                let up = w * self.pow_p_minus_1(u);
                for j in 0..l2 {
                    let psi = fb.node_value(b, j);
                    let gpsi = fb.node_gradient(b, j);
                    let dot: f64 = g2.iter().zip(gpsi).map(|(x, y)| x * y).sum();
                    r0[j] += su * psi + w * pp2 * inv_c * dot;
                    rp[j] += up * psi;
                    for d in 0..amb1 {
                        r1[d * l2 + j] += w * pp2 * g1[d] * psi;
                    }
                }
            }
        }
        acc.numerator += num;
        acc.power += pow;
        if with_gradient {
            let p = self.exponent;
            for i in 0..l1 {
                let phi = sb.node_value(a, i);
                let gphi = sb.node_gradient(a, i);
                for j in 0..l2 {
                    let mut v = phi * r0[j];
                    for d in 0..amb1 {
                        v += gphi[d] * r1[d * l2 + j];
                    }
                    acc.grad_num[i * l2 + j] += 2.0 * v;
                    acc.grad_pow[i * l2 + j] += p * phi * rp[j];
                }
            }
        }
    }

    /// `max_nodes |(p+2)Δu + s u - s̃ u^{p-1}|` with `Δu` applied spectrally.
    pub fn yamabe_residual(&self, u: &ConformalFactor, target_scalar: f64) -> Result<f64> {
        let lap = self.node_values(&self.apply_laplacian(&u.coeffs))?;
        let s = self.family.scalar_curvature();
        let pp2 = self.exponent + 2.0;
        Ok(u.node_values
            .iter()
            .zip(&lap)
            .map(|(&v, &lv)| (pp2 * lv + s * v - target_scalar * self.pow_p_minus_1(v)).abs())
            .fold(0.0, f64::max))
    }

    /// `∫ F dμ` of a node function over the product grid.
    pub fn integrate_nodes(&self, values: &[f64]) -> f64 {
        let n2 = self.factor_grid.len();
        let rows: Vec<f64> = (0..self.sphere_grid.len())
            .map(|a| {
                let terms: Vec<f64> = (0..n2).map(|b| self.factor_weights[b] * values[a * n2 + b]).collect();
                self.sphere_grid.weights()[a] * crate::sphere::pairwise_sum(&terms)
            })
            .collect();
        crate::sphere::pairwise_sum(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::super::eh_energy;
    use super::*;
    use approx::assert_relative_eq;

    fn space(t: f64, l_max: u32, trial: TrialSpace) -> ProductSpace {
        let fam = ProductFamily::sphere_product(2, 2, t).unwrap();
        ProductSpace::new(fam, l_max, (4 * l_max as usize).max(4), trial, ExecPolicy::Sequential).unwrap()
    }

    #[test]
    fn constant_factor_gives_the_energy() {
        for t in [1.0, 2.0, 2.5] {
            let sp = space(t, 2, TrialSpace::Zonal);
            let u = sp.conformal_factor(sp.constant()).unwrap();
            assert_relative_eq!(sp.yamabe_quotient(&u).unwrap(), eh_energy(sp.family()), max_relative = 1e-13);
            assert_relative_eq!(sp.volume(), sp.family().volume(), max_relative = 1e-13);
        }
    }

    #[test]
    fn positivity_is_enforced() {
        let sp = space(1.0, 1, TrialSpace::Zonal);
        let mut c = sp.constant();
        let x1 = sp.sphere_coordinate(0).unwrap();
        for (a, b) in c.iter_mut().zip(&x1) {
            *a += 1.5 * b;
        }
        assert!(matches!(sp.conformal_factor(c), Err(YamabeError::NonPositiveFactor { .. })));
    }

    #[test]
    fn quadrature_degree_is_checked() {
        let fam = ProductFamily::sphere_product(2, 2, 1.0).unwrap();
        let sp = ProductSpace::new(fam, 2, 4, TrialSpace::Zonal, ExecPolicy::Sequential).unwrap();
        let mut c = sp.constant();
        c[sp.index(2, 0)] = 0.1;
        let u = sp.conformal_factor(c).unwrap();
        assert!(matches!(
            sp.yamabe_quotient(&u),
            Err(YamabeError::InsufficientExactness { required: 8, available: 4 })
        ));
    }

    #[test]
    fn residual_of_constants() {
        let sp = space(2.0, 1, TrialSpace::Zonal);
        let s = sp.family().scalar_curvature();
        let u = sp.conformal_factor(sp.constant()).unwrap();
        assert!(sp.yamabe_residual(&u, s).unwrap() < 1e-12);
        // u ≡ c solves the equation with s̃ = s c^{2-p}
        let c = 1.7;
        let u = sp.conformal_factor(sp.constant().iter().map(|v| v * c).collect()).unwrap();
        let target = s * c.powf(2.0 - sp.exponent());
        assert!(sp.yamabe_residual(&u, target).unwrap() < 1e-12);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let sp = space(2.5, 3, TrialSpace::Full);
        let mut c = sp.constant();
        for (i, v) in c.iter_mut().enumerate().skip(1) {
            *v = 0.01 * ((i as f64) * 0.37).sin();
        }
        let seq = sp.evaluate(&c, true).unwrap();
        let par = sp.clone().with_exec(ExecPolicy::Parallel).evaluate(&c, true).unwrap();
        assert_eq!(seq.quotient.to_bits(), par.quotient.to_bits());
        assert_eq!(seq.gradient, par.gradient);
    }

    #[test]
    fn laplacian_eigenvalues_include_the_factor_scaling() {
        let sp = space(2.0, 1, TrialSpace::Full);
        // (x¹ on S², 1): eigenvalue 2; (1, y¹ on S²/t): 2t
        assert_eq!(sp.eigenvalues()[sp.index(1, 0)], 2.0);
        assert_relative_eq!(sp.eigenvalues()[sp.index(0, 1)], 4.0, max_relative = 1e-14);
        let x1 = sp.sphere_coordinate(0).unwrap();
        assert_eq!(sp.eigenvalue_of(&x1).unwrap(), 2.0);
        assert_relative_eq!(sp.mean_square(&x1), 1.0 / 3.0, max_relative = 1e-15);
        let mixed: Vec<f64> = sp.constant().iter().zip(&x1).map(|(a, b)| a + b).collect();
        assert!(matches!(sp.eigenvalue_of(&mixed), Err(YamabeError::NotAnEigenfunction)));
    }
}
