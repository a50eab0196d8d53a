//! Fourth-order Runge–Kutta integration along product geodesics, and the
//! zero set of the potential.

use super::{dot, tangent_frame, StaticCandidate};
use crate::error::{invalid, Result, YamabeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// RK4 steps over `[0, 2π]` in the standard checks.
pub const GEODESIC_STEPS: usize = 1000;

const ZERO_SET_SEED: u64 = 0x5A5A;
const UNIT_TOL: f64 = 1e-12;

/// Tangent vector to `S^k × X` at a point of the sphere: an ambient vector
/// tangent to `S^k` and components in an `h_t`-orthonormal frame of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub sphere: Vec<f64>,
    pub factor: Vec<f64>,
}

impl TangentVector {
    pub fn new(sphere: Vec<f64>, factor: Vec<f64>) -> Self {
        TangentVector { sphere, factor }
    }

    pub fn sphere_speed(&self) -> f64 {
        dot(&self.sphere, &self.sphere).sqrt()
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.sphere, &self.sphere) + dot(&self.factor, &self.factor)).sqrt()
    }
}

fn rk4_step<const N: usize>(y: [f64; N], h: f64, rhs: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let shift = |y: &[f64; N], k: &[f64; N], a: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    let k1 = rhs(&y);
    let k2 = rhs(&shift(&y, &k1, 0.5 * h));
    let k3 = rhs(&shift(&y, &k2, 0.5 * h));
    let k4 = rhs(&shift(&y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Great circle `cos(c s) x + sin(c s) v̂` with `c = |v|`.
fn great_circle(x: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    let c = dot(v, v).sqrt();
    if c == 0.0 {
        return x.to_vec();
    }
    let (cs, sn) = ((c * s).cos(), (c * s).sin());
    x.iter().zip(v).map(|(a, b)| cs * a + sn * b / c).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroSetReport {
    pub samples: usize,
    pub nonempty: bool,
    /// `max ||∇f| - 1|` over the samples of `Z`.
    pub max_gradient_deviation: Option<f64>,
    /// `max |f|` along a geodesic starting tangent to `Z`, over `[0, 2π]`.
    pub geodesic_drift: Option<f64>,
}

impl StaticCandidate {
    fn check_start(&self, start: &[f64], v: &TangentVector) -> Result<()> {
        let k = self.family().k();
        if start.len() != k + 1 || v.sphere.len() != k + 1 || v.factor.len() != self.family().l() {
            return Err(invalid("start point or velocity has the wrong dimension"));
        }
        if (dot(start, start) - 1.0).abs() > UNIT_TOL {
            return Err(invalid("start point is not on the unit sphere"));
        }
        if dot(start, &v.sphere).abs() > UNIT_TOL {
            return Err(invalid("sphere velocity is not tangent at the start point"));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(YamabeError::NonUnitVelocity { norm });
        }
        Ok(())
    }

    /// Integrates `f'' = ρ(v, v) f` by RK4 along the product geodesic with
    /// initial velocity `v` and returns the largest deviation from the exact
    /// values of `f` along it.
    pub fn geodesic_transport(&self, start: &[f64], v: &TangentVector, t_end: f64, steps: usize) -> Result<f64> {
        self.check_start(start, v)?;
        if steps == 0 || !(t_end > 0.0) {
            return Err(invalid("geodesic integration needs a positive length and step count"));
        }
        let (p1, p2) = self.family().rho_block_eigenvalues();
        let kappa = p1 * dot(&v.sphere, &v.sphere) + p2 * dot(&v.factor, &v.factor);
        let grad = self.gradient(start);
        let mut y = [self.value(start), dot(&grad, &v.sphere)];
        let h = t_end / steps as f64;
        let mut worst = 0.0f64;
        for i in 1..=steps {
            y = rk4_step(y, h, |y| [y[1], kappa * y[0]]);
            let exact = self.value(&great_circle(start, &v.sphere, h * i as f64));
            worst = worst.max((y[0] - exact).abs());
        }
        Ok(worst)
    }

    /// Samples `Z = {f = 0}` on the sphere, checks `|∇f| = 1` there, and
    /// integrates `x'' = -|x'|² x` from a sample with velocity tangent to
    /// `Z`, recording how far `f` moves from zero.
    pub fn zero_set_diagnostics(&self, samples: usize) -> Result<ZeroSetReport> {
        let pot = self.potential();
        let k = self.family().k();
        let level = if pot.slope != 0.0 { -pot.offset / pot.slope } else { f64::NAN };
        let empty = ZeroSetReport { samples: 0, nonempty: false, max_gradient_deviation: None, geodesic_drift: None };
        if !(level.abs() <= 1.0) {
            return Ok(empty);
        }
        let radius = (1.0 - level * level).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(ZERO_SET_SEED);
        let mut points = Vec::with_capacity(samples);
        while points.len() < samples {
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nw = dot(&w, &w).sqrt();
            if !(nw > 1e-3 && nw <= 1.0) {
                continue;
            }
            let mut x = vec![level];
            x.extend(w.iter().map(|c| radius * c / nw));
            points.push(x);
        }
        let max_gradient_deviation = points
            .iter()
            .map(|x| {
                let g = self.gradient(x);
                (dot(&g, &g).sqrt() - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let geodesic_drift = match points.first() {
            Some(x) => Some(self.zero_set_drift(x)?),
            None => None,
        };
        Ok(ZeroSetReport {
            samples: points.len(),
            nonempty: !points.is_empty(),
            max_gradient_deviation: (!points.is_empty()).then_some(max_gradient_deviation),
            geodesic_drift,
        })
    }

    fn zero_set_drift(&self, x: &[f64]) -> Result<f64> {
        // tangent to Z: orthogonal to x and to ∇F = slope · e₁
        let e1_tangent = self.gradient(x);
        let g_norm = dot(&e1_tangent, &e1_tangent).sqrt();
        let v = tangent_frame(x)
            .into_iter()
            .map(|e| {
                let d = if g_norm > 0.0 { dot(&e, &e1_tangent) / (g_norm * g_norm) } else { 0.0 };
                e.iter().zip(&e1_tangent).map(|(a, b)| a - d * b).collect::<Vec<f64>>()
            })
            .find(|w| dot(w, w) > 1e-6)
            .ok_or_else(|| invalid("zero set has no tangent directions"))?;
        let nv = dot(&v, &v).sqrt();
        let v: Vec<f64> = v.iter().map(|c| c / nv).collect();
        let m = x.len();
        const MAX_AMBIENT: usize = 8;
        if 2 * m > MAX_AMBIENT {
            return Err(invalid("zero-set drift supports spheres up to S^3"));
        }
        let mut y = [0.0; MAX_AMBIENT];
        y[..m].copy_from_slice(x);
        y[m..2 * m].copy_from_slice(&v);
        let h = 2.0 * std::f64::consts::PI / GEODESIC_STEPS as f64;
        let mut worst = 0.0f64;
        for _ in 0..GEODESIC_STEPS {
            y = rk4_step(y, h, |y| {
                let speed2: f64 = y[m..2 * m].iter().map(|c| c * c).sum();
                let mut d = [0.0; MAX_AMBIENT];
                for i in 0..m {
                    d[i] = y[m + i];
                    d[m + i] = -speed2 * y[i];
                }
                d
            });
            worst = worst.max(self.value(&y[..m]).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::super::Potential;
    use super::*;
    use crate::product::ProductFamily;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn critical() -> StaticCandidate {
        StaticCandidate::critical(2, 2).unwrap()
    }

    const POLE: [f64; 3] = [1.0, 0.0, 0.0];

    #[test]
    fn sphere_direction_solves_harmonic_oscillator() {
        let v = TangentVector::new(vec![0.0, 1.0, 0.0], vec![0.0, 0.0]);
        let dev = critical().geodesic_transport(&POLE, &v, 2.0 * PI, 1000).unwrap();
        assert!(dev <= 1e-6, "{dev}");
    }

    #[test]
    fn factor_direction_keeps_f_constant() {
        let v = TangentVector::new(vec![0.0; 3], vec![1.0, 0.0]);
        let x = [0.6, 0.8, 0.0];
        let dev = critical().geodesic_transport(&x, &v, 2.0 * PI, 1000).unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn mixed_direction_has_longer_period() {
        let h = FRAC_1_SQRT_2;
        let v = TangentVector::new(vec![0.0, h, 0.0], vec![h, 0.0]);
        let c = critical();
        let period = 2.0 * PI * 2f64.sqrt();
        assert!(c.geodesic_transport(&POLE, &v, period, 1000).unwrap() <= 1e-6);
        // after one full period f is back at its start value
        let back = c.value(&great_circle(&POLE, &v.sphere, period));
        assert!((back - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_non_unit_velocity() {
        let v = TangentVector::new(vec![0.0, 1.0, 0.0], vec![1.0, 0.0]);
        assert!(matches!(critical().geodesic_transport(&POLE, &v, 1.0, 10), Err(YamabeError::NonUnitVelocity { .. })));
        let radial = TangentVector::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.0]);
        assert!(critical().geodesic_transport(&POLE, &radial, 1.0, 10).is_err());
    }

    #[test]
    fn off_critical_transport_deviates() {
        let fam = ProductFamily::sphere_product(2, 2, 1.5).unwrap();
        let c = StaticCandidate::new(fam, Potential::X1).unwrap();
        let v = TangentVector::new(vec![0.0, 1.0, 0.0], vec![0.0, 0.0]);
        assert!(c.geodesic_transport(&POLE, &v, 2.0 * PI, 1000).unwrap() > 0.1);
    }

    #[test]
    fn equator_diagnostics() {
        let r = critical().zero_set_diagnostics(100).unwrap();
        assert!(r.nonempty);
        assert_eq!(r.samples, 100);
        assert!(r.max_gradient_deviation.unwrap() <= 1e-10);
        assert!(r.geodesic_drift.unwrap() <= 1e-8);
    }

    #[test]
    fn shifted_potential_moves_the_zero_set() {
        let fam = *critical().family();
        let c = StaticCandidate::new(fam, Potential { slope: 1.0, offset: 0.5 }).unwrap();
        let r = c.zero_set_diagnostics(100).unwrap();
        assert!(r.nonempty);
        // |∇f| = sqrt(1 - 1/4) on {x¹ = -1/2}
        assert!((r.max_gradient_deviation.unwrap() - (1.0 - 0.75f64.sqrt())).abs() <= 1e-12);
        assert!(r.geodesic_drift.unwrap() > 0.1);
        let k3 = StaticCandidate::critical(3, 2).unwrap().zero_set_diagnostics(50).unwrap();
        assert!(k3.max_gradient_deviation.unwrap() <= 1e-10 && k3.geodesic_drift.unwrap() <= 1e-8);
    }

    #[test]
    fn constant_potential_has_empty_zero_set() {
        let fam = *critical().family();
        let c = StaticCandidate::new(fam, Potential::constant(1.0)).unwrap();
        let r = c.zero_set_diagnostics(10).unwrap();
        assert!(!r.nonempty && r.max_gradient_deviation.is_none());
    }
}
