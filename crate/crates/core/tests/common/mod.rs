//! Independent reference computations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the quadrature or basis
//! code under test.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// `Vol(S^k) = 2π^{(k+1)/2} / Γ((k+1)/2)` via the even/odd recurrences
/// `Vol(S^k) = 2π/(k-1) · Vol(S^{k-2})`.
pub fn sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

fn double_factorial_odd(m: i64) -> f64 {
    // (m)!! for odd m ≥ -1
    let mut acc = 1.0;
    let mut j = m;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

/// `∫_{S^k} x^α dμ`: zero unless every exponent is even, otherwise
/// `Vol(S^k) · Π (α_i - 1)!! / ((k+1)(k+3)⋯(k+|α|-1))`.
pub fn sphere_moment(k: usize, alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let total: u32 = alpha.iter().sum();
    let num: f64 = alpha.iter().map(|&a| double_factorial_odd(a as i64 - 1)).product();
    let mut den = 1.0;
    let mut j = k as u32 + 1;
    while j < k as u32 + total {
        den *= j as f64;
        j += 2;
    }
    sphere_volume(k) * num / den
}

/// Random polynomial of total degree `≤ degree` in `k + 1` variables:
/// `terms` monomials with normal coefficients.
pub fn random_polynomial<R: Rng>(rng: &mut R, k: usize, degree: u32, terms: usize) -> Vec<(Vec<u32>, f64)> {
    (0..terms)
        .map(|_| {
            let total = rng.random_range(0..=degree);
            let mut alpha = vec![0u32; k + 1];
            for _ in 0..total {
                alpha[rng.random_range(0..=k)] += 1;
            }
            (alpha, rng.sample::<f64, _>(StandardNormal))
        })
        .collect()
}

pub fn eval_polynomial(p: &[(Vec<u32>, f64)], x: &[f64]) -> f64 {
    p.iter().map(|(a, c)| c * a.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>()).sum()
}

pub fn exact_integral(k: usize, p: &[(Vec<u32>, f64)]) -> f64 {
    p.iter().map(|(a, c)| c * sphere_moment(k, a)).sum()
}

/// `Σ |c|·∫|x^α|`-style scale used to make relative comparisons meaningful
/// when the exact integral nearly cancels.
pub fn integral_scale(k: usize, p: &[(Vec<u32>, f64)]) -> f64 {
    let even: Vec<u32> = vec![0; k + 1];
    p.iter().map(|(_, c)| c.abs()).sum::<f64>() * sphere_moment(k, &even)
}

/// Uniform point on `S^k`.
pub fn random_sphere_point<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..=k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

/// Orthonormal tangent frame at `x` by Gram–Schmidt on random vectors.
pub fn random_tangent_frame<R: Rng>(rng: &mut R, x: &[f64]) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::new();
    while frame.len() + 1 < x.len() {
        let mut v: Vec<f64> = (0..x.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for b in std::iter::once(x).chain(frame.iter().map(Vec::as_slice)) {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 {
            frame.push(v.iter().map(|c| c / n).collect());
        }
    }
    frame
}

/// Positive Laplacian by second differences along the great circles through
/// `x` in an orthonormal frame: `Δf = -Σ_i (f∘γ_i)''(0)`.
pub fn fd_laplacian(f: impl Fn(&[f64]) -> f64, x: &[f64], frame: &[Vec<f64>], h: f64) -> f64 {
    let along = |e: &[f64], s: f64| -> f64 {
        let p: Vec<f64> = x.iter().zip(e).map(|(a, b)| s.cos() * a + s.sin() * b).collect();
        f(&p)
    };
    -frame.iter().map(|e| (along(e, h) - 2.0 * along(e, 0.0) + along(e, -h)) / (h * h)).sum::<f64>()
}

/// Central second difference `(E(τ) + E(-τ) - 2E(0)) / τ²`.
pub fn second_difference(e: impl Fn(f64) -> f64, tau: f64) -> f64 {
    (e(tau) + e(-tau) - 2.0 * e(0.0)) / (tau * tau)
}

/// Central first difference.
pub fn first_difference(e: impl Fn(f64) -> f64, h: f64) -> f64 {
    (e(h) - e(-h)) / (2.0 * h)
}

/// Monte Carlo mean of `f` over `S^k` with its standard error.
pub fn monte_carlo_mean<R: Rng>(rng: &mut R, k: usize, samples: usize, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = (0..samples).map(|_| f(&random_sphere_point(rng, k))).collect();
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
    (mean, (var / samples as f64).sqrt())
}
