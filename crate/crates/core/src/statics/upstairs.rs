//! `ĝ = g + f² dθ²` on `M₊ × S¹` against the round `S^{k+1}` written as a
//! join, `dr² + sin²r g_{S^{k-1}} + cos²r dθ²`.

use super::{dot, tangent_frame};
use crate::error::{invalid, Result};
use crate::product::ProductFamily;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpstairsReport {
    pub samples: usize,
    /// Largest entrywise difference of the two metric matrices.
    pub mismatch: f64,
    /// Scalar curvature of `S^{k+1} × (X, t⁻¹h)` from block traces.
    pub scalar_curvature: f64,
    pub sphere_einstein_constant: f64,
    pub factor_einstein_constant: f64,
    pub einstein: bool,
}

/// `nr × ntheta` points with `r ∈ (0, π/2]` and `θ ∈ [0, 2π)`.
pub fn upstairs_sample_grid(nr: usize, ntheta: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nr * ntheta);
    for i in 0..nr {
        let r = FRAC_PI_2 * (i + 1) as f64 / nr as f64;
        for j in 0..ntheta {
            out.push((r, 2.0 * PI * j as f64 / ntheta as f64));
        }
    }
    out
}

fn gram(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors.iter().map(|a| vectors.iter().map(|b| dot(a, b)).collect()).collect()
}

/// Metric of `ĝ` in the frame `(∂_r, ∂_θ, e_1 … e_{k-1})`, where the sphere
/// is parametrized as `(cos r, sin r w)` and `f = x¹ = cos r`.
fn warped_metric(k: usize, r: f64, w: &[f64], frame: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let point: Vec<f64> = std::iter::once(r.cos()).chain(w.iter().map(|c| r.sin() * c)).collect();
    let f = point[0];
    let d_r: Vec<f64> = std::iter::once(-r.sin()).chain(w.iter().map(|c| r.cos() * c)).collect();
    let mut vectors = vec![d_r];
    vectors.extend(frame.iter().map(|e| std::iter::once(0.0).chain(e.iter().map(|c| r.sin() * c)).collect()));
    let g = gram(&vectors);
    let mut out = vec![vec![0.0; k + 1]; k + 1];
    let remap = |i: usize| if i == 0 { 0 } else { i + 1 };
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[remap(i)][remap(j)] = *v;
        }
    }
    out[1][1] = f * f;
    out
}

/// Pullback of the Euclidean metric under
/// `(r, θ, w) ↦ (cos r cos θ, cos r sin θ, sin r w)` in the same frame.
fn join_metric(r: f64, theta: f64, w: &[f64], frame: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (cr, sr, ct, st) = (r.cos(), r.sin(), theta.cos(), theta.sin());
    let mut d_r = vec![-sr * ct, -sr * st];
    d_r.extend(w.iter().map(|c| cr * c));
    let mut d_theta = vec![-cr * st, cr * ct];
    d_theta.extend(std::iter::repeat_n(0.0, w.len()));
    let mut vectors = vec![d_r, d_theta];
    vectors.extend(frame.iter().map(|e| [0.0, 0.0].into_iter().chain(e.iter().map(|c| sr * c)).collect()));
    gram(&vectors)
}

/// Compares `ĝ` with the join form of the round `S^{k+1}` on `samples` and
/// reports the curvature of the upstairs product.
pub fn upstairs_identification(fam: &ProductFamily, samples: &[(f64, f64)]) -> Result<UpstairsReport> {
    let k = fam.k();
    if samples.is_empty() {
        return Err(invalid("upstairs identification needs at least one sample"));
    }
    let w: Vec<f64> = vec![1.0 / (k as f64).sqrt(); k];
    let frame = tangent_frame(&w);
    let mut mismatch = 0.0f64;
    for &(r, theta) in samples {
        let a = warped_metric(k, r, &w, &frame);
        let b = join_metric(r, theta, &w, &frame);
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                mismatch = mismatch.max((x - y).abs());
            }
        }
    }
    let sphere_einstein_constant = k as f64;
    let (_, factor_einstein_constant) = fam.ricci_block_eigenvalues();
    let scalar_curvature = (k + 1) as f64 * sphere_einstein_constant + fam.l() as f64 * factor_einstein_constant;
    Ok(UpstairsReport {
        samples: samples.len(),
        mismatch,
        scalar_curvature,
        sphere_einstein_constant,
        factor_einstein_constant,
        einstein: (sphere_einstein_constant - factor_einstein_constant).abs() <= 1e-12,
    })
}
