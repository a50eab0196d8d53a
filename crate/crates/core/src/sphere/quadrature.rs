use super::sphere_volume;
use crate::error::{Result, YamabeError};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

/// Gauss–Legendre rule with `m` points on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Nodes and weights on the unit `S^k`, stored in ambient coordinates.
///
/// Node layout (also the row order of the cache file):
/// * `S^1`: `x = (cos φ, sin φ)`, `φ_j = 2πj / (d + 1)`.
/// * `S^2`: `x = (z, r cos φ, r sin φ)`, `r = √(1 - z²)`, outer loop over
///   Gauss–Legendre `z` ascending, inner loop over `φ_j = 2πj / (d + 1)`.
/// * `S^3`: Hopf coordinates `x = (cos η cos ξ, cos η sin ξ, sin η cos ζ,
///   sin η sin ζ)` with `sin² η` on a Gauss–Legendre rule over `[0, 1]`;
///   loops ordered `η`, `ξ`, `ζ`.
///
/// The polar axis is always the first ambient coordinate `x¹` on `S^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadratureGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let a = self.ambient_dim();
        &self.coords[i * a..(i + 1) * a]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `∫ f dμ` over the unit sphere.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Writes the `sphgrid v1` text format.
    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sphgrid v1 k={} degree={}", self.dim, self.exactness)?;
        let mut line = String::new();
        for (x, w) in self.nodes().zip(&self.weights) {
            line.clear();
            for c in x {
                write!(line, "{c:.16e} ").unwrap();
            }
            write!(line, "{w:.16e}").unwrap();
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the `sphgrid v1` text format.
    pub fn read_cache<R: BufRead>(input: R) -> Result<Self> {
        let bad = |m: &str| YamabeError::GridCache(m.to_string());
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("sphgrid") || parts.next() != Some("v1") {
            return Err(bad("expected header `sphgrid v1`"));
        }
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(name))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(&format!("missing `{name}` in header")))
        };
        let dim = field("k=")?;
        let exactness = field("degree=")?;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(&e.to_string()))?;
            if values.len() != dim + 2 {
                return Err(bad(&format!("expected {} columns, got {}", dim + 2, values.len())));
            }
            coords.extend_from_slice(&values[..=dim]);
            weights.push(values[dim + 1]);
        }
        Ok(QuadratureGrid { dim, coords, weights, exactness })
    }
}

/// Tensor-product grid on the unit `S^k`, `k ∈ {1, 2, 3}`, integrating every
/// ambient polynomial of total degree `≤ degree` exactly.
pub fn gauss_grid(k: usize, degree: usize) -> Result<QuadratureGrid> {
    if degree < 2 {
        return Err(YamabeError::InvalidParameter(format!("quadrature degree must be at least 2, got {degree}")));
    }
    let n_az = degree + 1;
    let az = |j: usize| 2.0 * PI * j as f64 / n_az as f64;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    match k {
        1 => {
            for j in 0..n_az {
                let phi = az(j);
                coords.extend_from_slice(&[phi.cos(), phi.sin()]);
                weights.push(2.0 * PI / n_az as f64);
            }
        }
        2 => {
            let (zs, ws) = gauss_legendre(degree / 2 + 1);
            for (z, wz) in zs.iter().zip(&ws) {
                let r = (1.0 - z * z).sqrt();
                for j in 0..n_az {
                    let phi = az(j);
                    coords.extend_from_slice(&[*z, r * phi.cos(), r * phi.sin()]);
                    weights.push(wz * 2.0 * PI / n_az as f64);
                }
            }
        }
        3 => {
            // after the two circle integrals the integrand is a polynomial of
            // degree ≤ degree/2 in s = sin²η, with measure ds/2 on [0, 1]
            let (ss, ws) = gauss_legendre((degree / 2) / 2 + 1);
            let dxi = 2.0 * PI / n_az as f64;
            for (s, ws) in ss.iter().zip(&ws) {
                let s = 0.5 * (s + 1.0);
                let w = 0.5 * ws * 0.5 * dxi * dxi;
                let (cos_eta, sin_eta) = ((1.0 - s).sqrt(), s.sqrt());
                for i in 0..n_az {
                    let xi = az(i);
                    for j in 0..n_az {
                        let zeta = az(j);
                        coords.extend_from_slice(&[
                            cos_eta * xi.cos(),
                            cos_eta * xi.sin(),
                            sin_eta * zeta.cos(),
                            sin_eta * zeta.sin(),
                        ]);
                        weights.push(w);
                    }
                }
            }
        }
        other => return Err(YamabeError::UnsupportedGrid(other)),
    }
    let grid = QuadratureGrid { dim: k, coords, weights, exactness: degree };
    debug_assert!(
        (grid.weight_sum() / sphere_volume(k as i64).unwrap() - 1.0).abs() < 1e-12,
        "weights must sum to the sphere volume"
    );
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact() {
        for m in 1..20 {
            let (x, w) = gauss_legendre(m);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "m={m} deg={deg} q={q}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn s2_examples() {
        let g = gauss_grid(2, 8).unwrap();
        assert_relative_eq!(g.integrate(|_| 1.0), 4.0 * PI, max_relative = 1e-12);
        assert!(g.integrate(|x| x[0]).abs() < 1e-12);
        assert_relative_eq!(g.integrate(|x| x[0] * x[0]), 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn nodes_are_unit_vectors() {
        for k in 1..=3 {
            let g = gauss_grid(k, 9).unwrap();
            for x in g.nodes() {
                let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
            assert_relative_eq!(g.weight_sum(), sphere_volume(k as i64).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(gauss_grid(4, 8), Err(YamabeError::UnsupportedGrid(4))));
        assert!(gauss_grid(2, 1).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let g = gauss_grid(3, 5).unwrap();
        let mut buf = Vec::new();
        g.write_cache(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sphgrid v1 k=3 degree=5\n"));
        let back = QuadratureGrid::read_cache(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn cache_rejects_garbage() {
        assert!(QuadratureGrid::read_cache("nope\n".as_bytes()).is_err());
        assert!(QuadratureGrid::read_cache("sphgrid v1 k=2 degree=4\n1 2\n".as_bytes()).is_err());
    }
}
