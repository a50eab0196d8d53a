use super::{pairwise_sum, sphere_eigenvalue, sphere_multiplicity, QuadratureGrid};
use crate::error::{Result, YamabeError};

/// Exponent vectors of all monomials in `dim` variables of total degree
/// `degree`, ordered so that `(x¹)^degree` comes first.
fn monomials_of_degree(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials_of_degree(dim - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn eval_monomial(exps: &[u32], x: &[f64]) -> f64 {
    exps.iter().zip(x).map(|(&e, &c)| c.powi(e as i32)).product()
}

fn eval_monomial_grad(exps: &[u32], x: &[f64], out: &mut [f64]) {
    for d in 0..exps.len() {
        if exps[d] == 0 {
            out[d] = 0.0;
            continue;
        }
        let mut v = exps[d] as f64;
        for (i, (&e, &c)) in exps.iter().zip(x).enumerate() {
            let e = if i == d { e - 1 } else { e };
            v *= c.powi(e as i32);
        }
        out[d] = v;
    }
}

/// One basis function: an ambient polynomial whose restriction to the sphere
/// is a Laplace eigenfunction, normalized to unit mean square.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    pub degree: u32,
    pub eigenvalue: f64,
    /// Coefficients against [`SpectralBasis::monomials`].
    pub coeffs: Vec<f64>,
    /// Index of the monomial whose orthogonalization produced this function.
    pub generator: usize,
}

/// Laplace eigenfunctions of the unit `S^k` up to a maximal degree, with
/// values and tangent gradients cached at the nodes of a grid.
///
/// Eigenvalues are those of the positive Laplacian `Δ = d*d`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    dim: usize,
    l_max: u32,
    zonal: bool,
    monomials: Vec<Vec<u32>>,
    functions: Vec<BasisFunction>,
    n_nodes: usize,
    values: Vec<f64>,
    gradients: Vec<f64>,
}

/// All harmonics of degree `≤ l_max` on `S^k`.
pub fn harmonic_basis(k: usize, l_max: u32, grid: &QuadratureGrid) -> Result<SpectralBasis> {
    SpectralBasis::build(k, l_max, grid, false)
}

/// Zonal harmonics (functions of `x¹` only) of degree `≤ l_max` on `S^k`.
pub fn zonal_basis(k: usize, l_max: u32, grid: &QuadratureGrid) -> Result<SpectralBasis> {
    SpectralBasis::build(k, l_max, grid, true)
}

impl SpectralBasis {
    fn build(k: usize, l_max: u32, grid: &QuadratureGrid, zonal: bool) -> Result<Self> {
        if grid.dim() != k {
            return Err(YamabeError::InvalidParameter(format!(
                "grid is on S^{}, basis requested on S^{k}",
                grid.dim()
            )));
        }
        let required = 2 * l_max as usize;
        if grid.exactness_degree() < required {
            return Err(YamabeError::InsufficientExactness { required, available: grid.exactness_degree() });
        }
        let amb = k + 1;
        let monomials: Vec<Vec<u32>> = (0..=l_max).flat_map(|j| monomials_of_degree(amb, j)).collect();
        let n = grid.len();
        let m = monomials.len();
        let mono_values: Vec<f64> =
            grid.nodes().flat_map(|x| monomials.iter().map(move |e| eval_monomial(e, x))).collect();

        let volume = grid.weight_sum();
        let mean_product = |a: &[f64], b: &[f64]| -> f64 {
            let terms: Vec<f64> = grid.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).collect();
            pairwise_sum(&terms) / volume
        };

        let mut accepted: Vec<(BasisFunction, Vec<f64>)> = Vec::new();
        let mut start = 0;
        for j in 0..=l_max {
            let count = monomials_of_degree(amb, j).len();
            let mut found = 0u64;
            for mi in start..start + count {
                if zonal && monomials[mi][0] != j {
                    continue;
                }
                let mut coeffs = vec![0.0; m];
                coeffs[mi] = 1.0;
                let mut vals: Vec<f64> = (0..n).map(|i| mono_values[i * m + mi]).collect();
                let norm0 = mean_product(&vals, &vals).sqrt();
                for _pass in 0..2 {
                    for (f, fv) in &accepted {
                        let proj = mean_product(&vals, fv);
                        for (c, fc) in coeffs.iter_mut().zip(&f.coeffs) {
                            *c -= proj * fc;
                        }
                        for (v, w) in vals.iter_mut().zip(fv) {
                            *v -= proj * w;
                        }
                    }
                }
                let norm = mean_product(&vals, &vals).sqrt();
                if norm <= 1e-8 * norm0 {
                    continue;
                }
                coeffs.iter_mut().for_each(|c| *c /= norm);
                vals.iter_mut().for_each(|v| *v /= norm);
                let eigenvalue = sphere_eigenvalue(k as i64, j as i64)?;
                accepted.push((BasisFunction { degree: j, eigenvalue, coeffs, generator: mi }, vals));
                found += 1;
            }
            let expected = if zonal { 1 } else { sphere_multiplicity(k as i64, j as i64)? };
            if found != expected {
                return Err(YamabeError::InvalidParameter(format!(
                    "found {found} independent harmonics of degree {j} on S^{k}, expected {expected}"
                )));
            }
            start += count;
        }

        let functions: Vec<BasisFunction> = accepted.into_iter().map(|(f, _)| f).collect();
        let mut basis = SpectralBasis {
            dim: k,
            l_max,
            zonal,
            monomials,
            functions,
            n_nodes: n,
            values: Vec::new(),
            gradients: Vec::new(),
        };
        let l = basis.len();
        let mut values = vec![0.0; n * l];
        let mut gradients = vec![0.0; n * l * amb];
        let mut g = vec![0.0; amb];
        for (i, x) in grid.nodes().enumerate() {
            for b in 0..l {
                values[i * l + b] = basis.value_at(b, x);
                basis.gradient_into(b, x, &mut g);
                gradients[(i * l + b) * amb..(i * l + b + 1) * amb].copy_from_slice(&g);
            }
        }
        basis.values = values;
        basis.gradients = gradients;
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn is_zonal(&self) -> bool {
        self.zonal
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn eigenvalue(&self, b: usize) -> f64 {
        self.functions[b].eigenvalue
    }

    /// `(eigenvalue, multiplicity, index range)` per eigenspace, ascending.
    pub fn eigenspaces(&self) -> Vec<(f64, usize, std::ops::Range<usize>)> {
        let mut out: Vec<(f64, usize, std::ops::Range<usize>)> = Vec::new();
        for (i, f) in self.functions.iter().enumerate() {
            match out.last_mut() {
                Some((lam, mult, range)) if *lam == f.eigenvalue => {
                    *mult += 1;
                    range.end = i + 1;
                }
                _ => out.push((f.eigenvalue, 1, i..i + 1)),
            }
        }
        out
    }

    /// Index of the basis function proportional to the ambient coordinate
    /// `x^{axis+1}`, i.e. `√(k+1) · x^{axis+1}`.
    pub fn coordinate_function(&self, axis: usize) -> Option<usize> {
        self.functions.iter().position(|f| {
            f.degree == 1 && self.monomials[f.generator].iter().enumerate().all(|(d, &e)| e == u32::from(d == axis))
        })
    }

    /// Value of basis function `b` at the cached grid node `i`.
    #[inline]
    pub fn node_value(&self, i: usize, b: usize) -> f64 {
        self.values[i * self.len() + b]
    }

    /// Tangent gradient (ambient components) of basis function `b` at node `i`.
    #[inline]
    pub fn node_gradient(&self, i: usize, b: usize) -> &[f64] {
        let a = self.dim + 1;
        let idx = (i * self.len() + b) * a;
        &self.gradients[idx..idx + a]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Evaluates basis function `b` at an arbitrary point of the sphere.
    pub fn value_at(&self, b: usize, x: &[f64]) -> f64 {
        self.functions[b]
            .coeffs
            .iter()
            .zip(&self.monomials)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, e)| c * eval_monomial(e, x))
            .sum()
    }

    /// Tangent gradient of basis function `b` at `x`: the ambient gradient
    /// with its normal component `(x·∇F) x` removed.
    pub fn gradient_at(&self, b: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim + 1];
        self.gradient_into(b, x, &mut g);
        g
    }

    fn gradient_into(&self, b: usize, x: &[f64], g: &mut [f64]) {
        let amb = self.dim + 1;
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; amb];
        for (c, e) in self.functions[b].coeffs.iter().zip(&self.monomials) {
            if *c == 0.0 {
                continue;
            }
            eval_monomial_grad(e, x, &mut tmp);
            for d in 0..amb {
                g[d] += c * tmp[d];
            }
        }
        let radial: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        for d in 0..amb {
            g[d] -= radial * x[d];
        }
    }
}
