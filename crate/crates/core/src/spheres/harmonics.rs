//! Real orthonormal harmonics on S¹ and S², quadrature grids that integrate
//! their products exactly, and the grid check of the truncated covariance.

use super::{block_size, dim_hj, ProductSphereSpec};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Quadrature grid on one sphere factor.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub dim: usize,
    /// Angles: `θ` on S¹; `(θ, φ)` on S².
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    /// `m` equispaced angles on S¹, exact for trigonometric products of total
    /// degree below `m`.
    pub fn circle(m: usize) -> Self {
        let h = 2.0 * PI / m as f64;
        Self {
            dim: 1,
            nodes: (0..m).map(|i| vec![i as f64 * h]).collect(),
            weights: vec![h; m],
        }
    }

    /// Gauss–Legendre in `cos θ` times equispaced `φ`: exact for products of
    /// harmonics of degree `≤ jmax`.
    pub fn sphere(jmax: usize) -> Self {
        let (x, w) = gauss_legendre(jmax + 1);
        let np = 2 * jmax + 1;
        let h = 2.0 * PI / np as f64;
        let mut nodes = Vec::with_capacity(x.len() * np);
        let mut weights = Vec::with_capacity(x.len() * np);
        for (xi, wi) in x.iter().zip(&w) {
            for k in 0..np {
                nodes.push(vec![xi.acos(), k as f64 * h]);
                weights.push(wi * h);
            }
        }
        Self {
            dim: 2,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Values of all harmonics of degree `≤ jmax` at an angle, ordered by degree;
/// within degree `j ≥ 1` on S¹: `cos jθ, sin jθ`; on S²: `m = 0, 1, −1, 2, −2, …`.
pub fn harmonics(dim: usize, jmax: usize, angles: &[f64]) -> Vec<f64> {
    match dim {
        1 => {
            let t = angles[0];
            let mut out = vec![1.0 / (2.0 * PI).sqrt()];
            let s = 1.0 / PI.sqrt();
            for j in 1..=jmax {
                let (sn, cs) = (j as f64 * t).sin_cos();
                out.push(s * cs);
                out.push(s * sn);
            }
            out
        }
        2 => sphere_harmonics(jmax, angles[0], angles[1]),
        _ => panic!("harmonics only on S¹ and S²"),
    }
}

/// Fully normalized associated Legendre functions `P̄_l^m(cos θ)`, with
/// `∫_{S²} |P̄_l^m e^{imφ}|² = 1`, stored at `l(l+1)/2 + m`.
fn legendre_table(jmax: usize, theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; idx(jmax, jmax) + 1];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=jmax {
        let mf = m as f64;
        p[idx(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..jmax {
        p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * c * p[idx(m, m)];
        for l in m + 2..=jmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(l, m)] = a * (c * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

fn sphere_harmonics(jmax: usize, theta: f64, phi: f64) -> Vec<f64> {
    let p = legendre_table(jmax, theta);
    let mut out = Vec::with_capacity((jmax + 1) * (jmax + 1));
    for l in 0..=jmax {
        let base = l * (l + 1) / 2;
        out.push(p[base]);
        for m in 1..=l {
            let (sn, cs) = (m as f64 * phi).sin_cos();
            out.push(std::f64::consts::SQRT_2 * p[base + m] * cs);
            out.push(std::f64::consts::SQRT_2 * p[base + m] * sn);
        }
    }
    out
}

/// Degree of each harmonic in [`harmonics`] order.
pub fn degrees(dim: usize, jmax: usize) -> Vec<usize> {
    (0..=jmax).flat_map(|j| std::iter::repeat_n(j, dim_hj(j, dim))).collect()
}

/// Weighted Gram matrix `Φᵀ W Φ` of the harmonics of degree `≤ jmax` on a grid.
pub fn gram(grid: &SphereGrid, jmax: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = grid.nodes.iter().map(|a| harmonics(grid.dim, jmax, a)).collect();
    let k = rows[0].len();
    DMatrix::from_fn(k, k, |a, b| {
        grid.weights
            .iter()
            .zip(&rows)
            .map(|(w, r)| w * r[a] * r[b])
            .sum()
    })
}

/// Operator norm of the grid-discretized covariance of the field truncated
/// at total degree `jc`, minus its truncation at `n`.
///
/// With `Φ` the product harmonics on the tensor grid, the nonzero spectrum of
/// `W^{1/2} Φ Λ Φᵀ W^{1/2}` is that of `Λ^{1/2} (Φᵀ W Φ) Λ^{1/2}`, and
/// `Φᵀ W Φ = G₁ ⊗ G₂` factorizes over the spheres.
pub fn grid_operator_gap(spec: &ProductSphereSpec, g1: &SphereGrid, g2: &SphereGrid, jc: usize, n: usize) -> Result<f64> {
    if g1.dim != spec.d1 || g2.dim != spec.d2 {
        return Err(Error::DimensionMismatch {
            expected: spec.d1 * 10 + spec.d2,
            got: g1.dim * 10 + g2.dim,
        });
    }
    if n >= jc {
        return Ok(0.0);
    }
    let (gram1, gram2) = (gram(g1, jc), gram(g2, jc));
    let (deg1, deg2) = (degrees(spec.d1, jc), degrees(spec.d2, jc));
    let mut modes = Vec::new();
    for (a, &da) in deg1.iter().enumerate() {
        for (b, &db) in deg2.iter().enumerate() {
            if da + db > n && da + db <= jc {
                modes.push((a, b, spec.coefficient_variance(da + db).sqrt()));
            }
        }
    }
    debug_assert_eq!(modes.len(), (n + 1..=jc).map(|j| block_size(j, spec.d1, spec.d2)).sum::<usize>());
    let k = modes.len();
    let m = DMatrix::from_fn(k, k, |i, j| {
        let (a1, b1, s1) = modes[i];
        let (a2, b2, s2) = modes[j];
        s1 * gram1[(a1, a2)] * gram2[(b1, b2)] * s2
    });
    Ok(m.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev_from_identity(g: &DMatrix<f64>) -> f64 {
        let k = g.nrows();
        (g - DMatrix::<f64>::identity(k, k)).abs().max()
    }

    #[test]
    fn circle_harmonics_orthonormal() {
        let g = gram(&SphereGrid::circle(64), 31);
        assert_eq!(g.nrows(), 63);
        assert!(max_dev_from_identity(&g) < 1e-13);
    }

    #[test]
    fn sphere_harmonics_orthonormal() {
        for jmax in [0, 1, 4, 12] {
            let g = gram(&SphereGrid::sphere(jmax), jmax);
            assert_eq!(g.nrows(), (jmax + 1) * (jmax + 1));
            assert!(max_dev_from_identity(&g) < 1e-12, "jmax={jmax}");
        }
    }

    #[test]
    fn sphere_low_degree_closed_forms() {
        // Y_0 = 1/√(4π), Y_1^0 = √(3/4π) cos θ
        let (t, p) = (0.7, 1.9);
        let y = harmonics(2, 1, &[t, p]);
        assert!((y[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert!((y[1] - (3.0 / (4.0 * PI)).sqrt() * t.cos()).abs() < 1e-15);
        assert!((y[2].abs() - (3.0 / (4.0 * PI)).sqrt() * t.sin() * p.cos().abs()).abs() < 1e-15);
        // addition theorem: Σ_m Y_l^m(x)² = (2l+1)/(4π)
        let y = harmonics(2, 9, &[2.1, 0.3]);
        let d = degrees(2, 9);
        for l in 0..=9 {
            let s: f64 = y.iter().zip(&d).filter(|(_, &dl)| dl == l).map(|(v, _)| v * v).sum();
            assert!((s - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-12, "l={l}");
        }
    }
}
