//! Small dense helpers that must work for any [`Real`].

use crate::error::{Error, Result};
use crate::real::Real;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// `a` is row-major `n×n` and symmetric. Returns eigenvalues sorted
/// nonincreasing and the matching eigenvectors as columns of a row-major
/// `n×n` matrix.
pub fn jacobi_eigen<R: Real>(mut a: Vec<R>, n: usize) -> Result<(Vec<R>, Vec<R>)> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    let mut v = vec![R::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = R::one();
    }
    let frob: f64 = a.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
    let tol = (R::EPSILON * frob).powi(2);
    let two = R::from_f64(2.0);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].to_f64().powi(2))
            .sum();
        if off <= tol || off == 0.0 {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&x, &y| a[y * n + y].cmp_total(&a[x * n + x]));
            let vals = idx.iter().map(|&i| a[i * n + i].clone()).collect();
            let mut vecs = vec![R::zero(); n * n];
            for (col, &i) in idx.iter().enumerate() {
                for r in 0..n {
                    vecs[r * n + col] = v[r * n + i].clone();
                }
            }
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q].clone();
                if apq.to_f64() == 0.0 {
                    continue;
                }
                let theta = a[q * n + q].sub(&a[p * n + p]).div(&two.mul(&apq));
                let root = theta.mul(&theta).add(&R::one()).sqrt();
                let t = if theta.to_f64() >= 0.0 {
                    R::one().div(&theta.add(&root))
                } else {
                    R::one().div(&theta.sub(&root))
                };
                let c = R::one().div(&t.mul(&t).add(&R::one()).sqrt());
                let s = t.mul(&c);
                for k in 0..n {
                    let akp = a[k * n + p].clone();
                    let akq = a[k * n + q].clone();
                    a[k * n + p] = c.mul(&akp).sub(&s.mul(&akq));
                    a[k * n + q] = s.mul(&akp).add(&c.mul(&akq));
                }
                for k in 0..n {
                    let apk = a[p * n + k].clone();
                    let aqk = a[q * n + k].clone();
                    a[p * n + k] = c.mul(&apk).sub(&s.mul(&aqk));
                    a[q * n + k] = s.mul(&apk).add(&c.mul(&aqk));
                }
                for k in 0..n {
                    let vkp = v[k * n + p].clone();
                    let vkq = v[k * n + q].clone();
                    v[k * n + p] = c.mul(&vkp).sub(&s.mul(&vkq));
                    v[k * n + q] = s.mul(&vkp).add(&c.mul(&vkq));
                }
            }
        }
    }
    Err(Error::NumericalBreakdown(
        "Jacobi eigenvalue iteration did not converge".into(),
    ))
}

/// Ordinary least squares fit `y ≈ a + b·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::FitFailure("need at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit {
        intercept,
        slope,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Mp;
    use nalgebra::DMatrix;

    fn random_sym(n: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let n = 12;
        let a = random_sym(n, 3);
        let (vals, vecs) = jacobi_eigen(a.clone(), n).unwrap();
        let m = DMatrix::from_row_slice(n, n, &a);
        let mut reference: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in vals.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
        // A v = λ v
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                assert!((av - vals[k] * vecs[i * n + k]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn jacobi_extended_precision() {
        let n = 6;
        let a = random_sym(n, 9);
        let am: Vec<Mp> = a.iter().map(|&x| Mp::from_f64(x)).collect();
        let (vals, vecs) = jacobi_eigen(am.clone(), n).unwrap();
        for k in 0..n {
            for i in 0..n {
                let mut av = Mp::zero();
                for j in 0..n {
                    av.mul_acc(&am[i * n + j], &vecs[j * n + k]);
                }
                let r = av.sub(&vals[k].mul(&vecs[i * n + k])).to_f64();
                assert!(r.abs() < 1e-100, "{r:e}");
            }
        }
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }
}
