//! Kriging under point-evaluation conditioning, P-greedy design, and exact
//! eigenspace conditioning for finite-rank covariances.

mod eigen;
mod greedy;

pub use eigen::{ConditionGap, FiniteRankCov};
pub use greedy::{pgreedy_select, GreedyRun, PowerTrace};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet, SEPARATION_TOL};
use crate::real::Real;

/// Selected design points with an incrementally bordered Cholesky factor of
/// their Gram matrix.
#[derive(Clone, Debug)]
pub struct DesignState<R: Real = f64> {
    kernel: KernelSpec,
    points: Vec<Vec<f64>>,
    /// Row `i` holds `L[i][0..=i]`.
    chol: Vec<Vec<R>>,
}

impl<R: Real> DesignState<R> {
    pub fn new(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            points: Vec::new(),
            chol: Vec::new(),
        }
    }

    pub(crate) fn from_parts(kernel: KernelSpec, points: Vec<Vec<f64>>, chol: Vec<Vec<R>>) -> Self {
        Self {
            kernel,
            points,
            chol,
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> Result<PointSet> {
        PointSet::from_points(&self.points)
    }

    /// Row `i` of the Cholesky factor.
    pub fn chol_row(&self, i: usize) -> &[R] {
        &self.chol[i]
    }

    fn kernel_vector(&self, t: &[f64]) -> Result<Vec<R>> {
        self.points
            .iter()
            .map(|p| self.kernel.eval_real::<R>(t, p))
            .collect()
    }

    /// Solves `L w = v`.
    fn forward(&self, v: &[R]) -> Result<Vec<R>> {
        let mut w: Vec<R> = Vec::with_capacity(v.len());
        for (i, row) in self.chol.iter().enumerate() {
            let mut acc = v[i].clone();
            for (lij, wj) in row[..i].iter().zip(&w) {
                acc.mul_sub(lij, wj);
            }
            let piv = &row[i];
            if piv.to_f64() < R::PIVOT_FLOOR {
                return Err(Error::NumericalBreakdown(format!(
                    "Cholesky pivot {:e} at row {i}",
                    piv.to_f64()
                )));
            }
            w.push(acc.div(piv));
        }
        Ok(w)
    }

    /// Appends a design point, extending the factor by one row.
    pub fn add_point(&mut self, t: &[f64]) -> Result<()> {
        if t.len() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: t.len(),
            });
        }
        if let Some(other) = self.points.iter().position(|p| {
            p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < SEPARATION_TOL
        }) {
            return Err(Error::DuplicatePoint {
                index: self.points.len(),
                other,
                tol: SEPARATION_TOL,
            });
        }
        let v = self.kernel_vector(t)?;
        let mut row = self.forward(&v)?;
        let ktt: R = self.kernel.eval_real(t, t)?;
        let mut d2 = ktt;
        for x in &row {
            d2.mul_sub(x, x);
        }
        let d2f = d2.to_f64();
        if !(d2f > 0.0) || d2f.sqrt() < R::PIVOT_FLOOR {
            return Err(Error::NumericalBreakdown(format!(
                "new Cholesky diagonal sqrt({d2f:e}) below {:e}",
                R::PIVOT_FLOOR
            )));
        }
        row.push(d2.sqrt());
        self.chol.push(row);
        self.points.push(t.to_vec());
        Ok(())
    }

    /// `k(t,t) − v(t)ᵀ G⁻¹ v(t)`, clamped to `[0, k(t,t)]`.
    pub fn posterior_variance(&self, t: &[f64]) -> Result<R> {
        let ktt: R = self.kernel.eval_real(t, t)?;
        if self.is_empty() {
            return Ok(ktt);
        }
        let w = self.forward(&self.kernel_vector(t)?)?;
        let mut var = ktt.clone();
        for x in &w {
            var.mul_sub(x, x);
        }
        Ok(if var.to_f64() < 0.0 {
            R::zero()
        } else if var.gt(&ktt) {
            ktt
        } else {
            var
        })
    }

    /// `L⁻¹ obs`, reusable across many [`posterior_mean_with`](Self::posterior_mean_with) calls.
    pub fn whiten(&self, obs: &[R]) -> Result<Vec<R>> {
        if obs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: obs.len(),
            });
        }
        self.forward(obs)
    }

    /// Posterior mean at `t` from whitened observations.
    pub fn posterior_mean_with(&self, whitened: &[R], t: &[f64]) -> Result<R> {
        let w = self.forward(&self.kernel_vector(t)?)?;
        let mut acc = R::zero();
        for (a, b) in w.iter().zip(whitened) {
            acc.mul_acc(a, b);
        }
        Ok(acc)
    }

    /// `v(t)ᵀ G⁻¹ obs`, the kernel interpolant of `obs` at `t`.
    pub fn posterior_mean(&self, obs: &[R], t: &[f64]) -> Result<R> {
        if self.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let a = self.whiten(obs)?;
        self.posterior_mean_with(&a, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gram_matrix;
    use crate::real::Mp;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn gaussian() -> KernelSpec {
        KernelSpec::gaussian(1).unwrap()
    }

    #[test]
    fn unconditioned_variance_is_one() {
        let s = DesignState::<f64>::new(gaussian());
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(s.posterior_variance(&[t]).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_point_examples() {
        let mut s = DesignState::<f64>::new(gaussian());
        s.add_point(&[0.0]).unwrap();
        assert_eq!(s.chol_row(0), &[1.0]);
        let v = s.posterior_variance(&[1.0]).unwrap();
        assert!((v - (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert!((v - 0.864_664_716_763_387_3).abs() < 1e-15);
        let m = s.posterior_mean(&[1.0], &[1.0]).unwrap();
        assert!((m - (-1f64).exp()).abs() < 1e-15);
        assert!(s.posterior_variance(&[0.0]).unwrap() <= 1e-10);
    }

    #[test]
    fn zero_observations_give_zero_mean() {
        let mut s = DesignState::<f64>::new(KernelSpec::matern(2.0, 1).unwrap());
        for t in [0.1, 0.5, 0.9] {
            s.add_point(&[t]).unwrap();
        }
        for t in [0.0, 0.33, 1.0] {
            assert_eq!(s.posterior_mean(&[0.0; 3], &[t]).unwrap(), 0.0);
        }
        assert!(matches!(
            s.posterior_mean(&[0.0; 2], &[0.2]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn duplicate_rejected() {
        let mut s = DesignState::<f64>::new(gaussian());
        s.add_point(&[0.25]).unwrap();
        assert!(matches!(s.add_point(&[0.25]), Err(Error::DuplicatePoint { .. })));
    }

    #[test]
    fn near_duplicate_breaks_down() {
        let mut s = DesignState::<f64>::new(gaussian());
        s.add_point(&[0.25]).unwrap();
        assert!(matches!(
            s.add_point(&[0.25 + 1e-9]),
            Err(Error::NumericalBreakdown(_))
        ));
    }

    #[test]
    fn extended_precision_resolves_tiny_variances() {
        let mut s = DesignState::<Mp>::new(gaussian());
        for i in 0..14 {
            s.add_point(&[i as f64 / 13.0]).unwrap();
        }
        let v = s.posterior_variance(&[0.5 / 13.0]).unwrap().to_f64();
        assert!(v > 0.0 && v < 1e-20, "{v:e}");
    }

    /// Dense oracle: full LU solve against the Gram matrix.
    fn oracle_variance(k: &KernelSpec, pts: &[f64], t: f64) -> f64 {
        let set = PointSet::new(1, pts.to_vec()).unwrap();
        let g = gram_matrix(k, &set).unwrap();
        let v = DVector::from_iterator(pts.len(), pts.iter().map(|p| k.eval(&[t], &[*p]).unwrap()));
        let x = g.lu().solve(&v).unwrap();
        1.0 - v.dot(&x)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_dense_oracle(pts in proptest::collection::btree_set(0u32..200, 1..=8),
                                t in 0.0f64..=1.0) {
            let k = KernelSpec::matern(2.0, 1).unwrap();
            let pts: Vec<f64> = pts.into_iter().map(|i| i as f64 / 199.0).collect();
            let mut s = DesignState::<f64>::new(k.clone());
            for p in &pts {
                s.add_point(&[*p]).unwrap();
            }
            let got = s.posterior_variance(&[t]).unwrap();
            let want = oracle_variance(&k, &pts, t).max(0.0);
            // absolute: both sides lose ~eps·cond(G) to cancellation near design points
            prop_assert!((got - want).abs() <= 1e-8, "{} vs {}", got, want);
            // factor reproduces the Gram matrix
            let g = gram_matrix(&k, &PointSet::new(1, pts.clone()).unwrap()).unwrap();
            let n = pts.len();
            let l = DMatrix::from_fn(n, n, |i, j| if j <= i { s.chol_row(i)[j] } else { 0.0 });
            let rec = &l * l.transpose();
            prop_assert!((rec - &g).norm() <= 1e-8 * g.norm());
        }

        #[test]
        fn interpolates_at_design(pts in proptest::collection::btree_set(0u32..100, 1..=10),
                                  obs_seed in any::<u64>()) {
            let k = KernelSpec::matern(2.0, 1).unwrap();
            let pts: Vec<f64> = pts.into_iter().map(|i| i as f64 / 99.0).collect();
            let mut s = DesignState::<f64>::new(k);
            for p in &pts {
                s.add_point(&[*p]).unwrap();
            }
            let obs: Vec<f64> = (0..pts.len())
                .map(|i| ((obs_seed.wrapping_mul(i as u64 + 7) % 1000) as f64 / 500.0) - 1.0)
                .collect();
            for (i, p) in pts.iter().enumerate() {
                prop_assert!(s.posterior_variance(&[*p]).unwrap() <= 1e-10);
                let m = s.posterior_mean(&obs, &[*p]).unwrap();
                prop_assert!((m - obs[i]).abs() <= 1e-8 * obs[i].abs().max(1.0));
            }
        }

        #[test]
        fn order_invariance(a in 0u32..64, b in 0u32..64, rest in proptest::collection::btree_set(64u32..128, 0..5),
                            t in 0.0f64..=1.0) {
            prop_assume!(a != b);
            let k = KernelSpec::matern(2.5, 1).unwrap();
            let base: Vec<f64> = rest.into_iter().map(|i| i as f64 / 127.0).collect();
            let pa = a as f64 / 127.0;
            let pb = b as f64 / 127.0;
            let mut s1 = DesignState::<f64>::new(k.clone());
            let mut s2 = DesignState::<f64>::new(k);
            for p in &base {
                s1.add_point(&[*p]).unwrap();
                s2.add_point(&[*p]).unwrap();
            }
            s1.add_point(&[pa]).unwrap();
            s1.add_point(&[pb]).unwrap();
            s2.add_point(&[pb]).unwrap();
            s2.add_point(&[pa]).unwrap();
            let v1 = s1.posterior_variance(&[t]).unwrap();
            let v2 = s2.posterior_variance(&[t]).unwrap();
            prop_assert!((v1 - v2).abs() <= 1e-8);
        }
    }
}
