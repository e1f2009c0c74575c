//! Covariance kernels on `[0,1]^d` and Gram matrices.

pub mod bessel;
mod points;

pub use points::{PointSet, SEPARATION_TOL};

use crate::error::{Error, Result};
use crate::real::Real;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Kernel values tabulated on a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    grid: PointSet,
    values: Vec<f64>,
}

impl Tabulated {
    /// `values` is the row-major `m×m` kernel matrix on `grid`.
    pub fn new(grid: PointSet, values: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if values.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: values.len(),
            });
        }
        for i in 0..m {
            if !(values[i * m + i] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated kernel has nonpositive diagonal at {i}"
                )));
            }
            for j in 0..i {
                let (a, b) = (values[i * m + j], values[j * m + i]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1e-300) {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated kernel not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PointSet {
        &self.grid
    }

    fn index(&self, t: &[f64]) -> Result<usize> {
        self.grid
            .locate(t, SEPARATION_TOL)
            .ok_or_else(|| Error::Domain(format!("{t:?} is not a tabulation node")))
    }

    fn at(&self, t: &[f64], s: &[f64]) -> Result<f64> {
        let (i, j) = (self.index(t)?, self.index(s)?);
        let m = self.grid.len();
        // read the lower triangle so k(t,s) == k(s,t) bit for bit
        Ok(self.values[i.max(j) * m + i.min(j)])
    }
}

/// Stationary or tabulated covariance kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// Normalized Matérn kernel of Sobolev smoothness `s` on `[0,1]^d`,
    /// `2^{1−ν}/Γ(ν) r^ν K_ν(r)` with `ν = s − d/2`.
    Matern { s: f64, d: usize },
    /// `exp(−‖t−s‖²)`.
    Gaussian { d: usize },
    Tabulated(Arc<Tabulated>),
}

impl KernelSpec {
    pub fn matern(s: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(s > d as f64) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Matérn smoothness must exceed the dimension: s={s}, d={d}"
            )));
        }
        Ok(KernelSpec::Matern { s, d })
    }

    pub fn gaussian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(KernelSpec::Gaussian { d })
    }

    pub fn tabulated(table: Tabulated) -> Self {
        KernelSpec::Tabulated(Arc::new(table))
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::Matern { d, .. } | KernelSpec::Gaussian { d } => *d,
            KernelSpec::Tabulated(t) => t.grid.dim(),
        }
    }

    /// Matérn order ν, if applicable.
    pub fn nu(&self) -> Option<f64> {
        match self {
            KernelSpec::Matern { s, d } => Some(s - *d as f64 / 2.0),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelSpec::Matern { s, d } => format!("matern(s={s},d={d})"),
            KernelSpec::Gaussian { d } => format!("gaussian(d={d})"),
            KernelSpec::Tabulated(t) => format!("tabulated(m={})", t.grid.len()),
        }
    }

    fn check_point(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain(format!("{t:?}")));
        }
        Ok(())
    }

    /// k(t, s).
    pub fn eval(&self, t: &[f64], s: &[f64]) -> Result<f64> {
        self.eval_real::<f64>(t, s)
    }

    /// k(t, s) evaluated in `R`.
    ///
    /// Extended precision supports the Gaussian kernel, half-integer Matérn
    /// orders (closed form) and tabulated kernels.
    pub fn eval_real<R: Real>(&self, t: &[f64], s: &[f64]) -> Result<R> {
        self.check_point(t)?;
        self.check_point(s)?;
        // Order the arguments so the result is symmetric bit for bit.
        let (t, s) = if t <= s { (t, s) } else { (s, t) };
        match self {
            KernelSpec::Gaussian { .. } => Ok(sq_dist::<R>(t, s).neg().exp()),
            KernelSpec::Matern { .. } => {
                let nu = self.nu().expect("matern");
                let r2 = sq_dist::<R>(t, s);
                if let Some(p) = half_integer(nu) {
                    Ok(matern_half_integer(p, &r2.sqrt()))
                } else if R::EPSILON >= f64::EPSILON {
                    Ok(R::from_f64(matern_bessel(nu, r2.to_f64().sqrt())))
                } else {
                    Err(Error::Unsupported(format!(
                        "Matérn order {nu} in {} precision (only half-integer orders)",
                        R::NAME
                    )))
                }
            }
            KernelSpec::Tabulated(tab) => Ok(R::from_f64(tab.at(t, s)?)),
        }
    }

    /// k(t, t).
    pub fn variance(&self, t: &[f64]) -> Result<f64> {
        match self {
            KernelSpec::Tabulated(tab) => tab.at(t, t),
            _ => {
                self.check_point(t)?;
                Ok(1.0)
            }
        }
    }
}

fn sq_dist<R: Real>(t: &[f64], s: &[f64]) -> R {
    let mut acc = R::zero();
    for (a, b) in t.iter().zip(s) {
        let d = R::from_f64(*a).sub(&R::from_f64(*b));
        acc.mul_acc(&d, &d);
    }
    acc
}

fn half_integer(nu: f64) -> Option<u32> {
    let p = (nu - 0.5).round();
    ((nu - 0.5 - p).abs() < 1e-12 && (0.0..64.0).contains(&p)).then_some(p as u32)
}

/// `e^{−r} p!/(2p)! Σ_{i=0}^{p} (p+i)!/(i!(p−i)!) (2r)^{p−i}`, the Matérn kernel at ν = p + 1/2.
fn matern_half_integer<R: Real>(p: u32, r: &R) -> R {
    let two_r = r.add(r);
    // Horner in 2r, highest power first (i = 0).
    let mut poly = R::zero();
    for i in 0..=p {
        let coef = factorial_ratio(p, i);
        poly = poly.mul(&two_r).add(&R::from_f64(coef));
    }
    poly.mul(&r.neg().exp())
}

/// `p!/(2p)! · (p+i)!/(i!(p−i)!)`, exact in f64 for the orders we use.
fn factorial_ratio(p: u32, i: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    fact(p) / fact(2 * p) * fact(p + i) / (fact(i) * fact(p - i))
}

fn matern_bessel(nu: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let ln = (1.0 - nu) * std::f64::consts::LN_2 - statrs::function::gamma::ln_gamma(nu)
        + nu * r.ln()
        - r;
    ln.exp() * bessel::bessel_k_scaled(nu, r)
}

/// Matérn kernel as a function of distance through the Bessel route, for any ν > 0.
pub fn matern_by_bessel(nu: f64, r: f64) -> f64 {
    matern_bessel(nu, r)
}

/// Gram matrix `M[i][j] = k(t_i, t_j)`.
pub fn gram_matrix(spec: &KernelSpec, pts: &PointSet) -> Result<DMatrix<f64>> {
    if pts.is_empty() {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval(pts.point(i), pts.point(j))?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Mp;
    use proptest::prelude::*;

    #[test]
    fn gaussian_examples() {
        let g = KernelSpec::gaussian(1).unwrap();
        assert_eq!(g.eval(&[0.3], &[0.3]).unwrap(), 1.0);
        let pts = PointSet::new(1, vec![0.0, 1.0]).unwrap();
        let m = gram_matrix(&g, &pts).unwrap();
        let e1 = (-1f64).exp();
        assert_eq!(m[(0, 0)], 1.0);
        assert!((m[(0, 1)] - e1).abs() < 1e-16);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn matern_half_order_is_exponential() {
        // ν = 1/2 needs s = (d+1)/2, which no admissible (s, d) reaches; test the radial forms.
        let closed: f64 = matern_half_integer(0, &1.0);
        assert!((closed - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((matern_by_bessel(0.5, 1.0) - 0.367_879_441_171_442_3).abs() < 1e-13);
    }

    #[test]
    fn matern_closed_forms_match_bessel() {
        for i in 0..400 {
            let r = 1e-3 + (3.0 - 1e-3) * i as f64 / 399.0;
            let e = (-r).exp();
            for (nu, closed) in [(0.5, e), (1.5, (1.0 + r) * e), (2.5, (1.0 + r + r * r / 3.0) * e)] {
                let b = matern_by_bessel(nu, r);
                assert!(((b - closed) / closed).abs() < 1e-10, "nu={nu} r={r}");
                let p = half_integer(nu).unwrap();
                let c: f64 = matern_half_integer(p, &r);
                assert!(((c - closed) / closed).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matern_limits_at_zero() {
        let k = KernelSpec::matern(2.0, 1).unwrap();
        assert_eq!(k.eval(&[0.4], &[0.4]).unwrap(), 1.0);
        assert!((k.eval(&[0.4], &[0.4 + 1e-12]).unwrap() - 1.0).abs() < 1e-6);
        let k = KernelSpec::matern(1.7, 1).unwrap();
        assert_eq!(k.eval(&[0.4], &[0.4]).unwrap(), 1.0);
        assert!((k.eval(&[0.4], &[0.4 + 1e-12]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(KernelSpec::matern(1.0, 1), Err(Error::InvalidParameter(_))));
        let k = KernelSpec::gaussian(1).unwrap();
        assert!(matches!(k.eval(&[1.2], &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn extended_precision_agrees() {
        let g = KernelSpec::gaussian(2).unwrap();
        let t = [0.1, 0.9];
        let s = [0.7, 0.2];
        let a = g.eval(&t, &s).unwrap();
        let b: Mp = g.eval_real(&t, &s).unwrap();
        assert!((a - b.to_f64()).abs() < 1e-16);
        let m = KernelSpec::matern(2.0, 1).unwrap();
        let b: Mp = m.eval_real(&[0.1], &[0.35]).unwrap();
        assert!((m.eval(&[0.1], &[0.35]).unwrap() - b.to_f64()).abs() < 1e-15);
        let m = KernelSpec::matern(1.7, 1).unwrap();
        assert!(matches!(m.eval_real::<Mp>(&[0.1], &[0.3]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tabulated_lookup() {
        let grid = PointSet::uniform_grid(3, 1).unwrap();
        let vals = vec![1.0, 0.5, 0.1, 0.5, 1.0, 0.5, 0.1, 0.5, 1.0];
        let k = KernelSpec::tabulated(Tabulated::new(grid, vals).unwrap());
        assert_eq!(k.eval(&[0.0], &[1.0]).unwrap(), 0.1);
        assert_eq!(k.variance(&[0.5]).unwrap(), 1.0);
        assert!(k.eval(&[0.25], &[0.0]).is_err());
    }

    fn arb_points(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, d), 1..64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn symmetric_exactly(t in proptest::collection::vec(0.0f64..=1.0, 2),
                             s in proptest::collection::vec(0.0f64..=1.0, 2),
                             smooth in 1.05f64..4.0) {
            for k in [KernelSpec::gaussian(2).unwrap(), KernelSpec::matern(smooth + 1.0, 2).unwrap()] {
                prop_assert_eq!(k.eval(&t, &s).unwrap(), k.eval(&s, &t).unwrap());
                prop_assert!(k.eval(&t, &t).unwrap() > 0.0);
            }
        }

        #[test]
        fn gram_is_psd(pts in arb_points(2), smooth in 1.2f64..3.5) {
            let Ok(set) = PointSet::from_points(&pts) else { return Ok(()); };
            for k in [KernelSpec::gaussian(2).unwrap(), KernelSpec::matern(smooth + 1.0, 2).unwrap()] {
                let m = gram_matrix(&k, &set).unwrap();
                let trace = m.trace();
                let min = m.symmetric_eigen().eigenvalues.min();
                prop_assert!(min >= -1e-8 * trace, "min eigenvalue {} trace {}", min, trace);
            }
        }
    }
}
