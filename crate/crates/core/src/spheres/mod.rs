//! Gaussian fields on `S^{d1} × S^{d2}` with coefficient law
//! `B_j = C(1+|j|)^{−2α−d1−d2}` at multi-degree `j = (j1, j2)`.

mod harmonics;

pub use harmonics::{degrees, gram, grid_operator_gap, harmonics, SphereGrid};

use crate::bounds::{bound_polynomial_multi, BoundResult, BoundSource};
use crate::error::{Error, Result};
use crate::rng::Stream;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Relative spectral mass allowed beyond the construction degree.
pub const TAIL_TOL: f64 = 1e-8;
/// Largest construction degree considered.
pub const MAX_JMAX: usize = 1_000_000;

/// `dim H_j(d)`, the number of linearly independent degree-`j` harmonics on `S^d`.
pub fn dim_hj(j: usize, d: usize) -> usize {
    assert!(d >= 1, "sphere dimension must be positive");
    match (j, d) {
        (0, _) => 1,
        (_, 1) => 2,
        // (2j+d−1)(j+d−2)! / (j!(d−1)!)
        _ => (2 * j + d - 1) * binomial(j + d - 2, d - 2) / (d - 1),
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `d_n = Σ_{l=0}^n D_{n−l}(d1) D_l(d2)`: the number of product harmonics of total degree `n`.
pub fn block_size(n: usize, d1: usize, d2: usize) -> usize {
    match (n, d1, d2) {
        (0, _, _) => 1,
        (_, 1, 1) => 4 * n,
        (_, 1, 2) | (_, 2, 1) => 2 * n * n + 2 * n + 1,
        (_, 2, 2) => 2 * n * (n + 1) * (n - 1) / 3 + (n + 1) * (2 * n + 1),
        _ => block_size_by_sum(n, d1, d2),
    }
}

fn block_size_by_sum(n: usize, d1: usize, d2: usize) -> usize {
    (0..=n).map(|l| dim_hj(n - l, d1) * dim_hj(l, d2)).sum()
}

/// `c_d` with `D_j(d) ≤ c_d (j+1)^{d−1}`.
pub fn harmonic_constant(d: usize) -> Result<f64> {
    match d {
        1 | 2 => Ok(2.0),
        _ => Err(Error::Unsupported(format!("spheres of dimension {d}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSphereSpec {
    pub d1: usize,
    pub d2: usize,
    pub c: f64,
    pub alpha: f64,
    /// Construction degree; the spectral mass beyond it is at most [`TAIL_TOL`] of the total.
    pub jmax: usize,
    /// Degrees up to here get individual coefficients; above it only each
    /// block's `Σ_m r_{j,m}²` is drawn.
    pub explicit_degree: usize,
}

impl ProductSphereSpec {
    /// Uses the smallest admissible `J_max` when `jmax` is `None`.
    pub fn new(d1: usize, d2: usize, c: f64, alpha: f64, jmax: Option<usize>, explicit_degree: usize) -> Result<Self> {
        harmonic_constant(d1)?;
        harmonic_constant(d2)?;
        if !(c > 0.0 && c.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere law needs C > 0 and alpha > 0, got {c}, {alpha}"
            )));
        }
        let mut spec = Self {
            d1,
            d2,
            c,
            alpha,
            jmax: 0,
            explicit_degree,
        };
        let min = spec.min_jmax()?;
        spec.jmax = match jmax {
            None => min,
            Some(j) if j >= min => j,
            Some(j) => {
                return Err(Error::JmaxTooSmall {
                    jmax: j,
                    tail: spec.relative_tail(j),
                    tol: TAIL_TOL,
                })
            }
        };
        spec.explicit_degree = explicit_degree.min(spec.jmax);
        Ok(spec)
    }

    /// `α' = 2α + d1 + d2`.
    pub fn exponent(&self) -> f64 {
        2.0 * self.alpha + (self.d1 + self.d2) as f64
    }

    /// `B_n = C (1+n)^{−α'}` for total degree `n`.
    pub fn coefficient_variance(&self, n: usize) -> f64 {
        self.c * (1.0 + n as f64).powf(-self.exponent())
    }

    fn block_constant(&self) -> f64 {
        harmonic_constant(self.d1).unwrap() * harmonic_constant(self.d2).unwrap()
    }

    /// Upper bound on `Σ_{n>J} B_n d_n` from `d_n ≤ c_{d1}c_{d2}(1+n)^{d1+d2−1}`.
    fn tail_mass(&self, j: usize) -> f64 {
        self.c * self.block_constant() * (1.0 + j as f64).powf(-2.0 * self.alpha) / (2.0 * self.alpha)
    }

    fn relative_tail(&self, j: usize) -> f64 {
        let head: f64 = (0..=j.min(MAX_JMAX))
            .map(|n| self.coefficient_variance(n) * block_size(n, self.d1, self.d2) as f64)
            .sum();
        self.tail_mass(j) / head
    }

    fn min_jmax(&self) -> Result<usize> {
        // total mass ≥ B_0 = C gives a degree that always suffices
        let ceiling = (self.block_constant() / (2.0 * self.alpha * TAIL_TOL)).powf(0.5 / self.alpha);
        let mut hi = ceiling.ceil().min(MAX_JMAX as f64) as usize;
        let mut head: Vec<f64> = Vec::with_capacity(hi + 1);
        let mut acc = 0.0;
        for n in 0..=hi {
            acc += self.coefficient_variance(n) * block_size(n, self.d1, self.d2) as f64;
            head.push(acc);
        }
        let ok = |j: usize| self.tail_mass(j) <= TAIL_TOL * head[j];
        if !ok(hi) {
            return Err(Error::JmaxTooSmall {
                jmax: hi,
                tail: self.tail_mass(hi) / head[hi],
                tol: TAIL_TOL,
            });
        }
        let mut lo = 0;
        if ok(0) {
            return Ok(0);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `E‖X − X^{[n]}‖² = Σ_{n<k≤J_max} B_k d_k`.
    pub fn expected_sq_error(&self, n: usize) -> f64 {
        (n + 1..=self.jmax)
            .map(|k| self.coefficient_variance(k) * block_size(k, self.d1, self.d2) as f64)
            .sum()
    }

    /// `Σ_{n ≤ J_max} d_n`.
    pub fn coefficient_count(&self) -> usize {
        (0..=self.jmax).map(|n| block_size(n, self.d1, self.d2)).sum()
    }
}

/// One realization: individual coefficients `r_{j,m}` up to the explicit
/// degree and per-block sums of squares up to `J_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalField {
    pub spec: ProductSphereSpec,
    pub stream: Stream,
    /// Explicit coefficients, by total degree, then `j1`, then `m1`, then `m2`.
    coefficients: Vec<f64>,
    /// `Σ_m r_{n,m}²` for each total degree `n ≤ J_max`.
    block_sq: Vec<f64>,
}

pub fn build_field(spec: &ProductSphereSpec, stream: Stream) -> SphericalField {
    let mut rng = stream.rng();
    let mut coefficients = Vec::new();
    let mut block_sq = Vec::with_capacity(spec.jmax + 1);
    for n in 0..=spec.jmax {
        let size = block_size(n, spec.d1, spec.d2);
        if n <= spec.explicit_degree {
            let start = coefficients.len();
            coefficients.extend((0..size).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
            block_sq.push(coefficients[start..].iter().map(|r: &f64| r * r).sum());
        } else {
            block_sq.push(ChiSquared::new(size as f64).unwrap().sample(&mut rng));
        }
    }
    SphericalField {
        spec: spec.clone(),
        stream,
        coefficients,
        block_sq,
    }
}

impl SphericalField {
    /// Explicit coefficients of total degree `n`.
    pub fn block(&self, n: usize) -> Option<&[f64]> {
        if n > self.spec.explicit_degree {
            return None;
        }
        let start: usize = (0..n).map(|k| block_size(k, self.spec.d1, self.spec.d2)).sum();
        Some(&self.coefficients[start..start + block_size(n, self.spec.d1, self.spec.d2)])
    }

    pub fn block_sq(&self) -> &[f64] {
        &self.block_sq
    }

    /// `‖X − X^{[n]}‖_{L²} = √(Σ_{n<|j|≤J_max} B_j Σ_m r_{j,m}²)`; `None` keeps no terms.
    pub fn l2_truncation_error(&self, n: Option<usize>) -> Result<f64> {
        let from = match n {
            None => 0,
            Some(n) if n <= self.spec.jmax => n + 1,
            Some(n) => {
                return Err(Error::InvalidParameter(format!(
                    "truncation degree {n} exceeds J_max = {}",
                    self.spec.jmax
                )))
            }
        };
        // smallest terms first
        let s: f64 = (from..=self.spec.jmax)
            .rev()
            .map(|k| self.spec.coefficient_variance(k) * self.block_sq[k])
            .sum();
        Ok(s.sqrt())
    }
}

/// `(1/(2α)) √(20 α' 2^{d1+d2−1} C c_{d1} c_{d2} max{1,τ}) n^{−α}`, the
/// blocked polynomial bound with `α' = 2α+d1+d2` and `β = d1+d2−1`.
pub fn sphere_bound(spec: &ProductSphereSpec, n: usize, tau: f64) -> Result<BoundResult> {
    if !(spec.alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", spec.alpha)));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sphere bound needs n >= 1".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let beta = (spec.d1 + spec.d2 - 1) as f64;
    let r = (20.0 * spec.exponent() * 2f64.powf(beta) * spec.c * spec.block_constant() * tau.max(1.0)).sqrt()
        / (2.0 * spec.alpha)
        * (n as f64).powf(-spec.alpha);
    Ok(BoundResult::new(r, n, tau, true, BoundSource::ProductSpheres))
}

/// The same radius computed through [`bound_polynomial_multi`].
pub fn sphere_bound_via_blocks(spec: &ProductSphereSpec, n: usize, tau: f64) -> Result<BoundResult> {
    let beta = (spec.d1 + spec.d2 - 1) as f64;
    bound_polynomial_multi(spec.c, spec.block_constant(), spec.exponent(), beta, n, tau)
}
