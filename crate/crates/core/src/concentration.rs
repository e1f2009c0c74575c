//! Weighted chi-squared series `Z = Σ_j b_j (r_j² − 1)`: the tail bound
//! `μ(Z ≥ 2‖b‖₂√τ + 2‖b‖∞τ) ≤ e^{−τ}`, its Massart-type form, and Monte Carlo
//! checks of both.

use crate::bounds::tail_sum;
use crate::error::{Error, Result};
use crate::rng::{replicate, Stream};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Tail-standard-deviation tolerance used by [`mc_violation_rate`].
pub const DEFAULT_TRUNC_TOL: f64 = 1e-4;
/// Largest number of terms [`sample_z`] will draw.
pub const MAX_TERMS: usize = 100_000_000;

/// Tail model for `j` beyond the explicit prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightTail {
    None,
    /// `scale·ratio^j`
    Geometric { scale: f64, ratio: f64 },
    /// `coef·j^{−exponent}`
    Power { coef: f64, exponent: f64 },
}

/// Nonnegative summable weights `b_1, b_2, …`: an explicit prefix followed by
/// a closed-form tail, with cached norms (upper bounds where a tail is summed).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSeq {
    prefix: Vec<f64>,
    tail: WeightTail,
    l1: f64,
    l2: f64,
    linf: f64,
    /// `suffix_sq[k] = Σ_{k < j ≤ P} b_j²`
    #[serde(skip)]
    suffix_sq: Vec<f64>,
}

impl WeightSeq {
    pub fn finite(b: Vec<f64>) -> Result<Self> {
        Self::new(b, WeightTail::None)
    }

    /// `b_j = scale·ratio^j`, `j ≥ 1`.
    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        Self::new(Vec::new(), WeightTail::Geometric { scale, ratio })
    }

    /// `b_j = coef·j^{−exponent}`, `j ≥ 1`.
    pub fn power(coef: f64, exponent: f64) -> Result<Self> {
        Self::new(Vec::new(), WeightTail::Power { coef, exponent })
    }

    pub fn new(prefix: Vec<f64>, tail: WeightTail) -> Result<Self> {
        if prefix.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let p = prefix.len();
        let start = (p + 1) as f64;
        let (t1, t2, tinf) = match tail {
            WeightTail::None => (0.0, 0.0, 0.0),
            WeightTail::Geometric { scale, ratio } => {
                if !(scale >= 0.0 && scale.is_finite() && ratio > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric weights need scale >= 0 and ratio > 0, got {scale}, {ratio}"
                    )));
                }
                if ratio >= 1.0 {
                    return Err(Error::NonsummableTail(format!("geometric ratio {ratio} >= 1")));
                }
                let first = scale * ratio.powf(start);
                (
                    first / (1.0 - ratio),
                    first * first / (1.0 - ratio * ratio),
                    first,
                )
            }
            WeightTail::Power { coef, exponent } => {
                if !(coef >= 0.0 && coef.is_finite() && exponent.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power weights need coef >= 0, got {coef}"
                    )));
                }
                if exponent <= 1.0 {
                    return Err(Error::NonsummableTail(format!("power exponent {exponent} <= 1")));
                }
                if coef == 0.0 {
                    return Self::new(prefix, WeightTail::None);
                }
                let l1 = tail_sum(p + 1, 0, &|x| coef * x.powf(-exponent), &mut |_, _| Ok(()))?;
                let l2 = tail_sum(p + 1, 0, &|x| (coef * x.powf(-exponent)).powi(2), &mut |_, _| Ok(()))?;
                (l1.value, l2.value, coef * start.powf(-exponent))
            }
        };
        let mut suffix_sq = vec![0.0; p + 1];
        for k in (0..p).rev() {
            suffix_sq[k] = suffix_sq[k + 1] + prefix[k] * prefix[k];
        }
        let l1 = prefix.iter().sum::<f64>() + t1;
        let l2 = (suffix_sq[0] + t2).sqrt();
        let linf = prefix.iter().copied().fold(tinf, f64::max);
        Ok(Self {
            prefix,
            tail,
            l1,
            l2,
            linf,
            suffix_sq,
        })
    }

    /// `b_j` for `j ≥ 1`.
    pub fn get(&self, j: usize) -> f64 {
        assert!(j >= 1, "weights are indexed from 1");
        if let Some(b) = self.prefix.get(j - 1) {
            return *b;
        }
        match self.tail {
            WeightTail::None => 0.0,
            WeightTail::Geometric { scale, ratio } => scale * ratio.powi(j as i32),
            WeightTail::Power { coef, exponent } => coef * (j as f64).powf(-exponent),
        }
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn linf(&self) -> f64 {
        self.linf
    }

    pub fn is_zero(&self) -> bool {
        self.linf == 0.0
    }

    /// Upper bound on `Σ_{j>k} b_j²`.
    pub fn tail_sq(&self, k: usize) -> f64 {
        let p = self.prefix.len();
        let explicit = self.suffix_sq.get(k).copied().unwrap_or(0.0);
        let from = k.max(p);
        let tail = match self.tail {
            WeightTail::None => 0.0,
            WeightTail::Geometric { scale, ratio } => {
                let first = scale * ratio.powi(from as i32 + 1);
                first * first / (1.0 - ratio * ratio)
            }
            // Σ_{j>m} j^{−2e} ≤ ∫_m^∞ x^{−2e} dx for m ≥ 1, and ≤ 1 + ∫_1^∞ at m = 0
            WeightTail::Power { coef, exponent } => {
                let m = from as f64;
                let int = |m: f64| m.powf(1.0 - 2.0 * exponent) / (2.0 * exponent - 1.0);
                coef * coef * if from == 0 { 1.0 + int(1.0) } else { int(m) }
            }
        };
        explicit + tail
    }

    /// Number of terms after which the tail's standard deviation
    /// `√(2 Σ_{j>K} b_j²)` drops below `tol`.
    pub fn truncation(&self, tol: f64) -> Result<usize> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation tolerance must be positive, got {tol}")));
        }
        let ok = |k: usize| (2.0 * self.tail_sq(k)).sqrt() < tol;
        if matches!(self.tail, WeightTail::None) {
            return Ok((0..=self.prefix.len()).find(|&k| ok(k)).unwrap_or(self.prefix.len()));
        }
        let mut hi = self.prefix.len().max(1);
        while !ok(hi) {
            if hi >= MAX_TERMS {
                return Err(Error::TruncationUnreachable { tol, cap: MAX_TERMS });
            }
            hi = (hi * 2).min(MAX_TERMS);
        }
        let mut lo = hi / 2;
        if ok(lo) {
            return Ok(lo);
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
}

/// `2‖b‖₂√τ + 2‖b‖∞τ`.
pub fn chisq_tail_bound(b: &WeightSeq, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(2.0 * b.l2() * tau.sqrt() + 2.0 * b.linf() * tau)
}

/// `cτ + √(2vτ)`.
pub fn massart_tail_radius(v: f64, c: f64, tau: f64) -> Result<f64> {
    if !(v > 0.0 && c > 0.0 && tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "massart radius needs v, c, tau > 0, got {v}, {c}, {tau}"
        )));
    }
    Ok(c * tau + (2.0 * v * tau).sqrt())
}

/// One draw of `Σ_{j ≤ K} b_j (r_j² − 1)` with `K` from [`WeightSeq::truncation`].
pub fn sample_z(b: &WeightSeq, stream: Stream, trunc_tol: f64) -> Result<f64> {
    let k = b.truncation(trunc_tol)?;
    Ok(draw(b, k, stream))
}

fn draw(b: &WeightSeq, k: usize, stream: Stream) -> f64 {
    let mut rng = stream.rng();
    (1..=k)
        .map(|j| {
            let r: f64 = StandardNormal.sample(&mut rng);
            b.get(j) * (r * r - 1.0)
        })
        .sum()
}

/// `3·√(p(1−p)/m)`.
pub fn binomial_halfwidth(p: f64, m: usize) -> f64 {
    3.0 * (p * (1.0 - p) / m as f64).sqrt()
}

/// Empirical frequency of `Z ≥ bound` with its 3σ binomial half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViolationRate {
    pub tau: f64,
    pub bound: f64,
    pub rate: f64,
    pub ci_halfwidth: f64,
    pub samples: usize,
}

/// Exceedance of `bound`; a zero bound uses the strict event `Z > 0`, since
/// `Z ≥ 0` holds trivially when `b = 0`.
pub fn exceeds(z: f64, bound: f64) -> bool {
    if bound == 0.0 {
        z > 0.0
    } else {
        z >= bound
    }
}

/// `m` draws of `Z` at the default truncation; replicate `i` uses stream `(seed, i)`.
pub fn sample_zs(b: &WeightSeq, m: usize, seed: u64) -> Result<Vec<f64>> {
    let k = b.truncation(DEFAULT_TRUNC_TOL)?;
    Ok(replicate(m, |i| draw(b, k, Stream::new(seed, i))))
}

/// Violation rates of [`chisq_tail_bound`] at several `τ`, sharing the
/// `m` draws of [`sample_zs`].
pub fn mc_violation_rates(b: &WeightSeq, taus: &[f64], m: usize, seed: u64) -> Result<Vec<ViolationRate>> {
    if m < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 samples, got {m}")));
    }
    let bounds = taus
        .iter()
        .map(|&t| chisq_tail_bound(b, t))
        .collect::<Result<Vec<_>>>()?;
    let z = sample_zs(b, m, seed)?;
    Ok(taus
        .iter()
        .zip(&bounds)
        .map(|(&tau, &bound)| {
            let hits = z.iter().filter(|&&z| exceeds(z, bound)).count();
            let rate = hits as f64 / m as f64;
            ViolationRate {
                tau,
                bound,
                rate,
                ci_halfwidth: binomial_halfwidth(rate, m),
                samples: m,
            }
        })
        .collect())
}

pub fn mc_violation_rate(b: &WeightSeq, tau: f64, m: usize, seed: u64) -> Result<ViolationRate> {
    Ok(mc_violation_rates(b, &[tau], m, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::erf::erfc;

    #[test]
    fn bound_examples() {
        let one = WeightSeq::finite(vec![1.0]).unwrap();
        assert_eq!(chisq_tail_bound(&one, 1.0).unwrap(), 4.0);
        let zero = WeightSeq::finite(vec![0.0, 0.0]).unwrap();
        for tau in [0.1, 1.0, 7.0] {
            assert_eq!(chisq_tail_bound(&zero, tau).unwrap(), 0.0);
        }
        let geo = WeightSeq::geometric(1.0, 0.5).unwrap();
        let want = 2.0 / 3f64.sqrt() + 1.0;
        assert!((chisq_tail_bound(&geo, 1.0).unwrap() - want).abs() < 1e-14);
        assert!(chisq_tail_bound(&one, 0.0).is_err());
    }

    #[test]
    fn massart_examples() {
        assert_eq!(massart_tail_radius(2.0, 2.0, 1.0).unwrap(), 4.0);
        for b in [
            WeightSeq::geometric(1.0, 0.5).unwrap(),
            WeightSeq::power(1.0, 2.0).unwrap(),
            WeightSeq::finite(vec![0.3, 0.1, 0.7]).unwrap(),
        ] {
            for tau in [0.5, 1.0, 3.0] {
                let m = massart_tail_radius(2.0 * b.l2().powi(2), 2.0 * b.linf(), tau).unwrap();
                assert!((m - chisq_tail_bound(&b, tau).unwrap()).abs() < 1e-12);
            }
        }
        assert!(massart_tail_radius(2.0, 2.0, 1e-12).unwrap() < 1e-5);
        assert!(massart_tail_radius(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn power_norms_match_zeta() {
        let b = WeightSeq::power(1.0, 2.0).unwrap();
        let pi = std::f64::consts::PI;
        assert!((b.l1() - pi * pi / 6.0).abs() < 1e-9);
        assert!((b.l2() - (pi.powi(4) / 90.0).sqrt()).abs() < 1e-9);
        assert_eq!(b.linf(), 1.0);
        assert!(matches!(WeightSeq::power(1.0, 1.0), Err(Error::NonsummableTail(_))));
        assert!(matches!(WeightSeq::geometric(1.0, 1.0), Err(Error::NonsummableTail(_))));
    }

    #[test]
    fn truncation_meets_tolerance() {
        for b in [
            WeightSeq::geometric(1.0, 0.5).unwrap(),
            WeightSeq::power(1.0, 2.0).unwrap(),
            WeightSeq::new(vec![0.5, 0.5], WeightTail::Power { coef: 2.0, exponent: 1.5 }).unwrap(),
        ] {
            for tol in [1e-2, 1e-4] {
                let k = b.truncation(tol).unwrap();
                assert!((2.0 * b.tail_sq(k)).sqrt() < tol);
                assert!(k == 0 || (2.0 * b.tail_sq(k - 1)).sqrt() >= tol);
                // tail_sq is an upper bound on the actual tail
                let actual: f64 = (k + 1..k + 200_000).map(|j| b.get(j).powi(2)).sum();
                assert!(b.tail_sq(k) >= actual);
            }
        }
        assert_eq!(WeightSeq::finite(vec![1.0, 0.0]).unwrap().truncation(1e-3).unwrap(), 1);
    }

    #[test]
    fn single_weight_moments() {
        let b = WeightSeq::finite(vec![1.0]).unwrap();
        let m = 100_000;
        let z = replicate(m, |i| sample_z(&b, Stream::new(11, i), 1e-6).unwrap());
        let mean = z.iter().sum::<f64>() / m as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        // Var(r²−1) = 2, Var of the sample variance ≈ (μ4 − σ⁴)/m = (60 − 4)/m
        assert!(mean.abs() < 5.0 * (2.0 / m as f64).sqrt(), "{mean}");
        assert!((var - 2.0).abs() < 5.0 * (56.0 / m as f64).sqrt(), "{var}");
    }

    #[test]
    fn geometric_weights_centered() {
        let b = WeightSeq::geometric(1.0, 0.5).unwrap();
        let m = 100_000;
        let z = replicate(m, |i| sample_z(&b, Stream::new(5, i), 1e-6).unwrap());
        let mean = z.iter().sum::<f64>() / m as f64;
        let sd = (2.0f64 / 3.0).sqrt();
        assert!(mean.abs() < 5.0 * sd / (m as f64).sqrt(), "{mean}");
    }

    #[test]
    fn zero_weights() {
        let b = WeightSeq::finite(vec![0.0; 3]).unwrap();
        assert_eq!(sample_z(&b, Stream::new(1, 2), 1e-3).unwrap(), 0.0);
        let r = mc_violation_rate(&b, 1.0, 1000, 3).unwrap();
        assert_eq!(r.rate, 0.0);
        assert!(mc_violation_rate(&b, 1.0, 999, 3).is_err());
    }

    #[test]
    fn chi_square_one_dof_oracle() {
        // P(χ²₁ ≥ 5) = erfc(√(5/2))
        let exact = erfc((2.5f64).sqrt());
        assert!((exact - 0.025347).abs() < 1e-6);
        let b = WeightSeq::finite(vec![1.0]).unwrap();
        let r = mc_violation_rate(&b, 1.0, 100_000, 42).unwrap();
        assert!((r.rate - exact).abs() <= binomial_halfwidth(exact, r.samples), "{r:?}");
        assert!(r.rate <= (-1.0f64).exp());
        let far = mc_violation_rate(&b, 10.0, 100_000, 42).unwrap();
        assert!(far.rate <= (-10.0f64).exp() + binomial_halfwidth((-10.0f64).exp(), far.samples));
    }

    #[test]
    fn rates_reproducible() {
        let b = WeightSeq::power(1.0, 2.0).unwrap();
        let a = mc_violation_rates(&b, &[0.5, 1.0], 2000, 9).unwrap();
        let c = mc_violation_rates(&b, &[0.5, 1.0], 2000, 9).unwrap();
        assert_eq!(a, c);
    }

    proptest! {
        #[test]
        fn norm_ordering(prefix in proptest::collection::vec(0.0f64..10.0, 0..20),
                         kind in 0u8..3, s in 0.0f64..5.0, q in 0.05f64..0.95, e in 1.1f64..4.0) {
            let tail = match kind {
                0 => WeightTail::None,
                1 => WeightTail::Geometric { scale: s, ratio: q },
                _ => WeightTail::Power { coef: s, exponent: e },
            };
            let b = WeightSeq::new(prefix, tail).unwrap();
            prop_assert!(b.linf() <= b.l2() * (1.0 + 1e-12) + 1e-300);
            prop_assert!(b.l2() <= b.l1() * (1.0 + 1e-12) + 1e-300);
        }
    }
}
