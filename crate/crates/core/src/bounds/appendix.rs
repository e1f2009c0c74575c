use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity};
use serde::Serialize;

/// `ψ(x) = −x − ½ ln(1 − 2x)`, the log-moment generating function of
/// `(r² − 1)/2` at `x`, for `0 ≤ x < ½`.
pub fn psi(x: f64) -> f64 {
    -x - 0.5 * (-2.0 * x).ln_1p()
}

/// `x² / (1 − 2x)`, an upper bound on [`psi`] for `0 ≤ x < ½`.
pub fn psi_upper(x: f64) -> f64 {
    x * x / (1.0 - 2.0 * x)
}

/// Upper bound on `Σ_{j>n} √(c_{j−1} − c_j)` for `c_j = C1 e^{−C2 j^{1/α}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailIntegral {
    pub value: f64,
    /// The incomplete-gamma closed form was used; otherwise quadrature.
    pub closed_form: bool,
}

/// `(11/10) √(C1 C2 α) (2/C2) (n−1)^{(α−1)/(2α)} e^{−(C2/2)(n−1)^{1/α}}`.
pub(crate) fn closed_tail(c1: f64, c2: f64, alpha: f64, n: usize) -> f64 {
    let m = n as f64 - 1.0;
    1.1 * (c1 * c2 * alpha).sqrt() * (2.0 / c2) * m.powf((alpha - 1.0) / (2.0 * alpha))
        * (-0.5 * c2 * m.powf(1.0 / alpha)).exp()
}

/// `√|f′(t)|` for `f(t) = C1 e^{−C2 t^{1/α}}`.
fn sqrt_slope(c1: f64, c2: f64, alpha: f64, t: f64) -> f64 {
    (c1 * c2 / alpha).sqrt() * t.powf((1.0 - alpha) / (2.0 * alpha)) * (-0.5 * c2 * t.powf(1.0 / alpha)).exp()
}

/// Bounds the tail by `∫_{n−1}^∞ √|f′(t)| dt`, using the closed incomplete-gamma
/// estimate inside `n > (11(α−1)/C2)^α + 1` and adaptive quadrature outside.
pub fn tail_integral_bound(c1: f64, c2: f64, alpha: f64, n: usize) -> Result<TailIntegral> {
    super::DecaySpec::exponential(c1, c2, alpha)?;
    if n == 0 {
        return Err(Error::InvalidParameter("tail integral needs n >= 1".into()));
    }
    if n as f64 > super::exponential_window(c2, alpha) {
        return Ok(TailIntegral {
            value: closed_tail(c1, c2, alpha, n),
            closed_form: true,
        });
    }
    let f = |t: f64| sqrt_slope(c1, c2, alpha, t);
    let x0 = n as f64 - 1.0;
    let value = if x0 > 0.0 {
        integrate_to_infinity(&f, x0, 1e-12)?
    } else {
        integrate(&f, 0.0, 1.0, 1e-12)?.0 + integrate_to_infinity(&f, 1.0, 1e-12)?
    };
    Ok(TailIntegral {
        value,
        closed_form: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::{gamma, gamma_ur};

    /// `∫_{n−1}^∞ √|f′| = √(C1C2α) (2/C2)^{(α+1)/2} Γ(a, u0)`, `a = (α+1)/2`,
    /// `u0 = (C2/2)(n−1)^{1/α}`.
    fn exact_integral(c1: f64, c2: f64, alpha: f64, n: usize) -> f64 {
        let a = (alpha + 1.0) / 2.0;
        let u0 = 0.5 * c2 * (n as f64 - 1.0).powf(1.0 / alpha);
        let q = if u0 > 0.0 { gamma_ur(a, u0) } else { 1.0 };
        (c1 * c2 * alpha).sqrt() * (2.0 / c2).powf(a) * gamma(a) * q
    }

    fn direct_tail(c1: f64, c2: f64, alpha: f64, n: usize, terms: usize) -> f64 {
        let c = super::super::SequenceSpec::stretched_exp(c1, c2, alpha).unwrap();
        (n + 1..=n + terms).map(|j| c.diff(j as f64).sqrt()).sum()
    }

    #[test]
    fn psi_inequality_on_grid() {
        for i in 0..10_000 {
            let x = 0.499 * i as f64 / 9_999.0;
            let p = psi(x);
            assert!(p >= -1e-14, "x={x}: {p}");
            assert!(p <= psi_upper(x) + 1e-14, "x={x}");
        }
    }

    #[test]
    fn quadrature_matches_incomplete_gamma() {
        for (c1, c2, alpha, n) in [(1.0, 1.0, 2.0, 5), (2.0, 0.5, 3.0, 40), (1.0, 1.5, 1.0, 1), (1.0, 1.0, 2.0, 1)] {
            let got = tail_integral_bound(c1, c2, alpha, n).unwrap();
            assert!(!got.closed_form);
            let want = exact_integral(c1, c2, alpha, n);
            assert!(((got.value - want) / want).abs() < 1e-9, "{got:?} vs {want}");
        }
    }

    #[test]
    fn closed_form_dominates_integral_and_sum() {
        for (c1, c2, alpha) in [(1.0, 1.0, 2.0), (1.0, 2.0, 1.5), (0.5, 0.3, 1.1)] {
            let w = super::super::exponential_window(c2, alpha).floor() as usize + 1;
            for n in [w, w + 7, 3 * w, 200.max(w)] {
                let b = tail_integral_bound(c1, c2, alpha, n).unwrap();
                assert!(b.closed_form);
                assert!(b.value >= exact_integral(c1, c2, alpha, n));
                assert!(b.value >= direct_tail(c1, c2, alpha, n, 10_000));
            }
        }
    }

    #[test]
    fn example_c1_c2_one_alpha_two() {
        let b = tail_integral_bound(1.0, 1.0, 2.0, 200).unwrap();
        assert!(b.closed_form);
        assert!(b.value >= direct_tail(1.0, 1.0, 2.0, 200, 10_000));
        assert!(sqrt_slope(1.0, 1.0, 2.0, 199.0).is_finite() && sqrt_slope(1.0, 1.0, 2.0, 199.0) > 0.0);
        let mut prev = f64::INFINITY;
        for n in [2, 10, 50, 130, 200, 400] {
            let v = tail_integral_bound(1.0, 1.0, 2.0, n).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }
}
