//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integral of `f` over `[a, b]` to relative tolerance `rtol`.
///
/// Returns the estimate and its error estimate. Fails when the subdivision
/// budget runs out or the integrand is not finite.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> Result<(f64, f64)> {
    const MAX_INTERVALS: usize = 2000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= rtol * total.abs() || err <= f64::MIN_POSITIVE {
            return Ok((total, err));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NumericalBreakdown(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {total:e} +- {err:e}"
            )));
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integral of a nonnegative, eventually decreasing `f` over `[x0, ∞)`, `x0 > 0`.
///
/// Uses `x = x0·e^s`, which turns power-law tails into exponentially decaying
/// integrands. A tail whose transformed integrand has not decayed by
/// `s = 600` is reported as nonsummable.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, x0: f64, rtol: f64) -> Result<f64> {
    if !(x0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lower limit must be positive, got {x0}"
        )));
    }
    let g = |s: f64| {
        let x = x0 * s.exp();
        f(x) * x
    };
    let g0 = g(0.0);
    if g0 == 0.0 {
        // Probe a little further in case f vanishes only at the start point.
        if g(1.0) == 0.0 && g(8.0) == 0.0 {
            return Ok(0.0);
        }
    }
    let scale = g0.abs().max(g(1.0).abs());
    let mut upper = 1.0;
    loop {
        let gu = g(upper);
        if gu == 0.0 || gu.abs() <= 1e-15 * scale {
            break;
        }
        upper *= 2.0;
        if upper > 600.0 {
            return Err(Error::NonsummableTail(format!(
                "integrand does not decay beyond x = {x0:e}"
            )));
        }
    }
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut width = 1.0f64;
    while lo < upper {
        let hi = (lo + width).min(upper);
        total += integrate(&g, lo, hi, rtol)?.0;
        lo = hi;
        width *= 2.0;
    }
    Ok(total)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(&|x: f64| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn power_tail() {
        // ∫_10^∞ x^-3 = 1/200
        let v = integrate_to_infinity(&|x: f64| x.powi(-3), 10.0, 1e-13).unwrap();
        assert!((v / 0.005 - 1.0).abs() < 1e-11, "{v}");
        // slowly decaying ∫_1^∞ x^-1.1 = 10
        let v = integrate_to_infinity(&|x: f64| x.powf(-1.1), 1.0, 1e-13).unwrap();
        assert!((v / 10.0 - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_infinity(&|x: f64| (-x).exp(), 2.0, 1e-13).unwrap();
        assert!((v / (-2f64).exp() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn divergent_tail_detected() {
        let r = integrate_to_infinity(&|x: f64| 1.0 / x, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::NonsummableTail(_))));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - exact).abs() < 1e-13, "n={n} {got} {exact}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }
}
