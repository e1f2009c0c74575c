//! Concentration radii for `‖X − X^{(n)}‖`: numeric tail sums for general
//! sequences, closed forms for polynomial and exponential decay.
//!
//! Every radius `r` satisfies `μ(‖X − X^{(n)}‖ ≤ r) > 1 − e^{−τ}` under the
//! respective decay hypothesis.

mod appendix;
mod measured;
mod sequence;
mod series;

pub use appendix::{psi, psi_upper, tail_integral_bound, TailIntegral};
pub use measured::{bound_measured, TraceTail};
pub use sequence::SequenceSpec;
pub use series::{tail_sum, SeriesSum, SERIES_MAX_TERMS, SERIES_RTOL};

use crate::error::{Error, Result};
use serde::Serialize;

/// Which bound produced a radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    GeneralTailSums,
    SingleTailSum,
    MeasuredTrace,
    PolynomialBlocks,
    Polynomial,
    Exponential,
    ProductSpheres,
}

impl BoundSource {
    pub fn id(&self) -> &'static str {
        match self {
            BoundSource::GeneralTailSums => "general-tail-sums",
            BoundSource::SingleTailSum => "single-tail-sum",
            BoundSource::MeasuredTrace => "measured-trace",
            BoundSource::PolynomialBlocks => "polynomial-blocks",
            BoundSource::Polynomial => "polynomial",
            BoundSource::Exponential => "exponential",
            BoundSource::ProductSpheres => "product-spheres",
        }
    }
}

/// Truncation and hypothesis-check record of a numeric bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumDiagnostics {
    pub sums: Vec<SeriesSum>,
    /// Hypotheses were verified for indices up to here.
    pub checked_up_to: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub radius: f64,
    pub n: usize,
    pub tau: f64,
    /// `1 − e^{−τ}`
    pub confidence: f64,
    /// The n-window of the closed form is met.
    pub valid: bool,
    pub source: BoundSource,
    pub diagnostics: Option<SumDiagnostics>,
}

impl BoundResult {
    pub(crate) fn new(radius: f64, n: usize, tau: f64, valid: bool, source: BoundSource) -> Self {
        Self {
            radius,
            n,
            tau,
            confidence: -(-tau).exp_m1(),
            valid,
            source,
            diagnostics: None,
        }
    }
}

/// Decay model of the conditioning gap `c_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecaySpec {
    /// `c_n ≤ C (n+1)^{−α}`
    Polynomial { c: f64, alpha: f64 },
    /// `c_n ≤ C (n+1)^{−α}` over eigenspaces of dimension `d_n ≤ C_d (n+1)^β`
    PolynomialMulti { c: f64, alpha: f64, c_d: f64, beta: f64 },
    /// `c_n ≤ C1 e^{−C2 n^{1/α}}`
    Exponential { c1: f64, c2: f64, alpha: f64 },
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn pos(name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"))
}

impl DecaySpec {
    pub fn polynomial(c: f64, alpha: f64) -> Result<Self> {
        let d = DecaySpec::Polynomial { c, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn polynomial_multi(c: f64, alpha: f64, c_d: f64, beta: f64) -> Result<Self> {
        let d = DecaySpec::PolynomialMulti { c, alpha, c_d, beta };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(c1: f64, c2: f64, alpha: f64) -> Result<Self> {
        let d = DecaySpec::Exponential { c1, c2, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecaySpec::Polynomial { c, alpha } => {
                pos("C", c)?;
                require(alpha > 1.0 && alpha.is_finite(), || {
                    format!("polynomial decay needs alpha > 1, got {alpha}")
                })
            }
            DecaySpec::PolynomialMulti { c, alpha, c_d, beta } => {
                pos("C", c)?;
                pos("C_d", c_d)?;
                require(beta >= 0.0 && alpha > 1.0 + beta && alpha.is_finite(), || {
                    format!("need alpha > 1 + beta >= 1, got alpha={alpha}, beta={beta}")
                })
            }
            DecaySpec::Exponential { c1, c2, alpha } => {
                pos("C1", c1)?;
                pos("C2", c2)?;
                require(alpha >= 1.0 && alpha.is_finite(), || {
                    format!("exponential decay needs alpha >= 1, got {alpha}")
                })
            }
        }
    }

    /// `c_j` of the model.
    pub fn gap_sequence(&self) -> SequenceSpec {
        match *self {
            DecaySpec::Polynomial { c, alpha } | DecaySpec::PolynomialMulti { c, alpha, .. } => {
                SequenceSpec::PowerLaw {
                    coef: c,
                    offset: 1.0,
                    exponent: -alpha,
                }
            }
            DecaySpec::Exponential { c1, c2, alpha } => SequenceSpec::StretchedExp { c1, c2, alpha },
        }
    }

    /// Closed-form radius.
    pub fn bound(&self, n: usize, tau: f64) -> Result<BoundResult> {
        match *self {
            DecaySpec::Polynomial { c, alpha } => bound_polynomial(c, alpha, n, tau),
            DecaySpec::PolynomialMulti { c, alpha, c_d, beta } => {
                bound_polynomial_multi(c, c_d, alpha, beta, n, tau)
            }
            DecaySpec::Exponential { c1, c2, alpha } => bound_exponential(c1, c2, alpha, n, tau),
        }
    }

    /// Numeric radius with the weights used to derive the closed form:
    /// `a_j = j^{(α+β+1)/2}` for polynomial decay, the single-sum form for
    /// exponential decay.
    pub fn numeric_bound(&self, n: usize, tau: f64) -> Result<BoundResult> {
        self.validate()?;
        match *self {
            DecaySpec::Polynomial { alpha, .. } => {
                let a = SequenceSpec::power_law(1.0, 0.0, (alpha + 1.0) / 2.0)?;
                bound_general(&self.gap_sequence(), &SequenceSpec::Constant(1.0), &a, n, tau)
            }
            DecaySpec::PolynomialMulti { alpha, c_d, beta, .. } => {
                let a = SequenceSpec::power_law(1.0, 0.0, (alpha + beta + 1.0) / 2.0)?;
                let d = SequenceSpec::power_law(c_d, 1.0, beta)?;
                bound_general(&self.gap_sequence(), &d, &a, n, tau)
            }
            DecaySpec::Exponential { .. } => bound_simple(&self.gap_sequence(), n, tau),
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    require(tau > 0.0 && tau.is_finite(), || format!("tau must be positive, got {tau}"))
}

fn scale(tau: f64) -> f64 {
    5.0 * tau.max(1.0)
}

/// Relative slack for monotonicity checks on evaluated terms.
const MONO_RTOL: f64 = 1e-12;

/// Finite proxy for `x_j → 0`: on geometric checkpoints
/// `first, 2·first, 4·first, … ≤ last`, the final step must not increase.
fn trend_to_zero(first: usize, last: usize, x: impl Fn(f64) -> f64, what: &str) -> Result<()> {
    let mut j = first.max(1);
    while j * 4 <= last {
        j *= 2;
    }
    if j * 2 > last {
        return Ok(());
    }
    let (prev, v) = (x(j as f64), x((2 * j) as f64));
    if v > prev * (1.0 + 1e-9) {
        return Err(Error::HypothesisViolation {
            what: format!("{what} increases from {prev:e} to {v:e}"),
            index: 2 * j,
        });
    }
    Ok(())
}

/// Radius `√(5 max{1,τ} · S₁ · S₂)` with `S₁ = Σ_{j>n} a_j(c_{j−1} − c_j)` and
/// `S₂ = Σ_{j>n} d_j / a_j`, for any nondecreasing weights `a_j` with
/// `a_j c_j → 0`.
pub fn bound_general(
    c: &SequenceSpec,
    d: &SequenceSpec,
    a: &SequenceSpec,
    n: usize,
    tau: f64,
) -> Result<BoundResult> {
    check_tau(tau)?;
    let smooth = c.smooth_from().max(d.smooth_from()).max(a.smooth_from());
    let s1 = tail_sum(
        n + 1,
        smooth,
        &|x| a.value(x) * c.diff(x),
        &mut |j, _| {
            let x = j as f64;
            if c.diff(x) < -MONO_RTOL * c.value(x - 1.0) {
                return Err(Error::HypothesisViolation {
                    what: "c_j must be nonincreasing".into(),
                    index: j,
                });
            }
            let (aj, ap) = (a.value(x), a.value(x - 1.0));
            if !(aj > 0.0) || aj < ap * (1.0 - MONO_RTOL) {
                return Err(Error::HypothesisViolation {
                    what: "a_j must be positive and nondecreasing".into(),
                    index: j,
                });
            }
            Ok(())
        },
    )?;
    let s2 = tail_sum(n + 1, smooth, &|x| d.value(x) / a.value(x), &mut |j, _| {
        if d.value(j as f64) > 0.0 {
            Ok(())
        } else {
            Err(Error::HypothesisViolation {
                what: "d_j must be positive".into(),
                index: j,
            })
        }
    })?;
    let checked = s1.last_index.max(s2.last_index);
    trend_to_zero(n + 1, checked, |x| a.value(x) * c.value(x), "a_j c_j")?;
    let mut r = BoundResult::new(
        (scale(tau) * s1.value * s2.value).sqrt(),
        n,
        tau,
        true,
        BoundSource::GeneralTailSums,
    );
    r.diagnostics = Some(SumDiagnostics {
        sums: vec![s1, s2],
        checked_up_to: checked,
        note: None,
    });
    Ok(r)
}

/// Radius `√(5 max{1,τ}) Σ_{j>n} √(c_{j−1} − c_j)` for gaps whose
/// decrements are nonincreasing.
pub fn bound_simple(c: &SequenceSpec, n: usize, tau: f64) -> Result<BoundResult> {
    check_tau(tau)?;
    let s = tail_sum(
        n + 1,
        c.smooth_from(),
        &|x| c.diff(x).max(0.0).sqrt(),
        &mut |j, _| {
            let x = j as f64;
            let g = c.diff(x);
            if g < -MONO_RTOL * c.value(x - 1.0) {
                return Err(Error::HypothesisViolation {
                    what: "c_j must be nonincreasing".into(),
                    index: j,
                });
            }
            if j >= 2 && g > c.diff(x - 1.0).max(0.0) * (1.0 + 1e-9) {
                return Err(Error::HypothesisViolation {
                    what: "c_{j-1} - c_j must be nonincreasing".into(),
                    index: j,
                });
            }
            Ok(())
        },
    )?;
    trend_to_zero(
        n + 1,
        s.last_index,
        |x| c.value(x) / c.diff(x).sqrt(),
        "c_j / sqrt(c_{j-1} - c_j)",
    )?;
    let mut r = BoundResult::new(
        scale(tau).sqrt() * s.value,
        n,
        tau,
        true,
        BoundSource::SingleTailSum,
    );
    r.diagnostics = Some(SumDiagnostics {
        sums: vec![s],
        checked_up_to: s.last_index,
        note: None,
    });
    Ok(r)
}

fn check_n(n: usize) -> Result<()> {
    require(n >= 1, || "closed forms need n >= 1".into())
}

/// `√(20 α C max{1,τ})/(α−1) · n^{(1−α)/2}` for `c_n ≤ C(n+1)^{−α}`.
pub fn bound_polynomial(c: f64, alpha: f64, n: usize, tau: f64) -> Result<BoundResult> {
    DecaySpec::polynomial(c, alpha)?;
    check_tau(tau)?;
    check_n(n)?;
    let r = (4.0 * alpha * c * scale(tau)).sqrt() / (alpha - 1.0) * (n as f64).powf((1.0 - alpha) / 2.0);
    Ok(BoundResult::new(r, n, tau, true, BoundSource::Polynomial))
}

/// `√(20 α 2^β C C_d max{1,τ})/(α−β−1) · n^{(β−α+1)/2}` for eigenspaces of
/// dimension `d_n ≤ C_d(n+1)^β`.
pub fn bound_polynomial_multi(
    c: f64,
    c_d: f64,
    alpha: f64,
    beta: f64,
    n: usize,
    tau: f64,
) -> Result<BoundResult> {
    DecaySpec::polynomial_multi(c, alpha, c_d, beta)?;
    check_tau(tau)?;
    check_n(n)?;
    let r = (4.0 * alpha * 2f64.powf(beta) * c * c_d * scale(tau)).sqrt() / (alpha - beta - 1.0)
        * (n as f64).powf((beta - alpha + 1.0) / 2.0);
    Ok(BoundResult::new(r, n, tau, true, BoundSource::PolynomialBlocks))
}

/// Smallest admissible `n` is strictly above this for the `α > 1` closed form.
pub fn exponential_window(c2: f64, alpha: f64) -> f64 {
    (11.0 * (alpha - 1.0) / c2).powf(alpha) + 1.0
}

/// Radius for `c_n ≤ C1 e^{−C2 n^{1/α}}`.
///
/// `α = 1`: the geometric tail summed exactly,
/// `√(5 max{1,τ} C1 (e^{C2} − 1)) · e^{−C2 n/2} / (e^{C2/2} − 1)`.
/// `α > 1`: `√(5 max{1,τ})` times the incomplete-gamma tail bound of
/// [`tail_integral_bound`] for `n > (11(α−1)/C2)^α + 1`. Below that window
/// the tail integral is computed by quadrature and `valid` is false.
pub fn bound_exponential(c1: f64, c2: f64, alpha: f64, n: usize, tau: f64) -> Result<BoundResult> {
    DecaySpec::exponential(c1, c2, alpha)?;
    check_tau(tau)?;
    check_n(n)?;
    if alpha == 1.0 {
        let r = (scale(tau) * c1 * c2.exp_m1()).sqrt() * (-0.5 * c2 * n as f64).exp() / (0.5 * c2).exp_m1();
        return Ok(BoundResult::new(r, n, tau, true, BoundSource::Exponential));
    }
    let t = tail_integral_bound(c1, c2, alpha, n)?;
    let mut r = BoundResult::new(
        scale(tau).sqrt() * t.value,
        n,
        tau,
        t.closed_form,
        BoundSource::Exponential,
    );
    if !t.closed_form {
        r.diagnostics = Some(SumDiagnostics {
            sums: Vec::new(),
            checked_up_to: n,
            note: Some("outside the closed-form window: tail integral by quadrature".into()),
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn general_geometric_example() {
        let c = SequenceSpec::geometric(1.0, 0.25).unwrap();
        let a = SequenceSpec::geometric(1.0, 2.0).unwrap();
        let r = bound_general(&c, &SequenceSpec::Constant(1.0), &a, 0, 1.0).unwrap();
        assert!(rel(r.radius, 15f64.sqrt()) < 1e-10, "{}", r.radius);
        let r4 = bound_general(&c, &SequenceSpec::Constant(1.0), &a, 0, 4.0).unwrap();
        assert!(rel(r4.radius, 2.0 * r.radius) < 1e-14);
        let small = bound_general(&c, &SequenceSpec::Constant(1.0), &a, 0, 0.3).unwrap();
        assert_eq!(small.radius, r.radius);
    }

    #[test]
    fn general_rejects_bad_hypotheses() {
        let c = SequenceSpec::geometric(1.0, 0.25).unwrap();
        let shrinking = SequenceSpec::geometric(1.0, 0.9).unwrap();
        assert!(matches!(
            bound_general(&c, &SequenceSpec::Constant(1.0), &shrinking, 0, 1.0),
            Err(Error::HypothesisViolation { .. })
        ));
        // a_j c_j = 1.5^j does not vanish
        let fast = SequenceSpec::geometric(1.0, 6.0).unwrap();
        let slow_c = SequenceSpec::geometric(1.0, 0.25).unwrap();
        let d = SequenceSpec::geometric(1.0, 0.5).unwrap();
        assert!(bound_general(&slow_c, &d, &fast, 0, 1.0).is_err());
        assert!(bound_general(&c, &SequenceSpec::Constant(1.0), &SequenceSpec::Constant(1.0), 0, 0.0).is_err());
    }

    #[test]
    fn general_nonsummable() {
        // S₂ = Σ 1/j diverges
        let c = SequenceSpec::power_law(1.0, 1.0, -3.0).unwrap();
        let a = SequenceSpec::power_law(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            bound_general(&c, &SequenceSpec::Constant(1.0), &a, 0, 1.0),
            Err(Error::NonsummableTail(_))
        ));
    }

    #[test]
    fn simple_geometric_example() {
        // Σ_{j>2} √3·2^{−j} = √3/4
        let c = SequenceSpec::geometric(1.0, 0.25).unwrap();
        let r = bound_simple(&c, 2, 1.0).unwrap();
        assert!(rel(r.radius, 15f64.sqrt() / 4.0) < 1e-10, "{}", r.radius);
        let r4 = bound_simple(&c, 2, 4.0).unwrap();
        assert!(rel(r4.radius, 2.0 * r.radius) < 1e-14);
        let rs: Vec<f64> = (0..20).map(|n| bound_simple(&c, n, 1.0).unwrap().radius).collect();
        assert!(rs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn simple_rejects_increasing_decrements() {
        let c = SequenceSpec::prefix(vec![1.0, 0.99, 0.5], SequenceSpec::geometric(1.0, 0.1).unwrap()).unwrap();
        assert!(matches!(bound_simple(&c, 0, 1.0), Err(Error::HypothesisViolation { index: 2, .. })));
    }

    #[test]
    fn polynomial_examples() {
        let r = bound_polynomial(1.0, 3.0, 4, 1.0).unwrap();
        assert!(rel(r.radius, 60f64.sqrt() / 2.0 / 4.0) < 1e-14);
        let one = bound_polynomial(2.0, 3.0, 1, 1.0).unwrap();
        assert!(rel(one.radius, 120f64.sqrt() / 2.0) < 1e-14);
        let r2 = bound_polynomial(1.0, 3.0, 8, 1.0).unwrap();
        assert!(rel(r2.radius / r.radius, 2f64.powf(-1.0)) < 1e-14);
        assert!(bound_polynomial(1.0, 1.0, 4, 1.0).is_err());
        assert!(bound_polynomial(1.0, 3.0, 0, 1.0).is_err());
    }

    #[test]
    fn polynomial_multi_examples() {
        for n in [1, 5, 40] {
            let a = bound_polynomial_multi(1.5, 1.0, 3.0, 0.0, n, 2.0).unwrap();
            let b = bound_polynomial(1.5, 3.0, n, 2.0).unwrap();
            assert!(rel(a.radius, b.radius) < 1e-14);
            assert!(a.valid);
        }
        let r = bound_polynomial_multi(1.0, 1.0, 4.0, 1.0, 9, 1.0).unwrap();
        assert!(rel(r.radius, (4.0f64 * 40.0).sqrt() / 18.0) < 1e-14);
        assert!(bound_polynomial_multi(1.0, 1.0, 2.0, 1.0, 9, 1.0).is_err());
    }

    #[test]
    fn exponential_alpha_one_matches_geometric_sum() {
        let r = bound_exponential(1.0, 4f64.ln(), 1.0, 3, 1.0).unwrap();
        assert!(rel(r.radius, 15f64.sqrt() / 8.0) < 1e-14);
        for (c1, c2) in [(1.0, 0.3), (2.5, 1.7), (0.1, 4.0)] {
            for n in [1, 2, 7, 20] {
                let closed = bound_exponential(c1, c2, 1.0, n, 1.0).unwrap().radius;
                let numeric = bound_simple(&SequenceSpec::geometric(c1, (-c2).exp()).unwrap(), n, 1.0)
                    .unwrap()
                    .radius;
                assert!(rel(closed, numeric) < 1e-10, "{c1} {c2} {n}: {closed} {numeric}");
            }
        }
        let a = bound_exponential(1.0, 0.7, 1.0, 5, 1.0).unwrap().radius;
        let b = bound_exponential(1.0, 0.7, 1.0, 7, 1.0).unwrap().radius;
        assert!(rel(a / b, 0.7f64.exp()) < 1e-12);
    }

    #[test]
    fn exponential_window_flag() {
        // window: n > (11/1)^2 + 1 = 122
        let below = bound_exponential(1.0, 1.0, 2.0, 100, 1.0).unwrap();
        assert!(!below.valid && below.radius > 0.0);
        let above = bound_exponential(1.0, 1.0, 2.0, 123, 1.0).unwrap();
        assert!(above.valid);
        assert!(!bound_exponential(1.0, 1.0, 2.0, 122, 1.0).unwrap().valid);
        assert!(bound_exponential(1.0, 1.0, 0.5, 3, 1.0).is_err());
    }

    #[test]
    fn exponential_dominates_numeric_on_window() {
        for (c1, c2, alpha) in [(1.0, 1.0, 2.0), (1.0, 2.0, 1.5), (3.0, 0.5, 1.2)] {
            let w = exponential_window(c2, alpha).floor() as usize + 1;
            for n in [w, w + 10, 2 * w] {
                let closed = bound_exponential(c1, c2, alpha, n, 1.0).unwrap();
                assert!(closed.valid);
                let numeric = DecaySpec::exponential(c1, c2, alpha)
                    .unwrap()
                    .numeric_bound(n, 1.0)
                    .unwrap();
                assert!(closed.radius >= numeric.radius, "{c1} {c2} {alpha} {n}");
            }
        }
    }

    #[test]
    fn closed_forms_dominate_numeric() {
        for decay in [
            DecaySpec::polynomial(1.0, 3.0).unwrap(),
            DecaySpec::polynomial(2.0, 1.5).unwrap(),
            DecaySpec::polynomial_multi(1.0, 4.0, 2.0, 1.0).unwrap(),
        ] {
            for n in [1, 2, 10, 50] {
                let closed = decay.bound(n, 1.0).unwrap().radius;
                let numeric = decay.numeric_bound(n, 1.0).unwrap().radius;
                assert!(closed >= numeric, "{decay:?} n={n}: {closed} < {numeric}");
            }
        }
    }

    #[test]
    fn decay_spec_domains() {
        assert!(DecaySpec::polynomial(0.0, 2.0).is_err());
        assert!(DecaySpec::polynomial_multi(1.0, 2.0, 1.0, -0.5).is_err());
        assert!(DecaySpec::exponential(1.0, -1.0, 1.0).is_err());
        let d: DecaySpec = toml::from_str("kind = \"polynomial\"\nc = 1.0\nalpha = 3.0").unwrap();
        assert_eq!(d, DecaySpec::Polynomial { c: 1.0, alpha: 3.0 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn radii_monotone(c in 0.1f64..10.0, alpha in 1.2f64..5.0, n in 1usize..200,
                          tau in 0.1f64..10.0, dt in 0.0f64..5.0) {
            let decays = [
                DecaySpec::polynomial(c, alpha).unwrap(),
                DecaySpec::polynomial_multi(c, alpha + 1.0, 1.5, 0.5).unwrap(),
                DecaySpec::exponential(c, alpha, 1.0).unwrap(),
                DecaySpec::exponential(c, alpha, alpha).unwrap(),
            ];
            for d in &decays {
                let here = d.bound(n, tau).unwrap();
                let next = d.bound(n + 1, tau).unwrap();
                let r = here.radius;
                prop_assert!(r > 0.0);
                // the closed form may exceed the quadrature value just below its window
                if here.valid == next.valid {
                    prop_assert!(next.radius <= r * (1.0 + 1e-12), "{:?} {:?}", here, next);
                }
                prop_assert!(d.bound(n, tau + dt).unwrap().radius >= r);
            }
        }

        #[test]
        fn numeric_radii_monotone(alpha in 1.5f64..4.0, n in 0usize..60, tau in 0.2f64..4.0) {
            let d = DecaySpec::polynomial(1.0, alpha).unwrap();
            let r = d.numeric_bound(n, tau).unwrap().radius;
            prop_assert!(d.numeric_bound(n + 1, tau).unwrap().radius <= r * (1.0 + 1e-10));
            prop_assert!(d.numeric_bound(n, tau * 1.5).unwrap().radius >= r);
        }
    }
}
