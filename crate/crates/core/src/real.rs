//! Scalar abstraction over `f64` and a 384-bit binary float.
//!
//! The Gaussian kernel drives posterior variances far below the `f64`
//! round-off floor within a few dozen design points, so the conditioning and
//! sampling code is generic over [`Real`]. Arithmetic is by reference to keep
//! the multiprecision path allocation-light.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

/// Working precision of [`Mp`] in bits.
pub const MP_BITS: usize = 384;
const RM: RoundingMode = RoundingMode::ToEven;

pub trait Real: Clone + Send + Sync + fmt::Debug + 'static {
    const NAME: &'static str;
    /// Unit round-off.
    const EPSILON: f64;
    /// Smallest posterior variance treated as nonzero (greedy exhaustion).
    const VARIANCE_FLOOR: f64;
    /// Smallest admissible Cholesky diagonal.
    const PIVOT_FLOOR: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn abs(&self) -> Self;
    fn cmp_total(&self, o: &Self) -> Ordering;
    fn is_finite(&self) -> bool;

    /// `self += a * b`
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        *self = self.add(&a.mul(b));
    }
    /// `self -= a * b`
    fn mul_sub(&mut self, a: &Self, b: &Self) {
        *self = self.sub(&a.mul(b));
    }
    fn max_of(&self, o: &Self) -> Self {
        if o.cmp_total(self) == Ordering::Greater {
            o.clone()
        } else {
            self.clone()
        }
    }
    fn gt(&self, o: &Self) -> bool {
        self.cmp_total(o) == Ordering::Greater
    }
    fn lt(&self, o: &Self) -> bool {
        self.cmp_total(o) == Ordering::Less
    }
}

impl Real for f64 {
    const NAME: &'static str = "double";
    const EPSILON: f64 = f64::EPSILON;
    const VARIANCE_FLOOR: f64 = 1e-14;
    const PIVOT_FLOOR: f64 = 1e-14;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    #[inline]
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    #[inline]
    fn neg(&self) -> Self {
        -self
    }
    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    #[inline]
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    #[inline]
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    #[inline]
    fn cmp_total(&self, o: &Self) -> Ordering {
        self.total_cmp(o)
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    #[inline]
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    #[inline]
    fn mul_sub(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// 384-bit binary floating point number.
#[derive(Clone)]
pub struct Mp(BigFloat);

impl Mp {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp({:e})", self.to_f64())
    }
}

impl PartialEq for Mp {
    fn eq(&self, o: &Self) -> bool {
        self.cmp_total(o) == Ordering::Equal
    }
}

impl Real for Mp {
    const NAME: &'static str = "extended";
    const EPSILON: f64 = 3.940_200_619_639_447e-116; // 2^-383
    const VARIANCE_FLOOR: f64 = 1e-100;
    const PIVOT_FLOOR: f64 = 1e-50;

    fn from_f64(x: f64) -> Self {
        Mp(BigFloat::from_f64(x, MP_BITS))
    }

    fn to_f64(&self) -> f64 {
        let b = &self.0;
        if b.is_nan() {
            return f64::NAN;
        }
        if b.is_inf_pos() {
            return f64::INFINITY;
        }
        if b.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if b.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exp, _)) = b.as_raw_parts() else {
            return f64::NAN;
        };
        // Normalized mantissa: value = 0.m * 2^exp with the leading bit at the top of the last word.
        let top = *words.last().unwrap_or(&0);
        let next = if words.len() >= 2 {
            words[words.len() - 2]
        } else {
            0
        };
        let frac = top as f64 / 2f64.powi(64) + next as f64 / 2f64.powi(128);
        let e = exp;
        let mag = if e > 1024 {
            f64::INFINITY
        } else if e < -1100 {
            0.0
        } else {
            // split the scaling to stay clear of intermediate underflow
            let half = e / 2;
            frac * 2f64.powi(half) * 2f64.powi(e - half)
        };
        if sign == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    fn add(&self, o: &Self) -> Self {
        Mp(self.0.add(&o.0, MP_BITS, RM))
    }
    fn sub(&self, o: &Self) -> Self {
        Mp(self.0.sub(&o.0, MP_BITS, RM))
    }
    fn mul(&self, o: &Self) -> Self {
        Mp(self.0.mul(&o.0, MP_BITS, RM))
    }
    fn div(&self, o: &Self) -> Self {
        Mp(self.0.div(&o.0, MP_BITS, RM))
    }
    fn neg(&self) -> Self {
        Mp(self.0.neg())
    }
    fn sqrt(&self) -> Self {
        if self.0.is_zero() {
            return self.clone();
        }
        Mp(self.0.sqrt(MP_BITS, RM))
    }
    fn exp(&self) -> Self {
        CONSTS.with(|c| Mp(self.0.exp(MP_BITS, RM, &mut c.borrow_mut())))
    }
    fn abs(&self) -> Self {
        Mp(self.0.abs())
    }
    fn cmp_total(&self, o: &Self) -> Ordering {
        match self.0.cmp(&o.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(c) if c > 0 => Ordering::Greater,
            Some(_) => Ordering::Equal,
            None => {
                // NaN ordering: NaN sorts above everything.
                match (self.0.is_nan(), o.0.is_nan()) {
                    (true, true) => Ordering::Equal,
                    (true, false) => Ordering::Greater,
                    _ => Ordering::Less,
                }
            }
        }
    }
    fn is_finite(&self) -> bool {
        !(self.0.is_nan() || self.0.is_inf())
    }
}

/// Which scalar type an experiment runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}
