use crate::error::{Error, Result};
use std::sync::Arc;

/// A positive sequence indexed by `j ≥ 0`, given in closed form or as an
/// explicit prefix followed by a closed-form tail.
///
/// Closed forms extend to real arguments so tail sums can be bounded by
/// integrals.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceSpec {
    Constant(f64),
    /// `coef·(j + offset)^exponent`
    PowerLaw { coef: f64, offset: f64, exponent: f64 },
    /// `scale·ratio^j`
    Geometric { scale: f64, ratio: f64 },
    /// `c1·exp(−c2·j^{1/alpha})`
    StretchedExp { c1: f64, c2: f64, alpha: f64 },
    /// `values[j]` for `j < values.len()`, then `tail`.
    Prefix {
        values: Arc<[f64]>,
        tail: Box<SequenceSpec>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SequenceSpec {
    pub fn constant(v: f64) -> Result<Self> {
        positive("constant", v)?;
        Ok(SequenceSpec::Constant(v))
    }

    pub fn power_law(coef: f64, offset: f64, exponent: f64) -> Result<Self> {
        positive("coefficient", coef)?;
        if !(offset >= 0.0 && offset.is_finite() && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power law needs finite offset >= 0 and exponent, got {offset}, {exponent}"
            )));
        }
        Ok(SequenceSpec::PowerLaw {
            coef,
            offset,
            exponent,
        })
    }

    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        positive("scale", scale)?;
        positive("ratio", ratio)?;
        Ok(SequenceSpec::Geometric { scale, ratio })
    }

    pub fn stretched_exp(c1: f64, c2: f64, alpha: f64) -> Result<Self> {
        positive("c1", c1)?;
        positive("c2", c2)?;
        positive("alpha", alpha)?;
        Ok(SequenceSpec::StretchedExp { c1, c2, alpha })
    }

    pub fn prefix(values: Vec<f64>, tail: SequenceSpec) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "prefix value {v} at j = {j} is not positive"
            )));
        }
        Ok(SequenceSpec::Prefix {
            values: values.into(),
            tail: Box::new(tail),
        })
    }

    /// Value at `j` (real `j` for closed forms).
    pub fn value(&self, j: f64) -> f64 {
        match self {
            SequenceSpec::Constant(v) => *v,
            SequenceSpec::PowerLaw {
                coef,
                offset,
                exponent,
            } => coef * (j + offset).powf(*exponent),
            SequenceSpec::Geometric { scale, ratio } => scale * ratio.powf(j),
            SequenceSpec::StretchedExp { c1, c2, alpha } => c1 * (-c2 * j.powf(1.0 / alpha)).exp(),
            SequenceSpec::Prefix { values, tail } => {
                if j >= 0.0 && (j as usize) < values.len() && j.fract() == 0.0 {
                    values[j as usize]
                } else {
                    tail.value(j)
                }
            }
        }
    }

    /// `value(j−1) − value(j)`, evaluated without cancellation for closed forms.
    pub fn diff(&self, j: f64) -> f64 {
        match self {
            SequenceSpec::Constant(_) => 0.0,
            SequenceSpec::PowerLaw {
                coef,
                offset,
                exponent,
            } => {
                let x = j + offset;
                if x <= 1.0 {
                    return self.value(j - 1.0) - self.value(j);
                }
                // (x−1)^p − x^p = x^p·expm1(p·ln(1 − 1/x))
                coef * x.powf(*exponent) * (exponent * (-1.0 / x).ln_1p()).exp_m1()
            }
            SequenceSpec::Geometric { scale, ratio } => scale * ratio.powf(j - 1.0) * (1.0 - ratio),
            SequenceSpec::StretchedExp { c1, c2, alpha } => {
                if j <= 1.0 {
                    return self.value(j - 1.0) - self.value(j);
                }
                // j^{1/α} − (j−1)^{1/α} = −j^{1/α}·expm1(ln(1 − 1/j)/α)
                let gap = -j.powf(1.0 / alpha) * ((-1.0 / j).ln_1p() / alpha).exp_m1();
                c1 * (-c2 * j.powf(1.0 / alpha)).exp() * (c2 * gap).exp_m1()
            }
            SequenceSpec::Prefix { values, tail } => {
                let n = values.len() as f64;
                if j > n {
                    tail.diff(j)
                } else {
                    self.value(j - 1.0) - self.value(j)
                }
            }
        }
    }

    /// First index from which `value` and `diff` follow the closed form.
    pub fn smooth_from(&self) -> usize {
        match self {
            SequenceSpec::Prefix { values, tail } => (values.len() + 1).max(tail.smooth_from()),
            _ => 0,
        }
    }
}
