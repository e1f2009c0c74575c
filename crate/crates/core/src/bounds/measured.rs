use super::{scale, tail_sum, BoundResult, BoundSource, SequenceSpec, SumDiagnostics};
use crate::error::{Error, Result};

/// Continuation of a measured trace `c_0..=c_N` beyond `N`.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceTail {
    /// `c_j = min(c_N, model(j))` for `j > N`; the model must be decreasing
    /// with nonincreasing decrements.
    Model(SequenceSpec),
    /// `c_j = c_N` until all `grid_size` candidates are selected, then 0.
    Exhaustion { grid_size: usize },
}

/// Cap on how far the model may sit above the last measured value.
const MAX_CROSSING: usize = 10_000_000;

/// Bound from a measured, possibly irregular trace.
///
/// Uses the two-sum form with `d_j = 1` and `a_j = ĝ_j^{−1/2}`, where
/// `ĝ_j = sup_{i ≥ j} (c_{i−1} − c_i)` is the smallest nonincreasing majorant
/// of the decrements, so `a_j` is nondecreasing as required. When the
/// decrements are already nonincreasing this equals the single-sum radius.
pub fn bound_measured(trace: &[f64], tail: &TraceTail, n: usize, tau: f64) -> Result<BoundResult> {
    super::check_tau(tau)?;
    if trace.is_empty() || trace.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(
            "trace must be nonempty, finite and nonnegative".into(),
        ));
    }
    // running minimum: the bound only needs an upper envelope of c_j
    let mut c: Vec<f64> = trace.to_vec();
    for j in 1..c.len() {
        c[j] = c[j].min(c[j - 1]);
    }
    let last = *c.last().unwrap();
    let big_n = c.len() - 1;

    // explicit values c_0..=c_L; beyond L the model's decrements take over
    let model = match tail {
        TraceTail::Model(m) => {
            let mut j = big_n + 1;
            let mut step = 1;
            while m.value(j as f64) >= last {
                if j > MAX_CROSSING {
                    return Err(Error::NonsummableTail(format!(
                        "tail model stays above the last measured value {last:e}"
                    )));
                }
                j += step;
                step *= 2;
            }
            // first crossing lies in (j − step/2, j]
            let mut lo = j.saturating_sub(step / 2).max(big_n);
            let mut hi = j;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if m.value(mid as f64) >= last {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            c.resize(hi, last);
            c.push(m.value(hi as f64));
            Some(m)
        }
        TraceTail::Exhaustion { grid_size } => {
            if *grid_size < big_n {
                return Err(Error::InvalidParameter(format!(
                    "trace has {} entries but only {grid_size} candidates",
                    c.len()
                )));
            }
            c.resize(*grid_size, last);
            c.push(0.0);
            None
        }
    };
    let l = c.len() - 1;
    let g: Vec<f64> = (1..=l).map(|j| c[j - 1] - c[j]).collect();
    let beyond = model.map_or(0.0, |m| m.diff(l as f64 + 1.0));
    let mut majorant = vec![0.0; l];
    let mut run = beyond;
    for j in (0..l).rev() {
        run = run.max(g[j]);
        majorant[j] = run;
    }

    let (mut s1, mut s2) = (0.0, 0.0);
    for j in n + 1..=l {
        let (gj, hj) = (g[j - 1], majorant[j - 1]);
        if hj > 0.0 {
            s1 += gj / hj.sqrt();
            s2 += hj.sqrt();
        }
    }
    let mut sums = Vec::new();
    let mut checked = l;
    if let Some(m) = model {
        let first = (n + 1).max(l + 1);
        let mut prev = m.diff(first as f64 - 1.0);
        let t = tail_sum(first, m.smooth_from(), &|x| m.diff(x).max(0.0).sqrt(), &mut |j, _| {
            let d = m.diff(j as f64);
            if d > prev * (1.0 + 1e-9) {
                return Err(Error::HypothesisViolation {
                    what: "tail model decrements must be nonincreasing".into(),
                    index: j,
                });
            }
            prev = d;
            Ok(())
        })?;
        s1 += t.value;
        s2 += t.value;
        checked = t.last_index;
        sums.push(t);
    }
    let mut r = BoundResult::new(
        (scale(tau) * s1 * s2).sqrt(),
        n,
        tau,
        true,
        BoundSource::MeasuredTrace,
    );
    r.diagnostics = Some(SumDiagnostics {
        sums,
        checked_up_to: checked,
        note: Some(match tail {
            TraceTail::Model(_) => format!("measured through j = {big_n}, model tail from j = {}", l + 1),
            TraceTail::Exhaustion { .. } => format!("measured through j = {big_n}, grid exhaustion at j = {l}"),
        }),
    });
    Ok(r)
}
