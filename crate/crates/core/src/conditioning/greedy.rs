use super::DesignState;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet};
use crate::real::Real;
use rayon::prelude::*;
use serde::Serialize;

/// Grid supremum of the posterior variance after each selection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerTrace {
    /// `c_0, c_1, …, c_N`.
    pub values: Vec<f64>,
    /// Number of candidate nodes the supremum was taken over.
    pub grid_size: usize,
    /// Candidate indices in selection order.
    pub selected: Vec<usize>,
}

impl PowerTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// P-greedy state on a candidate set, kept in Newton-basis form.
///
/// `columns[i][t]` is the `i`-th Newton basis function at candidate `t`; the
/// posterior variance after `n` selections is `k(t,t) − Σ_{i<n} columns[i][t]²`.
#[derive(Clone, Debug)]
pub struct GreedyRun<R: Real = f64> {
    kernel: KernelSpec,
    candidates: PointSet,
    selected: Vec<usize>,
    columns: Vec<Vec<R>>,
    power: Vec<R>,
    trace: Vec<f64>,
}

impl<R: Real> GreedyRun<R> {
    pub fn new(kernel: KernelSpec, candidates: PointSet) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("empty candidate set".into()));
        }
        if candidates.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: candidates.dim(),
            });
        }
        let power = candidates
            .iter()
            .map(|t| kernel.eval_real::<R>(t, t))
            .collect::<Result<Vec<R>>>()?;
        let c0 = power.iter().map(R::to_f64).fold(0.0, f64::max);
        Ok(Self {
            kernel,
            candidates,
            selected: Vec::new(),
            columns: Vec::new(),
            power,
            trace: vec![c0],
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn candidates(&self) -> &PointSet {
        &self.candidates
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Newton basis function `i` on the candidate set.
    pub fn column(&self, i: usize) -> &[R] {
        &self.columns[i]
    }

    /// Current posterior variance on the candidate set.
    pub fn power(&self) -> &[R] {
        &self.power
    }

    pub fn trace(&self) -> PowerTrace {
        PowerTrace {
            values: self.trace.clone(),
            grid_size: self.candidates.len(),
            selected: self.selected.clone(),
        }
    }

    /// Candidate of maximal posterior variance, lowest index on ties.
    fn argmax(&self) -> (usize, R) {
        let mut best = 0;
        for (i, p) in self.power.iter().enumerate().skip(1) {
            if p.gt(&self.power[best]) {
                best = i;
            }
        }
        (best, self.power[best].clone())
    }

    /// Adds the candidate of largest posterior variance.
    pub fn step(&mut self) -> Result<usize> {
        let (idx, p2) = self.argmax();
        if p2.to_f64() < R::VARIANCE_FLOOR {
            return Err(Error::ExhaustedCandidates {
                selected: self.selected.len(),
                floor: R::VARIANCE_FLOOR,
            });
        }
        self.add_index(idx, p2)?;
        Ok(idx)
    }

    /// Adds candidate `idx` regardless of the greedy rule.
    pub fn add(&mut self, idx: usize) -> Result<()> {
        if idx >= self.candidates.len() {
            return Err(Error::InvalidParameter(format!("candidate {idx} out of range")));
        }
        if let Some(other) = self.selected.iter().position(|&s| s == idx) {
            return Err(Error::DuplicatePoint {
                index: self.selected.len(),
                other,
                tol: 0.0,
            });
        }
        let p2 = self.power[idx].clone();
        self.add_index(idx, p2)
    }

    fn add_index(&mut self, idx: usize, p2: R) -> Result<()> {
        let pivot = p2.sqrt();
        if pivot.to_f64() < R::PIVOT_FLOOR {
            return Err(Error::NumericalBreakdown(format!(
                "pivot {:e} at candidate {idx}",
                pivot.to_f64()
            )));
        }
        let ts = self.candidates.point(idx).to_vec();
        let at_sel: Vec<R> = self.columns.iter().map(|c| c[idx].clone()).collect();
        let kernel = &self.kernel;
        let candidates = &self.candidates;
        let columns = &self.columns;
        let new_col = (0..candidates.len())
            .into_par_iter()
            .map(|t| {
                let mut v: R = kernel.eval_real(candidates.point(t), &ts)?;
                for (col, s) in columns.iter().zip(&at_sel) {
                    v.mul_sub(&col[t], s);
                }
                Ok(v.div(&pivot))
            })
            .collect::<Result<Vec<R>>>()?;
        self.power
            .par_iter_mut()
            .zip(new_col.par_iter())
            .for_each(|(p, n)| {
                p.mul_sub(n, n);
                if p.to_f64() < 0.0 {
                    *p = R::zero();
                }
            });
        self.power[idx] = R::zero();
        self.columns.push(new_col);
        self.selected.push(idx);
        let c = self.power.iter().map(R::to_f64).fold(0.0, f64::max);
        self.trace.push(c);
        Ok(())
    }

    /// Equivalent [`DesignState`] on the selected points.
    pub fn design_state(&self, n: usize) -> DesignState<R> {
        let n = n.min(self.selected.len());
        let points = self.selected[..n]
            .iter()
            .map(|&i| self.candidates.point(i).to_vec())
            .collect();
        let chol = (0..n)
            .map(|i| {
                let s = self.selected[i];
                (0..=i).map(|j| self.columns[j][s].clone()).collect()
            })
            .collect();
        DesignState::from_parts(self.kernel.clone(), points, chol)
    }

    /// Runs the greedy loop until `n` points are selected.
    pub fn run_to(&mut self, n: usize) -> Result<()> {
        while self.selected.len() < n {
            self.step()?;
        }
        Ok(())
    }
}

/// Selects `n` points by P-greedy and returns them with the power trace.
pub fn pgreedy_select(
    spec: &KernelSpec,
    candidates: &PointSet,
    n: usize,
) -> Result<(PointSet, PowerTrace)> {
    pgreedy_select_in::<f64>(spec, candidates, n)
}

/// [`pgreedy_select`] in a chosen working precision.
pub fn pgreedy_select_in<R: Real>(
    spec: &KernelSpec,
    candidates: &PointSet,
    n: usize,
) -> Result<(PointSet, PowerTrace)> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if candidates.len() < n {
        return Err(Error::InvalidParameter(format!(
            "{} candidates cannot supply {n} points",
            candidates.len()
        )));
    }
    let mut run = GreedyRun::<R>::new(spec.clone(), candidates.clone())?;
    run.run_to(n)?;
    let trace = run.trace();
    Ok((candidates.select(&trace.selected), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Mp;
    use proptest::prelude::*;

    #[test]
    fn first_pick_is_lowest_index() {
        let g = KernelSpec::gaussian(1).unwrap();
        let cands = PointSet::new(1, vec![0.7, 0.1, 0.4]).unwrap();
        let (pts, trace) = pgreedy_select(&g, &cands, 1).unwrap();
        assert_eq!(trace.selected, vec![0]);
        assert_eq!(pts.point(0), &[0.7]);
        assert_eq!(trace.values[0], 1.0);
    }

    #[test]
    fn matches_design_state() {
        let k = KernelSpec::matern(2.0, 1).unwrap();
        let grid = PointSet::uniform_grid(65, 1).unwrap();
        let mut run = GreedyRun::<f64>::new(k.clone(), grid.clone()).unwrap();
        run.run_to(12).unwrap();
        let state = run.design_state(12);
        let mut fresh = DesignState::<f64>::new(k);
        for i in 0..12 {
            fresh.add_point(state.point(i)).unwrap();
        }
        for (t, p) in grid.iter().zip(run.power()) {
            let v = fresh.posterior_variance(t).unwrap();
            assert!((v - p).abs() < 1e-12, "{v} {p}");
            assert!((state.posterior_variance(t).unwrap() - v).abs() < 1e-12);
        }
        let trace = run.trace();
        let cmax = grid
            .iter()
            .map(|t| fresh.posterior_variance(t).unwrap())
            .fold(0.0, f64::max);
        assert!((trace.values[12] - cmax).abs() < 1e-12);
    }

    #[test]
    fn gaussian_trace_strictly_decreasing_in_extended_precision() {
        let g = KernelSpec::gaussian(1).unwrap();
        let grid = PointSet::uniform_grid(257, 1).unwrap();
        let (_, trace) = pgreedy_select_in::<Mp>(&g, &grid, 20).unwrap();
        assert_eq!(trace.values.len(), 21);
        for w in trace.values.windows(2) {
            assert!(w[1] < w[0], "{:e} !< {:e}", w[1], w[0]);
        }
    }

    #[test]
    fn gaussian_exhausts_double_precision() {
        let g = KernelSpec::gaussian(1).unwrap();
        let grid = PointSet::uniform_grid(257, 1).unwrap();
        let r = pgreedy_select(&g, &grid, 40);
        assert!(matches!(r, Err(Error::ExhaustedCandidates { .. })), "{r:?}");
    }

    #[test]
    fn matern_trace_rate() {
        let k = KernelSpec::matern(2.0, 1).unwrap();
        let grid = PointSet::uniform_grid(513, 1).unwrap();
        let (_, trace) = pgreedy_select(&k, &grid, 40).unwrap();
        let xs: Vec<f64> = (10..=40).map(|n| ((n + 1) as f64).ln()).collect();
        let ys: Vec<f64> = (10..=40).map(|n| trace.values[n].ln()).collect();
        let fit = crate::linalg::fit_line(&xs, &ys).unwrap();
        assert!(fit.slope <= -1.7, "slope {}", fit.slope);
    }

    #[test]
    fn rejects_bad_requests() {
        let g = KernelSpec::gaussian(1).unwrap();
        let grid = PointSet::uniform_grid(5, 1).unwrap();
        assert!(pgreedy_select(&g, &grid, 0).is_err());
        assert!(pgreedy_select(&g, &grid, 6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_nonincreasing(smooth in 1.3f64..3.5, res in 17usize..80, n in 1usize..16) {
            let k = KernelSpec::matern(smooth, 1).unwrap();
            let grid = PointSet::uniform_grid(res, 1).unwrap();
            match pgreedy_select(&k, &grid, n.min(res)) {
                Ok((_, trace)) => {
                    for w in trace.values.windows(2) {
                        prop_assert!(w[1] <= w[0] + 1e-10);
                        prop_assert!(w[1] >= 0.0);
                    }
                }
                Err(Error::ExhaustedCandidates { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn arbitrary_order_is_monotone(order in Just((0..33usize).collect::<Vec<_>>()).prop_shuffle()) {
            let k = KernelSpec::matern(2.0, 1).unwrap();
            let grid = PointSet::uniform_grid(33, 1).unwrap();
            let mut run = GreedyRun::<f64>::new(k, grid).unwrap();
            for &i in order.iter().take(10) {
                run.add(i).unwrap();
            }
            for w in run.trace().values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-10);
            }
        }
    }
}
