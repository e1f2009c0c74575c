//! Truncated Karhunen–Loève sampling on grids and sup-norm errors of the
//! kriging interpolant.

use crate::conditioning::{DesignState, GreedyRun};
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, KernelSpec, PointSet, SEPARATION_TOL};
use crate::linalg::jacobi_eigen;
use crate::real::Real;
use crate::rng::Stream;
use rand_distr::{Distribution, StandardNormal};

/// Nyström discretization of a covariance on a uniform grid.
///
/// Mode `j` is stored pre-scaled as `sqrt(λ̂_j)·φ_j` on the grid, where the
/// `φ_j` are orthonormal under the quadrature weights.
#[derive(Clone, Debug)]
pub struct SpectralModel<R: Real = f64> {
    grid: PointSet,
    weight: f64,
    eigenvalues: Vec<f64>,
    scaled_modes: Vec<Vec<R>>,
    trace: f64,
    discarded: f64,
    max_tail_variance: f64,
    rank_tol: f64,
}

/// A path sampled on the model grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath<R: Real = f64> {
    pub values: Vec<R>,
    pub stream: Stream,
}

fn check_budget(tail_budget: f64) -> Result<()> {
    if !(tail_budget > 0.0 && tail_budget <= 0.05) {
        return Err(Error::InvalidParameter(format!(
            "tail budget must lie in (0, 0.05], got {tail_budget}"
        )));
    }
    Ok(())
}

fn diagonal(spec: &KernelSpec, grid: &PointSet) -> Result<Vec<f64>> {
    grid.iter().map(|t| spec.variance(t)).collect()
}

/// Smallest rank whose discarded mass meets the budget; eigenvalues sorted
/// nonincreasing and `tails[r]` is the mass discarded when `r` modes are kept.
fn choose_rank(eig: &[f64], tails: &[f64], trace: f64, budget: f64, rank_tol: f64) -> Result<(usize, f64)> {
    for r in 0..=eig.len() {
        if tails[r] / trace <= budget {
            return Ok((r, tails[r]));
        }
        if r == eig.len() || !(eig[r] > rank_tol) {
            return Err(Error::TailBudgetUnreachable {
                budget,
                achieved: tails[r] / trace,
            });
        }
    }
    unreachable!()
}

/// Dense symmetric eigendecomposition of the weighted Gram matrix.
pub fn build_spectral_model(
    spec: &KernelSpec,
    grid: &PointSet,
    tail_budget: f64,
) -> Result<SpectralModel<f64>> {
    check_budget(tail_budget)?;
    let m = grid.len();
    let w = 1.0 / m as f64;
    let k = gram_matrix(spec, grid)?;
    let diag = diagonal(spec, grid)?;
    let trace = w * diag.iter().sum::<f64>();
    let eig = k.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda: Vec<f64> = order.iter().map(|&i| w * eig.eigenvalues[i]).collect();
    let rank_tol = (m as f64 * f64::EPSILON * lambda[0]).max(f64::MIN_POSITIVE);
    let tails: Vec<f64> = std::iter::once(0.0)
        .chain(lambda.iter().scan(0.0, |kept, l| {
            *kept += l;
            Some(*kept)
        }))
        .map(|kept| trace - kept)
        .collect();
    let (r, discarded) = choose_rank(&lambda, &tails, trace, tail_budget, rank_tol)?;
    let scaled_modes: Vec<Vec<f64>> = order[..r]
        .iter()
        .zip(&lambda)
        .map(|(&i, &l)| {
            // sqrt(λ̂)·u/sqrt(w) = sqrt(μ)·u for a unit eigenvector u of K.
            let s = (l / w).sqrt();
            eig.eigenvectors.column(i).iter().map(|u| s * u).collect()
        })
        .collect();
    let max_tail_variance = tail_variance(&diag, &scaled_modes);
    Ok(SpectralModel {
        grid: grid.clone(),
        weight: w,
        eigenvalues: lambda[..r].to_vec(),
        scaled_modes,
        trace,
        discarded,
        max_tail_variance,
        rank_tol,
    })
}

fn tail_variance<R: Real>(diag: &[f64], modes: &[Vec<R>]) -> f64 {
    (0..diag.len())
        .map(|i| {
            let mut v = R::from_f64(diag[i]);
            for col in modes {
                v.mul_sub(&col[i], &col[i]);
            }
            v.to_f64().max(0.0)
        })
        .fold(0.0, f64::max)
}

/// Low-rank route for any precision: pivoted Cholesky (greedy Newton basis)
/// until the residual trace is below half the budget, then a Jacobi
/// eigendecomposition of the `J×J` core.
pub fn build_spectral_model_low_rank<R: Real>(
    spec: &KernelSpec,
    grid: &PointSet,
    tail_budget: f64,
) -> Result<SpectralModel<R>> {
    check_budget(tail_budget)?;
    let m = grid.len();
    let w = 1.0 / m as f64;
    let diag = diagonal(spec, grid)?;
    let trace = w * diag.iter().sum::<f64>();
    let mut run = GreedyRun::<R>::new(spec.clone(), grid.clone())?;
    let residual = |run: &GreedyRun<R>| w * run.power().iter().map(R::to_f64).sum::<f64>();
    loop {
        if residual(&run) <= 0.5 * tail_budget * trace || run.selected().len() == m {
            break;
        }
        match run.step() {
            Ok(_) => {}
            Err(Error::ExhaustedCandidates { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let residual = residual(&run);
    let j = run.selected().len();
    if j == 0 {
        return Err(Error::TailBudgetUnreachable {
            budget: tail_budget,
            achieved: 1.0,
        });
    }
    let cols: Vec<&[R]> = (0..j).map(|i| run.column(i)).collect();
    let mut core = vec![R::zero(); j * j];
    for a in 0..j {
        for b in 0..=a {
            let mut acc = R::zero();
            for t in 0..m {
                acc.mul_acc(&cols[a][t], &cols[b][t]);
            }
            core[a * j + b] = acc.clone();
            core[b * j + a] = acc;
        }
    }
    let (mu, v) = jacobi_eigen(core, j)?;
    let lambda: Vec<f64> = mu.iter().map(|x| w * x.to_f64()).collect();
    let rank_tol = (j as f64 * R::EPSILON * lambda[0]).max(f64::MIN_POSITIVE);
    // residual of the factorization plus dropped eigenvalues, summed without cancellation
    let mut tails = vec![residual; j + 1];
    for k in (0..j).rev() {
        tails[k] = tails[k + 1] + lambda[k].max(0.0);
    }
    let (r, discarded) = choose_rank(&lambda, &tails, trace, tail_budget, rank_tol)?;
    // Mode k = L v_k, which equals sqrt(λ̂_k)·φ_k.
    let scaled_modes: Vec<Vec<R>> = (0..r)
        .map(|k| {
            (0..m)
                .map(|t| {
                    let mut acc = R::zero();
                    for (i, col) in cols.iter().enumerate() {
                        acc.mul_acc(&col[t], &v[i * j + k]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let max_tail_variance = tail_variance(&diag, &scaled_modes);
    Ok(SpectralModel {
        grid: grid.clone(),
        weight: w,
        eigenvalues: lambda[..r].to_vec(),
        scaled_modes,
        trace,
        discarded,
        max_tail_variance,
        rank_tol,
    })
}

impl<R: Real> SpectralModel<R> {
    pub fn grid(&self) -> &PointSet {
        &self.grid
    }

    /// Quadrature weight of each node (uniform, summing to 1).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Retained `λ̂_1 ≥ … ≥ λ̂_r`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ_i w k(t_i, t_i)`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `trace − Σ λ̂_j` over retained modes.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Largest pointwise variance left out of the model, `max_t (k(t,t) − Σ λ̂_j φ_j(t)²)`.
    /// Its square root bounds the typical size of the omitted path component.
    pub fn max_tail_variance(&self) -> f64 {
        self.max_tail_variance
    }

    /// Eigenvector `j` with unit weighted norm.
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        let s = (self.eigenvalues[j]).sqrt();
        self.scaled_modes[j].iter().map(|x| x.to_f64() / s).collect()
    }

    /// Model covariance between grid nodes `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let mut acc = R::zero();
        for col in &self.scaled_modes {
            acc.mul_acc(&col[a], &col[b]);
        }
        acc.to_f64()
    }

    /// `Σ_j sqrt(λ̂_j) ξ_j φ_j` with `ξ_j` standard normal from `stream`.
    pub fn sample_path(&self, stream: Stream) -> SamplePath<R> {
        let mut rng = stream.rng();
        let m = self.grid.len();
        let mut values = vec![R::zero(); m];
        for col in &self.scaled_modes {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let xi = R::from_f64(xi);
            for (v, c) in values.iter_mut().zip(col) {
                v.mul_acc(c, &xi);
            }
        }
        SamplePath { values, stream }
    }
}

/// `max_t |X(t) − X^{(n)}(t)|` over the path grid, where `X^{(n)}` is the
/// kriging interpolant of the path at the design points.
pub fn sup_error<R: Real>(path: &SamplePath<R>, grid: &PointSet, state: &DesignState<R>) -> Result<R> {
    if path.values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: path.values.len(),
        });
    }
    let tol = SEPARATION_TOL;
    let mut obs = Vec::with_capacity(state.len());
    for i in 0..state.len() {
        let p = state.point(i);
        match grid.locate(p, tol) {
            Some(idx) => obs.push(path.values[idx].clone()),
            None => {
                return Err(Error::DesignNotOnGrid {
                    index: i,
                    distance: grid.nearest_distance(p),
                })
            }
        }
    }
    let mut worst = R::zero();
    if state.is_empty() {
        for v in &path.values {
            worst = worst.max_of(&v.abs());
        }
        return Ok(worst);
    }
    let white = state.whiten(&obs)?;
    for (t, v) in grid.iter().zip(&path.values) {
        let mean = state.posterior_mean_with(&white, t)?;
        worst = worst.max_of(&v.sub(&mean).abs());
    }
    Ok(worst)
}

/// Sup-norm errors at many design sizes for paths on the greedy grid, using
/// the Newton basis of a [`GreedyRun`] (one pass per path).
pub struct NewtonErrors<'a, R: Real> {
    run: &'a GreedyRun<R>,
    /// `L[i][j] = N_j(t_{s_i})`.
    factor: Vec<Vec<R>>,
}

impl<'a, R: Real> NewtonErrors<'a, R> {
    pub fn new(run: &'a GreedyRun<R>) -> Self {
        let sel = run.selected();
        let factor = (0..sel.len())
            .map(|i| (0..=i).map(|j| run.column(j)[sel[i]].clone()).collect())
            .collect();
        Self { run, factor }
    }

    /// Errors for each `n` in `schedule` (each at most the number of selected points).
    pub fn errors(&self, path: &[R], schedule: &[usize]) -> Result<Vec<R>> {
        let m = self.run.candidates().len();
        if path.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: path.len(),
            });
        }
        let nmax = schedule.iter().copied().max().unwrap_or(0);
        if nmax > self.factor.len() {
            return Err(Error::InvalidParameter(format!(
                "schedule needs {nmax} points, greedy run has {}",
                self.factor.len()
            )));
        }
        let sel = self.run.selected();
        let mut coef: Vec<R> = Vec::with_capacity(nmax);
        for i in 0..nmax {
            let mut acc = path[sel[i]].clone();
            for (l, c) in self.factor[i][..i].iter().zip(&coef) {
                acc.mul_sub(l, c);
            }
            coef.push(acc.div(&self.factor[i][i]));
        }
        let mut residual = path.to_vec();
        let mut out = vec![R::zero(); schedule.len()];
        let sup = |r: &[R]| r.iter().fold(R::zero(), |a, x| a.max_of(&x.abs()));
        for (k, &n) in schedule.iter().enumerate() {
            if n == 0 {
                out[k] = sup(&residual);
            }
        }
        for (i, c) in coef.iter().enumerate() {
            let col = self.run.column(i);
            for (r, b) in residual.iter_mut().zip(col) {
                r.mul_sub(b, c);
            }
            for (k, &n) in schedule.iter().enumerate() {
                if n == i + 1 {
                    out[k] = sup(&residual);
                }
            }
        }
        Ok(out)
    }
}
