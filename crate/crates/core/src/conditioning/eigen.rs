use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet, Tabulated};
use nalgebra::DMatrix;

/// Covariance with finitely many eigenspaces, discretized on a grid.
#[derive(Clone, Debug)]
pub struct FiniteRankCov {
    eigenvalues: Vec<f64>,
    dims: Vec<usize>,
    grid: PointSet,
    weights: Vec<f64>,
    /// `m × Σd_j`, orthonormal under the weighted inner product.
    vectors: DMatrix<f64>,
}

/// Operator-norm gap left after conditioning on leading eigenspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionGap {
    pub value: f64,
    /// Every eigenspace has been conditioned on.
    pub exhausted: bool,
}

impl FiniteRankCov {
    pub fn new(
        eigenvalues: Vec<f64>,
        dims: Vec<usize>,
        grid: PointSet,
        weights: Vec<f64>,
        vectors: DMatrix<f64>,
    ) -> Result<Self> {
        let m = grid.len();
        if eigenvalues.is_empty() || eigenvalues.len() != dims.len() {
            return Err(Error::InvalidParameter(
                "need one dimension per eigenvalue".into(),
            ));
        }
        if weights.len() != m || vectors.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: vectors.nrows().min(weights.len()),
            });
        }
        let cols: usize = dims.iter().sum();
        if vectors.ncols() != cols || dims.contains(&0) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: vectors.ncols(),
            });
        }
        if eigenvalues.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidParameter("eigenvalues must be positive".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("eigenvalues must be nonincreasing".into()));
        }
        for a in 0..cols {
            for b in 0..=a {
                let ip: f64 = (0..m).map(|i| weights[i] * vectors[(i, a)] * vectors[(i, b)]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (ip - want).abs() > 1e-8 {
                    return Err(Error::InvalidParameter(format!(
                        "columns {a},{b} not orthonormal (inner product {ip})"
                    )));
                }
            }
        }
        Ok(Self {
            eigenvalues,
            dims,
            grid,
            weights,
            vectors,
        })
    }

    /// Cosine modes `1, √2 cos(πkt)` on the `m`-point midpoint grid of `[0,1]`,
    /// assigned to eigenspaces in order.
    pub fn cosine(eigenvalues: Vec<f64>, dims: Vec<usize>, m: usize) -> Result<Self> {
        let cols: usize = dims.iter().sum();
        if cols > m {
            return Err(Error::InvalidParameter(format!(
                "{cols} modes need at least that many grid points, got {m}"
            )));
        }
        let coords: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let grid = PointSet::new(1, coords.clone())?;
        let vectors = DMatrix::from_fn(m, cols, |i, k| {
            if k == 0 {
                1.0
            } else {
                std::f64::consts::SQRT_2 * (std::f64::consts::PI * k as f64 * coords[i]).cos()
            }
        });
        Self::new(eigenvalues, dims, grid, vec![1.0 / m as f64; m], vectors)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn grid(&self) -> &PointSet {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `λ_{n+1}`: the gap after conditioning on the first `n` eigenspaces.
    pub fn eigen_condition_gap(&self, n: usize) -> ConditionGap {
        match self.eigenvalues.get(n) {
            Some(&value) => ConditionGap {
                value,
                exhausted: false,
            },
            None => ConditionGap {
                value: 0.0,
                exhausted: true,
            },
        }
    }

    /// Grid kernel matrix `Σ_{j ≥ from} λ_j Σ_m φ_{j,m}(t) φ_{j,m}(s)` over eigenspaces `from..`.
    pub fn kernel_matrix_from(&self, from: usize) -> DMatrix<f64> {
        let m = self.grid.len();
        let mut k = DMatrix::zeros(m, m);
        let mut col = 0;
        for (j, (&lam, &d)) in self.eigenvalues.iter().zip(&self.dims).enumerate() {
            for c in col..col + d {
                if j >= from {
                    let v = self.vectors.column(c);
                    k += lam * &v * v.transpose();
                }
            }
            col += d;
        }
        k
    }

    /// Operator norm of the discretized covariance minus its rank-`n`
    /// eigenspace truncation, computed by dense eigendecomposition of
    /// `W^{1/2}(K − K_n)W^{1/2}`.
    pub fn grid_operator_gap(&self, n: usize) -> f64 {
        let full = self.kernel_matrix_from(0);
        let head = &full - self.kernel_matrix_from(n);
        let diff = &full - head;
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let m = self.grid.len();
        let op = DMatrix::from_fn(m, m, |i, j| sw[i] * diff[(i, j)] * sw[j]);
        op.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// The covariance as a tabulated kernel on its grid.
    pub fn as_kernel(&self) -> Result<KernelSpec> {
        let k = self.kernel_matrix_from(0);
        let m = self.grid.len();
        let mut vals = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                vals[i * m + j] = k[(i, j)];
                vals[j * m + i] = k[(i, j)];
            }
        }
        Ok(KernelSpec::tabulated(Tabulated::new(self.grid.clone(), vals)?))
    }
}
