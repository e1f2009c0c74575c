use crate::error::{Error, Result};

/// Minimum Euclidean separation between points of a [`PointSet`].
pub const SEPARATION_TOL: f64 = 1e-10;

/// Ordered, pairwise distinct points in `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    /// Indices sorted by first coordinate, for range lookups.
    order: Vec<usize>,
    spacing: Option<f64>,
}

impl PointSet {
    /// Validates domain membership and separation.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim * (coords.len() / dim + 1),
                got: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("coordinate {bad}")));
        }
        let set = Self::build(dim, coords, None);
        set.check_separation()?;
        Ok(set)
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        Self::new(dim, points.concat())
    }

    /// Tensor grid with `res` nodes per axis, including both endpoints.
    pub fn uniform_grid(res: usize, dim: usize) -> Result<Self> {
        if res < 2 || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs res >= 2 and dim >= 1, got res={res}, dim={dim}"
            )));
        }
        let total = res
            .checked_pow(dim as u32)
            .filter(|&t| t <= 50_000_000)
            .ok_or_else(|| Error::InvalidParameter(format!("grid {res}^{dim} too large")))?;
        let h = 1.0 / (res - 1) as f64;
        let mut coords = Vec::with_capacity(total * dim);
        for flat in 0..total {
            let mut rem = flat;
            let start = coords.len();
            coords.resize(start + dim, 0.0);
            for axis in (0..dim).rev() {
                coords[start + axis] = (rem % res) as f64 * h;
                rem /= res;
            }
        }
        Ok(Self::build(dim, coords, Some(h)))
    }

    fn build(dim: usize, coords: Vec<f64>, spacing: Option<f64>) -> Self {
        let n = coords.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coords[a * dim].total_cmp(&coords[b * dim]).then(a.cmp(&b)));
        Self {
            dim,
            coords,
            order,
            spacing,
        }
    }

    fn check_separation(&self) -> Result<()> {
        for (pos, &i) in self.order.iter().enumerate() {
            let xi = self.coords[i * self.dim];
            for &j in self.order[pos + 1..].iter() {
                if self.coords[j * self.dim] - xi > SEPARATION_TOL {
                    break;
                }
                if self.distance(i, self.point(j)) < SEPARATION_TOL {
                    let (a, b) = (i.max(j), i.min(j));
                    return Err(Error::DuplicatePoint {
                        index: a,
                        other: b,
                        tol: SEPARATION_TOL,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Node spacing for uniform grids.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    fn distance(&self, i: usize, t: &[f64]) -> f64 {
        self.point(i)
            .iter()
            .zip(t)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the nearest point within `tol` of `t`, lowest index on ties.
    pub fn locate(&self, t: &[f64], tol: f64) -> Option<usize> {
        if t.len() != self.dim {
            return None;
        }
        let lo = self
            .order
            .partition_point(|&i| self.coords[i * self.dim] < t[0] - tol);
        let mut best: Option<(f64, usize)> = None;
        for &i in &self.order[lo..] {
            if self.coords[i * self.dim] > t[0] + tol {
                break;
            }
            let d = self.distance(i, t);
            if d <= tol && best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    /// Distance from `t` to the nearest point of the set.
    pub fn nearest_distance(&self, t: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| self.distance(i, t))
            .fold(f64::INFINITY, f64::min)
    }

    /// A new set with `t` appended.
    pub fn with_point(&self, t: &[f64]) -> Result<Self> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: t.len(),
            });
        }
        if let Some(other) = self.locate(t, SEPARATION_TOL) {
            return Err(Error::DuplicatePoint {
                index: self.len(),
                other,
                tol: SEPARATION_TOL,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(t);
        Ok(Self::build(self.dim, coords, None))
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Self::build(self.dim, coords, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = PointSet::uniform_grid(3, 2).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(0), &[0.0, 0.0]);
        assert_eq!(g.point(1), &[0.0, 0.5]);
        assert_eq!(g.point(8), &[1.0, 1.0]);
        assert_eq!(g.spacing(), Some(0.5));
    }

    #[test]
    fn rejects_duplicates_and_outside_points() {
        assert!(matches!(
            PointSet::new(1, vec![0.2, 0.5, 0.2 + 1e-12]),
            Err(Error::DuplicatePoint { index: 2, other: 0, .. })
        ));
        assert!(matches!(PointSet::new(1, vec![1.5]), Err(Error::Domain(_))));
        assert!(PointSet::new(1, vec![0.2, 0.2 + 1e-9]).is_ok());
    }

    #[test]
    fn locate_finds_nodes() {
        let g = PointSet::uniform_grid(513, 1).unwrap();
        assert_eq!(g.locate(&[0.5], 1e-12), Some(256));
        assert_eq!(g.locate(&[0.5 + 1e-4], 1e-3), Some(256));
        assert_eq!(g.locate(&[0.5 + 1e-3], 1e-4), None);
    }
}
