use serde::{Deserialize, Serialize};

use super::MatrixPoint;
use crate::error::{Error, Result};

/// Which region of the tensor grid is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clip {
    /// The coordinate cube `Q_r(center)`.
    Cube,
    /// The Frobenius ball `B_r(center)`.
    Ball,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: MatrixPoint,
    pub radius: f64,
    pub points_per_axis: usize,
    pub clip: Clip,
}

impl GridSpec {
    pub fn new(center: MatrixPoint, radius: f64, points_per_axis: usize, clip: Clip) -> Self {
        GridSpec {
            center,
            radius,
            points_per_axis,
            clip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.center.shape.validate()?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Domain(format!(
                "grid radius must be positive, got {}",
                self.radius
            )));
        }
        if self.points_per_axis < 3 || self.points_per_axis % 2 == 0 {
            return Err(Error::Domain(format!(
                "points per axis must be odd and at least 3, got {}",
                self.points_per_axis
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::Domain("grid center is not finite".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    /// Same region with twice the resolution; every coarse node is a fine node.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            points_per_axis: 2 * self.points_per_axis - 1,
            ..self.clone()
        }
    }
}

/// Desk-scale limits enforced when a grid is built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_dim: usize,
    pub max_points_per_axis: usize,
    pub max_nodes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_dim: 4,
            max_points_per_axis: 13,
            max_nodes: 30_000,
        }
    }
}

impl Budget {
    /// One-dimensional instances may use fine resolutions; the node cap still applies.
    pub fn line(max_points: usize) -> Self {
        Budget {
            max_dim: 1,
            max_points_per_axis: max_points,
            max_nodes: max_points,
        }
    }
}

/// A tensor grid over the coordinates of a matrix space, with a clip mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    dim: usize,
    total: usize,
    mask: Vec<bool>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        Grid::with_budget(spec, &Budget::default())
    }

    pub fn with_budget(spec: GridSpec, budget: &Budget) -> Result<Self> {
        spec.validate()?;
        let dim = spec.center.shape.dim();
        if dim > budget.max_dim {
            return Err(Error::Capacity {
                what: "grid dimension",
                requested: dim,
                limit: budget.max_dim,
            });
        }
        if spec.points_per_axis > budget.max_points_per_axis {
            return Err(Error::Capacity {
                what: "points per axis",
                requested: spec.points_per_axis,
                limit: budget.max_points_per_axis,
            });
        }
        let total = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(spec.points_per_axis));
        let total = match total {
            Some(t) if t <= budget.max_nodes => t,
            other => {
                return Err(Error::Capacity {
                    what: "grid nodes",
                    requested: other.unwrap_or(usize::MAX),
                    limit: budget.max_nodes,
                })
            }
        };
        let mut grid = Grid {
            spec,
            dim,
            total,
            mask: Vec::new(),
        };
        grid.mask = (0..total)
            .map(|k| grid.in_clip(&grid.node(k)))
            .collect();
        Ok(grid)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing()
    }

    pub fn points_per_axis(&self) -> usize {
        self.spec.points_per_axis
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn valid_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.total).filter(move |k| self.mask[*k])
    }

    /// Per-axis indices of node `k`; the first coordinate varies slowest.
    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        let p = self.spec.points_per_axis;
        let mut idx = vec![0; self.dim];
        let mut rem = k;
        for d in (0..self.dim).rev() {
            idx[d] = rem % p;
            rem /= p;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let p = self.spec.points_per_axis;
        idx.iter().fold(0, |acc, i| acc * p + i)
    }

    /// Exact node coordinate along one axis: `c + r (2i - (P-1)) / (P-1)`.
    ///
    /// Written as a ratio of small integers so refined grids reproduce coarse nodes bit for bit.
    pub fn axis_coordinate(&self, axis: usize, i: usize) -> f64 {
        let den = (self.spec.points_per_axis - 1) as f64;
        let num = 2.0 * i as f64 - den;
        self.spec.center.coords()[axis] + self.spec.radius * (num / den)
    }

    pub fn node(&self, k: usize) -> MatrixPoint {
        let idx = self.multi_index(k);
        let coords = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| self.axis_coordinate(d, i))
            .collect();
        MatrixPoint::from_coords(self.spec.center.shape, coords).expect("grid nodes fit the shape")
    }

    /// Neighbor of `k` displaced by `delta` nodes along `axis`, ignoring the mask.
    pub fn neighbor(&self, k: usize, axis: usize, delta: isize) -> Option<usize> {
        let p = self.spec.points_per_axis as isize;
        let stride = (self.spec.points_per_axis as isize).pow((self.dim - 1 - axis) as u32);
        let i = (k as isize / stride) % p;
        let j = i + delta;
        if j < 0 || j >= p {
            None
        } else {
            Some((k as isize + delta * stride) as usize)
        }
    }

    /// Neighbor of `k` displaced by an integer offset vector.
    pub fn shifted(&self, k: usize, offsets: &[isize]) -> Option<usize> {
        let mut cur = k;
        for (axis, &o) in offsets.iter().enumerate() {
            if o != 0 {
                cur = self.neighbor(cur, axis, o)?;
            }
        }
        Some(cur)
    }

    /// Valid neighbor, if any.
    pub fn valid_neighbor(&self, k: usize, axis: usize, delta: isize) -> Option<usize> {
        self.neighbor(k, axis, delta).filter(|n| self.mask[*n])
    }

    pub fn in_clip(&self, x: &MatrixPoint) -> bool {
        let c = &self.spec.center;
        let r = self.spec.radius;
        let slack = 1e-12 * r.max(1.0);
        match self.spec.clip {
            Clip::Cube => x
                .coords()
                .iter()
                .zip(c.coords())
                .all(|(a, b)| (a - b).abs() <= r + slack),
            Clip::Ball => x.distance(c) <= r + slack,
        }
    }

    /// Lower bound on the Frobenius distance from `x` to the boundary of the clip region
    /// (negative outside).
    pub fn distance_to_boundary(&self, x: &MatrixPoint) -> f64 {
        let c = &self.spec.center;
        let r = self.spec.radius;
        match self.spec.clip {
            Clip::Cube => x
                .coords()
                .iter()
                .zip(c.coords())
                .map(|(a, b)| r - (a - b).abs())
                .fold(f64::INFINITY, f64::min),
            Clip::Ball => r - x.distance(c),
        }
    }

    /// Fractional grid position of `x` along each axis, snapped to integers within `1e-9`.
    pub fn position(&self, x: &MatrixPoint) -> Vec<f64> {
        let h = self.spacing();
        let half = (self.spec.points_per_axis - 1) as f64 / 2.0;
        x.coords()
            .iter()
            .zip(self.spec.center.coords())
            .map(|(a, c)| {
                let u = (a - c) / h + half;
                let r = u.round();
                if (u - r).abs() < 1e-9 {
                    r
                } else {
                    u
                }
            })
            .collect()
    }

    /// The node list with its mask.
    pub fn nodes(&self) -> Vec<(MatrixPoint, bool)> {
        (0..self.total).map(|k| (self.node(k), self.mask[k])).collect()
    }
}

/// Builds the grid described by `spec` under the default budget.
pub fn make_grid(spec: GridSpec) -> Result<Grid> {
    Grid::new(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixShape;

    fn spec(rows: usize, cols: usize, points: usize, clip: Clip) -> GridSpec {
        let shape = MatrixShape::new(rows, cols).unwrap();
        GridSpec::new(MatrixPoint::zeros(shape), 1.0, points, clip)
    }

    #[test]
    fn one_by_one_nodes() {
        let g = make_grid(spec(1, 1, 3, Clip::Cube)).unwrap();
        let xs: Vec<f64> = (0..g.len()).map(|k| g.node(k).coords()[0]).collect();
        assert_eq!(xs, [-1.0, 0.0, 1.0]);
        assert_eq!(g.valid_count(), 3);
    }

    #[test]
    fn two_by_two_has_81_nodes() {
        let g = make_grid(spec(2, 2, 3, Clip::Cube)).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g.valid_count(), 81);
    }

    #[test]
    fn ball_clip_drops_corners() {
        let g = make_grid(spec(1, 2, 3, Clip::Ball)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.valid_count(), 5);
        for k in 0..g.len() {
            let n = g.node(k);
            assert_eq!(g.is_valid(k), n.norm() <= 1.0);
        }
    }

    #[test]
    fn budget_overflow_is_a_capacity_error() {
        let err = make_grid(spec(2, 3, 3, Clip::Cube)).unwrap_err();
        assert!(matches!(err, Error::Capacity { what: "grid dimension", .. }));
        let err = make_grid(spec(1, 1, 15, Clip::Cube)).unwrap_err();
        assert!(matches!(err, Error::Capacity { what: "points per axis", .. }));
        let tight = Budget {
            max_nodes: 80,
            ..Budget::default()
        };
        let err = Grid::with_budget(spec(2, 2, 3, Clip::Cube), &tight).unwrap_err();
        assert!(matches!(err, Error::Capacity { what: "grid nodes", .. }));
    }

    #[test]
    fn even_or_tiny_axes_rejected() {
        assert!(make_grid(spec(1, 1, 4, Clip::Cube)).is_err());
        assert!(make_grid(spec(1, 1, 1, Clip::Cube)).is_err());
    }

    #[test]
    fn nodes_symmetric_about_zero_center() {
        let g = make_grid(spec(2, 2, 5, Clip::Ball)).unwrap();
        for k in 0..g.len() {
            let n = g.node(k);
            // mirror index
            let idx: Vec<usize> = g.multi_index(k).iter().map(|i| 4 - i).collect();
            let m = g.node(g.linear_index(&idx));
            assert_eq!(&n * -1.0, m);
            assert_eq!(g.is_valid(k), g.is_valid(g.linear_index(&idx)));
        }
    }

    #[test]
    fn refined_grid_contains_coarse_nodes_exactly() {
        let coarse = make_grid(spec(1, 2, 5, Clip::Cube)).unwrap();
        let fine = make_grid(coarse.spec().refined()).unwrap();
        for k in 0..coarse.len() {
            let idx: Vec<usize> = coarse.multi_index(k).iter().map(|i| 2 * i).collect();
            assert_eq!(coarse.node(k), fine.node(fine.linear_index(&idx)));
        }
    }

    #[test]
    fn neighbors_respect_edges() {
        let g = make_grid(spec(1, 2, 3, Clip::Cube)).unwrap();
        let center = g.linear_index(&[1, 1]);
        assert_eq!(g.neighbor(center, 0, 1), Some(g.linear_index(&[2, 1])));
        assert_eq!(g.neighbor(center, 1, -1), Some(g.linear_index(&[1, 0])));
        assert_eq!(g.neighbor(g.linear_index(&[2, 1]), 0, 1), None);
    }
}
