//! Matrix-space geometry: shapes, points, rank-one directions, tensor grids,
//! sampled fields and the analytic test-function corpus.

mod corpus;
mod field;
mod grid;
pub mod io;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{corpus, find, max_linear, Flags, FunctionHandle};
pub use field::{fd_gradient, gradient_field, sample, ScalarFunction, SampledField};
pub use grid::{make_grid, Budget, Clip, Grid, GridSpec};

/// Shape of the matrix space `R^{m x n}` or, when `symmetric` is set, `Sym(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixShape {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub symmetric: bool,
}

impl MatrixShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let shape = MatrixShape {
            rows,
            cols,
            symmetric: false,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn symmetric(n: usize) -> Result<Self> {
        let shape = MatrixShape {
            rows: n,
            cols: n,
            symmetric: true,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Shape(format!(
                "{}x{} has an empty side",
                self.rows, self.cols
            )));
        }
        if self.symmetric && self.rows != self.cols {
            return Err(Error::Shape(format!(
                "symmetric shape must be square, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Number of free coordinates: `m n`, or `n (n + 1) / 2` for symmetric shapes.
    pub fn dim(&self) -> usize {
        if self.symmetric {
            self.rows * (self.rows + 1) / 2
        } else {
            self.rows * self.cols
        }
    }

    /// Matrix entry `(i, j)` (zero based) of coordinate `k`.
    pub fn coord_entry(&self, k: usize) -> (usize, usize) {
        if self.symmetric {
            let n = self.rows;
            let mut k = k;
            for i in 0..n {
                let len = n - i;
                if k < len {
                    return (i, i + k);
                }
                k -= len;
            }
            panic!("coordinate index out of range for {self:?}");
        } else {
            (k / self.cols, k % self.cols)
        }
    }

    /// Coordinate index holding entry `(i, j)`; symmetric shapes fold `(j, i)` onto the upper triangle.
    pub fn coord_index(&self, i: usize, j: usize) -> usize {
        assert!(i < self.rows && j < self.cols, "entry ({i},{j}) outside {self:?}");
        if self.symmetric {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            let n = self.rows;
            i * n - i * i.saturating_sub(1) / 2 + (j - i)
        } else {
            i * self.cols + j
        }
    }

    /// Multiplicity of coordinate `k` in the Frobenius norm (2 for off-diagonal symmetric entries).
    pub fn frobenius_weight(&self, k: usize) -> f64 {
        if self.symmetric {
            let (i, j) = self.coord_entry(k);
            if i == j {
                1.0
            } else {
                2.0
            }
        } else {
            1.0
        }
    }

    /// Column labels `x11, x12, ...` (one based, row-major, upper triangle when symmetric).
    pub fn coord_labels(&self) -> Vec<String> {
        (0..self.dim())
            .map(|k| {
                let (i, j) = self.coord_entry(k);
                format!("x{}{}", i + 1, j + 1)
            })
            .collect()
    }
}

/// A point of the matrix space stored by its free coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixPoint {
    pub shape: MatrixShape,
    coords: Vec<f64>,
}

impl MatrixPoint {
    pub fn zeros(shape: MatrixShape) -> Self {
        MatrixPoint {
            shape,
            coords: vec![0.0; shape.dim()],
        }
    }

    pub fn from_coords(shape: MatrixShape, coords: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if coords.len() != shape.dim() {
            return Err(Error::Shape(format!(
                "expected {} coordinates for {}x{}, got {}",
                shape.dim(),
                shape.rows,
                shape.cols,
                coords.len()
            )));
        }
        Ok(MatrixPoint { shape, coords })
    }

    /// Builds a point from a dense row-major matrix. Symmetric shapes reject asymmetric input.
    pub fn from_dense(shape: MatrixShape, dense: &[f64]) -> Result<Self> {
        shape.validate()?;
        if dense.len() != shape.rows * shape.cols {
            return Err(Error::Shape(format!(
                "expected {} dense entries, got {}",
                shape.rows * shape.cols,
                dense.len()
            )));
        }
        if shape.symmetric {
            let n = shape.rows;
            for i in 0..n {
                for j in 0..i {
                    if dense[i * n + j] != dense[j * n + i] {
                        return Err(Error::Shape(format!(
                            "entry ({},{}) differs from ({},{})",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        let coords = (0..shape.dim())
            .map(|k| {
                let (i, j) = shape.coord_entry(k);
                dense[i * shape.cols + j]
            })
            .collect();
        Ok(MatrixPoint { shape, coords })
    }

    /// Unit matrix `e_i (x) e_j` (zero based); symmetric shapes get `sym(e_i (x) e_j)` scaled so the coordinate is 1.
    pub fn unit(shape: MatrixShape, i: usize, j: usize) -> Self {
        let mut p = MatrixPoint::zeros(shape);
        p.coords[shape.coord_index(i, j)] = 1.0;
        p
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coords[self.shape.coord_index(i, j)]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let (m, n) = (self.shape.rows, self.shape.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    /// Frobenius norm `|x|`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords
            .iter()
            .enumerate()
            .map(|(k, c)| self.shape.frobenius_weight(k) * c * c)
            .sum()
    }

    /// Coordinate pairing `sum_k p_k z_k`, used for gradients acting on displacements.
    pub fn dot(&self, other: &MatrixPoint) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn distance(&self, other: &MatrixPoint) -> f64 {
        (self - other).norm()
    }

    /// `self + t * dir`.
    pub fn offset(&self, dir: &MatrixPoint, t: f64) -> MatrixPoint {
        debug_assert_eq!(self.shape, dir.shape);
        MatrixPoint {
            shape: self.shape,
            coords: self
                .coords
                .iter()
                .zip(&dir.coords)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &MatrixPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Determinant of a 2x2 point.
    pub fn det2(&self) -> f64 {
        assert!(
            self.shape.rows == 2 && self.shape.cols == 2,
            "det2 on {:?}",
            self.shape
        );
        self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0)
    }
}

impl Add for &MatrixPoint {
    type Output = MatrixPoint;
    fn add(self, rhs: &MatrixPoint) -> MatrixPoint {
        self.offset(rhs, 1.0)
    }
}

impl Sub for &MatrixPoint {
    type Output = MatrixPoint;
    fn sub(self, rhs: &MatrixPoint) -> MatrixPoint {
        self.offset(rhs, -1.0)
    }
}

impl Mul<f64> for &MatrixPoint {
    type Output = MatrixPoint;
    fn mul(self, s: f64) -> MatrixPoint {
        MatrixPoint {
            shape: self.shape,
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }
}

impl Neg for &MatrixPoint {
    type Output = MatrixPoint;
    fn neg(self) -> MatrixPoint {
        self * -1.0
    }
}

/// A rank-one direction: `a (x) b` on general shapes, or the symmetric basis element `r_ij`.
///
/// On symmetric shapes `Outer` requires `a == b` so that `a (x) a` stays symmetric.
/// `r_ij = (e_i + e_j) (x) (e_i + e_j)` for `i != j` and `r_ii = e_i (x) e_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RankOneDirection {
    Outer { a: Vec<f64>, b: Vec<f64> },
    SymmetricPair { i: usize, j: usize },
}

impl RankOneDirection {
    pub fn outer(shape: MatrixShape, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != shape.rows || b.len() != shape.cols {
            return Err(Error::Shape(format!(
                "direction factors of length {}, {} do not fit {}x{}",
                a.len(),
                b.len(),
                shape.rows,
                shape.cols
            )));
        }
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(na > 0.0 && nb > 0.0) || !na.is_finite() || !nb.is_finite() {
            return Err(Error::Shape("rank-one factors must be nonzero".into()));
        }
        if shape.symmetric && a != b {
            return Err(Error::Shape(
                "symmetric shapes need a (x) a directions".into(),
            ));
        }
        Ok(RankOneDirection::Outer { a, b })
    }

    pub fn symmetric_pair(shape: MatrixShape, i: usize, j: usize) -> Result<Self> {
        if !shape.symmetric {
            return Err(Error::Shape("r_ij directions need a symmetric shape".into()));
        }
        if i >= shape.rows || j >= shape.rows {
            return Err(Error::Shape(format!("pair ({i},{j}) outside {}", shape.rows)));
        }
        Ok(RankOneDirection::SymmetricPair { i, j })
    }

    /// The coordinate axes `e_i (x) e_j` (for symmetric shapes, `r_ii` and `r_ij`).
    pub fn coordinate_set(shape: MatrixShape) -> Vec<RankOneDirection> {
        if shape.symmetric {
            let n = shape.rows;
            let mut out = Vec::new();
            for i in 0..n {
                for j in i..n {
                    out.push(RankOneDirection::SymmetricPair { i, j });
                }
            }
            out
        } else {
            let mut out = Vec::new();
            for i in 0..shape.rows {
                for j in 0..shape.cols {
                    let mut a = vec![0.0; shape.rows];
                    let mut b = vec![0.0; shape.cols];
                    a[i] = 1.0;
                    b[j] = 1.0;
                    out.push(RankOneDirection::Outer { a, b });
                }
            }
            out
        }
    }

    /// The matrix of the direction, as a point of `shape`.
    pub fn matrix(&self, shape: MatrixShape) -> MatrixPoint {
        let (m, n) = (shape.rows, shape.cols);
        let mut dense = vec![0.0; m * n];
        match self {
            RankOneDirection::Outer { a, b } => {
                for i in 0..m {
                    for j in 0..n {
                        dense[i * n + j] = a[i] * b[j];
                    }
                }
            }
            RankOneDirection::SymmetricPair { i, j } => {
                let mut v = vec![0.0; n];
                v[*i] = 1.0;
                v[*j] = 1.0;
                for r in 0..n {
                    for c in 0..n {
                        dense[r * n + c] = v[r] * v[c];
                    }
                }
            }
        }
        MatrixPoint::from_dense(shape, &dense).expect("rank-one directions fit their shape")
    }

    /// Frobenius norm of the direction matrix, `|a| |b|`.
    pub fn scale(&self) -> f64 {
        match self {
            RankOneDirection::Outer { a, b } => {
                let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                na * nb
            }
            RankOneDirection::SymmetricPair { i, j } => {
                if i == j {
                    1.0
                } else {
                    2.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_coordinates_round_trip() {
        let shape = MatrixShape::symmetric(3).unwrap();
        assert_eq!(shape.dim(), 6);
        for k in 0..shape.dim() {
            let (i, j) = shape.coord_entry(k);
            assert!(i <= j);
            assert_eq!(shape.coord_index(i, j), k);
            assert_eq!(shape.coord_index(j, i), k);
        }
        assert_eq!(shape.coord_labels(), ["x11", "x12", "x13", "x22", "x23", "x33"]);
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(MatrixShape::new(0, 2).is_err());
        assert!(MatrixShape {
            rows: 2,
            cols: 3,
            symmetric: true
        }
        .validate()
        .is_err());
    }

    #[test]
    fn symmetric_point_rejects_asymmetric_dense_input() {
        let shape = MatrixShape::symmetric(2).unwrap();
        assert!(MatrixPoint::from_dense(shape, &[1.0, 2.0, 3.0, 4.0]).is_err());
        let p = MatrixPoint::from_dense(shape, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(p.coords(), &[1.0, 2.0, 4.0]);
        assert_eq!(p.norm_sq(), 1.0 + 8.0 + 16.0);
    }

    #[test]
    fn rank_one_direction_has_rank_one() {
        let shape = MatrixShape::new(2, 2).unwrap();
        let d = RankOneDirection::outer(shape, vec![1.0, -2.0], vec![0.5, 3.0]).unwrap();
        let m = d.matrix(shape);
        assert_eq!(m.det2(), 0.0);
        assert!((m.norm() - d.scale()).abs() < 1e-14);
        assert!(RankOneDirection::outer(shape, vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn symmetric_pair_norms() {
        let shape = MatrixShape::symmetric(2).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let d = RankOneDirection::symmetric_pair(shape, i, j).unwrap();
            assert!((d.matrix(shape).norm() - d.scale()).abs() < 1e-14);
        }
    }
}
