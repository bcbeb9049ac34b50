use rayon::prelude::*;

use super::{Grid, MatrixPoint};
use crate::error::{Error, Result};

/// Anything that can be evaluated at a matrix point: analytic handles or interpolated fields.
pub trait ScalarFunction: Sync {
    fn name(&self) -> &str;

    /// Value at `x`, or `None` when `x` lies outside the region where the function is known.
    fn value(&self, x: &MatrixPoint) -> Option<f64>;

    /// Exact gradient in coordinates, when available.
    fn gradient(&self, _x: &MatrixPoint) -> Option<MatrixPoint> {
        None
    }
}

/// Central-difference gradient with step `step` in every coordinate.
pub fn fd_gradient(f: &dyn ScalarFunction, x: &MatrixPoint, step: f64) -> Option<MatrixPoint> {
    let mut g = MatrixPoint::zeros(x.shape);
    for k in 0..x.shape.dim() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus.coords_mut()[k] += step;
        minus.coords_mut()[k] -= step;
        g.coords_mut()[k] = (f.value(&plus)? - f.value(&minus)?) / (2.0 * step);
    }
    Some(g)
}

/// Function values on the valid nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    name: String,
    grid: Grid,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl SampledField {
    /// `valid` must be a subset of the grid mask; invalid entries of `values` are stored as NaN.
    pub fn new(name: impl Into<String>, grid: Grid, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values and {} mask entries for {} nodes",
                values.len(),
                valid.len(),
                grid.len()
            )));
        }
        let mut values = values;
        for k in 0..grid.len() {
            if valid[k] {
                if !grid.is_valid(k) {
                    return Err(Error::Domain(format!(
                        "node {k} is valid in the field but clipped by the grid"
                    )));
                }
                if !values[k].is_finite() {
                    return Err(Error::NonFinite {
                        location: grid.node(k).into_coords(),
                        value: values[k],
                    });
                }
            } else {
                values[k] = f64::NAN;
            }
        }
        Ok(SampledField {
            name: name.into(),
            grid,
            values,
            valid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid[k]
    }

    pub fn value_at(&self, k: usize) -> Option<f64> {
        self.valid[k].then(|| self.values[k])
    }

    pub fn valid_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |k| self.valid[*k])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Max of `|value|` over valid nodes.
    pub fn sup_norm(&self) -> f64 {
        self.valid_nodes()
            .map(|k| self.values[k].abs())
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation; `None` when a corner with nonzero weight is invalid.
    pub fn interpolate(&self, x: &MatrixPoint) -> Option<f64> {
        if x.shape != self.grid.spec().center.shape {
            return None;
        }
        let p = self.grid.points_per_axis();
        let pos = self.grid.position(x);
        let dim = pos.len();
        let mut base = Vec::with_capacity(dim);
        let mut frac = Vec::with_capacity(dim);
        for &u in &pos {
            if !(u >= 0.0 && u <= (p - 1) as f64) {
                return None;
            }
            let i = (u.floor() as usize).min(p - 2);
            base.push(i);
            frac.push(u - i as f64);
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; dim];
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            for d in 0..dim {
                let bit = (corner >> d) & 1;
                idx[d] = base[d] + bit;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
            }
            if w == 0.0 {
                continue;
            }
            let k = self.grid.linear_index(&idx);
            if !self.valid[k] {
                return None;
            }
            acc += w * self.values[k];
        }
        Some(acc)
    }

    /// Maximal second difference magnitude along the coordinate axes, summed over axes and
    /// divided by four. Bounds the midpoint-convexity defect that multilinear interpolation
    /// can introduce on data sampled from a convex function.
    pub fn interpolation_tolerance(&self) -> f64 {
        let dim = self.grid.dim();
        let mut total = 0.0;
        for d in 0..dim {
            let mut worst: f64 = 0.0;
            for k in self.valid_nodes() {
                let (Some(a), Some(b)) = (
                    self.grid.neighbor(k, d, 1).and_then(|n| self.value_at(n)),
                    self.grid.neighbor(k, d, -1).and_then(|n| self.value_at(n)),
                ) else {
                    continue;
                };
                worst = worst.max((a + b - 2.0 * self.values[k]).abs());
            }
            total += worst;
        }
        total / 4.0
    }
}

impl ScalarFunction for SampledField {
    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &MatrixPoint) -> Option<f64> {
        self.interpolate(x)
    }
}

/// Evaluates `f` on every valid node of `grid`.
pub fn sample(f: &dyn ScalarFunction, grid: &Grid) -> Result<SampledField> {
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !grid.is_valid(k) {
                return Ok(f64::NAN);
            }
            let node = grid.node(k);
            match f.value(&node) {
                Some(v) if v.is_finite() => Ok(v),
                Some(v) => Err(Error::NonFinite {
                    location: node.into_coords(),
                    value: v,
                }),
                None => Err(Error::Domain(format!(
                    "{} is undefined at node {:?}",
                    f.name(),
                    node.coords()
                ))),
            }
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    SampledField::new(f.name(), grid.clone(), values, grid.mask().to_vec())
}

/// Partial derivatives per coordinate: central differences inside, second-order one-sided
/// stencils where a neighbor is missing. Nodes with no usable stencil are invalid.
pub fn gradient_field(field: &SampledField) -> Result<Vec<SampledField>> {
    let grid = field.grid();
    let h = grid.spacing();
    let labels = grid.spec().center.shape.coord_labels();
    (0..grid.dim())
        .map(|d| {
            let mut values = vec![f64::NAN; grid.len()];
            let mut valid = vec![false; grid.len()];
            for k in field.valid_nodes() {
                let v = |delta: isize| grid.neighbor(k, d, delta).and_then(|n| field.value_at(n));
                let f0 = field.values()[k];
                let g = match (v(-2), v(-1), v(1), v(2)) {
                    (_, Some(m), Some(p), _) => Some((p - m) / (2.0 * h)),
                    (_, _, Some(p1), Some(p2)) => Some((-3.0 * f0 + 4.0 * p1 - p2) / (2.0 * h)),
                    (Some(m2), Some(m1), _, _) => Some((3.0 * f0 - 4.0 * m1 + m2) / (2.0 * h)),
                    _ => None,
                };
                if let Some(g) = g {
                    values[k] = g;
                    valid[k] = true;
                }
            }
            SampledField::new(
                format!("d{}/d{}", field.name(), labels[d]),
                grid.clone(),
                values,
                valid,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{corpus, find, Clip, GridSpec, MatrixShape};

    fn grid(rows: usize, cols: usize, points: usize, clip: Clip) -> Grid {
        let shape = MatrixShape::new(rows, cols).unwrap();
        Grid::new(GridSpec::new(MatrixPoint::zeros(shape), 1.0, points, clip)).unwrap()
    }

    #[test]
    fn sample_simple_handles() {
        let g = grid(1, 1, 3, Clip::Cube);
        let f = find("half_norm_sq").unwrap();
        let field = sample(&f, &g).unwrap();
        assert_eq!(field.values(), &[0.5, 0.0, 0.5]);

        let g = grid(2, 2, 3, Clip::Cube);
        let f = find("neg_det_2x2").unwrap();
        let field = sample(&f, &g).unwrap();
        let k = g.linear_index(&[2, 1, 1, 2]);
        assert_eq!(g.node(k).to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(field.values()[k], -1.0);
    }

    #[test]
    fn zero_function_samples_to_zero() {
        let g = grid(2, 2, 3, Clip::Ball);
        let zero = crate::matrix::max_linear("zero", vec![MatrixPoint::zeros(g.spec().center.shape)]);
        let field = sample(&zero, &g).unwrap();
        assert!(field.valid_nodes().all(|k| field.values()[k] == 0.0));
    }

    #[test]
    fn non_finite_values_are_rejected_with_location() {
        struct Bad;
        impl ScalarFunction for Bad {
            fn name(&self) -> &str {
                "bad"
            }
            fn value(&self, x: &MatrixPoint) -> Option<f64> {
                Some(1.0 / x.coords()[0])
            }
        }
        let g = grid(1, 1, 3, Clip::Cube);
        match sample(&Bad, &g) {
            Err(Error::NonFinite { location, .. }) => assert_eq!(location, vec![0.0]),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn gradient_of_affine_and_quadratic_is_exact() {
        let g = grid(1, 2, 7, Clip::Cube);
        let shape = g.spec().center.shape;
        let l = MatrixPoint::from_coords(shape, vec![0.75, -1.25]).unwrap();
        let lin = crate::matrix::max_linear("lin", vec![l.clone()]);
        let grads = gradient_field(&sample(&lin, &g).unwrap()).unwrap();
        for (d, gf) in grads.iter().enumerate() {
            for k in gf.valid_nodes() {
                assert!((gf.values()[k] - l.coords()[d]).abs() < 1e-12);
            }
        }
        let q = find("half_norm_sq").unwrap();
        let grads = gradient_field(&sample(&q, &g).unwrap()).unwrap();
        for (d, gf) in grads.iter().enumerate() {
            for k in gf.valid_nodes() {
                assert!((gf.values()[k] - g.node(k).coords()[d]).abs() < 1e-12);
            }
        }
        // boundary stencils are used, so every node has a gradient
        assert_eq!(grads[0].valid_count(), g.len());
    }

    #[test]
    fn gradient_across_kink_is_zero() {
        let g = grid(1, 1, 3, Clip::Cube);
        let f = find("abs_x11").unwrap();
        let grads = gradient_field(&sample(&f, &g).unwrap()).unwrap();
        assert_eq!(grads[0].values()[1], 0.0);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_multilinear_data() {
        let g = grid(2, 2, 5, Clip::Cube);
        let f = find("neg_det_2x2").unwrap();
        let field = sample(&f, &g).unwrap();
        for k in field.valid_nodes() {
            assert_eq!(field.interpolate(&g.node(k)), Some(field.values()[k]));
        }
        // det is multilinear in the entries, so interpolation is exact
        let x = MatrixPoint::from_dense(g.spec().center.shape, &[0.3, -0.71, 0.12, 0.05]).unwrap();
        assert!((field.interpolate(&x).unwrap() - f.value(&x).unwrap()).abs() < 1e-14);
        let outside = MatrixPoint::from_dense(g.spec().center.shape, &[1.2, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(field.interpolate(&outside), None);
    }

    #[test]
    fn refined_sampling_agrees_at_shared_nodes() {
        for f in corpus().iter().filter(|f| f.accepts(MatrixShape::new(1, 2).unwrap())) {
            let coarse = grid(1, 2, 5, Clip::Ball);
            let fine = Grid::new(coarse.spec().refined()).unwrap();
            let cf = sample(f, &coarse).unwrap();
            let ff = sample(f, &fine).unwrap();
            for k in cf.valid_nodes() {
                let idx: Vec<usize> = coarse.multi_index(k).iter().map(|i| 2 * i).collect();
                let j = fine.linear_index(&idx);
                assert_eq!(cf.values()[k].to_bits(), ff.values()[j].to_bits(), "{}", f.name());
            }
        }
    }
}
