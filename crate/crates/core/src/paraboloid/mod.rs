//! Least openings of paraboloids touching from above, and the tail statistics of the
//! resulting field.

pub mod lp;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::io::{fmt_f64, table_to_string};
use crate::matrix::{Budget, Grid, GridSpec, MatrixPoint, SampledField, ScalarFunction};
use crate::stats::{ball_point, fit_log_log, unit_ball_volume, LineFit};

pub use lp::SolverOptions;

/// Finite constraint set: nodes `y` with values `f(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    spec: GridSpec,
    grid: Grid,
    nodes: Vec<MatrixPoint>,
    values: Vec<f64>,
}

impl ConstraintSet {
    pub fn from_function(f: &dyn ScalarFunction, spec: &GridSpec) -> Result<Self> {
        Self::from_function_with_budget(f, spec, &Budget::default())
    }

    pub fn from_function_with_budget(
        f: &dyn ScalarFunction,
        spec: &GridSpec,
        budget: &Budget,
    ) -> Result<Self> {
        let grid = Grid::with_budget(spec.clone(), budget)?;
        let nodes: Vec<MatrixPoint> = grid.valid_nodes().map(|k| grid.node(k)).collect();
        let values = nodes
            .par_iter()
            .map(|y| match f.value(y) {
                Some(v) if v.is_finite() => Ok(v),
                Some(v) => Err(Error::NonFinite {
                    location: y.coords().to_vec(),
                    value: v,
                }),
                None => Err(Error::Domain(format!(
                    "{} is not defined at constraint node {:?}",
                    f.name(),
                    y.coords()
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ConstraintSet {
            spec: spec.clone(),
            grid,
            nodes,
            values,
        })
    }

    pub fn from_field(field: &SampledField) -> Self {
        let grid = field.grid().clone();
        let nodes = field.valid_nodes().map(|k| grid.node(k)).collect();
        let values = field.valid_nodes().map(|k| field.values()[k]).collect();
        ConstraintSet {
            spec: grid.spec().clone(),
            grid,
            nodes,
            values,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[MatrixPoint] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, x: &MatrixPoint) -> bool {
        self.grid.in_clip(x)
    }

    /// `c_y = 2 (f(y) - f0) / |y - x0|^2` and `g_y = 2 (y - x0) / |y - x0|^2`, skipping `y = x0`.
    fn terms(&self, x0: &MatrixPoint, f0: f64) -> (Vec<f64>, Vec<f64>) {
        let dim = x0.coords().len();
        let mut c = Vec::with_capacity(self.len());
        let mut g = Vec::with_capacity(self.len() * dim);
        for (y, fy) in self.nodes.iter().zip(&self.values) {
            let diff = y - x0;
            let r2 = diff.norm_sq();
            if r2 <= 1e-24 {
                continue;
            }
            c.push(2.0 * (fy - f0) / r2);
            g.extend(diff.coords().iter().map(|v| 2.0 * v / r2));
        }
        (c, g)
    }
}

/// `P(y) = f(x0) + p . (y - x0) + (a / 2) |y - x0|^2` with `P >= f` on the constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaboloidTouch {
    pub x0: MatrixPoint,
    pub value: f64,
    pub slope: MatrixPoint,
    pub opening: f64,
    /// Lower bound on the least opening from the final dual solution.
    pub dual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ParaboloidTouch {
    pub fn eval(&self, y: &MatrixPoint) -> f64 {
        let d = y - &self.x0;
        self.value + self.slope.dot(&d) + 0.5 * self.opening * d.norm_sq()
    }

    /// `max(0, max_y 2 (f(y) - f(x0) - p . (y - x0)) / |y - x0|^2)` recomputed at the slope.
    pub fn replay(&self, constraints: &ConstraintSet) -> f64 {
        let (c, g) = constraints.terms(&self.x0, self.value);
        lp::evaluate(&c, &g, self.x0.coords().len(), self.slope.coords())
    }

    /// `max_y f(y) - P(y)` over the constraint nodes.
    pub fn feasibility(&self, constraints: &ConstraintSet) -> f64 {
        constraints
            .nodes
            .iter()
            .zip(&constraints.values)
            .map(|(y, fy)| fy - self.eval(y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Gap between the returned opening and the certified lower bound.
    pub fn gap(&self) -> f64 {
        self.opening - self.dual_bound
    }
}

/// Least opening at `x0` against `constraints`, with the slope that attains it.
pub fn theta_upper(
    f: &dyn ScalarFunction,
    x0: &MatrixPoint,
    constraints: &ConstraintSet,
    solver: &SolverOptions,
) -> Result<ParaboloidTouch> {
    if x0.shape != constraints.spec.center.shape {
        return Err(Error::Shape(format!(
            "point shape {:?} differs from constraint shape {:?}",
            x0.shape, constraints.spec.center.shape
        )));
    }
    if !constraints.contains(x0) {
        return Err(Error::Domain(format!(
            "{:?} lies outside the constraint region",
            x0.coords()
        )));
    }
    let f0 = f.value(x0).ok_or_else(|| {
        Error::Domain(format!("{} is not defined at {:?}", f.name(), x0.coords()))
    })?;
    Ok(touch_with_value(x0, f0, constraints, solver))
}

fn touch_with_value(
    x0: &MatrixPoint,
    f0: f64,
    constraints: &ConstraintSet,
    solver: &SolverOptions,
) -> ParaboloidTouch {
    let dim = x0.coords().len();
    let (c, g) = constraints.terms(x0, f0);
    let sol = lp::solve(&c, &g, dim, solver);
    ParaboloidTouch {
        x0: x0.clone(),
        value: f0,
        slope: MatrixPoint::from_coords(x0.shape, sol.p).expect("slope has the point's shape"),
        opening: sol.value,
        dual_bound: sol.dual_bound,
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

/// Convenience wrapper building the constraint set from a grid spec.
pub fn theta_upper_on(
    f: &dyn ScalarFunction,
    x0: &MatrixPoint,
    constraints: &GridSpec,
    solver: &SolverOptions,
) -> Result<ParaboloidTouch> {
    theta_upper(f, x0, &ConstraintSet::from_function(f, constraints)?, solver)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSampler {
    pub count: usize,
    pub seed: u64,
    /// Radius of the evaluation ball around the constraint center.
    pub radius: f64,
}

impl Default for EvalSampler {
    fn default() -> Self {
        EvalSampler {
            count: 500,
            seed: 7,
            radius: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaField {
    pub function: String,
    pub constraint_spec: GridSpec,
    pub constraint_count: usize,
    pub sampler: EvalSampler,
    pub touches: Vec<ParaboloidTouch>,
}

impl ThetaField {
    pub fn thetas(&self) -> Vec<f64> {
        self.touches.iter().map(|t| t.opening).collect()
    }

    pub fn unconverged(&self) -> usize {
        self.touches.iter().filter(|t| !t.converged).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let shape = self.constraint_spec.center.shape;
        let mut header: Vec<String> = shape.coord_labels();
        for h in ["theta", "dual_bound", "iterations", "converged"] {
            header.push(h.into());
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = self
            .touches
            .iter()
            .map(|t| {
                let mut row: Vec<String> = t.x0.coords().iter().map(|v| fmt_f64(*v)).collect();
                row.push(fmt_f64(t.opening));
                row.push(fmt_f64(t.dual_bound));
                row.push(t.iterations.to_string());
                row.push((t.converged as u8).to_string());
                row
            })
            .collect();
        table_to_string(&header, &rows)
    }
}

/// Least openings at `count` seeded uniform points of `B_radius(center)`.
pub fn theta_field(
    f: &dyn ScalarFunction,
    sampler: &EvalSampler,
    constraints: &ConstraintSet,
    solver: &SolverOptions,
) -> Result<ThetaField> {
    let center = &constraints.spec.center;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let points: Vec<MatrixPoint> = (0..sampler.count)
        .map(|_| ball_point(&mut rng, center, sampler.radius))
        .collect();
    let touches = points
        .par_iter()
        .map(|x| theta_upper(f, x, constraints, solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaField {
        function: f.name().into(),
        constraint_spec: constraints.spec.clone(),
        constraint_count: constraints.len(),
        sampler: *sampler,
        touches,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t_grid: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fraction of eval points above `scale * t`, times `|B_radius|`.
    pub measure: Vec<f64>,
    /// The single scale standing for `C ||f||_inf`.
    pub scale: f64,
    pub ball_volume: f64,
    pub fit: Option<LineFit>,
    /// Negated log-log slope of `measure` against `t`.
    pub fitted_epsilon: Option<f64>,
    /// Why no fit was produced, if none was.
    pub fit_refused: Option<String>,
}

impl TailReport {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = (0..self.t_grid.len())
            .map(|i| {
                vec![
                    fmt_f64(self.t_grid[i]),
                    fmt_f64(self.scale * self.t_grid[i]),
                    self.counts[i].to_string(),
                    fmt_f64(self.measure[i]),
                ]
            })
            .collect();
        table_to_string(&["t", "threshold", "count", "measure"], &rows)
    }
}

/// Log-spaced grid with `points` values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Tail table of `theta` at thresholds `scale * t`, with an `epsilon` fit when at least three
/// measures are positive and the grid spans a decade.
pub fn tail_experiment(theta: &ThetaField, scale: f64, t_grid: &[f64]) -> Result<TailReport> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Precondition("t values must be positive".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t grid must be strictly increasing".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::Precondition(format!("scale must be positive, got {scale}")));
    }
    let total = theta.touches.len();
    if total == 0 {
        return Err(Error::Empty("theta field has no evaluation points".into()));
    }
    let dim = theta.constraint_spec.center.shape.dim();
    let ball_volume = unit_ball_volume(dim) * theta.sampler.radius.powi(dim as i32);
    let thetas = theta.thetas();
    let counts: Vec<usize> = t_grid
        .iter()
        .map(|t| thetas.iter().filter(|v| **v > scale * t).count())
        .collect();
    let measure: Vec<f64> = counts
        .iter()
        .map(|c| *c as f64 / total as f64 * ball_volume)
        .collect();
    let nonzero = measure.iter().filter(|m| **m > 0.0).count();
    let span = t_grid[t_grid.len() - 1] / t_grid[0];
    let (fit, refused) = if nonzero < 3 {
        (None, Some(format!("only {nonzero} positive measures, need 3")))
    } else if span < 10.0 * (1.0 - 1e-12) {
        (None, Some(format!("t grid spans a factor {span}, need 10")))
    } else {
        match fit_log_log(t_grid, &measure) {
            Some(fit) => (Some(fit), None),
            None => (None, Some("degenerate log-log fit".into())),
        }
    };
    Ok(TailReport {
        t_grid: t_grid.to_vec(),
        counts,
        measure,
        scale,
        ball_volume,
        fitted_epsilon: fit.map(|f| -f.slope),
        fit,
        fit_refused: refused,
    })
}
