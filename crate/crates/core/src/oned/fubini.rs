//! Tail of `{Theta > 4 n t}` on the unit cube from line-wise maximal functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{maximal_function, second_derivative_measure, superlevel_set, PLConvex1D};
use crate::error::{Error, Result};
use crate::matrix::io::{fmt_f64, table_to_string};
use crate::matrix::{fd_gradient, MatrixPoint, MatrixShape, ScalarFunction};
use crate::stats::{fit_log_log, LineFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniOptions {
    pub lines_per_direction: usize,
    /// Samples per line on `[-3, 3]`; odd so that `0` is a node.
    pub line_points: usize,
    pub inclusion_points: usize,
    /// Axis steps for the inclusion check, all below `1`.
    pub h_grid: Vec<f64>,
    pub hull_samples: usize,
    pub osc_samples: usize,
    pub seed: u64,
}

impl Default for FubiniOptions {
    fn default() -> Self {
        FubiniOptions {
            lines_per_direction: 64,
            line_points: 601,
            inclusion_points: 64,
            h_grid: vec![0.9, 0.5, 0.25, 0.1, 0.05, 0.01],
            hull_samples: 8,
            osc_samples: 4096,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniRow {
    pub t: f64,
    /// `2^(n-1)` times the mean `|E_y|` over the sampled lines, per direction.
    pub per_direction: Vec<f64>,
    /// Sum over directions: an upper estimate of `|E_t|`.
    pub measure: f64,
    /// `osc(f, Q_3) / t`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionRow {
    pub t: f64,
    /// Sampled `x0` outside `E_t` where the check ran.
    pub checked: usize,
    /// Sampled `x0` inside `E_t` (skipped).
    pub inside: usize,
    /// Smallest `f~(+-h e_i)`; must be `>= 0`.
    pub min_axis_value: f64,
    /// Largest `f~(+-h e_i) / (2 t h^2)`.
    pub max_axis_ratio: f64,
    /// Largest `f~(x) / (2 t h^2)` over samples with `|x| < h / sqrt(n)`.
    pub max_hull_ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniReport {
    pub function: String,
    pub n: usize,
    pub osc: f64,
    pub threshold: f64,
    pub rows: Vec<FubiniRow>,
    pub fit: Option<LineFit>,
    pub nonincreasing: bool,
    pub inclusion: Vec<InclusionRow>,
    pub inclusion_holds: bool,
    pub options: FubiniOptions,
}

impl FubiniReport {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![fmt_f64(r.t), fmt_f64(r.measure), fmt_f64(r.bound)])
            .collect();
        table_to_string(&["t", "measure", "bound"], &rows)
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

struct Line {
    f: PLConvex1D,
}

fn line_nodes(points: usize) -> Vec<f64> {
    let d = (points - 1) as f64;
    (0..points).map(|k| 3.0 * (2.0 * k as f64 - d) / d).collect()
}

fn value(f: &dyn ScalarFunction, x: &MatrixPoint) -> Result<f64> {
    match f.value(x) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::NonFinite {
            location: x.coords().to_vec(),
            value: v,
        }),
        None => Err(Error::Domain(format!("{} is undefined at {:?}", f.name(), x.coords()))),
    }
}

fn fit_line(f: &dyn ScalarFunction, base: &MatrixPoint, i: usize, nodes: &[f64]) -> Result<Line> {
    let ys = nodes
        .iter()
        .map(|s| {
            let mut x = base.clone();
            x.coords_mut()[i] = *s;
            value(f, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    let f = PLConvex1D::from_samples(nodes, &ys).map_err(|e| {
        Error::Precondition(format!("restriction along e_{i} through {:?}: {e}", base.coords()))
    })?;
    Ok(Line { f })
}

/// Sup over the `2^n` vertices (exact for convex f) minus the sampled inf.
fn oscillation(f: &dyn ScalarFunction, shape: MatrixShape, samples: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = shape.dim();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut x = MatrixPoint::zeros(shape);
    lo = lo.min(value(f, &x)?);
    for mask in 0u64..(1u64 << n) {
        for k in 0..n {
            x.coords_mut()[k] = if mask >> k & 1 == 1 { 3.0 } else { -3.0 };
        }
        let v = value(f, &x)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    for _ in 0..samples {
        for k in 0..n {
            x.coords_mut()[k] = rng.random_range(-3.0..=3.0);
        }
        let v = value(f, &x)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok(hi - lo)
}

fn cube_point(rng: &mut ChaCha8Rng, shape: MatrixShape, skip: Option<usize>) -> MatrixPoint {
    let mut x = MatrixPoint::zeros(shape);
    for (k, c) in x.coords_mut().iter_mut().enumerate() {
        if Some(k) != skip {
            *c = rng.random_range(-1.0..1.0);
        }
    }
    x
}

/// `2 osc(f, Q_3)`, the smallest admissible level, estimated exactly as the experiment does.
pub fn fubini_threshold(f: &dyn ScalarFunction, shape: MatrixShape, options: &FubiniOptions) -> Result<f64> {
    shape.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    Ok(2.0 * oscillation(f, shape, options.osc_samples, &mut rng)?)
}

/// Line-wise superlevel sets of `M f_y''` for each direction, their Fubini aggregate per
/// level, and the paraboloid inclusion at sampled points outside `E_t`.
pub fn fubini_tail_experiment(
    f: &dyn ScalarFunction,
    shape: MatrixShape,
    t_grid: &[f64],
    options: &FubiniOptions,
) -> Result<FubiniReport> {
    shape.validate()?;
    let n = shape.dim();
    if n > 20 {
        return Err(Error::Capacity {
            what: "vertex enumeration of Q_3",
            requested: n,
            limit: 20,
        });
    }
    if options.line_points < 3 || options.line_points % 2 == 0 {
        return Err(Error::Precondition("line_points must be odd and at least 3".into()));
    }
    if options.h_grid.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
        return Err(Error::Precondition("h_grid must lie in (0, 1)".into()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t_grid must be nonempty and increasing".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let osc = oscillation(f, shape, options.osc_samples, &mut rng)?;
    let threshold = 2.0 * osc;
    if t_grid[0] <= threshold {
        return Err(Error::Precondition(format!(
            "t = {} does not exceed 2 osc(f, Q_3) = {threshold}",
            t_grid[0]
        )));
    }

    let nodes = line_nodes(options.line_points);
    let bases: Vec<(usize, MatrixPoint)> = (0..n)
        .flat_map(|i| {
            (0..options.lines_per_direction)
                .map(|_| (i, cube_point(&mut rng, shape, Some(i))))
                .collect::<Vec<_>>()
        })
        .collect();
    // |E_y| per line and level
    let measures: Vec<(usize, Vec<f64>)> = bases
        .par_iter()
        .map(|(i, base)| {
            let line = fit_line(f, base, *i, &nodes)?;
            let mu = second_derivative_measure(&line.f);
            let per_t = t_grid
                .iter()
                .map(|&t| Ok(superlevel_set(&mu, t)?.clipped(-1.0, 1.0).measure()))
                .collect::<Result<Vec<_>>>()?;
            Ok((*i, per_t))
        })
        .collect::<Result<Vec<_>>>()?;

    let cross = 2f64.powi(n as i32 - 1);
    let lines = options.lines_per_direction.max(1) as f64;
    let rows: Vec<FubiniRow> = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut per_direction = vec![0.0; n];
            for (i, m) in &measures {
                per_direction[*i] += m[k];
            }
            for v in per_direction.iter_mut() {
                *v *= cross / lines;
            }
            FubiniRow {
                t,
                measure: per_direction.iter().sum(),
                per_direction,
                bound: osc / t,
            }
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].measure <= w[0].measure);
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.measure).collect();
    let fit = if ms.iter().filter(|m| **m > 0.0).count() >= 3 {
        fit_log_log(&ts, &ms)
    } else {
        None
    };

    let probes: Vec<MatrixPoint> = (0..options.inclusion_points).map(|_| cube_point(&mut rng, shape, None)).collect();
    let hull_seed: u64 = rng.random();
    let inclusion = t_grid
        .iter()
        .map(|&t| inclusion_row(f, &probes, &nodes, t, options, hull_seed))
        .collect::<Result<Vec<_>>>()?;

    Ok(FubiniReport {
        function: f.name().to_string(),
        n,
        osc,
        threshold,
        rows,
        fit,
        nonincreasing,
        inclusion_holds: inclusion.iter().all(|r| r.holds),
        inclusion,
        options: options.clone(),
    })
}

fn inclusion_row(
    f: &dyn ScalarFunction,
    probes: &[MatrixPoint],
    nodes: &[f64],
    t: f64,
    options: &FubiniOptions,
    seed: u64,
) -> Result<InclusionRow> {
    let n = probes.first().map(|p| p.shape.dim()).unwrap_or(1);
    let outcomes = probes
        .par_iter()
        .enumerate()
        .map(|(idx, x0)| {
            // x0 outside E_t: M f_y''(x0_i) <= t along every axis, away from breakpoints
            for i in 0..n {
                let line = fit_line(f, x0, i, nodes)?;
                let s = x0.coords()[i];
                if line.f.breakpoints().contains(&s) || maximal_function(&second_derivative_measure(&line.f), s) > t {
                    return Ok(None);
                }
            }
            let f0 = value(f, x0)?;
            let grad = match f.gradient(x0) {
                Some(g) => g,
                None => fd_gradient(f, x0, 1e-6)
                    .ok_or_else(|| Error::Domain(format!("no gradient at {:?}", x0.coords())))?,
            };
            let tilde = |y: &MatrixPoint| -> Result<f64> {
                let d = y.coords().iter().zip(x0.coords()).map(|(a, b)| a - b);
                let lin: f64 = d.zip(grad.coords()).map(|(a, g)| a * g).sum();
                Ok(value(f, y)? - f0 - lin)
            };
            let mut min_axis = f64::INFINITY;
            let mut axis_ratio: f64 = 0.0;
            let mut hull_ratio: f64 = 0.0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            for &h in &options.h_grid {
                let cap = 2.0 * t * h * h;
                for i in 0..n {
                    for sign in [-1.0, 1.0] {
                        let mut y = x0.clone();
                        y.coords_mut()[i] += sign * h;
                        let v = tilde(&y)?;
                        min_axis = min_axis.min(v);
                        axis_ratio = axis_ratio.max(v / cap);
                    }
                }
                let r = h / (n as f64).sqrt();
                for _ in 0..options.hull_samples {
                    let dir = crate::stats::unit_vector(&mut rng, n);
                    let rho = r * rng.random_range(0.0..1.0f64);
                    let mut y = x0.clone();
                    for (c, d) in y.coords_mut().iter_mut().zip(&dir) {
                        *c += rho * d;
                    }
                    hull_ratio = hull_ratio.max(tilde(&y)? / cap);
                }
            }
            Ok(Some((min_axis, axis_ratio, hull_ratio)))
        })
        .collect::<Result<Vec<_>>>()?;

    let done: Vec<(f64, f64, f64)> = outcomes.iter().flatten().cloned().collect();
    let min_axis_value = done.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let max_axis_ratio = done.iter().map(|d| d.1).fold(0.0, f64::max);
    let max_hull_ratio = done.iter().map(|d| d.2).fold(0.0, f64::max);
    let tol = 1e-9;
    Ok(InclusionRow {
        t,
        checked: done.len(),
        inside: outcomes.len() - done.len(),
        min_axis_value: if done.is_empty() { 0.0 } else { min_axis_value },
        max_axis_ratio,
        max_hull_ratio,
        holds: done.is_empty() || (min_axis_value >= -tol && max_axis_ratio <= 1.0 + tol && max_hull_ratio <= 1.0 + tol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::find;

    fn line2() -> MatrixShape {
        MatrixShape::new(1, 2).unwrap()
    }

    fn small() -> FubiniOptions {
        FubiniOptions {
            lines_per_direction: 8,
            inclusion_points: 16,
            ..FubiniOptions::default()
        }
    }

    #[test]
    fn abs_first_coordinate_gives_slope_minus_one() {
        let f = find("abs_x11").unwrap();
        let ts = [7.0, 10.0, 20.0, 40.0, 70.0];
        let rep = fubini_tail_experiment(&f, line2(), &ts, &small()).unwrap();
        assert!((rep.osc - 3.0).abs() < 1e-12);
        assert_eq!(fubini_threshold(&f, line2(), &small()).unwrap(), rep.threshold);
        for r in &rep.rows {
            // per line (-2/t, 2/t), cross-section 2, nothing along e_2
            assert!((r.per_direction[0] - 8.0 / r.t).abs() < 1e-12, "{r:?}");
            assert_eq!(r.per_direction[1], 0.0);
        }
        assert!((rep.slope().unwrap() + 1.0).abs() < 1e-9);
        assert!(rep.nonincreasing);
        assert!(rep.inclusion_holds);
        assert!(rep.inclusion.iter().all(|r| r.checked > 0));
    }

    #[test]
    fn below_threshold_is_refused() {
        let f = find("abs_x11").unwrap();
        let err = fubini_tail_experiment(&f, line2(), &[5.0, 10.0], &small()).unwrap_err();
        assert!(err.to_string().contains("= 6"), "{err}");
    }

    #[test]
    fn linear_function_has_empty_sets() {
        let f = find("linear").unwrap();
        let rep = fubini_tail_experiment(&f, line2(), &[100.0, 200.0, 400.0], &small()).unwrap();
        assert!(rep.rows.iter().all(|r| r.measure == 0.0));
        assert!(rep.fit.is_none());
        assert!(rep.inclusion_holds);
        assert!(rep.inclusion.iter().all(|r| r.inside == 0 && r.max_axis_ratio.abs() < 1e-9));
    }

    #[test]
    fn quadratic_sets_shrink_with_resolution_atoms() {
        let f = find("half_norm_sq").unwrap();
        let ts = [20.0, 40.0, 80.0, 160.0];
        let rep = fubini_tail_experiment(&f, line2(), &ts, &small()).unwrap();
        assert!(rep.nonincreasing);
        // atoms of mass h at spacing h each contribute an interval of length 2h/t:
        // about 4/t per line, times cross-section 2, for both directions
        for r in &rep.rows {
            assert!((r.measure * r.t - 16.0).abs() < 0.2, "{r:?}");
        }
        assert!((rep.slope().unwrap() + 1.0).abs() < 1e-6);
        assert!(rep.inclusion_holds);
        for row in &rep.inclusion {
            assert!(row.max_axis_ratio <= 0.25 / row.t + 1e-6);
        }
    }

    #[test]
    fn nonconvex_line_is_reported() {
        let f = find("cubic_x11").unwrap();
        let err = fubini_tail_experiment(&f, line2(), &[1e3], &small()).unwrap_err();
        assert!(err.to_string().contains("not convex"), "{err}");
    }
}
