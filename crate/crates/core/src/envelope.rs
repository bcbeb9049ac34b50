//! Cone envelopes of partial-derivative fields, the touch set `{theta <= A}`, and the
//! second-order Taylor remainder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::io::{fmt_f64, table_to_string};
use crate::matrix::{
    fd_gradient, gradient_field, sample, Grid, MatrixPoint, SampledField, ScalarFunction,
};
use crate::paraboloid::ThetaField;
use crate::stats::{ball_point, fit_log_log, unit_vector};

/// Norm of a coordinate gradient, dual to the Frobenius norm on coordinates.
pub fn dual_norm(g: &MatrixPoint) -> f64 {
    g.coords()
        .iter()
        .enumerate()
        .map(|(k, v)| v * v / g.shape.frobenius_weight(k))
        .sum::<f64>()
        .sqrt()
}

/// Partial-derivative fields of `f` on `grid`: exact gradients where the function provides
/// them (nodes without one become invalid), central differences of the samples otherwise.
pub fn derivative_fields(f: &dyn ScalarFunction, grid: &Grid) -> Result<Vec<SampledField>> {
    let nodes: Vec<usize> = grid.valid_nodes().collect();
    let grads: Vec<Option<MatrixPoint>> = nodes
        .par_iter()
        .map(|&k| f.gradient(&grid.node(k)))
        .collect();
    if grads.iter().all(Option::is_none) {
        return gradient_field(&sample(f, grid)?);
    }
    let labels = grid.spec().center.shape.coord_labels();
    (0..grid.dim())
        .map(|d| {
            let mut values = vec![f64::NAN; grid.len()];
            let mut valid = vec![false; grid.len()];
            for (&k, g) in nodes.iter().zip(&grads) {
                if let Some(g) = g {
                    values[k] = g.coords()[d];
                    valid[k] = values[k].is_finite();
                }
            }
            SampledField::new(
                format!("d{}/d{}", f.name(), labels[d]),
                grid.clone(),
                values,
                valid,
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    /// Output nodes are those within this distance of the grid center.
    pub output_radius: f64,
    /// Restrict the search to `|x - y| < window`, verified on a sampled subset.
    pub window: Option<f64>,
    pub verify_samples: usize,
    pub seed: u64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            output_radius: 0.5,
            window: None,
            verify_samples: 64,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub radius: f64,
    pub verified_nodes: usize,
    pub mismatches: usize,
    /// The restriction changed a verified value, so every node was recomputed by full scan.
    pub fell_back: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeEnvelopePair {
    pub lipschitz: f64,
    pub w_minus: SampledField,
    pub w_plus: SampledField,
    pub source: SampledField,
    pub options: EnvelopeOptions,
    pub window: Option<WindowReport>,
}

struct Sources {
    points: Vec<MatrixPoint>,
    values: Vec<f64>,
}

impl Sources {
    fn of(field: &SampledField) -> Self {
        let grid = field.grid();
        Sources {
            points: field.valid_nodes().map(|k| grid.node(k)).collect(),
            values: field.valid_nodes().map(|k| field.values()[k]).collect(),
        }
    }

    fn envelopes(&self, x: &MatrixPoint, l: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (y, v) in self.points.iter().zip(&self.values) {
            let d = l * x.distance(y);
            lo = lo.min(v + d);
            hi = hi.max(v - d);
        }
        (lo, hi)
    }
}

fn windowed(field: &SampledField, k: usize, l: f64, offsets: &[Vec<isize>], r: f64) -> (f64, f64) {
    let grid = field.grid();
    let x = grid.node(k);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for off in offsets {
        let Some(n) = grid.shifted(k, off) else { continue };
        let Some(v) = field.value_at(n) else { continue };
        let y = grid.node(n);
        let dist = x.distance(&y);
        if dist < r {
            lo = lo.min(v + l * dist);
            hi = hi.max(v - l * dist);
        }
    }
    (lo, hi)
}

/// Integer offsets whose coordinate displacement has Frobenius length below `r`.
fn window_offsets(grid: &Grid, r: f64) -> Vec<Vec<isize>> {
    let dim = grid.dim();
    let h = grid.spacing();
    let reach = (r / h).ceil() as isize;
    let width = (2 * reach + 1) as usize;
    let shape = grid.spec().center.shape;
    (0..width.pow(dim as u32))
        .filter_map(|s| {
            let mut rem = s;
            let mut off = vec![0isize; dim];
            for d in (0..dim).rev() {
                off[d] = (rem % width) as isize - reach;
                rem /= width;
            }
            let len2: f64 = off
                .iter()
                .enumerate()
                .map(|(k, o)| shape.frobenius_weight(k) * (*o as f64 * h).powi(2))
                .sum();
            (len2.sqrt() < r).then_some(off)
        })
        .collect()
}

/// `w^-(x) = min_y s(y) + L |x - y|` and `w^+(x) = max_y s(y) - L |x - y|` over the valid
/// source nodes, at grid nodes within `output_radius` of the center.
pub fn cone_convolutions(
    source: &SampledField,
    l: f64,
    options: &EnvelopeOptions,
) -> Result<ConeEnvelopePair> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Precondition(format!("cone opening must be positive, got {l}")));
    }
    if source.valid_count() == 0 {
        return Err(Error::Empty("source field has no valid nodes".into()));
    }
    let grid = source.grid();
    let center = &grid.spec().center;
    let slack = 1e-12 * options.output_radius.max(1.0);
    let outputs: Vec<usize> = (0..grid.len())
        .filter(|&k| grid.is_valid(k) && grid.node(k).distance(center) <= options.output_radius + slack)
        .collect();
    if outputs.is_empty() {
        return Err(Error::Empty("no grid nodes inside the output radius".into()));
    }
    let sources = Sources::of(source);
    let full = |k: usize| sources.envelopes(&grid.node(k), l);

    let (values, window) = match options.window {
        None => (outputs.par_iter().map(|&k| full(k)).collect::<Vec<_>>(), None),
        Some(r) => {
            let offsets = window_offsets(grid, r);
            let restricted: Vec<(f64, f64)> = outputs
                .par_iter()
                .map(|&k| windowed(source, k, l, &offsets, r))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let picks: Vec<usize> = (0..options.verify_samples.min(outputs.len()))
                .map(|_| rand::Rng::random_range(&mut rng, 0..outputs.len()))
                .collect();
            let mismatches = picks
                .iter()
                .filter(|&&i| restricted[i] != full(outputs[i]))
                .count();
            let fell_back = mismatches > 0;
            let values = if fell_back {
                outputs.par_iter().map(|&k| full(k)).collect()
            } else {
                restricted
            };
            (
                values,
                Some(WindowReport {
                    radius: r,
                    verified_nodes: picks.len(),
                    mismatches,
                    fell_back,
                }),
            )
        }
    };

    let mut lo = vec![f64::NAN; grid.len()];
    let mut hi = vec![f64::NAN; grid.len()];
    let mut valid = vec![false; grid.len()];
    for (&k, (a, b)) in outputs.iter().zip(values) {
        // the window may contain no valid source
        if a.is_finite() && b.is_finite() {
            lo[k] = a;
            hi[k] = b;
            valid[k] = true;
        }
    }
    Ok(ConeEnvelopePair {
        lipschitz: l,
        w_minus: SampledField::new(format!("w_minus({})", source.name()), grid.clone(), lo, valid.clone())?,
        w_plus: SampledField::new(format!("w_plus({})", source.name()), grid.clone(), hi, valid)?,
        source: source.clone(),
        options: *options,
        window,
    })
}

impl ConeEnvelopePair {
    /// `(w^-(x), w^+(x))` at an arbitrary point, by full scan of the source.
    pub fn at(&self, x: &MatrixPoint) -> (f64, f64) {
        Sources::of(&self.source).envelopes(x, self.lipschitz)
    }

    /// `max(0, max(w^- - s), max(s - w^+))` over nodes where both are defined.
    pub fn order_violation(&self) -> f64 {
        self.w_minus
            .valid_nodes()
            .filter_map(|k| {
                let s = self.source.value_at(k)?;
                Some((self.w_minus.values()[k] - s).max(s - self.w_plus.values()[k]))
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|w(x) - w(y)| - L |x - y|` over all pairs of output nodes, for both envelopes.
    pub fn lipschitz_excess(&self) -> f64 {
        let grid = self.w_minus.grid();
        let nodes: Vec<usize> = self.w_minus.valid_nodes().collect();
        let points: Vec<MatrixPoint> = nodes.iter().map(|&k| grid.node(k)).collect();
        let l = self.lipschitz;
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut worst = f64::NEG_INFINITY;
                for j in (i + 1)..nodes.len() {
                    let d = l * points[i].distance(&points[j]);
                    for w in [&self.w_minus, &self.w_plus] {
                        let diff = (w.values()[nodes[i]] - w.values()[nodes[j]]).abs();
                        worst = worst.max(diff - d);
                    }
                }
                worst
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    /// Largest change when each envelope is convolved again with the same cone.
    pub fn idempotence_defect(&self) -> Result<f64> {
        let again_minus = cone_convolutions(&self.w_minus, self.lipschitz, &self.options)?;
        let again_plus = cone_convolutions(&self.w_plus, self.lipschitz, &self.options)?;
        let mut worst: f64 = 0.0;
        for k in self.w_minus.valid_nodes() {
            let (Some(a), Some(b)) = (again_minus.w_minus.value_at(k), again_plus.w_plus.value_at(k))
            else {
                return Err(Error::Domain(format!("node {k} lost by the second convolution")));
            };
            worst = worst
                .max((a - self.w_minus.values()[k]).abs())
                .max((b - self.w_plus.values()[k]).abs());
        }
        Ok(worst)
    }
}

/// One-sided difference disagreement as a stand-in for the non-differentiability set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkDetector {
    pub step: f64,
    /// Defaults to `10 step`.
    pub threshold: Option<f64>,
}

impl Default for KinkDetector {
    fn default() -> Self {
        KinkDetector {
            step: 1e-3,
            threshold: None,
        }
    }
}

impl KinkDetector {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(10.0 * self.step)
    }

    /// `max_k |D^+_k f(x) - D^-_k f(x)|`, or `None` when a probe leaves the domain.
    pub fn jump(&self, f: &dyn ScalarFunction, x: &MatrixPoint) -> Option<f64> {
        let f0 = f.value(x)?;
        let h = self.step;
        let mut worst: f64 = 0.0;
        for k in 0..x.shape.dim() {
            let mut p = x.clone();
            let mut m = x.clone();
            p.coords_mut()[k] += h;
            m.coords_mut()[k] -= h;
            let forward = (f.value(&p)? - f0) / h;
            let backward = (f0 - f.value(&m)?) / h;
            worst = worst.max((forward - backward).abs());
        }
        Some(worst)
    }

    pub fn is_kink(&self, f: &dyn ScalarFunction, x: &MatrixPoint) -> bool {
        self.jump(f, x).is_none_or(|j| j > self.threshold())
    }

    /// Copy of `field` with kink nodes of `f` marked invalid.
    pub fn exclude(&self, f: &dyn ScalarFunction, field: &SampledField) -> Result<SampledField> {
        let grid = field.grid();
        let keep: Vec<bool> = (0..grid.len())
            .into_par_iter()
            .map(|k| field.is_valid(k) && !self.is_kink(f, &grid.node(k)))
            .collect();
        let values = field
            .values()
            .iter()
            .zip(&keep)
            .map(|(v, ok)| if *ok { *v } else { f64::NAN })
            .collect();
        SampledField::new(field.name(), grid.clone(), values, keep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TouchSet {
    pub a: f64,
    pub points: Vec<MatrixPoint>,
    pub thetas: Vec<f64>,
    /// Eval points with `theta <= A` rejected by the kink detector.
    pub excluded: Vec<MatrixPoint>,
    /// Eval points with `theta > A`.
    pub above: usize,
    pub detector: KinkDetector,
}

/// Eval points with `theta <= A` that the kink detector accepts.
pub fn touch_set(
    f: &dyn ScalarFunction,
    theta: &ThetaField,
    a: f64,
    detector: &KinkDetector,
) -> TouchSet {
    let mut set = TouchSet {
        a,
        points: Vec::new(),
        thetas: Vec::new(),
        excluded: Vec::new(),
        above: 0,
        detector: *detector,
    };
    let kinks: Vec<bool> = theta
        .touches
        .par_iter()
        .map(|t| detector.is_kink(f, &t.x0))
        .collect();
    for (t, kink) in theta.touches.iter().zip(kinks) {
        if t.opening > a {
            set.above += 1;
        } else if kink {
            set.excluded.push(t.x0.clone());
        } else {
            set.points.push(t.x0.clone());
            set.thetas.push(t.opening);
        }
    }
    set
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSampler {
    pub samples_per_point: usize,
    pub radius: f64,
    pub seed: u64,
    /// Central-difference step when no exact gradient is available.
    pub step: f64,
}

impl Default for ProbeSampler {
    fn default() -> Self {
        ProbeSampler {
            samples_per_point: 100,
            radius: 0.25,
            seed: 7,
            step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeTouchReport {
    pub per_point: Vec<f64>,
    pub max_ratio: f64,
    pub bound: f64,
    pub c_probe: f64,
    pub passed: bool,
    pub skipped: usize,
}

fn gradient_at(f: &dyn ScalarFunction, x: &MatrixPoint, step: f64) -> Option<MatrixPoint> {
    f.gradient(x).or_else(|| fd_gradient(f, x, step))
}

/// Per touch point, `max |Df(x) - Df(x0)| / |x - x0|` over samples `x` in `B_radius(x0)`.
pub fn cone_touch_check(
    f: &dyn ScalarFunction,
    touch: &TouchSet,
    c_probe: f64,
    sampler: &ProbeSampler,
) -> ConeTouchReport {
    let results: Vec<(f64, usize)> = touch
        .points
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed.wrapping_add(i as u64));
            let Some(g0) = gradient_at(f, x0, sampler.step) else {
                return (0.0, sampler.samples_per_point);
            };
            let mut worst: f64 = 0.0;
            let mut skipped = 0;
            for _ in 0..sampler.samples_per_point {
                let x = ball_point(&mut rng, x0, sampler.radius);
                let r = x.distance(x0);
                match gradient_at(f, &x, sampler.step) {
                    Some(g) if r > 0.0 => worst = worst.max(dual_norm(&(&g - &g0)) / r),
                    _ => skipped += 1,
                }
            }
            (worst, skipped)
        })
        .collect();
    let per_point: Vec<f64> = results.iter().map(|r| r.0).collect();
    let max_ratio = per_point.iter().cloned().fold(0.0, f64::max);
    let bound = c_probe * touch.a;
    ConeTouchReport {
        max_ratio,
        bound,
        c_probe,
        passed: max_ratio <= bound + 1e-12,
        skipped: results.iter().map(|r| r.1).sum(),
        per_point,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub global_order_violation: f64,
    /// `max (w^+ - w^-)` over touch-set points; `0` for an empty touch set.
    pub max_gap_on_touch_set: f64,
    pub touch_points: usize,
}

pub fn sandwich_check(pair: &ConeEnvelopePair, touch: &TouchSet) -> SandwichReport {
    let sources = Sources::of(&pair.source);
    let max_gap = touch
        .points
        .par_iter()
        .map(|x| {
            let (lo, hi) = sources.envelopes(x, pair.lipschitz);
            hi - lo
        })
        .reduce(|| 0.0, f64::max);
    SandwichReport {
        global_order_violation: pair.order_violation(),
        max_gap_on_touch_set: max_gap,
        touch_points: touch.points.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderOptions {
    /// Random unit directions per radius, on top of the coordinate axes.
    pub directions: usize,
    pub seed: u64,
    /// Step for differencing the gradient into `H`.
    pub step: f64,
    /// Central-difference step when no exact gradient is available.
    pub gradient_step: f64,
    pub threshold: f64,
    /// Radii below this are refused (grid resolution for sampled inputs).
    pub min_radius: Option<f64>,
    /// Gauss-Legendre nodes for the integral form of the remainder; `0` skips it.
    pub quadrature_points: usize,
}

impl Default for RemainderOptions {
    fn default() -> Self {
        RemainderOptions {
            directions: 64,
            seed: 7,
            step: 1e-4,
            gradient_step: 1e-6,
            threshold: 0.1,
            min_radius: None,
            quadrature_points: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderProfile {
    pub x0: MatrixPoint,
    /// Symmetrized coordinate Hessian, row major.
    pub hessian: Vec<f64>,
    /// `max |H - H^T| / 2` before symmetrizing.
    pub asymmetry: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Same ratios with the remainder computed from the integral of the gradient.
    pub integral_ratios: Option<Vec<f64>>,
    /// Log-log slope of ratio against radius, when every ratio is positive.
    pub slope: Option<f64>,
    pub threshold: f64,
    pub differentiable: bool,
}

impl RemainderProfile {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = (0..self.radii.len())
            .map(|i| {
                let mut row = vec![fmt_f64(self.radii[i]), fmt_f64(self.ratios[i])];
                if let Some(r) = &self.integral_ratios {
                    row.push(fmt_f64(r[i]));
                }
                row
            })
            .collect();
        if self.integral_ratios.is_some() {
            table_to_string(&["radius", "ratio", "integral_ratio"], &rows)
        } else {
            table_to_string(&["radius", "ratio"], &rows)
        }
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn quad_form(h: &[f64], z: &[f64]) -> f64 {
    let n = z.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += h[i * n + j] * z[i] * z[j];
        }
    }
    s
}

fn lin(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sup_{|z| = r} |f(x0 + z) - f(x0) - Df(x0) z - z.Hz / 2| / r^2` per radius.
pub fn second_order_remainder(
    f: &dyn ScalarFunction,
    x0: &MatrixPoint,
    radii: &[f64],
    options: &RemainderOptions,
) -> Result<RemainderProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::Precondition("radii must be positive and strictly decreasing".into()));
    }
    if let Some(min) = options.min_radius {
        if let Some(r) = radii.iter().find(|r| **r < min) {
            return Err(Error::Precondition(format!(
                "radius {r} is below the resolution {min}"
            )));
        }
    }
    let shape = x0.shape;
    let dim = shape.dim();
    let grad = |x: &MatrixPoint| {
        gradient_at(f, x, options.gradient_step)
            .ok_or_else(|| Error::Domain(format!("no gradient at {:?}", x.coords())))
    };
    let f0 = f
        .value(x0)
        .ok_or_else(|| Error::Domain(format!("{} undefined at {:?}", f.name(), x0.coords())))?;
    let g0 = grad(x0)?;

    let mut h = vec![0.0; dim * dim];
    for l in 0..dim {
        let mut p = x0.clone();
        let mut m = x0.clone();
        p.coords_mut()[l] += options.step;
        m.coords_mut()[l] -= options.step;
        let (gp, gm) = (grad(&p)?, grad(&m)?);
        for k in 0..dim {
            h[k * dim + l] = (gp.coords()[k] - gm.coords()[k]) / (2.0 * options.step);
        }
    }
    let mut asymmetry: f64 = 0.0;
    for k in 0..dim {
        for l in (k + 1)..dim {
            let (a, b) = (h[k * dim + l], h[l * dim + k]);
            asymmetry = asymmetry.max((a - b).abs() / 2.0);
            h[k * dim + l] = 0.5 * (a + b);
            h[l * dim + k] = 0.5 * (a + b);
        }
    }

    // unit directions in the Frobenius norm: coordinate axes, then random
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut dirs: Vec<MatrixPoint> = (0..dim)
        .map(|k| {
            let mut e = MatrixPoint::zeros(shape);
            e.coords_mut()[k] = 1.0;
            let n = e.norm();
            &e * (1.0 / n)
        })
        .collect();
    for _ in 0..options.directions {
        let v = MatrixPoint::from_coords(shape, unit_vector(&mut rng, dim))?;
        let n = v.norm();
        dirs.push(&v * (1.0 / n));
    }

    let (qn, qw) = gauss_legendre(options.quadrature_points);
    let mut ratios = Vec::with_capacity(radii.len());
    let mut integral = (options.quadrature_points > 0).then(Vec::new);
    for &r in radii {
        let mut worst: f64 = 0.0;
        let mut worst_int: f64 = 0.0;
        for u in &dirs {
            let z = u * r;
            let zc = z.coords();
            let fx = f.value(&(x0 + &z)).ok_or_else(|| {
                Error::Domain(format!("{} undefined at radius {r} from x0", f.name()))
            })?;
            let quad = 0.5 * quad_form(&h, zc);
            let rem = fx - f0 - lin(g0.coords(), zc) - quad;
            worst = worst.max(rem.abs() / (r * r));
            if integral.is_some() {
                let mut acc = 0.0;
                for (s, w) in qn.iter().zip(&qw) {
                    let g = grad(&x0.offset(&z, *s))?;
                    acc += w * lin(&(&g - &g0).into_coords(), zc);
                }
                worst_int = worst_int.max((acc - quad).abs() / (r * r));
            }
        }
        ratios.push(worst);
        if let Some(v) = integral.as_mut() {
            v.push(worst_int);
        }
    }
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite {
            location: x0.coords().to_vec(),
            value: f64::NAN,
        });
    }
    let slope = ratios
        .iter()
        .all(|r| *r > 0.0)
        .then(|| fit_log_log(radii, &ratios).map(|f| f.slope))
        .flatten();
    let non_increasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let differentiable = non_increasing && ratios[ratios.len() - 1] <= options.threshold;
    Ok(RemainderProfile {
        x0: x0.clone(),
        hessian: h,
        asymmetry,
        radii: radii.to_vec(),
        ratios,
        integral_ratios: integral,
        slope,
        threshold: options.threshold,
        differentiable,
    })
}

/// Remainder profile of a sampled field: `H` from its gradient fields at grid scale and
/// radii no smaller than the grid spacing.
pub fn second_order_remainder_sampled(
    field: &SampledField,
    x0: &MatrixPoint,
    radii: &[f64],
    options: &RemainderOptions,
) -> Result<RemainderProfile> {
    let h = field.grid().spacing();
    let opts = RemainderOptions {
        step: h,
        gradient_step: h,
        min_radius: Some(h),
        ..*options
    };
    second_order_remainder(field, x0, radii, &opts)
}

/// `r_k = r0 / 2^k` for `k < count`.
pub fn halving_radii(r0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r0 / 2f64.powi(k as i32)).collect()
}
