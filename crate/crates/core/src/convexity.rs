//! Definitional checks: midpoint convexity along rank-one and coordinate segments, the
//! local Lipschitz bound, discrete subharmonicity, the symmetric-space operator `L`, and
//! mollification.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    Grid, GridSpec, MatrixPoint, MatrixShape, RankOneDirection, SampledField, ScalarFunction,
};
use crate::stats::{ball_point, unit_vector};

/// Sampling parameters for segment checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSampler {
    /// Random directions drawn in addition to the coordinate set.
    pub direction_count: usize,
    /// Step sizes per (base, direction): `t_k = k / (steps + 1)` of the admissible range.
    pub step_count: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SegmentSampler {
    fn default() -> Self {
        SegmentSampler {
            direction_count: 8,
            step_count: 4,
            seed: 7,
            tolerance: 1e-9,
        }
    }
}

/// One segment `[x - t D, x + t D]` with `D` rank one and `|t| |D| < dist(x, boundary)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSample {
    pub base: MatrixPoint,
    pub direction: RankOneDirection,
    pub t: f64,
}

impl SegmentSample {
    /// `f(x) - f(x + tD)/2 - f(x - tD)/2`; positive values contradict midpoint convexity.
    pub fn defect(&self, f: &dyn ScalarFunction) -> Option<f64> {
        let d = self.direction.matrix(self.base.shape);
        let f0 = f.value(&self.base)?;
        let fp = f.value(&self.base.offset(&d, self.t))?;
        let fm = f.value(&self.base.offset(&d, -self.t))?;
        Some(f0 - 0.5 * fp - 0.5 * fm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub operation: String,
    pub function: String,
    /// `max(0, max defect)` over checked samples.
    pub worst_violation: f64,
    /// Segment with the largest positive defect; `None` when no defect is positive.
    pub witness: Option<SegmentSample>,
    pub samples_checked: usize,
    /// Segments that would leave the domain or the interpolable region.
    pub samples_skipped: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: bool,
}

fn random_directions(shape: MatrixShape, count: usize, seed: u64) -> Vec<RankOneDirection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = unit_vector(&mut rng, shape.rows);
            let b = if shape.symmetric {
                a.clone()
            } else {
                unit_vector(&mut rng, shape.cols)
            };
            RankOneDirection::Outer { a, b }
        })
        .collect()
}

fn separate_directions(shape: MatrixShape) -> Vec<RankOneDirection> {
    if shape.symmetric {
        (0..shape.rows)
            .map(|i| RankOneDirection::SymmetricPair { i, j: i })
            .collect()
    } else {
        RankOneDirection::coordinate_set(shape)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    defect: f64,
    index: (usize, usize, usize),
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if a.defect > b.defect || (a.defect == b.defect && a.index < b.index) {
                Some(a)
            } else {
                Some(b)
            }
        }
    }
}

fn segment_check(
    operation: &str,
    f: &dyn ScalarFunction,
    domain: &GridSpec,
    directions: &[RankOneDirection],
    sampler: &SegmentSampler,
) -> Result<ConvexityReport> {
    if sampler.step_count == 0 {
        return Err(Error::Precondition("step_count must be at least 1".into()));
    }
    let grid = Grid::new(domain.clone())?;
    let shape = domain.center.shape;
    let mats: Vec<MatrixPoint> = directions.iter().map(|d| d.matrix(shape)).collect();
    let scales: Vec<f64> = directions.iter().map(|d| d.scale()).collect();
    let bases: Vec<usize> = grid.valid_nodes().collect();
    let steps = sampler.step_count;

    // (best candidate, checked, skipped) per base node, reduced deterministically
    let per_base: Vec<(Option<Candidate>, usize, usize)> = bases
        .par_iter()
        .enumerate()
        .map(|(bi, &k)| {
            let x = grid.node(k);
            let dist = grid.distance_to_boundary(&x);
            let mut best = None;
            let (mut checked, mut skipped) = (0, 0);
            let Some(f0) = f.value(&x) else {
                return (None, 0, directions.len() * steps);
            };
            for (di, (d, s)) in mats.iter().zip(&scales).enumerate() {
                for step in 1..=steps {
                    if dist <= 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let t = dist / s * step as f64 / (steps + 1) as f64;
                    match (f.value(&x.offset(d, t)), f.value(&x.offset(d, -t))) {
                        (Some(fp), Some(fm)) => {
                            checked += 1;
                            let defect = f0 - 0.5 * fp - 0.5 * fm;
                            best = better(
                                best,
                                Some(Candidate {
                                    defect,
                                    index: (bi, di, step),
                                }),
                            );
                        }
                        _ => skipped += 1,
                    }
                }
            }
            (best, checked, skipped)
        })
        .collect();

    let mut best = None;
    let (mut checked, mut skipped) = (0, 0);
    for (b, c, s) in per_base {
        best = better(best, b);
        checked += c;
        skipped += s;
    }
    let witness = best.filter(|c| c.defect > 0.0).map(|c| {
        let (bi, di, step) = c.index;
        let x = grid.node(bases[bi]);
        let dist = grid.distance_to_boundary(&x);
        SegmentSample {
            base: x,
            direction: directions[di].clone(),
            t: dist / scales[di] * step as f64 / (steps + 1) as f64,
        }
    });
    let worst = best.map_or(0.0, |c| c.defect.max(0.0));
    Ok(ConvexityReport {
        operation: operation.into(),
        function: f.name().into(),
        worst_violation: worst,
        witness,
        samples_checked: checked,
        samples_skipped: skipped,
        seed: sampler.seed,
        tolerance: sampler.tolerance,
        passed: worst <= sampler.tolerance,
    })
}

/// Midpoint convexity along the coordinate rank-one set plus `direction_count` random
/// directions `a (x) b` with unit factors, from every valid node of `domain`.
pub fn rank_one_convexity_check(
    f: &dyn ScalarFunction,
    domain: &GridSpec,
    sampler: &SegmentSampler,
) -> Result<ConvexityReport> {
    let shape = domain.center.shape;
    let mut dirs = RankOneDirection::coordinate_set(shape);
    dirs.extend(random_directions(shape, sampler.direction_count, sampler.seed));
    segment_check("rank_one_convexity", f, domain, &dirs, sampler)
}

/// Midpoint convexity along coordinate axes only (`e_i (x) e_j`, or `r_ii` on symmetric shapes).
pub fn separate_convexity_check(
    f: &dyn ScalarFunction,
    domain: &GridSpec,
    sampler: &SegmentSampler,
) -> Result<ConvexityReport> {
    let dirs = separate_directions(domain.center.shape);
    segment_check("separate_convexity", f, domain, &dirs, sampler)
}

/// Midpoint check along arbitrary directions, used to exhibit gaps between notions.
pub fn directional_convexity_check(
    f: &dyn ScalarFunction,
    domain: &GridSpec,
    directions: &[RankOneDirection],
    sampler: &SegmentSampler,
) -> Result<ConvexityReport> {
    segment_check("directional_convexity", f, domain, directions, sampler)
}

/// Tolerance for segment checks on an interpolated field: the multilinear defect bound.
pub fn field_tolerance(field: &SampledField) -> f64 {
    field.interpolation_tolerance() + 1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    pub pairs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for PairSampler {
    fn default() -> Self {
        PairSampler {
            pairs: 10_000,
            seed: 7,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub center: MatrixPoint,
    pub radius: f64,
    /// Largest sampled difference quotient over pairs in `B_r(x)`.
    pub lip_lhs: f64,
    /// `n osc(f, B_2r(x)) / r` from samples.
    pub osc_rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub pairs: usize,
}

/// Sampled form of `Lip(f, B_r(x)) <= n osc(f, B_2r(x)) / r`, with `n` the column count.
pub fn lipschitz_estimate_check(
    f: &dyn ScalarFunction,
    domain: &GridSpec,
    x: &MatrixPoint,
    r: f64,
    sampler: &PairSampler,
) -> Result<LipschitzReport> {
    let grid = Grid::new(domain.clone())?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let room = grid.distance_to_boundary(x);
    if room < 2.0 * r {
        return Err(Error::Domain(format!(
            "B_{{2r}}(x) with r = {r} leaves the domain (distance to boundary {room})"
        )));
    }
    let eval = |p: &MatrixPoint| {
        f.value(p)
            .ok_or_else(|| Error::Domain(format!("{} undefined at {:?}", f.name(), p.coords())))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut lip: f64 = 0.0;
    for _ in 0..sampler.pairs {
        let p = ball_point(&mut rng, x, r);
        let q = ball_point(&mut rng, x, r);
        let d = p.distance(&q);
        if d > 0.0 {
            lip = lip.max((eval(&p)? - eval(&q)?).abs() / d);
        }
    }
    let f0 = eval(x)?;
    let (mut lo, mut hi) = (f0, f0);
    for _ in 0..sampler.pairs {
        let v = eval(&ball_point(&mut rng, x, 2.0 * r))?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let n = x.shape.cols as f64;
    let osc_rhs = n * (hi - lo) / r;
    let ratio = if osc_rhs > 0.0 {
        lip / osc_rhs
    } else if lip == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LipschitzReport {
        center: x.clone(),
        radius: r,
        lip_lhs: lip,
        osc_rhs,
        ratio,
        holds: lip <= osc_rhs + sampler.tolerance,
        pairs: sampler.pairs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilReport {
    pub operation: String,
    pub min_value: f64,
    pub witness_node: usize,
    pub witness: MatrixPoint,
    pub interior_nodes: usize,
}

/// Integer coordinate offsets of a stencil direction on the grid.
fn stencil_min(
    operation: &str,
    field: &SampledField,
    offsets: &[Vec<isize>],
) -> Result<StencilReport> {
    let grid = field.grid();
    let h = grid.spacing();
    let results: Vec<Option<(f64, usize)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let f0 = field.value_at(k)?;
            let mut total = 0.0;
            for off in offsets {
                let neg: Vec<isize> = off.iter().map(|o| -o).collect();
                let fp = grid.shifted(k, off).and_then(|n| field.value_at(n))?;
                let fm = grid.shifted(k, &neg).and_then(|n| field.value_at(n))?;
                total += (fp + fm - 2.0 * f0) / (h * h);
            }
            Some((total, k))
        })
        .collect();
    let interior = results.iter().flatten().count();
    let best = results
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, usize)>, (v, k)| match acc {
            Some((bv, bk)) if bv < v || (bv == v && bk < k) => Some((bv, bk)),
            _ => Some((v, k)),
        })
        .ok_or_else(|| Error::Empty(format!("{operation}: no interior nodes")))?;
    Ok(StencilReport {
        operation: operation.into(),
        min_value: best.0,
        witness_node: best.1,
        witness: grid.node(best.1),
        interior_nodes: interior,
    })
}

/// Minimum over interior nodes of the discrete Laplacian in the coordinate directions.
pub fn viscosity_subharmonic_check(field: &SampledField) -> Result<StencilReport> {
    let dim = field.grid().dim();
    let offsets: Vec<Vec<isize>> = (0..dim)
        .map(|d| (0..dim).map(|e| (e == d) as isize).collect())
        .collect();
    stencil_min("viscosity_subharmonic", field, &offsets)
}

/// The coefficient tensor `a = sum_{i,j} r_ij (x) r_ij` over ordered pairs, indexed by
/// dense matrix entries `(k, l) -> k n + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    n: usize,
    coefficients: DMatrix<f64>,
}

/// Dense entries of `r_ij`.
pub fn symmetric_direction(n: usize, i: usize, j: usize) -> Vec<f64> {
    let shape = MatrixShape::symmetric(n).expect("n >= 1");
    RankOneDirection::SymmetricPair { i, j }.matrix(shape).to_dense()
}

impl SymmetricOperator {
    pub fn assemble(n: usize) -> Result<Self> {
        MatrixShape::symmetric(n)?;
        let size = n * n;
        let mut a = DMatrix::zeros(size, size);
        for i in 0..n {
            for j in 0..n {
                let r = symmetric_direction(n, i, j);
                for p in 0..size {
                    for q in 0..size {
                        a[(p, q)] += r[p] * r[q];
                    }
                }
            }
        }
        Ok(SymmetricOperator { n, coefficients: a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `a^{(kl)(mn)}`, zero based.
    pub fn coefficient(&self, k: usize, l: usize, m: usize, n: usize) -> f64 {
        self.coefficients[(k * self.n + l, m * self.n + n)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn is_symmetric(&self) -> bool {
        self.coefficients == self.coefficients.transpose()
    }

    /// Smallest eigenvalue of the coefficient tensor seen as a quadratic form on matrices.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.coefficients.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Contraction `sum a^{(kl)(mn)} H_{(kl)(mn)}` with a dense second-derivative tensor.
    pub fn contract(&self, hessian: &DMatrix<f64>) -> f64 {
        self.coefficients.component_mul(hessian).sum()
    }
}

/// Largest entrywise residual of `r_ij - r_ii - r_jj = 2 sym(e_i (x) e_j)` over `i < j`.
pub fn basis_identity_residual(n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let rij = symmetric_direction(n, i, j);
            let rii = symmetric_direction(n, i, i);
            let rjj = symmetric_direction(n, j, j);
            for p in 0..n * n {
                let (r, c) = (p / n, p % n);
                let two_sym = ((r == i && c == j) || (r == j && c == i)) as u8 as f64;
                worst = worst.max((rij[p] - rii[p] - rjj[p] - two_sym).abs());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub stencil: StencilReport,
    pub identity_residual: f64,
}

/// Minimum over interior nodes of `L f = sum_{i,j} d^2 f / d r_ij^2` by second differences.
pub fn symmetric_operator_check(field: &SampledField) -> Result<OperatorReport> {
    let shape = field.grid().spec().center.shape;
    if !shape.symmetric {
        return Err(Error::Shape(
            "the symmetric operator needs a symmetric shape".into(),
        ));
    }
    let n = shape.rows;
    let mut offsets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut off = vec![0isize; shape.dim()];
            off[shape.coord_index(i, i)] = 1;
            off[shape.coord_index(j, j)] = 1;
            off[shape.coord_index(i, j)] = 1;
            offsets.push(off);
        }
    }
    Ok(OperatorReport {
        stencil: stencil_min("symmetric_operator", field, &offsets)?,
        identity_residual: basis_identity_residual(n),
    })
}

/// Normalized product hat kernel of half-width `kernel_radius` nodes. Output nodes whose
/// kernel support is not fully valid are dropped.
pub fn mollify(field: &SampledField, kernel_radius: usize) -> Result<SampledField> {
    if kernel_radius == 0 {
        return Err(Error::Precondition("kernel radius must be at least 1".into()));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let r = kernel_radius as isize;
    let weights_1d: Vec<f64> = (-r..=r).map(|k| (r + 1 - k.abs()) as f64).collect();
    let norm: f64 = weights_1d.iter().sum();
    let weights_1d: Vec<f64> = weights_1d.iter().map(|w| w / norm).collect();
    let width = (2 * r + 1) as usize;
    let support = width.pow(dim as u32);
    let stencil: Vec<(Vec<isize>, f64)> = (0..support)
        .map(|s| {
            let mut rem = s;
            let mut off = vec![0isize; dim];
            let mut w = 1.0;
            for d in (0..dim).rev() {
                let i = rem % width;
                rem /= width;
                off[d] = i as isize - r;
                w *= weights_1d[i];
            }
            (off, w)
        })
        .collect();

    let out: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            field.value_at(k)?;
            let mut acc = 0.0;
            for (off, w) in &stencil {
                acc += w * grid.shifted(k, off).and_then(|n| field.value_at(n))?;
            }
            Some(acc)
        })
        .collect();
    let valid: Vec<bool> = out.iter().map(|v| v.is_some()).collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::Empty(format!(
            "mollification with radius {kernel_radius} leaves no valid nodes"
        )));
    }
    let values = out.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    SampledField::new(
        format!("mollified({})", field.name()),
        grid.clone(),
        values,
        valid,
    )
}
