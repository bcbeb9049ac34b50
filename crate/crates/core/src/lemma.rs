//! Lower bounds `f >= -C G` for rank-one convex functions touched from above by a radial
//! majorant, via the column splitting `x_i = (x_i+1 + y_i+1) / 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{fd_gradient, MatrixPoint, ScalarFunction};
use crate::paraboloid::ParaboloidTouch;
use crate::stats::ball_point;

/// Which rank-one (or coordinate) decomposition drives the induction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Column,
    /// Experimental: one coordinate at a time, for separately convex functions.
    Coordinate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSplit {
    pub kind: SplitKind,
    pub x: MatrixPoint,
    /// `partials[i - 1] = x_i`.
    pub partials: Vec<MatrixPoint>,
    /// `pieces[i - 1] = d_i`, the `i`-th column (or coordinate) as a matrix.
    pub pieces: Vec<MatrixPoint>,
    /// `reflections[i - 1] = y_i = x_i - 2 d_i`.
    pub reflections: Vec<MatrixPoint>,
}

impl ColumnSplit {
    pub fn len(&self) -> usize {
        self.partials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }

    /// Largest entrywise `|x_i - (x_i+1 + y_i+1) / 2|`.
    pub fn midpoint_residual(&self) -> f64 {
        (0..self.len().saturating_sub(1))
            .map(|i| {
                let mid = &(&self.partials[i + 1] + &self.reflections[i + 1]) * 0.5;
                self.partials[i].max_abs_diff(&mid)
            })
            .fold(0.0, f64::max)
    }
}

fn split_from(kind: SplitKind, x: &MatrixPoint, groups: Vec<Vec<usize>>) -> ColumnSplit {
    let mut partials = Vec::with_capacity(groups.len());
    let mut pieces = Vec::with_capacity(groups.len());
    let mut reflections = Vec::with_capacity(groups.len());
    let mut acc = MatrixPoint::zeros(x.shape);
    for group in groups {
        let mut d = MatrixPoint::zeros(x.shape);
        for k in group {
            d.coords_mut()[k] = x.coords()[k];
            acc.coords_mut()[k] = x.coords()[k];
        }
        reflections.push(&acc - &(&d * 2.0));
        partials.push(acc.clone());
        pieces.push(d);
    }
    ColumnSplit {
        kind,
        x: x.clone(),
        partials,
        pieces,
        reflections,
    }
}

/// `x_i` = first `i` columns of `x`, `d_i = x_.i (x) e_i`, `y_i = x_i - 2 d_i`.
pub fn column_split(x: &MatrixPoint) -> Result<ColumnSplit> {
    let shape = x.shape;
    if shape.symmetric {
        return Err(Error::Shape(
            "column splitting needs a general (non-symmetric) shape".into(),
        ));
    }
    let groups = (0..shape.cols)
        .map(|j| (0..shape.rows).map(|i| shape.coord_index(i, j)).collect())
        .collect();
    Ok(split_from(SplitKind::Column, x, groups))
}

/// Coordinate-by-coordinate analogue of [`column_split`].
pub fn coordinate_split(x: &MatrixPoint) -> ColumnSplit {
    let groups = (0..x.shape.dim()).map(|k| vec![k]).collect();
    split_from(SplitKind::Coordinate, x, groups)
}

fn split(kind: SplitKind, x: &MatrixPoint) -> Result<ColumnSplit> {
    match kind {
        SplitKind::Column => column_split(x),
        SplitKind::Coordinate => Ok(coordinate_split(x)),
    }
}

/// `C(n) = 2^(n-1) - 1`, from `f(x_1) >= 0` and `2 f(x_i) <= f(x_i+1) + G(x)`.
pub fn lemma_constant(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("need at least one column".into()));
    }
    Ok(2f64.powi(n as i32 - 1) - 1.0)
}

/// Number of induction steps for a split kind on the given shape.
pub fn split_length(kind: SplitKind, x0: &MatrixPoint) -> usize {
    match kind {
        SplitKind::Column => x0.shape.cols,
        SplitKind::Coordinate => x0.shape.dim(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    /// Non-decreasing table, linearly interpolated, constant past the last radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
    /// `g(t) = a t^2 / 2`.
    Quadratic { a: f64 },
}

/// `G(x) = g(|x - x0|)` with `g` non-decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMajorant {
    pub x0: MatrixPoint,
    pub profile: Profile,
}

impl RadialMajorant {
    pub fn from_table(x0: MatrixPoint, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::Precondition("majorant table needs matching, nonempty columns".into()));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("majorant radii must be strictly increasing from >= 0".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Precondition(format!(
                "majorant decreases between radii {} and {}",
                radii[i],
                radii[i + 1]
            )));
        }
        Ok(RadialMajorant {
            x0,
            profile: Profile::Table { radii, values },
        })
    }

    pub fn quadratic(x0: MatrixPoint, a: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::Precondition(format!("opening must be nonnegative, got {a}")));
        }
        Ok(RadialMajorant {
            x0,
            profile: Profile::Quadratic { a },
        })
    }

    /// Running maximum of the recentered function over the seeded samples and all their
    /// split points, so that `G >= f~` at every point the induction visits.
    pub fn empirical(
        f: &dyn ScalarFunction,
        x0: &MatrixPoint,
        sampler: &LemmaSampler,
        kind: SplitKind,
    ) -> Result<Self> {
        let rc = Recentered::new(f, x0, sampler.gradient_step)?;
        let samples = sampler.points(x0);
        let mut pairs: Vec<(f64, f64)> = samples
            .par_iter()
            .map(|z| -> Result<Vec<(f64, f64)>> {
                let s = split(kind, z)?;
                let mut out = vec![(z.norm(), rc.eval(z)?)];
                for p in s.partials.iter().chain(&s.reflections) {
                    out.push((p.norm(), rc.eval(p)?));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        pairs.push((0.0, 0.0));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut radii: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut running = f64::NEG_INFINITY;
        for (r, v) in pairs {
            running = running.max(v);
            if radii.last() == Some(&r) {
                *values.last_mut().expect("parallel to radii") = running;
            } else {
                radii.push(r);
                values.push(running);
            }
        }
        RadialMajorant::from_table(x0.clone(), radii, values)
    }

    pub fn g(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::Quadratic { a } => 0.5 * a * t * t,
            Profile::Table { radii, values } => {
                let i = radii.partition_point(|r| *r <= t);
                if i == 0 {
                    values[0]
                } else if i == radii.len() {
                    values[i - 1]
                } else {
                    let (r0, r1) = (radii[i - 1], radii[i]);
                    let (v0, v1) = (values[i - 1], values[i]);
                    v0 + (v1 - v0) * (t - r0) / (r1 - r0)
                }
            }
        }
    }

    /// `G` at the recentered offset `z = x - x0`.
    pub fn at_offset(&self, z: &MatrixPoint) -> f64 {
        self.g(z.norm())
    }

    pub fn eval(&self, x: &MatrixPoint) -> f64 {
        self.g(x.distance(&self.x0))
    }

    /// `(radius, g)` pairs; quadratics are tabulated on `[0, 1]`.
    pub fn table(&self) -> Vec<(f64, f64)> {
        match &self.profile {
            Profile::Table { radii, values } => radii.iter().cloned().zip(values.iter().cloned()).collect(),
            Profile::Quadratic { .. } => (0..=32).map(|k| k as f64 / 32.0).map(|t| (t, self.g(t))).collect(),
        }
    }

    pub fn is_monotone(&self) -> bool {
        match &self.profile {
            Profile::Quadratic { a } => *a >= 0.0,
            Profile::Table { values, .. } => values.windows(2).all(|w| w[1] >= w[0]),
        }
    }

    /// Profile plus `extra t^2`, still non-decreasing.
    pub fn enlarged(&self, extra: f64) -> RadialMajorant {
        let profile = match &self.profile {
            Profile::Quadratic { a } => Profile::Quadratic { a: a + extra },
            Profile::Table { radii, values } => Profile::Table {
                radii: radii.clone(),
                values: values.iter().zip(radii).map(|(v, r)| v + extra * r * r).collect(),
            },
        };
        RadialMajorant {
            x0: self.x0.clone(),
            profile,
        }
    }
}

/// `f~(z) = f(x0 + z) - f(x0) - Df(x0) z`.
struct Recentered<'a> {
    f: &'a dyn ScalarFunction,
    x0: MatrixPoint,
    f0: f64,
    g0: MatrixPoint,
}

impl<'a> Recentered<'a> {
    fn new(f: &'a dyn ScalarFunction, x0: &MatrixPoint, step: f64) -> Result<Self> {
        let f0 = f
            .value(x0)
            .ok_or_else(|| Error::Domain(format!("{} undefined at {:?}", f.name(), x0.coords())))?;
        let g0 = f
            .gradient(x0)
            .or_else(|| fd_gradient(f, x0, step))
            .ok_or_else(|| Error::Domain(format!("no gradient of {} at x0", f.name())))?;
        Ok(Recentered {
            f,
            x0: x0.clone(),
            f0,
            g0,
        })
    }

    fn eval(&self, z: &MatrixPoint) -> Result<f64> {
        let v = self.f.value(&(&self.x0 + z)).ok_or_else(|| {
            Error::Domain(format!("{} undefined at offset {:?}", self.f.name(), z.coords()))
        })?;
        Ok(v - self.f0 - self.g0.dot(z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSampler {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
    /// Tangency tolerance `f~ <= G + tol`.
    pub tolerance: f64,
    pub gradient_step: f64,
}

impl Default for LemmaSampler {
    fn default() -> Self {
        LemmaSampler {
            count: 10_000,
            radius: 1.0,
            seed: 7,
            tolerance: 1e-9,
            gradient_step: 1e-6,
        }
    }
}

impl LemmaSampler {
    /// Seeded offsets `z`, uniform in `B_radius(0)`.
    pub fn points(&self, x0: &MatrixPoint) -> Vec<MatrixPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let origin = MatrixPoint::zeros(x0.shape);
        (0..self.count)
            .map(|_| ball_point(&mut rng, &origin, self.radius))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCertificate {
    pub function: String,
    pub x0: MatrixPoint,
    pub split: SplitKind,
    pub n: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub g_table: Vec<(f64, f64)>,
    /// `min f~(z) + C G(z)` over samples.
    pub min_slack: f64,
    /// Sample point `x0 + z` attaining `min_slack`.
    pub witness: MatrixPoint,
    pub samples: usize,
    pub seed: u64,
    pub tangency_tolerance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Certifies `f~ >= -C G` on seeded ball samples after checking `f~ <= G` on the same
/// samples. `constant` defaults to `C(n)` for the split kind.
pub fn lower_bound_certify(
    f: &dyn ScalarFunction,
    majorant: &RadialMajorant,
    sampler: &LemmaSampler,
    kind: SplitKind,
    constant: Option<f64>,
    tolerance: f64,
) -> Result<LemmaCertificate> {
    let x0 = &majorant.x0;
    if !majorant.is_monotone() {
        return Err(Error::Precondition("majorant profile is not non-decreasing".into()));
    }
    if kind == SplitKind::Column && x0.shape.symmetric {
        return Err(Error::Shape("column splitting needs a general shape".into()));
    }
    let n = split_length(kind, x0);
    let c = match constant {
        Some(c) => c,
        None => lemma_constant(n)?,
    };
    let rc = Recentered::new(f, x0, sampler.gradient_step)?;
    let samples = sampler.points(x0);
    let evaluated = samples
        .par_iter()
        .map(|z| Ok((rc.eval(z)?, majorant.at_offset(z))))
        .collect::<Result<Vec<(f64, f64)>>>()?;

    if let Some((i, (fz, gz))) = evaluated
        .iter()
        .enumerate()
        .find(|(_, (fz, gz))| fz > &(gz + sampler.tolerance))
    {
        return Err(Error::Precondition(format!(
            "tangency fails at sample {i} (x = {:?}): f~ = {fz} > G = {gz}",
            (x0 + &samples[i]).coords()
        )));
    }
    let (arg, min_slack) = evaluated
        .iter()
        .map(|(fz, gz)| fz + c * gz)
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    Ok(LemmaCertificate {
        function: f.name().into(),
        x0: x0.clone(),
        split: kind,
        n,
        c,
        g_table: majorant.table(),
        min_slack,
        witness: x0 + &samples[arg],
        samples: samples.len(),
        seed: sampler.seed,
        tangency_tolerance: sampler.tolerance,
        tolerance,
        passed: min_slack >= -tolerance,
    })
}

/// `g(t) = A t^2 / 2` from a converged touch with opening at most `A`.
pub fn majorant_from_theta(touch: Option<&ParaboloidTouch>, a: f64) -> Result<RadialMajorant> {
    let touch = touch.ok_or_else(|| Error::Precondition("no theta certificate supplied".into()))?;
    if !touch.converged {
        return Err(Error::Precondition("theta certificate did not converge".into()));
    }
    if touch.opening > a {
        return Err(Error::Precondition(format!(
            "theta {} exceeds A = {a}",
            touch.opening
        )));
    }
    RadialMajorant::quadratic(touch.x0.clone(), a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub radius: f64,
    /// Sampled `sup |f~|` on `B_r(x0)`.
    pub sup: f64,
    /// `C A r^2`.
    pub bound: f64,
    pub holds: bool,
}

/// Sampled check of `sup_{B_r(x0)} |f~| <= C A r^2` per radius.
pub fn quadratic_growth_check(
    f: &dyn ScalarFunction,
    x0: &MatrixPoint,
    a: f64,
    c: f64,
    radii: &[f64],
    sampler: &LemmaSampler,
) -> Result<Vec<GrowthRow>> {
    let rc = Recentered::new(f, x0, sampler.gradient_step)?;
    radii
        .iter()
        .map(|&r| {
            let s = LemmaSampler { radius: r, ..*sampler };
            let sup = s
                .points(x0)
                .par_iter()
                .map(|z| rc.eval(z).map(f64::abs))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let bound = c * a * r * r;
            Ok(GrowthRow {
                radius: r,
                sup,
                bound,
                holds: sup <= bound + sampler.tolerance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{corpus, find, MatrixShape};
    use crate::paraboloid::{theta_upper_on, SolverOptions};
    use crate::matrix::{Clip, GridSpec};
    use proptest::prelude::*;

    fn m22() -> MatrixShape {
        MatrixShape::new(2, 2).unwrap()
    }

    fn dense(v: [f64; 4]) -> MatrixPoint {
        MatrixPoint::from_dense(m22(), &v).unwrap()
    }

    fn small(count: usize) -> LemmaSampler {
        LemmaSampler { count, ..LemmaSampler::default() }
    }

    #[test]
    fn split_of_a_two_by_two() {
        let s = column_split(&dense([1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(s.partials[0], dense([1.0, 0.0, 3.0, 0.0]));
        assert_eq!(s.pieces[1], dense([0.0, 2.0, 0.0, 4.0]));
        assert_eq!(s.reflections[1], dense([1.0, -2.0, 3.0, -4.0]));
        assert_eq!(s.partials[1], s.x);
        assert_eq!(s.midpoint_residual(), 0.0);

        let col = dense([1.0, 0.0, 3.0, 0.0]);
        assert_eq!(column_split(&col).unwrap().partials[0], col);
        let z = column_split(&MatrixPoint::zeros(m22())).unwrap();
        assert!(z.partials.iter().chain(&z.pieces).chain(&z.reflections).all(|p| p.norm() == 0.0));
        assert!(column_split(&MatrixPoint::zeros(MatrixShape::symmetric(2).unwrap())).is_err());
    }

    #[test]
    fn constants() {
        assert_eq!(lemma_constant(1).unwrap(), 0.0);
        assert_eq!(lemma_constant(2).unwrap(), 1.0);
        assert_eq!(lemma_constant(4).unwrap(), 7.0);
        assert!(lemma_constant(0).is_err());
        // unrolling 2 a_i <= a_{i+1} + 1 from a_1 >= 0
        let mut a = 0.0;
        for n in 2..=6 {
            a = 2.0 * a - 1.0;
            assert_eq!(-a, lemma_constant(n).unwrap());
        }
    }

    #[test]
    fn quadratic_is_its_own_majorant() {
        let f = find("half_norm_sq").unwrap();
        let x0 = dense([0.1, 0.0, -0.2, 0.3]);
        let g = RadialMajorant::quadratic(x0.clone(), 1.0).unwrap();
        let cert = lower_bound_certify(&f, &g, &small(2000), SplitKind::Column, None, 1e-6).unwrap();
        assert!(cert.passed);
        assert!(cert.min_slack > 0.0);
        // slack = (1 + C) |z|^2 / 2, minimized at the sample closest to x0
        let zmin = cert.witness.distance(&x0);
        assert!((cert.min_slack - zmin * zmin).abs() < 1e-12);
    }

    #[test]
    fn rank_one_convex_corpus_certifies() {
        for f in corpus().into_iter().filter(|f| f.flags.rank_one_convex && f.accepts(m22())) {
            let x0 = dense([0.13, -0.07, 0.05, 0.21]);
            let s = small(3000);
            let g = RadialMajorant::empirical(&f, &x0, &s, SplitKind::Column).unwrap();
            let cert = lower_bound_certify(&f, &g, &s, SplitKind::Column, None, 1e-6).unwrap();
            assert!(cert.passed, "{}: {}", f.name(), cert.min_slack);
        }
    }

    #[test]
    fn negative_controls_fail() {
        let f = find("neg_half_norm_sq").unwrap();
        let x0 = MatrixPoint::zeros(m22());
        let quarter = RadialMajorant::quadratic(x0.clone(), 0.5).unwrap();
        let cert = lower_bound_certify(&f, &quarter, &small(2000), SplitKind::Column, None, 1e-6).unwrap();
        assert!(!cert.passed);
        let s = small(2000);
        let emp = RadialMajorant::empirical(&f, &x0, &s, SplitKind::Column).unwrap();
        assert!(emp.table().iter().all(|(_, v)| *v == 0.0));
        assert!(!lower_bound_certify(&f, &emp, &s, SplitKind::Column, None, 1e-6).unwrap().passed);
    }

    #[test]
    fn tangency_failure_is_refused() {
        let f = find("half_norm_sq").unwrap();
        let g = RadialMajorant::quadratic(MatrixPoint::zeros(m22()), 0.5).unwrap();
        let err = lower_bound_certify(&f, &g, &small(100), SplitKind::Column, None, 1e-6).unwrap_err();
        assert!(err.to_string().contains("tangency"));
        assert!(RadialMajorant::from_table(MatrixPoint::zeros(m22()), vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn coordinate_split_for_separately_convex() {
        let f = find("neg_uv").unwrap();
        let shape = MatrixShape::new(1, 2).unwrap();
        let x0 = MatrixPoint::from_coords(shape, vec![0.1, 0.2]).unwrap();
        let s = small(2000);
        let g = RadialMajorant::empirical(&f, &x0, &s, SplitKind::Coordinate).unwrap();
        let cert = lower_bound_certify(&f, &g, &s, SplitKind::Coordinate, None, 1e-6).unwrap();
        assert_eq!(cert.c, 1.0);
        assert!(cert.passed);
        let split = coordinate_split(&dense([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(split.len(), 4);
        assert_eq!(split.midpoint_residual(), 0.0);
    }

    #[test]
    fn theta_majorant_and_growth() {
        assert!(majorant_from_theta(None, 1.0).is_err());
        let f = find("neg_det_2x2").unwrap();
        let x0 = MatrixPoint::zeros(m22());
        let spec = GridSpec::new(x0.clone(), 1.0, 9, Clip::Ball);
        let touch = theta_upper_on(&f, &x0, &spec, &SolverOptions::default()).unwrap();
        let a = touch.opening;
        assert!(majorant_from_theta(Some(&touch), a * 0.5).is_err());
        let g = majorant_from_theta(Some(&touch), a).unwrap();
        assert_eq!(g.g(1.0), 0.5 * a);
        let rows = quadratic_growth_check(&f, &x0, a, 1.0, &[0.125, 0.25, 0.5], &small(4000)).unwrap();
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");

        let q = find("half_norm_sq").unwrap();
        let rows = quadratic_growth_check(&q, &x0, 1.0, 0.5, &[0.25, 0.5], &small(1000)).unwrap();
        for r in rows {
            assert!(r.sup <= r.radius * r.radius / 2.0 + 1e-15);
            assert!(r.holds);
        }
    }

    #[test]
    fn certificate_serializes() {
        let f = find("neg_det_2x2").unwrap();
        let x0 = MatrixPoint::zeros(m22());
        let s = small(200);
        let g = RadialMajorant::empirical(&f, &x0, &s, SplitKind::Column).unwrap();
        let cert = lower_bound_certify(&f, &g, &s, SplitKind::Column, None, 1e-6).unwrap();
        let v = serde_json::to_value(&cert).unwrap();
        for key in ["x0", "C", "g_table", "min_slack", "witness", "samples", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = MatrixPoint> {
        (1usize..4, 1usize..4).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| {
                MatrixPoint::from_coords(MatrixShape::new(r, c).unwrap(), v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn split_invariants(x in matrix_strategy()) {
            let s = column_split(&x).unwrap();
            prop_assert_eq!(s.partials.last().unwrap(), &x);
            prop_assert!(s.midpoint_residual() <= 1e-15 * (1.0 + x.norm()));
            for i in 0..s.len() {
                prop_assert_eq!(s.reflections[i].norm(), s.partials[i].norm());
                if i > 0 {
                    prop_assert!(s.partials[i].norm() >= s.partials[i - 1].norm());
                }
                let nonzero_cols = (0..x.shape.cols)
                    .filter(|&j| (0..x.shape.rows).any(|r| s.pieces[i].get(r, j) != 0.0))
                    .count();
                prop_assert!(nonzero_cols <= 1);
            }
        }

        #[test]
        fn enlarging_the_majorant_never_lowers_slack(extra in 0.0f64..2.0, seed in 0u64..50) {
            let f = find("abs_det_2x2").unwrap();
            let x0 = dense([0.2, 0.1, -0.1, 0.3]);
            let s = LemmaSampler { count: 300, seed, ..LemmaSampler::default() };
            let g = RadialMajorant::empirical(&f, &x0, &s, SplitKind::Column).unwrap();
            let a = lower_bound_certify(&f, &g, &s, SplitKind::Column, None, 1e-6).unwrap();
            let b = lower_bound_certify(&f, &g.enlarged(extra), &s, SplitKind::Column, None, 1e-6).unwrap();
            prop_assert!(b.min_slack >= a.min_slack);
        }
    }
}
