//! One-dimensional convex functions, their atomic second-derivative measures, and the
//! maximal-function estimates behind the `epsilon = 1` tail bound.

pub mod fubini;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::io::{fmt_f64, table_to_string};
use crate::stats::unit_vector;

pub use fubini::{fubini_tail_experiment, fubini_threshold, FubiniOptions, FubiniReport, FubiniRow, InclusionRow};

/// Continuous piecewise-linear convex function on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLConvex1D {
    breakpoints: Vec<f64>,
    /// `slopes[0]` left of the first breakpoint, `slopes[i]` on `(b_i, b_i+1)`.
    slopes: Vec<f64>,
    /// `f` at each breakpoint; for no breakpoints, `values[0] = f(0)`.
    values: Vec<f64>,
}

impl PLConvex1D {
    /// `f(anchor.0) = anchor.1`.
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor: (f64, f64)) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::Precondition(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("breakpoints must be strictly increasing".into()));
        }
        if let Some(i) = slopes.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Precondition(format!(
                "slope decreases at breakpoint {}: not convex",
                breakpoints[i]
            )));
        }
        if breakpoints.iter().chain(&slopes).any(|v| !v.is_finite()) || !anchor.0.is_finite() || !anchor.1.is_finite() {
            return Err(Error::Precondition("non-finite data".into()));
        }
        let mut values = vec![0.0; breakpoints.len().max(1)];
        for i in 1..breakpoints.len() {
            values[i] = values[i - 1] + slopes[i] * (breakpoints[i] - breakpoints[i - 1]);
        }
        let mut f = PLConvex1D {
            values,
            breakpoints,
            slopes,
        };
        let shift = anchor.1 - f.eval(anchor.0);
        for v in f.values.iter_mut() {
            *v += shift;
        }
        Ok(f)
    }

    /// PL interpolant through `(xs, ys)`; convexity is verified up to rounding, and slope
    /// changes at rounding level are merged away.
    pub fn from_samples(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::Precondition("need at least two matching samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("sample positions must increase".into()));
        }
        let seg: Vec<f64> = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
        let scale = ys.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let h = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let tol = 1e-10 * scale / h;
        let mut breakpoints = Vec::new();
        let mut slopes = vec![seg[0]];
        for i in 1..seg.len() {
            let last = *slopes.last().expect("nonempty");
            let jump = seg[i] - last;
            if jump < -tol {
                return Err(Error::Precondition(format!(
                    "samples are not convex near x = {}",
                    xs[i]
                )));
            }
            if jump > tol {
                breakpoints.push(xs[i]);
                slopes.push(seg[i]);
            }
        }
        PLConvex1D::new(breakpoints, slopes, (xs[0], ys[0]))
    }

    /// `|x - c|` scaled by `m / 2`, so that the second derivative is `m delta_c`.
    pub fn kink(c: f64, m: f64) -> Result<Self> {
        PLConvex1D::new(vec![c], vec![-m / 2.0, m / 2.0], (c, 0.0))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.values[0] + self.slopes[0] * x;
        }
        let i = self.breakpoints.partition_point(|b| *b <= x);
        if i == 0 {
            self.values[0] + self.slopes[0] * (x - self.breakpoints[0])
        } else {
            self.values[i - 1] + self.slopes[i] * (x - self.breakpoints[i - 1])
        }
    }

    /// `(f'(x-), f'(x+))`.
    pub fn one_sided_slopes(&self, x: f64) -> (f64, f64) {
        let right = self.breakpoints.partition_point(|b| *b <= x);
        let left = self.breakpoints.partition_point(|b| *b < x);
        (self.slopes[left], self.slopes[right])
    }

    /// `f(x) - f(0) - s x` with `s` the midpoint of the subdifferential at `0`.
    pub fn normalized_at_zero(&self) -> PLConvex1D {
        let (l, r) = self.one_sided_slopes(0.0);
        let s = 0.5 * (l + r);
        let f0 = self.eval(0.0);
        PLConvex1D {
            breakpoints: self.breakpoints.clone(),
            slopes: self.slopes.iter().map(|v| v - s).collect(),
            values: if self.breakpoints.is_empty() {
                vec![0.0]
            } else {
                self.breakpoints
                    .iter()
                    .zip(&self.values)
                    .map(|(b, v)| v - f0 - s * b)
                    .collect()
            },
        }
    }

    /// Random convex function with up to `max_kinks` breakpoints in `[-range, range]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_kinks: usize, range: f64) -> PLConvex1D {
        let k = rng.random_range(1..=max_kinks.max(1));
        let mut bs: Vec<f64> = (0..k).map(|_| rng.random_range(-range..range)).collect();
        bs.sort_by(f64::total_cmp);
        bs.dedup();
        let mut s = rng.random_range(-2.0..0.0);
        let mut slopes = vec![s];
        for _ in &bs {
            s += rng.random_range(0.0..2.0);
            slopes.push(s);
        }
        PLConvex1D::new(bs, slopes, (0.0, rng.random_range(-1.0..1.0))).expect("constructed convex")
    }

    /// `max - min` on `[a, b]` (attained at breakpoints or ends).
    pub fn oscillation(&self, a: f64, b: f64) -> f64 {
        let vals: Vec<f64> = std::iter::once(a)
            .chain(self.breakpoints.iter().cloned().filter(|x| *x > a && *x < b))
            .chain(std::iter::once(b))
            .map(|x| self.eval(x))
            .collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Finite nonnegative combination of Dirac masses with distinct locations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure1D {
    /// Sorted by location.
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure1D {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(l, m)| !l.is_finite() || !m.is_finite() || *m < 0.0) {
            return Err(Error::Precondition("atoms need finite locations and masses >= 0".into()));
        }
        atoms.retain(|(_, m)| *m > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("atom locations must be distinct".into()));
        }
        Ok(AtomicMeasure1D { atoms })
    }

    pub fn dirac(at: f64, mass: f64) -> Self {
        AtomicMeasure1D::new(vec![(at, mass)]).expect("single atom")
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `mu([a, b])`.
    pub fn mass_closed(&self, a: f64, b: f64) -> f64 {
        self.atoms.iter().filter(|(l, _)| *l >= a && *l <= b).map(|a| a.1).sum()
    }

    /// Restriction to `[a, b]`.
    pub fn restricted(&self, a: f64, b: f64) -> Self {
        AtomicMeasure1D {
            atoms: self.atoms.iter().cloned().filter(|(l, _)| *l >= a && *l <= b).collect(),
        }
    }

    /// Up to `max_atoms` atoms at distinct locations in `[-range, range]`, masses in `(0, 2)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize, range: f64) -> Self {
        let k = rng.random_range(1..=max_atoms.max(1));
        let atoms = (0..k)
            .map(|_| (rng.random_range(-range..range), rng.random_range(0.01..2.0)))
            .collect::<Vec<_>>();
        AtomicMeasure1D::new(atoms).unwrap_or_default()
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self.atoms.iter().map(|(l, m)| vec![fmt_f64(*l), fmt_f64(*m)]).collect();
        table_to_string(&["location", "mass"], &rows)
    }
}

/// One atom per breakpoint with mass equal to the slope jump.
pub fn second_derivative_measure(f: &PLConvex1D) -> AtomicMeasure1D {
    let atoms = f
        .breakpoints
        .iter()
        .enumerate()
        .map(|(i, b)| (*b, f.slopes[i + 1] - f.slopes[i]))
        .collect();
    AtomicMeasure1D::new(atoms).expect("convex slopes give nonnegative jumps")
}

/// `sup { mu(I) / |I| : x in I = (a, b) }`, `+inf` at atoms, by enumerating contiguous spans.
pub fn maximal_function(mu: &AtomicMeasure1D, x: f64) -> f64 {
    let atoms = &mu.atoms;
    if atoms.iter().any(|(l, _)| *l == x) {
        return f64::INFINITY;
    }
    let mut best: f64 = 0.0;
    for i in 0..atoms.len() {
        let mut mass = 0.0;
        for j in i..atoms.len() {
            mass += atoms[j].1;
            let len = atoms[j].0.max(x) - atoms[i].0.min(x);
            best = best.max(mass / len);
        }
    }
    best
}

/// Finite union of disjoint open intervals, sorted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn from_intervals(mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|(a, b)| b > a);
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                // open intervals sharing only an endpoint stay separate
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|(a, b)| *a < x && x < *b)
    }

    /// Intersection with the closed interval `[lo, hi]` (measure is unaffected by closure).
    pub fn clipped(&self, lo: f64, hi: f64) -> Self {
        IntervalUnion::from_intervals(
            self.intervals.iter().map(|(a, b)| (a.max(lo), b.min(hi))).collect(),
        )
    }

    /// Whether every interval of `self` lies inside some interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.intervals
            .iter()
            .all(|(a, b)| other.intervals.iter().any(|(c, d)| c <= a && b <= d))
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self.intervals.iter().map(|(a, b)| vec![fmt_f64(*a), fmt_f64(*b)]).collect();
        table_to_string(&["start", "end"], &rows)
    }
}

/// `{M mu > t}`: the span `i..=j` with mass `m` contributes `(l_j - m/t, l_i + m/t)` when
/// `l_j - l_i < m / t`.
pub fn superlevel_set(mu: &AtomicMeasure1D, t: f64) -> Result<IntervalUnion> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("level must be positive, got {t}")));
    }
    let atoms = &mu.atoms;
    let mut pieces = Vec::new();
    for i in 0..atoms.len() {
        let mut mass = 0.0;
        for j in i..atoms.len() {
            mass += atoms[j].1;
            let w = mass / t;
            if atoms[j].0 - atoms[i].0 < w {
                pieces.push((atoms[j].0 - w, atoms[i].0 + w));
            }
        }
    }
    Ok(IntervalUnion::from_intervals(pieces))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    pub t: f64,
    /// `|{M mu > t}|`.
    pub measure: f64,
    /// `2 mu(R) / t`.
    pub bound: f64,
    /// `|{M mu > t}| t / mu(R)`; `0` for the zero measure.
    pub constant: f64,
    pub holds: bool,
    /// `|{M mu > t} cap [-1, 1]|`.
    pub local_measure: f64,
    /// `|{M mu~ > t}|` for `mu~ = mu` restricted to `[-2, 2]`.
    pub truncated_measure: f64,
    /// `2 mu[-2, 2] / t`.
    pub local_bound: f64,
    /// `t > mu[-2, 2]`, the range where the localized inclusion is claimed.
    pub above_local_mass: bool,
    /// `local_measure <= truncated_measure`.
    pub local_inclusion: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    pub rows: Vec<WeakRow>,
    pub total_mass: f64,
    /// Largest `constant` over the grid.
    pub empirical_constant: f64,
    pub holds: bool,
}

impl WeakReport {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.t),
                    fmt_f64(r.measure),
                    fmt_f64(r.bound),
                    fmt_f64(r.local_measure),
                    fmt_f64(r.truncated_measure),
                    fmt_f64(r.local_bound),
                ]
            })
            .collect();
        table_to_string(
            &["t", "measure", "bound", "local_measure", "truncated_measure", "local_bound"],
            &rows,
        )
    }
}

/// `|{M mu > t}| <= 2 mu(R) / t` per level, with the localized comparison alongside.
pub fn weak_one_one_check(mu: &AtomicMeasure1D, t_grid: &[f64]) -> Result<WeakReport> {
    let total = mu.total();
    let truncated = mu.restricted(-2.0, 2.0);
    let local_mass = truncated.total();
    let slack = 1e-12;
    let rows = t_grid
        .iter()
        .map(|&t| {
            let set = superlevel_set(mu, t)?;
            let measure = set.measure();
            let bound = 2.0 * total / t;
            let local_measure = set.clipped(-1.0, 1.0).measure();
            let truncated_measure = superlevel_set(&truncated, t)?.measure();
            Ok(WeakRow {
                t,
                measure,
                bound,
                constant: if total > 0.0 { measure * t / total } else { 0.0 },
                holds: measure <= bound * (1.0 + slack),
                local_measure,
                truncated_measure,
                local_bound: 2.0 * local_mass / t,
                above_local_mass: t > local_mass,
                local_inclusion: local_measure <= truncated_measure * (1.0 + slack) + slack,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakReport {
        empirical_constant: rows.iter().map(|r| r.constant).fold(0.0, f64::max),
        holds: rows.iter().all(|r| r.holds),
        total_mass: total,
        rows,
    })
}

/// State of the last link `f''[0,h] h <= M f''(0) h^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Holds,
    Fails,
    /// `M f''(0) = +inf`: true but vacuous.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorRow {
    pub h: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    /// `f''[0, h]`, closed.
    pub mass_plus: f64,
    /// `f''[-h, 0]`, closed.
    pub mass_minus: f64,
    /// `0 <= f(h) <= f''[0,h] h` and the mirrored pair.
    pub first_links: bool,
    pub last_plus: Link,
    pub last_minus: Link,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub maximal_at_zero: f64,
    pub vacuous: bool,
    pub rows: Vec<TaylorRow>,
    pub holds: bool,
}

/// Checks `0 <= f(h) <= f''[0,h] h <= M f''(0) h^2` and the mirrored chain for each `h`.
pub fn convex_taylor_check(f: &PLConvex1D, h_grid: &[f64]) -> Result<TaylorReport> {
    let f0 = f.eval(0.0);
    let (l, r) = f.one_sided_slopes(0.0);
    let scale = f.slopes.iter().fold(1.0f64, |m, s| m.max(s.abs()));
    if f0.abs() > 1e-12 * scale || l > 1e-12 * scale || r < -1e-12 * scale {
        return Err(Error::Precondition(format!(
            "need f(0) = 0 and 0 in [{l}, {r}]; f(0) = {f0}"
        )));
    }
    if h_grid.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Precondition("h values must be positive".into()));
    }
    let mu = second_derivative_measure(f);
    let m0 = maximal_function(&mu, 0.0);
    let tol = |v: f64| 1e-12 * (1.0 + v.abs());
    let link = |lhs: f64, h: f64| {
        if m0.is_infinite() {
            Link::Vacuous
        } else if lhs <= m0 * h * h + tol(m0 * h * h) {
            Link::Holds
        } else {
            Link::Fails
        }
    };
    let rows: Vec<TaylorRow> = h_grid
        .iter()
        .map(|&h| {
            let fp = f.eval(h);
            let fm = f.eval(-h);
            let mp = mu.mass_closed(0.0, h);
            let mm = mu.mass_closed(-h, 0.0);
            let first = fp >= -tol(fp) && fp <= mp * h + tol(mp * h) && fm >= -tol(fm) && fm <= mm * h + tol(mm * h);
            TaylorRow {
                h,
                f_plus: fp,
                f_minus: fm,
                mass_plus: mp,
                mass_minus: mm,
                first_links: first,
                last_plus: link(mp * h, h),
                last_minus: link(mm * h, h),
            }
        })
        .collect();
    let holds = rows
        .iter()
        .all(|r| r.first_links && r.last_plus != Link::Fails && r.last_minus != Link::Fails);
    Ok(TaylorReport {
        maximal_at_zero: m0,
        vacuous: m0.is_infinite(),
        rows,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    pub n: usize,
    pub samples: usize,
    pub max_ratio: f64,
    pub witness: Vec<f64>,
    pub sqrt_n: f64,
    /// Ratio at `(1, ..., 1) / sqrt(n)`.
    pub equality_ratio: f64,
    pub holds: bool,
    pub equality_reproduced: bool,
}

pub fn l1_ratio(x: &[f64]) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    l1 / l2
}

/// `x` in `conv{+-h e_j}` iff `|x|_1 <= h`.
pub fn in_l1_hull(x: &[f64], h: f64) -> bool {
    x.iter().map(|v| v.abs()).sum::<f64>() <= h
}

/// Largest `|x|_1 / |x|_2` over seeded random unit vectors, against the bound `sqrt(n)`.
pub fn l1_ball_containment(n: usize, samples: usize, seed: u64) -> Result<L1Report> {
    if n == 0 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut witness = vec![0.0; n];
    for _ in 0..samples {
        let v = unit_vector(&mut rng, n);
        let r = l1_ratio(&v);
        if r > max_ratio {
            max_ratio = r;
            witness = v;
        }
    }
    let sqrt_n = (n as f64).sqrt();
    let eq = vec![1.0 / sqrt_n; n];
    let equality_ratio = l1_ratio(&eq);
    Ok(L1Report {
        n,
        samples,
        max_ratio,
        witness,
        sqrt_n,
        equality_ratio,
        holds: max_ratio <= sqrt_n + 1e-12,
        equality_reproduced: (equality_ratio - sqrt_n).abs() <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abs() -> PLConvex1D {
        PLConvex1D::kink(0.0, 2.0).unwrap()
    }

    #[test]
    fn pl_evaluation_and_measure() {
        let f = abs();
        assert_eq!(f.eval(-0.7), 0.7);
        assert_eq!(f.eval(0.3), 0.3);
        assert_eq!(second_derivative_measure(&f).atoms(), &[(0.0, 2.0)]);

        let lin = PLConvex1D::new(vec![], vec![0.5], (0.0, 1.0)).unwrap();
        assert!(second_derivative_measure(&lin).atoms().is_empty());
        assert_eq!(lin.eval(2.0), 2.0);

        // max(0, x - 1/2) + max(0, -x - 1/2)
        let g = PLConvex1D::new(vec![-0.5, 0.5], vec![-1.0, 0.0, 1.0], (0.0, 0.0)).unwrap();
        let mu = second_derivative_measure(&g);
        assert_eq!(mu.atoms(), &[(-0.5, 1.0), (0.5, 1.0)]);
        let (_, right) = g.one_sided_slopes(2.0);
        let (left, _) = g.one_sided_slopes(-2.0);
        assert_eq!(mu.mass_closed(-2.0, 2.0), right - left);
        assert!(mu.mass_closed(-2.0, 2.0) <= 2.0 * g.oscillation(-3.0, 3.0));
        assert_eq!(g.eval(1.0), 0.5);

        assert!(PLConvex1D::new(vec![0.0], vec![1.0, -1.0], (0.0, 0.0)).is_err());
    }

    #[test]
    fn fitted_abs_has_one_atom() {
        let xs: Vec<f64> = (0..=600).map(|i| -3.0 + 6.0 * i as f64 / 600.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        let f = PLConvex1D::from_samples(&xs, &ys).unwrap();
        let mu = second_derivative_measure(&f);
        assert_eq!(mu.atoms().len(), 1);
        assert!(mu.atoms()[0].0.abs() < 1e-15);
        assert!((mu.atoms()[0].1 - 2.0).abs() < 1e-12);
        let bad: Vec<f64> = xs.iter().map(|x| -x * x).collect();
        assert!(PLConvex1D::from_samples(&xs, &bad).is_err());
    }

    #[test]
    fn maximal_function_examples() {
        let d = AtomicMeasure1D::dirac(0.0, 1.0);
        assert_eq!(maximal_function(&d, 0.5), 2.0);
        assert_eq!(maximal_function(&d, 0.0), f64::INFINITY);
        let two = AtomicMeasure1D::new(vec![(-1.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(maximal_function(&two, 0.0), 1.0);
        assert_eq!(maximal_function(&AtomicMeasure1D::default(), 0.3), 0.0);
    }

    #[test]
    fn weak_bound_for_single_atoms_is_sharp() {
        let d = AtomicMeasure1D::dirac(0.0, 1.0);
        let rep = weak_one_one_check(&d, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        for r in &rep.rows {
            assert_eq!(r.measure * r.t, 2.0);
            assert_eq!(r.constant, 2.0);
        }
        let z = weak_one_one_check(&AtomicMeasure1D::default(), &[1.0]).unwrap();
        assert_eq!(z.rows[0].measure, 0.0);
        assert!(superlevel_set(&AtomicMeasure1D::default(), 1.0).unwrap().is_empty());
    }

    #[test]
    fn localized_inclusion_needs_the_mass_inside() {
        // a heavy atom outside [-2, 2] makes {M mu > t} cover [-1, 1] while mu~ = 0
        let mu = AtomicMeasure1D::new(vec![(3.0, 100.0)]).unwrap();
        let rep = weak_one_one_check(&mu, &[1.0]).unwrap();
        let row = &rep.rows[0];
        assert!(row.above_local_mass);
        assert_eq!(row.local_measure, 2.0);
        assert_eq!(row.truncated_measure, 0.0);
        assert!(!row.local_inclusion);
        // with all mass inside [-2, 2] the inclusion holds
        let mu = AtomicMeasure1D::new(vec![(-1.5, 0.5), (0.3, 1.0)]).unwrap();
        let rep = weak_one_one_check(&mu, &[2.0, 4.0, 8.0]).unwrap();
        assert!(rep.rows.iter().all(|r| r.local_inclusion));
    }

    #[test]
    fn taylor_chain_examples() {
        let rep = convex_taylor_check(&abs(), &[0.1, 0.5, 1.0]).unwrap();
        assert!(rep.vacuous && rep.holds);
        assert!(rep.rows.iter().all(|r| r.last_plus == Link::Vacuous));
        assert_eq!(rep.rows[2].mass_plus, 2.0);

        let g = PLConvex1D::new(vec![0.5], vec![0.0, 1.0], (0.0, 0.0)).unwrap();
        let rep = convex_taylor_check(&g, &[0.25, 1.0]).unwrap();
        assert_eq!(rep.rows[0].f_plus, 0.0);
        assert_eq!(rep.rows[1].f_plus, 0.5);
        assert_eq!(rep.rows[1].mass_plus, 1.0);
        assert_eq!(rep.maximal_at_zero, 2.0);
        assert!(rep.holds && !rep.vacuous);

        let flat = PLConvex1D::new(vec![], vec![0.0], (0.0, 0.0)).unwrap();
        let rep = convex_taylor_check(&flat, &[0.5]).unwrap();
        assert_eq!(rep.rows[0].f_plus, 0.0);
        assert_eq!(rep.maximal_at_zero, 0.0);

        let tilted = PLConvex1D::new(vec![], vec![1.0], (0.0, 0.0)).unwrap();
        assert!(convex_taylor_check(&tilted, &[0.5]).is_err());
    }

    #[test]
    fn taylor_chain_for_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hs: Vec<f64> = (1..=20).map(|k| k as f64 / 10.0).collect();
        for _ in 0..50 {
            let f = PLConvex1D::random(&mut rng, 6, 2.0).normalized_at_zero();
            assert!(convex_taylor_check(&f, &hs).unwrap().holds);
        }
    }

    #[test]
    fn l1_geometry() {
        let rep = l1_ball_containment(1, 100, 1).unwrap();
        assert!((rep.max_ratio - 1.0).abs() < 1e-15);
        assert_eq!(l1_ratio(&[0.5, 0.5, 0.5, 0.5]), 2.0);
        let rep = l1_ball_containment(2, 100_000, 2).unwrap();
        let r2 = 2f64.sqrt();
        assert!(rep.max_ratio <= r2 + 1e-12 && rep.max_ratio >= r2 - 1e-3);
        assert!(rep.equality_reproduced);
        assert!(in_l1_hull(&[0.2, -0.3], 0.5));
        assert!(!in_l1_hull(&[0.3, -0.3], 0.5));
    }

    fn measure_strategy() -> impl Strategy<Value = AtomicMeasure1D> {
        proptest::collection::vec((-3.0f64..3.0, 0.01f64..2.0), 1..=5)
            .prop_filter_map("distinct atoms", |v| AtomicMeasure1D::new(v).ok())
    }

    proptest! {
        #[test]
        fn maximal_function_matches_interval_sampling(mu in measure_strategy(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let x: f64 = rng.random_range(-4.0..4.0);
                let m = maximal_function(&mu, x);
                let mut cands: Vec<f64> = mu.atoms().iter().map(|a| a.0).collect();
                cands.push(x);
                let mut oracle: f64 = 0.0;
                for k in 0..10_000 {
                    let (a, b) = if k % 2 == 0 {
                        (x - rng.random_range(0.0..4.0), x + rng.random_range(0.0..4.0))
                    } else {
                        let a = cands[rng.random_range(0..cands.len())].min(x);
                        let b = cands[rng.random_range(0..cands.len())].max(x);
                        let pad = |v: f64| (1e-13 * (b - a)).max(4.0 * f64::EPSILON * v.abs().max(1.0));
                        (a - pad(a), b + pad(b))
                    };
                    if b <= a { continue; }
                    let mass: f64 = mu.atoms().iter().filter(|(l, _)| *l > a && *l < b).map(|p| p.1).sum();
                    oracle = oracle.max(mass / (b - a));
                }
                prop_assert!(oracle <= m * (1.0 + 1e-9) + 1e-9);
                if m.is_finite() {
                    prop_assert!((oracle - m).abs() <= 1e-9 * m.max(1.0), "{} vs {}", oracle, m);
                }
            }
        }

        #[test]
        fn superlevel_sets_are_nested_and_exact(mu in measure_strategy(), t in 0.1f64..10.0, probe in -5.0f64..5.0) {
            let a = superlevel_set(&mu, t).unwrap();
            let b = superlevel_set(&mu, 2.0 * t).unwrap();
            prop_assert!(b.is_subset_of(&a));
            prop_assert!(b.measure() <= a.measure());
            prop_assert_eq!(a.contains(probe), maximal_function(&mu, probe) > t || mu.atoms().iter().any(|p| p.0 == probe));
            let rep = weak_one_one_check(&mu, &[t]).unwrap();
            prop_assert!(rep.holds);
        }
    }
}
