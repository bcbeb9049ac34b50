use approx::assert_abs_diff_eq;

use rankone_core::matrix::io::{field_to_string, read_field};
use rankone_core::matrix::{find, sample, Clip, Grid, GridSpec, MatrixPoint, MatrixShape, ScalarFunction};
use rankone_core::oned::{
    maximal_function, second_derivative_measure, superlevel_set, weak_one_one_check, PLConvex1D,
};
use rankone_core::paraboloid::{theta_upper, ConstraintSet, SolverOptions};

fn shape() -> MatrixShape {
    MatrixShape::new(2, 2).unwrap()
}

#[test]
fn field_round_trip_keeps_openings() {
    let f = find("half_norm_sq_2").unwrap();
    let spec = GridSpec::new(MatrixPoint::zeros(shape()), 1.0, 7, Clip::Ball);
    let field = sample(&f, &Grid::new(spec.clone()).unwrap()).unwrap();
    let text = field_to_string(&field).unwrap();
    let back = read_field(text.as_bytes(), "back").unwrap();
    assert_eq!(back.valid(), field.valid());
    for k in 0..field.values().len() {
        assert_eq!(back.value_at(k), field.value_at(k));
    }

    let x0 = MatrixPoint::zeros(shape());
    let solver = SolverOptions::default();
    let analytic = theta_upper(&f, &x0, &ConstraintSet::from_function(&f, &spec).unwrap(), &solver).unwrap();
    let sampled = theta_upper(&back, &x0, &ConstraintSet::from_field(&back), &solver).unwrap();
    assert_abs_diff_eq!(analytic.opening, 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sampled.opening, analytic.opening, epsilon = 1e-12);
}

#[test]
fn touching_paraboloid_dominates_on_nodes() {
    let spec = GridSpec::new(MatrixPoint::zeros(shape()), 1.0, 7, Clip::Ball);
    let x0 = MatrixPoint::from_coords(shape(), vec![0.1, 0.0, -0.2, 0.1]).unwrap();
    for name in ["norm", "max_linear_3", "abs_det_2x2"] {
        let f = find(name).unwrap();
        let cs = ConstraintSet::from_function(&f, &spec).unwrap();
        let touch = theta_upper(&f, &x0, &cs, &SolverOptions::default()).unwrap();
        assert!(touch.converged, "{name}");
        assert!(touch.feasibility(&cs) <= 1e-9, "{name}: {}", touch.feasibility(&cs));
        assert_abs_diff_eq!(touch.eval(&x0), f.value(&x0).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(touch.replay(&cs), touch.opening, epsilon = 1e-9);
        assert!(touch.gap() <= 1e-6 * touch.opening.max(1.0), "{name}: gap {}", touch.gap());
    }
}

#[test]
fn sampled_convex_profile_obeys_weak_bound() {
    // max(|x|, 2|x - 1| - 1) on [-1.5, 1.5]: slope -2 until the kink at 1/3, then 1.
    let xs: Vec<f64> = (0..=300).map(|k| -1.5 + k as f64 / 100.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| x.abs().max(2.0 * (x - 1.0).abs() - 1.0)).collect();
    let f = PLConvex1D::from_samples(&xs, &ys).unwrap();
    let mu = second_derivative_measure(&f);
    // 1/3 is off the grid, so the interpolant splits the kink across its two neighbours.
    assert!(mu.atoms().iter().all(|&(l, _)| (0.33 - 1e-9..=0.34 + 1e-9).contains(&l)));
    assert_abs_diff_eq!(mu.total(), 3.0, epsilon = 1e-9);
    assert!(maximal_function(&mu, 1.4).is_finite());

    let ts = [0.5, 1.0, 3.0, 10.0];
    let rep = weak_one_one_check(&mu, &ts).unwrap();
    assert!(rep.holds);
    for (row, &t) in rep.rows.iter().zip(&ts) {
        let set = superlevel_set(&mu, t).unwrap();
        assert_abs_diff_eq!(row.measure, set.measure(), epsilon = 1e-12);
        assert!(set.measure() <= 2.0 * mu.total() / t + 1e-12);
    }
}
