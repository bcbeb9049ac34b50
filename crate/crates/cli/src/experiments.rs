//! The six pipelines. Without `function` each runs its default suite; with it, the
//! pipeline runs on that single target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rankone_core::convexity::{
    lipschitz_estimate_check, rank_one_convexity_check, separate_convexity_check, ConvexityReport, PairSampler,
    SegmentSampler,
};
use rankone_core::envelope::{
    cone_convolutions, cone_touch_check, derivative_fields, halving_radii, sandwich_check, second_order_remainder,
    second_order_remainder_sampled, touch_set, EnvelopeOptions, KinkDetector, ProbeSampler, RemainderOptions,
    RemainderProfile,
};
use rankone_core::lemma::{lower_bound_certify, LemmaSampler, RadialMajorant, SplitKind};
use rankone_core::matrix::io::{fmt_f64, table_to_string};
use rankone_core::matrix::{corpus, find, Clip, FunctionHandle, Grid, MatrixPoint, MatrixShape};
use rankone_core::oned::{
    convex_taylor_check, fubini_tail_experiment, fubini_threshold, l1_ball_containment, superlevel_set,
    weak_one_one_check, AtomicMeasure1D, FubiniOptions, Link, PLConvex1D,
};
use rankone_core::paraboloid::{
    log_grid, tail_experiment, theta_field, theta_upper_on, ConstraintSet, EvalSampler, SolverOptions, ThetaField,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::target::{resolve, Target};
use crate::{CliError, Outcome};

type Res<T> = Result<T, CliError>;

pub fn run_one(cfg: &ExperimentConfig) -> Res<Outcome> {
    match cfg.experiment {
        Experiment::Verify => verify(cfg),
        Experiment::Theta => theta(cfg),
        Experiment::Tail => tail(cfg),
        Experiment::Envelope => envelope(cfg),
        Experiment::Lemma => lemma(cfg),
        Experiment::Appendix => appendix(cfg),
        Experiment::All => Err(CliError::Usage("`all` is not a single pipeline".into())),
    }
}

fn handle(name: &str) -> Res<FunctionHandle> {
    find(name).ok_or_else(|| CliError::Usage(format!("corpus entry `{name}` is missing")))
}

fn m22() -> MatrixShape {
    MatrixShape::new(2, 2).expect("2x2 is valid")
}

fn csv(header: &[&str], rows: Vec<Vec<String>>) -> Res<String> {
    Ok(table_to_string(header, &rows)?)
}

fn flag(b: bool) -> String {
    (b as u8).to_string()
}

fn constraints(target: &Target, domain: &rankone_core::matrix::GridSpec) -> Res<ConstraintSet> {
    Ok(match target {
        Target::Handle(h) => ConstraintSet::from_function(h, domain)?,
        Target::Field(f) => ConstraintSet::from_field(f),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Expect {
    Holds,
    /// A rank-one violation of at least this size with a witness.
    Violation(f64),
}

fn verify(cfg: &ExperimentConfig) -> Res<Outcome> {
    let radius = cfg.radius.unwrap_or(1.0);
    let points = cfg.grid_points.unwrap_or(9);
    let sampler = SegmentSampler {
        seed: cfg.seed,
        tolerance: cfg.tol.unwrap_or(1e-9),
        ..SegmentSampler::default()
    };
    // (target, separate instead of rank-one, expectation)
    let cases: Vec<(Target, bool, Expect)> = match &cfg.function {
        Some(name) => vec![(resolve(name)?, false, Expect::Holds)],
        None => vec![
            (Target::Handle(handle("neg_det_2x2")?), false, Expect::Holds),
            (Target::Handle(handle("abs_det_2x2")?), false, Expect::Holds),
            (Target::Handle(handle("neg_half_norm_sq")?), false, Expect::Violation(0.1)),
            (Target::Handle(handle("neg_uv")?), true, Expect::Holds),
        ],
    };
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut reports: Vec<ConvexityReport> = Vec::new();
    let mut lip_rows = Vec::new();
    let mut lip_reports = Vec::new();
    for (target, separate, expect) in &cases {
        let domain = target.domain(radius, points, Clip::Ball);
        let f = target.function();
        let rep = if *separate {
            separate_convexity_check(f, &domain, &sampler)?
        } else {
            rank_one_convexity_check(f, &domain, &sampler)?
        };
        let ok = match expect {
            Expect::Holds => rep.passed,
            Expect::Violation(min) => rep.worst_violation >= *min && rep.witness.is_some(),
        };
        let expected = match expect {
            Expect::Holds => "convex".to_string(),
            Expect::Violation(min) => format!("violation>={min}"),
        };
        out.check(
            format!("{} {}", rep.operation, rep.function),
            ok,
            format!("worst violation {} ({expected})", rep.worst_violation),
        );
        rows.push(vec![
            rep.function.clone(),
            rep.operation.clone(),
            fmt_f64(rep.worst_violation),
            rep.samples_checked.to_string(),
            rep.samples_skipped.to_string(),
            expected,
            flag(ok),
        ]);
        reports.push(rep);

        if target.handle().is_some_and(|h| h.flags.rank_one_convex) && !*separate {
            let r = domain.radius / 4.0;
            let lip = lipschitz_estimate_check(
                f,
                &domain,
                &domain.center,
                r,
                &PairSampler {
                    seed: cfg.seed,
                    ..PairSampler::default()
                },
            )?;
            out.check(
                format!("lipschitz_estimate {}", f.name()),
                lip.holds,
                format!("lip {} <= {}", lip.lip_lhs, lip.osc_rhs),
            );
            lip_rows.push(vec![
                f.name().to_string(),
                fmt_f64(r),
                fmt_f64(lip.lip_lhs),
                fmt_f64(lip.osc_rhs),
                fmt_f64(lip.ratio),
                flag(lip.holds),
            ]);
            lip_reports.push(lip);
        }
    }
    out.artifact(
        "convexity",
        csv(
            &["function", "operation", "worst_violation", "checked", "skipped", "expected", "passed"],
            rows,
        )?,
    );
    if !lip_rows.is_empty() {
        out.artifact(
            "lipschitz",
            csv(&["function", "radius", "lip", "osc_bound", "ratio", "holds"], lip_rows)?,
        );
    }
    out.record("convexity", &reports)?;
    out.record("lipschitz", &lip_reports)?;
    Ok(out)
}

fn theta(cfg: &ExperimentConfig) -> Res<Outcome> {
    let radius = cfg.radius.unwrap_or(1.0);
    let points = cfg.grid_points.unwrap_or(9);
    let solver = SolverOptions {
        tol: cfg.tol.unwrap_or(SolverOptions::default().tol),
        ..SolverOptions::default()
    };
    let mut out = Outcome::default();
    match &cfg.function {
        None => {
            let mut rows = Vec::new();
            let mut touches = Vec::new();
            for (name, a0) in [("half_norm_sq_0.5", 0.5), ("half_norm_sq", 1.0), ("half_norm_sq_2", 2.0)] {
                let f = handle(name)?;
                let x0 = MatrixPoint::zeros(m22());
                let spec = rankone_core::matrix::GridSpec::new(x0.clone(), radius, points, Clip::Ball);
                let t = theta_upper_on(&f, &x0, &spec, &solver)?;
                let rel = (t.opening - a0).abs() / a0;
                out.check(
                    format!("theta {name}"),
                    t.converged && rel <= 0.02,
                    format!("theta {} vs {a0} (relative error {rel})", t.opening),
                );
                rows.push(vec![
                    name.to_string(),
                    fmt_f64(a0),
                    fmt_f64(t.opening),
                    fmt_f64(t.dual_bound),
                    t.iterations.to_string(),
                    flag(t.converged),
                ]);
                touches.push(t);
            }
            out.artifact(
                "quadratics",
                csv(&["function", "a0", "theta", "dual_bound", "iterations", "converged"], rows)?,
            );
            out.record("touches", &touches)?;
        }
        Some(name) => {
            let target = resolve(name)?;
            let domain = target.domain(radius, points, Clip::Ball);
            let cs = constraints(&target, &domain)?;
            let sampler = EvalSampler {
                count: cfg.eval_points.unwrap_or(100),
                seed: cfg.seed,
                radius: domain.radius / 2.0,
            };
            let field = theta_field(target.function(), &sampler, &cs, &solver)?;
            out.artifact("theta", field.to_csv()?);
            out.check(
                format!("theta_field {}", target.name()),
                field.unconverged() == 0,
                format!("{} of {} points unconverged", field.unconverged(), field.touches.len()),
            );
            record_theta(&mut out, &field)?;
        }
    }
    Ok(out)
}

fn record_theta(out: &mut Outcome, field: &ThetaField) -> Res<()> {
    let th = field.thetas();
    let max = th.iter().cloned().fold(0.0, f64::max);
    let mean = th.iter().sum::<f64>() / th.len().max(1) as f64;
    out.record(
        "theta",
        json!({
            "function": field.function,
            "constraints": field.constraint_count,
            "eval_points": field.touches.len(),
            "max": max,
            "mean": mean,
            "unconverged": field.unconverged(),
        }),
    )
}

fn tail(cfg: &ExperimentConfig) -> Res<Outcome> {
    let target = resolve(cfg.function.as_deref().unwrap_or("abs_x11"))?;
    let domain = target.domain(cfg.radius.unwrap_or(1.0), cfg.grid_points.unwrap_or(13), Clip::Ball);
    let cs = constraints(&target, &domain)?;
    let sampler = EvalSampler {
        count: cfg.eval_points.unwrap_or(500),
        seed: cfg.seed,
        radius: domain.radius / 2.0,
    };
    let solver = SolverOptions {
        tol: cfg.tol.unwrap_or(SolverOptions::default().tol),
        ..SolverOptions::default()
    };
    let field = theta_field(target.function(), &sampler, &cs, &solver)?;
    let t_grid = cfg.t_grid.clone().unwrap_or_else(|| log_grid(1.0, 10.0, 8));
    let rep = tail_experiment(&field, 1.0, &t_grid)?;
    let mut out = Outcome::default();
    out.artifact("theta", field.to_csv()?);
    out.artifact("tail", rep.to_csv()?);
    let nonincreasing = rep.measure.windows(2).all(|w| w[1] <= w[0]);
    out.check("tail non-increasing", nonincreasing, format!("measures {:?}", rep.measure));
    let vanished = rep.measure.last().is_some_and(|m| *m == 0.0);
    let decay = match rep.fitted_epsilon {
        Some(e) => e >= 0.9,
        None => vanished,
    };
    out.check(
        format!("tail decay {}", target.name()),
        decay,
        match (rep.fitted_epsilon, &rep.fit_refused) {
            (Some(e), _) => format!("fitted epsilon {e}"),
            (None, Some(why)) => format!("no fit ({why}); tail vanished: {vanished}"),
            (None, None) => "no fit".to_string(),
        },
    );
    record_theta(&mut out, &field)?;
    out.record("tail", &rep)?;
    Ok(out)
}

fn remainder_rows(rows: &mut Vec<Vec<String>>, name: &str, p: &RemainderProfile) {
    for (k, r) in p.radii.iter().enumerate() {
        rows.push(vec![
            name.to_string(),
            fmt_f64(*r),
            fmt_f64(p.ratios[k]),
            p.integral_ratios.as_ref().map(|v| fmt_f64(v[k])).unwrap_or_default(),
        ]);
    }
}

fn envelope(cfg: &ExperimentConfig) -> Res<Outcome> {
    const LIP: f64 = 2.0;
    let radius = cfg.radius.unwrap_or(0.75);
    let points = cfg.grid_points.unwrap_or(7);
    let opts = EnvelopeOptions {
        seed: cfg.seed,
        ..EnvelopeOptions::default()
    };
    let targets: Vec<Target> = match &cfg.function {
        Some(name) => vec![resolve(name)?],
        None => corpus().into_iter().map(Target::Handle).collect(),
    };
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for target in &targets {
        let grid = Grid::new(target.domain(radius, points, Clip::Ball))?;
        let (mut order, mut lip, mut idem) = (0.0f64, 0.0f64, 0.0f64);
        for (k, source) in derivative_fields(target.function(), &grid)?.iter().enumerate() {
            let pair = cone_convolutions(source, LIP, &opts)?;
            let (o, l, i) = (pair.order_violation(), pair.lipschitz_excess(), pair.idempotence_defect()?);
            order = order.max(o);
            lip = lip.max(l);
            idem = idem.max(i);
            rows.push(vec![
                target.name().to_string(),
                k.to_string(),
                source.valid_count().to_string(),
                pair.w_minus.valid_count().to_string(),
                fmt_f64(o),
                fmt_f64(l),
                fmt_f64(i),
            ]);
        }
        out.check(
            format!("envelope {}", target.name()),
            order == 0.0 && lip <= 1e-12 && idem <= 1e-12,
            format!("order {order}, lipschitz excess {lip}, idempotence {idem}"),
        );
    }
    out.artifact(
        "envelope",
        csv(
            &["function", "partial", "source_nodes", "output_nodes", "order_violation", "lipschitz_excess", "idempotence_defect"],
            rows,
        )?,
    );

    let ropts = RemainderOptions {
        seed: cfg.seed,
        quadrature_points: 8,
        ..RemainderOptions::default()
    };
    let radii = halving_radii(0.25, 5);
    let mut rrows = Vec::new();
    let mut profiles = Vec::new();
    match &cfg.function {
        None => {
            let x_quad = MatrixPoint::from_coords(m22(), vec![0.1, -0.2, 0.3, 0.0])?;
            let quad = second_order_remainder(&handle("half_norm_sq")?, &x_quad, &radii, &ropts)?;
            out.check(
                "remainder half_norm_sq",
                quad.differentiable && quad.ratios.iter().all(|r| *r < 1e-9),
                format!("ratios {:?}", quad.ratios),
            );
            let cubic = second_order_remainder(&handle("cubic_x11")?, &MatrixPoint::zeros(m22()), &radii, &ropts)?;
            let halves = cubic.ratios.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() < 1e-6);
            out.check(
                "remainder cubic_x11",
                halves && cubic.slope.is_some_and(|s| (s - 1.0).abs() <= 0.2),
                format!("slope {:?}", cubic.slope),
            );
            let kink = second_order_remainder(&handle("abs_x11")?, &MatrixPoint::zeros(m22()), &radii, &ropts)?;
            out.check(
                "remainder abs_x11 at kink",
                !kink.differentiable,
                format!("ratios {:?}", kink.ratios),
            );
            for (name, p) in [("half_norm_sq", quad), ("cubic_x11", cubic), ("abs_x11", kink)] {
                remainder_rows(&mut rrows, name, &p);
                profiles.push(json!({"function": name, "profile": p}));
            }
            touch_suite(cfg, &mut out)?;
        }
        Some(_) => {
            let target = &targets[0];
            let domain = target.domain(radius, points, Clip::Ball);
            let result = match target {
                Target::Handle(h) => second_order_remainder(h, &domain.center, &radii, &ropts),
                Target::Field(f) => {
                    let h = f.grid().spacing();
                    let rs: Vec<f64> = halving_radii(domain.radius / 2.0, 5).into_iter().filter(|r| *r >= h).collect();
                    second_order_remainder_sampled(f, &domain.center, &rs, &ropts)
                }
            };
            match result {
                Ok(p) => {
                    remainder_rows(&mut rrows, target.name(), &p);
                    profiles.push(json!({"function": target.name(), "profile": p}));
                }
                Err(e) => out.record("remainder_error", e.to_string())?,
            }
        }
    }
    out.artifact("remainder", csv(&["function", "radius", "ratio", "integral_ratio"], rrows)?);
    out.record("remainder", profiles)?;
    Ok(out)
}

/// Touch set, cone ratio and sandwich for the unit quadratic.
fn touch_suite(cfg: &ExperimentConfig, out: &mut Outcome) -> Res<()> {
    let f = handle("half_norm_sq")?;
    let spec = rankone_core::matrix::GridSpec::new(MatrixPoint::zeros(m22()), 1.0, 9, Clip::Ball);
    let cs = ConstraintSet::from_function(&f, &spec)?;
    let sampler = EvalSampler {
        count: 50,
        seed: cfg.seed,
        radius: 0.5,
    };
    let field = theta_field(&f, &sampler, &cs, &SolverOptions::default())?;
    let a = 2.0;
    let set = touch_set(&f, &field, a, &KinkDetector::default());
    let probe = ProbeSampler {
        seed: cfg.seed,
        ..ProbeSampler::default()
    };
    let cone = cone_touch_check(&f, &set, 1.0, &probe);
    let grid = Grid::new(spec)?;
    let source = derivative_fields(&f, &grid)?.remove(0);
    let pair = cone_convolutions(
        &source,
        a,
        &EnvelopeOptions {
            seed: cfg.seed,
            ..EnvelopeOptions::default()
        },
    )?;
    let sandwich = sandwich_check(&pair, &set);
    out.check(
        "cone touch half_norm_sq",
        cone.passed && set.points.len() == field.touches.len(),
        format!("max ratio {} <= {}", cone.max_ratio, cone.bound),
    );
    out.check(
        "sandwich half_norm_sq",
        sandwich.global_order_violation == 0.0,
        format!("max gap on touch set {}", sandwich.max_gap_on_touch_set),
    );
    let rows = set
        .points
        .iter()
        .zip(&set.thetas)
        .zip(&cone.per_point)
        .map(|((x, t), r)| {
            let mut row: Vec<String> = x.coords().iter().map(|v| fmt_f64(*v)).collect();
            row.push(fmt_f64(*t));
            row.push(fmt_f64(*r));
            row
        })
        .collect();
    let mut header = m22().coord_labels();
    header.push("theta".into());
    header.push("cone_ratio".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.artifact("touch", csv(&header, rows)?);
    out.record("cone_touch", &cone)?;
    out.record("sandwich", &sandwich)?;
    Ok(())
}

fn lemma(cfg: &ExperimentConfig) -> Res<Outcome> {
    let tol = cfg.tol.unwrap_or(1e-6);
    let mut cases: Vec<(Target, MatrixPoint, bool, LemmaSampler)> = Vec::new();
    let base = LemmaSampler {
        count: cfg.samples.unwrap_or(10_000),
        seed: cfg.seed,
        ..LemmaSampler::default()
    };
    match &cfg.function {
        None => {
            let x0 = MatrixPoint::from_coords(m22(), vec![0.13, -0.07, 0.05, 0.21])?;
            for h in corpus().into_iter().filter(|h| h.flags.rank_one_convex && h.accepts(m22())) {
                cases.push((Target::Handle(h), x0.clone(), true, base));
            }
            cases.push((Target::Handle(handle("neg_half_norm_sq")?), x0, false, base));
        }
        Some(name) => {
            let target = resolve(name)?;
            let domain = target.domain(2.0, 3, Clip::Ball);
            let sampler = match &target {
                Target::Field(_) => LemmaSampler {
                    radius: domain.radius / 2.0,
                    ..base
                },
                Target::Handle(_) => base,
            };
            cases.push((target, domain.center, true, sampler));
        }
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut certs = Vec::new();
    for (target, x0, expect_pass, sampler) in &cases {
        let kind = if x0.shape.symmetric {
            SplitKind::Coordinate
        } else {
            SplitKind::Column
        };
        let f = target.function();
        let g = RadialMajorant::empirical(f, x0, sampler, kind)?;
        let cert = lower_bound_certify(f, &g, sampler, kind, None, tol)?;
        out.check(
            format!("lower bound {}", target.name()),
            cert.passed == *expect_pass,
            format!(
                "min slack {} (certificate {}expected to pass)",
                cert.min_slack,
                if *expect_pass { "" } else { "not " }
            ),
        );
        rows.push(vec![
            target.name().to_string(),
            format!("{:?}", cert.split).to_lowercase(),
            cert.n.to_string(),
            fmt_f64(cert.c),
            fmt_f64(cert.min_slack),
            cert.samples.to_string(),
            flag(*expect_pass),
            flag(cert.passed),
        ]);
        if cfg.function.is_some() {
            let rows = g.table().iter().map(|(r, v)| vec![fmt_f64(*r), fmt_f64(*v)]).collect();
            out.artifact("majorant", csv(&["radius", "g"], rows)?);
        }
        certs.push(json!({
            "function": cert.function,
            "n": cert.n,
            "C": cert.c,
            "min_slack": cert.min_slack,
            "witness": cert.witness.coords(),
            "samples": cert.samples,
            "passed": cert.passed,
        }));
    }
    out.artifact(
        "lemma",
        csv(
            &["function", "split", "n", "C", "min_slack", "samples", "expected_pass", "passed"],
            rows,
        )?,
    );
    out.record("certificates", certs)?;
    Ok(out)
}

fn appendix(cfg: &ExperimentConfig) -> Res<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // weak (1,1)
    let delta = AtomicMeasure1D::dirac(0.0, 1.0);
    let dts = [1.0, 2.0, 4.0, 8.0];
    let drep = weak_one_one_check(&delta, &dts)?;
    out.check(
        "weak11 delta exact",
        drep.rows.iter().all(|r| r.measure * r.t == 2.0),
        format!("measure*t = {:?}", drep.rows.iter().map(|r| r.measure * r.t).collect::<Vec<_>>()),
    );
    let mut wrows = Vec::new();
    let push_rows = |rows: &mut Vec<Vec<String>>, id: &str, rep: &rankone_core::oned::WeakReport| {
        for r in &rep.rows {
            rows.push(vec![
                id.to_string(),
                fmt_f64(r.t),
                fmt_f64(r.measure),
                fmt_f64(r.bound),
                fmt_f64(r.constant),
                fmt_f64(r.local_measure),
                fmt_f64(r.truncated_measure),
                flag(r.holds),
            ]);
        }
    };
    push_rows(&mut wrows, "delta", &drep);
    let ts = log_grid(1.0, 10.0, 6);
    let mut atoms = Vec::new();
    let mut all_hold = true;
    let mut constant: f64 = 0.0;
    let mut local_failures = 0;
    for i in 0..100 {
        let mu = AtomicMeasure1D::random(&mut rng, 5, 2.0);
        let rep = weak_one_one_check(&mu, &ts)?;
        all_hold &= rep.holds;
        constant = constant.max(rep.empirical_constant);
        local_failures += rep.rows.iter().filter(|r| r.above_local_mass && !r.local_inclusion).count();
        push_rows(&mut wrows, &i.to_string(), &rep);
        for (l, m) in mu.atoms() {
            atoms.push(vec![i.to_string(), fmt_f64(*l), fmt_f64(*m)]);
        }
    }
    out.check(
        "weak11 random measures",
        all_hold,
        format!("largest |{{M mu > t}}| t / mu(R) = {constant}"),
    );
    out.artifact(
        "weak11",
        csv(
            &["measure", "t", "superlevel_measure", "bound", "constant", "local_measure", "truncated_measure", "holds"],
            wrows,
        )?,
    );
    out.artifact("atoms", csv(&["measure", "location", "mass"], atoms)?);
    let mut srows = Vec::new();
    for t in dts {
        for (a, b) in superlevel_set(&delta, t)?.intervals {
            srows.push(vec![fmt_f64(t), fmt_f64(a), fmt_f64(b)]);
        }
    }
    out.artifact("delta_superlevel", csv(&["t", "start", "end"], srows)?);
    out.record(
        "weak11",
        json!({"delta": drep, "random_constant": constant, "localized_inclusion_failures": local_failures}),
    )?;

    // convex Taylor chain
    let hs: Vec<f64> = (1..=20).map(|k| k as f64 / 10.0).collect();
    let mut trows = Vec::new();
    let taylor = |name: &str, f: &PLConvex1D, rows: &mut Vec<Vec<String>>| -> Res<rankone_core::oned::TaylorReport> {
        let rep = convex_taylor_check(f, &hs)?;
        for r in &rep.rows {
            let link = |l: Link| format!("{l:?}").to_lowercase();
            rows.push(vec![
                name.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.f_plus),
                fmt_f64(r.mass_plus),
                fmt_f64(r.f_minus),
                fmt_f64(r.mass_minus),
                fmt_f64(rep.maximal_at_zero),
                flag(r.first_links),
                link(r.last_plus),
                link(r.last_minus),
            ]);
        }
        Ok(rep)
    };
    let abs = taylor("abs", &PLConvex1D::kink(0.0, 2.0)?, &mut trows)?;
    out.check("taylor abs", abs.holds && abs.vacuous, "vacuous last link flagged");
    let shifted = taylor(
        "shifted_kink",
        &PLConvex1D::new(vec![0.5], vec![0.0, 1.0], (0.0, 0.0))?,
        &mut trows,
    )?;
    out.check(
        "taylor shifted_kink",
        shifted.holds && !shifted.vacuous && shifted.maximal_at_zero == 2.0,
        format!("M f''(0) = {}", shifted.maximal_at_zero),
    );
    let mut random_ok = true;
    for i in 0..50 {
        let f = PLConvex1D::random(&mut rng, 6, 2.0).normalized_at_zero();
        random_ok &= taylor(&format!("random_{i}"), &f, &mut trows)?.holds;
    }
    out.check("taylor random", random_ok, "50 random normalized PL functions");
    out.artifact(
        "taylor",
        csv(
            &["function", "h", "f_plus", "mass_plus", "f_minus", "mass_minus", "maximal_at_zero", "first_links", "last_plus", "last_minus"],
            trows,
        )?,
    );

    // l1 geometry
    let l1 = l1_ball_containment(4, 100_000, cfg.seed)?;
    out.check(
        "l1 ball n=4",
        l1.holds && l1.equality_reproduced,
        format!("max ratio {} <= {}", l1.max_ratio, l1.sqrt_n),
    );
    out.artifact(
        "l1",
        csv(
            &["n", "samples", "max_ratio", "sqrt_n", "equality_ratio"],
            vec![vec![
                l1.n.to_string(),
                l1.samples.to_string(),
                fmt_f64(l1.max_ratio),
                fmt_f64(l1.sqrt_n),
                fmt_f64(l1.equality_ratio),
            ]],
        )?,
    );
    out.record("l1", &l1)?;

    // Fubini tail
    let name = cfg.function.as_deref().unwrap_or("abs_x11");
    let target = resolve(name)?;
    let shape = match &target {
        Target::Handle(h) => {
            let line = MatrixShape::new(1, 2)?;
            if h.accepts(line) {
                line
            } else {
                h.default_shape()
            }
        }
        Target::Field(_) => target.shape(),
    };
    let fopts = FubiniOptions {
        seed: cfg.seed,
        ..FubiniOptions::default()
    };
    let t_grid = match &cfg.t_grid {
        Some(t) => t.clone(),
        None => {
            let lo = 1.2 * fubini_threshold(target.function(), shape, &fopts)?.max(1.0);
            log_grid(lo, 10.0 * lo, 6)
        }
    };
    let fub = fubini_tail_experiment(target.function(), shape, &t_grid, &fopts)?;
    out.check("fubini non-increasing", fub.nonincreasing, format!("{:?}", fub.rows.iter().map(|r| r.measure).collect::<Vec<_>>()));
    out.check("fubini inclusion", fub.inclusion_holds, "axis and hull bounds at points outside E_t");
    if cfg.function.is_none() {
        out.check(
            "fubini slope abs_x11",
            fub.slope().is_some_and(|s| (s + 1.0).abs() <= 0.1),
            format!("log-log slope {:?}", fub.slope()),
        );
    }
    out.artifact("fubini", fub.to_csv()?);
    let irows = fub
        .inclusion
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                r.checked.to_string(),
                r.inside.to_string(),
                fmt_f64(r.min_axis_value),
                fmt_f64(r.max_axis_ratio),
                fmt_f64(r.max_hull_ratio),
                flag(r.holds),
            ]
        })
        .collect();
    out.artifact(
        "fubini_inclusion",
        csv(
            &["t", "checked", "inside", "min_axis_value", "max_axis_ratio", "max_hull_ratio", "holds"],
            irows,
        )?,
    );
    out.record("fubini", &fub)?;
    Ok(out)
}
