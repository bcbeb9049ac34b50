//! One line per acceptance criterion; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankone_cli::{run, Experiment, ExperimentConfig};
use rankone_core::convexity::{rank_one_convexity_check, separate_convexity_check, SegmentSampler};
use rankone_core::envelope::{
    cone_convolutions, derivative_fields, halving_radii, second_order_remainder, EnvelopeOptions, RemainderOptions,
};
use rankone_core::lemma::{lower_bound_certify, LemmaSampler, RadialMajorant, SplitKind};
use rankone_core::matrix::{corpus, find, Clip, Grid, GridSpec, MatrixPoint, MatrixShape, ScalarFunction};
use rankone_core::oned::{
    convex_taylor_check, fubini_tail_experiment, l1_ball_containment, weak_one_one_check, AtomicMeasure1D,
    FubiniOptions, PLConvex1D,
};
use rankone_core::paraboloid::{
    log_grid, tail_experiment, theta_field, theta_upper_on, ConstraintSet, EvalSampler, SolverOptions,
};

const SEED: u64 = 7;

type Verdict = Result<String, String>;

fn m22() -> MatrixShape {
    MatrixShape::new(2, 2).unwrap()
}

fn handle(name: &str) -> rankone_core::matrix::FunctionHandle {
    find(name).unwrap_or_else(|| panic!("missing corpus entry {name}"))
}

fn ensure(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn theta_on_quadratics() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, a0) in [("half_norm_sq_0.5", 0.5), ("half_norm_sq", 1.0), ("half_norm_sq_2", 2.0)] {
        let x0 = MatrixPoint::zeros(m22());
        let spec = GridSpec::new(x0.clone(), 1.0, 9, Clip::Ball);
        let t = theta_upper_on(&handle(name), &x0, &spec, &SolverOptions::default()).map_err(|e| e.to_string())?;
        ok &= t.converged && (t.opening - a0).abs() <= 0.02 * a0;
        parts.push(format!("{a0}->{:.6}", t.opening));
    }
    let elapsed = start.elapsed();
    ensure(
        ok && elapsed < Duration::from_secs(60),
        format!("{} in {:.2?}", parts.join(", "), elapsed),
    )
}

fn lemma_certificates() -> Verdict {
    let x0 = MatrixPoint::from_coords(m22(), vec![0.13, -0.07, 0.05, 0.21]).unwrap();
    let sampler = LemmaSampler {
        count: 10_000,
        seed: SEED,
        ..LemmaSampler::default()
    };
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for f in corpus().into_iter().filter(|f| f.flags.rank_one_convex && f.accepts(m22())) {
        let g = RadialMajorant::empirical(&f, &x0, &sampler, SplitKind::Column).map_err(|e| e.to_string())?;
        let cert = lower_bound_certify(&f, &g, &sampler, SplitKind::Column, Some(1.0), 1e-6).map_err(|e| e.to_string())?;
        if cert.samples < 10_000 || cert.n != 2 || !cert.passed {
            return Err(format!("{}: min slack {}", f.name(), cert.min_slack));
        }
        worst = worst.min(cert.min_slack);
        count += 1;
    }
    let neg = handle("neg_half_norm_sq");
    let g = RadialMajorant::empirical(&neg, &x0, &sampler, SplitKind::Column).map_err(|e| e.to_string())?;
    let control = lower_bound_certify(&neg, &g, &sampler, SplitKind::Column, Some(1.0), 1e-6).map_err(|e| e.to_string())?;
    ensure(
        !control.passed && worst >= -1e-6,
        format!(
            "{count} handles, worst min slack {worst:e}; control min slack {:.4} rejected",
            control.min_slack
        ),
    )
}

fn envelope_sandwich() -> Verdict {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut handles = 0;
    for f in corpus() {
        let spec = GridSpec::new(MatrixPoint::zeros(f.default_shape()), 0.75, 7, Clip::Ball);
        let grid = Grid::new(spec).map_err(|e| e.to_string())?;
        for s in derivative_fields(&f, &grid).map_err(|e| e.to_string())? {
            let pair = cone_convolutions(&s, 2.0, &EnvelopeOptions::default()).map_err(|e| e.to_string())?;
            let idem = pair.idempotence_defect().map_err(|e| e.to_string())?;
            worst = (
                worst.0.max(pair.order_violation()),
                worst.1.max(pair.lipschitz_excess()),
                worst.2.max(idem),
            );
        }
        handles += 1;
    }
    ensure(
        worst.0 == 0.0 && worst.1 <= 1e-12 && worst.2 <= 1e-12,
        format!(
            "{handles} handles: order {:e}, lipschitz excess {:e}, idempotence {:e}",
            worst.0, worst.1, worst.2
        ),
    )
}

fn weak_one_one() -> Verdict {
    let delta = AtomicMeasure1D::dirac(0.0, 1.0);
    let rep = weak_one_one_check(&delta, &[1.0, 2.0, 4.0, 8.0]).map_err(|e| e.to_string())?;
    if !rep.rows.iter().all(|r| r.measure * r.t == 2.0) {
        return Err(format!("delta: {:?}", rep.rows.iter().map(|r| r.measure * r.t).collect::<Vec<_>>()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let ts = log_grid(1.0, 10.0, 6);
    let mut constant: f64 = 0.0;
    for i in 0..100 {
        let mu = AtomicMeasure1D::random(&mut rng, 5, 2.0);
        let rep = weak_one_one_check(&mu, &ts).map_err(|e| e.to_string())?;
        if !rep.holds {
            return Err(format!("measure {i} breaks the bound"));
        }
        constant = constant.max(rep.empirical_constant);
    }
    Ok(format!("delta exact at t = 1, 2, 4, 8; 100 random measures, largest constant {constant:.12}"))
}

fn taylor_chain() -> Verdict {
    let hs: Vec<f64> = (1..=20).map(|k| k as f64 / 10.0).collect();
    let abs = convex_taylor_check(&PLConvex1D::kink(0.0, 2.0).unwrap(), &hs).map_err(|e| e.to_string())?;
    let shifted = PLConvex1D::new(vec![0.5], vec![0.0, 1.0], (0.0, 0.0)).unwrap();
    let shifted = convex_taylor_check(&shifted, &hs).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut random_ok = 0;
    for _ in 0..50 {
        let f = PLConvex1D::random(&mut rng, 6, 2.0).normalized_at_zero();
        if convex_taylor_check(&f, &hs).map_err(|e| e.to_string())?.holds {
            random_ok += 1;
        }
    }
    ensure(
        abs.holds && abs.vacuous && shifted.holds && !shifted.vacuous && random_ok == 50,
        format!(
            "|x| vacuous={} holds={}; shifted kink M f''(0)={} holds={}; random {random_ok}/50",
            abs.vacuous, abs.holds, shifted.maximal_at_zero, shifted.holds
        ),
    )
}

fn l1_geometry() -> Verdict {
    let rep = l1_ball_containment(4, 100_000, SEED).map_err(|e| e.to_string())?;
    ensure(
        rep.max_ratio <= 2.0 + 1e-12 && rep.equality_reproduced,
        format!("max ratio {:.9} <= 2, witness ratio {}", rep.max_ratio, rep.equality_ratio),
    )
}

fn tail_decay() -> Verdict {
    let start = Instant::now();
    let line = MatrixShape::new(1, 2).unwrap();
    let abs = handle("abs_x11");
    let fub = fubini_tail_experiment(
        &abs,
        line,
        &log_grid(7.0, 70.0, 6),
        &FubiniOptions {
            seed: SEED,
            ..FubiniOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let slope = fub.slope().ok_or("no Fubini fit")?;

    let spec = GridSpec::new(MatrixPoint::zeros(m22()), 1.0, 13, Clip::Ball);
    let cs = ConstraintSet::from_function(&abs, &spec).map_err(|e| e.to_string())?;
    let sampler = EvalSampler {
        count: 500,
        seed: SEED,
        radius: 0.5,
    };
    let field = theta_field(&abs, &sampler, &cs, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let rep = tail_experiment(&field, 1.0, &log_grid(1.0, 10.0, 8)).map_err(|e| e.to_string())?;
    let eps = rep.fitted_epsilon.ok_or("no tail fit")?;
    let nonincreasing = rep.measure.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = start.elapsed();
    ensure(
        (slope + 1.0).abs() <= 0.1 && fub.nonincreasing && eps >= 0.9 && nonincreasing && elapsed < Duration::from_secs(600),
        format!("Fubini slope {slope:.4}; theta tail epsilon {eps:.3} (non-increasing {nonincreasing}) in {elapsed:.2?}"),
    )
}

fn verifier_discrimination() -> Verdict {
    let domain = |shape| GridSpec::new(MatrixPoint::zeros(shape), 1.0, 9, Clip::Ball);
    let sampler = SegmentSampler {
        seed: SEED,
        ..SegmentSampler::default()
    };
    let check = |name: &str| {
        let f = handle(name);
        rank_one_convexity_check(&f, &domain(f.default_shape()), &sampler).map_err(|e| e.to_string())
    };
    let det = check("neg_det_2x2")?;
    let adet = check("abs_det_2x2")?;
    let neg = check("neg_half_norm_sq")?;
    let uv = handle("neg_uv");
    let sep = separate_convexity_check(&uv, &domain(uv.default_shape()), &sampler).map_err(|e| e.to_string())?;
    ensure(
        det.worst_violation <= 1e-9
            && adet.worst_violation <= 1e-9
            && neg.worst_violation >= 0.1
            && neg.witness.is_some()
            && sep.passed,
        format!(
            "-det {:e}, |det| {:e}, -|x|^2/2 {:.3} (witness {}), -uv separate {}",
            det.worst_violation,
            adet.worst_violation,
            neg.worst_violation,
            neg.witness.is_some(),
            sep.passed
        ),
    )
}

fn remainder() -> Verdict {
    let radii = halving_radii(0.25, 5);
    let opts = RemainderOptions::default();
    let quad_x0 = MatrixPoint::from_coords(m22(), vec![0.1, -0.2, 0.3, 0.0]).unwrap();
    let quad = second_order_remainder(&handle("half_norm_sq"), &quad_x0, &radii, &opts).map_err(|e| e.to_string())?;
    let zero = MatrixPoint::zeros(m22());
    let cubic = second_order_remainder(&handle("cubic_x11"), &zero, &radii, &opts).map_err(|e| e.to_string())?;
    let kink = second_order_remainder(&handle("abs_x11"), &zero, &radii, &opts).map_err(|e| e.to_string())?;
    let quad_max = quad.ratios.iter().cloned().fold(0.0, f64::max);
    let slope = cubic.slope.ok_or("no cubic slope")?;
    let halves = cubic.ratios.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() < 1e-6);
    ensure(
        quad_max < 1e-9 && halves && (slope - 1.0).abs() <= 0.2 && !kink.differentiable,
        format!(
            "quadratic max ratio {quad_max:e}; cubic slope {slope:.4}; kink differentiable={}",
            kink.differentiable
        ),
    )
}

fn csv_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for exp in Experiment::PIPELINES {
        let dir = root.join(exp.name());
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.extension().is_some_and(|x| x == "csv") {
                out.insert(
                    format!("{}/{}", exp.name(), p.file_name().unwrap().to_string_lossy()),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let mut runs = Vec::new();
    for threads in [1usize, 4, 4] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig {
            experiment: Experiment::All,
            seed: SEED,
            function: None,
            out: dir.path().to_path_buf(),
            grid_points: None,
            radius: None,
            tol: None,
            threads: Some(threads),
            eval_points: None,
            samples: None,
            t_grid: None,
        };
        let manifest = run(&cfg).map_err(|e| e.to_string())?;
        if !manifest.passed {
            return Err(format!("suite failed with {threads} threads"));
        }
        runs.push(csv_bytes(dir.path()));
    }
    let files = runs[0].len();
    ensure(
        files > 0 && runs.iter().all(|r| *r == runs[0]),
        format!("{files} CSV files byte-identical across 1, 4 and 4 threads"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("theta exactness on quadratics", theta_on_quadratics),
        ("lemma certificate", lemma_certificates),
        ("envelope sandwich", envelope_sandwich),
        ("weak (1,1)", weak_one_one),
        ("convex Taylor chain", taylor_chain),
        ("l1 geometry", l1_geometry),
        ("tail decay epsilon = 1", tail_decay),
        ("verifier discrimination", verifier_discrimination),
        ("second-order remainder", remainder),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(msg) => println!("[PASS] {:>2}. {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
