//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p eiconv --test acceptance -- --nocapture` to see
//! the summary lines.

use std::time::{Duration, Instant};

use eiconv::harness::{
    adversarial_lower_bound, divergence_experiment, fit_rate, mann_kendall, median, mesh_norm,
    random_mesh_experiment, run_trials, DivergenceOptions,
};
use eiconv::{
    expected_improvement, tau, DesignSet, Domain, KernelFamily, KernelSpec, MaternNu, Objective,
    ObjectiveConfig, Point, Posterior, PriorParams, RkhsSpanFunction, StrategyConfig, StrategyState,
    Variant,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {title} | {detail}");
}

fn random_family<R: Rng>(rng: &mut R) -> KernelFamily {
    match rng.random_range(0..5) {
        0 => KernelFamily::Matern(MaternNu::Half),
        1 => KernelFamily::Matern(MaternNu::ThreeHalves),
        2 => KernelFamily::Matern(MaternNu::FiveHalves),
        3 => KernelFamily::Matern(MaternNu::SevenHalves),
        _ => KernelFamily::Gaussian,
    }
}

/// Gaussian length-scales stay short so that Gram matrices of up to ~20
/// separated points factorize without jitter.
fn random_spec<R: Rng>(rng: &mut R, d: usize) -> KernelSpec {
    let family = random_family(rng);
    let range = match family {
        KernelFamily::Gaussian => 0.08..0.2,
        _ => 0.15..0.6,
    };
    let theta = (0..d).map(|_| rng.random_range(range.clone())).collect();
    KernelSpec::new(family, theta).unwrap()
}

/// Points in the unit box with pairwise ∞-distance at least `gap`.
fn separated_points<R: Rng>(rng: &mut R, n: usize, d: usize, gap: f64) -> Vec<Point> {
    let domain = Domain::unit(d);
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    while pts.len() < n {
        let x = domain.sample_uniform(rng);
        let far = pts
            .iter()
            .all(|p| p.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) >= gap);
        if far {
            pts.push(x);
        }
    }
    pts
}

fn random_span<R: Rng>(rng: &mut R, spec: &KernelSpec, m: usize) -> RkhsSpanFunction {
    let d = spec.dim();
    let centers = separated_points(rng, m, d, 0.05);
    let weights = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    RkhsSpanFunction::new(spec.clone(), centers, weights, rng.random_range(-2.0..2.0)).unwrap()
}

fn fit_on(spec: &KernelSpec, points: &[Point], f: impl Fn(&[f64]) -> f64) -> Posterior {
    let values = points.iter().map(|p| f(p)).collect();
    Posterior::fit(spec.clone(), DesignSet::new(points.to_vec(), values).unwrap()).unwrap()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

#[test]
fn c01_interpolation_matches_kkt_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_pred, mut worst_rss, mut worst_interp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(2..=6);
        let spec = random_spec(&mut rng, d);
        let points = separated_points(&mut rng, n, d, 0.05);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let model = Posterior::fit(spec.clone(), DesignSet::new(points.clone(), z.clone()).unwrap()).unwrap();

        // [V 1; 1ᵀ 0] [λ; μ] = [z; 0] are the stationarity conditions of
        // min λᵀVλ subject to μ1 + Vλ = z.
        let v = spec.gram(&points).unwrap();
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        kkt.view_mut((0, 0), (n, n)).copy_from(&v);
        for i in 0..n {
            kkt[(i, n)] = 1.0;
            kkt[(n, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from_slice(&z);
        let sol = kkt.lu().solve(&rhs).expect("KKT system is nonsingular");
        let lambda = sol.rows(0, n).into_owned();
        let mu = sol[n];
        let optimum = lambda.dot(&(&v * &lambda));
        worst_rss = worst_rss.max((optimum - model.reduced_ss()).abs());

        for (p, zi) in points.iter().zip(&z) {
            worst_interp = worst_interp.max((model.predict_mean(p).unwrap() - zi).abs());
        }
        for _ in 0..20 {
            let x = Domain::unit(d).sample_uniform(&mut rng);
            let kx = spec.cross(&points, &x).unwrap();
            let oracle = mu + kx.dot(&lambda);
            worst_pred = worst_pred.max((oracle - model.predict_mean(&x).unwrap()).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_pred <= 1e-8 && worst_rss <= 1e-8 && worst_interp <= 1e-8 && within(elapsed, 10);
    report(
        1,
        "minimal-norm interpolant equals KKT oracle",
        pass,
        format!("max |Δpred| {worst_pred:.2e}, max |Δrss| {worst_rss:.2e}, max interp err {worst_interp:.2e}, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn c02_error_bound_and_equality_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_slack = f64::INFINITY;
    let mut worst_witness = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=2);
        let spec = random_spec(&mut rng, d);
        let m = rng.random_range(3..=10);
        let f = random_span(&mut rng, &spec, m);
        let r = f.norm();
        let keep = rng.random_range(1..=m);
        let observed: Vec<Point> = f.centers()[..keep].to_vec();
        let model = fit_on(&spec, &observed, |x| f.eval(x));
        for _ in 0..100 {
            let x = Domain::unit(d).sample_uniform(&mut rng);
            let m = model.predict(&x).unwrap();
            let slack = m.sd() * r + 1e-8 - (f.eval(&x) - m.mean).abs();
            worst_slack = worst_slack.min(slack);
        }

        // Witness: e = k_x − Σ wᵢ k_{xᵢ} with the predictor's weights w(x).
        let x = loop {
            let x = Domain::unit(d).sample_uniform(&mut rng);
            if observed.iter().all(|p| p.iter().zip(&x).any(|(a, b)| (a - b).abs() > 1e-3)) {
                break x;
            }
        };
        let v = spec.gram(&observed).unwrap();
        let vinv = v.clone().try_inverse().unwrap();
        let ones = DVector::<f64>::from_element(keep, 1.0);
        let kx = spec.cross(&observed, &x).unwrap();
        let a = ones.dot(&(&vinv * &ones));
        let gap = 1.0 - ones.dot(&(&vinv * &kx));
        let w = &vinv * (&kx + &ones * (gap / a));
        let mut centers = vec![x.clone()];
        centers.extend(observed.iter().cloned());
        let mut weights = vec![1.0];
        weights.extend(w.iter().map(|wi| -wi));
        let g = RkhsSpanFunction::new(spec.clone(), centers, weights, 0.0).unwrap();
        let g_model = fit_on(&spec, &observed, |p| g.eval(p));
        let err = (g.eval(&x) - g_model.predict_mean(&x).unwrap()).abs();
        let bound = g_model.predict_sd(&x).unwrap() * g.norm();
        worst_witness = worst_witness.max((err - bound).abs());
    }
    let pass = worst_slack >= 0.0 && worst_witness <= 1e-6;
    report(
        2,
        "|f − f̂| ≤ s·‖f‖ with equality witness",
        pass,
        format!("min slack {worst_slack:.2e}, max witness gap {worst_witness:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c03_reduced_ss_monotone_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_drop, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..20 {
        let d = rng.random_range(1..=2);
        let spec = random_spec(&mut rng, d);
        let m = rng.random_range(2..=8);
        let f = random_span(&mut rng, &spec, m);
        let bound = f.norm() * f.norm();
        let mut pool: Vec<Point> = f.centers().to_vec();
        pool.extend(separated_points(&mut rng, 8, d, 0.05));
        let pool: Vec<Point> = pool
            .iter()
            .enumerate()
            .filter(|(i, p)| pool[..*i].iter().all(|q| q.iter().zip(p.iter()).any(|(a, b)| (a - b).abs() > 1e-3)))
            .map(|(_, p)| p.clone())
            .collect();
        let mut order: Vec<usize> = (0..pool.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let first = &pool[order[0]];
        let mut model = fit_on(&spec, std::slice::from_ref(first), |x| f.eval(x));
        let mut prev = model.reduced_ss();
        for &i in &order[1..] {
            model = model.extend(pool[i].clone(), f.eval(&pool[i])).unwrap();
            let rss = model.reduced_ss();
            worst_drop = worst_drop.max(prev - rss);
            worst_excess = worst_excess.max(rss - bound);
            prev = rss;
        }
    }
    let pass = worst_drop <= 1e-8 && worst_excess <= 1e-8;
    report(
        3,
        "reduced sum of squares non-decreasing and ≤ λᵀVλ",
        pass,
        format!("max decrease {worst_drop:.2e}, max excess over λᵀVλ {worst_excess:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c04_ei_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut lower_gap, mut upper_gap) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..20 {
        let d = rng.random_range(1..=2);
        let spec = random_spec(&mut rng, d);
        let m = rng.random_range(2..=8);
        let f = random_span(&mut rng, &spec, m);
        let r = f.norm();
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let n = rng.random_range(1..=8);
        let design = separated_points(&mut rng, n, d, 0.05);
        let model = fit_on(&spec, &design, |x| f.eval(x));
        let params = PriorParams::new(sigma, spec.clone()).unwrap();
        let z_best = model.design().best_value();
        let ratio = tau(-r / sigma) / tau(r / sigma);
        for _ in 0..100 {
            let x = Domain::unit(d).sample_uniform(&mut rng);
            let ei = expected_improvement(&model, &params, &x).unwrap();
            let s = model.predict_sd(&x).unwrap();
            let imp = (z_best - f.eval(&x)).max(0.0);
            let lower = (imp - r * s).max(ratio * imp);
            let upper = imp + (r + sigma) * s;
            lower_gap = lower_gap.min(ei - (lower - 1e-8));
            upper_gap = upper_gap.min(upper + 1e-8 - ei);
        }
    }
    let pass = lower_gap >= 0.0 && upper_gap >= 0.0;
    report(
        4,
        "EI lies between the improvement sandwich bounds",
        pass,
        format!("min lower slack {lower_gap:.2e}, min upper slack {upper_gap:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c05_length_scale_scaling_of_reduced_ss() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let d = rng.random_range(1..=2);
        let spec = random_spec(&mut rng, d);
        let n = rng.random_range(2..=8);
        let points = separated_points(&mut rng, n, d, 0.08);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let base = Posterior::fit(spec.clone(), DesignSet::new(points.clone(), z.clone()).unwrap()).unwrap();
        for shrink in [2.0, 5.0] {
            let theta: Vec<f64> = spec.theta().iter().map(|t| t / shrink).collect();
            let narrow = spec.with_theta(theta).unwrap();
            let ratio = shrink.powi(d as i32);
            let model = Posterior::fit(narrow, DesignSet::new(points.clone(), z.clone()).unwrap()).unwrap();
            let bound = ratio * base.reduced_ss();
            worst = worst.max((model.reduced_ss() - bound) / bound.max(f64::MIN_POSITIVE));
        }
    }
    let pass = worst <= 1e-10;
    report(
        5,
        "R̂²(θ′) ≤ ∏(θ/θ′)·R̂²(θ) for θ′ = θ/2, θ/5",
        pass,
        format!("max relative excess {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c06_variance_bound_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = f64::NEG_INFINITY;
    for design_ix in 0..20 {
        let d = if design_ix < 10 { 1 } else { 2 };
        let spec = random_spec(&mut rng, d);
        let n = rng.random_range(1..=10);
        let points = separated_points(&mut rng, n, d, 0.03);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = Posterior::fit(spec.clone(), DesignSet::new(points.clone(), values).unwrap()).unwrap();
        let grid: Vec<Point> = if d == 1 {
            (0..1000).map(|i| vec![i as f64 / 999.0]).collect()
        } else {
            (0..40)
                .flat_map(|i| (0..25).map(move |j| vec![i as f64 / 39.0, j as f64 / 24.0]))
                .collect()
        };
        for x in &grid {
            let s2 = model.predict_sd(x).unwrap().powi(2);
            for p in &points {
                let t: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
                let bound = 2.0 * (1.0 - spec.eval_scaled(&t).unwrap());
                worst = worst.max(s2 - bound);
            }
        }
    }
    let pass = worst <= 1e-9;
    report(
        6,
        "s² ≤ 2(1 − K(x − xᵢ)) on 10³-point grids",
        pass,
        format!("max excess {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c07_adversary_loss_is_exact() {
    let nu = 0.5;
    let amplitude = 2.0;
    let mut lines = Vec::new();
    let mut pass = true;
    for variant in [Variant::Naive, Variant::EiFixed] {
        let config = StrategyConfig::new(variant, KernelSpec::matern(MaternNu::Half, vec![0.2]).unwrap());
        let mut losses = Vec::new();
        for k in [1, 2, 4] {
            let rep = adversarial_lower_bound(&config, k, nu, amplitude, 7).unwrap();
            let expected = amplitude * (2.0 * k as f64).powf(-nu);
            pass &= rep.replay_identical && (rep.loss - expected).abs() <= 1e-9;
            lines.push(format!("{variant} k={k} loss {:.6} replay {}", rep.loss, rep.replay_identical));
            losses.push(rep.loss);
        }
        for w in losses.windows(2) {
            pass &= (w[1] / w[0] - 2f64.powf(-nu)).abs() <= 1e-9;
        }
    }
    report(7, "adversarial loss equals C(2k)^−ν", pass, lines.join("; "));
    assert!(pass);
}

fn span_suite(family: KernelFamily, theta: f64) -> Vec<ObjectiveConfig> {
    (1..=5)
        .map(|seed| ObjectiveConfig::RandomSpan {
            kernel: KernelSpec::new(family, vec![theta]).unwrap(),
            centers: 8,
            seed,
        })
        .collect()
}

#[test]
fn c08_fixed_prior_rate_trend() {
    let start = Instant::now();
    let domain = Domain::unit(1);
    let kernel = KernelSpec::matern(MaternNu::Half, vec![0.1]).unwrap();
    let config = StrategyConfig::new(Variant::EiFixed, kernel.clone());
    let mut slopes = Vec::new();
    for obj in span_suite(KernelFamily::Matern(MaternNu::Half), 0.1) {
        let objective = Objective::build(obj, &domain).unwrap();
        let seeds: Vec<u64> = (0..20).collect();
        for rec in run_trials(&config, &objective, 500, &seeds).unwrap() {
            slopes.push(fit_rate(&rec, (50, 500)).unwrap());
        }
    }
    let med = median(&slopes);
    let elapsed = start.elapsed();
    let pass = med <= -0.3 && within(elapsed, 600);
    report(
        8,
        "fixed-prior EI regret slope over n ∈ [50, 500]",
        pass,
        format!("median slope {med:.3} over {} runs, {elapsed:.2?}", slopes.len()),
    );
    assert!(pass);
}

#[test]
fn c09_likelihood_scale_diverges_robust_scale_converges() {
    let report_ = divergence_experiment(200, 50, &DivergenceOptions::default()).unwrap();
    let (mle, robust) = (report_.mle.stuck_fraction, report_.robust.stuck_fraction);
    let separated = report_.separation() >= 0.5;
    let pass = separated && mle >= 0.8 && robust <= 0.2;
    report(
        9,
        "plateau-with-spike: likelihood scale stuck, robust scale finds the spike",
        pass,
        format!(
            "stuck fraction mle {mle:.2}, robust {robust:.2}, separation {:.2}",
            report_.separation()
        ),
    );
    assert!(pass);
}

#[test]
fn c10_epsilon_greedy_sanity() {
    let domain = Domain::unit(1);
    let kernel = KernelSpec::matern(MaternNu::FiveHalves, vec![0.1]).unwrap();
    let config = StrategyConfig::new(Variant::EiFixed, kernel).with_epsilon(0.1);
    let seeds: Vec<u64> = (0..10).collect();
    let n = 500usize;
    let h_limit = 5.0 * (n as f64).ln() / n as f64;
    let mut pass = true;
    let mut lines = Vec::new();
    let mut worst_h = 0.0f64;
    for (i, obj) in span_suite(KernelFamily::Matern(MaternNu::FiveHalves), 0.1).into_iter().enumerate() {
        let objective = Objective::build(obj, &domain).unwrap();
        let records = run_trials(&config, &objective, n, &seeds).unwrap();
        let at = |step: usize| median(&records.iter().map(|r| r.regret_at(step).unwrap()).collect::<Vec<_>>());
        let (r50, r500) = (at(50), at(500));
        pass &= r500 < r50;
        for rec in &records {
            worst_h = worst_h.max(mesh_norm(&rec.points(), &domain, 0).unwrap());
        }
        lines.push(format!("obj{i} {r50:.2e}→{r500:.2e}"));
    }
    pass &= worst_h <= h_limit;
    report(
        10,
        "ε-greedy EI: regret decreases and design fills space",
        pass,
        format!("median regret {}; max h₅₀₀ {worst_h:.4} ≤ {h_limit:.4}", lines.join(", ")),
    );
    assert!(pass);
}

#[test]
fn c11_random_mesh_norm_has_no_upward_trend() {
    let ladder = [100, 200, 500, 1000, 2000, 5000, 10000];
    let mut pass = true;
    let mut lines = Vec::new();
    for d in [1, 2] {
        let exp = random_mesh_experiment(&ladder, 50, d, 400, 11).unwrap();
        let trend = mann_kendall(&exp.rows.iter().map(|r| r.p95_normalized).collect::<Vec<_>>());
        pass &= trend.p_increasing > 0.05 && exp.monotone;
        let series: Vec<String> = exp.rows.iter().map(|r| format!("{:.3}", r.p95_normalized)).collect();
        lines.push(format!("d={d} S={} p={:.3} [{}]", trend.s, trend.p_increasing, series.join(" ")));
    }
    report(11, "normalized random mesh norm, Mann-Kendall", pass, lines.join("; "));
    assert!(pass);
}

fn drive(config: &StrategyConfig, domain: &Domain, seed: u64, steps: usize, f: impl Fn(&[f64]) -> f64) -> Vec<Point> {
    let mut state = StrategyState::new(config.clone(), domain.clone(), seed).unwrap();
    (0..steps)
        .map(|_| {
            let x = state.next_design_point().unwrap();
            state.observe(&x, f(&x)).unwrap();
            x
        })
        .collect()
}

#[test]
fn c12_scale_equivariance() {
    let domain = Domain::unit(1);
    let kernel = KernelSpec::matern(MaternNu::FiveHalves, vec![0.2]).unwrap();
    let robust = StrategyConfig::new(Variant::EiRobust, kernel.clone()).with_mle_grid(10);
    let fixed = StrategyConfig::new(Variant::EiFixed, kernel);
    let mut identical = true;
    let mut fixed_differs = false;
    for (i, obj) in span_suite(KernelFamily::Matern(MaternNu::FiveHalves), 0.2).into_iter().enumerate() {
        let objective = Objective::build(obj, &domain).unwrap();
        let f = |x: &[f64]| objective.eval(x);
        let g = |x: &[f64]| 3.0 * objective.eval(x) + 7.0;
        let seed = 40 + i as u64;
        identical &= drive(&robust, &domain, seed, 100, f) == drive(&robust, &domain, seed, 100, g);
        fixed_differs |= drive(&fixed, &domain, seed, 100, f) != drive(&fixed, &domain, seed, 100, g);
    }
    let pass = identical && fixed_differs;
    report(
        12,
        "robust EI invariant under z → 3z + 7, fixed-prior EI is not",
        pass,
        format!("robust sequences identical: {identical}; fixed-prior counterexample found: {fixed_differs}"),
    );
    assert!(pass);
}
