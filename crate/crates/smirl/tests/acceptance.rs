//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero when any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use smirl::pipeline::{
    evaluate, feature_sets, fit_normalizer, prepare_eval, sample_all, train_baseline_with, train_smirl, EvalSet,
    SampleRecord,
};
use smirl::synth::{generate_synthetic, rescale_theta, template_case, SynthCorpus, SyntheticSpec, Template};
use smirl_core::baselines::cioc::LaplaceTerms;
use smirl_core::baselines::{laplace_log_likelihood, BaselineConfig, ForwardConfig, Method};
use smirl_core::dynamics::{check_feasible, StateOf, FEASIBILITY_TOL};
use smirl_core::eval::{compare, feature_deviation_terms, mean_euclidean_distance, trajectory_likelihood, MethodReport};
use smirl_core::features::curvatures;
use smirl_core::geometry::Point2;
use smirl_core::irl::{gradient, log_partition, mean_log_likelihood, softmax_weights};
use smirl_core::rng::stream;
use smirl_core::sampler::{generate_sample_set, is_safe};
use smirl_core::{RewardParams, SamplerConfig, TrainConfig, VehicleParams};

type Outcome = (bool, String);

const NID_THETA: [f64; 4] = [-16.0, -8.0, -8.0, -4.0];
const ID_THETA: [f64; 6] = [-16.0, -8.0, -8.0, -4.0, -8.0, -8.0];
/// 130 cases, 100 for training and 30 held out.
const N_CASES: usize = 130;
const TEST_FRACTION: f64 = 30.0 / 130.0;
const BINS: usize = 5;
/// Outer-iteration cap of the baselines in the method comparison.
const BASELINE_MAX_ITERS: usize = 10;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

struct Bench {
    corpus: SynthCorpus,
    train: Vec<SampleRecord>,
    test: Vec<SampleRecord>,
    sampling: Duration,
}

fn bench(template: Template, theta: &[f64], noise: f64, seed: u64) -> Bench {
    let spec = SyntheticSpec {
        template,
        n_demos: N_CASES,
        theta_star: theta.to_vec(),
        beta: 1.0,
        noise,
        test_fraction: TEST_FRACTION,
        seed,
    };
    let cfg = SamplerConfig::default();
    let vp = VehicleParams::default();
    let corpus = generate_synthetic(&spec, &cfg, &vp).expect("synthetic corpus");
    let start = Instant::now();
    let (train, f1) = sample_all(&corpus.train, &cfg, &vp, seed + 1);
    let sampling = start.elapsed();
    let (test, f2) = sample_all(&corpus.test, &cfg, &vp, seed + 1);
    for f in f1.iter().chain(&f2) {
        println!("    note: {} not sampled: {}", f.id, f.reason);
    }
    Bench {
        corpus,
        train,
        test,
        sampling,
    }
}

fn train_cfg() -> TrainConfig {
    TrainConfig {
        l1_lambda: 0.0,
        ..TrainConfig::default()
    }
}

fn ac1_gradient() -> Outcome {
    let start = Instant::now();
    let vp = VehicleParams::default();
    let cfg = SamplerConfig {
        k_samples: 49,
        ..SamplerConfig::default()
    };
    let demos: Vec<_> = (0..5)
        .map(|i| {
            let id = format!("g{i}");
            template_case(Template::RoundaboutMerge, &id, &mut stream(5, "ac1", &id))
        })
        .collect();
    let (records, _) = sample_all(&demos, &cfg, &vp, 9);
    let norm = fit_normalizer(&records).unwrap();
    let (sets, _) = feature_sets(&records, &norm, None, 0).unwrap();
    let sizes: Vec<usize> = sets.iter().map(|s| s.members.len()).collect();
    let mut rng = stream(5, "ac1", "theta");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = gradient(&sets, &theta, 1.0, 0.0);
        let fd: Vec<f64> = (0..6)
            .map(|j| {
                let mut p = theta.clone();
                let mut m = theta.clone();
                p[j] += h;
                m[j] -= h;
                (mean_log_likelihood(&sets, &p, 1.0).unwrap() - mean_log_likelihood(&sets, &m, 1.0).unwrap()) / (2.0 * h)
            })
            .collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(err / scale);
    }
    let t = start.elapsed();
    (
        worst < 1e-6 && t < Duration::from_secs(10) && sizes.iter().all(|&n| n == 50),
        format!("set sizes {sizes:?}, worst relative error {worst:.2e}, {:.2} s", t.as_secs_f64()),
    )
}

fn ac2_partition() -> Outcome {
    let mut rng = stream(6, "ac2", "sets");
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let m = rng.random_range(1..=12);
        let rewards: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let members: Vec<Vec<f64>> = rewards.iter().map(|&r| vec![r]).collect();
        let z: f64 = rewards.iter().map(|r| r.exp()).sum();
        worst = worst.max((log_partition(&members, &[1.0], 1.0) - z.ln()).abs());
        for (w, r) in softmax_weights(&members, &[1.0], 1.0).iter().zip(&rewards) {
            worst = worst.max((w - r.exp() / z).abs());
        }
    }
    (worst <= 1e-12, format!("500 sets, worst deviation {worst:.2e}"))
}

fn held_out_ll(rp: &RewardParams, sets: &[EvalSet]) -> f64 {
    let r = evaluate("m", rp, sets).unwrap();
    r.cases.iter().map(|c| c.log_likelihood).sum::<f64>() / r.cases.len() as f64
}

fn recovery(name: &str, b: &Bench) -> (bool, String) {
    let t = Instant::now();
    let r = train_smirl(&b.train, 1.0, &train_cfg(), Some(BINS)).unwrap();
    let train_time = t.elapsed();
    let truth = rescale_theta(&b.corpus.truth.theta, &b.corpus.truth.normalizer, &r.normalizer);
    let cos = cosine(&r.outcome.theta, &truth);
    let sets = prepare_eval(&b.test, Some(BINS), 0).unwrap();
    let learned = RewardParams::new(r.outcome.theta.clone(), 1.0, r.normalizer.clone()).unwrap();
    let zero = RewardParams::new(vec![0.0; truth.len()], 1.0, r.normalizer.clone()).unwrap();
    let star = RewardParams::new(truth.clone(), 1.0, r.normalizer.clone()).unwrap();
    let (ll, ll0, ll_star) = (held_out_ll(&learned, &sets), held_out_ll(&zero, &sets), held_out_ll(&star, &sets));
    let gain = (ll - ll0) / ll0.abs();
    (
        cos > 0.9 && gain >= 0.2,
        format!(
            "{name}: {} train/{} test, theta* {} learned {} cos {cos:.4}, held-out mean LL {ll:.3} vs {ll0:.3} at theta=0 (+{:.0}%; theta* reaches {ll_star:.3}), converged {} in {} its, {:.2} s",
            b.train.len(),
            b.test.len(),
            fmt(&truth),
            fmt(&r.outcome.theta),
            100.0 * gain,
            r.outcome.converged,
            r.outcome.iterations,
            (b.sampling + train_time).as_secs_f64()
        ),
    )
}

fn method_reports(b: &Bench, sets: &[EvalSet]) -> Vec<MethodReport> {
    let mut reports = Vec::new();
    let t = Instant::now();
    let r = train_smirl(&b.train, 1.0, &train_cfg(), Some(BINS)).unwrap();
    println!("    smirl: {} its, converged {}, {:.1} s", r.outcome.iterations, r.outcome.converged, t.elapsed().as_secs_f64());
    let rp = RewardParams::new(r.outcome.theta, 1.0, r.normalizer).unwrap();
    reports.push(evaluate("smirl", &rp, sets).unwrap());
    for method in [Method::Cioc, Method::OptIrl] {
        let t = Instant::now();
        let cfg = BaselineConfig {
            train: TrainConfig {
                max_iters: BASELINE_MAX_ITERS,
                ..train_cfg()
            },
            ..BaselineConfig::default()
        };
        match train_baseline_with(method, &b.corpus.train, Some(&b.train), &cfg) {
            Ok((out, norm)) => {
                println!(
                    "    {}: {} its, converged {}, dropped {}, theta {}, {:.1} s",
                    method.name(),
                    out.outcome.iterations,
                    out.outcome.converged,
                    out.dropped.len(),
                    fmt(&out.outcome.theta),
                    t.elapsed().as_secs_f64()
                );
                let rp = RewardParams::new(out.outcome.theta, 1.0, norm).unwrap();
                reports.push(evaluate(method.name(), &rp, sets).unwrap());
            }
            Err(e) => println!("    {}: training failed: {e}", method.name()),
        }
    }
    reports
}

fn ac4_ordering(b: &Bench) -> Outcome {
    let sets = prepare_eval(&b.test, Some(BINS), 0).unwrap();
    let reports = method_reports(b, &sets);
    if reports.len() < 3 {
        return (false, "a baseline failed to train".into());
    }
    let c = compare(&reports).unwrap();
    let s = &c.summaries;
    let desc: Vec<String> = s
        .iter()
        .map(|m| format!("{} LL {:.2} wins {}", m.method, m.log_likelihood_sum, m.wins))
        .collect();
    let ties = c.winners.iter().filter(|w| w.tie).count();
    let pass = s[0].log_likelihood_sum > s[1].log_likelihood_sum
        && s[0].log_likelihood_sum > s[2].log_likelihood_sum
        && s[0].wins > s[1].wins
        && s[0].wins > s[2].wins;
    (pass, format!("{} ({} tied cases)", desc.join("; "), ties))
}

fn ac5_redistribution(b: &Bench) -> Outcome {
    let sets = prepare_eval(&b.test, Some(BINS), 0).unwrap();
    let without = train_smirl(&b.train, 1.0, &train_cfg(), None).unwrap();
    let with = train_smirl(&b.train, 1.0, &train_cfg(), Some(BINS)).unwrap();
    let rp = |o: &smirl::pipeline::SmirlOutcome| RewardParams::new(o.outcome.theta.clone(), 1.0, o.normalizer.clone()).unwrap();
    let reports = vec![
        evaluate("without", &rp(&without), &sets).unwrap(),
        evaluate("with", &rp(&with), &sets).unwrap(),
    ];
    let c = compare(&reports).unwrap();
    let (wo, w) = (&c.summaries[0], &c.summaries[1]);
    let mut dev = 0usize;
    for p in with.plans.iter().flatten() {
        for &n in &p.bin_counts {
            dev = dev.max(n.abs_diff(p.target));
        }
    }
    (
        w.log_likelihood_sum >= wo.log_likelihood_sum && w.wins >= wo.wins && dev <= 1,
        format!(
            "with: LL {:.2} wins {}; without: LL {:.2} wins {}; max bin deviation {dev}",
            w.log_likelihood_sum, w.wins, wo.log_likelihood_sum, wo.wins
        ),
    )
}

fn ac6_sampler() -> Outcome {
    let vp = VehicleParams::default();
    let cfg = SamplerConfig {
        k_samples: 50,
        ..SamplerConfig::default()
    };
    let templates = [Template::Straight, Template::Curve, Template::RoundaboutMerge];
    let mut samples = 0usize;
    let (mut collisions, mut infeasible, mut unanchored, mut accel, mut lateral) = (0, 0, 0, 0, 0);
    let mut worst_lat: f64 = 0.0;
    let mut failed = 0;
    for i in 0..20 {
        let id = format!("ac6-{i}");
        let d = template_case(templates[i % 3], &id, &mut stream(77, "ac6", &id));
        let Ok(g) = generate_sample_set(&d, &cfg, &vp, i as u64) else {
            failed += 1;
            continue;
        };
        for m in g.set.members.iter().filter(|m| !m.is_demonstration()) {
            let t = &m.trajectory;
            samples += 1;
            collisions += usize::from(!is_safe(t, &d.scenario, &cfg));
            infeasible += usize::from(!check_feasible(t, &vp, FEASIBILITY_TOL));
            unanchored += usize::from(t.states[0] != d.ego.states[0] || t.t0 != d.ego.t0);
            let bad_a = t.states.windows(2).any(|w| {
                let a = (w[1].v - w[0].v) / t.dt;
                a < cfg.a_min - 1e-9 || a > cfg.a_max + 1e-9
            });
            accel += usize::from(bad_a);
            let states: Vec<_> = t.states.iter().map(StateOf::<f64>::constant).collect();
            let kappa = curvatures(&states);
            let mut bad_lat = false;
            for (s, k) in t.states.iter().zip(&kappa) {
                let ratio = s.v * s.v * k.abs() / cfg.a_lat_max;
                worst_lat = worst_lat.max(ratio);
                bad_lat |= ratio > 1.0 + 1e-6;
            }
            lateral += usize::from(bad_lat);
        }
    }
    (
        samples >= 1000 && failed == 0 && collisions + infeasible + unanchored + accel + lateral == 0,
        format!(
            "{samples} samples from {} scenarios: {collisions} collisions, {infeasible} infeasible, {unanchored} unanchored, {accel} acceleration and {lateral} lateral violations (max v^2 k / a_lat_max {worst_lat:.4})",
            20 - failed
        ),
    )
}

fn ac7_speed(nid: &Bench) -> Outcome {
    let vp = VehicleParams::default();
    let cfg = SamplerConfig::default();
    let demos: Vec<_> = nid.corpus.train.clone();
    let t = Instant::now();
    let (records, _) = sample_all(&demos, &cfg, &vp, 1);
    let sampling = t.elapsed();
    let n_samples: usize = records.iter().map(|r| r.set.members.len() - 1).sum();
    let smirl = train_smirl(&records, 1.0, &train_cfg(), Some(BINS)).unwrap();
    let smirl_time = t.elapsed();
    let budget = smirl_time * 5;
    // Opt-IRL runs with growing outer-iteration caps until it either finishes
    // or exceeds five times the SMIRL time.
    let mut cap = 0;
    let (opt_time, finished) = loop {
        let bcfg = BaselineConfig {
            train: TrainConfig {
                max_iters: cap,
                ..train_cfg()
            },
            forward: ForwardConfig::default(),
            ..BaselineConfig::default()
        };
        let t = Instant::now();
        let out = train_baseline_with(Method::OptIrl, &demos, Some(&records), &bcfg).unwrap();
        let e = t.elapsed();
        if e > budget || out.0.outcome.converged {
            break (e, out.0.outcome.converged);
        }
        cap = (cap * 2).max(1);
    };
    (
        sampling < Duration::from_secs(120) && opt_time > budget && smirl.outcome.converged,
        format!(
            "{} demos x {} samples sampled in {:.2} s; SMIRL end-to-end {:.2} s; Opt-IRL ({} outer its, 500-step forward optimizer, finished {finished}) {:.2} s = {:.1}x",
            records.len(),
            n_samples / records.len().max(1),
            sampling.as_secs_f64(),
            smirl_time.as_secs_f64(),
            cap,
            opt_time.as_secs_f64(),
            opt_time.as_secs_f64() / smirl_time.as_secs_f64()
        ),
    )
}

/// `log det` and `g' A^-1 g` by hand Cholesky.
fn chol_terms(a: &[Vec<f64>], g: &[f64]) -> (f64, f64) {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (g[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let logdet = 2.0 * (0..n).map(|i| l[i][i].ln()).sum::<f64>();
    (logdet, y.iter().map(|v| v * v).sum())
}

fn ac8_laplace() -> Outcome {
    let mut rng = stream(8, "ac8", "fixtures");
    let mut worst: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for dim in 1..=6 {
        for _ in 0..10 {
            let beta: f64 = rng.random_range(0.5..2.0);
            // A = B B' + dim I is positive definite.
            let b: Vec<Vec<f64>> = (0..dim).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let a: Vec<Vec<f64>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| (0..dim).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { dim as f64 } else { 0.0 })
                        .collect()
                })
                .collect();
            let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (logdet, quad) = chol_terms(&a, &g);
            let n = dim as f64;
            let oracle = -0.5 * beta * quad - 0.5 * n * (2.0 * std::f64::consts::PI).ln() + 0.5 * (n * beta.ln() + logdet);
            let terms = LaplaceTerms {
                g: DVector::from_column_slice(&g),
                h: -DMatrix::from_fn(dim, dim, |i, j| a[i][j]),
            };
            let got = laplace_log_likelihood(&terms, beta).unwrap();
            worst = worst.max((got - oracle).abs());
            if dim <= 2 {
                worst_quad = worst_quad.max((got - quadrature_ll(&a, &g, beta)).abs());
            }
        }
    }
    (
        worst <= 1e-8 && worst_quad <= 1e-8,
        format!("60 fixtures (dims 1-6): worst deviation {worst:.2e} from the Gaussian closed form, {worst_quad:.2e} from quadrature (dims 1-2)"),
    )
}

/// Log-likelihood of the expansion point under `exp(beta (g'd - d'Ad/2))`,
/// with the normalizer integrated numerically by the trapezoid rule.
fn quadrature_ll(a: &[Vec<f64>], g: &[f64], beta: f64) -> f64 {
    let dim = g.len();
    let f = |d: &[f64]| -> f64 {
        let lin: f64 = g.iter().zip(d).map(|(g, d)| g * d).sum();
        let mut q = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                q += d[i] * a[i][j] * d[j];
            }
        }
        (beta * (lin - 0.5 * q)).exp()
    };
    let (lo, hi, n) = (-12.0, 12.0, 2400);
    let h = (hi - lo) / n as f64;
    let mut z = 0.0;
    if dim == 1 {
        for i in 0..=n {
            z += f(&[lo + i as f64 * h]);
        }
        z *= h;
    } else {
        for i in 0..=n {
            for j in 0..=n {
                z += f(&[lo + i as f64 * h, lo + j as f64 * h]);
            }
        }
        z *= h * h;
    }
    -z.ln()
}

fn ac9_metrics() -> Outcome {
    let mut worst: f64 = 0.0;
    let fd = feature_deviation_terms(&[2.0], &[3.0], 1);
    worst = worst.max((fd[0].unwrap() - 0.5).abs());
    for n in [1usize, 4, 16, 50] {
        let gt: Vec<Point2> = (0..n).map(|k| Point2::new(k as f64, 0.0)).collect();
        let unit: Vec<Point2> = gt.iter().map(|p| Point2::new(p.x, 1.0)).collect();
        let pyth: Vec<Point2> = gt.iter().map(|p| Point2::new(p.x + 3.0, 4.0)).collect();
        let (m1, _) = mean_euclidean_distance(&gt, &unit).unwrap();
        let (m5, _) = mean_euclidean_distance(&gt, &pyth).unwrap();
        worst = worst.max((m1 - 1.0 / (n as f64).sqrt()).abs());
        worst = worst.max((m5 - 5.0 / (n as f64).sqrt()).abs());
    }
    for m in [1usize, 3, 10, 200] {
        worst = worst.max((trajectory_likelihood(0.7, &vec![0.7; m], 1.0) - 1.0 / (m as f64 + 1.0)).abs());
    }
    let e = std::f64::consts::E;
    worst = worst.max((trajectory_likelihood(1.0, &[0.0], 1.0) - e / (e + 1.0)).abs());
    (worst <= 1e-12, format!("FD, MED and likelihood fixtures, worst deviation {worst:.2e}"))
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_smirl"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn pipeline(root: &Path) -> bool {
    let s = |p: &str| root.join(p).to_string_lossy().into_owned();
    run_cli(&["synth-gen", "--scenario", "roundabout-merge", "--n-demos", "30", "--theta=-8,-4,-4,-2,-4,-4", "--seed", "21", "--out", &s("c")])
        && run_cli(&["sample", "--demos", &s("c/tracks.csv"), "--geometry", &s("c/geometry.toml"), "--seed", "4", "--out", &s("s")])
        && run_cli(&["sample", "--demos", &s("c/test_tracks.csv"), "--geometry", &s("c/geometry.toml"), "--seed", "4", "--out", &s("st")])
        && run_cli(&["train", "--samples", &s("s/samples.json"), "--seed", "4", "--out", &s("m")])
        && run_cli(&[
            "eval",
            "--theta",
            &s("m/theta.toml"),
            "--test-demos",
            &s("c/test_tracks.csv"),
            "--geometry",
            &s("c/geometry.toml"),
            "--samples",
            &s("st/samples.json"),
            "--out",
            &s("e"),
        ])
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn ac10_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if !pipeline(a.path()) || !pipeline(b.path()) {
        return (false, "pipeline run failed".into());
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    (
        fa.len() == fb.len() && differing.is_empty() && !fa.is_empty(),
        format!("{} artifacts compared, {} differ {differing:?}", fa.len(), differing.len()),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} {name}: {}", if o.0 { "PASS" } else { "FAIL" }, o.1);
        results.push((name, o));
    };
    report("AC1 gradient correctness", ac1_gradient());
    report("AC2 partition oracle", ac2_partition());
    let t = Instant::now();
    let nid = bench(Template::Straight, &NID_THETA, 0.0, 31);
    let id = bench(Template::RoundaboutMerge, &ID_THETA, 0.0, 32);
    let (p1, d1) = recovery("NID", &nid);
    let (p2, d2) = recovery("ID", &id);
    let total = t.elapsed();
    report(
        "AC3 reward recovery",
        (p1 && p2 && total < Duration::from_secs(300), format!("{d1}; {d2}; total {:.1} s", total.as_secs_f64())),
    );
    let noisy = bench(Template::RoundaboutMerge, &ID_THETA, 0.1, 33);
    report("AC4 method ordering", ac4_ordering(&noisy));
    report("AC5 re-distribution ablation", ac5_redistribution(&id));
    report("AC6 sampler safety and feasibility", ac6_sampler());
    report("AC7 sampling and training speed", ac7_speed(&nid));
    report("AC8 Laplace exactness on quadratics", ac8_laplace());
    report("AC9 metric fixtures", ac9_metrics());
    report("AC10 determinism", ac10_determinism());
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.0).map(|(n, _)| *n).collect();
    println!("acceptance: {} passed, {} failed", results.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
