//! Command-line interface. Stages exchange files; every command writes a
//! `manifest.json` next to its outputs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error or inputs that
//! do not belong together.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use smirl_core::baselines::{BaselineConfig, ForwardConfig, Method};
use smirl_core::eval::{compare, summarize};
use smirl_core::{Demonstration, FeatureKind, SamplerConfig, TrainConfig, VehicleParams};

use crate::error::{io, Error, Result};
use crate::formats::{
    history_csv, sha256_hex, to_json, to_toml, write_bytes, ComparisonFile, Manifest, Report, SamplesFile,
    ThetaArtifact, TruthFile, FORMAT_VERSION,
};
use crate::geometry::{GeometryFile, SiteGeometry};
use crate::pipeline::{
    fit_normalizer, flatten, prepare_eval, sample_all, train_baseline_with, train_smirl, Failure, SampleRecord,
};
use crate::synth::{generate_synthetic, SyntheticSpec, Template};
use crate::tracks::{demonstration_rows, load_track_file, write_tracks};

#[derive(Debug, Parser)]
#[command(name = "smirl", version, about = "Sampling-based maximum-entropy IRL for driving")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus from known reward weights.
    SynthGen(SynthArgs),
    /// Generate sample sets for demonstrations.
    Sample(SampleArgs),
    /// Re-distribute sample sets in feature space.
    Redistribute(RedistributeArgs),
    /// Learn reward weights.
    Train(TrainArgs),
    /// Score learned weights on held-out demonstrations.
    Eval(EvalArgs),
    /// Compare evaluation reports: win counts and summed log-likelihood.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub scenario: Template,
    #[arg(long, default_value_t = 100)]
    pub n_demos: usize,
    /// Ground-truth weights, comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Position noise standard deviation, meters.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// Pool size per case.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub demos: PathBuf,
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RedistributeArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Smirl,
    Cioc,
    Optirl,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Smirl)]
    pub method: MethodArg,
    /// Training demonstrations (required for the baselines).
    #[arg(long)]
    pub demos: Option<PathBuf>,
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Training sample sets (required for smirl; fixes the feature scaling
    /// of the baselines when given).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l1: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[arg(long)]
    pub no_redistribute: bool,
    /// Initial weight of every feature for the baselines.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub theta_init: f64,
    /// Forward-optimizer iterations of optirl.
    #[arg(long, default_value_t = 500)]
    pub forward_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Weight artifacts, one per method.
    #[arg(long, required = true, num_args = 1..)]
    pub theta: Vec<PathBuf>,
    /// Held-out demonstrations; their ids must match the sample sets.
    #[arg(long)]
    pub test_demos: Option<PathBuf>,
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Sample sets of the held-out demonstrations.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[arg(long)]
    pub no_redistribute: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Format(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::SynthGen(a) => synth_gen(&a),
        Command::Sample(a) => sample(&a),
        Command::Redistribute(a) => redistribute_cmd(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Compare(a) => compare_cmd(&a),
    })
}

/// Exit code of a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Mismatch(_) => 2,
        _ => 1,
    }
}

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io(path, e))
}

fn load_demos(tracks: &Path, geometry: &Path) -> Result<Vec<Demonstration>> {
    let geo = GeometryFile::load(geometry)?;
    let loaded = load_track_file(tracks, &geo)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.demos)
}

fn feature_names(dim: usize) -> Vec<String> {
    FeatureKind::kinds(dim).iter().map(|k| k.name().to_string()).collect()
}

fn write_corpus(path: &Path, demos: &[Demonstration]) -> Result<()> {
    let rows: Vec<_> = demos.iter().flat_map(demonstration_rows).collect();
    let mut buf = Vec::new();
    write_tracks(&rows, &mut buf)?;
    write_bytes(path, &buf)
}

fn synth_gen(a: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        template: a.scenario,
        n_demos: a.n_demos,
        theta_star: a.theta.clone(),
        beta: a.beta,
        noise: a.noise,
        test_fraction: a.test_fraction,
        seed: a.seed,
    };
    let cfg = SamplerConfig {
        k_samples: a.k,
        ..SamplerConfig::default()
    };
    let vp = VehicleParams::default();
    let corpus = generate_synthetic(&spec, &cfg, &vp)?;
    for (id, reason) in &corpus.skipped {
        eprintln!("warning: case {id} skipped: {reason}");
    }
    out_dir(&a.out)?;
    let mut geo = GeometryFile::default();
    for d in corpus.train.iter().chain(&corpus.test) {
        geo.cases.insert(d.id.clone(), SiteGeometry::from_scenario(&d.scenario));
    }
    let truth = TruthFile {
        scenario: a.scenario.name().to_string(),
        features: feature_names(a.theta.len()),
        theta: corpus.truth.theta.clone(),
        beta: corpus.truth.beta,
        normalizer: corpus.truth.normalizer.max_per_feature.clone(),
        seed: a.seed,
        noise: a.noise,
        train_cases: corpus.train.iter().map(|d| d.id.clone()).collect(),
        test_cases: corpus.test.iter().map(|d| d.id.clone()).collect(),
        skipped: corpus
            .skipped
            .iter()
            .map(|(id, reason)| Failure {
                id: id.clone(),
                reason: reason.clone(),
            })
            .collect(),
    };
    let tracks = a.out.join("tracks.csv");
    let test_tracks = a.out.join("test_tracks.csv");
    let geometry = a.out.join("geometry.toml");
    let truth_path = a.out.join("truth.toml");
    write_corpus(&tracks, &corpus.train)?;
    write_corpus(&test_tracks, &corpus.test)?;
    write_bytes(&geometry, geo.to_text()?.as_bytes())?;
    write_bytes(&truth_path, to_toml(&truth)?.as_bytes())?;
    let mut m = Manifest::new("synth-gen", json!({ "spec": spec, "sampler": cfg, "vehicle": vp }));
    for p in [&tracks, &test_tracks, &geometry, &truth_path] {
        m.output(p)?;
    }
    m.write(&a.out)?;
    eprintln!(
        "synth-gen: {} train, {} test, {} skipped",
        corpus.train.len(),
        corpus.test.len(),
        corpus.skipped.len()
    );
    Ok(())
}

fn sample(a: &SampleArgs) -> Result<()> {
    let demos = load_demos(&a.demos, &a.geometry)?;
    let cfg = SamplerConfig {
        k_samples: a.k,
        ..SamplerConfig::default()
    };
    let vp = VehicleParams::default();
    let (sets, failures) = sample_all(&demos, &cfg, &vp, a.seed);
    for f in &failures {
        eprintln!("warning: demonstration {} not sampled: {}", f.id, f.reason);
    }
    if sets.is_empty() {
        return Err(Error::Core(smirl_core::Error::SamplingFailure {
            id: "*".into(),
            reason: "no demonstration could be sampled".into(),
        }));
    }
    let file = SamplesFile {
        version: FORMAT_VERSION,
        seed: a.seed,
        sampler: cfg.clone(),
        vehicle: vp,
        redistributed: None,
        sets,
        failures,
    };
    out_dir(&a.out)?;
    let path = a.out.join("samples.json");
    write_bytes(&path, &file.to_bytes()?)?;
    let mut m = Manifest::new("sample", json!({ "k": a.k, "seed": a.seed, "sampler": cfg, "vehicle": vp }));
    m.input(&a.demos)?;
    m.input(&a.geometry)?;
    m.output(&path)?;
    m.write(&a.out)?;
    eprintln!("sample: {} sets, {} failures", file.sets.len(), file.failures.len());
    Ok(())
}

fn redistribute_cmd(a: &RedistributeArgs) -> Result<()> {
    let mut file = SamplesFile::load(&a.samples)?;
    let norm = fit_normalizer(&file.sets)?;
    let mut out = Vec::with_capacity(file.sets.len());
    for rec in &file.sets {
        let (_, plan) = flatten(rec, &norm, Some(a.bins), a.seed)?;
        let idx = plan.map(|p| p.indices).unwrap_or_default();
        out.push(SampleRecord {
            set: smirl_core::SampleSet {
                demo_id: rec.set.demo_id.clone(),
                members: idx.iter().map(|&i| rec.set.members[i].clone()).collect(),
            },
            features: idx.iter().map(|&i| rec.features[i].clone()).collect(),
        });
    }
    file.sets = out;
    file.redistributed = Some(a.bins);
    out_dir(&a.out)?;
    let path = a.out.join("samples.json");
    write_bytes(&path, &file.to_bytes()?)?;
    let mut m = Manifest::new("redistribute", json!({ "bins": a.bins, "seed": a.seed }));
    m.input(&a.samples)?;
    m.output(&path)?;
    m.write(&a.out)
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let train_cfg = TrainConfig {
        alpha: a.alpha,
        epsilon: a.epsilon,
        l1_lambda: a.l1,
        max_iters: a.max_iters,
        seed: a.seed,
    };
    let samples = a.samples.as_deref().map(SamplesFile::load).transpose()?;
    let config = json!({
        "method": format!("{:?}", a.method).to_lowercase(),
        "train": train_cfg,
        "beta": a.beta,
        "bins": if a.no_redistribute { None } else { Some(a.bins) },
        "theta_init": a.theta_init,
        "forward_iters": a.forward_iters,
    });
    let config_sha256 = sha256_hex(config.to_string().as_bytes());
    let (mut artifact, history) = match a.method {
        MethodArg::Smirl => {
            let file = samples
                .as_ref()
                .ok_or_else(|| Error::Format("train --method smirl needs --samples".into()))?;
            let bins = match (file.redistributed, a.no_redistribute) {
                (Some(_), _) | (None, true) => None,
                (None, false) => Some(a.bins),
            };
            let r = train_smirl(&file.sets, a.beta, &train_cfg, bins)?;
            let mut art = ThetaArtifact::new("smirl", r.outcome.theta.clone(), a.beta, &r.normalizer);
            art.converged = r.outcome.converged;
            art.iterations = r.outcome.iterations;
            art.redistribution_bins = bins.or(file.redistributed);
            (art, r.outcome.history)
        }
        MethodArg::Cioc | MethodArg::Optirl => {
            let (Some(demos), Some(geometry)) = (&a.demos, &a.geometry) else {
                return Err(Error::Format("baselines need --demos and --geometry".into()));
            };
            let demos = load_demos(demos, geometry)?;
            let method = if a.method == MethodArg::Cioc {
                Method::Cioc
            } else {
                Method::OptIrl
            };
            let cfg = BaselineConfig {
                train: train_cfg.clone(),
                beta: a.beta,
                forward: ForwardConfig {
                    iterations: a.forward_iters,
                    ..ForwardConfig::default()
                },
                theta_init: a.theta_init,
                ..BaselineConfig::default()
            };
            let (r, norm) = train_baseline_with(method, &demos, samples.as_ref().map(|f| f.sets.as_slice()), &cfg)?;
            for id in &r.dropped {
                eprintln!("warning: demonstration {id} dropped: degenerate Hessian");
            }
            let mut art = ThetaArtifact::new(method.name(), r.outcome.theta.clone(), a.beta, &norm);
            art.converged = r.outcome.converged;
            art.iterations = r.outcome.iterations;
            art.dropped = r.dropped;
            (art, r.outcome.history)
        }
    };
    artifact.config_sha256 = config_sha256;
    if !artifact.converged {
        eprintln!(
            "warning: training stopped after {} iterations without converging",
            artifact.iterations
        );
    }
    out_dir(&a.out)?;
    let theta = a.out.join("theta.toml");
    let hist = a.out.join("history.csv");
    write_bytes(&theta, to_toml(&artifact)?.as_bytes())?;
    write_bytes(&hist, &history_csv(&history)?)?;
    let mut m = Manifest::new("train", config);
    for p in [&a.demos, &a.geometry, &a.samples].into_iter().flatten() {
        m.input(p)?;
    }
    m.output(&theta)?;
    m.output(&hist)?;
    m.write(&a.out)
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let file = SamplesFile::load(&a.samples)?;
    let samples_sha256 = crate::formats::file_sha256(&a.samples)?;
    let test_demos_sha256 = match &a.test_demos {
        Some(path) => {
            let geometry = a
                .geometry
                .as_ref()
                .ok_or_else(|| Error::Format("--test-demos needs --geometry".into()))?;
            let demos = load_demos(path, geometry)?;
            let mut want: Vec<&str> = demos.iter().map(|d| d.id.as_str()).collect();
            let mut have: Vec<&str> = file.sets.iter().map(|r| r.set.demo_id.as_str()).collect();
            want.sort_unstable();
            have.sort_unstable();
            if want != have {
                return Err(Error::Mismatch(
                    "test demonstrations and sample sets cover different cases".into(),
                ));
            }
            Some(crate::formats::file_sha256(path)?)
        }
        None => None,
    };
    let bins = if a.no_redistribute { None } else { Some(a.bins) };
    let sets = prepare_eval(&file.sets, bins, a.seed)?;
    let mut methods = Vec::new();
    let mut dim = None;
    for path in &a.theta {
        let art = ThetaArtifact::load(path)?;
        if *dim.get_or_insert(art.theta.len()) != art.theta.len() {
            return Err(Error::Mismatch("weight artifacts have different dimensions".into()));
        }
        let mut label = art.method.clone();
        let mut n = 1;
        while methods.iter().any(|r: &smirl_core::eval::MethodReport| r.method == label) {
            n += 1;
            label = format!("{}#{n}", art.method);
        }
        methods.push(crate::pipeline::evaluate(&label, &art.reward_params()?, &sets)?);
    }
    let report = Report {
        version: FORMAT_VERSION,
        samples_sha256,
        test_demos_sha256,
        bins,
        seed: a.seed,
        features: feature_names(dim.unwrap_or(0)),
        summaries: methods.iter().map(summarize).collect(),
        methods,
    };
    out_dir(&a.out)?;
    let path = a.out.join("report.json");
    write_bytes(&path, &to_json(&report)?)?;
    let mut m = Manifest::new("eval", json!({ "bins": bins, "seed": a.seed }));
    for p in a.theta.iter().chain([&a.samples]).chain(&a.test_demos).chain(&a.geometry) {
        m.input(p)?;
    }
    m.output(&path)?;
    m.write(&a.out)?;
    for s in &report.summaries {
        eprintln!("eval: {} log-likelihood sum {:.4}", s.method, s.log_likelihood_sum);
    }
    Ok(())
}

fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let reports: Vec<Report> = a.reports.iter().map(|p| crate::formats::read_json(p)).collect::<Result<_>>()?;
    let first = &reports[0];
    for r in &reports[1..] {
        if r.samples_sha256 != first.samples_sha256 || r.bins != first.bins || r.seed != first.seed {
            return Err(Error::Mismatch("reports were evaluated on different sample sets".into()));
        }
    }
    let methods: Vec<_> = reports.iter().flat_map(|r| r.methods.iter().cloned()).collect();
    let comparison = compare(&methods).map_err(|e| Error::Mismatch(e.to_string()))?;
    let file = ComparisonFile {
        version: FORMAT_VERSION,
        samples_sha256: first.samples_sha256.clone(),
        methods: methods.iter().map(|m| m.method.clone()).collect(),
        comparison,
    };
    out_dir(&a.out)?;
    let path = a.out.join("comparison.json");
    write_bytes(&path, &to_json(&file)?)?;
    let mut m = Manifest::new("compare", json!({}));
    for p in &a.reports {
        m.input(p)?;
    }
    m.output(&path)?;
    m.write(&a.out)?;
    println!("method\twins\tlog_likelihood_sum\tmed");
    for s in &file.comparison.summaries {
        println!("{}\t{}\t{}\t{}", s.method, s.wins, s.log_likelihood_sum, s.med.mean);
    }
    Ok(())
}
