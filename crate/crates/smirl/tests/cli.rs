use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smirl::formats::{ComparisonFile, Report, SamplesFile, ThetaArtifact};

fn smirl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smirl"))
        .args(args)
        .args(["--jobs", "1"])
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = smirl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const THETA: &str = "--theta=-8,-4,-4,-2";

struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Corpus {
    fn new(scenario: &str, theta: &str, n: &str) -> Corpus {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let c = root.join("c");
        ok(&["synth-gen", "--scenario", scenario, "--n-demos", n, theta, "--seed", "7", "--out", p(&c)]);
        Corpus { _dir: dir, root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn sample(&self, tracks: &str, out: &str) {
        ok(&[
            "sample",
            "--demos",
            p(&self.path(tracks)),
            "--geometry",
            p(&self.path("c/geometry.toml")),
            "--k",
            "60",
            "--seed",
            "3",
            "--out",
            p(&self.path(out)),
        ]);
    }
}

#[test]
fn missing_theta_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = smirl(&["synth-gen", "--scenario", "straight", "--n-demos", "20", "--seed", "7", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--theta"));
    assert_eq!(smirl(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(smirl(&[]).status.code(), Some(2));
}

#[test]
fn synth_gen_is_deterministic() {
    let a = Corpus::new("straight", THETA, "20");
    let b = Corpus::new("straight", THETA, "20");
    for f in ["tracks.csv", "test_tracks.csv", "geometry.toml", "truth.toml", "manifest.json"] {
        let x = std::fs::read(a.path("c").join(f)).unwrap();
        let y = std::fs::read(b.path("c").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn roundabout_corpus_has_an_other_agent_per_case() {
    let c = Corpus::new("roundabout-merge", "--theta=-8,-4,-4,-2,-4,-4", "6");
    for f in ["c/tracks.csv", "c/test_tracks.csv"] {
        let rows = smirl::tracks::read_tracks(std::fs::File::open(c.path(f)).unwrap()).unwrap();
        let mut cases: Vec<&str> = rows.iter().map(|r| r.case_id.as_str()).collect();
        cases.dedup();
        for case in cases {
            assert!(rows
                .iter()
                .any(|r| r.case_id == case && r.role == smirl::tracks::Role::Other));
        }
    }
}

#[test]
fn pipeline_train_eval_compare() {
    let c = Corpus::new("straight", THETA, "12");
    c.sample("c/tracks.csv", "s");
    c.sample("c/test_tracks.csv", "st");
    let samples = SamplesFile::load(&c.path("s/samples.json")).unwrap();
    assert!(!samples.sets.is_empty());
    assert!(samples.sets.iter().all(|s| s.features.len() == s.set.members.len()));

    ok(&["train", "--samples", p(&c.path("s/samples.json")), "--out", p(&c.path("m"))]);
    let art = ThetaArtifact::load(&c.path("m/theta.toml")).unwrap();
    assert!(art.converged);
    assert_eq!(art.theta.len(), 4);
    assert_eq!(art.features, ["v_des", "a_lon", "a_lat", "j_lon"]);
    let history = std::fs::read_to_string(c.path("m/history.csv")).unwrap();
    assert!(history.starts_with("k,gap,log_likelihood\n"));

    ok(&[
        "train", "--samples", p(&c.path("s/samples.json")), "--epsilon", "1e9", "--out", p(&c.path("m0")),
    ]);
    let zero = ThetaArtifact::load(&c.path("m0/theta.toml")).unwrap();
    assert!(zero.converged);
    assert_eq!(zero.iterations, 0);
    assert!(zero.theta.iter().all(|&t| t == 0.0));

    // Evaluating on the training sets themselves.
    ok(&[
        "eval", "--theta", p(&c.path("m/theta.toml")), "--samples", p(&c.path("s/samples.json")), "--out",
        p(&c.path("e_train")),
    ]);
    let r: Report = smirl::formats::read_json(&c.path("e_train/report.json")).unwrap();
    assert!(r.methods[0].cases.iter().all(|x| x.log_likelihood.is_finite() && x.likelihood > 0.0));
    assert_eq!(r.summaries.len(), 1);

    ok(&[
        "eval",
        "--theta",
        p(&c.path("m/theta.toml")),
        p(&c.path("m/theta.toml")),
        "--test-demos",
        p(&c.path("c/test_tracks.csv")),
        "--geometry",
        p(&c.path("c/geometry.toml")),
        "--samples",
        p(&c.path("st/samples.json")),
        "--out",
        p(&c.path("e")),
    ]);
    ok(&["compare", "--reports", p(&c.path("e/report.json")), "--out", p(&c.path("cmp"))]);
    let cmp: ComparisonFile = smirl::formats::read_json(&c.path("cmp/comparison.json")).unwrap();
    assert_eq!(cmp.methods, ["smirl", "smirl#2"]);
    assert!(cmp.comparison.winners.iter().all(|w| w.tie && w.winner == 0));
    let wins: usize = cmp.comparison.summaries.iter().map(|s| s.wins).sum();
    assert_eq!(wins, cmp.comparison.winners.len());

    // A report on other sample sets cannot be compared.
    ok(&[
        "eval", "--theta", p(&c.path("m/theta.toml")), "--samples", p(&c.path("s/samples.json")), "--out",
        p(&c.path("e2")),
    ]);
    let out = smirl(&[
        "compare", "--reports", p(&c.path("e/report.json")), p(&c.path("e2/report.json")), "--out",
        p(&c.path("cmp2")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Test demos that do not match the sample sets.
    let out = smirl(&[
        "eval",
        "--theta",
        p(&c.path("m/theta.toml")),
        "--test-demos",
        p(&c.path("c/tracks.csv")),
        "--geometry",
        p(&c.path("c/geometry.toml")),
        "--samples",
        p(&c.path("st/samples.json")),
        "--out",
        p(&c.path("e3")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    for dir in ["s", "m", "e", "cmp"] {
        assert!(c.path(dir).join("manifest.json").exists());
    }
}

#[test]
fn flat_reward_makes_cioc_fail() {
    let c = Corpus::new("straight", THETA, "4");
    let out = smirl(&[
        "train",
        "--method",
        "cioc",
        "--demos",
        p(&c.path("c/tracks.csv")),
        "--geometry",
        p(&c.path("c/geometry.toml")),
        "--theta-init",
        "0",
        "--out",
        p(&c.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn non_convergence_still_writes_the_artifact() {
    let c = Corpus::new("straight", THETA, "4");
    c.sample("c/tracks.csv", "s");
    let out = smirl(&[
        "train", "--samples", p(&c.path("s/samples.json")), "--max-iters", "1", "--out", p(&c.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("without converging"));
    assert!(!ThetaArtifact::load(&c.path("m/theta.toml")).unwrap().converged);
}

#[test]
fn redistribute_flattens_the_sets() {
    let c = Corpus::new("straight", THETA, "4");
    c.sample("c/tracks.csv", "s");
    ok(&[
        "redistribute", "--samples", p(&c.path("s/samples.json")), "--bins", "3", "--out", p(&c.path("r")),
    ]);
    let r = SamplesFile::load(&c.path("r/samples.json")).unwrap();
    assert_eq!(r.redistributed, Some(3));
    assert!(r.sets.iter().all(|s| s.set.demo_index().is_some()));
    ok(&["train", "--samples", p(&c.path("r/samples.json")), "--out", p(&c.path("m"))]);
    assert_eq!(ThetaArtifact::load(&c.path("m/theta.toml")).unwrap().redistribution_bins, Some(3));
}

#[test]
fn sampling_fails_when_every_demo_fails() {
    let dir = tempfile::tempdir().unwrap();
    let tracks = dir.path().join("t.csv");
    let geometry = dir.path().join("g.toml");
    let mut csv = String::from("case_id,track_id,frame_id,timestamp_ms,agent_role,x_m,y_m,vx_mps,vy_mps,psi_rad\n");
    for k in 0..30 {
        csv.push_str(&format!("a,1,{k},{},ego,{},0,10,0,0\n", 100 * k, k as f64));
    }
    std::fs::write(&tracks, csv).unwrap();
    std::fs::write(
        &geometry,
        "[default]\nv_desired = 10.0\n\n[[default.reference_paths]]\nlane_width = 3.5\n\
         line = [[-10.0, 0.0], [100.0, 0.0]]\n\n[[default.obstacles]]\n\
         vertices = [[12.0, -6.0], [16.0, -6.0], [16.0, 6.0], [12.0, 6.0]]\n",
    )
    .unwrap();
    let out = smirl(&["sample", "--demos", p(&tracks), "--geometry", p(&geometry), "--out", p(&dir.path().join("s"))]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
