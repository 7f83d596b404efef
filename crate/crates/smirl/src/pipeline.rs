//! Pipeline stages shared by the CLI and the benchmarks: sampling with
//! feature extraction, feature scaling, re-distribution, training and
//! evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smirl_core::baselines::{train_baseline, BaselineConfig, BaselineOutcome, Method};
use smirl_core::eval::{evaluate_case, EvalCase, MethodReport};
use smirl_core::features::{extract, FeatureNormalizer};
use smirl_core::irl::{train, FeatureSet, TrainOutcome};
use smirl_core::redistribution::{redistribute, Plan};
use smirl_core::sampler::generate_sample_set;
use smirl_core::{
    Demonstration, Error as CoreError, FeatureVector, Member, RewardParams, SampleSet, SamplerConfig, TrainConfig,
    Trajectory, VehicleParams,
};

use crate::error::{Error, Result};

/// A sample set with the raw features of its members, in member order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub set: SampleSet,
    pub features: Vec<Vec<f64>>,
}

impl SampleRecord {
    pub fn demo(&self) -> Result<(&Member, &[f64])> {
        let i = self.set.demo_index().ok_or_else(|| {
            Error::Core(CoreError::Contract(format!(
                "sample set {} does not contain its demonstration",
                self.set.demo_id
            )))
        })?;
        Ok((&self.set.members[i], &self.features[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub reason: String,
}

/// Samples one demonstration and extracts the raw features of every member.
pub fn sample_demo(d: &Demonstration, cfg: &SamplerConfig, vp: &VehicleParams, seed: u64) -> Result<SampleRecord> {
    let set = generate_sample_set(d, cfg, vp, seed)?.set;
    let features = set
        .members
        .iter()
        .map(|m| extract(&m.trajectory, &d.scenario, cfg.tau_predict).map(|f| f.values))
        .collect::<smirl_core::Result<Vec<_>>>()?;
    Ok(SampleRecord { set, features })
}

/// Samples every demonstration on the current rayon pool. Results keep the
/// input order.
pub fn sample_all(
    demos: &[Demonstration],
    cfg: &SamplerConfig,
    vp: &VehicleParams,
    seed: u64,
) -> (Vec<SampleRecord>, Vec<Failure>) {
    let results: Vec<_> = demos.par_iter().map(|d| (d.id.clone(), sample_demo(d, cfg, vp, seed))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(Failure {
                id,
                reason: e.to_string(),
            }),
        }
    }
    (records, failures)
}

/// Per-feature maxima over every member of every record.
pub fn fit_normalizer(records: &[SampleRecord]) -> Result<FeatureNormalizer> {
    let all: Vec<FeatureVector> = records
        .iter()
        .flat_map(|r| r.features.iter().map(|f| FeatureVector::new(f.clone())))
        .collect();
    Ok(FeatureNormalizer::fit(&all)?)
}

/// Scales and optionally re-distributes one record. Returns the scaled
/// record and the re-distribution plan.
pub fn flatten(rec: &SampleRecord, norm: &FeatureNormalizer, bins: Option<usize>, seed: u64) -> Result<(SampleRecord, Option<Plan>)> {
    let scaled: Vec<Vec<f64>> = rec.features.iter().map(|f| norm.apply_values(f)).collect();
    match bins {
        None => Ok((
            SampleRecord {
                set: rec.set.clone(),
                features: scaled,
            },
            None,
        )),
        Some(b) => {
            let r = redistribute(&rec.set, &scaled, b, seed)?;
            Ok((
                SampleRecord {
                    set: r.set,
                    features: r.features,
                },
                Some(r.plan),
            ))
        }
    }
}

/// Training sets of scaled features, re-distributed when `bins` is given.
pub fn feature_sets(
    records: &[SampleRecord],
    norm: &FeatureNormalizer,
    bins: Option<usize>,
    seed: u64,
) -> Result<(Vec<FeatureSet>, Vec<Option<Plan>>)> {
    let out = records
        .par_iter()
        .map(|rec| -> Result<(FeatureSet, Option<Plan>)> {
            let (flat, plan) = flatten(rec, norm, bins, seed)?;
            let demo = flat.demo()?.1.to_vec();
            Ok((FeatureSet::new(demo, flat.features)?, plan))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmirlOutcome {
    pub outcome: TrainOutcome,
    pub normalizer: FeatureNormalizer,
    pub plans: Vec<Option<Plan>>,
}

/// Fits the normalizer on the training samples, re-distributes and trains.
pub fn train_smirl(
    records: &[SampleRecord],
    beta: f64,
    cfg: &TrainConfig,
    bins: Option<usize>,
) -> Result<SmirlOutcome> {
    let normalizer = fit_normalizer(records)?;
    let (sets, plans) = feature_sets(records, &normalizer, bins, cfg.seed)?;
    let outcome = train(&sets, beta, cfg)?;
    Ok(SmirlOutcome {
        outcome,
        normalizer,
        plans,
    })
}

/// Trains a baseline on the demonstrations with a normalizer fit on the
/// training samples, or on the demonstrations alone when no samples are
/// given.
pub fn train_baseline_with(
    method: Method,
    demos: &[Demonstration],
    records: Option<&[SampleRecord]>,
    cfg: &BaselineConfig,
) -> Result<(BaselineOutcome, FeatureNormalizer)> {
    let normalizer = match records {
        Some(r) => fit_normalizer(r)?,
        None => {
            let fv = demos
                .iter()
                .map(|d| extract(&d.ego, &d.scenario, cfg.tau_predict))
                .collect::<smirl_core::Result<Vec<_>>>()?;
            FeatureNormalizer::fit(&fv)?
        }
    };
    Ok((train_baseline(method, demos, &normalizer, cfg)?, normalizer))
}

/// A held-out case ready for scoring: raw features, optionally
/// re-distributed with a normalizer fit on the test samples themselves so
/// every method is scored on the same sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub id: String,
    pub demo: Trajectory,
    pub demo_raw: Vec<f64>,
    pub members: Vec<Member>,
    pub member_raw: Vec<Vec<f64>>,
}

pub fn prepare_eval(records: &[SampleRecord], bins: Option<usize>, seed: u64) -> Result<Vec<EvalSet>> {
    let norm = match bins {
        Some(_) => Some(fit_normalizer(records)?),
        None => None,
    };
    records
        .iter()
        .map(|rec| {
            let (demo, demo_raw) = rec.demo()?;
            let (members, member_raw) = match (&norm, bins) {
                (Some(n), Some(b)) => {
                    let (_, plan) = flatten(rec, n, Some(b), seed)?;
                    let idx = plan.map(|p| p.indices).unwrap_or_default();
                    (
                        idx.iter().map(|&i| rec.set.members[i].clone()).collect(),
                        idx.iter().map(|&i| rec.features[i].clone()).collect(),
                    )
                }
                _ => (rec.set.members.clone(), rec.features.clone()),
            };
            Ok(EvalSet {
                id: rec.set.demo_id.clone(),
                demo: demo.trajectory.clone(),
                demo_raw: demo_raw.to_vec(),
                members,
                member_raw,
            })
        })
        .collect()
}

pub fn evaluate(label: &str, rp: &RewardParams, sets: &[EvalSet]) -> Result<MethodReport> {
    let cases = sets
        .iter()
        .map(|s| {
            evaluate_case(
                &EvalCase {
                    id: &s.id,
                    demo: &s.demo,
                    demo_raw: &s.demo_raw,
                    members: &s.members,
                    member_raw: &s.member_raw,
                },
                rp,
            )
        })
        .collect::<smirl_core::Result<Vec<_>>>()?;
    Ok(MethodReport {
        method: label.to_string(),
        cases,
    })
}
