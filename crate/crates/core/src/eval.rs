//! Evaluation metrics: feature deviation, mean Euclidean distance,
//! trajectory likelihood and win counting across methods.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::geometry::Point2;
use crate::irl::linear_reward;
use crate::math::{log_sum_exp, NeumaierSum};
use crate::types::{Member, RewardParams, Trajectory};

/// Index of the highest-reward member that is not the demonstration; ties go
/// to the lowest index.
pub fn predict_best_index(members: &[Member], features: &[Vec<f64>], theta: &[f64]) -> Result<usize> {
    if members.len() != features.len() {
        return Err(Error::Dimension {
            expected: members.len(),
            got: features.len(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (m, f)) in members.iter().zip(features).enumerate() {
        if m.is_demonstration() {
            continue;
        }
        let r = linear_reward(theta, f);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Prediction("sample set holds only the demonstration".into()))
}

/// The best predicted trajectory: the argmax-reward member other than the
/// demonstration.
pub fn predict_best<'m>(members: &'m [Member], features: &[Vec<f64>], theta: &[f64]) -> Result<&'m Trajectory> {
    predict_best_index(members, features, theta).map(|i| &members[i].trajectory)
}

/// Per-case feature deviation terms `|f_gt - f_pred| / f_gt / n`; `None`
/// where the ground-truth value is zero.
pub fn feature_deviation_terms(gt: &[f64], pred: &[f64], n: usize) -> Vec<Option<f64>> {
    gt.iter()
        .zip(pred)
        .map(|(&g, &p)| {
            if g == 0.0 {
                None
            } else {
                Some((g - p).abs() / g.abs() / n as f64)
            }
        })
        .collect()
}

/// Mean and population standard deviation of a metric over test cases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn mean_std(values: impl IntoIterator<Item = f64>) -> MeanStd {
    let xs: Vec<f64> = values.into_iter().collect();
    if xs.is_empty() {
        return MeanStd::default();
    }
    let n = xs.len() as f64;
    let mut s = NeumaierSum::default();
    for &x in &xs {
        s.add(x);
    }
    let mean = s.total() / n;
    let mut v = NeumaierSum::default();
    for &x in &xs {
        v.add((x - mean) * (x - mean));
    }
    MeanStd {
        mean,
        std: libm::sqrt(v.total() / n),
        count: xs.len(),
    }
}

/// Feature deviation per feature over `(gt, pred, n)` triples. Terms with a
/// zero ground truth are skipped; the second value counts them per feature.
pub fn feature_deviation(cases: &[(Vec<f64>, Vec<f64>, usize)]) -> Result<(Vec<MeanStd>, Vec<usize>)> {
    let dim = cases.first().map_or(0, |c| c.0.len());
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); dim];
    let mut skipped = vec![0; dim];
    for (gt, pred, n) in cases {
        if gt.len() != dim || pred.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: gt.len().max(pred.len()),
            });
        }
        if *n == 0 {
            return Err(param("trajectory length must be positive"));
        }
        for (j, t) in feature_deviation_terms(gt, pred, *n).into_iter().enumerate() {
            match t {
                Some(x) => cols[j].push(x),
                None => skipped[j] += 1,
            }
        }
    }
    Ok((cols.into_iter().map(mean_std).collect(), skipped))
}

/// Mean Euclidean distance as printed, `|gt - pred|_2 / N` over the stacked
/// coordinates, together with the per-step RMS distance
/// `|gt - pred|_2 / sqrt(N)`.
pub fn mean_euclidean_distance(gt: &[Point2], pred: &[Point2]) -> Result<(f64, f64)> {
    if gt.len() != pred.len() {
        return Err(param(format!(
            "trajectory lengths differ: {} vs {}",
            gt.len(),
            pred.len()
        )));
    }
    if gt.is_empty() {
        return Err(param("empty trajectory"));
    }
    let mut acc = NeumaierSum::default();
    for (a, b) in gt.iter().zip(pred) {
        let d = *a - *b;
        acc.add(d.dot(d));
    }
    let norm = libm::sqrt(acc.total());
    let n = gt.len() as f64;
    Ok((norm / n, norm / libm::sqrt(n)))
}

/// Positions of `pred` at the timestamps of `gt`.
pub fn resample_positions(pred: &Trajectory, gt: &Trajectory) -> Vec<Point2> {
    (0..gt.len())
        .map(|k| pred.state_at(gt.time(k)).position())
        .collect()
}

/// `exp(bR_d) / (exp(bR_d) + sum exp(bR_tau))` with `b = beta`, in log form.
pub fn log_trajectory_likelihood(demo_reward: f64, sample_rewards: &[f64], beta: f64) -> f64 {
    let mut all = Vec::with_capacity(sample_rewards.len() + 1);
    all.push(beta * demo_reward);
    all.extend(sample_rewards.iter().map(|r| beta * r));
    beta * demo_reward - log_sum_exp(&all)
}

pub fn trajectory_likelihood(demo_reward: f64, sample_rewards: &[f64], beta: f64) -> f64 {
    libm::exp(log_trajectory_likelihood(demo_reward, sample_rewards, beta))
}

/// Metrics of one method on one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub likelihood: f64,
    pub log_likelihood: f64,
    /// Feature deviation term per feature, `None` where skipped.
    pub fd: Vec<Option<f64>>,
    pub med: f64,
    pub med_rms: f64,
    /// Index of the predicted member in the evaluation set.
    pub predicted: usize,
}

/// One held-out case prepared for scoring.
#[derive(Debug, Clone, Copy)]
pub struct EvalCase<'a> {
    pub id: &'a str,
    pub demo: &'a Trajectory,
    /// Raw features of the demonstration.
    pub demo_raw: &'a [f64],
    pub members: &'a [Member],
    /// Raw features of every member, aligned with `members`.
    pub member_raw: &'a [Vec<f64>],
}

/// Scores `rp` on one case. The likelihood uses every non-demonstration
/// member as the comparison set.
pub fn evaluate_case(case: &EvalCase<'_>, rp: &RewardParams) -> Result<CaseRecord> {
    let norm = |f: &[f64]| -> Result<Vec<f64>> {
        if f.len() != rp.dim() {
            return Err(Error::Dimension {
                expected: rp.dim(),
                got: f.len(),
            });
        }
        Ok(rp.normalizer.apply_values(f))
    };
    let demo_n = norm(case.demo_raw)?;
    let member_n: Vec<Vec<f64>> = case.member_raw.iter().map(|f| norm(f)).collect::<Result<_>>()?;
    let best = predict_best_index(case.members, &member_n, &rp.theta)?;
    let rewards: Vec<f64> = case
        .members
        .iter()
        .zip(&member_n)
        .filter(|(m, _)| !m.is_demonstration())
        .map(|(_, f)| linear_reward(&rp.theta, f))
        .collect();
    let ll = log_trajectory_likelihood(linear_reward(&rp.theta, &demo_n), &rewards, rp.beta);
    let pred = &case.members[best].trajectory;
    let (med, med_rms) = mean_euclidean_distance(&case.demo.positions(), &resample_positions(pred, case.demo))?;
    Ok(CaseRecord {
        id: case.id.into(),
        likelihood: libm::exp(ll),
        log_likelihood: ll,
        fd: feature_deviation_terms(case.demo_raw, &case.member_raw[best], case.demo.len()),
        med,
        med_rms,
        predicted: best,
    })
}

/// All case records of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub cases: Vec<CaseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub fd: Vec<MeanStd>,
    pub fd_skipped: Vec<usize>,
    pub med: MeanStd,
    pub med_rms: MeanStd,
    pub log_likelihood_sum: f64,
    pub wins: usize,
}

pub fn summarize(report: &MethodReport) -> MethodSummary {
    let dim = report.cases.first().map_or(0, |c| c.fd.len());
    let mut fd = Vec::with_capacity(dim);
    let mut skipped = Vec::with_capacity(dim);
    for j in 0..dim {
        fd.push(mean_std(report.cases.iter().filter_map(|c| c.fd.get(j).copied().flatten())));
        skipped.push(report.cases.iter().filter(|c| c.fd.get(j).copied().flatten().is_none()).count());
    }
    let mut ll = NeumaierSum::default();
    for c in &report.cases {
        ll.add(c.log_likelihood);
    }
    MethodSummary {
        method: report.method.clone(),
        fd,
        fd_skipped: skipped,
        med: mean_std(report.cases.iter().map(|c| c.med)),
        med_rms: mean_std(report.cases.iter().map(|c| c.med_rms)),
        log_likelihood_sum: ll.total(),
        wins: 0,
    }
}

/// Winner of one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseWinner {
    pub id: String,
    /// Index into the compared reports.
    pub winner: usize,
    /// Set when another method reached the same likelihood; the earliest
    /// method then wins.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub summaries: Vec<MethodSummary>,
    pub winners: Vec<CaseWinner>,
}

/// Per-case winners (highest likelihood) and per-method summaries. All
/// reports must cover the same cases in the same order.
pub fn compare(reports: &[MethodReport]) -> Result<Comparison> {
    let first = reports.first().ok_or_else(|| param("no reports to compare"))?;
    for r in reports {
        if r.cases.len() != first.cases.len() || r.cases.iter().zip(&first.cases).any(|(a, b)| a.id != b.id) {
            return Err(param(format!(
                "report '{}' does not cover the same test cases as '{}'",
                r.method, first.method
            )));
        }
    }
    let mut summaries: Vec<MethodSummary> = reports.iter().map(summarize).collect();
    let mut winners = Vec::with_capacity(first.cases.len());
    for (k, case) in first.cases.iter().enumerate() {
        let mut best = 0;
        let mut tie = false;
        for m in 1..reports.len() {
            let ll = reports[m].cases[k].log_likelihood;
            let b = reports[best].cases[k].log_likelihood;
            if ll > b {
                best = m;
                tie = false;
            } else if ll == b {
                tie = true;
            }
        }
        summaries[best].wins += 1;
        winners.push(CaseWinner {
            id: case.id.clone(),
            winner: best,
            tie,
        });
    }
    Ok(Comparison { summaries, winners })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_single_pair() {
        let t = feature_deviation_terms(&[2.0], &[3.0], 1);
        assert_eq!(t, vec![Some(0.5)]);
        assert_eq!(feature_deviation_terms(&[0.0], &[3.0], 1), vec![None]);
    }

    #[test]
    fn med_fixtures() {
        let n = 16;
        let gt: Vec<Point2> = (0..n).map(|k| Point2::new(k as f64, 0.0)).collect();
        let pred: Vec<Point2> = (0..n).map(|k| Point2::new(k as f64, 1.0)).collect();
        let (med, rms) = mean_euclidean_distance(&gt, &pred).unwrap();
        assert!((med - 1.0 / libm::sqrt(n as f64)).abs() < 1e-15);
        assert!((rms - 1.0).abs() < 1e-15);
        let (m, _) = mean_euclidean_distance(&[Point2::new(0.0, 0.0)], &[Point2::new(3.0, 4.0)]).unwrap();
        assert_eq!(m, 5.0);
        assert!(mean_euclidean_distance(&gt, &pred[1..]).is_err());
    }

    #[test]
    fn likelihood_fixtures() {
        assert!((trajectory_likelihood(0.0, &[0.0; 4], 1.0) - 0.2).abs() < 1e-15);
        let e = libm::exp(1.0);
        assert!((trajectory_likelihood(1.0, &[0.0], 1.0) - e / (e + 1.0)).abs() < 1e-15);
    }

    fn report(method: &str, lls: &[f64]) -> MethodReport {
        MethodReport {
            method: method.into(),
            cases: lls
                .iter()
                .enumerate()
                .map(|(i, &ll)| CaseRecord {
                    id: format!("c{i}"),
                    likelihood: libm::exp(ll),
                    log_likelihood: ll,
                    fd: vec![Some(0.1)],
                    med: 1.0,
                    med_rms: 1.0,
                    predicted: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn win_counting() {
        let c = compare(&[report("a", &[-1.0, -3.0]), report("b", &[-2.0, -1.0])]).unwrap();
        assert_eq!(c.winners.iter().map(|w| w.winner).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(c.summaries[0].wins + c.summaries[1].wins, 2);
        let t = compare(&[report("a", &[-1.0]), report("b", &[-1.0])]).unwrap();
        assert!(t.winners[0].tie);
        assert_eq!(t.winners[0].winner, 0);
        let mut other = report("b", &[-1.0]);
        other.cases[0].id = "zz".into();
        assert!(compare(&[report("a", &[-1.0]), other]).is_err());
    }
}
