//! Flattening a sample set in feature space.
//!
//! The normalized feature space of one set is cut into `B` equal-width bins
//! per dimension over the set's own per-dimension range. Every occupied bin
//! is then brought to the same count `T`, the median occupied count, by
//! sampling without replacement (larger bins) or topping up with
//! replacement (smaller bins). The demonstration is always kept.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::rng::{stream, Stream};
use crate::types::SampleSet;

/// Default bins per feature dimension.
pub const DEFAULT_BINS: usize = 5;

/// Equal-width bins over per-dimension ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    pub bins: usize,
    pub ranges: Vec<(f64, f64)>,
}

impl BinGrid {
    /// Grid covering every vector in `features`.
    pub fn fit(features: &[Vec<f64>], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(param("bins per dimension must be at least 1"));
        }
        let first = features.first().ok_or_else(|| param("no features to bin"))?;
        let mut ranges: Vec<(f64, f64)> = first.iter().map(|&x| (x, x)).collect();
        for f in features {
            if f.len() != ranges.len() {
                return Err(Error::Dimension {
                    expected: ranges.len(),
                    got: f.len(),
                });
            }
            for (r, &x) in ranges.iter_mut().zip(f) {
                if !x.is_finite() {
                    return Err(param("feature value is not finite"));
                }
                r.0 = r.0.min(x);
                r.1 = r.1.max(x);
            }
        }
        Ok(BinGrid { bins, ranges })
    }

    /// Whether every dimension has zero width.
    pub fn is_degenerate(&self) -> bool {
        self.ranges.iter().all(|(lo, hi)| hi <= lo)
    }

    /// Per-dimension bin index of `f`; values on the upper edge fall into the
    /// last bin.
    pub fn bin_of(&self, f: &[f64]) -> Vec<usize> {
        f.iter()
            .zip(&self.ranges)
            .map(|(&x, &(lo, hi))| {
                if hi <= lo {
                    0
                } else {
                    let u = (x - lo) / (hi - lo) * self.bins as f64;
                    (libm::floor(u).max(0.0) as usize).min(self.bins - 1)
                }
            })
            .collect()
    }
}

/// Which input members make up a re-distributed set.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Input indices in output order; duplicates appear when a bin was
    /// topped up.
    pub indices: Vec<usize>,
    /// Target count per occupied bin.
    pub target: usize,
    pub occupied_bins: usize,
    /// Output count of each occupied bin, in bin-key order.
    pub bin_counts: Vec<usize>,
    /// Set when every member has identical features; the input is returned
    /// unchanged.
    pub degenerate: bool,
}

fn median_round_half_up(sorted: &[usize]) -> usize {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]).div_ceil(2)
    }
}

/// Computes the re-distribution of `features` with `demo` always retained.
pub fn plan(features: &[Vec<f64>], demo: Option<usize>, bins: usize, rng: &mut Stream) -> Result<Plan> {
    if features.len() < 2 {
        return Err(param("re-distribution needs at least two members"));
    }
    let grid = BinGrid::fit(features, bins)?;
    if grid.is_degenerate() {
        return Ok(Plan {
            indices: (0..features.len()).collect(),
            target: features.len(),
            occupied_bins: 1,
            bin_counts: alloc::vec![features.len()],
            degenerate: true,
        });
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, f) in features.iter().enumerate() {
        groups.entry(grid.bin_of(f)).or_default().push(i);
    }
    let mut counts: Vec<usize> = groups.values().map(Vec::len).collect();
    counts.sort_unstable();
    let target = median_round_half_up(&counts);
    let mut indices = Vec::with_capacity(target * groups.len() + 1);
    let mut bin_counts = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let c = members.len();
        let mut chosen: Vec<usize> = if c > target {
            let mut pool = members.clone();
            for k in 0..target {
                let j = rng.random_range(k..c);
                pool.swap(k, j);
            }
            pool.truncate(target);
            pool
        } else {
            let mut all = members.clone();
            for _ in c..target {
                all.push(members[rng.random_range(0..c)]);
            }
            all
        };
        chosen.sort_unstable();
        bin_counts.push(chosen.len());
        indices.extend(chosen);
    }
    if let Some(d) = demo {
        if !indices.contains(&d) {
            indices.push(d);
        }
    }
    Ok(Plan {
        indices,
        target,
        occupied_bins: groups.len(),
        bin_counts,
        degenerate: false,
    })
}

/// A re-distributed sample set with the normalized features of its members.
#[derive(Debug, Clone, PartialEq)]
pub struct Redistributed {
    pub set: SampleSet,
    pub features: Vec<Vec<f64>>,
    pub plan: Plan,
}

/// Re-distributes `ss` given the normalized features of its members (same
/// order). The random stream is derived from `seed` and the set's id.
pub fn redistribute(ss: &SampleSet, features: &[Vec<f64>], bins: usize, seed: u64) -> Result<Redistributed> {
    if features.len() != ss.len() {
        return Err(Error::Dimension {
            expected: ss.len(),
            got: features.len(),
        });
    }
    let mut rng = stream(seed, "redistribute", &ss.demo_id);
    let plan = plan(features, ss.demo_index(), bins, &mut rng)?;
    let set = SampleSet {
        demo_id: ss.demo_id.clone(),
        members: plan.indices.iter().map(|&i| ss.members[i].clone()).collect(),
    };
    let features = plan.indices.iter().map(|&i| features[i].clone()).collect();
    Ok(Redistributed { set, features, plan })
}
