//! Per-iteration shard drawing from per-label pools.
//!
//! Each label pool is split round-robin among the clients claiming that
//! label, up front, so private shards of distinct clients are always
//! disjoint. Within its slice a client draws without replacement across
//! iterations; a slice that runs dry is reshuffled with a fresh derived
//! seed and drawing continues (the event is surfaced to the report).

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::data::synthetic::LabelPools;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::label::LabelSpace;
use crate::seed::{rng_for, stream};

/// One client's shard sizing: base per-label counts per iteration, plus
/// optional per-iteration skew multipliers that shift class proportions
/// while keeping the iteration's total shard size fixed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShardPlan {
    pub per_label: BTreeMap<usize, usize>,
    pub skew: BTreeMap<u32, BTreeMap<usize, f64>>,
}

impl ShardPlan {
    pub fn uniform(labels: &[usize], count: usize) -> Self {
        Self {
            per_label: labels.iter().map(|&l| (l, count)).collect(),
            skew: BTreeMap::new(),
        }
    }

    pub fn base_total(&self) -> usize {
        self.per_label.values().sum()
    }

    /// Planned per-label counts for one iteration.
    ///
    /// With skew, real-valued quotas `total * w_c / sum(w)` (w = base count
    /// times multiplier, multiplier defaulting to 1) are rounded by largest
    /// remainder so the total always equals the base total exactly.
    pub fn counts_for(&self, iteration: u32) -> Result<BTreeMap<usize, usize>> {
        let total = self.base_total();
        let Some(mults) = self.skew.get(&iteration) else {
            return Ok(self.per_label.clone());
        };
        if total == 0 {
            return Ok(self.per_label.clone());
        }
        let labels: Vec<usize> = self.per_label.keys().copied().collect();
        let weights: Vec<f64> = labels
            .iter()
            .map(|l| {
                let base = self.per_label[l] as f64;
                let m = mults.get(l).copied().unwrap_or(1.0);
                base * m
            })
            .collect();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "iteration {iteration}: skew multipliers must be finite and >= 0"
            )));
        }
        let wsum: f64 = weights.iter().sum();
        if wsum <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "iteration {iteration}: skew leaves a zero total weight"
            )));
        }
        let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / wsum).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.total_cmp(&fa).then(labels[a].cmp(&labels[b]))
        });
        for &k in order.iter().take(total - assigned) {
            counts[k] += 1;
        }
        Ok(labels.into_iter().zip(counts).collect())
    }
}

/// Round-robin split of every label pool among its claimants.
#[derive(Debug, Clone)]
pub struct PoolSlices {
    per_client: Vec<BTreeMap<usize, Vec<u32>>>,
}

impl PoolSlices {
    /// `claims[m]` lists the label indices claimed by client m. The k-th
    /// claimant of a label receives pool rows k, k+K, k+2K, ... where K is
    /// the claimant count.
    pub fn build(pool_sizes: &[usize], claims: &[Vec<usize>]) -> Self {
        let mut per_client: Vec<BTreeMap<usize, Vec<u32>>> = vec![BTreeMap::new(); claims.len()];
        for (label, &size) in pool_sizes.iter().enumerate() {
            let claimants: Vec<usize> = (0..claims.len())
                .filter(|&m| claims[m].contains(&label))
                .collect();
            let k = claimants.len();
            if k == 0 {
                continue;
            }
            for (slot, &m) in claimants.iter().enumerate() {
                let rows: Vec<u32> = (slot..size).step_by(k).map(|r| r as u32).collect();
                per_client[m].insert(label, rows);
            }
        }
        Self { per_client }
    }

    pub fn slice(&self, client: usize, label: usize) -> Option<&[u32]> {
        self.per_client.get(client)?.get(&label).map(|v| v.as_slice())
    }
}

/// A drawn shard plus its provenance: which pool rows it came from and which
/// labels had their slice reshuffled during this draw.
#[derive(Debug, Clone)]
pub struct DrawnShard {
    pub dataset: Dataset,
    pub indices: BTreeMap<usize, Vec<u32>>,
    pub counts: BTreeMap<usize, usize>,
    pub reshuffled_labels: Vec<usize>,
}

/// Draw client `client`'s shard for `iteration` (1-based).
///
/// A pure function of `(pools, slices, plan, client, iteration, master_seed)`:
/// the without-replacement stream over a slice is the concatenation of
/// per-epoch permutations, each permutation seeded from
/// `(master_seed, client, label, epoch)`, and iteration i reads the window
/// that starts after all previously planned draws.
#[allow(clippy::too_many_arguments)]
pub fn draw_shard(
    pools: &LabelPools,
    slices: &PoolSlices,
    plan: &ShardPlan,
    client: usize,
    iteration: u32,
    master_seed: u64,
    label_space: &LabelSpace,
    client_id: &str,
) -> Result<DrawnShard> {
    let counts = plan.counts_for(iteration)?;
    let mut indices: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let mut reshuffled = Vec::new();

    for (&label, &need) in &counts {
        if need == 0 {
            continue;
        }
        let slice = slices.slice(client, label).unwrap_or(&[]);
        let len = slice.len();
        if len == 0 {
            return Err(Error::PoolExhausted {
                client: client_id.to_string(),
                label: label_space.name(label).to_string(),
                reason: "slice is empty".into(),
            });
        }

        let mut offset = 0usize;
        for j in 1..iteration {
            offset += plan.counts_for(j)?.get(&label).copied().unwrap_or(0);
        }

        let first_epoch = offset / len;
        let last_epoch = (offset + need - 1) / len;
        let mut drawn = Vec::with_capacity(need);
        for epoch in first_epoch..=last_epoch {
            let mut perm: Vec<u32> = slice.to_vec();
            let mut rng = rng_for(
                master_seed,
                &[stream::SHARD_DRAW, client as u64, label as u64, epoch as u64],
            );
            perm.shuffle(&mut rng);
            let lo = offset.max(epoch * len) - epoch * len;
            let hi = (offset + need).min((epoch + 1) * len) - epoch * len;
            drawn.extend_from_slice(&perm[lo..hi]);
            // Epoch 0 is the initial shuffle; later epochs mean the slice
            // ran dry inside this window.
            if epoch > 0 && epoch * len >= offset {
                reshuffled.push(label);
            }
        }
        indices.insert(label, drawn);
    }

    let total: usize = indices.values().map(Vec::len).sum();
    let mut features = Array2::zeros((total, pools.n_features));
    let mut labels = Vec::with_capacity(total);
    let mut at = 0usize;
    for (&label, rows) in &indices {
        let pool = &pools.per_label[label];
        for &r in rows {
            features.row_mut(at).assign(&pool.row(r as usize));
            labels.push(label);
            at += 1;
        }
    }
    let dataset = Dataset::new(features, labels, label_space.len())?;
    Ok(DrawnShard {
        dataset,
        indices,
        counts,
        reshuffled_labels: reshuffled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::{generate_synthetic, LabelGaussian, SyntheticSpec};
    use std::collections::BTreeSet;

    fn space() -> LabelSpace {
        LabelSpace::new(["cat", "dog"]).unwrap()
    }

    fn pools(per_label: usize) -> LabelPools {
        let spec = SyntheticSpec {
            n_features: 2,
            per_label: (0..2)
                .map(|k| LabelGaussian {
                    mean: vec![k as f64, 0.0],
                    std: vec![1.0, 1.0],
                    pool_size: per_label,
                })
                .collect(),
        };
        generate_synthetic(&spec, &space(), 77, stream::POOL_DATA).unwrap()
    }

    #[test]
    fn shard_histogram_matches_plan_exactly() {
        let pools = pools(8000);
        let claims = vec![vec![0, 1]];
        let slices = PoolSlices::build(&[8000, 8000], &claims);
        let plan = ShardPlan::uniform(&[0, 1], 500);
        let shard = draw_shard(&pools, &slices, &plan, 0, 1, 9, &space(), "u").unwrap();
        assert_eq!(shard.dataset.n_examples(), 1000);
        assert_eq!(shard.dataset.label_histogram(2), vec![500, 500]);
    }

    #[test]
    fn empty_plan_gives_empty_shard() {
        let pools = pools(100);
        let slices = PoolSlices::build(&[100, 100], &[vec![0, 1]]);
        let plan = ShardPlan::uniform(&[0, 1], 0);
        let shard = draw_shard(&pools, &slices, &plan, 0, 1, 9, &space(), "u").unwrap();
        assert_eq!(shard.dataset.n_examples(), 0);
    }

    #[test]
    fn clients_sharing_a_label_draw_disjoint_rows() {
        // Set-intersection oracle over the drawn pool indices.
        let pools = pools(1000);
        let claims = vec![vec![0, 1], vec![1]];
        let slices = PoolSlices::build(&[1000, 1000], &claims);
        let plan = ShardPlan::uniform(&[1], 200);
        for iter in 1..=3u32 {
            let a = draw_shard(&pools, &slices, &plan, 0, iter, 4, &space(), "a").unwrap();
            let b = draw_shard(&pools, &slices, &plan, 1, iter, 4, &space(), "b").unwrap();
            let sa: BTreeSet<u32> = a.indices[&1].iter().copied().collect();
            let sb: BTreeSet<u32> = b.indices[&1].iter().copied().collect();
            assert!(sa.intersection(&sb).next().is_none());
        }
    }

    #[test]
    fn draws_are_pure_functions_of_inputs() {
        let pools = pools(400);
        let slices = PoolSlices::build(&[400, 400], &[vec![0, 1]]);
        let plan = ShardPlan::uniform(&[0, 1], 50);
        let a = draw_shard(&pools, &slices, &plan, 0, 3, 21, &space(), "u").unwrap();
        let b = draw_shard(&pools, &slices, &plan, 0, 3, 21, &space(), "u").unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.indices, b.indices);
        let c = draw_shard(&pools, &slices, &plan, 0, 3, 22, &space(), "u").unwrap();
        assert_ne!(a.indices, c.indices);
    }

    #[test]
    fn iterations_draw_without_replacement_until_the_slice_wraps() {
        let pools = pools(100);
        let slices = PoolSlices::build(&[100, 100], &[vec![0]]);
        let plan = ShardPlan::uniform(&[0], 40);
        let mut seen = BTreeSet::new();
        // 100/40: iterations 1-2 fit, iteration 3 wraps and reshuffles.
        for iter in 1..=2u32 {
            let s = draw_shard(&pools, &slices, &plan, 0, iter, 5, &space(), "u").unwrap();
            for &r in &s.indices[&0] {
                assert!(seen.insert(r), "row {r} drawn twice before exhaustion");
            }
            assert!(s.reshuffled_labels.is_empty());
        }
        let s3 = draw_shard(&pools, &slices, &plan, 0, 3, 5, &space(), "u").unwrap();
        assert_eq!(s3.reshuffled_labels, vec![0]);
        assert_eq!(s3.indices[&0].len(), 40);
    }

    #[test]
    fn empty_slice_with_demand_is_pool_exhausted() {
        let pools = pools(10);
        // Client 1 claims nothing for label 0, so its slice is missing.
        let slices = PoolSlices::build(&[10, 10], &[vec![0], vec![1]]);
        let plan = ShardPlan::uniform(&[0], 5);
        let err = draw_shard(&pools, &slices, &plan, 1, 1, 5, &space(), "u1").unwrap_err();
        assert!(matches!(err, Error::PoolExhausted { .. }));
    }

    #[test]
    fn skew_renormalizes_to_the_base_total() {
        let mut plan = ShardPlan::uniform(&[0, 1], 500);
        plan.skew
            .insert(3, [(0usize, 9.0), (1usize, 1.0)].into_iter().collect());
        let base = plan.counts_for(1).unwrap();
        assert_eq!(base[&0], 500);
        let skewed = plan.counts_for(3).unwrap();
        assert_eq!(skewed.values().sum::<usize>(), 1000);
        assert_eq!(skewed[&0], 900);
        assert_eq!(skewed[&1], 100);
    }

    #[test]
    fn round_robin_slices_partition_the_pool() {
        let slices = PoolSlices::build(&[7], &[vec![0], vec![0], vec![0]]);
        let mut all: Vec<u32> = (0..3)
            .flat_map(|m| slices.slice(m, 0).unwrap().to_vec())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<u32>>());
    }
}
