//! The score-consensus protocol: alpha-weighted local updates, per-label
//! beta weights, and the label-wise global aggregation, plus the accuracy
//! metrics derived from them.
//!
//! Sequencing per iteration: every participating client trains, predicts on
//! the public set and applies its local update; then, at a single barrier,
//! betas are assigned from the updated scores and the global state advances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::score::{argmax_label, GlobalScoreState, ScoreMatrix};

/// Private-to-public size ratio governing how much the fresh local scores
/// move the consensus.
pub fn alpha(shard_size: usize, public_size: usize) -> f64 {
    debug_assert!(public_size >= 1);
    shard_size as f64 / public_size as f64
}

/// One client's contribution to an iteration: its fresh predictions over the
/// public set and the alpha-updated scores the coordinator will consume.
#[derive(Debug, Clone)]
pub struct LocalRound {
    pub client_idx: usize,
    pub fresh: ScoreMatrix,
    pub updated: ScoreMatrix,
    pub alpha: f64,
    pub shard_size: usize,
}

impl LocalRound {
    pub fn new(
        client_idx: usize,
        fresh: ScoreMatrix,
        updated: ScoreMatrix,
        alpha: f64,
        shard_size: usize,
    ) -> Result<Self> {
        if fresh.cols() != updated.cols() || fresh.rows() != updated.rows() {
            return Err(Error::ShapeMismatch(
                "fresh and updated scores must share shape and columns".into(),
            ));
        }
        let expected = shard_size as f64 / fresh.rows() as f64;
        if alpha != expected {
            return Err(Error::ShapeMismatch(format!(
                "alpha {alpha} != shard/public ratio {expected}"
            )));
        }
        Ok(Self {
            client_idx,
            fresh,
            updated,
            alpha,
            shard_size,
        })
    }

    /// Label-space indices this client claims.
    pub fn label_cols(&self) -> &[usize] {
        self.fresh.cols()
    }
}

/// Blend the previous consensus (restricted to the client's labels) with the
/// client's fresh predictions: `restrict(global, l_m) + alpha * fresh`.
pub fn local_update(
    global: &GlobalScoreState,
    fresh: &ScoreMatrix,
    alpha: f64,
) -> Result<ScoreMatrix> {
    if fresh.rows() != global.scores.rows() {
        return Err(Error::ShapeMismatch(format!(
            "fresh has {} rows, global state has {}",
            fresh.rows(),
            global.scores.rows()
        )));
    }
    let restricted = global.scores.restrict_columns(fresh.cols())?;
    let values = restricted.values() + &(fresh.values() * alpha);
    ScoreMatrix::new(fresh.cols().to_vec(), values)
}

/// Per-label recall of `scores` on the public set: for each score column c,
/// the fraction of public examples with true label c whose row argmax
/// (over the score columns) is c.
pub fn per_label_accuracy(scores: &ScoreMatrix, public: &Dataset) -> Result<BTreeMap<usize, f64>> {
    check_rows(scores, public)?;
    let mut hits: BTreeMap<usize, (usize, usize)> =
        scores.cols().iter().map(|&c| (c, (0, 0))).collect();
    for (r, &truth) in public.labels().iter().enumerate() {
        if let Some(entry) = hits.get_mut(&truth) {
            entry.1 += 1;
            if argmax_label(scores.row(r), scores.cols())? == truth {
                entry.0 += 1;
            }
        }
    }
    let mut out = BTreeMap::new();
    for (c, (correct, total)) in hits {
        if total == 0 {
            // Config validation guarantees every label has public examples;
            // direct callers get a loud error instead of a silent 0/0.
            return Err(Error::NoEligibleExamples);
        }
        out.insert(c, correct as f64 / total as f64);
    }
    Ok(out)
}

/// Accuracy over the public examples whose true label lies in the score
/// columns: fraction where the row argmax equals the true label. Used for
/// both the local-update and the global-update curves.
pub fn evaluate_user_accuracy(scores: &ScoreMatrix, public: &Dataset) -> Result<f64> {
    check_rows(scores, public)?;
    let mut correct = 0usize;
    let mut eligible = 0usize;
    for (r, &truth) in public.labels().iter().enumerate() {
        if scores.col_position(truth).is_none() {
            continue;
        }
        eligible += 1;
        if argmax_label(scores.row(r), scores.cols())? == truth {
            correct += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::NoEligibleExamples);
    }
    Ok(correct as f64 / eligible as f64)
}

fn check_rows(scores: &ScoreMatrix, public: &Dataset) -> Result<()> {
    if scores.rows() != public.n_examples() {
        return Err(Error::ShapeMismatch(format!(
            "{} score rows vs {} public examples",
            scores.rows(),
            public.n_examples()
        )));
    }
    Ok(())
}

/// Which accuracy feeds beta for shared labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaAccMode {
    /// Per-label recall of the claimant's updated scores (default).
    #[default]
    PerLabel,
    /// The claimant's whole-subset accuracy, reused for each of its labels.
    Subset,
}

/// Per-(client, label) aggregation weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BetaAssignment {
    per: BTreeMap<(usize, usize), f64>,
}

impl BetaAssignment {
    pub fn set(&mut self, client_idx: usize, label: usize, beta: f64) {
        self.per.insert((client_idx, label), beta);
    }

    pub fn get(&self, client_idx: usize, label: usize) -> Option<f64> {
        self.per.get(&(client_idx, label)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.per.iter().map(|(&(c, l), &b)| (c, l, b))
    }
}

/// Assign betas for one iteration's participating rounds.
///
/// A label claimed by exactly one participant gets beta 1; a shared label
/// gets each claimant's own public-set accuracy (per `mode`, computed from
/// its updated scores). Every label in `claimed_labels` must be covered by
/// at least one round.
pub fn assign_beta(
    rounds: &[LocalRound],
    public: &Dataset,
    claimed_labels: &[usize],
    mode: BetaAccMode,
) -> Result<BetaAssignment> {
    let mut claimants: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, round) in rounds.iter().enumerate() {
        for &label in round.label_cols() {
            claimants.entry(label).or_default().push(k);
        }
    }
    for &label in claimed_labels {
        if !claimants.contains_key(&label) {
            return Err(Error::UnclaimedLabel(format!("label index {label}")));
        }
    }

    let mut betas = BetaAssignment::default();
    let mut cache: Vec<Option<BTreeMap<usize, f64>>> = vec![None; rounds.len()];
    let mut subset_cache: Vec<Option<f64>> = vec![None; rounds.len()];
    for (label, owners) in &claimants {
        if owners.len() == 1 {
            let round = &rounds[owners[0]];
            betas.set(round.client_idx, *label, 1.0);
            continue;
        }
        for &k in owners {
            let round = &rounds[k];
            let beta = match mode {
                BetaAccMode::PerLabel => {
                    if cache[k].is_none() {
                        cache[k] = Some(per_label_accuracy(&round.updated, public)?);
                    }
                    cache[k].as_ref().unwrap()[label]
                }
                BetaAccMode::Subset => {
                    if subset_cache[k].is_none() {
                        subset_cache[k] = Some(evaluate_user_accuracy(&round.updated, public)?);
                    }
                    subset_cache[k].unwrap()
                }
            };
            betas.set(round.client_idx, *label, beta);
        }
    }
    Ok(betas)
}

/// How claimant columns combine into the new global column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Beta-weighted average: `sum(beta * col) / sum(beta)` (default).
    /// A column with a single claimant is copied through bit-exactly.
    #[default]
    Normalized,
    /// The literal weighted sum `sum(beta * col)`, no normalization.
    Sum,
}

/// Label-wise aggregation of the claimants' updated columns.
///
/// Columns with no claimant, or whose betas sum to zero, carry over from
/// `prev`; without a previous matrix that is a `NoParticipants` error.
pub fn aggregate_scores(
    rounds: &[LocalRound],
    betas: &BetaAssignment,
    n_labels: usize,
    n_rows: usize,
    prev: Option<&ScoreMatrix>,
    mode: AggregateMode,
) -> Result<ScoreMatrix> {
    if let Some(p) = prev {
        if p.rows() != n_rows || p.cols().len() != n_labels {
            return Err(Error::ShapeMismatch(
                "previous global scores do not cover the full label space".into(),
            ));
        }
    }
    for round in rounds {
        if round.updated.rows() != n_rows {
            return Err(Error::ShapeMismatch(format!(
                "client {} contributed {} rows, expected {n_rows}",
                round.client_idx,
                round.updated.rows()
            )));
        }
    }

    let mut values = ndarray::Array2::zeros((n_rows, n_labels));
    for label in 0..n_labels {
        let mut owners: Vec<(&LocalRound, f64, usize)> = Vec::new();
        for round in rounds {
            if let Some(pos) = round.updated.col_position(label) {
                let beta = betas.get(round.client_idx, label).ok_or_else(|| {
                    Error::UnclaimedLabel(format!(
                        "no beta for client {} label {label}",
                        round.client_idx
                    ))
                })?;
                owners.push((round, beta, pos));
            }
        }
        let beta_sum: f64 = owners.iter().map(|(_, b, _)| *b).sum();

        if owners.is_empty() || beta_sum == 0.0 {
            match prev {
                Some(p) => {
                    let pos = p.col_position(label).expect("prev covers all labels");
                    values
                        .column_mut(label)
                        .assign(&p.values().column(pos));
                }
                None => return Err(Error::NoParticipants(label)),
            }
            continue;
        }

        match mode {
            AggregateMode::Normalized if owners.len() == 1 => {
                // Unique-label passthrough: avoid beta * x / beta so the
                // column stays bit-identical to the claimant's.
                let (round, _, pos) = owners[0];
                values
                    .column_mut(label)
                    .assign(&round.updated.values().column(pos));
            }
            AggregateMode::Normalized => {
                let mut col = ndarray::Array1::zeros(n_rows);
                for (round, beta, pos) in &owners {
                    col.scaled_add(*beta, &round.updated.values().column(*pos));
                }
                col.mapv_inplace(|v| v / beta_sum);
                values.column_mut(label).assign(&col);
            }
            AggregateMode::Sum => {
                let mut col = ndarray::Array1::zeros(n_rows);
                for (round, beta, pos) in &owners {
                    col.scaled_add(*beta, &round.updated.values().column(*pos));
                }
                values.column_mut(label).assign(&col);
            }
        }
    }
    ScoreMatrix::new((0..n_labels).collect(), values)
}

/// Advance the global state by one iteration.
pub fn global_update(
    rounds: &[LocalRound],
    betas: &BetaAssignment,
    prev: &GlobalScoreState,
    n_labels: usize,
    mode: AggregateMode,
) -> Result<GlobalScoreState> {
    let scores = aggregate_scores(
        rounds,
        betas,
        n_labels,
        prev.scores.rows(),
        Some(&prev.scores),
        mode,
    )?;
    Ok(GlobalScoreState {
        iteration: prev.iteration + 1,
        scores,
    })
}
