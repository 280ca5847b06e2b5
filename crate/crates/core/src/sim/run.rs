//! The experiment loop.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{
    draw_shard, generate_synthetic, load_csv_dataset, LabelPools, PoolSlices, Standardizer,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{init_model, predict_scores, train, Model};
use crate::payload::PayloadAccount;
use crate::protocol::{
    alpha, assign_beta, evaluate_user_accuracy, global_update, local_update, LocalRound,
};
use crate::score::GlobalScoreState;
use crate::seed::{derive_seed, stream};
use crate::sim::config::{ClientConfig, DataSource, ExperimentConfig};
use crate::sim::report::{ClientMeta, ClientRecord, ExperimentReport, IterationRecord, RunMeta};

/// Loaded, standardized data plus the per-client pool slices.
pub struct PreparedData {
    pub public: Dataset,
    pub pools: LabelPools,
    pub slices: PoolSlices,
}

/// Load or generate the public set and private pools, standardize features
/// with the public set's statistics, and slice the pools round-robin among
/// claimants.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let ls = &config.label_space;
    let public_raw = match &config.public_source {
        DataSource::Csv(path) => load_csv_dataset(path, ls)?,
        DataSource::Synthetic(spec) => {
            generate_synthetic(spec, ls, config.master_seed, stream::PUBLIC_DATA)?
                .to_dataset(ls)?
        }
    };
    if public_raw.n_examples() == 0 {
        return Err(Error::ConfigInvalid("public: dataset is empty".into()));
    }
    let hist = public_raw.label_histogram(ls.len());
    if let Some(missing) = hist.iter().position(|&n| n == 0) {
        return Err(Error::ConfigInvalid(format!(
            "public: no examples of label {:?}",
            ls.name(missing)
        )));
    }

    let mut pools = match &config.pool_source {
        DataSource::Csv(path) => LabelPools::from_dataset(&load_csv_dataset(path, ls)?, ls),
        DataSource::Synthetic(spec) => {
            generate_synthetic(spec, ls, config.master_seed, stream::POOL_DATA)?
        }
    };
    if pools.n_features != public_raw.n_features() {
        return Err(Error::ConfigInvalid(format!(
            "pools: {} features vs public's {}",
            pools.n_features,
            public_raw.n_features()
        )));
    }

    let standardizer = Standardizer::fit(&public_raw);
    let public = standardizer.apply_dataset(public_raw);
    standardizer.apply_pools(&mut pools);

    let pool_sizes: Vec<usize> = pools.per_label.iter().map(|p| p.nrows()).collect();
    let slices = PoolSlices::build(&pool_sizes, &config.claims());

    Ok(PreparedData {
        public,
        pools,
        slices,
    })
}

/// What one client's local phase produces before the aggregation barrier.
struct ClientPhase {
    client_idx: usize,
    round: LocalRound,
    local_accuracy: f64,
    counts: BTreeMap<usize, usize>,
    reshuffled: Vec<usize>,
    epochs_run: usize,
    final_loss: f64,
    model: Model,
    train_ms: f64,
}

fn client_phase(
    config: &ExperimentConfig,
    data: &PreparedData,
    state: &GlobalScoreState,
    client_idx: usize,
    client: &ClientConfig,
    prev_model: Option<&Model>,
    iteration: u32,
) -> Result<Option<ClientPhase>> {
    let counts = client.plan.counts_for(iteration)?;
    let shard_size: usize = counts.values().sum();
    if shard_size == 0 {
        // An empty plan means the client sits this iteration out.
        return Ok(None);
    }

    let shard = draw_shard(
        &data.pools,
        &data.slices,
        &client.plan,
        client_idx,
        iteration,
        config.master_seed,
        &config.label_space,
        &client.id,
    )?;

    let arch = client.arch_for(iteration);
    let model = match prev_model {
        Some(prev) if config.warm_start && prev.arch() == arch => prev.clone(),
        _ => init_model(
            arch,
            data.public.n_features(),
            &client.label_cols,
            derive_seed(
                config.master_seed,
                &[stream::MODEL_INIT, client_idx as u64, iteration as u64],
            ),
        )?,
    };

    let started = Instant::now();
    let outcome = train(
        model,
        &shard.dataset,
        &client.train,
        derive_seed(
            config.master_seed,
            &[stream::TRAIN_BATCHES, client_idx as u64, iteration as u64],
        ),
    )?;
    let train_ms = started.elapsed().as_secs_f64() * 1e3;

    let fresh = predict_scores(&outcome.model, &data.public)?;
    let a = alpha(shard_size, data.public.n_examples());
    let updated = local_update(state, &fresh, a)?;
    let local_accuracy = evaluate_user_accuracy(&updated, &data.public)?;
    let round = LocalRound::new(client_idx, fresh, updated, a, shard_size)?;

    Ok(Some(ClientPhase {
        client_idx,
        round,
        local_accuracy,
        counts: shard.counts,
        reshuffled: shard.reshuffled_labels,
        epochs_run: outcome.epochs_run,
        final_loss: outcome.final_loss,
        model: outcome.model,
        train_ms,
    }))
}

/// Run one iteration: every participating client trains, scores the public
/// set and applies its local update; then betas are assigned and the global
/// state advances once.
///
/// `prev_models` carries each client's last trained model across iterations
/// for `warm_start`; it is updated in place.
pub fn run_iteration(
    config: &ExperimentConfig,
    data: &PreparedData,
    state: &GlobalScoreState,
    prev_models: &mut [Option<Model>],
    iteration: u32,
) -> Result<(GlobalScoreState, IterationRecord)> {
    if state.iteration + 1 != iteration {
        return Err(Error::ConfigInvalid(format!(
            "run_iteration {iteration} called on state at iteration {}",
            state.iteration
        )));
    }

    let phases: Vec<Option<ClientPhase>> = config
        .clients
        .par_iter()
        .enumerate()
        .map(|(client_idx, client)| {
            client_phase(
                config,
                data,
                state,
                client_idx,
                client,
                prev_models[client_idx].as_ref(),
                iteration,
            )
            .map_err(|e| e.in_client(&client.id, iteration))
        })
        .collect::<Result<_>>()?;

    let phases: Vec<ClientPhase> = phases.into_iter().flatten().collect();
    let rounds: Vec<LocalRound> = phases.iter().map(|p| p.round.clone()).collect();
    let claimed: Vec<usize> = {
        let mut all: Vec<usize> = rounds.iter().flat_map(|r| r.label_cols().to_vec()).collect();
        all.sort_unstable();
        all.dedup();
        all
    };

    let betas = assign_beta(&rounds, &data.public, &claimed, config.beta_acc)?;
    let next = global_update(
        &rounds,
        &betas,
        state,
        config.label_space.len(),
        config.aggregate,
    )?;
    let overall = evaluate_user_accuracy(&next.scores, &data.public)?;

    let ls = &config.label_space;
    let mut records = Vec::with_capacity(phases.len());
    for phase in phases {
        let client = &config.clients[phase.client_idx];
        let restricted = next.scores.restrict_columns(&client.label_cols)?;
        let global_accuracy = evaluate_user_accuracy(&restricted, &data.public)
            .map_err(|e| e.in_client(&client.id, iteration))?;
        let payload = PayloadAccount::new(&phase.round.updated, phase.model.param_count());
        records.push(ClientRecord {
            id: client.id.clone(),
            arch: client.arch_for(iteration).to_string(),
            alpha: phase.round.alpha,
            shard_size: phase.round.shard_size,
            shard_per_label: phase
                .counts
                .iter()
                .map(|(&l, &n)| (ls.name(l).to_string(), n))
                .collect(),
            betas: betas
                .iter()
                .filter(|&(c, _, _)| c == phase.client_idx)
                .map(|(_, l, b)| (ls.name(l).to_string(), b))
                .collect(),
            local_accuracy: phase.local_accuracy,
            global_accuracy,
            epochs_run: phase.epochs_run,
            final_loss: phase.final_loss,
            param_count: phase.model.param_count(),
            score_payload_bytes: payload.score_payload_bytes,
            weight_payload_bytes: payload.weight_payload_bytes,
            payload_ratio: payload.ratio,
            reshuffled_labels: phase
                .reshuffled
                .iter()
                .map(|&l| ls.name(l).to_string())
                .collect(),
            train_ms: phase.train_ms,
        });
        prev_models[phase.client_idx] = Some(phase.model);
    }

    let record = IterationRecord {
        iteration,
        global_accuracy: overall,
        clients: records,
    };
    Ok((next, record))
}

/// Run the whole experiment from the all-zero iteration-0 state.
///
/// The report is a pure function of `(config, master_seed)`: every random
/// stream is derived per (purpose, client, iteration), so results do not
/// depend on `parallel_workers`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = prepare_data(config)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel_workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("parallel_workers: {e}")))?;

    let mut state = GlobalScoreState::initial(&config.label_space, data.public.n_examples());
    let mut prev_models: Vec<Option<Model>> = vec![None; config.clients.len()];
    let mut iterations = Vec::with_capacity(config.iterations as usize);

    pool.install(|| -> Result<()> {
        for i in 1..=config.iterations {
            let (next, record) = run_iteration(config, &data, &state, &mut prev_models, i)?;
            state = next;
            iterations.push(record);
        }
        Ok(())
    })?;

    Ok(ExperimentReport {
        meta: RunMeta {
            label_space: config.label_space.names().to_vec(),
            iterations: config.iterations,
            master_seed: config.master_seed,
            aggregate: config.aggregate,
            beta_acc: config.beta_acc,
            warm_start: config.warm_start,
            public_examples: data.public.n_examples(),
            n_features: data.public.n_features(),
            clients: config
                .clients
                .iter()
                .map(|c| ClientMeta {
                    id: c.id.clone(),
                    labels: c
                        .label_cols
                        .iter()
                        .map(|&l| config.label_space.name(l).to_string())
                        .collect(),
                })
                .collect(),
        },
        iterations,
    })
}
