//! The JSON experiment-config format.
//!
//! One JSON document describes the whole experiment; unknown keys are
//! errors. See docs/config.md for the schema with every key, type and
//! default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use fedscore_core::data::{LabelGaussian, ShardPlan, SyntheticSpec};
use fedscore_core::learner::{ArchSpec, LayerSpec, TrainConfig};
use fedscore_core::protocol::{AggregateMode, BetaAccMode};
use fedscore_core::sim::{ClientConfig, DataSource, ExperimentConfig};
use fedscore_core::{Error, LabelSpace, Result};

fn invalid(msg: String) -> Error {
    Error::ConfigInvalid(msg)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigJson {
    label_space: Vec<String>,
    iterations: u32,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    aggregate: AggregateMode,
    #[serde(default)]
    beta_acc: BetaAccMode,
    #[serde(default)]
    warm_start: bool,
    #[serde(default = "default_workers")]
    parallel_workers: usize,
    public: SourceJson,
    pools: SourceJson,
    clients: Vec<ClientJson>,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum SourceJson {
    Csv(PathBuf),
    Synthetic(SyntheticJson),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticJson {
    n_features: usize,
    per_label: BTreeMap<String, LabelGaussianJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelGaussianJson {
    mean: VecJson,
    std: VecJson,
    count: usize,
}

/// A length-d vector, spelled explicitly, as a constant fill, as a
/// single-axis spike, or as a sparse axis->value map over a constant base.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum VecJson {
    Values(Vec<f64>),
    Fill(FillJson),
    Axis(AxisJson),
    Sparse(SparseJson),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FillJson {
    fill: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisJson {
    axis: usize,
    value: f64,
    #[serde(default)]
    base: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseJson {
    sparse: BTreeMap<String, f64>,
    #[serde(default)]
    base: f64,
}

impl VecJson {
    fn materialize(&self, n_features: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            VecJson::Values(v) => {
                if v.len() != n_features {
                    return Err(invalid(format!(
                        "{key}: expected {n_features} values, got {}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
            VecJson::Fill(f) => Ok(vec![f.fill; n_features]),
            VecJson::Axis(a) => {
                if a.axis >= n_features {
                    return Err(invalid(format!(
                        "{key}: axis {} out of range for {n_features} features",
                        a.axis
                    )));
                }
                let mut v = vec![a.base; n_features];
                v[a.axis] = a.value;
                Ok(v)
            }
            VecJson::Sparse(s) => {
                let mut v = vec![s.base; n_features];
                for (axis, value) in &s.sparse {
                    let idx: usize = axis.parse().map_err(|_| {
                        invalid(format!("{key}: sparse key {axis:?} is not an index"))
                    })?;
                    if idx >= n_features {
                        return Err(invalid(format!(
                            "{key}: axis {idx} out of range for {n_features} features"
                        )));
                    }
                    v[idx] = *value;
                }
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClientJson {
    id: String,
    labels: Vec<String>,
    arch: Vec<ArchEntryJson>,
    #[serde(default)]
    train: TrainConfig,
    shard: ShardJson,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchEntryJson {
    iteration: u32,
    hidden: Vec<LayerSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShardJson {
    per_label: BTreeMap<String, usize>,
    #[serde(default)]
    skew: Vec<SkewJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkewJson {
    iteration: u32,
    multipliers: BTreeMap<String, f64>,
}

impl SourceJson {
    fn into_source(
        self,
        label_space: &LabelSpace,
        base: &Path,
        key: &str,
    ) -> Result<DataSource> {
        match self {
            SourceJson::Csv(path) => {
                let resolved = if path.is_relative() {
                    base.join(path)
                } else {
                    path
                };
                Ok(DataSource::Csv(resolved))
            }
            SourceJson::Synthetic(s) => {
                let mut per_label = Vec::with_capacity(label_space.len());
                for name in label_space.names() {
                    let g = s.per_label.get(name).ok_or_else(|| {
                        invalid(format!("{key}.synthetic.per_label: missing label {name:?}"))
                    })?;
                    per_label.push(LabelGaussian {
                        mean: g
                            .mean
                            .materialize(s.n_features, &format!("{key}.synthetic.per_label.{name}.mean"))?,
                        std: g
                            .std
                            .materialize(s.n_features, &format!("{key}.synthetic.per_label.{name}.std"))?,
                        pool_size: g.count,
                    });
                }
                for name in s.per_label.keys() {
                    if label_space.index_of(name).is_none() {
                        return Err(invalid(format!(
                            "{key}.synthetic.per_label: label {name:?} not in label_space"
                        )));
                    }
                }
                Ok(DataSource::Synthetic(SyntheticSpec {
                    n_features: s.n_features,
                    per_label,
                }))
            }
        }
    }
}

fn resolve_labels(names: &[String], space: &LabelSpace, key: &str) -> Result<Vec<usize>> {
    let mut cols = Vec::with_capacity(names.len());
    for n in names {
        let idx = space
            .index_of(n)
            .ok_or_else(|| invalid(format!("{key}: label {n:?} not in label_space")))?;
        cols.push(idx);
    }
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != names.len() {
        return Err(invalid(format!("{key}: duplicate labels")));
    }
    Ok(cols)
}

/// Parse and fully validate an experiment config. Relative CSV paths are
/// resolved against the config file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let json: ConfigJson = serde_json::from_str(&text).map_err(|e| {
        invalid(format!("{}: {e}", path.display()))
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let config = convert(json, base)?;
    config.validate()?;
    Ok(config)
}

fn convert(json: ConfigJson, base: &Path) -> Result<ExperimentConfig> {
    let label_space = LabelSpace::new(json.label_space)?;

    let public_source = json.public.into_source(&label_space, base, "public")?;
    let pool_source = json.pools.into_source(&label_space, base, "pools")?;

    let mut clients = Vec::with_capacity(json.clients.len());
    for (m, c) in json.clients.into_iter().enumerate() {
        let key = format!("clients[{m}]");
        let label_cols = resolve_labels(&c.labels, &label_space, &format!("{key}.labels"))?;

        let arch_schedule: Vec<(u32, ArchSpec)> = c
            .arch
            .into_iter()
            .map(|e| (e.iteration, ArchSpec { hidden: e.hidden }))
            .collect();

        let mut per_label = BTreeMap::new();
        for (name, count) in &c.shard.per_label {
            let idx = label_space.index_of(name).ok_or_else(|| {
                invalid(format!("{key}.shard.per_label: label {name:?} not in label_space"))
            })?;
            per_label.insert(idx, *count);
        }
        let mut skew = BTreeMap::new();
        for s in &c.shard.skew {
            let mut mults = BTreeMap::new();
            for (name, m) in &s.multipliers {
                let idx = label_space.index_of(name).ok_or_else(|| {
                    invalid(format!("{key}.shard.skew: label {name:?} not in label_space"))
                })?;
                mults.insert(idx, *m);
            }
            if skew.insert(s.iteration, mults).is_some() {
                return Err(invalid(format!(
                    "{key}.shard.skew: duplicate entry for iteration {}",
                    s.iteration
                )));
            }
        }

        clients.push(ClientConfig {
            id: c.id,
            label_cols,
            arch_schedule,
            train: c.train,
            plan: ShardPlan { per_label, skew },
        });
    }

    Ok(ExperimentConfig {
        label_space,
        public_source,
        pool_source,
        clients,
        iterations: json.iterations,
        master_seed: json.master_seed,
        aggregate: json.aggregate,
        beta_acc: json.beta_acc,
        warm_start: json.warm_start,
        parallel_workers: json.parallel_workers,
    })
}

/// Spec file for `gen-data`: a label space plus one synthetic block.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenSpecJson {
    label_space: Vec<String>,
    synthetic: SyntheticJson,
}

/// Parse a standalone dataset-generation spec.
pub fn parse_gen_spec(path: &Path) -> Result<(LabelSpace, SyntheticSpec)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let json: GenSpecJson = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let label_space = LabelSpace::new(json.label_space)?;
    let source =
        SourceJson::Synthetic(json.synthetic).into_source(&label_space, Path::new("."), "synthetic")?;
    match source {
        DataSource::Synthetic(spec) => Ok((label_space, spec)),
        DataSource::Csv(_) => unreachable!("constructed synthetic"),
    }
}
