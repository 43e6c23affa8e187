//! Experiment driver: runs (environment, policy) pairs, aggregates replicates
//! and sweeps over configurations.
//!
//! Replicate `r` of an experiment draws its seeds as
//! `derive_seed(base_seed, r, role)` for the noise and policy roles. The
//! instance seed is `derive_seed(base_seed, r, Instance)` for generated
//! instances; for adjacency directories it is keyed by the network index, so
//! every network keeps one fixed effect matrix across its runs. Results are
//! reduced in replicate order, so aggregation does not depend on which thread
//! finished first.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::environment::{aggregate, Environment};
use crate::instances::{
    adjacency_files, generate_circulant, generate_mixed_signal, load_adjacency, overlay_signal, AdjacencyError,
    InstanceError, SignalModelParams,
};
use crate::model::{instantaneous_regret, ActionVector, InterferenceInstance, RegretTrace};
use crate::policies::{
    BaselineConfig, BaselineUcb, Feedback, FeedbackKind, Netc, NetcConfig, Nse, NseConfig, NseFs, NseFsConfig,
    OraclePolicy, Policy,
};
use crate::rng::{derive_seed, StreamRole};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("policy dimension {policy} does not match environment dimension {env}")]
    DimensionMismatch { policy: usize, env: usize },
    #[error("round {round}: {detail}")]
    InvariantViolation { round: usize, detail: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
    #[error("adjacency source {0} contains no files")]
    EmptyAdjacencyDir(PathBuf),
    #[error("experiment `{id}`, replicate {replicate}: {source}")]
    Replicate {
        id: String,
        replicate: usize,
        #[source]
        source: Box<HarnessError>,
    },
}

/// How the ground-truth instance of each replicate is built.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    MixedSignal {
        d: usize,
        beta: f64,
        s0: f64,
        weak_factor: f64,
    },
    Circulant {
        d: usize,
        s: usize,
        delta: f64,
    },
    /// A single adjacency file or a directory of them, with mixed-signal
    /// magnitudes overlaid on edges and the diagonal.
    Adjacency {
        path: PathBuf,
        beta: f64,
        weak_factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Oracle,
    Baseline(BaselineConfig),
    Netc {
        config: NetcConfig,
        /// Row sparsity handed to the policy; default is the instance's.
        sparsity: Option<usize>,
    },
    Nse(NseConfig),
    NseFs(NseFsConfig),
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Oracle => "oracle",
            PolicySpec::Baseline(_) => "baseline",
            PolicySpec::Netc { .. } => "netc",
            PolicySpec::Nse(_) => "nse",
            PolicySpec::NseFs(_) => "nse-fs",
        }
    }
}

/// One experiment cell: one instance family, one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub instance: InstanceSpec,
    pub policy: PolicySpec,
    pub horizon: usize,
    /// Runs per instance source (per network for adjacency directories).
    pub n_runs: usize,
    pub base_seed: u64,
    pub noise_std: f64,
    pub output: Option<PathBuf>,
    /// Keep every `stride`-th round when writing CSV output.
    pub stride: usize,
    /// Also write one series per replicate.
    pub emit_replicates: bool,
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>, instance: InstanceSpec, policy: PolicySpec, horizon: usize, n_runs: usize) -> Self {
        Self {
            id: id.into(),
            instance,
            policy,
            horizon,
            n_runs,
            base_seed: 0,
            noise_std: Environment::DEFAULT_NOISE_STD,
            output: None,
            stride: 1,
            emit_replicates: false,
        }
    }
}

/// Builds `spec`'s policy, handing it only what its information setting
/// allows: the baseline gets `d`, NETC gets `d` and `s`, NSE gets the column
/// profile, NSE-FS the support mask. Only the oracle sees the effects.
pub fn build_policy(spec: &PolicySpec, instance: &InterferenceInstance, horizon: usize, seed: u64) -> Box<dyn Policy> {
    let d = instance.dim();
    match spec {
        PolicySpec::Oracle => Box::new(OraclePolicy::new(instance)),
        PolicySpec::Baseline(cfg) => Box::new(BaselineUcb::new(d, horizon, *cfg, seed)),
        PolicySpec::Netc { config, sparsity } => {
            let s = sparsity.unwrap_or_else(|| instance.row_sparsity());
            Box::new(Netc::new(d, horizon, s, *config, seed))
        }
        PolicySpec::Nse(cfg) => Box::new(Nse::new(horizon, instance.column_profile(), *cfg, seed)),
        PolicySpec::NseFs(cfg) => Box::new(NseFs::new(horizon, instance.support().clone(), *cfg, seed)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub action: ActionVector,
    pub rewards: Vec<f64>,
    pub regret: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub trace: RegretTrace,
    /// Present when requested with `record_rounds`.
    pub records: Option<Vec<RoundRecord>>,
    /// Round after which the policy's undetermined set was last nonempty.
    pub last_exploration_round: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_rounds: bool,
}

/// Tracks the undetermined set reported by a policy and checks that it only
/// shrinks and that committed coordinates keep their sign.
struct CommitmentAudit {
    frozen: Vec<Option<i8>>,
}

impl CommitmentAudit {
    fn new(d: usize) -> Self {
        Self { frozen: vec![None; d] }
    }

    fn check(&mut self, round: usize, undetermined: Option<&[bool]>, action: &ActionVector) -> Result<(), HarnessError> {
        let Some(u) = undetermined else {
            return Ok(());
        };
        for (j, (&open, &sign)) in u.iter().zip(action.as_slice()).enumerate() {
            match (self.frozen[j], open) {
                (Some(_), true) => {
                    return Err(HarnessError::InvariantViolation {
                        round,
                        detail: format!("coordinate {j} re-entered the undetermined set"),
                    })
                }
                (Some(prev), false) if prev != sign => {
                    return Err(HarnessError::InvariantViolation {
                        round,
                        detail: format!("committed coordinate {j} changed sign"),
                    })
                }
                (None, false) => self.frozen[j] = Some(sign),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Plays `horizon` rounds. Feedback is the full reward vector or its sum,
/// according to the policy's [`FeedbackKind`].
pub fn run_one(
    env: &mut Environment,
    policy: &mut dyn Policy,
    horizon: usize,
    opts: RunOptions,
) -> Result<RunOutput, HarnessError> {
    let d = env.dim();
    if policy.dim() != d {
        return Err(HarnessError::DimensionMismatch {
            policy: policy.dim(),
            env: d,
        });
    }
    let instance = env.shared_instance();
    let mut trace = RegretTrace::with_capacity(horizon);
    let mut records = opts.record_rounds.then(|| Vec::with_capacity(horizon));
    let mut audit = CommitmentAudit::new(d);
    let mut last_exploration_round = 0;
    for t in 1..=horizon {
        let a = policy.choose_action(t);
        if a.len() != d {
            return Err(HarnessError::DimensionMismatch { policy: a.len(), env: d });
        }
        let undetermined = policy.undetermined();
        if undetermined.is_some_and(|u| u.iter().any(|&b| b)) {
            last_exploration_round = t;
        }
        audit.check(t, undetermined, &a)?;
        let y = env.step(&a);
        match policy.feedback_kind() {
            FeedbackKind::Aggregate => policy.observe(t, Feedback::Aggregate(aggregate(&y))),
            FeedbackKind::Vector => policy.observe(t, Feedback::Vector(&y)),
        }
        let regret = instantaneous_regret(&instance, &a);
        if !(regret >= 0.0) {
            return Err(HarnessError::InvariantViolation {
                round: t,
                detail: format!("instantaneous regret {regret} is negative"),
            });
        }
        trace.push(regret);
        if let Some(rec) = records.as_mut() {
            rec.push(RoundRecord {
                t,
                action: a,
                rewards: y,
                regret,
            });
        }
    }
    Ok(RunOutput {
        trace,
        records,
        last_exploration_round,
    })
}

/// Cumulative regret of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTrace {
    pub replicate: usize,
    pub d: usize,
    pub cumulative: Vec<f64>,
}

enum InstanceSource {
    Generated,
    Networks(Vec<PathBuf>),
}

fn instance_source(spec: &InstanceSpec) -> Result<InstanceSource, HarnessError> {
    match spec {
        InstanceSpec::Adjacency { path, .. } => {
            if path.is_dir() {
                let files = adjacency_files(path)?;
                if files.is_empty() {
                    return Err(HarnessError::EmptyAdjacencyDir(path.clone()));
                }
                Ok(InstanceSource::Networks(files))
            } else {
                Ok(InstanceSource::Networks(vec![path.clone()]))
            }
        }
        _ => Ok(InstanceSource::Generated),
    }
}

/// Total replicate count: `n_runs`, times the number of networks for
/// adjacency directories.
pub fn replicate_count(config: &ExperimentConfig) -> Result<usize, HarnessError> {
    Ok(match instance_source(&config.instance)? {
        InstanceSource::Generated => config.n_runs,
        InstanceSource::Networks(files) => files.len() * config.n_runs,
    })
}

fn build_instance(spec: &InstanceSpec, seed: u64, network: Option<&Path>) -> Result<InterferenceInstance, HarnessError> {
    Ok(match spec {
        InstanceSpec::MixedSignal {
            d,
            beta,
            s0,
            weak_factor,
        } => generate_mixed_signal(&SignalModelParams {
            d: *d,
            beta: *beta,
            s0: *s0,
            weak_factor: *weak_factor,
            seed,
        })?,
        InstanceSpec::Circulant { d, s, delta } => generate_circulant(*d, *s, *delta)?,
        InstanceSpec::Adjacency { beta, weak_factor, .. } => {
            let path = network.expect("adjacency replicates carry a network path");
            let adj = load_adjacency(path)?;
            overlay_signal(
                &adj,
                &SignalModelParams {
                    d: adj.len(),
                    beta: *beta,
                    s0: 1.0,
                    weak_factor: *weak_factor,
                    seed,
                },
            )?
        }
    })
}

/// Instance used by replicate `r`.
pub fn replicate_instance(config: &ExperimentConfig, r: usize) -> Result<InterferenceInstance, HarnessError> {
    match instance_source(&config.instance)? {
        InstanceSource::Generated => build_instance(
            &config.instance,
            derive_seed(config.base_seed, r as u64, StreamRole::Instance),
            None,
        ),
        InstanceSource::Networks(files) => {
            let k = r / config.n_runs.max(1);
            let path = files.get(k).ok_or_else(|| HarnessError::InvariantViolation {
                round: 0,
                detail: format!("replicate {r} has no network"),
            })?;
            build_instance(
                &config.instance,
                derive_seed(config.base_seed, k as u64, StreamRole::Instance),
                Some(path),
            )
        }
    }
}

/// Runs replicate `r` of `config` from scratch.
pub fn run_replicate(config: &ExperimentConfig, r: usize) -> Result<ReplicateTrace, HarnessError> {
    let wrap = |e: HarnessError| HarnessError::Replicate {
        id: config.id.clone(),
        replicate: r,
        source: Box::new(e),
    };
    let instance = Arc::new(replicate_instance(config, r).map_err(wrap)?);
    let d = instance.dim();
    let mut env = Environment::new(
        Arc::clone(&instance),
        config.noise_std,
        derive_seed(config.base_seed, r as u64, StreamRole::Noise),
    );
    let mut policy = build_policy(
        &config.policy,
        &instance,
        config.horizon,
        derive_seed(config.base_seed, r as u64, StreamRole::Policy),
    );
    let out = run_one(&mut env, policy.as_mut(), config.horizon, RunOptions::default()).map_err(wrap)?;
    Ok(ReplicateTrace {
        replicate: r,
        d,
        cumulative: out.trace.cumulative,
    })
}

/// Pointwise statistics over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub experiment: String,
    pub policy: String,
    /// Mean cumulative regret per round.
    pub mean: Vec<f64>,
    /// Population standard deviation of cumulative regret per round.
    pub std: Vec<f64>,
    /// Mean of `cumulative / d` per round.
    pub per_individual_mean: Vec<f64>,
    pub per_individual_std: Vec<f64>,
    /// Final cumulative regret of each replicate.
    pub finals: Vec<f64>,
    /// Dimension of each replicate's instance.
    pub dims: Vec<usize>,
    /// Full cumulative curves, kept when the config asks for them.
    pub replicates: Option<Vec<Vec<f64>>>,
}

impl AggregateResult {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_per_individual(&self) -> f64 {
        self.per_individual_mean.last().copied().unwrap_or(0.0)
    }
}

fn mean_std(columns: &[&[f64]], t: usize) -> (f64, f64) {
    let n = columns.len() as f64;
    let mean = columns.iter().map(|c| c[t]).sum::<f64>() / n;
    let var = columns.iter().map(|c| (c[t] - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Reduces replicate traces (in any order) to an [`AggregateResult`].
pub fn aggregate_traces(config: &ExperimentConfig, mut traces: Vec<ReplicateTrace>) -> AggregateResult {
    traces.sort_by_key(|t| t.replicate);
    let horizon = config.horizon;
    let dims: Vec<usize> = traces.iter().map(|t| t.d).collect();
    let uniform_d = dims.first().copied().filter(|&d| dims.iter().all(|&x| x == d));
    let curves: Vec<&[f64]> = traces.iter().map(|t| t.cumulative.as_slice()).collect();
    let scaled: Vec<Vec<f64>> = match uniform_d {
        Some(_) => Vec::new(),
        None => traces
            .iter()
            .map(|t| t.cumulative.iter().map(|c| c / t.d as f64).collect())
            .collect(),
    };
    let scaled_refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();

    let mut mean = Vec::with_capacity(horizon);
    let mut std = Vec::with_capacity(horizon);
    let mut pi_mean = Vec::with_capacity(horizon);
    let mut pi_std = Vec::with_capacity(horizon);
    if !curves.is_empty() {
        for t in 0..horizon {
            let (m, s) = mean_std(&curves, t);
            mean.push(m);
            std.push(s);
            match uniform_d {
                Some(d) => {
                    pi_mean.push(m / d as f64);
                    pi_std.push(s / d as f64);
                }
                None => {
                    let (m, s) = mean_std(&scaled_refs, t);
                    pi_mean.push(m);
                    pi_std.push(s);
                }
            }
        }
    }
    let finals = traces.iter().map(|t| t.cumulative.last().copied().unwrap_or(0.0)).collect();
    let replicates = config
        .emit_replicates
        .then(|| traces.iter().map(|t| t.cumulative.clone()).collect());
    AggregateResult {
        experiment: config.id.clone(),
        policy: config.policy.name().to_string(),
        mean,
        std,
        per_individual_mean: pi_mean,
        per_individual_std: pi_std,
        finals,
        dims,
        replicates,
    }
}

/// Runs every replicate of `config` (in parallel) and aggregates them.
pub fn run_many(config: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    let n = replicate_count(config)?;
    let traces = (0..n)
        .into_par_iter()
        .map(|r| run_replicate(config, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate_traces(config, traces))
}

/// Outcome of one sweep cell; failures do not stop the sweep.
#[derive(Debug)]
pub struct CellResult {
    pub id: String,
    pub policy: String,
    pub result: Result<AggregateResult, HarnessError>,
}

/// Runs independent cells concurrently, in input order.
pub fn sweep(configs: &[ExperimentConfig]) -> Vec<CellResult> {
    configs
        .par_iter()
        .map(|c| CellResult {
            id: c.id.clone(),
            policy: c.policy.name().to_string(),
            result: run_many(c),
        })
        .collect()
}
