//! Experiment files.
//!
//! An experiment file is TOML with one `[[experiment]]` table per cell.
//! Each listed policy becomes its own [`ExperimentConfig`]; the policies of a
//! cell share instances and seeds.
//!
//! ```toml
//! [[experiment]]
//! id = "small"
//! T = 2000                     # horizon, required
//! runs = 10                    # replicates per instance source, required
//! seed = 7                     # base seed, default 0
//! noise_std = 1.0              # default 1.0
//! policies = ["baseline", "netc", "nse", "nse-fs"]   # also "oracle"
//! output = "small.csv"         # default "<id>.csv"
//! stride = 10                  # keep every 10th round in the CSV, default 1
//! replicates = false           # also write one series per replicate
//!
//! [experiment.instance]
//! kind = "mixed-signal"        # d, beta, s0, optional weak_factor
//! # kind = "circulant"         # d, s, delta
//! # kind = "adjacency"         # path (file or directory), beta, optional weak_factor
//! d = 50
//! beta = 0.1
//! s0 = 10
//!
//! [experiment.netc]            # all optional
//! lambda = 0.035
//! T1 = 100
//! delta = 0.01                 # for the default lambda
//! s = 10                       # sparsity handed to the policy
//!
//! [experiment.nse]             # c_tau selects the practical threshold,
//! c_tau = 0.2                  # delta the theoretical one (not both)
//!
//! [experiment.nse_fs]          # all optional
//! delta = 0.05
//! tau_constant = 8.0
//! m0 = 4
//!
//! [experiment.baseline]        # all optional
//! ridge = 1.0
//! delta = 0.001
//! theta_bound = 50.0
//! restarts = 8
//! budget = 10000
//! ```
//!
//! Unknown keys are rejected. Relative paths resolve against the directory
//! of the experiment file (the working directory for presets).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::environment::Environment;
use crate::harness::{ExperimentConfig, InstanceSpec, PolicySpec};
use crate::instances::SignalModelParams;
use crate::policies::{BaselineConfig, NetcConfig, NseConfig, NseFsConfig, NseThresholds};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: `{key}` {message}")]
    Validation {
        origin: String,
        key: String,
        message: String,
    },
}

impl ConfigError {
    /// Key path of a validation error, e.g. `experiment[0].T`.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    experiment: Vec<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    id: Option<String>,
    #[serde(rename = "T")]
    horizon: Option<i64>,
    runs: Option<i64>,
    seed: Option<u64>,
    noise_std: Option<f64>,
    policies: Option<Vec<String>>,
    output: Option<PathBuf>,
    stride: Option<i64>,
    replicates: Option<bool>,
    instance: Option<RawInstance>,
    netc: Option<RawNetc>,
    nse: Option<RawNse>,
    nse_fs: Option<RawNseFs>,
    baseline: Option<RawBaseline>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    kind: Option<String>,
    d: Option<i64>,
    beta: Option<f64>,
    s0: Option<f64>,
    weak_factor: Option<f64>,
    s: Option<i64>,
    delta: Option<f64>,
    path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetc {
    lambda: Option<f64>,
    #[serde(rename = "T1")]
    explore_rounds: Option<i64>,
    delta: Option<f64>,
    s: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNse {
    c_tau: Option<f64>,
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNseFs {
    delta: Option<f64>,
    tau_constant: Option<f64>,
    m0: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    ridge: Option<f64>,
    delta: Option<f64>,
    theta_bound: Option<f64>,
    restarts: Option<i64>,
    budget: Option<i64>,
}

struct Ctx<'a> {
    origin: &'a str,
    prefix: String,
}

impl Ctx<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Validation {
            origin: self.origin.to_string(),
            key: format!("{}.{}", self.prefix, key),
            message: message.into(),
        }
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T, ConfigError> {
        v.ok_or_else(|| self.err(key, "is required"))
    }

    fn count(&self, key: &str, v: i64, min: i64) -> Result<usize, ConfigError> {
        if v < min {
            return Err(self.err(key, format!("must be at least {min}, got {v}")));
        }
        usize::try_from(v).map_err(|_| self.err(key, "is too large"))
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be finite and positive, got {v}")))
        }
    }

    fn probability(&self, key: &str, v: f64) -> Result<f64, ConfigError> {
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must lie in (0, 1), got {v}")))
        }
    }

    fn nested(&self, table: &str) -> Ctx<'_> {
        Ctx {
            origin: self.origin,
            prefix: format!("{}.{}", self.prefix, table),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn instance_spec(ctx: &Ctx<'_>, raw: RawInstance, base: &Path) -> Result<InstanceSpec, ConfigError> {
    let kind = ctx.required("kind", raw.kind)?;
    let weak = raw.weak_factor.unwrap_or(SignalModelParams::WEAK_FACTOR);
    let reject = |key: &str, present: bool| -> Result<(), ConfigError> {
        if present {
            Err(ctx.err(key, format!("does not apply to kind \"{kind}\"")))
        } else {
            Ok(())
        }
    };
    match kind.as_str() {
        "mixed-signal" => {
            reject("s", raw.s.is_some())?;
            reject("delta", raw.delta.is_some())?;
            reject("path", raw.path.is_some())?;
            let d = ctx.count("d", ctx.required("d", raw.d)?, 1)?;
            let beta = ctx.positive("beta", ctx.required("beta", raw.beta)?)?;
            let s0 = ctx.required("s0", raw.s0)?;
            if !(s0 >= 0.0 && s0 <= d as f64) {
                return Err(ctx.err("s0", format!("must lie in [0, d = {d}], got {s0}")));
            }
            Ok(InstanceSpec::MixedSignal {
                d,
                beta,
                s0,
                weak_factor: ctx.positive("weak_factor", weak)?,
            })
        }
        "circulant" => {
            for (k, present) in [
                ("beta", raw.beta.is_some()),
                ("s0", raw.s0.is_some()),
                ("weak_factor", raw.weak_factor.is_some()),
                ("path", raw.path.is_some()),
            ] {
                reject(k, present)?;
            }
            let d = ctx.count("d", ctx.required("d", raw.d)?, 1)?;
            let s = ctx.count("s", ctx.required("s", raw.s)?, 1)?;
            if s > d {
                return Err(ctx.err("s", format!("must not exceed d = {d}")));
            }
            let delta = ctx.required("delta", raw.delta)?;
            if !delta.is_finite() {
                return Err(ctx.err("delta", "must be finite"));
            }
            Ok(InstanceSpec::Circulant { d, s, delta })
        }
        "adjacency" => {
            for (k, present) in [
                ("d", raw.d.is_some()),
                ("s0", raw.s0.is_some()),
                ("s", raw.s.is_some()),
                ("delta", raw.delta.is_some()),
            ] {
                reject(k, present)?;
            }
            let path = resolve(base, &ctx.required("path", raw.path)?);
            let beta = ctx.positive("beta", ctx.required("beta", raw.beta)?)?;
            Ok(InstanceSpec::Adjacency {
                path,
                beta,
                weak_factor: ctx.positive("weak_factor", weak)?,
            })
        }
        other => Err(ctx.err(
            "kind",
            format!("must be \"mixed-signal\", \"circulant\" or \"adjacency\", got \"{other}\""),
        )),
    }
}

fn netc_spec(ctx: &Ctx<'_>, raw: Option<RawNetc>) -> Result<PolicySpec, ConfigError> {
    let raw = raw.unwrap_or(RawNetc {
        lambda: None,
        explore_rounds: None,
        delta: None,
        s: None,
    });
    let ctx = ctx.nested("netc");
    Ok(PolicySpec::Netc {
        config: NetcConfig {
            lambda: raw.lambda.map(|v| ctx.positive("lambda", v)).transpose()?,
            explore_rounds: raw.explore_rounds.map(|v| ctx.count("T1", v, 1)).transpose()?,
            delta: raw.delta.map(|v| ctx.probability("delta", v)).transpose()?,
        },
        sparsity: raw.s.map(|v| ctx.count("s", v, 1)).transpose()?,
    })
}

fn nse_spec(ctx: &Ctx<'_>, raw: Option<RawNse>) -> Result<PolicySpec, ConfigError> {
    let ctx = ctx.nested("nse");
    let thresholds = match raw {
        None => NseThresholds::Theory { delta: None },
        Some(RawNse {
            c_tau: Some(_),
            delta: Some(_),
        }) => return Err(ctx.err("c_tau", "and `delta` select different thresholds; give one")),
        Some(RawNse { c_tau: Some(c), .. }) => NseThresholds::Practical {
            c_tau: ctx.positive("c_tau", c)?,
        },
        Some(RawNse { delta, .. }) => NseThresholds::Theory {
            delta: delta.map(|v| ctx.probability("delta", v)).transpose()?,
        },
    };
    Ok(PolicySpec::Nse(NseConfig { thresholds }))
}

fn nse_fs_spec(ctx: &Ctx<'_>, raw: Option<RawNseFs>) -> Result<PolicySpec, ConfigError> {
    let ctx = ctx.nested("nse_fs");
    let mut cfg = NseFsConfig::default();
    if let Some(raw) = raw {
        cfg.delta = raw.delta.map(|v| ctx.probability("delta", v)).transpose()?;
        if let Some(c) = raw.tau_constant {
            cfg.tau_constant = ctx.positive("tau_constant", c)?;
        }
        cfg.warmup_batches = raw.m0.map(|v| ctx.count("m0", v, 1)).transpose()?;
    }
    Ok(PolicySpec::NseFs(cfg))
}

fn baseline_spec(ctx: &Ctx<'_>, raw: Option<RawBaseline>) -> Result<PolicySpec, ConfigError> {
    let ctx = ctx.nested("baseline");
    let mut cfg = BaselineConfig::default();
    if let Some(raw) = raw {
        if let Some(v) = raw.ridge {
            cfg.ridge = ctx.positive("ridge", v)?;
        }
        cfg.delta = raw.delta.map(|v| ctx.probability("delta", v)).transpose()?;
        cfg.theta_bound = raw.theta_bound.map(|v| ctx.positive("theta_bound", v)).transpose()?;
        if let Some(v) = raw.restarts {
            cfg.restarts = ctx.count("restarts", v, 0)?;
        }
        if let Some(v) = raw.budget {
            cfg.budget = ctx.count("budget", v, 1)?;
        }
    }
    Ok(PolicySpec::Baseline(cfg))
}

fn experiment(
    origin: &str,
    index: usize,
    raw: RawExperiment,
    base: &Path,
) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let ctx = Ctx {
        origin,
        prefix: format!("experiment[{index}]"),
    };
    let id = ctx.required("id", raw.id)?;
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        return Err(ctx.err("id", "must be non-empty and free of commas, quotes and newlines"));
    }
    let horizon = ctx.count("T", ctx.required("T", raw.horizon)?, 1)?;
    let n_runs = ctx.count("runs", ctx.required("runs", raw.runs)?, 1)?;
    let noise_std = raw.noise_std.unwrap_or(Environment::DEFAULT_NOISE_STD);
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(ctx.err("noise_std", format!("must be finite and non-negative, got {noise_std}")));
    }
    let stride = ctx.count("stride", raw.stride.unwrap_or(1), 1)?;
    let instance = instance_spec(&ctx.nested("instance"), ctx.required("instance", raw.instance)?, base)?;
    let output = resolve(base, &raw.output.unwrap_or_else(|| PathBuf::from(format!("{id}.csv"))));

    let names = ctx.required("policies", raw.policies)?;
    if names.is_empty() {
        return Err(ctx.err("policies", "must name at least one policy"));
    }
    let (mut netc, mut nse, mut nse_fs, mut baseline) = (raw.netc, raw.nse, raw.nse_fs, raw.baseline);
    let mut out = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        if names[..k].contains(name) {
            return Err(ctx.err("policies", format!("lists \"{name}\" twice")));
        }
        let policy = match name.as_str() {
            "oracle" => PolicySpec::Oracle,
            "baseline" => baseline_spec(&ctx, baseline.take())?,
            "netc" => netc_spec(&ctx, netc.take())?,
            "nse" => nse_spec(&ctx, nse.take())?,
            "nse-fs" => nse_fs_spec(&ctx, nse_fs.take())?,
            other => {
                return Err(ctx.err(
                    "policies",
                    format!("unknown policy \"{other}\" (expected oracle, baseline, netc, nse, nse-fs)"),
                ))
            }
        };
        out.push(ExperimentConfig {
            id: id.clone(),
            instance: instance.clone(),
            policy,
            horizon,
            n_runs,
            base_seed: raw.seed.unwrap_or(0),
            noise_std,
            output: Some(output.clone()),
            stride,
            emit_replicates: raw.replicates.unwrap_or(false),
        });
    }
    for (table, unused) in [
        ("netc", netc.is_some()),
        ("nse", nse.is_some()),
        ("nse_fs", nse_fs.is_some()),
        ("baseline", baseline.is_some()),
    ] {
        if unused {
            return Err(ctx.err(table, "configures a policy that is not listed in `policies`"));
        }
    }
    Ok(out)
}

/// Parses experiment text; `origin` labels error messages and `base`
/// anchors relative paths.
pub fn parse_config_str(text: &str, origin: &str, base: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let mut ids: Vec<&str> = Vec::new();
    for (i, e) in raw.experiment.iter().enumerate() {
        if let Some(id) = e.id.as_deref() {
            if ids.contains(&id) {
                return Err(ConfigError::Validation {
                    origin: origin.to_string(),
                    key: format!("experiment[{i}].id"),
                    message: format!("duplicates \"{id}\""),
                });
            }
            ids.push(id);
        }
    }
    let mut out = Vec::new();
    for (i, e) in raw.experiment.into_iter().enumerate() {
        out.extend(experiment(origin, i, e, base)?);
    }
    Ok(out)
}

/// Loads a preset by name or an experiment file by path.
pub fn parse_config(path_or_preset: &str) -> Result<Vec<ExperimentConfig>, ConfigError> {
    if let Some(text) = preset(path_or_preset) {
        return parse_config_str(&text, path_or_preset, Path::new(""));
    }
    let path = Path::new(path_or_preset);
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_config_str(&text, &path.display().to_string(), base)
}

/// Preset names, in display order.
pub const PRESETS: [&str; 5] = ["ordering", "dimension", "signal", "sparsity", "village"];

const ALL_POLICIES: &str = r#"["baseline", "netc", "nse", "nse-fs"]"#;

fn overrides(t1: usize) -> String {
    format!(
        r#"
[experiment.netc]
lambda = 0.035
T1 = {t1}

[experiment.nse]
c_tau = 0.2

[experiment.nse_fs]
delta = 0.05
tau_constant = 8.0
"#
    )
}

fn mixed_block(id: &str, policies: &str, runs: usize, d: usize, beta: f64, s0: f64) -> String {
    format!(
        r#"
[[experiment]]
id = "{id}"
T = 20000
runs = {runs}
seed = 2024
policies = {policies}

[experiment.instance]
kind = "mixed-signal"
d = {d}
beta = {beta:?}
s0 = {s0:?}
{}"#,
        overrides(200)
    )
}

/// TOML text of a preset.
pub fn preset(name: &str) -> Option<String> {
    let text = match name {
        "ordering" => mixed_block("ordering", ALL_POLICIES, 200, 100, 0.1, 20.0),
        "dimension" => [100, 300, 500, 700, 900]
            .iter()
            .map(|&d| mixed_block(&format!("dimension-d{d}"), r#"["netc", "nse", "nse-fs"]"#, 100, d, 0.1, 20.0))
            .collect(),
        "signal" => [0.01, 0.05, 0.1, 0.15, 0.2, 0.5]
            .iter()
            .map(|&b| mixed_block(&format!("signal-beta{b}"), ALL_POLICIES, 100, 100, b, 20.0))
            .collect(),
        "sparsity" => [5.0, 10.0, 15.0, 20.0, 25.0, 50.0]
            .iter()
            .map(|&s| mixed_block(&format!("sparsity-s{s}"), ALL_POLICIES, 100, 100, 0.1, s))
            .collect(),
        "village" => format!(
            r#"
[[experiment]]
id = "village"
T = 20000
runs = 5
seed = 2024
policies = {ALL_POLICIES}

[experiment.instance]
kind = "adjacency"
path = "data/villages"
beta = 0.1
{}"#,
            overrides(300)
        ),
        _ => return None,
    };
    Some(text)
}
