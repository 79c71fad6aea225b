//! Scenario files: a TOML description of a chain, a detector and a list of
//! tasks, run deterministically into CSV, JSON and Wigner text files.
//!
//! ```toml
//! version = 1
//! mode = "full"            # or "sequential"
//! output_dir = "out"       # relative to the scenario file
//!
//! [chain]
//! alpha = 1.0              # or [re, im]
//! lambda = 0.05            # equal stages; or `lambdas = [...]`
//! stages = 3
//! idler_dim = 4            # optional
//! signal_dim = 24          # optional
//!
//! [detector]
//! eta = 1.0
//! dark_prob = 0.0
//!
//! [[task]]
//! kind = "patterns"        # patterns | projection | sweep | wigner
//! output = "patterns.csv"
//! ```
//!
//! Every task is computed in memory before anything is written, so a
//! scenario that fails validation or hits a numerical limit leaves no files.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{fit_power_law, w_state_on, wigner, GridSpec};
use crate::detection::{condition_on_pattern, enumerate_patterns, project_signal, ClickPattern, DetectorModel};
use crate::dynamics::{run_chain_full, run_chain_sequential, ChainConfig, StageParams, DEFAULT_AMPLITUDE_BUDGET};
use crate::error::Error;
use crate::fock::{default_signal_dim, fidelity_ensemble, fidelity_pure, pacs_state, PureState, DEFAULT_IDLER_DIM};
use crate::output::{self, FitSummary, PatternRecord, ProjectionRecord, SweepRecord};
use crate::special::{binomial, pacs_norm_sq};
use crate::C64;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("numerical budget exceeded: {0}")]
    Budget(String),
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ScenarioError {
    /// 1 for parse/validation/io problems, 2 for numerical-budget failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Budget(_) | ScenarioError::Numerical { .. } => 2,
            _ => 1,
        }
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Classifies a library error: bad inputs become validation errors,
    /// truncation and budget failures become budget errors.
    pub fn numerical(context: impl Into<String>, source: Error) -> Self {
        match source {
            Error::DimensionBudget { .. } | Error::Truncation { .. } => ScenarioError::Budget(format!("{}: {source}", context.into())),
            Error::Range { .. } | Error::InvalidArgument(_) => ScenarioError::invalid(context, source.to_string()),
            other => ScenarioError::Numerical {
                context: context.into(),
                source: other,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Evolve the full joint state, then condition.
    #[default]
    Full,
    /// Measure each idler right after its stage; signal-only state.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl AlphaSpec {
    pub fn value(self) -> C64 {
        match self {
            AlphaSpec::Real(r) => C64::new(r, 0.0),
            AlphaSpec::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: u32,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    chain: RawChain,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default, rename = "task")]
    tasks: Vec<RawTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    alpha: AlphaSpec,
    lambda: Option<f64>,
    stages: Option<usize>,
    lambdas: Option<Vec<f64>>,
    idler_dim: Option<usize>,
    signal_dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    #[serde(default = "one")]
    eta: f64,
    #[serde(default)]
    dark_prob: f64,
}

impl Default for RawDetector {
    fn default() -> Self {
        RawDetector { eta: 1.0, dark_prob: 0.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTask {
    Patterns {
        output: String,
        #[serde(default)]
        patterns: Option<Vec<String>>,
    },
    Projection {
        output: String,
        #[serde(default = "one_u32")]
        reference_m: u32,
    },
    Sweep {
        output: String,
        #[serde(default)]
        summary: Option<String>,
        lambdas: Vec<f64>,
        clicks: usize,
    },
    Wigner {
        output: String,
        state: RawWignerState,
        range: f64,
        step: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWignerState {
    alpha: AlphaSpec,
    #[serde(default)]
    m: u32,
    #[serde(default)]
    dim: Option<usize>,
}

/// A validated task.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Patterns {
        output: PathBuf,
        patterns: Option<Vec<ClickPattern>>,
    },
    Projection {
        output: PathBuf,
        reference_m: u32,
    },
    Sweep {
        output: PathBuf,
        summary: Option<PathBuf>,
        lambdas: Vec<f64>,
        clicks: usize,
    },
    Wigner {
        output: PathBuf,
        alpha: C64,
        m: u32,
        dim: usize,
        grid: GridSpec,
    },
}

impl Task {
    fn needs_joint(&self) -> bool {
        matches!(self, Task::Projection { .. } | Task::Patterns { .. })
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub chain: ChainConfig,
    pub detector: DetectorModel,
    pub mode: Mode,
    pub tasks: Vec<Task>,
    pub output_dir: PathBuf,
}

/// One file produced by a scenario, not yet written.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

fn check_field(ok: bool, field: &str, message: impl FnOnce() -> String) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, message()))
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_toml_str(&text, base)
    }

    /// Parses and validates; relative output paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        check_field(raw.version == SCENARIO_VERSION, "version", || {
            format!("unsupported version {}, expected {SCENARIO_VERSION}", raw.version)
        })?;

        let chain = build_chain(&raw.chain)?;
        let detector = DetectorModel::new(raw.detector.eta, raw.detector.dark_prob)
            .map_err(|e| ScenarioError::invalid("detector", e.to_string()))?;
        let n = chain.num_stages();
        let output_dir = base_dir.join(raw.output_dir.unwrap_or_default());

        let mut seen = HashSet::new();
        let mut tasks = Vec::new();
        for (k, t) in raw.tasks.into_iter().enumerate() {
            let field = |name: &str| format!("task[{k}].{name}");
            let mut out = |name: &str, p: &str| -> Result<PathBuf, ScenarioError> {
                check_field(!p.trim().is_empty(), &field(name), || "empty path".into())?;
                let path = output_dir.join(p);
                check_field(seen.insert(path.clone()), &field(name), || format!("duplicate output '{p}'"))?;
                Ok(path)
            };
            let task = match t {
                RawTask::Patterns { output, patterns } => {
                    let patterns = match patterns {
                        None => None,
                        Some(list) => Some(
                            list.iter()
                                .map(|s| {
                                    let p: ClickPattern = s.parse().map_err(|e: Error| ScenarioError::invalid(field("patterns"), e.to_string()))?;
                                    check_field(p.len() == n, &field("patterns"), || format!("'{s}' has {} outcomes, chain has {n} stages", p.len()))?;
                                    Ok(p)
                                })
                                .collect::<Result<Vec<_>, ScenarioError>>()?,
                        ),
                    };
                    Task::Patterns {
                        output: out("output", &output)?,
                        patterns,
                    }
                }
                RawTask::Projection { output, reference_m } => {
                    check_field(raw.mode == Mode::Full, &field("kind"), || {
                        "signal projection needs the joint state; set mode = \"full\"".into()
                    })?;
                    Task::Projection {
                        output: out("output", &output)?,
                        reference_m,
                    }
                }
                RawTask::Sweep { output, summary, lambdas, clicks } => {
                    check_field(clicks <= n, &field("clicks"), || format!("{clicks} clicks with {n} detectors"))?;
                    check_field(!lambdas.is_empty(), &field("lambdas"), || "empty sweep".into())?;
                    check_field(lambdas.iter().all(|l| l.is_finite() && *l >= 0.0), &field("lambdas"), || {
                        "values must be finite and >= 0".into()
                    })?;
                    if summary.is_some() {
                        let mut sorted = lambdas.clone();
                        sorted.sort_by(f64::total_cmp);
                        sorted.dedup();
                        check_field(sorted.len() >= 3 && sorted[0] > 0.0, &field("lambdas"), || {
                            "a fit summary needs at least 3 distinct positive values".into()
                        })?;
                    }
                    let summary = summary.map(|s| out("summary", &s)).transpose()?;
                    Task::Sweep {
                        output: out("output", &output)?,
                        summary,
                        lambdas,
                        clicks,
                    }
                }
                RawTask::Wigner { output, state, range, step } => {
                    check_field(range.is_finite() && range > 0.0, &field("range"), || "must be > 0".into())?;
                    check_field(step.is_finite() && step > 0.0 && step <= range, &field("step"), || "must be in (0, range]".into())?;
                    check_field((2.0 * range / step) <= 4000.0, &field("step"), || "grid larger than 4001 points per axis".into())?;
                    let alpha = state.alpha.value();
                    let dim = state.dim.unwrap_or_else(|| default_signal_dim(alpha, state.m as usize));
                    check_field(dim >= 2, &field("state.dim"), || "must be >= 2".into())?;
                    Task::Wigner {
                        output: out("output", &output)?,
                        alpha,
                        m: state.m,
                        dim,
                        grid: GridSpec::square(range, step),
                    }
                }
            };
            tasks.push(task);
        }
        check_field(!tasks.is_empty(), "task", || "no tasks".into())?;

        let scenario = Scenario {
            chain,
            detector,
            mode: raw.mode,
            tasks,
            output_dir,
        };
        if scenario.mode == Mode::Full && scenario.tasks.iter().any(|t| t.needs_joint() || matches!(t, Task::Sweep { .. })) {
            let required = scenario.chain.joint_amplitude_count();
            if required > DEFAULT_AMPLITUDE_BUDGET as u128 {
                return Err(ScenarioError::Budget(format!(
                    "joint state needs {required} amplitudes (budget {DEFAULT_AMPLITUDE_BUDGET}); set mode = \"sequential\""
                )));
            }
        }
        Ok(scenario)
    }

    /// Computes every task's output in memory.
    pub fn run(&self) -> Result<Vec<Emitted>, ScenarioError> {
        let joint = if self.mode == Mode::Full && self.tasks.iter().any(Task::needs_joint) {
            Some(run_chain_full(&self.chain).map_err(|e| ScenarioError::numerical("chain evolution", e))?)
        } else {
            None
        };
        let per_task: Vec<Vec<Emitted>> = self
            .tasks
            .par_iter()
            .map(|t| self.run_task(t, joint.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(per_task.into_iter().flatten().collect())
    }

    fn run_task(&self, task: &Task, joint: Option<&PureState>) -> Result<Vec<Emitted>, ScenarioError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ScenarioError::Io { path, source }
        };
        match task {
            Task::Patterns { output, patterns } => {
                let rows = pattern_table(&self.chain, &self.detector, self.mode, joint, patterns.as_deref())?;
                Ok(vec![Emitted {
                    path: output.clone(),
                    bytes: output::to_csv(&rows).map_err(io_err(output))?,
                }])
            }
            Task::Projection { output, reference_m } => {
                let joint = joint.expect("projection runs in full mode");
                let rec = projection_record(&self.chain, joint, *reference_m)?;
                Ok(vec![Emitted {
                    path: output.clone(),
                    bytes: output::to_csv(&[rec]).map_err(io_err(output))?,
                }])
            }
            Task::Sweep { output, summary, lambdas, clicks } => {
                let rows = lambda_sweep(&self.chain, &self.detector, self.mode, lambdas, *clicks)?;
                let mut out = vec![Emitted {
                    path: output.clone(),
                    bytes: output::to_csv(&rows).map_err(io_err(output))?,
                }];
                if let Some(path) = summary {
                    let s = fit_summary(&self.chain, *clicks, &rows)?;
                    out.push(Emitted {
                        path: path.clone(),
                        bytes: output::to_json(&s).map_err(io_err(path))?,
                    });
                }
                Ok(out)
            }
            Task::Wigner { output, alpha, m, dim, grid } => {
                let state = pacs_state(*alpha, *m, *dim).map_err(|e| ScenarioError::numerical("wigner state", e))?;
                let g = wigner(&state, grid).map_err(|e| ScenarioError::numerical("wigner grid", e))?;
                Ok(vec![Emitted {
                    path: output.clone(),
                    bytes: output::wigner_to_bytes(&g).map_err(io_err(output))?,
                }])
            }
        }
    }
}

fn build_chain(raw: &RawChain) -> Result<ChainConfig, ScenarioError> {
    let idler_dim = raw.idler_dim.unwrap_or(DEFAULT_IDLER_DIM);
    let lambdas = match (&raw.lambdas, raw.lambda, raw.stages) {
        (Some(ls), None, None) => ls.clone(),
        (None, Some(l), stages) => vec![l; stages.unwrap_or(1)],
        (Some(_), _, _) => {
            return Err(ScenarioError::invalid("chain.lambdas", "give either `lambdas` or `lambda` (+ `stages`), not both"));
        }
        (None, None, _) => return Err(ScenarioError::invalid("chain.lambda", "missing; set `lambda` or `lambdas`")),
    };
    check_field(!lambdas.is_empty(), "chain.stages", || "at least one stage".into())?;
    let stages = lambdas
        .iter()
        .map(|&l| StageParams::new(l, idler_dim))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ScenarioError::invalid("chain", e.to_string()))?;
    ChainConfig::new(raw.alpha.value(), stages, raw.signal_dim).map_err(|e| ScenarioError::invalid("chain", e.to_string()))
}

fn pacs_fidelity(chain: &ChainConfig, m: usize, ens: &crate::fock::WeightedEnsemble) -> Result<Option<f64>, ScenarioError> {
    match pacs_state(chain.alpha(), m as u32, chain.signal_dim()) {
        Ok(r) => Ok(Some(fidelity_ensemble(ens, &r).map_err(|e| ScenarioError::numerical("fidelity", e))?)),
        // the reference itself does not fit the truncation
        Err(Error::Truncation { .. }) => Ok(None),
        Err(e) => Err(ScenarioError::numerical("reference state", e)),
    }
}

/// Probability and conditional-signal fidelity with `|alpha, m>` for each
/// click pattern (all of them when `patterns` is `None`).
pub fn pattern_table(
    chain: &ChainConfig,
    detector: &DetectorModel,
    mode: Mode,
    joint: Option<&PureState>,
    patterns: Option<&[ClickPattern]>,
) -> Result<Vec<PatternRecord>, ScenarioError> {
    let all;
    let list = match patterns {
        Some(p) => p,
        None => {
            all = ClickPattern::all(chain.num_stages());
            &all
        }
    };
    let conditioned: Vec<(ClickPattern, f64, Option<crate::fock::WeightedEnsemble>)> = match (mode, joint) {
        (Mode::Full, Some(joint)) if patterns.is_none() => enumerate_patterns(joint, detector)
            .map_err(|e| ScenarioError::numerical("pattern enumeration", e))?
            .into_iter()
            .map(|r| (r.pattern, r.probability, r.conditional))
            .collect(),
        _ => list
            .par_iter()
            .map(|p| {
                let r = match (mode, joint) {
                    (Mode::Full, Some(j)) => condition_on_pattern(j, p, detector),
                    _ => run_chain_sequential(chain, detector, p),
                };
                match r {
                    Ok(c) => Ok((p.clone(), c.probability, Some(c.ensemble))),
                    Err(Error::ImpossibleOutcome { probability }) => Ok((p.clone(), probability, None)),
                    Err(e) => Err(ScenarioError::numerical(format!("pattern {p}"), e)),
                }
            })
            .collect::<Result<_, _>>()?,
    };
    conditioned
        .into_iter()
        .map(|(pattern, probability, ens)| {
            let m = pattern.num_clicks();
            let fidelity_vs_pacs_m = match ens {
                Some(e) => pacs_fidelity(chain, m, &e)?,
                None => None,
            };
            Ok(PatternRecord {
                pattern: pattern.to_string(),
                clicks: m,
                probability,
                fidelity_vs_pacs_m,
            })
        })
        .collect()
}

/// Projects the signal of `joint` onto `|alpha, m>` and compares the idlers
/// with the W state and with the idler vacuum.
pub fn projection_record(chain: &ChainConfig, joint: &PureState, m: u32) -> Result<ProjectionRecord, ScenarioError> {
    let reference = pacs_state(chain.alpha(), m, chain.signal_dim()).map_err(|e| ScenarioError::numerical("reference state", e))?;
    let proj = project_signal(joint, &reference).map_err(|e| ScenarioError::numerical("signal projection", e))?;
    let w = w_state_on(proj.idlers.space()).map_err(|e| ScenarioError::numerical("W reference", e))?;
    let fidelity_vs_w = fidelity_pure(&proj.idlers, &w).map_err(|e| ScenarioError::numerical("fidelity", e))?;
    let vacuum = proj.idlers.amplitudes()[0].norm_sqr();
    Ok(ProjectionRecord {
        reference_m: m,
        probability: proj.probability,
        fidelity_vs_w,
        fidelity_vs_idler_vacuum: vacuum,
    })
}

/// Probability that exactly `clicks` detectors fire.
pub fn click_count_probability(
    chain: &ChainConfig,
    detector: &DetectorModel,
    mode: Mode,
    clicks: usize,
) -> Result<f64, ScenarioError> {
    let patterns: Vec<ClickPattern> = ClickPattern::all(chain.num_stages())
        .into_iter()
        .filter(|p| p.num_clicks() == clicks)
        .collect();
    let joint = match mode {
        Mode::Full => Some(run_chain_full(chain).map_err(|e| ScenarioError::numerical("chain evolution", e))?),
        Mode::Sequential => None,
    };
    let mut total = 0.0;
    for p in &patterns {
        let r = match &joint {
            Some(j) => condition_on_pattern(j, p, detector),
            None => run_chain_sequential(chain, detector, p),
        };
        match r {
            Ok(c) => total += c.probability,
            Err(Error::ImpossibleOutcome { probability }) => total += probability,
            Err(e) => return Err(ScenarioError::numerical(format!("pattern {p}"), e)),
        }
    }
    Ok(total)
}

/// The chain with every stage set to `lambda`, keeping dimensions.
pub fn with_uniform_lambda(chain: &ChainConfig, lambda: f64) -> Result<ChainConfig, Error> {
    let stages = chain
        .stages()
        .iter()
        .map(|s| StageParams::new(lambda, s.idler_dim()))
        .collect::<Result<Vec<_>, _>>()?;
    ChainConfig::new(chain.alpha(), stages, Some(chain.signal_dim()))
}

pub fn lambda_sweep(
    chain: &ChainConfig,
    detector: &DetectorModel,
    mode: Mode,
    lambdas: &[f64],
    clicks: usize,
) -> Result<Vec<SweepRecord>, ScenarioError> {
    lambdas
        .par_iter()
        .map(|&l| {
            let c = with_uniform_lambda(chain, l).map_err(|e| ScenarioError::numerical("sweep chain", e))?;
            Ok(SweepRecord {
                param: "lambda".into(),
                value: l,
                probability: click_count_probability(&c, detector, mode, clicks)?,
            })
        })
        .collect()
}

pub fn fit_summary(chain: &ChainConfig, clicks: usize, rows: &[SweepRecord]) -> Result<FitSummary, ScenarioError> {
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.value, r.probability)).collect();
    let fit = fit_power_law(&samples).map_err(|e| ScenarioError::numerical("power-law fit", e))?;
    let alpha = chain.alpha();
    let pacs_norm = pacs_norm_sq(clicks as u32, alpha.norm_sqr()).map_err(|e| ScenarioError::numerical("laguerre", e))?;
    let pattern_count = binomial(chain.num_stages() as u32, clicks as u32);
    Ok(FitSummary {
        stages: chain.num_stages(),
        clicks,
        alpha: [alpha.re, alpha.im],
        pattern_count,
        pacs_norm,
        leading_prefactor: pattern_count * pacs_norm,
        fit,
    })
}

/// Writes each file through a temporary sibling and a rename.
pub fn write_outputs(files: &[Emitted]) -> Result<(), ScenarioError> {
    for f in files {
        let io_err = |source| ScenarioError::Io {
            path: f.path.clone(),
            source,
        };
        if let Some(dir) = f.path.parent() {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
        let mut tmp = f.path.clone().into_os_string();
        tmp.push(".tmp");
        fs::write(&tmp, &f.bytes).map_err(io_err)?;
        fs::rename(&tmp, &f.path).map_err(io_err)?;
    }
    Ok(())
}

/// Loads, runs and writes a scenario; returns the written paths.
pub fn run_scenario(path: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let scenario = Scenario::load(path)?;
    let files = scenario.run()?;
    write_outputs(&files)?;
    Ok(files.into_iter().map(|f| f.path).collect())
}
