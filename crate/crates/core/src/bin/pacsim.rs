use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use pacsim::dynamics::{ChainConfig, StageParams};
use pacsim::fock::{coherent_state, default_signal_dim, fock_state, pacs_state, PureState, DEFAULT_IDLER_DIM};
use pacsim::output::{self, SweepRecord};
use pacsim::scenario::{self, Mode, ScenarioError};
use pacsim::{run_chain_full, wigner, ClickPattern, DetectorModel, GridSpec, C64};

/// Environment variable capping the number of worker threads.
const THREADS_ENV: &str = "PACSIM_THREADS";

#[derive(Parser)]
#[command(name = "pacsim", version, about = "Cascaded parametric amplifiers with heralded photon addition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML scenario file.
    Run { config: PathBuf },
    /// Probability and fidelity of one click pattern.
    Pacs {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Alpha,
        #[arg(long)]
        lambda: f64,
        /// One outcome per stage, e.g. "1" or "101".
        #[arg(long, default_value = "1")]
        pattern: String,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, default_value_t = DEFAULT_IDLER_DIM)]
        idler_dim: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
    },
    /// Project the signal onto |alpha, m> and compare the idlers with a W state.
    Wstate {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Alpha,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        reference_m: u32,
        #[arg(long, default_value_t = DEFAULT_IDLER_DIM)]
        idler_dim: usize,
    },
    /// Wigner function of a single-mode state on a square grid.
    Wigner {
        /// `pacs:ALPHA,M`, `coherent:ALPHA` or `fock:N`.
        #[arg(long)]
        state: StateSpec,
        #[arg(long)]
        range: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        dim: Option<usize>,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Probability of exactly `clicks` clicks across parameter values.
    Sweep {
        #[arg(long, value_enum)]
        param: Param,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        alpha: Alpha,
        #[arg(long, default_value_t = 0.05)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        clicks: usize,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
        /// CSV output; defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// JSON power-law fit (lambda sweeps only).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct DetectorArgs {
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    dark: f64,
}

impl DetectorArgs {
    fn model(&self) -> Result<DetectorModel, ScenarioError> {
        DetectorModel::new(self.eta, self.dark).map_err(|e| ScenarioError::numerical("detector", e))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Sequential,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Sequential => Mode::Sequential,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Param {
    Lambda,
    Alpha,
}

/// `1.0` or `re,im`.
#[derive(Clone, Copy, Debug)]
struct Alpha(C64);

impl FromStr for Alpha {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
        match s.split_once(',') {
            Some((re, im)) => Ok(Alpha(C64::new(num(re)?, num(im)?))),
            None => Ok(Alpha(C64::new(num(s)?, 0.0))),
        }
    }
}

#[derive(Clone, Debug)]
enum StateSpec {
    Pacs(C64, u32),
    Coherent(C64),
    Fock(usize),
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, args) = s.split_once(':').ok_or("expected KIND:ARGS")?;
        match kind {
            "pacs" => {
                let (a, m) = args.rsplit_once(',').ok_or("pacs needs ALPHA,M")?;
                let m = m.trim().parse().map_err(|e| format!("bad m: {e}"))?;
                Ok(StateSpec::Pacs(a.parse::<Alpha>()?.0, m))
            }
            "coherent" => Ok(StateSpec::Coherent(args.parse::<Alpha>()?.0)),
            "fock" => Ok(StateSpec::Fock(args.trim().parse().map_err(|e| format!("bad n: {e}"))?)),
            _ => Err(format!("unknown state kind '{kind}'")),
        }
    }
}

impl StateSpec {
    fn build(&self, dim: Option<usize>) -> Result<PureState, ScenarioError> {
        let r = match *self {
            StateSpec::Pacs(a, m) => pacs_state(a, m, dim.unwrap_or_else(|| default_signal_dim(a, m as usize))),
            StateSpec::Coherent(a) => coherent_state(a, dim.unwrap_or_else(|| default_signal_dim(a, 0))),
            StateSpec::Fock(n) => fock_state(n, dim.unwrap_or(n + 2)),
        };
        r.map_err(|e| ScenarioError::numerical("state", e))
    }
}

fn chain(alpha: C64, lambda: f64, n: usize, idler_dim: usize) -> Result<ChainConfig, ScenarioError> {
    let stage = StageParams::new(lambda, idler_dim).map_err(|e| ScenarioError::numerical("stage", e))?;
    ChainConfig::new(alpha, vec![stage; n], None).map_err(|e| ScenarioError::numerical("chain", e))
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), ScenarioError> {
    match path {
        Some(p) => scenario::write_outputs(&[scenario::Emitted {
            path: p.clone(),
            bytes: bytes.to_vec(),
        }]),
        None => io::stdout().write_all(bytes).map_err(|source| ScenarioError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn json(value: &impl serde::Serialize) -> Result<Vec<u8>, ScenarioError> {
    output::to_json(value).map_err(|source| ScenarioError::Io {
        path: "<json>".into(),
        source,
    })
}

fn execute(cmd: Command) -> Result<(), ScenarioError> {
    match cmd {
        Command::Run { config } => {
            for p in scenario::run_scenario(&config)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Pacs {
            alpha,
            lambda,
            pattern,
            detector,
            idler_dim,
            mode,
        } => {
            let pattern: ClickPattern = pattern.parse().map_err(|e| ScenarioError::numerical("pattern", e))?;
            if pattern.is_empty() {
                return Err(ScenarioError::numerical("pattern", pacsim::Error::InvalidArgument("empty pattern".into())));
            }
            let c = chain(alpha.0, lambda, pattern.len(), idler_dim)?;
            let mode = Mode::from(mode);
            let joint = match mode {
                Mode::Full => Some(run_chain_full(&c).map_err(|e| ScenarioError::numerical("chain evolution", e))?),
                Mode::Sequential => None,
            };
            let rows = scenario::pattern_table(&c, &detector.model()?, mode, joint.as_ref(), Some(&[pattern]))?;
            emit(None, &json(&rows[0])?)
        }
        Command::Wstate {
            n,
            alpha,
            lambda,
            reference_m,
            idler_dim,
        } => {
            let c = chain(alpha.0, lambda, n, idler_dim)?;
            let joint = run_chain_full(&c).map_err(|e| ScenarioError::numerical("chain evolution", e))?;
            let rec = scenario::projection_record(&c, &joint, reference_m)?;
            emit(None, &json(&rec)?)
        }
        Command::Wigner {
            state,
            range,
            step,
            dim,
            output,
        } => {
            let s = state.build(dim)?;
            let g = wigner(&s, &GridSpec::square(range, step)).map_err(|e| ScenarioError::numerical("wigner grid", e))?;
            let bytes = output::wigner_to_bytes(&g).map_err(|source| ScenarioError::Io {
                path: "<wigner>".into(),
                source,
            })?;
            emit(output.as_ref(), &bytes)
        }
        Command::Sweep {
            param,
            values,
            alpha,
            lambda,
            n,
            clicks,
            detector,
            mode,
            output,
            summary,
        } => {
            if clicks > n {
                return Err(ScenarioError::numerical("clicks", pacsim::Error::InvalidArgument(format!("{clicks} clicks with {n} stages"))));
            }
            let det = detector.model()?;
            let mode = Mode::from(mode);
            let base = chain(alpha.0, lambda, n, DEFAULT_IDLER_DIM)?;
            let rows: Vec<SweepRecord> = match param {
                Param::Lambda => scenario::lambda_sweep(&base, &det, mode, &values, clicks)?,
                Param::Alpha => values
                    .iter()
                    .map(|&a| {
                        let c = chain(C64::new(a, 0.0), lambda, n, DEFAULT_IDLER_DIM)?;
                        Ok(SweepRecord {
                            param: "alpha".into(),
                            value: a,
                            probability: scenario::click_count_probability(&c, &det, mode, clicks)?,
                        })
                    })
                    .collect::<Result<_, ScenarioError>>()?,
            };
            // compute everything before writing anything
            let fit = match &summary {
                Some(_) if param != Param::Lambda => {
                    return Err(ScenarioError::numerical("summary", pacsim::Error::InvalidArgument("fit summaries need --param lambda".into())));
                }
                Some(_) => Some(json(&scenario::fit_summary(&base, clicks, &rows)?)?),
                None => None,
            };
            let csv = output::to_csv(&rows).map_err(|source| ScenarioError::Io {
                path: "<csv>".into(),
                source,
            })?;
            emit(output.as_ref(), &csv)?;
            if let (Some(path), Some(bytes)) = (summary.as_ref(), fit) {
                emit(Some(path), &bytes)?;
            }
            Ok(())
        }
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var(THREADS_ENV) else { return };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("cannot size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring {THREADS_ENV}={v:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
