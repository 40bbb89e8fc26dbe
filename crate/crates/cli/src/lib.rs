//! Command-line driver: subcommands for each stage and a config-driven
//! pipeline writing hashed artifacts.
//!
//! Exit status: 0 success, 1 operational error (bad input, I/O, domain
//! errors), 2 a requested certificate did not hold.

pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fractal_ap::Mode;
use fractal_ap::measure::{CantorParams, KMode};
use fractal_ap::spectral::fourier_table;

use config::{Block, ConfigError, RunConfig, Step};
use run::{AbInput, BrownianInput, ChainFile, Run};

pub const THREADS_ENV: &str = "FRACTAL_AP_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(fractal_ap::Error),
    Io { path: PathBuf, source: std::io::Error },
    Input(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Input(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<fractal_ap::Error> for CliError {
    fn from(e: fractal_ap::Error) -> Self {
        Self::Core(e)
    }
}

/// Failures of requested certificates; empty on success.
pub type Outcome = Result<Vec<String>, CliError>;

pub fn exit_code(outcome: &Outcome) -> u8 {
    match outcome {
        Ok(f) if f.is_empty() => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}

/// Caps the global worker pool at `FRACTAL_AP_THREADS` when set.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when called twice in one process (tests).
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Runs a validated configuration; `out` overrides the configured directory.
pub fn run_pipeline(config: &RunConfig, out: Option<&Path>) -> Outcome {
    let mut run = Run::new(out.unwrap_or(&config.output))?;
    match &config.block {
        Block::Cantor(c) => {
            let chain = run::step_construct(&mut run, c.params, c.depth, config.seed, config.mode)?;
            let level = chain.level(None)?;
            let wants = |s: Step| c.steps.contains(&s);
            let spectral = [Step::Fourier, Step::CheckAb, Step::Lambda, Step::Fejer];
            if spectral.iter().any(|&s| wants(s)) {
                let table = if wants(Step::Fourier) {
                    run::step_fourier(&mut run, level, c.k_max)?
                } else {
                    fourier_table::<f64>(level, c.k_max)?
                };
                if wants(Step::CheckAb) {
                    run::step_check_ab(
                        &mut run,
                        AbInput {
                            chain: &chain,
                            level,
                            table: &table,
                            beta: c.beta,
                            b: c.b,
                            c1: c.c1,
                            c2: c.c2,
                        },
                    )?;
                }
                if wants(Step::Lambda) || wants(Step::Fejer) {
                    let hyp = run::hypothesis(&table, chain.alpha, c.beta, c.b, c.c2)?;
                    if wants(Step::Lambda) {
                        run::step_lambda(&mut run, &table, c.cutoff, &hyp)?;
                    }
                    if wants(Step::Fejer) {
                        run::step_fejer(&mut run, &table, c.fejer_n, &hyp)?;
                    }
                }
            }
            if wants(Step::Restriction) {
                run::step_restriction(
                    &mut run,
                    level,
                    chain.alpha,
                    c.beta,
                    c.restriction_trials,
                    c.restriction_max_degree,
                    config.seed,
                )?;
            }
            if wants(Step::FindAp) {
                run::step_find_ap(&mut run, &chain.levels[1..=c.max_depth as usize], c.slack)?;
            }
        }
        Block::Salem(s) => run::step_salem(&mut run, s.d, s.alpha, s.s, s.depth, s.xi_max, config.seed)?,
        Block::Brownian(b) => run::step_brownian(
            &mut run,
            BrownianInput {
                alpha: b.alpha,
                grid_depth: b.grid_depth,
                paths: b.paths,
                xi_list: &b.xi_list,
                q: b.q,
                epsilon: &b.epsilon,
                closed_samples: b.closed_samples,
                seed: config.seed,
            },
        )?,
    }
    run.finish("pipeline", config.seed)
}

#[derive(Debug, Parser)]
#[command(name = "fractal-ap", version, about = "Three-term progressions in fractal sets via Fourier analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a random Cantor chain (chain.json, construction_log.csv).
    Construct(ConstructArgs),
    /// Fourier coefficients of one chain level (fourier.csv).
    Fourier(FourierArgs),
    /// Empirical ball and decay constants (ball.csv, decay.csv, check_ab.json).
    CheckAb(CheckAbArgs),
    /// Truncated trilinear form with its tail bound (lambda.json).
    Lambda(LambdaArgs),
    /// Fejér decomposition and error terms (fejer.csv, fejer.json).
    Fejer(FejerArgs),
    /// Restriction-inequality probe (restriction.csv, restriction.json).
    Restriction(RestrictionArgs),
    /// Salem dissection parameters, transform and window average.
    Salem(SalemArgs),
    /// Brownian image moments, Λ_ε and the expectation identity.
    Brownian(BrownianArgs),
    /// Persistent progression witnesses across chain levels.
    FindAp(FindApArgs),
    /// Run a configuration file end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChainArg {
    /// chain.json written by `construct`.
    #[arg(long)]
    pub chain: PathBuf,
    /// Level to analyse; defaults to the deepest.
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 16)]
    pub n0: u64,
    #[arg(long, default_value_t = 13)]
    pub t0: u64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value = "unit")]
    pub k_mode: KMode,
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "strict")]
    pub mode: Mode,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 1024)]
    pub k_max: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    /// Decay constant to test; the empirical value is used when absent.
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckAbArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 1024)]
    pub k_max: u64,
    #[command(flatten)]
    pub decay: DecayArgs,
    /// Ball constant to test.
    #[arg(long)]
    pub c1: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 1024)]
    pub cutoff: u64,
    /// Table size; defaults to twice the cutoff.
    #[arg(long)]
    pub k_max: Option<u64>,
    #[command(flatten)]
    pub decay: DecayArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FejerArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 1024)]
    pub k_max: u64,
    /// Fejér order N; defaults to the formula value capped at k_max/4.
    #[arg(long = "fejer-n")]
    pub fejer_n: Option<u64>,
    #[command(flatten)]
    pub decay: DecayArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct RestrictionArgs {
    #[command(flatten)]
    pub chain: ChainArg,
    #[arg(long, default_value_t = 16)]
    pub trials: usize,
    #[arg(long, default_value_t = 1024)]
    pub max_degree: u64,
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct SalemArgs {
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 6.0)]
    pub s: f64,
    #[arg(long, default_value_t = 40)]
    pub depth: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub xi_max: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct BrownianArgs {
    /// 2 for the uniform base, below 2 for a Cantor base of dimension alpha/2.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 11)]
    pub grid_depth: u32,
    #[arg(long, default_value_t = 200)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    pub xi_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 100_000)]
    pub closed_samples: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct FindApArgs {
    /// chain.json written by `construct`.
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub slack: u64,
    /// Deepest level searched; defaults to the chain depth.
    #[arg(long)]
    pub max_depth: Option<u32>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Configuration file.
    pub config: PathBuf,
    /// Overrides `output` from the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn chain_table(a: &ChainArg, k_max: u64) -> Result<(ChainFile, fractal_ap::FourierTable64), CliError> {
    let chain = ChainFile::load(&a.chain)?;
    let table = fourier_table::<f64>(chain.level(a.level)?, k_max)?;
    Ok((chain, table))
}

pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Construct(a) => {
            let params = CantorParams::new(a.n0, a.t0, a.n, a.k_mode)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_construct(&mut run, params, a.depth, a.seed, a.mode)?;
            run.finish("construct", a.seed)
        }
        Command::Fourier(a) => {
            let chain = ChainFile::load(&a.chain.chain)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_fourier(&mut run, chain.level(a.chain.level)?, a.k_max)?;
            run.finish("fourier", chain.seed)
        }
        Command::CheckAb(a) => {
            let (chain, table) = chain_table(&a.chain, a.k_max)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_check_ab(
                &mut run,
                AbInput {
                    chain: &chain,
                    level: chain.level(a.chain.level)?,
                    table: &table,
                    beta: a.decay.beta,
                    b: a.decay.b,
                    c1: a.c1,
                    c2: a.decay.c2,
                },
            )?;
            run.finish("check-ab", chain.seed)
        }
        Command::Lambda(a) => {
            let (chain, table) = chain_table(&a.chain, a.k_max.unwrap_or(2 * a.cutoff))?;
            let hyp = run::hypothesis(&table, chain.alpha, a.decay.beta, a.decay.b, a.decay.c2)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_lambda(&mut run, &table, a.cutoff, &hyp)?;
            run.finish("lambda", chain.seed)
        }
        Command::Fejer(a) => {
            let (chain, table) = chain_table(&a.chain, a.k_max)?;
            let hyp = run::hypothesis(&table, chain.alpha, a.decay.beta, a.decay.b, a.decay.c2)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_fejer(&mut run, &table, a.fejer_n, &hyp)?;
            run.finish("fejer", chain.seed)
        }
        Command::Restriction(a) => {
            let chain = ChainFile::load(&a.chain.chain)?;
            let mut run = Run::new(&a.out.out)?;
            run::step_restriction(
                &mut run,
                chain.level(a.chain.level)?,
                chain.alpha,
                a.beta,
                a.trials,
                a.max_degree,
                a.seed,
            )?;
            run.finish("restriction", a.seed)
        }
        Command::Salem(a) => {
            let mut run = Run::new(&a.out.out)?;
            run::step_salem(&mut run, a.d, a.alpha, a.s, a.depth, a.xi_max, a.seed)?;
            run.finish("salem", a.seed)
        }
        Command::Brownian(a) => {
            let mut run = Run::new(&a.out.out)?;
            run::step_brownian(
                &mut run,
                BrownianInput {
                    alpha: a.alpha,
                    grid_depth: a.grid_depth,
                    paths: a.paths,
                    xi_list: &a.xi_list,
                    q: a.q,
                    epsilon: &a.epsilon,
                    closed_samples: a.closed_samples,
                    seed: a.seed,
                },
            )?;
            run.finish("brownian", a.seed)
        }
        Command::FindAp(a) => {
            let chain = ChainFile::load(&a.chain)?;
            let max = a.max_depth.unwrap_or(chain.depth);
            if max == 0 || max > chain.depth {
                return Err(CliError::Input(format!(
                    "--max-depth {max} must lie in 1..={}",
                    chain.depth
                )));
            }
            let mut run = Run::new(&a.out.out)?;
            run::step_find_ap(&mut run, &chain.levels[1..=max as usize], a.slack)?;
            run.finish("find-ap", chain.seed)
        }
        Command::Pipeline(a) => {
            let config = RunConfig::load(&a.config)?;
            run_pipeline(&config, a.out.as_deref())
        }
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit status.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads().and_then(|_| execute(cli.command));
    match &outcome {
        Err(e) => eprintln!("error: {e}"),
        Ok(f) => {
            for what in f {
                eprintln!("certificate failed: {what}");
            }
        }
    }
    exit_code(&outcome)
}
