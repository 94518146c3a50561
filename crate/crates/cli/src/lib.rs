//! The `vcrobust` command: one binary wiring noising, feature extraction,
//! suite building, the listening-test service and analysis.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O failure.

pub mod commands;
pub mod config;
mod error;
pub mod logging;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, ArgGroup, Args, Parser, Subcommand};
use vcrobust_core::analysis::StdKind;

pub use error::{CliError, EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE};

use config::{FileConfig, DEFAULT_SEED};

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O failure.
Settings resolve as flag, then --config file, then built-in default.
Logs go to stderr as key=value lines; VCROBUST_LOG overrides the level.";

#[derive(Debug, Parser)]
#[command(name = "vcrobust", version, about = "Robustness tooling for voice-conversion listening tests", after_help = AFTER_HELP)]
pub struct Cli {
    /// Global 64-bit seed for every randomized step [default: 24301]
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Raise log verbosity (-v debug, -vv trace)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    /// JSON file with defaults for any setting below
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply random effect chains to clips, writing WAVs and provenance
    Augment(AugmentArgs),
    /// Ingest a corpus and build a noised evaluation suite
    BuildSuite(BuildSuiteArgs),
    /// Register one model's converted outputs with a suite
    AttachOutputs(AttachArgs),
    /// Run the listening-test HTTP service
    Serve(ServeArgs),
    /// Write agreement and score reports from a ratings export
    Analyze(AnalyzeArgs),
    /// Compute a log-mel matrix for one WAV file
    Features(FeaturesArgs),
    /// Export authoritative ratings from a store file without a running server
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// WAV file, directory of WAVs, or clip list (one `path` or `clip_id<TAB>path` per line)
    #[arg(short, long, value_name = "PATH")]
    pub input: PathBuf,
    /// Output directory for `<clip_id>.wav` files and provenance.jsonl
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
    /// Effect-chain JSON [default: built-in ranges]
    #[arg(long, value_name = "FILE")]
    pub chain_config: Option<PathBuf>,
    /// Directory of noise WAVs for the additive-noise family
    #[arg(long, value_name = "DIR")]
    pub noise_dir: Option<PathBuf>,
    /// Worker threads [default: logical CPU count]
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("corpus").required(true).args(["commonvoice_tsv", "vctk_root"])))]
pub struct BuildSuiteArgs {
    /// CommonVoice TSV (for example validated.tsv)
    #[arg(long, value_name = "FILE")]
    pub commonvoice_tsv: Option<PathBuf>,
    /// CommonVoice clip directory [default: clips/ next to the TSV]
    #[arg(long, value_name = "DIR", requires = "commonvoice_tsv", conflicts_with = "vctk_root")]
    pub clips_dir: Option<PathBuf>,
    /// VCTK wav directory holding one folder per speaker
    #[arg(long, value_name = "DIR")]
    pub vctk_root: Option<PathBuf>,
    /// VCTK speaker-info.txt [default: next to the wav directory]
    #[arg(long, value_name = "FILE", requires = "vctk_root", conflicts_with = "commonvoice_tsv")]
    pub speaker_info: Option<PathBuf>,
    /// JSON map from accents, speakers or clips to demographic groups
    #[arg(long, value_name = "FILE")]
    pub groups: Option<PathBuf>,
    /// Replace clip ids with hashes of their corpus paths
    #[arg(long)]
    pub anonymize: bool,
    /// Target speaker id; its clips are excluded from the sources
    #[arg(long, value_name = "ID")]
    pub target: String,
    /// Number of evaluation pairs [default: 64]
    #[arg(long, value_name = "N")]
    pub n_pairs: Option<usize>,
    /// Comma-separated model ids [default: autovc,fragmentvc,fragmentvc-cv-finetune,fragmentvc-cv-vctk]
    #[arg(long, value_name = "IDS", value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Suite audio sample rate in Hz [default: 16000]
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<u32>,
    /// Effect-chain JSON [default: built-in ranges]
    #[arg(long, value_name = "FILE")]
    pub chain_config: Option<PathBuf>,
    /// Directory of noise WAVs for the additive-noise family
    #[arg(long, value_name = "DIR")]
    pub noise_dir: Option<PathBuf>,
    /// Worker threads [default: logical CPU count]
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    /// Suite output directory
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttachArgs {
    /// Suite directory
    #[arg(long, value_name = "DIR")]
    pub suite: PathBuf,
    /// Model id as listed in the manifest
    #[arg(long, value_name = "ID")]
    pub model: String,
    /// Directory with one `<pair_id>.wav` per pair, inside the suite directory
    #[arg(long, value_name = "DIR")]
    pub outputs: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Suite directory with all model outputs attached
    #[arg(long, value_name = "DIR")]
    pub suite: PathBuf,
    /// Bind address [default: 127.0.0.1]
    #[arg(long, value_name = "ADDR")]
    pub host: Option<String>,
    /// TCP port; 0 picks a free one [default: 8080]
    #[arg(long, value_name = "PORT")]
    pub port: Option<u16>,
    /// Rating store [default: <suite>/ratings.ndjson]
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Bearer token for the export endpoint [default: random, printed at startup]
    #[arg(long, env = "VCROBUST_ADMIN_TOKEN", value_name = "TOKEN", hide_env_values = true)]
    pub admin_token: Option<String>,
    /// Rubric JSON replacing the built-in five-point scale
    #[arg(long, value_name = "FILE")]
    pub rubric: Option<PathBuf>,
    /// Also offer the noised source clip with each item
    #[arg(long)]
    pub with_reference: bool,
    /// Directory of static web client files served at /
    #[arg(long, value_name = "DIR")]
    pub webui: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Ratings export (NDJSON)
    #[arg(long, value_name = "FILE")]
    pub ratings: PathBuf,
    /// Suite manifest or suite directory
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Report output directory
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
    /// Histogram bin width on the 1..5 scale; must divide 4 [default: 0.5]
    #[arg(long, value_name = "W")]
    pub bin_width: Option<f64>,
    /// Standard deviation formula [default: population]
    #[arg(long, value_name = "KIND", value_parser = parse_std_kind)]
    pub std: Option<StdKind>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Input WAV file
    #[arg(short, long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output matrix file
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
    /// Mel config JSON [default: 16 kHz, 25 ms window, 10 ms hop, 80 mels]
    #[arg(long, value_name = "FILE")]
    pub mel_config: Option<PathBuf>,
    /// Resample input to the config rate instead of failing on a mismatch
    #[arg(long)]
    pub resample: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Rating store written by `serve`
    #[arg(long, value_name = "FILE")]
    pub store: PathBuf,
    /// Output NDJSON file [default: stdout]
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_std_kind(s: &str) -> Result<StdKind, String> {
    match s {
        "population" => Ok(StdKind::Population),
        "sample" => Ok(StdKind::Sample),
        other => Err(format!("expected `population` or `sample`, got {other:?}")),
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub file: FileConfig,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    logging::init(cli.verbose);
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!(code = e.exit_code(), error:% = e; "command failed");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = config::pick("seed", cli.seed, file.seed, DEFAULT_SEED);
    let g = Globals { seed, file };
    match cli.command {
        Command::Augment(a) => commands::augment::run(&g, a).map(|_| ()),
        Command::BuildSuite(a) => commands::suite::build(&g, a),
        Command::AttachOutputs(a) => commands::suite::attach(a),
        Command::Serve(a) => commands::serve::run(&g, a),
        Command::Analyze(a) => commands::analyze::run(&g, a),
        Command::Features(a) => commands::features::run(&g, a),
        Command::Export(a) => commands::export::run(a),
    }
}
