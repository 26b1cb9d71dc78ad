use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use octopus_core::crypto::paillier::paillier_keygen;
use octopus_core::pir::QueryShape;
use octopus_core::protocol::TransportKind;
use octopus_harness::config::{NoiseMode, SEED_ENV};
use octopus_harness::scenario::{scenario_key, Scenario};
use octopus_harness::{bench, keyfile, noise_cache, HarnessError, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Parser)]
#[command(name = "octopus", version, about = "Run and measure private loan-stacking queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session on a generated consortium and print a report.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the concatenated wire transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Measure serialized query and response sizes.
    BenchSizes {
        /// Shapes such as 10x10x10x10; defaults to 10x10x10x10 and 100x100.
        #[arg(long = "shape")]
        shapes: Vec<String>,
        #[arg(long, default_value_t = 1024)]
        key_bits: u64,
        #[arg(long, env = SEED_ENV, default_value_t = 1)]
        seed: u64,
    },
    /// Pre-generate noise batches for a key file.
    PregenNoise {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an originator key file.
    Keygen {
        #[arg(long, default_value_t = 1024)]
        bits: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
    },
}

/// Flags mirror the config-file keys and take precedence over the file.
#[derive(Args)]
struct ScenarioArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lenders: Option<u32>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<u64>,
    /// sum, count, variance, cmp_public or cmp_private.
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    key_bits: Option<u64>,
    #[arg(long)]
    key_file: Option<PathBuf>,
    #[arg(long)]
    lie_sum: bool,
    #[arg(long)]
    bad_query: bool,
    #[arg(long)]
    impostor: bool,
    #[arg(long)]
    replay_proof: bool,
    #[arg(long)]
    wrong_target: bool,
    /// Overrides the config file; `OCTO_SEED` is read when the flag is absent.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// inproc, threaded or tcp.
    #[arg(long)]
    transport: Option<TransportKind>,
    /// online, fixed:<k> or cache:<path>.
    #[arg(long)]
    noise: Option<NoiseMode>,
    #[arg(long)]
    borrower_pid: Option<usize>,
    #[arg(long)]
    max_amount: Option<u64>,
    #[arg(long)]
    range_bits: Option<usize>,
    /// Session date, YYYY-MM-DD.
    #[arg(long)]
    date: Option<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, HarnessError> {
        let mut cfg = ScenarioConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        };
        set("lenders", self.lenders.map(|v| v.to_string()))?;
        set("shape", self.shape.clone())?;
        set("s", self.s.map(|v| v.to_string()))?;
        set("sparsity", self.sparsity.map(|v| v.to_string()))?;
        set("epsilon", self.epsilon.map(|v| v.to_string()))?;
        set("delta", self.delta.map(|v| v.to_string()))?;
        set("k", self.k.map(|v| v.to_string()))?;
        set("query", self.query.clone())?;
        set("threshold", self.threshold.map(|v| v.to_string()))?;
        set("key_bits", self.key_bits.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("borrower_pid", self.borrower_pid.map(|v| v.to_string()))?;
        set("max_amount", self.max_amount.map(|v| v.to_string()))?;
        set("range_bits", self.range_bits.map(|v| v.to_string()))?;
        set("date", self.date.clone())?;
        if let Some(path) = &self.key_file {
            cfg.key_file = Some(path.clone());
        }
        if let Some(t) = self.transport {
            cfg.transport = t;
        }
        if let Some(n) = &self.noise {
            cfg.noise = n.clone();
        }
        let flags = &mut cfg.adversary;
        flags.lie_sum |= self.lie_sum;
        flags.bad_query |= self.bad_query;
        flags.impostor |= self.impostor;
        flags.replay_proof |= self.replay_proof;
        flags.wrong_target |= self.wrong_target;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn execute(command: Command) -> Result<bool, HarnessError> {
    match command {
        Command::Run {
            scenario,
            csv,
            transcript,
        } => {
            let cfg = scenario.resolve()?;
            let report = Scenario::build(&cfg)?.run()?;
            eprint!("{}", report.summary());
            match csv {
                Some(path) => write_file(&path, report.to_csv().as_bytes())?,
                None => print!("{}", report.to_csv()),
            }
            if let Some(path) = transcript {
                write_file(&path, &report.transcript)?;
            }
            Ok(report.as_expected())
        }
        Command::BenchSizes { shapes, key_bits, seed } => {
            let shapes = if shapes.is_empty() {
                vec!["10x10x10x10".to_string(), "100x100".to_string()]
            } else {
                shapes
            };
            let shapes = shapes
                .iter()
                .map(|s| QueryShape::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (pk, _) = paillier_keygen(key_bits, &mut rng)?;
            let rows = bench::bench_sizes(&pk, &shapes, &mut rng)?;
            print!("{}", bench::to_csv(&rows));
            Ok(rows.iter().all(|r| r.exact()))
        }
        Command::PregenNoise { scenario, count, out } => {
            let cfg = scenario.resolve()?;
            let sk = scenario_key(&cfg)?;
            let cache = noise_cache::pregenerate(sk.public_key(), &cfg, count)?;
            noise_cache::save(&out, sk.public_key(), &cache)?;
            let responses: usize = cache.batches.iter().map(|b| b.responses.len()).sum();
            eprintln!("wrote {count} batches ({responses} responses) to {}", out.display());
            Ok(true)
        }
        Command::Keygen { bits, out, seed } => {
            let mut rng = match seed {
                Some(s) => ChaCha20Rng::seed_from_u64(s),
                None => ChaCha20Rng::from_entropy(),
            };
            let (pk, sk) = paillier_keygen(bits, &mut rng)?;
            keyfile::save(&out, &sk)?;
            let fp: String = pk.fingerprint()[..8].iter().map(|b| format!("{b:02x}")).collect();
            eprintln!("{bits}-bit key {fp} written to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
