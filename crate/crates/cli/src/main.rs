use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use rankone_cli::{list_corpus, run, CliError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rankone", version, about = "Reproducible rank-one convexity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank-one / separate convexity and the local Lipschitz estimate.
    Verify(RunArgs),
    /// Least paraboloid openings.
    Theta(RunArgs),
    /// Tail decay of the opening field.
    Tail(RunArgs),
    /// Cone envelopes, touch sets and second-order remainders.
    Envelope(RunArgs),
    /// Lower-bound certificates from radial majorants.
    Lemma(RunArgs),
    /// One-dimensional maximal-function checks and the Fubini tail.
    Appendix(RunArgs),
    /// Every pipeline in sequence.
    All(RunArgs),
    /// Print corpus entries with their flags.
    ListCorpus {
        /// Only entries carrying this flag.
        #[arg(long)]
        flag: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = json` config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corpus name or path to a sampled-field CSV.
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    eval_points: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

impl RunArgs {
    fn overrides(&self, experiment: Experiment) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("experiment".into(), Value::from(experiment.name()));
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        };
        put("seed", self.seed.map(Value::from));
        put("out", self.out.as_ref().map(|p| Value::from(p.to_string_lossy().into_owned())));
        put("function", self.function.clone().map(Value::from));
        put("grid_points", self.grid_points.map(Value::from));
        put("radius", self.radius.map(Value::from));
        put("tol", self.tol.map(Value::from));
        put("threads", self.threads.map(Value::from));
        put("eval_points", self.eval_points.map(Value::from));
        put("samples", self.samples.map(Value::from));
        m
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<bool, CliError> {
    let cfg = ExperimentConfig::load(args.config.as_deref(), args.overrides(experiment))?;
    let manifest = run(&cfg)?;
    for p in &manifest.pipelines {
        for c in &p.checks {
            println!("[{}] {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, p.experiment, c.name, c.detail);
        }
    }
    println!("outputs in {}", cfg.out.display());
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::ListCorpus { flag } => {
            return match list_corpus(flag.as_deref()) {
                Ok(entries) => {
                    for e in entries {
                        println!("{:<20} {:<5} {}", e.name, e.shape, e.flags.join(","));
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Verify(a) => (Experiment::Verify, a),
        Command::Theta(a) => (Experiment::Theta, a),
        Command::Tail(a) => (Experiment::Tail, a),
        Command::Envelope(a) => (Experiment::Envelope, a),
        Command::Lemma(a) => (Experiment::Lemma, a),
        Command::Appendix(a) => (Experiment::Appendix, a),
        Command::All(a) => (Experiment::All, a),
    };
    match execute(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
