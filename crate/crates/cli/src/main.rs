use brwlab::experiment::{
    exit_code, reproduce_all, reproduce_example, run_experiment, write_table, ExperimentConfig, ReproduceOptions, EXIT_OK, EXIT_TASK_FAILED,
};
use brwlab::model::validate_model;
use brwlab::spaces::{build_example, CATALOG_IDS};
use brwlab::Error;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  config or model rejected (schema error, unnormalized law, degenerate class, unbounded row sums)
  3  a task failed or a reproduced fact did not match";

const FILES_HELP: &str = "\
Output files (in the output directory):
  manifest.json    config hash, seed, versions, resolved config and file list; accepted by `run`
  report.json      per-task status and results
  extinction.csv   vertex,label,lower,upper  extinction-probability brackets on the ball
  never_hit.csv    vertex,label,lower,upper  brackets for never visiting the target set
  phi.csv          n,value  first-passage coefficients from start to target
  gamma.csv        n,value  taboo return coefficients
  log_moments.csv  n,value  ln of n-step return moments at start
  ball_sizes.csv   radius,size
  trials.csv       trial,stop_reason,final_gen,max_pop,visits_A  one row per simulated trial
  sweep.csv        m,global_estimate,global_ci_low,global_ci_high,local_estimate  (m = inf is untruncated)

Precedence for the seed: --seed, then BRWLAB_SEED, then the config.
Without --out the run goes to the config's output directory, or runs/<first 12 hex digits of the config hash>.";

/// Branching random walks: extinction, growth rates, certificates and simulation.
#[derive(Parser)]
#[command(name = "brwlab", version, after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the model of a config and check normalization, row sums and classes.
    Validate {
        config: PathBuf,
        /// Ball radius for the checks.
        #[arg(long)]
        radius: Option<u32>,
    },
    /// Run the tasks of a config (or of a manifest from an earlier run).
    #[command(after_help = FILES_HELP)]
    Run {
        config: PathBuf,
        #[arg(long, env = "BRWLAB_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        radius: Option<u32>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the known facts of a catalog example (`id`, `id(key=value,...)`, or `all`).
    Reproduce {
        example: String,
        #[arg(long, env = "BRWLAB_SEED")]
        seed: Option<u64>,
        /// Also write the rows as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List catalog examples with their parameters and known facts.
    Catalog {
        /// Print full descriptors as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path)
}

fn validate(path: &Path, radius: Option<u32>) -> Result<i32, Error> {
    let config = load(path)?;
    let model = config.model.build()?;
    let report = validate_model(&model, radius.unwrap_or(config.settings.radius))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}

fn run(path: &Path, seed: Option<u64>, trials: Option<u64>, radius: Option<u32>, out: Option<PathBuf>) -> Result<i32, Error> {
    let mut config = load(path)?;
    if let Some(s) = seed {
        config.settings.seed = s;
    }
    if let Some(t) = trials {
        config.settings.trials = t;
    }
    if let Some(r) = radius {
        config.settings.radius = r;
    }
    let dir = out
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.hash()[..12]));
    let outcome = run_experiment(&config, &dir)?;
    for t in &outcome.report.tasks {
        let status = serde_json::to_value(&t.status)?;
        match &t.error {
            Some(e) => eprintln!("{:<16} {}  {e}", t.task.name(), status.as_str().unwrap_or_default()),
            None => eprintln!("{:<16} {}", t.task.name(), status.as_str().unwrap_or_default()),
        }
    }
    println!("{}", outcome.out_dir.display());
    Ok(outcome.exit_code)
}

fn reproduce(example: &str, seed: Option<u64>, json: Option<PathBuf>) -> Result<i32, Error> {
    let mut opts = ReproduceOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let reps = if example == "all" { reproduce_all(&opts)? } else { vec![reproduce_example(example, &opts)?] };
    write_table(std::io::stdout().lock(), &reps)?;
    if let Some(path) = json {
        std::fs::write(path, serde_json::to_string_pretty(&reps)? + "\n")?;
    }
    Ok(if reps.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_TASK_FAILED })
}

fn catalog(json: bool) -> Result<i32, Error> {
    let descriptors = CATALOG_IDS.iter().map(|id| build_example(id).map(|e| e.descriptor)).collect::<Result<Vec<_>, _>>()?;
    if json {
        println!("{}", serde_json::to_string_pretty(&descriptors)?);
    } else {
        for d in &descriptors {
            println!("{:<24} {:<60} {}", d.id, d.title, d.params);
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config, radius } => validate(&config, radius),
        Command::Run { config, seed, trials, radius, out } => run(&config, seed, trials, radius, out),
        Command::Reproduce { example, seed, json } => reproduce(&example, seed, json),
        Command::Catalog { json } => catalog(json),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
