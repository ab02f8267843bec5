use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bidguard_cli::config::Overrides;
use bidguard_cli::io::{self, Provenance};
use bidguard_cli::{run_experiment, CliError, Experiment, ExperimentConfig, Result, RunStatus, SyntheticSpec};
use bidguard_core::validate_instance;
use clap::{Parser, Subcommand};

/// Reviewer assignment under adversarial bidding.
#[derive(Parser, Debug)]
#[command(name = "bidguard", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials; overrides the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance directory with honest bids.
    Gen {
        /// Synthetic spec (TOML). Without it the config's synthetic source is used.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Check a config, or an instance directory, without solving anything.
    Validate { path: Option<PathBuf> },
    /// Assignments for every configured defense.
    Solve,
    /// Manipulation success for every defense and attack.
    Attack,
    /// Honest-versus-no-bid symmetric differences per reviewer.
    Incentive,
    /// Random display against probability-limited assignment.
    CompareRdPlra,
    /// Probability-limited assignment quality across caps.
    SweepQ,
    /// Full per-defense reports and the scorecard.
    Scorecard,
    /// Every experiment listed in the config.
    Run,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    config.apply(&Overrides {
        seed: cli.seed,
        trials: cli.trials,
        output_dir: cli.out.clone(),
    });
    Ok(config)
}

fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("bidguard-out"))
}

fn gen(cli: &Cli, spec_path: Option<&Path>) -> Result<()> {
    let (spec, provenance) = match spec_path {
        Some(path) => {
            let text = io::read_file(path)?;
            let mut spec: SyntheticSpec = toml::from_str(&text).map_err(|e| CliError::schema(path, e.to_string()))?;
            if cli.seed.is_some() {
                spec.seed = cli.seed;
            }
            let seed = spec.seed.unwrap_or(1);
            spec.seed = Some(seed);
            (spec, Provenance { config_hash: Provenance::hash_text(&text), seed })
        }
        None => {
            let config = load_config(cli)?;
            let spec = config
                .resolved_spec()
                .ok_or_else(|| CliError::Config("config does not describe a synthetic instance".into()))?;
            (spec, config.provenance())
        }
    };
    spec.validate()?;
    let (instance, bids) = bidguard_cli::generate_instance(&spec)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("instance"));
    io::save_instance(&out, &instance, Some(&provenance))?;
    io::save_bids(&out.join(io::BIDS_FILE), &instance, &bids, Some(&provenance))?;
    println!("wrote {} papers × {} reviewers to {}", instance.n_papers(), instance.n_reviewers(), out.display());
    Ok(())
}

fn validate(cli: &Cli, path: Option<&Path>) -> Result<()> {
    let target = path.or(cli.config.as_deref());
    let Some(target) = target else {
        return Err(CliError::Config("give a config file or an instance directory".into()));
    };
    if target.is_dir() {
        let (instance, _) = io::load_instance_with_bids(target)?;
        let report = validate_instance(&instance);
        if !report.is_ok() {
            return Err(CliError::InvalidInstance(report.to_string()));
        }
        println!("{}: ok ({} papers, {} reviewers)", target.display(), instance.n_papers(), instance.n_reviewers());
        return Ok(());
    }
    let mut config = ExperimentConfig::load(target)?;
    config.apply(&Overrides {
        seed: cli.seed,
        trials: cli.trials,
        output_dir: None,
    });
    config.validate()?;
    let (instance, _) = config.materialize()?;
    for attack in &config.attacks {
        attack.scenario(&instance)?;
    }
    println!("{}: ok (config hash {})", target.display(), config.hash());
    Ok(())
}

fn experiments(cli: &Cli, config: &ExperimentConfig) -> Vec<Experiment> {
    match cli.command {
        Command::Solve => vec![Experiment::Solve],
        Command::Attack => vec![Experiment::Attack],
        Command::Incentive => vec![Experiment::Incentive],
        Command::CompareRdPlra => vec![Experiment::RdVsPlra],
        Command::SweepQ => vec![Experiment::QSweep],
        Command::Scorecard => vec![Experiment::Scorecard],
        Command::Run if config.experiments.is_empty() => vec![
            Experiment::Solve,
            Experiment::Attack,
            Experiment::Incentive,
            Experiment::Scorecard,
        ],
        Command::Run => config.experiments.clone(),
        Command::Gen { .. } | Command::Validate { .. } => unreachable!("handled before experiments"),
    }
}

fn run(cli: &Cli) -> Result<RunStatus> {
    match &cli.command {
        Command::Gen { spec } => return gen(cli, spec.as_deref()).map(|()| RunStatus::Complete),
        Command::Validate { path } => return validate(cli, path.as_deref()).map(|()| RunStatus::Complete),
        _ => {}
    }
    let config = load_config(cli)?;
    let which = experiments(cli, &config);
    let out = output_dir(&config);
    let manifest = run_experiment(config, &which, &out)?;
    println!("{}: {} files, status {:?}", out.display(), manifest.files.len(), manifest.status);
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    Ok(manifest.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(RunStatus::Complete) => ExitCode::SUCCESS,
        Ok(RunStatus::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
