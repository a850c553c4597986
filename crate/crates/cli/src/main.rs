use std::path::{Path, PathBuf};
use std::process::ExitCode;

use autopath_cli::commands::{
    cmd_experiment_compare, cmd_experiment_scp, cmd_experiment_trials, cmd_map_validate, cmd_plan, cmd_run,
};
use autopath_cli::config::Config;
use autopath_cli::{load_scenario, HarnessError};
use clap::{Args, Parser, Subcommand};

const EXIT_CODES: &str = "Exit codes: 0 success, 1 usage or input error, 2 planner found no path.
Scenarios are files or builtin:<name> (scenario-a, scenario-b, barrel-course, scp-root).";

#[derive(Parser)]
#[command(name = "autopath", version, about = "Hybrid planning and corridor MPC toolkit", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file or builtin:<name>.
    #[arg(long)]
    scenario: Option<String>,
    /// Map file replacing the scenario's map.
    #[arg(long)]
    map: Option<PathBuf>,
    /// JSON config (autopath-config/1).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Plan once and write the path, corridor and an SVG overlay.
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// One closed-loop run with trace, metrics and command plot.
    Run {
        #[command(flatten)]
        common: Common,
        /// Planner seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    #[command(subcommand, about = "Experiment suite")]
    Experiment(Experiment),
    #[command(subcommand, about = "Map tooling")]
    Map(MapCommand),
}

#[derive(Subcommand)]
enum Experiment {
    /// Perturbed scenarios run at several SCP iteration counts.
    Scp {
        #[command(flatten)]
        common: Common,
        /// Number of perturbed scenarios.
        #[arg(long, default_value_t = 25)]
        trials: usize,
        /// Comma-separated SCP iteration counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        iterations: Vec<usize>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Lattice-only, hybrid and free-space-only planning on two scenarios.
    Compare {
        /// Scenario files; defaults to the two builtin comparison scenarios.
        #[arg(long)]
        scenario: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Trials per sampling mode.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Repeated closed-loop runs checked against the vehicle limits.
    Trials {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum MapCommand {
    /// Load a map file and report validation problems.
    Validate {
        #[arg(long)]
        map: PathBuf,
    },
}

fn config(path: Option<&Path>) -> Result<Config, HarnessError> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn scenario(common: &Common, default: &str) -> Result<autopath_cli::ScenarioInput, HarnessError> {
    load_scenario(common.scenario.as_deref().unwrap_or(default), common.map.as_deref())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Plan { common } => {
            let cfg = config(common.config.as_deref())?;
            let input = scenario(&common, "builtin:scenario-a")?;
            let a = cmd_plan(&input, &cfg, &common.out)?;
            println!("path length {:.3} m, {} poses", a.path.length, a.path.poses.len());
        }
        Command::Run { common, seed } => {
            let cfg = config(common.config.as_deref())?;
            let input = scenario(&common, "builtin:barrel-course")?;
            let m = cmd_run(&input, &cfg, seed, &common.out)?;
            println!(
                "success {} min distance {:.3} m, duration {:.1} s",
                m.success, m.min_obstacle_distance, m.duration
            );
        }
        Command::Experiment(Experiment::Scp {
            common,
            trials,
            iterations,
            seed,
        }) => {
            let cfg = config(common.config.as_deref())?;
            let input = scenario(&common, "builtin:scp-root")?;
            let r = cmd_experiment_scp(&input, &cfg, &iterations, trials, seed, &common.out)?;
            print!("{}", r.summary_csv());
        }
        Command::Experiment(Experiment::Compare {
            scenario,
            config: cfg_path,
            out,
            trials,
        }) => {
            let cfg = config(cfg_path.as_deref())?;
            let names = if scenario.is_empty() {
                vec!["builtin:scenario-a".to_string(), "builtin:scenario-b".to_string()]
            } else {
                scenario
            };
            let inputs = names
                .iter()
                .map(|n| load_scenario(n, None))
                .collect::<Result<Vec<_>, _>>()?;
            let base = inputs.first().and_then(|i| i.base.clone());
            if inputs.iter().any(|i| i.base != base) {
                return Err(HarnessError::Input("compared scenario files must share a directory".into()));
            }
            let specs: Vec<_> = inputs.into_iter().map(|i| i.spec).collect();
            let r = cmd_experiment_compare(&specs, base.as_deref(), &cfg, trials, &out)?;
            print!("{}", r.table_csv());
        }
        Command::Experiment(Experiment::Trials { common, trials, seed }) => {
            let cfg = config(common.config.as_deref())?;
            let input = scenario(&common, "builtin:barrel-course")?;
            let r = cmd_experiment_trials(&input, &cfg, trials, seed, &common.out)?;
            println!("success rate {}/{}", r.successes, r.trials.len());
            print!("{}", r.maxima_csv());
        }
        Command::Map(MapCommand::Validate { map }) => println!("{}", cmd_map_validate(&map)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
