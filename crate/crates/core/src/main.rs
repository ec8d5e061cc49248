use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use freecool::commands::{
    cmd_eval, cmd_split, cmd_surrogate, cmd_synth, cmd_train, cmd_validate, format_checks, validate_options,
    CliError, ConfigArgs, EvalArgs, PolicyKind, SurrogateArgs, TrainArgs,
};
use freecool::config::Profile;
use freecool::drl::Agent;
use freecool::surrogate::SurrogateSpec;

#[derive(Parser)]
#[command(name = "freecool", version, about = "Free-cooled data center simulator and controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic minute-resolution weather trace.
    Synth {
        #[arg(long)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut a trace into leading training days and trailing test days.
    Split {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        train_days: usize,
        #[arg(long)]
        test_days: usize,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Train a DQN controller.
    Train {
        #[arg(long, value_parser = parse_agent)]
        agent: Agent,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 32.0)]
        t_th: f64,
        #[arg(long, default_value_t = 80.0)]
        phi_th: f64,
        #[arg(long, value_parser = parse_profile, default_value = "desk")]
        profile: Profile,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
        /// Accept thresholds outside the standard grid.
        #[arg(long)]
        allow_custom: bool,
    },
    /// Run controllers over a trace and write per-step and summary files.
    Eval {
        /// Comma-separated: udrl, cdrl, hysteresis, oracle.
        #[arg(long, value_delimiter = ',', value_parser = parse_policy, required = true)]
        policy: Vec<PolicyKind>,
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "32")]
        t_th: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "80")]
        phi_th: Vec<f64>,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        allow_custom: bool,
    },
    /// Solver equivalence, gradient and power-model self-checks.
    Validate {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the solver's enthalpy tolerance, kJ/kg.
        #[arg(long)]
        eps_h: Option<f64>,
    },
    /// Fit and score the supply temperature and RH regressors.
    Surrogate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 3180)]
        samples: usize,
        #[arg(long, default_value_t = 2120)]
        n_train: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hidden layer widths, comma-separated.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(clap::Args)]
struct ConfigFlags {
    /// key = value file applied over the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value override, applied after --config.
    #[arg(long = "set")]
    set: Vec<String>,
}

impl From<ConfigFlags> for ConfigArgs {
    fn from(f: ConfigFlags) -> Self {
        ConfigArgs { config: f.config, set: f.set }
    }
}

fn parse_agent(s: &str) -> Result<Agent, String> {
    Agent::parse(s).ok_or_else(|| format!("expected udrl or cdrl, got `{s}`"))
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).ok_or_else(|| format!("expected paper or desk, got `{s}`"))
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    PolicyKind::parse(s).ok_or_else(|| format!("expected udrl, cdrl, hysteresis or oracle, got `{s}`"))
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Synth { days, seed, out } => {
            let t = cmd_synth(days, seed, &out)?;
            eprintln!("wrote {} rows to {}", t.len(), out.display());
        }
        Command::Split { trace, train_days, test_days, train_out, test_out } => {
            cmd_split(&trace, train_days, test_days, &train_out, &test_out)?;
        }
        Command::Train { agent, trace, t_th, phi_th, profile, seed, out_dir, config, allow_custom } => {
            let args = TrainArgs {
                agent,
                trace,
                t_th,
                phi_th,
                profile,
                seed,
                out_dir,
                config: config.into(),
                allow_custom,
            };
            let out = cmd_train(&args)?;
            if let Some(last) = out.log.last() {
                eprintln!(
                    "episode {}: power {:.3} kW, temp penalty {:.3}, rh penalty {:.3}",
                    last.episode, last.mean_cooling_power, last.mean_temp_penalty, last.mean_rh_penalty
                );
            }
        }
        Command::Eval {
            policy,
            checkpoint,
            trace,
            t_th,
            phi_th,
            steps,
            seed,
            out,
            workers,
            config,
            allow_custom,
        } => {
            let args = EvalArgs {
                policies: policy,
                checkpoints: checkpoint,
                trace,
                t_th,
                phi_th,
                steps,
                seed,
                out,
                workers,
                config: config.into(),
                allow_custom,
            };
            for job in cmd_eval(&args)? {
                if let Some(w) = &job.warning {
                    eprintln!("warning: {}: {w}", job.stem);
                }
                let s = &job.run.summary;
                println!(
                    "{}: power {:.3} kW, t_s {:.2}±{:.2} °C, rh {:.2}±{:.2} %, violations {:.3}",
                    job.stem, s.mean_cooling_power, s.mean_t_s, s.std_t_s, s.mean_phi_s, s.std_phi_s, s.violation_rate
                );
            }
        }
        Command::Validate { samples, seed, eps_h } => {
            let results = cmd_validate(&validate_options(samples, seed, eps_h))?;
            print!("{}", format_checks(&results));
        }
        Command::Surrogate { trace, samples, n_train, seed, hidden, epochs, batch_size, lr, out_dir } => {
            let mut spec = SurrogateSpec { epochs, batch_size, lr, ..SurrogateSpec::default() };
            if let Some(h) = hidden {
                spec.hidden = h;
            }
            let args = SurrogateArgs { trace, samples, n_train, seed, spec, out_dir };
            for r in cmd_surrogate(&args)?.report {
                println!("{}: rmse {} ({} train / {} test)", r.model, r.rmse, r.n_train, r.n_test);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(table)) => {
            print!("{table}\n");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
