//! Command implementations behind the `freecool` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::baselines::{Hysteresis, OneStepOracle};
use crate::config::{sha256_hex, ConfigError, Profile, RunConfig, Snapshot};
use crate::drl::{train, Agent, GreedyPolicy, TrainError};
use crate::env::{EnvError, Thresholds, NORM_P_IT, NORM_RH, NORM_T};
use crate::eval::{evaluate, Controller, DqnController, EvalError, EvalRun};
use crate::nn::{Checkpoint, NnError};
use crate::psychro::Tolerance;
use crate::surrogate::{generate_dataset, train_surrogates, write_report, SurrogateError, SurrogateSpec};
use crate::traces::{load_csv, save_csv, split, synth_weather, TraceError, WeatherTrace};
use crate::validate::{run_all, CheckResult, ValidateOptions};

pub const SNAPSHOT_FILE: &str = "config.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 usage, 3 failed validation, 4 numerical abort, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Train(TrainError::NonFiniteLoss { .. }) => 4,
            CliError::Train(TrainError::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(sha256_hex(&String::from_utf8_lossy(&bytes)))
}

pub fn cmd_synth(days: usize, seed: u64, out: &Path) -> Result<WeatherTrace, CliError> {
    if days == 0 {
        return Err(CliError::Usage("--days must be at least 1".into()));
    }
    let trace = synth_weather(days, seed)?;
    save_csv(&trace, out)?;
    let mut snap = Snapshot::default();
    snap.push("command", "synth");
    snap.push("days", days);
    snap.push("seed", seed);
    snap.push("rows", trace.len());
    let snap_path = sidecar(out);
    std::fs::write(&snap_path, snap.to_text()).map_err(io_err(&snap_path))?;
    Ok(trace)
}

pub fn cmd_split(
    trace_path: &Path,
    train_days: usize,
    test_days: usize,
    train_out: &Path,
    test_out: &Path,
) -> Result<(), CliError> {
    let trace = load_csv(trace_path)?;
    let (a, b) = split(&trace, train_days, test_days)?;
    save_csv(&a, train_out)?;
    save_csv(&b, test_out)?;
    Ok(())
}

/// `<file>.config.txt` next to a single-file output.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.txt");
    out.with_file_name(name)
}

/// Inputs shared by commands that build a run configuration.
#[derive(Debug, Clone, Default)]
pub struct ConfigArgs {
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
}

impl ConfigArgs {
    fn apply(&self, run: &mut RunConfig) -> Result<(), CliError> {
        if let Some(path) = &self.config {
            run.load_overrides(path)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{kv}`")))?;
            run.set(k.trim(), v.trim())?;
        }
        run.validate_models()?;
        Ok(())
    }
}

fn check_thresholds(th: &Thresholds, allow_custom: bool) -> Result<(), CliError> {
    if !(th.t_th.is_finite() && th.phi_th.is_finite()) {
        return Err(CliError::Usage("thresholds must be finite".into()));
    }
    if !allow_custom && !th.is_standard() {
        return Err(CliError::Usage(format!(
            "thresholds ({}, {}) are outside the grid t_th in {:?}, phi_th in {:?}; pass --allow-custom to use them",
            th.t_th,
            th.phi_th,
            Thresholds::T_GRID,
            Thresholds::PHI_GRID
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub agent: Agent,
    pub trace: PathBuf,
    pub t_th: f64,
    pub phi_th: f64,
    pub profile: Profile,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub config: ConfigArgs,
    pub allow_custom: bool,
}

/// Resolved configuration for a training run: profile defaults, then the
/// config file, then `--set`, then the explicit flags.
pub fn train_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut run = RunConfig::new(args.agent, args.profile);
    args.config.apply(&mut run)?;
    run.train.agent = args.agent;
    run.train.thresholds = Thresholds { t_th: args.t_th, phi_th: args.phi_th };
    if let Some(seed) = args.seed {
        run.train.seed = seed;
    }
    check_thresholds(&run.train.thresholds, args.allow_custom)?;
    run.train.validate()?;
    Ok(run)
}

pub fn cmd_train(args: &TrainArgs) -> Result<crate::drl::TrainOutcome, CliError> {
    let run = train_config(args)?;
    let trace = Arc::new(load_csv(&args.trace)?);
    let mut snap = Snapshot::default();
    snap.push("command", "train");
    snap.push("trace", args.trace.display());
    snap.push("trace_sha256", file_hash(&args.trace)?);
    snap.extend_run(&run);
    let config_hash = snap.hash();

    let cfg = &run.train;
    let mut env = crate::env::Environment::new(run.build_models(), trace, cfg.thresholds, cfg.steps, cfg.seed)?;
    let outcome = train(&mut env, cfg)?;

    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let dir = &args.out_dir;
    let ckpt = Checkpoint::new(outcome.net.clone())
        .with_meta("agent", cfg.agent.name())
        .with_meta("t_th", cfg.thresholds.t_th.to_string())
        .with_meta("phi_th", cfg.thresholds.phi_th.to_string())
        .with_meta("config_hash", config_hash.clone())
        .with_meta("norm_t", format!("{},{}", NORM_T.0, NORM_T.1))
        .with_meta("norm_rh", format!("{},{}", NORM_RH.0, NORM_RH.1))
        .with_meta("norm_p_it", format!("{},{}", NORM_P_IT.0, NORM_P_IT.1));
    ckpt.save(&dir.join("model.ckpt"))?;
    write_file(&dir.join("train_log.csv"), |w| outcome.write_log(w))?;
    if cfg.agent == Agent::Cdrl {
        write_file(&dir.join("lambdas.csv"), |w| {
            writeln!(w, "step,lambda1,lambda2")?;
            for (i, l) in outcome.lambdas.iter().enumerate() {
                writeln!(w, "{},{},{}", i + 1, l[0], l[1])?;
            }
            Ok(())
        })?;
    }
    let snap_path = dir.join(SNAPSHOT_FILE);
    std::fs::write(&snap_path, snap.to_text()).map_err(io_err(&snap_path))?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Udrl,
    Cdrl,
    Hysteresis,
    Oracle,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Udrl => "udrl",
            PolicyKind::Cdrl => "cdrl",
            PolicyKind::Hysteresis => "hysteresis",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "udrl" => Some(PolicyKind::Udrl),
            "cdrl" => Some(PolicyKind::Cdrl),
            "hysteresis" => Some(PolicyKind::Hysteresis),
            "oracle" => Some(PolicyKind::Oracle),
            _ => None,
        }
    }

    fn is_learned(self) -> bool {
        matches!(self, PolicyKind::Udrl | PolicyKind::Cdrl)
    }
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub policies: Vec<PolicyKind>,
    pub checkpoints: Vec<PathBuf>,
    pub trace: PathBuf,
    pub t_th: Vec<f64>,
    pub phi_th: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub config: ConfigArgs,
    pub allow_custom: bool,
}

/// Result of one (policy, thresholds) evaluation.
#[derive(Debug, Clone)]
pub struct EvalJob {
    pub policy: PolicyKind,
    pub thresholds: Thresholds,
    pub run: EvalRun,
    pub stem: String,
    pub warning: Option<String>,
}

struct Loaded {
    path: PathBuf,
    hash: String,
    ckpt: Checkpoint<f64>,
}

fn pick_checkpoint<'a>(loaded: &'a [Loaded], policy: PolicyKind) -> Result<&'a Loaded, CliError> {
    let by_agent: Vec<&Loaded> = loaded
        .iter()
        .filter(|l| l.ckpt.meta.get("agent").map(String::as_str) == Some(policy.name()))
        .collect();
    match (by_agent.as_slice(), loaded) {
        ([one], _) => Ok(one),
        ([], [only]) => Ok(only),
        ([], _) => Err(CliError::Usage(format!("policy {} needs --checkpoint", policy.name()))),
        _ => Err(CliError::Usage(format!("several checkpoints match policy {}", policy.name()))),
    }
}

fn threshold_warning(ckpt: &Checkpoint<f64>, th: &Thresholds) -> Option<String> {
    let trained = |k: &str| ckpt.meta.get(k).and_then(|v| v.parse::<f64>().ok());
    match (trained("t_th"), trained("phi_th")) {
        (Some(t), Some(p)) if t == th.t_th && p == th.phi_th => None,
        (t, p) => Some(format!(
            "checkpoint trained at t_th {t:?}, phi_th {p:?}; evaluating at ({}, {})",
            th.t_th, th.phi_th
        )),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Vec<EvalJob>, CliError> {
    if args.policies.is_empty() || args.t_th.is_empty() || args.phi_th.is_empty() {
        return Err(CliError::Usage("need at least one policy and one threshold pair".into()));
    }
    if args.steps == 0 || args.workers == 0 {
        return Err(CliError::Usage("--steps and --workers must be positive".into()));
    }
    let mut run = RunConfig::new(Agent::Udrl, Profile::Desk);
    args.config.apply(&mut run)?;
    let models = run.build_models();
    let trace = Arc::new(load_csv(&args.trace)?);

    let mut loaded = Vec::new();
    for path in &args.checkpoints {
        loaded.push(Loaded {
            path: path.clone(),
            hash: file_hash(path)?,
            ckpt: Checkpoint::load(path)?,
        });
    }
    let mut plan = Vec::new();
    for &policy in &args.policies {
        let ckpt = if policy.is_learned() { Some(pick_checkpoint(&loaded, policy)?) } else { None };
        for &t_th in &args.t_th {
            for &phi_th in &args.phi_th {
                let th = Thresholds { t_th, phi_th };
                check_thresholds(&th, args.allow_custom)?;
                plan.push((policy, th, ckpt));
            }
        }
    }

    let run_one = |&(policy, th, ckpt): &(PolicyKind, Thresholds, Option<&Loaded>)| -> Result<EvalJob, CliError> {
        let mut controller: Box<dyn Controller> = match (policy, ckpt) {
            (PolicyKind::Hysteresis, _) => Box::new(Hysteresis::default()),
            (PolicyKind::Oracle, _) => Box::new(OneStepOracle::new(models.clone())),
            (_, Some(l)) => Box::new(DqnController {
                label: policy.name().into(),
                policy: GreedyPolicy::new(l.ckpt.net.clone()),
            }),
            (_, None) => unreachable!("learned policies are resolved before planning"),
        };
        let run = evaluate(controller.as_mut(), &models, trace.clone(), th, args.steps, args.seed)?;
        Ok(EvalJob {
            policy,
            thresholds: th,
            run,
            stem: format!("{}_t{}_phi{}", policy.name(), th.t_th, th.phi_th),
            warning: ckpt.and_then(|l| threshold_warning(&l.ckpt, &th)),
        })
    };
    let jobs: Vec<EvalJob> = if args.workers > 1 && plan.len() > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", args.workers)))?;
        pool.install(|| plan.par_iter().map(run_one).collect::<Result<_, _>>())?
    } else {
        plan.iter().map(run_one).collect::<Result<_, _>>()?
    };

    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    for job in &jobs {
        write_file(&args.out.join(format!("{}_steps.csv", job.stem)), |w| job.run.write_steps(w))?;
        write_file(&args.out.join(format!("{}_summary.txt", job.stem)), |w| job.run.summary.write(w))?;
    }
    let mut snap = Snapshot::default();
    snap.push("command", "eval");
    snap.push(
        "policies",
        args.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
    );
    for l in &loaded {
        snap.push("checkpoint", l.path.display());
        snap.push("checkpoint_sha256", &l.hash);
    }
    snap.push("trace", args.trace.display());
    snap.push("trace_sha256", file_hash(&args.trace)?);
    snap.push("t_th_list", join_f64(&args.t_th));
    snap.push("phi_th_list", join_f64(&args.phi_th));
    snap.push("eval_steps", args.steps);
    snap.push("eval_seed", args.seed);
    snap.extend_run(&run);
    let snap_path = args.out.join(SNAPSHOT_FILE);
    std::fs::write(&snap_path, snap.to_text()).map_err(io_err(&snap_path))?;
    Ok(jobs)
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_validate(opts: &ValidateOptions) -> Result<Vec<CheckResult>, CliError> {
    let results = run_all(&crate::env::Models::default(), opts);
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        Err(CliError::Validation(format!(
            "{}\n{} check(s) failed: {}",
            format_checks(&results),
            failed.len(),
            failed.join("; ")
        )))
    }
}

pub fn format_checks(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.chars().count()).max().unwrap_or(0);
    results
        .iter()
        .map(|r| {
            let pad = width - r.name.chars().count();
            format!(
                "{} {}{}  {}\n",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                " ".repeat(pad),
                r.detail
            )
        })
        .collect()
}

/// Validation options with an optional enthalpy tolerance override.
pub fn validate_options(samples: usize, seed: u64, eps_h: Option<f64>) -> ValidateOptions {
    let mut tol = Tolerance::default();
    if let Some(e) = eps_h {
        tol.eps_h = e;
    }
    ValidateOptions { samples, seed, tol, ..ValidateOptions::default() }
}

#[derive(Debug, Clone)]
pub struct SurrogateArgs {
    pub trace: PathBuf,
    pub samples: usize,
    pub n_train: usize,
    pub seed: u64,
    pub spec: SurrogateSpec,
    pub out_dir: PathBuf,
}

pub fn cmd_surrogate(args: &SurrogateArgs) -> Result<crate::surrogate::Surrogates, CliError> {
    let trace = load_csv(&args.trace)?;
    let models = crate::env::Models::default();
    let data = generate_dataset(&models, &trace, args.samples, args.seed)?;
    let fitted = train_surrogates(&data, args.n_train, &args.spec, args.seed)?;
    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    write_file(&args.out_dir.join("rmse_report.csv"), |w| write_report(&fitted.report, w))?;
    let mut snap = Snapshot::default();
    snap.push("command", "surrogate");
    snap.push("trace", args.trace.display());
    snap.push("trace_sha256", file_hash(&args.trace)?);
    snap.push("samples", args.samples);
    snap.push("n_train", args.n_train);
    snap.push("seed", args.seed);
    snap.push("architecture", args.spec.architecture());
    snap.push("epochs", args.spec.epochs);
    snap.push("batch_size", args.spec.batch_size);
    snap.push("lr", args.spec.lr);
    let snap_path = args.out_dir.join(SNAPSHOT_FILE);
    std::fs::write(&snap_path, snap.to_text()).map_err(io_err(&snap_path))?;
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 3);
        let nf = TrainError::NonFiniteLoss { step: 3, config_hash: "h".into() };
        assert_eq!(CliError::from(nf).exit_code(), 4);
        assert_eq!(CliError::from(TraceError::TooShort("t".into())).exit_code(), 1);
    }

    #[test]
    fn threshold_grid_is_enforced() {
        let th = Thresholds { t_th: 33.0, phi_th: 80.0 };
        assert!(matches!(check_thresholds(&th, false), Err(CliError::Usage(_))));
        assert!(check_thresholds(&th, true).is_ok());
        assert!(check_thresholds(&Thresholds { t_th: 40.0, phi_th: 65.0 }, false).is_ok());
    }

    #[test]
    fn profiles_set_run_length() {
        let mut args = TrainArgs {
            agent: Agent::Cdrl,
            trace: PathBuf::from("unused.csv"),
            t_th: 32.0,
            phi_th: 80.0,
            profile: Profile::Desk,
            seed: Some(9),
            out_dir: PathBuf::from("unused"),
            config: ConfigArgs { config: None, set: vec!["window = 20".into()] },
            allow_custom: false,
        };
        let run = train_config(&args).unwrap();
        assert_eq!((run.train.episodes, run.train.steps, run.train.seed, run.train.window), (200, 200, 9, 20));
        args.profile = Profile::Paper;
        let run = train_config(&args).unwrap();
        assert_eq!((run.train.episodes, run.train.steps), (3000, 1000));
        args.config.set = vec!["nonsense=1".into()];
        assert_eq!(train_config(&args).unwrap_err().exit_code(), 2);
    }
}
