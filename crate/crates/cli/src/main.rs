mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use projsim::harness::{default_eta_grid, eta_sweep, run_experiment, sweep_argmin};
use projsim::mountain_car::{mc_step, DynamicsOrder};
use projsim::output::{write_curve_csv, write_sweep_csv, RunManifest};
use projsim::physics::{
    self, baseline_strategy, write_height_csv, Direction, PhysicsParams, SwitchRule,
};
use projsim::McState;

use crate::config::{ConfigError, ExperimentArgs};

// Like `println!`, but a closed pipe (`projsim ... | head`) is not a panic.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "projsim", version, about = "Projective-simulation experiments")]
struct Cli {
    /// Upper bound on worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an agent ensemble and write its learning curve
    Run(ExperimentArgs),
    /// Sweep the glow rate and report mean steps at a probe trial
    Sweep(SweepArgs),
    /// Analyze the mountain-car track: height profile, reach, baseline
    Physics(PhysicsArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,

    /// Comma-separated glow rates (default: 30 log-spaced values in [0.001, 1])
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,

    /// 1-based trial at which to read the mean (default: last trial)
    #[arg(long)]
    probe_trial: Option<usize>,
}

#[derive(Args, Debug)]
struct PhysicsArgs {
    /// Number of points in the height profile
    #[arg(long, default_value_t = 171)]
    points: usize,

    /// Position update used for the baseline run
    #[arg(long, default_value = "printed")]
    dynamics: DynamicsOrder,

    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(err: ConfigError) -> Self {
        Failure::Config(err.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Runtime(err)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Config("`threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Physics(args) => cmd_physics(args),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_manifest<C: Serialize + serde::de::DeserializeOwned>(
    dir: &Path,
    stem: &str,
    manifest: &RunManifest<C>,
) -> anyhow::Result<()> {
    let path = dir.join(format!("{stem}.manifest.json"));
    manifest
        .write(&path)
        .with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(args: ExperimentArgs) -> Result<(), Failure> {
    let resolved = args.resolve(true)?;
    let config = resolved.config;
    let started = Instant::now();
    let curve = run_experiment(&config).map_err(anyhow::Error::from)?;
    let elapsed = started.elapsed().as_secs_f64();

    prepare_out(&resolved.out)?;
    let csv_name = "learning_curve.csv";
    write_curve_csv(create(&resolved.out.join(csv_name))?, &curve).map_err(anyhow::Error::from)?;
    let mut manifest = RunManifest::new("run", config.seed, config.clone(), csv_name);
    manifest.capped_trials = curve.capped_trials;
    manifest.wall_clock_seconds = elapsed;
    write_manifest(&resolved.out, "learning_curve", &manifest)?;

    say!(
        "{} {} eta={} agents={} trials={}: first trial {:.1} steps, last trial {:.1} steps (sd {:.1}), mean over trials {:.1}",
        config.env,
        config.params.policy(),
        config.params.eta(),
        config.agents,
        config.trials,
        curve.mean_steps[0],
        curve.final_mean(),
        curve.std_steps[config.trials - 1],
        curve.average(1, config.trials),
    );
    if curve.capped_trials > 0 {
        eprintln!("warning: {} trials hit the step cap", curve.capped_trials);
    }
    say!("wrote {}", resolved.out.join(csv_name).display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let resolved = args.experiment.resolve(false)?;
    let config = resolved.config;
    let etas = args.etas.unwrap_or_else(default_eta_grid);
    if etas.is_empty() {
        return Err(Failure::Config(
            "`etas` must list at least one value".into(),
        ));
    }
    if let Some(bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Failure::Config(format!(
            "`etas` value {bad} outside [0, 1]"
        )));
    }
    let probe = args.probe_trial.unwrap_or(config.trials);
    if probe == 0 || probe > config.trials {
        return Err(Failure::Config(format!(
            "`probe_trial` must lie in 1..={}",
            config.trials
        )));
    }

    let started = Instant::now();
    let rows = eta_sweep(&config, &etas, probe).map_err(anyhow::Error::from)?;
    let elapsed = started.elapsed().as_secs_f64();

    prepare_out(&resolved.out)?;
    let csv_name = "eta_sweep.csv";
    write_sweep_csv(create(&resolved.out.join(csv_name))?, &rows).map_err(anyhow::Error::from)?;
    let mut manifest = RunManifest::new("sweep", config.seed, config.clone(), csv_name);
    manifest.etas = Some(etas);
    manifest.probe_trial = Some(probe);
    manifest.wall_clock_seconds = elapsed;
    write_manifest(&resolved.out, "eta_sweep", &manifest)?;

    for row in &rows {
        say!(
            "eta={:<10.6} mean steps at trial {probe}: {:.1}",
            row.eta,
            row.mean_steps
        );
    }
    if let Some(best) = sweep_argmin(&rows) {
        say!("best eta={} ({:.1} steps)", best.eta, best.mean_steps);
    }
    say!("wrote {}", resolved.out.join(csv_name).display());
    Ok(())
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct PhysicsConfig {
    params: PhysicsParams,
    points: usize,
    dynamics: DynamicsOrder,
}

fn cmd_physics(args: PhysicsArgs) -> Result<(), Failure> {
    if args.points < 2 {
        return Err(Failure::Config("`points` must be at least 2".into()));
    }
    let params = PhysicsParams::default();
    let profile = physics::height_profile(&params, args.points);

    prepare_out(&args.out)?;
    let csv_name = "height_profile.csv";
    write_height_csv(create(&args.out.join(csv_name))?, &profile).map_err(anyhow::Error::from)?;
    let config = PhysicsConfig {
        params,
        points: args.points,
        dynamics: args.dynamics,
    };
    write_manifest(
        &args.out,
        "height_profile",
        &RunManifest::new("physics", 0, config, csv_name),
    )?;

    let start = McState::BOTTOM;
    say!(
        "height minimum at x = {:.9}",
        physics::height_minimum(&params)
    );
    say!(
        "max reach from x = {}: right {:.4}, left {:.4}",
        start.x,
        physics::max_reach(start.x, Direction::Right, &params),
        physics::max_reach(start.x, Direction::Left, &params),
    );
    let feasible = physics::feasibility_check(start.x, 0.5, &params);
    say!(
        "direct push from x = {} to 0.5: {}",
        start.x,
        if feasible { "feasible" } else { "infeasible" }
    );

    let order = args.dynamics;
    let step = |s, a| mc_step(s, a, order);
    match baseline_strategy(start, SwitchRule::VelocityReversal, step) {
        Ok(run) => say!(
            "baseline (reverse until v >= 0): {} steps ({} left, {} right), max |v| = {:.4}",
            run.total_steps,
            run.reverse_steps,
            run.forward_steps,
            run.max_abs_velocity
        ),
        Err(err) => say!("baseline (reverse until v >= 0): {err}"),
    }
    match baseline_strategy(start, SwitchRule::AfterReverseSteps(36), step) {
        Ok(run) => say!(
            "baseline (36 reverse pushes): {} steps ({} left, {} right), max |v| = {:.4}",
            run.total_steps,
            run.reverse_steps,
            run.forward_steps,
            run.max_abs_velocity
        ),
        Err(err) => say!("baseline (36 reverse pushes): {err}"),
    }
    say!("wrote {}", args.out.join(csv_name).display());
    Ok(())
}
