//! End-to-end acceptance checks. Runs as a plain binary (`harness = false`)
//! so that every criterion prints a PASS/FAIL line even when another fails.
//!
//!     cargo test -p projsim --test acceptance

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use projsim::harness::{default_eta_grid, sweep_argmin};
use projsim::mountain_car::mc_step;
use projsim::output::write_curve_csv;
use projsim::physics::{
    baseline_strategy, feasibility_check, height_minimum, max_reach, BaselineRun, Direction,
    PhysicsParams, SwitchRule,
};
use projsim::{
    eta_sweep, initial_slope, run_experiment, ClipNetwork, DynamicsOrder, EnvKind,
    ExperimentConfig, GridAction, GridWorld, LearningCurve, McAction, McState, Policy, PsParams,
    Result,
};

const SEED: u64 = 0;
const AGENTS: usize = 1000;

struct Target {
    label: &'static str,
    value: f64,
    want: f64,
    rel_tol: f64,
}

impl Target {
    fn new(label: &'static str, value: f64, want: f64, rel_tol: f64) -> Self {
        Self {
            label,
            value,
            want,
            rel_tol,
        }
    }

    fn ok(&self) -> bool {
        ((self.value - self.want) / self.want).abs() <= self.rel_tol
    }

    fn describe(&self) -> String {
        format!(
            "{} {:.1} (want {} ±{}%){}",
            self.label,
            self.value,
            self.want,
            self.rel_tol * 100.0,
            if self.ok() { "" } else { " <-- off" }
        )
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn from_targets(targets: &[Target]) -> Self {
        Self {
            pass: targets.iter().all(Target::ok),
            detail: targets
                .iter()
                .map(Target::describe)
                .collect::<Vec<_>>()
                .join("; "),
        }
    }

    fn check(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    fn and(self, other: Outcome) -> Self {
        Self {
            pass: self.pass && other.pass,
            detail: format!("{}; {}", self.detail, other.detail),
        }
    }
}

fn config(env: EnvKind, policy: Policy, eta: f64, trials: usize) -> ExperimentConfig {
    let params = PsParams::with_policy(policy, 0.0, eta).expect("valid parameters");
    let mut c = ExperimentConfig::new(env, params, trials, SEED);
    c.agents = AGENTS;
    c
}

fn run(env: EnvKind, policy: Policy, eta: f64, trials: usize) -> Result<LearningCurve> {
    run_experiment(&config(env, policy, eta, trials))
}

fn criterion_1() -> Result<Outcome> {
    let curve = run(EnvKind::GridWorld, Policy::Basic, 0.07, 100)?;
    Ok(Outcome::from_targets(&[Target::new(
        "trial-100 mean",
        curve.at(100),
        45.0,
        0.15,
    )]))
}

fn criterion_2(curve: &LearningCurve) -> Outcome {
    Outcome::from_targets(&[
        Target::new("trial-100 mean", curve.at(100), 15.4, 0.15),
        Target::new("trial-1 mean", curve.at(1), 870.0, 0.20),
    ])
}

fn criterion_3() -> Result<Outcome> {
    let basic = config(EnvKind::GridWorld, Policy::Basic, 0.0, 100);
    let softmax = config(EnvKind::GridWorld, Policy::Softmax, 0.0, 100);
    let basic_zero = eta_sweep(&basic, &[0.0], 100)?[0].mean_steps;
    let softmax_zero = eta_sweep(&softmax, &[0.0], 100)?[0].mean_steps;
    let sweep = eta_sweep(&basic, &default_eta_grid(), 100)?;
    let best = sweep_argmin(&sweep).expect("non-empty sweep").eta;
    let targets = Outcome::from_targets(&[
        Target::new("basic eta=0", basic_zero, 842.0, 0.20),
        Target::new("softmax eta=0", softmax_zero, 570.0, 0.20),
    ]);
    let bracket = (0.04..=0.11).contains(&best);
    Ok(targets.and(Outcome::check(
        bracket,
        format!("basic sweep argmin eta {best:.4} (want in [0.04, 0.11])"),
    )))
}

const SLOPE_WINDOW: usize = 5;

fn criterion_4() -> Result<Outcome> {
    let etas = [0.001, 0.01, 0.03];
    let mut slopes = Vec::new();
    for eta in etas {
        let curve = run(EnvKind::GridWorld, Policy::Softmax, eta, SLOPE_WINDOW)?;
        slopes.push(initial_slope(&curve, SLOPE_WINDOW)?);
    }
    let steepest = (0..etas.len())
        .min_by(|&a, &b| slopes[a].total_cmp(&slopes[b]))
        .unwrap();
    let detail = etas
        .iter()
        .zip(&slopes)
        .map(|(e, s)| format!("eta {e}: {s:.1}/trial"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome::check(
        etas[steepest] == 0.01,
        format!("slopes over trials 1..{SLOPE_WINDOW}: {detail} (want steepest at 0.01)"),
    ))
}

fn criterion_5() -> Result<Outcome> {
    let softmax = run(EnvKind::MountainCarRandom, Policy::Softmax, 0.02, 20)?;
    let basic = run(EnvKind::MountainCarRandom, Policy::Basic, 0.02, 20)?;
    Ok(Outcome::from_targets(&[
        Target::new("softmax trial-20", softmax.at(20), 129.0, 0.15),
        Target::new("basic trial-20", basic.at(20), 204.0, 0.15),
        Target::new("trial-1", softmax.at(1), 735.0, 0.20),
        Target::new(
            "softmax 20-trial average",
            softmax.average(1, 20),
            223.0,
            0.15,
        ),
    ]))
}

fn criterion_6() -> Result<Outcome> {
    let softmax = run(EnvKind::MountainCarFixed, Policy::Softmax, 0.01, 100)?;
    let basic = run(EnvKind::MountainCarFixed, Policy::Basic, 0.01, 100)?;
    let mut fine = config(EnvKind::MountainCarFixed, Policy::Softmax, 0.01, 100);
    fine.grid_percepts = 30;
    let fine = run_experiment(&fine)?;
    Ok(Outcome::from_targets(&[
        Target::new("softmax trial-100", softmax.at(100), 302.0, 0.15),
        Target::new("basic trial-100", basic.at(100), 593.0, 0.15),
        Target::new("trial-1", softmax.at(1), 1450.0, 0.20),
        Target::new("softmax 30x30 trial-100", fine.at(100), 276.0, 0.15),
    ]))
}

fn describe_baseline(order: DynamicsOrder) -> (bool, String) {
    let step = |s, a| mc_step(s, a, order);
    match baseline_strategy(McState::BOTTOM, SwitchRule::VelocityReversal, step) {
        Ok(BaselineRun {
            total_steps,
            reverse_steps,
            forward_steps,
            max_abs_velocity,
            ..
        }) => {
            let pass = (total_steps, reverse_steps, forward_steps) == (89, 36, 63)
                && max_abs_velocity < 0.07;
            let text = format!(
                "{order:?}: {total_steps} steps ({reverse_steps} left, {forward_steps} right), max |v| {max_abs_velocity:.4}"
            );
            (pass, text)
        }
        Err(err) => (false, format!("{order:?}: {err}")),
    }
}

fn criterion_7() -> Outcome {
    // The printed position update is tried first, the conventional one second.
    let (printed_ok, printed) = describe_baseline(DynamicsOrder::Printed);
    let (conventional_ok, conventional) = describe_baseline(DynamicsOrder::Conventional);
    Outcome::check(
        printed_ok || conventional_ok,
        format!("{printed}; {conventional} (want 89 steps: 36 left, 63 right, |v| < 0.07)"),
    )
}

fn criterion_8() -> Outcome {
    let p = PhysicsParams::default();
    let right = max_reach(-0.5, Direction::Right, &p);
    let left = max_reach(-0.5, Direction::Left, &p);
    let feasible = feasibility_check(-0.5, 0.5, &p);
    let minimum = height_minimum(&p);
    let pass = (right - -0.27).abs() <= 0.02
        && (left - -0.834).abs() <= 0.02
        && !feasible
        && (minimum + std::f64::consts::FRAC_PI_6).abs() <= 1e-9;
    Outcome::check(
        pass,
        format!(
            "reach right {right:.4} (want -0.27 ±0.02), left {left:.4} (want -0.834 ±0.02), \
             -0.5 -> 0.5 {} (want infeasible), minimum {minimum:.10} (want -pi/6 ±1e-9)",
            if feasible { "feasible" } else { "infeasible" }
        ),
    )
}

fn network_properties() -> Vec<(&'static str, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut normalized = true;
    let mut floor = true;
    let mut glow_range = true;
    let mut shift_invariant = true;
    let mut eta_one = true;

    for trial in 0..200 {
        let policy = if trial % 2 == 0 {
            Policy::Basic
        } else {
            Policy::Softmax
        };
        let p = PsParams::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..0.5),
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.2..2.0),
            policy,
        )
        .unwrap();
        let mut net = ClipNetwork::new(4, 3).unwrap();
        for _ in 0..100 {
            let s = rng.gen_range(0..4);
            net.sample_action(s, &p, &mut rng).unwrap();
            let reward = if rng.gen_bool(0.1) { p.lambda() } else { 0.0 };
            net.learn_step(&p, reward).unwrap();
            floor &= net.h_matrix().iter().all(|&h| h >= 1.0);
            glow_range &= net.g_matrix().iter().all(|&g| (0.0..=1.0).contains(&g));
            let sum: f64 = net
                .hop_probabilities(s, &p)
                .unwrap()
                .as_slice()
                .iter()
                .sum();
            normalized &= (sum - 1.0).abs() <= 1e-12;
        }

        let eta1 = p.with_eta(1.0).unwrap();
        net.sample_action(0, &eta1, &mut rng).unwrap();
        net.learn_step(&eta1, 0.0).unwrap();
        eta_one &= net.g_matrix().iter().all(|&g| g == 0.0);

        let row: Vec<f64> = (0..3).map(|_| rng.gen_range(1.0..30.0)).collect();
        let shift = rng.gen_range(0.0..500.0);
        let soft = PsParams::new(1.0, 0.0, 0.1, 1.0, Policy::Softmax).unwrap();
        let probs = |offset: f64| {
            let mut n = ClipNetwork::new(1, 3).unwrap();
            for (a, h) in row.iter().enumerate() {
                n.set_h(0, a, h + offset).unwrap();
            }
            n.hop_probabilities(0, &soft).unwrap().into_vec()
        };
        shift_invariant &= probs(0.0)
            .iter()
            .zip(probs(shift))
            .all(|(a, b)| (a - b).abs() <= 1e-12);
    }
    vec![
        ("normalization", normalized),
        ("h>=1", floor),
        ("g in [0,1]", glow_range),
        ("eta=1 zeroes glow", eta_one),
        ("softmax shift", shift_invariant),
    ]
}

fn environment_properties() -> Vec<(&'static str, bool)> {
    let maze = GridWorld::default_maze();
    let bfs = maze
        .shortest_path_length()
        .map(|d| d == 14)
        .unwrap_or(false);
    let percepts = maze.n_percepts() == 46;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut clamped = true;
    for _ in 0..200 {
        let order = if rng.gen_bool(0.5) {
            DynamicsOrder::Printed
        } else {
            DynamicsOrder::Conventional
        };
        let mut s = McState::new(rng.gen_range(-1.2..0.5), rng.gen_range(-0.07..=0.07));
        for _ in 0..500 {
            let step = mc_step(s, McAction::from_index(rng.gen_range(0..3)).unwrap(), order);
            clamped &= step.state.in_bounds();
            if step.done {
                break;
            }
            s = step.state;
        }
    }

    let mut legal = true;
    for _ in 0..200 {
        let mut world = GridWorld::default_maze();
        world.reset();
        for _ in 0..500 {
            let step = world
                .step(GridAction::from_index(rng.gen_range(0..4)).unwrap())
                .unwrap();
            legal &= !world.is_wall(world.agent());
            if step.done {
                break;
            }
        }
    }
    vec![
        ("BFS=14", bfs),
        ("46 percepts", percepts),
        ("state clamping", clamped),
        ("grid legality", legal),
    ]
}

fn csv_bytes(curve: &LearningCurve) -> Vec<u8> {
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, curve).unwrap();
    buf
}

fn criterion_9(softmax_grid: &LearningCurve) -> Result<Outcome> {
    let mut checks = network_properties();
    checks.extend(environment_properties());

    let again = run(EnvKind::GridWorld, Policy::Softmax, 0.12, 100)?;
    checks.push((
        "bit-identical CSV",
        csv_bytes(softmax_grid) == csv_bytes(&again),
    ));

    let early_sd = softmax_grid.average_std(1, 10);
    let late_sd = softmax_grid.average_std(91, 100);
    let early = softmax_grid.average(1, 10);
    let late = softmax_grid.average(91, 100);
    checks.push(("sd shrinks", late_sd < early_sd));
    checks.push(("mean improves", late < early));

    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    let summary = format!(
        "{}/{} properties hold; sd {early_sd:.1} -> {late_sd:.1}, mean {early:.1} -> {late:.1} (trials 1-10 vs 91-100){}",
        checks.len() - failed.len(),
        checks.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    Ok(Outcome::check(failed.is_empty(), summary))
}

fn report(id: u32, title: &str, started: Instant, outcome: Result<Outcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Ok(o) => (o.pass, o.detail),
        Err(err) => (false, format!("error: {err}")),
    };
    println!(
        "{} criterion {id}: {title}: {detail} [{secs:.1}s]",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn main() -> ExitCode {
    println!("acceptance: {AGENTS} agents per ensemble, seed {SEED}");
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "grid-world basic, eta 0.07", t, criterion_1());

    let t = Instant::now();
    let softmax_grid = run(EnvKind::GridWorld, Policy::Softmax, 0.12, 100);
    let c2 = softmax_grid.as_ref().map(criterion_2).map_err(Clone::clone);
    all &= report(2, "grid-world softmax, eta 0.12", t, c2);

    let t = Instant::now();
    all &= report(3, "grid-world eta sweep at trial 100", t, criterion_3());

    let t = Instant::now();
    all &= report(4, "grid-world softmax initial slope", t, criterion_4());

    let t = Instant::now();
    all &= report(5, "mountain car, random start, eta 0.02", t, criterion_5());

    let t = Instant::now();
    all &= report(6, "mountain car, fixed start, eta 0.01", t, criterion_6());

    let t = Instant::now();
    all &= report(7, "baseline strategy step counts", t, Ok(criterion_7()));

    let t = Instant::now();
    all &= report(8, "mountain-car analytics", t, Ok(criterion_8()));

    let t = Instant::now();
    let c9 = match &softmax_grid {
        Ok(curve) => criterion_9(curve),
        Err(err) => Err(err.clone()),
    };
    all &= report(9, "property suite", t, c9);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
