//! Batch front end: command runners producing [`Report`]s.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! usage, parse and input errors.

pub mod args;
pub mod report;

use serde::Deserialize;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use qgame_core::circuits::{check_conventions, hadamard, not_gate, Switch};
use qgame_core::exec::substream_seed;
use qgame_core::games::{
    gvw_best_response, gvw_expected_payoffs, gvw_game_values, gvw_simulate, newcomb_run, newcomb_sample, Breaker,
    GambleParams, NewcombConfig, Qfa, QfaSpec,
};
use qgame_core::market::{
    demand_cdf, make_gaussian_strategy, mix_wigner, supply_cdf, GridSpec, WaveFunction1D, ALIASING_MASS,
};
use qgame_core::mbqc::{check_names, survival_curve, transfer_pair_distribution, verify_universality, Pauli};
use qgame_core::qcore::{Operator, QState, ALGEBRAIC_TOL, C64};
use qgame_core::Exec;

pub use args::{Cli, Command, OutputFormat};
pub use report::{Cell, CheckRecord, Report, Status, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qgame_core::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Runs the parsed command. The X'' convention is checked first; if it
/// does not hold, the report contains only that failing check.
pub fn run(cli: &Cli) -> Result<Report> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let mut report = Report::new(cli.command.name(), config_echo(&cli.command)?);
    if let Err(e) = check_conventions() {
        report
            .checks
            .push(CheckRecord::with_status("x_double_prime_convention", false, f64::INFINITY, 1e-15, e.to_string()));
        return Ok(report);
    }
    match &cli.command {
        Command::Verify(a) => cmd_verify(&mut report, a, exec)?,
        Command::Newcomb(a) => cmd_newcomb(&mut report, a, exec)?,
        Command::Gamble(a) => cmd_gamble(&mut report, a, exec)?,
        Command::Market(a) => cmd_market(&mut report, a, exec)?,
        Command::Walk(a) => cmd_walk(&mut report, a, exec)?,
        Command::Qfa(a) => cmd_qfa(&mut report, a)?,
    }
    Ok(report)
}

/// Renders the report and writes it to `out` or stdout.
pub fn emit(report: &Report, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let text = report.render(format)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config_echo(cmd: &Command) -> Result<serde_json::Value> {
    let v = serde_json::to_value(cmd)?;
    // externally tagged enum: {"gamble": {...}}
    Ok(v.as_object()
        .and_then(|o| o.values().next().cloned())
        .unwrap_or(serde_json::Value::Null))
}

fn usage(e: qgame_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn cmd_verify(report: &mut Report, a: &args::VerifyArgs, exec: Exec) -> Result<()> {
    let known = check_names();
    if let Some(bad) = a.only.iter().find(|n| !known.contains(&n.as_str())) {
        return Err(CliError::Usage(format!(
            "unknown check {bad:?}; available: {}",
            known.join(", ")
        )));
    }
    let only = (!a.only.is_empty()).then_some(a.only.as_slice());
    let ledger = verify_universality(&Default::default(), exec, only);
    for c in ledger.checks {
        report
            .checks
            .push(CheckRecord::with_status(c.name, c.passed, c.max_deviation, c.tolerance, c.detail));
    }
    Ok(())
}

fn breaker_label(b: Breaker) -> &'static str {
    match b {
        Breaker::Absent => "none",
        Breaker::Switch(Switch::Identity) => "identity",
        Breaker::Switch(Switch::Not) => "not",
        Breaker::Qutrojan => "qutrojan",
    }
}

fn cmd_newcomb(report: &mut Report, a: &args::NewcombArgs, exec: Exec) -> Result<()> {
    use args::BreakerArg;
    let fixed = match a.breaker {
        BreakerArg::None => Some(Breaker::Absent),
        BreakerArg::Identity => Some(Breaker::Switch(Switch::Identity)),
        BreakerArg::Not => Some(Breaker::Switch(Switch::Not)),
        BreakerArg::Qutrojan => Some(Breaker::Qutrojan),
        BreakerArg::Random => None,
    };
    if let Some(b) = fixed {
        let out = newcomb_run(&NewcombConfig::new(a.control, b).map_err(usage)?)?;
        let mut t = Table::new("newcomb", &["control", "breaker", "p_bit0", "p_bit1"]);
        t.push(vec![(a.control as u64).into(), breaker_label(b).into(), out.p0.into(), out.p1.into()]);
        report.tables.push(t);
        report.checks.push(CheckRecord::new(
            "normalization",
            (out.p0 + out.p1 - 1.0).abs(),
            ALGEBRAIC_TOL,
            "P(bit 0) + P(bit 1) = 1",
        ));
        return Ok(());
    }
    let counts = newcomb_sample(a.control, a.trials as usize, a.seed, exec)?;
    let mut t = Table::new(
        "newcomb_sampled",
        &["control", "breaker", "trials", "count_bit0", "count_bit1", "exact_p_bit0", "exact_p_bit1"],
    );
    let mut worst: f64 = 0.0;
    let mut band: f64 = 0.0;
    for (i, sw) in [Switch::Identity, Switch::Not].into_iter().enumerate() {
        let b = Breaker::Switch(sw);
        let exact = newcomb_run(&NewcombConfig::new(a.control, b).map_err(usage)?)?;
        let [c0, c1] = counts.counts[i];
        let n = c0 + c1;
        t.push(vec![
            (a.control as u64).into(),
            breaker_label(b).into(),
            n.into(),
            c0.into(),
            c1.into(),
            exact.p0.into(),
            exact.p1.into(),
        ]);
        if n > 0 {
            let freq = c1 as f64 / n as f64;
            worst = worst.max((freq - exact.p1).abs());
            band = band.max(4.0 * (exact.p1 * (1.0 - exact.p1) / n as f64).sqrt());
        }
    }
    report.tables.push(t);
    report.checks.push(CheckRecord::new(
        "sampled_matches_exact",
        worst,
        band + ALGEBRAIC_TOL,
        "largest |frequency − exact| over the two breakers, 4σ band",
    ));
    Ok(())
}

fn cmd_gamble(report: &mut Report, a: &args::GambleArgs, exec: Exec) -> Result<()> {
    let params = GambleParams::new(a.theta, a.p_verify, a.reward).map_err(usage)?;
    let exact = gvw_expected_payoffs(&params)?;
    let sim = gvw_simulate(&params, a.trials as usize, a.seed, exec)?;

    let mut t = Table::new(
        "payoff",
        &[
            "theta",
            "p_verify",
            "reward",
            "e_bob_exact",
            "e_alice_exact",
            "e_bob_empirical",
            "e_alice_empirical",
            "half_width",
            "trials",
        ],
    );
    t.push(vec![
        a.theta.into(),
        a.p_verify.into(),
        a.reward.into(),
        exact.bob.into(),
        exact.alice.into(),
        sim.mean_bob.into(),
        sim.mean_alice.into(),
        sim.half_width.into(),
        sim.trials.into(),
    ]);
    report.tables.push(t);

    let mut ev = Table::new("events", &["found", "empty", "detected", "undetected"]);
    ev.push(vec![sim.found.into(), sim.empty.into(), sim.detected.into(), sim.undetected.into()]);
    report.tables.push(ev);

    let br = gvw_best_response(a.p_verify, a.reward)?;
    let mut t = Table::new("best_response", &["p_verify", "reward", "theta_star", "e_bob_star"]);
    t.push(vec![a.p_verify.into(), a.reward.into(), br.theta.into(), br.e_bob.into()]);
    report.tables.push(t);

    let values = gvw_game_values(a.reward)?;
    let mut t = Table::new("game_values", &["order", "p_verify", "theta", "e_bob"]);
    for (name, v) in [("bob_first", values.bob_first), ("alice_first", values.alice_first)] {
        t.push(vec![name.into(), v.p_verify.into(), v.theta.into(), v.e_bob.into()]);
    }
    report.tables.push(t);

    report.checks.push(CheckRecord::new(
        "zero_sum",
        (exact.bob + exact.alice).abs().max((sim.mean_bob + sim.mean_alice).abs()),
        0.0,
        "E_alice + E_bob = 0, exact and empirical",
    ));
    report.checks.push(CheckRecord::new(
        "empirical_within_half_width",
        (sim.mean_bob - exact.bob).abs(),
        sim.half_width,
        "|empirical − exact| against the 4σ half-width",
    ));

    if a.sweep {
        let mut t = Table::new("sweep", &["theta", "e_bob_exact", "e_bob_empirical", "half_width"]);
        let mut outside = 0u64;
        for i in 0..=100u64 {
            let theta = FRAC_PI_2 * i as f64 / 100.0;
            let p = GambleParams::new(theta, a.p_verify, a.reward).map_err(usage)?;
            let e = gvw_expected_payoffs(&p)?;
            let s = gvw_simulate(&p, a.trials as usize, substream_seed(a.seed, i), exec)?;
            if (s.mean_bob - e.bob).abs() > s.half_width {
                outside += 1;
            }
            t.push(vec![theta.into(), e.bob.into(), s.mean_bob.into(), s.half_width.into()]);
        }
        report.tables.push(t);
        report.checks.push(CheckRecord::new(
            "sweep_coverage",
            outside as f64,
            1.0,
            "sweep rows outside their 4σ band (at most 1% of 101)",
        ));
    }
    Ok(())
}

fn cmd_walk(report: &mut Report, a: &args::WalkArgs, exec: Exec) -> Result<()> {
    let curve = survival_curve(a.n_max as usize, a.trials as usize, a.seed, exec).map_err(usage)?;
    let n = a.trials as f64;
    let sd = |p: f64| (p * (1.0 - p) / n).sqrt();
    let mut t = Table::new("survival", &["n", "empirical", "model", "sigma", "abs_diff", "within_4sigma"]);
    let mut worst_z: f64 = 0.0;
    let mut worst_diff: f64 = 0.0;
    for (i, (emp, model)) in curve.survival.iter().zip(&curve.model).enumerate() {
        let s = sd(*model);
        let diff = (emp - model).abs();
        worst_diff = worst_diff.max(diff);
        worst_z = worst_z.max(if s > 0.0 { diff / s } else { f64::INFINITY });
        t.push(vec![
            (i + 1).into(),
            (*emp).into(),
            (*model).into(),
            s.into(),
            diff.into(),
            ((diff <= 4.0 * s) as u64).into(),
        ]);
    }
    report.tables.push(t);

    let mut s = Table::new("summary", &["trials", "first_step", "mean_steps", "max_abs_diff"]);
    s.push(vec![a.trials.into(), curve.first_step.into(), curve.mean_steps.into(), worst_diff.into()]);
    report.tables.push(s);

    let pairs = transfer_pair_distribution()?;
    let mut law = Table::new("byproduct_law", &["pauli", "uniform", "transfer_pairs"]);
    for p in Pauli::ALL {
        law.push(vec![p.to_string().into(), 0.25.into(), pairs[p.index()].into()]);
    }
    report.tables.push(law);

    report.checks.push(CheckRecord::new(
        "first_step_success",
        (curve.first_step - 0.25).abs(),
        4.0 * sd(0.25),
        "first-step frequency against 1/4, 4σ",
    ));
    report.checks.push(CheckRecord::new(
        "survival_within_4sigma",
        worst_z,
        4.0,
        format!("largest |empirical − (3/4)^n| / σ_n; largest |diff| {worst_diff:e}"),
    ));
    Ok(())
}

fn default_weight() -> f64 {
    1.0
}

fn default_center() -> bool {
    true
}

fn default_prices() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategySpec {
    #[serde(default = "default_weight")]
    weight: f64,
    mean: f64,
    spread: f64,
    #[serde(default = "default_center")]
    center: bool,
}

/// Market input file: a grid, Gaussian strategies (mixture weights for the
/// Wigner grid) and the prices at which to tabulate the distributions.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSpec {
    grid: GridSpec,
    strategies: Vec<StrategySpec>,
    #[serde(default = "default_prices")]
    prices: Vec<f64>,
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_input(path)?)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn cmd_market(report: &mut Report, a: &args::MarketArgs, exec: Exec) -> Result<()> {
    let spec: MarketSpec = parse_json(&a.file)?;
    let mut grid = spec.grid;
    if let Some(n) = a.grid {
        grid.n_points = n;
    }
    grid.validate().map_err(usage)?;
    if spec.strategies.is_empty() {
        return Err(CliError::Usage("market file lists no strategies".into()));
    }
    let strategies = spec
        .strategies
        .iter()
        .map(|s| make_gaussian_strategy(s.mean, s.spread, &grid, s.center).map_err(usage))
        .collect::<Result<Vec<_>>>()?;

    let mut cdf = Table::new("cdf", &["strategy", "price", "ln_price", "demand", "supply"]);
    for (i, psi) in strategies.iter().enumerate() {
        for &c in &spec.prices {
            let d = demand_cdf(psi, c).map_err(usage)?;
            let s = supply_cdf(psi, c).map_err(usage)?;
            cdf.push(vec![i.into(), c.into(), c.ln().into(), d.into(), s.into()]);
        }
    }
    report.tables.push(cdf);

    let components: Vec<(f64, WaveFunction1D)> = spec
        .strategies
        .iter()
        .zip(&strategies)
        .map(|(s, psi)| (s.weight, psi.clone()))
        .collect();
    let w = mix_wigner(&components, exec).map_err(usage)?;

    let mut q_density = vec![0.0; grid.n_points];
    let mut p_density = vec![0.0; grid.n_points];
    let mut round_trip: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    let mut norm_dev: f64 = 0.0;
    for (weight, psi) in &components {
        let mom = psi.to_momentum();
        for (acc, d) in q_density.iter_mut().zip(psi.density()) {
            *acc += weight * d;
        }
        for (acc, d) in p_density.iter_mut().zip(mom.density()) {
            *acc += weight * d;
        }
        let back = mom.to_position();
        for (x, y) in psi.samples.iter().zip(&back.samples) {
            round_trip = round_trip.max((x - y).norm());
        }
        boundary = boundary.max(psi.boundary_mass()).max(mom.boundary_mass());
        norm_dev = norm_dev.max((psi.norm_sqr() - 1.0).abs());
    }
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let mut wt = Table::new("wigner", &["p\\q"]);
    wt.columns.extend(grid.q_nodes().iter().map(f64::to_string));
    for k in 0..grid.n_points {
        let mut row: Vec<Cell> = vec![grid.p(k).into()];
        row.extend(w.row(k).iter().map(|&v| Cell::from(v)));
        wt.rows.push(row);
    }
    report.tables.push(wt);

    report.checks.extend([
        CheckRecord::new("strategy_norm", norm_dev, 1e-10, "Σ|ψ|²Δq = 1"),
        CheckRecord::new("fourier_round_trip", round_trip, 1e-10, "q → p → q"),
        CheckRecord::new("wigner_normalization", (w.normalization() - 1.0).abs(), 1e-8, "ΣWΔpΔq = 1"),
        CheckRecord::new("wigner_imaginary_residue", w.max_imag, 1e-10, "largest discarded imaginary part"),
        CheckRecord::new("q_marginal", max_diff(&w.q_marginal(), &q_density), 1e-6, "∫W dp against Σ w|ψ(q)|²"),
        CheckRecord::new("p_marginal", max_diff(&w.p_marginal(), &p_density), 1e-6, "∫W dq against Σ w|ψ̃(p)|²"),
        CheckRecord::new("aliasing", boundary, ALIASING_MASS, "mass in the outer sixteenth of either grid"),
    ]);
    Ok(())
}

fn flip_preset() -> Result<Qfa> {
    let mut t = BTreeMap::new();
    t.insert('n', not_gate());
    t.insert('h', hadamard());
    let accept = Operator::diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    Ok(Qfa::new(QState::zero(1)?, t, accept)?)
}

fn words_up_to(alphabet: &[char], len: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..len {
        frontier = frontier
            .iter()
            .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
            .collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

fn cmd_qfa(report: &mut Report, a: &args::QfaArgs) -> Result<()> {
    let qfa = match (&a.file, a.preset) {
        (Some(path), _) => parse_json::<QfaSpec>(path)?.build().map_err(usage)?,
        (None, Some(args::QfaPreset::Flip)) => flip_preset()?,
        (None, None) => return Err(CliError::Usage("give --file or --preset".into())),
    };
    let words = if a.words.is_empty() {
        words_up_to(&qfa.alphabet().copied().collect::<Vec<_>>(), 3)
    } else {
        a.words.clone()
    };
    let mut t = Table::new("acceptance", &["word", "probability"]);
    let mut worst: f64 = 0.0;
    for w in &words {
        let p = qfa.run(w).map_err(usage)?;
        worst = worst.max(-p).max(p - 1.0);
        t.push(vec![w.clone().into(), p.into()]);
    }
    report.tables.push(t);
    report.checks.push(CheckRecord::new(
        "probability_range",
        worst.max(0.0),
        ALGEBRAIC_TOL,
        "acceptance probabilities lie in [0, 1]",
    ));
    Ok(())
}
