//! Command-line front end: profile-driven analytic, Monte Carlo, sweep,
//! distillation, and security commands with reproducible JSON/CSV
//! artifacts.
//!
//! Every command resolves its configuration the same way: start from a
//! built-in profile (or a profile file), apply `--set key=value`
//! overrides in order, then run. Identical flags and seed produce
//! byte-identical output artifacts.
//!
//! Exit codes: 0 success, 2 configuration error (also used by argument
//! parsing), 3 model-domain or I/O error, 4 reconciliation failure.

use crate::distillation::{self, NetRateModel};
use crate::error::Result;
use crate::profile::{ExperimentProfile, BUILTIN_NAMES};
use crate::protocol::{run_session, write_transcript_csv};
use crate::qber::{added_loss_at_total_qber, sweep_attenuation, write_sweep_csv};
use crate::security::{classify, parse_system, MultiphotonCriterion};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "franson-qkd",
    version,
    about = "Analytic model and event-level Monte Carlo of entanglement-based quantum key distribution over fiber"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form error-rate breakdown and rates for a profile
    Analytic(ProfileArgs),
    /// Event-level Monte Carlo session with an analytic comparison block
    Simulate(SimulateArgs),
    /// Error-rate decomposition swept over added channel loss (CSV)
    Sweep(SweepArgs),
    /// Simulate a session and distill a secret key from it
    Distill(DistillArgs),
    /// Source-security assessment of a described system
    Security(SecurityArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Built-in profile: lab-20m, spool-8450m, or extrapolation
    #[arg(long, conflicts_with = "profile_file")]
    profile: Option<String>,
    /// Profile text file (starts from lab-20m, overrides key by key)
    #[arg(long)]
    profile_file: Option<PathBuf>,
    /// Override one profile key (repeatable): --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for output artifacts (created if missing)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<ExperimentProfile> {
        let mut profile = match (&self.profile, &self.profile_file) {
            (Some(name), None) => ExperimentProfile::builtin(name)?,
            (None, Some(path)) => ExperimentProfile::from_text(&fs::read_to_string(path)?)?,
            (None, None) => ExperimentProfile::builtin(BUILTIN_NAMES[0])?,
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        for assignment in &self.set {
            profile.set_from_override(assignment)?;
        }
        Ok(profile)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ProfileArgs,
    /// Session seed (default: the profile's)
    #[arg(long)]
    seed: Option<u64>,
    /// Gates to simulate (default: the profile's)
    #[arg(long)]
    gates: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ProfileArgs,
    /// First added-loss point, dB
    #[arg(long, default_value_t = 0.0)]
    start_db: f64,
    /// Last added-loss point, dB
    #[arg(long, default_value_t = 12.0)]
    stop_db: f64,
    /// Step between points, dB
    #[arg(long, default_value_t = 0.25)]
    step_db: f64,
}

#[derive(Args)]
struct DistillArgs {
    #[command(flatten)]
    common: ProfileArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gates: Option<u64>,
    /// Fraction of the sifted key disclosed to estimate the error rate
    #[arg(long, default_value_t = 0.1)]
    sample_fraction: f64,
    /// Extra bits removed by privacy amplification beyond the accounting
    #[arg(long, default_value_t = 30)]
    margin_bits: u64,
}

#[derive(Args)]
struct SecurityArgs {
    /// System descriptor: pair-passive, pair-active, faint-pulse, classical
    #[arg(long, default_value = "pair-passive")]
    system: String,
    /// Mean photon number (faint-pulse systems)
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// End-to-end loss in dB (faint-pulse systems)
    #[arg(long, default_value_t = 0.0)]
    loss_db: f64,
    /// Pulse repetition rate in Hz (faint-pulse systems)
    #[arg(long, default_value_t = 1e6)]
    rep_rate: f64,
    /// Quote the multiphoton fraction per non-empty pulse instead of per pulse
    #[arg(long)]
    per_nonempty: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    // clap exits with 2 on malformed arguments, matching the
    // configuration-error code
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analytic(args) => cmd_analytic(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Distill(args) => cmd_distill(args),
        Command::Security(args) => cmd_security(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_artifact(dir: &Option<PathBuf>, name: &str, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = dir {
        ensure_dir(dir)?;
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn print_and_store<T: Serialize>(dir: &Option<PathBuf>, name: &str, doc: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(doc).expect("report types serialize");
    println!("{json}");
    write_artifact(dir, name, format!("{json}\n").as_bytes())
}

#[derive(Serialize)]
struct AnalyticReport {
    profile: String,
    breakdown: crate::qber::QberBreakdown,
    /// First-order per-gate probabilities (the Monte Carlo's expectation).
    gate_rates: crate::qber::GateRates,
    net_rate_hz: f64,
}

fn cmd_analytic(args: ProfileArgs) -> Result<()> {
    let profile = args.resolve()?;
    let budget = profile.budget()?;
    let breakdown = budget.qber_breakdown()?;
    let gate_rates = budget.gate_rates()?;
    let net = NetRateModel::default().net_rate_hz(breakdown.raw_rate_hz, breakdown.total.min(0.5))?;
    let report = AnalyticReport {
        profile: profile.name.clone(),
        breakdown,
        gate_rates,
        net_rate_hz: net,
    };
    print_and_store(&args.out_dir, "analytic.json", &report)
}

#[derive(Serialize)]
struct SimulateReport {
    profile: String,
    stats: crate::protocol::SessionStats,
    expected: crate::qber::GateRates,
    comparison: ComparisonBlock,
}

/// How far the measured session sits from the analytic expectation, in
/// binomial standard deviations.
#[derive(Serialize)]
struct ComparisonBlock {
    qber_z_score: f64,
    rate_z_score: f64,
}

fn comparison(
    stats: &crate::protocol::SessionStats,
    expected: &crate::qber::GateRates,
    f_alice_hz: f64,
) -> ComparisonBlock {
    let n = stats.sifted_bits.max(1) as f64;
    let qber_sigma = (expected.qber * (1.0 - expected.qber) / n).sqrt();
    let rate_sigma = f_alice_hz
        * (expected.p_sifted * (1.0 - expected.p_sifted) / stats.gates as f64).sqrt();
    ComparisonBlock {
        qber_z_score: (stats.measured_qber - expected.qber) / qber_sigma,
        rate_z_score: (stats.raw_rate_hz - expected.sifted_rate_hz) / rate_sigma,
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let profile = args.common.resolve()?;
    let mut cfg = profile.session_config()?;
    cfg.record_transcript = args.common.out_dir.is_some();
    let seed = args.seed.unwrap_or(profile.seed);
    let gates = args.gates.unwrap_or(profile.gates);
    let out = run_session(&cfg, seed, gates)?;
    let expected = cfg.budget.gate_rates()?;
    let report = SimulateReport {
        profile: profile.name.clone(),
        stats: out.stats,
        expected,
        comparison: comparison(&out.stats, &expected, cfg.budget.source.f_alice_hz),
    };
    if args.common.out_dir.is_some() {
        let mut csv = Vec::new();
        write_transcript_csv(&out.transcript, &mut csv)?;
        write_artifact(&args.common.out_dir, "transcript.csv", &csv)?;
    }
    print_and_store(&args.common.out_dir, "session.json", &report)
}

#[derive(Serialize)]
struct SweepReport {
    profile: String,
    points: usize,
    start_db: f64,
    stop_db: f64,
    step_db: f64,
    /// Added loss where the total crosses 10 %, if it is reachable.
    crossing_10pct_db: Option<f64>,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let profile = args.common.resolve()?;
    let budget = profile.budget()?;
    let points = sweep_attenuation(&budget, args.start_db, args.stop_db, args.step_db)?;
    let mut csv = Vec::new();
    write_sweep_csv(&points, &mut csv)?;
    let report = SweepReport {
        profile: profile.name.clone(),
        points: points.len(),
        start_db: args.start_db,
        stop_db: args.stop_db,
        step_db: args.step_db,
        crossing_10pct_db: added_loss_at_total_qber(&budget, 0.10).ok(),
    };
    if args.common.out_dir.is_some() {
        write_artifact(&args.common.out_dir, "sweep.csv", &csv)?;
        print_and_store(&args.common.out_dir, "sweep.json", &report)
    } else {
        // no artifact directory: the CSV itself goes to stdout
        print!("{}", String::from_utf8(csv).expect("CSV is UTF-8"));
        Ok(())
    }
}

#[derive(Serialize)]
struct DistillReport {
    profile: String,
    seed: u64,
    gates: u64,
    sifted_bits: u64,
    measured_qber: f64,
    estimate: crate::distillation::QberEstimate,
    transcript: crate::distillation::Transcript,
    secret_bits: usize,
    /// Closed-form model prediction for the same raw rate and error rate.
    modeled_net_rate_hz: f64,
    key_hash64: String,
}

fn cmd_distill(args: DistillArgs) -> Result<()> {
    let profile = args.common.resolve()?;
    let cfg = profile.session_config()?;
    let seed = args.seed.unwrap_or(profile.seed);
    let gates = args.gates.unwrap_or(profile.gates);
    let session = run_session(&cfg, seed, gates)?;
    let report = distillation::distill_keys(
        &session.alice_key,
        &session.bob_key,
        args.sample_fraction,
        args.margin_bits,
        seed,
    )?;
    let modeled = NetRateModel::default().net_rate_hz(
        session.stats.raw_rate_hz,
        session.stats.measured_qber.min(0.5),
    )?;
    let doc = DistillReport {
        profile: profile.name.clone(),
        seed,
        gates,
        sifted_bits: session.stats.sifted_bits,
        measured_qber: session.stats.measured_qber,
        estimate: report.estimate,
        transcript: report.transcript,
        secret_bits: report.secret_bits,
        modeled_net_rate_hz: modeled,
        key_hash64: format!("{:016x}", distillation::key_hash(&report.final_key)),
    };
    write_artifact(
        &args.common.out_dir,
        "final_key.bin",
        &distillation::pack_bits(&report.final_key),
    )?;
    print_and_store(&args.common.out_dir, "distill.json", &doc)
}

#[derive(Serialize)]
struct SecurityReport {
    system: crate::security::SystemDescription,
    assessment: crate::security::SecurityAssessment,
    multiphoton_criterion: MultiphotonCriterion,
    multiphoton_fraction: f64,
    faint_pulse_penalty_db: Option<f64>,
}

fn cmd_security(args: SecurityArgs) -> Result<()> {
    let system = parse_system(&args.system, args.mu, args.loss_db, args.rep_rate)?;
    let assessment = classify(&system)?;
    let criterion = if args.per_nonempty {
        MultiphotonCriterion::PerNonEmptyPulse
    } else {
        MultiphotonCriterion::PerPulse
    };
    let (fraction, penalty) = match &system {
        crate::security::SystemDescription::FaintPulse { source, .. } => (
            crate::security::multiphoton_fraction(source.mu_fp, criterion)?,
            Some(crate::security::faint_pulse_penalty_db(source.mu_fp)?),
        ),
        _ => (0.0, None),
    };
    let report = SecurityReport {
        system,
        assessment,
        multiphoton_criterion: criterion,
        multiphoton_fraction: fraction,
        faint_pulse_penalty_db: penalty,
    };
    print_and_store(&args.out_dir, "security.json", &report)
}
