//! Event-level Monte Carlo session checked against the closed-form model.
//!
//! Runs five million detector gates of the short-link profile, tallies
//! sifted bits and errors by physical origin, and compares the measured
//! error rate and raw rate with the analytic expectation in units of the
//! binomial standard deviation.
//!
//! Run with: cargo run --example session_vs_model

use franson_qkd::profile::ExperimentProfile;
use franson_qkd::protocol::run_session;

fn main() -> franson_qkd::Result<()> {
    let profile = ExperimentProfile::builtin("lab-20m")?;
    let cfg = profile.session_config()?;
    let gates = 5_000_000;
    let out = run_session(&cfg, 42, gates)?;
    let s = &out.stats;

    println!("gates simulated      {:>12}", s.gates);
    println!("detections           {:>12}", s.detected);
    println!("multi-click gates    {:>12}", s.multi_click_gates);
    println!("sifted bits          {:>12}", s.sifted_bits);
    println!("errors               {:>12}", s.errors);
    println!(
        "  by origin: optical {} / accidental {} / detector noise {}",
        s.error_tallies.optical, s.error_tallies.accidental, s.error_tallies.dark
    );

    let expected = cfg.budget.gate_rates()?;
    let n = s.sifted_bits as f64;
    let qber_sigma = (expected.qber * (1.0 - expected.qber) / n).sqrt();
    let rate_sigma = cfg.budget.source.f_alice_hz
        * (expected.p_sifted * (1.0 - expected.p_sifted) / gates as f64).sqrt();

    println!();
    println!(
        "error rate   measured {:.5}  expected {:.5}  ({:+.2} sigma)",
        s.measured_qber,
        expected.qber,
        (s.measured_qber - expected.qber) / qber_sigma
    );
    println!(
        "raw rate     measured {:.1} 1/s  expected {:.1} 1/s  ({:+.2} sigma)",
        s.raw_rate_hz,
        expected.sifted_rate_hz,
        (s.raw_rate_hz - expected.sifted_rate_hz) / rate_sigma
    );
    println!();
    println!("keys agree on {} of {} bits", n as u64 - s.errors, s.sifted_bits);
    Ok(())
}
