//! Full key pipeline: simulate, estimate, reconcile, compress.
//!
//! Runs a Monte Carlo session, sacrifices a random sample of the sifted
//! key to estimate its error rate, repairs the remainder with an
//! interactive parity exchange, verifies both sides hold the same string,
//! and hashes it down to the secret length the leakage accounting allows.
//!
//! Run with: cargo run --example key_distillation

use franson_qkd::distillation::{binary_entropy, distill_keys, key_hash, NetRateModel};
use franson_qkd::profile::ExperimentProfile;
use franson_qkd::protocol::run_session;

fn main() -> franson_qkd::Result<()> {
    let profile = ExperimentProfile::builtin("lab-20m")?;
    let cfg = profile.session_config()?;
    let session = run_session(&cfg, 2024, 20_000_000)?;
    println!(
        "session: {} sifted bits, {} errors (rate {:.4})",
        session.stats.sifted_bits, session.stats.errors, session.stats.measured_qber
    );

    let report = distill_keys(&session.alice_key, &session.bob_key, 0.1, 30, 2024)?;
    let est = &report.estimate;
    println!(
        "\nestimation: disclosed {} bits, {} mismatched -> {:.4} (95% CI {:.4}..{:.4})",
        est.disclosed, est.mismatches, est.estimate, est.ci_low, est.ci_high
    );

    let t = &report.transcript;
    let n = report.reconciled_bits as f64;
    println!(
        "reconciliation: {} rounds corrected {} errors, disclosing {} parity bits",
        t.rounds, t.corrected_errors, t.parities_disclosed
    );
    println!(
        "  leakage {:.3} bits/bit vs entropy bound h(q) = {:.3}",
        t.leaked_bits() as f64 / n,
        binary_entropy(est.estimate)
    );

    println!(
        "\nsecret key: {} bits (hash {:016x})",
        report.secret_bits,
        key_hash(&report.final_key)
    );

    // what the closed-form model predicts for this raw rate and error rate
    let model = NetRateModel::default();
    println!(
        "modeled net rate at this operating point: {:.1} 1/s (secret fraction {:.3})",
        model.net_rate_hz(session.stats.raw_rate_hz, session.stats.measured_qber)?,
        model.secret_fraction(session.stats.measured_qber)?
    );
    Ok(())
}
