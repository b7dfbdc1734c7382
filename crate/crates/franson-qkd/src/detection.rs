//! Gated avalanche photodiode model.
//!
//! Detectors only matter to the key rate through two numbers per gate: the
//! probability of a signal-induced click and the probability of a spurious
//! one (dark count, inflated by afterpulsing if the detector suffers from
//! it). Both are per-gate Bernoulli probabilities; a click happens when
//! either mechanism fires.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Quantum efficiency: probability that a photon arriving during the
    /// gate produces an avalanche.
    pub efficiency: f64,
    /// Probability of a spurious count per gate.
    pub dark_count_prob: f64,
    /// Multiplier on the spurious-count probability accounting for
    /// afterpulses; 1.0 when operating slowly enough for traps to empty.
    pub afterpulse_factor: f64,
    /// Gate width in ns.
    pub gate_width_ns: f64,
    /// Timing jitter (FWHM) in ps, a component of the coincidence width.
    pub jitter_fwhm_ps: f64,
    /// Dead time imposed after a detection, for free-running detectors.
    /// Caps the usable trigger rate at `1/dead_time`.
    pub dead_time_ns: Option<f64>,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) || !self.efficiency.is_finite() {
            return Err(Error::domain(format!(
                "detector efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(0.0..=1.0).contains(&self.dark_count_prob) || !self.dark_count_prob.is_finite() {
            return Err(Error::domain(format!(
                "dark count probability must lie in [0, 1], got {}",
                self.dark_count_prob
            )));
        }
        if !self.afterpulse_factor.is_finite() || self.afterpulse_factor < 1.0 {
            return Err(Error::domain(format!(
                "afterpulse factor must be >= 1, got {}",
                self.afterpulse_factor
            )));
        }
        if self.spurious_prob() > 1.0 {
            return Err(Error::domain(
                "afterpulse-inflated dark probability exceeds 1".to_string(),
            ));
        }
        for (name, v) in [
            ("gate_width_ns", self.gate_width_ns),
            ("jitter_fwhm_ps", self.jitter_fwhm_ps),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if let Some(dt) = self.dead_time_ns {
            if !dt.is_finite() || dt <= 0.0 {
                return Err(Error::domain(format!(
                    "dead_time_ns must be finite and > 0, got {dt}"
                )));
            }
        }
        Ok(())
    }

    /// Per-gate spurious-count probability including afterpulsing.
    pub fn spurious_prob(&self) -> f64 {
        self.dark_count_prob * self.afterpulse_factor
    }

    /// Maximum trigger rate a free-running detector can sustain.
    pub fn max_rate_hz(&self) -> Option<f64> {
        self.dead_time_ns.map(|dt| 1e9 / dt)
    }
}

/// Probability of at least one click in a gate during which a photon is
/// present with probability `signal_prob`: signal detection and spurious
/// counts are independent mechanisms.
pub fn click_prob(signal_prob: f64, params: &DetectorParams) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&signal_prob) || !signal_prob.is_finite() {
        return Err(Error::domain(format!(
            "signal probability must lie in [0, 1], got {signal_prob}"
        )));
    }
    let p_signal = params.efficiency * signal_prob;
    Ok(1.0 - (1.0 - p_signal) * (1.0 - params.spurious_prob()))
}

/// Invert the sifted-rate equation for the effective detector efficiency:
/// the rate of correct sifted detections is
/// `f_alice * mu * t_link * t_bob * q_interf * eta * q_basis`,
/// so a measured rate pins down `eta` once the rest of the budget is known.
pub fn solve_efficiency(
    raw_rate_hz: f64,
    f_alice_hz: f64,
    mu: f64,
    t_link: f64,
    t_bob: f64,
    q_interf: f64,
    q_basis: f64,
) -> Result<f64> {
    for (name, v) in [
        ("raw_rate_hz", raw_rate_hz),
        ("f_alice_hz", f_alice_hz),
        ("mu", mu),
        ("t_link", t_link),
        ("t_bob", t_bob),
        ("q_interf", q_interf),
        ("q_basis", q_basis),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    let denom = f_alice_hz * mu * t_link * t_bob * q_interf * q_basis;
    if denom == 0.0 {
        return Err(Error::domain(
            "cannot solve for efficiency: slope of rate in eta is zero".to_string(),
        ));
    }
    Ok(raw_rate_hz / denom)
}

/// Click flags for one gate across the receiver's four logical detector
/// slots: two time bins (the measurement basis the photon ended up in) by
/// two output ports (the bit value).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClickPattern {
    pub clicks: [[bool; 2]; 2],
}

/// Outcome of classifying a gate's click pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickClass {
    /// No detector fired; the gate yields nothing.
    None,
    /// Exactly one detector fired: an unambiguous (basis, bit) outcome.
    Single { basis: usize, port: usize },
    /// More than one detector fired; the receiver must resolve the
    /// ambiguity (here: by a fair random choice).
    Multiple(u32),
}

impl ClickPattern {
    pub fn set(&mut self, basis: usize, port: usize) {
        self.clicks[basis][port] = true;
    }

    pub fn count(&self) -> u32 {
        self.clicks
            .iter()
            .flatten()
            .map(|&c| c as u32)
            .sum()
    }

    /// Total classification: every pattern is None, Single, or Multiple.
    pub fn classify(&self) -> ClickClass {
        match self.count() {
            0 => ClickClass::None,
            1 => {
                for basis in 0..2 {
                    for port in 0..2 {
                        if self.clicks[basis][port] {
                            return ClickClass::Single { basis, port };
                        }
                    }
                }
                unreachable!()
            }
            n => ClickClass::Multiple(n),
        }
    }

    /// Indices of all slots that fired, in (basis, port) lexicographic order.
    pub fn fired(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for basis in 0..2 {
            for port in 0..2 {
                if self.clicks[basis][port] {
                    v.push((basis, port));
                }
            }
        }
        v
    }
}
