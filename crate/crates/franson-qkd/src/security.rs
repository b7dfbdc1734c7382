//! Source-level security accounting: Poisson photon-number statistics,
//! photon-number-splitting exposure, and a three-level classification of
//! key-distribution systems.
//!
//! The comparison works at the accounting level — fractions of pulses an
//! eavesdropper could exploit and the loss thresholds where that becomes
//! possible — rather than simulating an interactive adversary. A weak
//! coherent pulse carries more than one photon with probability
//! `1 - e^(-mu)(1 + mu)`; whenever the channel transmission falls below
//! that fraction, an eavesdropper could in principle obtain a perfect copy
//! of every bit Bob receives by keeping one photon of each multiphoton
//! pulse and forwarding the rest through a lossless line. Pair sources
//! with passive state preparation are immune: simultaneously emitted pairs
//! carry independent random preparations, so a kept photon yields no
//! deterministic information.

use crate::error::{Error, Result};
use serde::Serialize;

/// A weak-coherent-pulse source: photon number per pulse is Poisson with
/// mean `mu_fp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaintPulseSource {
    pub mu_fp: f64,
    pub repetition_rate_hz: f64,
}

impl FaintPulseSource {
    pub fn new(mu_fp: f64, repetition_rate_hz: f64) -> Result<Self> {
        if !mu_fp.is_finite() || mu_fp <= 0.0 {
            return Err(Error::domain(format!(
                "mean photon number must be > 0, got {mu_fp}"
            )));
        }
        if !repetition_rate_hz.is_finite() || repetition_rate_hz <= 0.0 {
            return Err(Error::domain(format!(
                "repetition rate must be > 0 Hz, got {repetition_rate_hz}"
            )));
        }
        Ok(FaintPulseSource {
            mu_fp,
            repetition_rate_hz,
        })
    }
}

/// Probability that a Poisson pulse of mean `mu` contains two or more
/// photons: `1 - e^(-mu) (1 + mu)`.
pub fn multiphoton_prob(mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::domain(format!(
            "mean photon number must be >= 0, got {mu}"
        )));
    }
    Ok(1.0 - (-mu).exp() * (1.0 + mu))
}

/// Which denominator the multiphoton fraction is quoted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiphotonCriterion {
    /// P(n >= 2) per emitted pulse (the default accounting).
    PerPulse,
    /// P(n >= 2 | n >= 1): per pulse that actually carries light.
    PerNonEmptyPulse,
}

/// Multiphoton fraction under the chosen criterion.
pub fn multiphoton_fraction(mu: f64, criterion: MultiphotonCriterion) -> Result<f64> {
    let p2 = multiphoton_prob(mu)?;
    match criterion {
        MultiphotonCriterion::PerPulse => Ok(p2),
        MultiphotonCriterion::PerNonEmptyPulse => {
            let p1 = 1.0 - (-mu).exp();
            if p1 == 0.0 {
                return Ok(0.0); // vacuum source: no pulses, no fraction
            }
            Ok(p2 / p1)
        }
    }
}

/// Photon-number-splitting exposure of a faint-pulse link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnsCondition {
    /// True when the multiphoton fraction stays below the end-to-end
    /// transmission, so splitting cannot supply Bob's full count rate.
    pub secure: bool,
    /// Transmission divided by the multiphoton fraction (> 1 is secure;
    /// infinite for a vacuum source).
    pub margin: f64,
    pub multiphoton_prob: f64,
    pub transmission: f64,
}

/// Evaluate the splitting condition: secure iff
/// `multiphoton_prob(mu) < t_link * t_bob`.
pub fn pns_condition(mu: f64, t_link: f64, t_bob: f64) -> Result<PnsCondition> {
    for (name, v) in [("t_link", t_link), ("t_bob", t_bob)] {
        if !v.is_finite() || v <= 0.0 || v > 1.0 {
            return Err(Error::domain(format!(
                "{name} must be a transmittance in (0, 1], got {v}"
            )));
        }
    }
    let p2 = multiphoton_prob(mu)?;
    let transmission = t_link * t_bob;
    Ok(PnsCondition {
        secure: p2 < transmission,
        margin: if p2 == 0.0 {
            f64::INFINITY
        } else {
            transmission / p2
        },
        multiphoton_prob: p2,
        transmission,
    })
}

/// Total loss (dB) at which a faint-pulse link stops satisfying the
/// splitting condition: `10 log10(1 / multiphoton_prob(mu))`.
pub fn pns_loss_threshold_db(mu: f64) -> Result<f64> {
    let p2 = multiphoton_prob(mu)?;
    if p2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / p2).log10())
}

/// Rate cost of attenuating a source to mean photon number `mu < 1`,
/// expressed as equivalent extra fiber attenuation: `-10 log10(mu)` dB.
/// Running at mu = 0.1 costs the same detector-noise error growth as 10 dB
/// of extra fiber.
pub fn faint_pulse_penalty_db(mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu <= 0.0 || mu > 1.0 {
        return Err(Error::domain(format!(
            "mean photon number must lie in (0, 1], got {mu}"
        )));
    }
    Ok(-10.0 * mu.log10())
}

/// How a pair source decides basis and bit value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    /// The photon's own random behavior at a beamsplitter picks basis and
    /// bit; simultaneously emitted pairs get independent preparations.
    Passive,
    /// A driven modulator prepares the state, so photons emitted in the
    /// same window share it.
    Active,
}

/// The system under assessment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemDescription {
    /// Entangled-pair source; Alice's detection heralds Bob's photon.
    PhotonPair { preparation: Preparation },
    /// Attenuated laser pulses over a link with the given transmittances.
    FaintPulse {
        source: FaintPulseSource,
        t_link: f64,
        t_bob: f64,
    },
    /// Conventional public-key cryptography, for scale.
    ClassicalPublicKey,
}

/// Parse a system descriptor string as used by the command line. Faint
/// pulse systems take their parameters from the accompanying arguments.
pub fn parse_system(
    descriptor: &str,
    mu: f64,
    total_loss_db: f64,
    repetition_rate_hz: f64,
) -> Result<SystemDescription> {
    match descriptor {
        "pair-passive" => Ok(SystemDescription::PhotonPair {
            preparation: Preparation::Passive,
        }),
        "pair-active" => Ok(SystemDescription::PhotonPair {
            preparation: Preparation::Active,
        }),
        "faint-pulse" => {
            if !total_loss_db.is_finite() || total_loss_db < 0.0 {
                return Err(Error::domain(format!(
                    "total loss must be >= 0 dB, got {total_loss_db}"
                )));
            }
            Ok(SystemDescription::FaintPulse {
                source: FaintPulseSource::new(mu, repetition_rate_hz)?,
                t_link: crate::channel::db_to_linear(total_loss_db)?,
                t_bob: 1.0,
            })
        }
        "classical" => Ok(SystemDescription::ClassicalPublicKey),
        other => Err(Error::config(format!(
            "unknown system '{other}' (expected pair-passive, pair-active, faint-pulse, or classical)"
        ))),
    }
}

/// The three security levels, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityLevel {
    /// Immune to all attacks on the source, multiphoton splitting
    /// included.
    PairPassiveImmune,
    /// Secure in practice while the splitting condition holds; a
    /// loss-dependent guarantee.
    FaintPulsePractical,
    /// Secure only against computationally bounded adversaries.
    ClassicalPublicKey,
}

/// Clear-air attenuation used in the free-space feasibility note.
pub const CLEAR_AIR_LOSS_DB_PER_KM: f64 = 0.64;

/// Assessment of one system description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityAssessment {
    pub level: SecurityLevel,
    /// Fraction of pulses an eavesdropper could split deterministically
    /// (zero for pair and classical systems).
    pub multiphoton_fraction: f64,
    pub pns_vulnerable: bool,
    pub notes: Vec<String>,
}

/// Classify a system description into one of the three levels.
/// Total over the enumerated descriptions.
pub fn classify(system: &SystemDescription) -> Result<SecurityAssessment> {
    match system {
        SystemDescription::PhotonPair { preparation } => {
            let mut notes = vec![
                "multiple pair emissions carry independent random preparations; \
                 keeping a photon yields no deterministic bit information"
                    .to_string(),
                "double detections on Alice's side are attributed by a fair random \
                 choice, so they leak nothing an eavesdropper can act on"
                    .to_string(),
            ];
            if *preparation == Preparation::Active {
                notes.push(
                    "active preparation applies one setting to all photons in a window: \
                     an eavesdropper holding one photon of a multiple emission gains \
                     probabilistic (not deterministic) information about the bit"
                        .to_string(),
                );
            }
            Ok(SecurityAssessment {
                level: SecurityLevel::PairPassiveImmune,
                multiphoton_fraction: 0.0,
                pns_vulnerable: false,
                notes,
            })
        }
        SystemDescription::FaintPulse {
            source,
            t_link,
            t_bob,
        } => {
            let cond = pns_condition(source.mu_fp, *t_link, *t_bob)?;
            let threshold_db = pns_loss_threshold_db(source.mu_fp)?;
            let mut notes = vec![format!(
                "splitting condition {}: multiphoton fraction {:.3e} vs transmission {:.3e} \
                 (margin {:.2})",
                if cond.secure { "holds" } else { "violated" },
                cond.multiphoton_prob,
                cond.transmission,
                cond.margin
            )];
            notes.push(format!(
                "loss threshold {threshold_db:.1} dB; at {CLEAR_AIR_LOSS_DB_PER_KM} dB/km \
                 clear-air attenuation that is ~{:.0} km of free space",
                threshold_db / CLEAR_AIR_LOSS_DB_PER_KM
            ));
            Ok(SecurityAssessment {
                level: SecurityLevel::FaintPulsePractical,
                multiphoton_fraction: cond.multiphoton_prob,
                pns_vulnerable: !cond.secure,
                notes,
            })
        }
        SystemDescription::ClassicalPublicKey => Ok(SecurityAssessment {
            level: SecurityLevel::ClassicalPublicKey,
            multiphoton_fraction: 0.0,
            pns_vulnerable: false,
            notes: vec![
                "security rests on unproven computational-hardness assumptions; \
                 recorded traffic can be attacked retroactively"
                    .to_string(),
            ],
        }),
    }
}
