//! Fiber channel model: attenuation and chromatic dispersion.
//!
//! Losses are tracked in decibels and composed additively; the linear
//! transmittance used by the rate equations is `10^(-dB/10)`. Chromatic
//! dispersion matters here because it broadens the arrival-time spread of
//! photons and therefore the coincidence peaks that the receiver has to
//! discriminate: the spread grows linearly with the dispersion coefficient,
//! the source spectral width, and the fiber length. Dispersion-shifted
//! fiber is modeled by a zero dispersion coefficient.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed attenuation expressed in dB. Negative or non-finite values are
/// rejected: a channel cannot amplify.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attenuation {
    db: f64,
}

impl Attenuation {
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() || db < 0.0 {
            return Err(Error::domain(format!(
                "attenuation must be a finite value >= 0 dB, got {db}"
            )));
        }
        Ok(Attenuation { db })
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    /// Linear power transmittance, in (0, 1].
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.db / 10.0)
    }

    /// Losses in series add in dB (multiply in linear units).
    pub fn compose(&self, other: Attenuation) -> Attenuation {
        Attenuation {
            db: self.db + other.db,
        }
    }
}

/// Convert a loss in dB to a linear transmittance.
pub fn db_to_linear(loss_db: f64) -> Result<f64> {
    Ok(Attenuation::from_db(loss_db)?.transmittance())
}

/// A span of transmission fiber plus any lumped extra loss (connectors,
/// splices). Dispersion parameters describe how much the photon wave packet
/// spreads in time while crossing the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// Lumped losses not proportional to length (junctions, patch cords).
    pub extra_loss_db: f64,
    /// Chromatic dispersion coefficient in ps/(nm km); 0 for
    /// dispersion-shifted fiber operated at its zero-dispersion wavelength.
    pub dispersion_ps_per_nm_km: f64,
    /// Spectral width (FWHM) of the photons sent down the span, in nm.
    pub spectral_width_nm: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("length_km", self.length_km),
            ("attenuation_db_per_km", self.attenuation_db_per_km),
            ("extra_loss_db", self.extra_loss_db),
            ("dispersion_ps_per_nm_km", self.dispersion_ps_per_nm_km),
            ("spectral_width_nm", self.spectral_width_nm),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "channel.{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn total_loss_db(&self) -> f64 {
        self.length_km * self.attenuation_db_per_km + self.extra_loss_db
    }

    pub fn total_loss(&self) -> Result<Attenuation> {
        self.validate()?;
        Attenuation::from_db(self.total_loss_db())
    }

    pub fn transmittance(&self) -> Result<f64> {
        Ok(self.total_loss()?.transmittance())
    }

    /// Temporal spread (ps) accumulated by a photon of the given spectral
    /// width over the span: coefficient x width x length.
    pub fn dispersion_spread_ps(&self) -> f64 {
        self.dispersion_ps_per_nm_km * self.spectral_width_nm * self.length_km
    }
}
