//! Two-photon interference at unbalanced interferometers.
//!
//! Alice and Bob each send their photon through an interferometer whose two
//! arms differ by much more than the coherence time of the photon but much
//! less than that of the pump. Events in which both photons take the short
//! arm are indistinguishable from events in which both take the long arm,
//! and these interfere: the probability that the two photons exit in
//! correlated ports is `(1 + cos(phi_a + phi_b))/2` and in anticorrelated
//! ports `(1 - cos(phi_a + phi_b))/2`, where `phi_a` and `phi_b` are the
//! phases of the two interferometers. Each party offsets their phase by a
//! quarter period to switch measurement bases.
//!
//! Short-long and long-short combinations do not interfere; they arrive one
//! arm-imbalance early or late and show up as side peaks in the
//! coincidence-time histogram, carrying half of the total coincidences
//! (a quarter each). Discriminating the central peak from the side peaks is
//! what the timing window is for, and the tradeoff between accidental-count
//! suppression and loss of true coincidences is computed here from the
//! Gaussian peak shapes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Ratio between a Gaussian FWHM and its standard deviation.
pub const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_3; // 2 sqrt(2 ln 2)

/// Relative weights of the early, central (interfering), and late
/// coincidence peaks for a 50/50 interferometer.
pub const PEAK_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

/// One of the two conjugate measurement bases. `Z` leaves the analyzer
/// phase at its alignment value; `X` offsets it by a quarter period
/// (+pi/2 on Alice's analyzer, -pi/2 on Bob's, so that matched bases
/// always interfere at net phase zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn index(self) -> usize {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Basis> {
        match i {
            0 => Some(Basis::Z),
            1 => Some(Basis::X),
            _ => None,
        }
    }

    fn alice_phase(self) -> f64 {
        match self {
            Basis::Z => 0.0,
            Basis::X => std::f64::consts::FRAC_PI_2,
        }
    }

    fn bob_phase(self) -> f64 {
        match self {
            Basis::Z => 0.0,
            Basis::X => -std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Analyzer phases for one coincidence: alignment phases plus the basis
/// offsets chosen by each party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSetting {
    pub phi_a: f64,
    pub phi_b: f64,
    pub basis_a: Basis,
    pub basis_b: Basis,
}

impl PhaseSetting {
    pub fn new(phi_a: f64, phi_b: f64, basis_a: Basis, basis_b: Basis) -> Self {
        PhaseSetting {
            phi_a,
            phi_b,
            basis_a,
            basis_b,
        }
    }

    /// Net interference phase, including the basis offsets.
    pub fn phase_sum(&self) -> f64 {
        self.phi_a + self.phi_b + self.basis_a.alice_phase() + self.basis_b.bob_phase()
    }
}

/// Probability that the photons exit in correlated / anticorrelated ports
/// for an ideal (unit-visibility) interfering event. The two always sum
/// to one.
pub fn correlation_probs(setting: &PhaseSetting) -> (f64, f64) {
    let c = setting.phase_sum().cos();
    (0.5 * (1.0 + c), 0.5 * (1.0 - c))
}

/// Same as [`correlation_probs`] but with the fringe contrast reduced to
/// the given visibility, `p = (1 +/- V cos)/2`.
pub fn outcome_probs(setting: &PhaseSetting, visibility: f64) -> Result<(f64, f64)> {
    check_visibility(visibility)?;
    let c = visibility * setting.phase_sum().cos();
    Ok((0.5 * (1.0 + c), 0.5 * (1.0 - c)))
}

/// Probability that an interfering event at net phase zero exits through
/// the wrong port: `(1 - V)/2`. This is the optical QBER contribution.
pub fn wrong_port_prob(visibility: f64) -> Result<f64> {
    check_visibility(visibility)?;
    Ok(0.5 * (1.0 - visibility))
}

fn check_visibility(v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!(
            "visibility must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// Widths composing in quadrature (detector jitter, dispersion spread, ...)
/// into an effective coincidence-peak FWHM.
pub fn quadrature_fwhm(components: &[f64]) -> f64 {
    components.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Geometry of the three coincidence peaks: side peaks sit one arm
/// imbalance before and after the central interfering peak, and all three
/// share the same Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidencePeaks {
    /// Arm-imbalance delay separating the side peaks from the central one.
    pub separation_ns: f64,
    /// Full width at half maximum of each peak.
    pub fwhm_ns: f64,
}

impl CoincidencePeaks {
    pub fn new(separation_ns: f64, fwhm_ns: f64) -> Result<Self> {
        for (name, v) in [("separation_ns", separation_ns), ("fwhm_ns", fwhm_ns)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(CoincidencePeaks {
            separation_ns,
            fwhm_ns,
        })
    }

    pub fn sigma_ns(&self) -> f64 {
        self.fwhm_ns / FWHM_TO_SIGMA
    }

    /// Probability mass of the full three-peak mixture inside `[a, b]`.
    fn mass_between(&self, a: f64, b: f64) -> f64 {
        let sigma = self.sigma_ns();
        let centers = [-self.separation_ns, 0.0, self.separation_ns];
        let mut m = 0.0;
        for (w, c) in PEAK_WEIGHTS.iter().zip(centers) {
            m += w * (normal_cdf((b - c) / sigma) - normal_cdf((a - c) / sigma));
        }
        m
    }

    /// Fraction of one side peak's own mass that falls inside the central
    /// acceptance window `|t| <= window_halfwidth_ns`. Nonzero leakage means
    /// non-interfering events contaminate the key.
    pub fn side_peak_window_fraction(&self, window_halfwidth_ns: f64) -> Result<f64> {
        check_halfwidth("window_halfwidth_ns", window_halfwidth_ns)?;
        let sigma = self.sigma_ns();
        let s = self.separation_ns;
        let w = window_halfwidth_ns;
        Ok(normal_cdf((w - s) / sigma) - normal_cdf((-w - s) / sigma))
    }
}

fn check_halfwidth(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::domain(format!(
            "{name} must be finite and > 0, got {v}"
        )));
    }
    Ok(())
}

/// Standard normal CDF.
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Arrival-time density of coincidences, binned. Densities integrate to
/// one over the covered range (up to Gaussian tails beyond it).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub start_ns: f64,
    pub bin_width_ns: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_center(&self, i: usize) -> f64 {
        self.start_ns + (i as f64 + 0.5) * self.bin_width_ns
    }

    /// Integral of the binned density over the covered range.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_ns
    }

    /// Integral of the binned density over `|t| <= halfwidth` (whole bins
    /// whose center falls inside the window).
    pub fn mass_within(&self, halfwidth_ns: f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .filter(|(i, _)| self.bin_center(*i).abs() <= halfwidth_ns)
            .map(|(_, d)| d)
            .sum::<f64>()
            * self.bin_width_ns
    }

    /// Two-column CSV: bin center (ns), density (1/ns).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time_ns,density_per_ns")?;
        for (i, d) in self.density.iter().enumerate() {
            writeln!(out, "{},{}", self.bin_center(i), d)?;
        }
        Ok(())
    }
}

/// Bin the three-peak coincidence density. Each bin holds the exact
/// Gaussian mass inside it divided by the bin width, so the histogram
/// integrates to one regardless of binning. The range automatically covers
/// all three peaks out to five FWHM. The bin width must resolve the peaks
/// (at most FWHM/5).
pub fn coincidence_histogram(peaks: &CoincidencePeaks, bin_width_ns: f64) -> Result<Histogram> {
    if !bin_width_ns.is_finite() || bin_width_ns <= 0.0 {
        return Err(Error::domain(format!(
            "bin width must be finite and > 0, got {bin_width_ns}"
        )));
    }
    if bin_width_ns > peaks.fwhm_ns / 5.0 {
        return Err(Error::domain(format!(
            "bin width {bin_width_ns} ns too coarse to resolve peaks of FWHM {} ns (max {})",
            peaks.fwhm_ns,
            peaks.fwhm_ns / 5.0
        )));
    }
    let halfspan = peaks.separation_ns + 5.0 * peaks.fwhm_ns;
    let n_bins = (2.0 * halfspan / bin_width_ns).ceil() as usize;
    let start = -(n_bins as f64) * bin_width_ns / 2.0;
    let density = (0..n_bins)
        .map(|i| {
            let a = start + i as f64 * bin_width_ns;
            peaks.mass_between(a, a + bin_width_ns) / bin_width_ns
        })
        .collect();
    Ok(Histogram {
        start_ns: start,
        bin_width_ns,
        density,
    })
}

/// Effect of shrinking the acceptance window from `baseline_halfwidth_ns`
/// to `window_halfwidth_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowTradeoff {
    /// Fraction of true (central-peak) coincidences kept, relative to the
    /// baseline window.
    pub true_retained: f64,
    /// Factor applied to accidental coincidences, which are uniform in
    /// time: simply the ratio of window widths.
    pub accidental_factor: f64,
}

/// Quantify the cost of a narrower acceptance window: accidentals scale
/// with the window width while true coincidences only lose the Gaussian
/// tails of the central peak.
pub fn window_tradeoff(
    peaks: &CoincidencePeaks,
    window_halfwidth_ns: f64,
    baseline_halfwidth_ns: f64,
) -> Result<WindowTradeoff> {
    check_halfwidth("window_halfwidth_ns", window_halfwidth_ns)?;
    check_halfwidth("baseline_halfwidth_ns", baseline_halfwidth_ns)?;
    if window_halfwidth_ns > baseline_halfwidth_ns {
        return Err(Error::domain(format!(
            "window halfwidth {window_halfwidth_ns} ns exceeds baseline {baseline_halfwidth_ns} ns"
        )));
    }
    let sigma = peaks.sigma_ns();
    let central = |w: f64| normal_cdf(w / sigma) - normal_cdf(-w / sigma);
    Ok(WindowTradeoff {
        true_retained: central(window_halfwidth_ns) / central(baseline_halfwidth_ns),
        accidental_factor: window_halfwidth_ns / baseline_halfwidth_ns,
    })
}
