//! Coherence-area model of the twin beams on a split photodiode.
//!
//! Power in coherence areas that land entirely on one detector half is
//! `isolated`; such an area and its mirror-image partner in the other beam
//! form an independent twin pair seen through the detector efficiency `η_d`.
//! Areas straddling the split contribute according to their effective
//! efficiency `η_i` on the half holding most of their power. The normalized
//! differential noise is
//!
//! ```text
//! ⟨ΔN²⟩ = (1/P0)·[ P_s·n_s/(2G−1) + Σ_i P_i·n'_i/(η_d·(2G−1)) ]
//! n_s   = 2G−1+2η_d−2Gη_d
//! n'_i  = η_i·(2G−1+2η_i−2Gη_i)
//! ```
//!
//! `η_i` is a combined efficiency: geometric overlap times `η_d`. With this
//! reading a split mode whose overlap tends to one contributes exactly as an
//! isolated mode does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quanta::{ideal_twin_noise, Gain, LossChannel, TwinBeamState};
use crate::units::{ratio_to_db, Quantity, Watt};

/// Relative tolerance on `P_s + ΣP_i = P0`.
pub const POWER_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMode {
    /// Power in the mode (W).
    pub power: f64,
    /// Effective efficiency `η_i` on the detector half holding most of the mode.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutConfig", into = "LayoutConfig")]
pub struct ModeLayout {
    total_power: f64,
    isolated_power: f64,
    split_modes: Vec<SplitMode>,
    detector_efficiency: f64,
}

impl ModeLayout {
    pub fn new(
        total_power: f64,
        isolated_power: f64,
        split_modes: Vec<SplitMode>,
        detector_efficiency: f64,
    ) -> Result<Self> {
        if !(total_power >= 0.0) || !total_power.is_finite() {
            return Err(Error::invalid("total power", total_power, "must be finite and >= 0"));
        }
        if !(isolated_power >= 0.0) {
            return Err(Error::invalid("isolated power", isolated_power, "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&detector_efficiency) {
            return Err(Error::invalid(
                "detector efficiency",
                detector_efficiency,
                "must lie in [0, 1]",
            ));
        }
        for m in &split_modes {
            if !(m.power >= 0.0) {
                return Err(Error::invalid("split mode power", m.power, "must be >= 0"));
            }
            if !(0.0..=1.0).contains(&m.overlap) {
                return Err(Error::invalid("split mode overlap", m.overlap, "must lie in [0, 1]"));
            }
        }
        let sum = isolated_power + split_modes.iter().map(|m| m.power).sum::<f64>();
        if (sum - total_power).abs() > POWER_SUM_TOLERANCE * total_power.max(f64::MIN_POSITIVE) {
            return Err(Error::PowerBookkeeping {
                sum,
                total: total_power,
            });
        }
        Ok(ModeLayout {
            total_power,
            isolated_power,
            split_modes,
            detector_efficiency,
        })
    }

    /// Every coherence area isolated on one half.
    pub fn isolated(total_power: f64, detector_efficiency: f64) -> Result<Self> {
        ModeLayout::new(total_power, total_power, Vec::new(), detector_efficiency)
    }

    /// Builds a layout from Gaussian coherence areas at transverse offsets
    /// from the split line. An area whose majority-half overlap is at least
    /// `isolation_threshold` counts as isolated; otherwise it becomes a split
    /// mode with `η_i = η_d · overlap`.
    pub fn from_coherence_areas(
        areas: &[CoherenceArea],
        detector_efficiency: f64,
        isolation_threshold: f64,
    ) -> Result<Self> {
        let mut isolated = 0.0;
        let mut split = Vec::new();
        for a in areas {
            let overlap = half_plane_overlap(a.offset, a.radius)?;
            if overlap >= isolation_threshold {
                isolated += a.power;
            } else {
                split.push(SplitMode {
                    power: a.power,
                    overlap: detector_efficiency * overlap,
                });
            }
        }
        let total = isolated + split.iter().map(|m| m.power).sum::<f64>();
        ModeLayout::new(total, isolated, split, detector_efficiency)
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn isolated_power(&self) -> f64 {
        self.isolated_power
    }

    pub fn split_modes(&self) -> &[SplitMode] {
        &self.split_modes
    }

    pub fn detector_efficiency(&self) -> f64 {
        self.detector_efficiency
    }

    /// Same layout with every power scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ModeLayout::new(
            self.total_power * factor,
            self.isolated_power * factor,
            self.split_modes
                .iter()
                .map(|m| SplitMode {
                    power: m.power * factor,
                    overlap: m.overlap,
                })
                .collect(),
            self.detector_efficiency,
        )
    }
}

/// Serialized form of a [`ModeLayout`], powers with explicit units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub total_power: Quantity<Watt>,
    pub isolated_power: Quantity<Watt>,
    #[serde(default)]
    pub split_modes: Vec<SplitModeConfig>,
    pub detector_efficiency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitModeConfig {
    pub power: Quantity<Watt>,
    pub overlap: f64,
}

impl TryFrom<LayoutConfig> for ModeLayout {
    type Error = Error;
    fn try_from(c: LayoutConfig) -> Result<Self> {
        ModeLayout::new(
            c.total_power.si(),
            c.isolated_power.si(),
            c.split_modes
                .iter()
                .map(|m| SplitMode {
                    power: m.power.si(),
                    overlap: m.overlap,
                })
                .collect(),
            c.detector_efficiency,
        )
    }
}

impl From<ModeLayout> for LayoutConfig {
    fn from(l: ModeLayout) -> Self {
        LayoutConfig {
            total_power: Quantity::new(l.total_power),
            isolated_power: Quantity::new(l.isolated_power),
            split_modes: l
                .split_modes
                .iter()
                .map(|m| SplitModeConfig {
                    power: Quantity::new(m.power),
                    overlap: m.overlap,
                })
                .collect(),
            detector_efficiency: l.detector_efficiency,
        }
    }
}

/// A Gaussian coherence area: power (W), center offset from the split line
/// (m) and 1/e² intensity radius (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceArea {
    pub power: f64,
    pub offset: f64,
    pub radius: f64,
}

/// Fraction of a Gaussian spot (1/e² radius `radius`) centered `offset` from a
/// straight edge that falls on the majority side. Always in `[0.5, 1]`.
pub fn half_plane_overlap(offset: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::invalid("coherence area radius", radius, "must be > 0"));
    }
    Ok(0.5 * (1.0 + libm::erf(std::f64::consts::SQRT_2 * offset.abs() / radius)))
}

/// Split-detector differential noise of `layout` in SNL units.
///
/// Reduces to `n_s/(2G−1)` when all power is isolated, and to `1/(2G−1)` when
/// additionally `η_d = 1`. Moving power from split modes into isolated areas
/// lowers the noise, and the result stays above `1/(2G−1)`, whenever the
/// split modes satisfy `η_d/2 ≤ η_i ≤ η_d` and `G` is at least about 2.5. Far
/// outside that domain (e.g. `η_i → 0`) the expression itself stops being
/// monotone.
pub fn split_detector_noise(layout: &ModeLayout, gain: Gain) -> Result<f64> {
    if !(layout.total_power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let eta_d = layout.detector_efficiency;
    if eta_d == 0.0 && !layout.split_modes.is_empty() {
        return Err(Error::invalid(
            "detector efficiency",
            eta_d,
            "must be > 0 when split modes are present",
        ));
    }
    let g = gain.value();
    let amp = 2.0 * g - 1.0;
    let n_s = amp + 2.0 * eta_d - 2.0 * g * eta_d;
    let isolated = layout.isolated_power * n_s / amp;
    let split: f64 = layout
        .split_modes
        .iter()
        .map(|m| {
            let eta = m.overlap;
            let n_prime = eta * (amp + 2.0 * eta - 2.0 * g * eta);
            m.power * n_prime / (eta_d * amp)
        })
        .sum();
    Ok((isolated + split) / layout.total_power)
}

/// Smallest gain at which `layout` shows `target_db` of squeezing (dB below
/// the SNL) on the split detector. The noise is strictly decreasing in `G`,
/// so this is a bracketed bisection.
pub fn gain_for_squeezing(layout: &ModeLayout, target_db: f64) -> Result<Gain> {
    const G_MAX: f64 = 1e9;
    let squeezing = |g: f64| -> Result<f64> {
        Ok(-ratio_to_db(split_detector_noise(layout, Gain::new(g)?)?))
    };
    let lo_db = squeezing(1.0)?;
    let hi_db = squeezing(G_MAX)?;
    if !(target_db >= lo_db && target_db <= hi_db) {
        return Err(Error::Unattainable {
            target_db,
            min_db: lo_db,
            max_db: hi_db,
        });
    }
    // bisect in log G: the useful range spans many decades
    let (mut lo, mut hi) = (0.0f64, G_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if squeezing(mid.exp())? < target_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Gain::new(hi.exp())
}

/// Split photodiode and beam parameters at the detection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDetectorGeometry {
    /// 1/e² intensity radius of the beam on the detector (m).
    pub beam_waist: f64,
    /// A/W.
    pub responsivity: f64,
    /// Electronic noise power relative to the SNL at the reference power.
    pub electronic_noise_psd: f64,
    /// Dead zone between the halves (m).
    pub gap: f64,
}

impl SplitDetectorGeometry {
    pub fn new(beam_waist: f64, responsivity: f64, electronic_noise_psd: f64, gap: f64) -> Result<Self> {
        if !(beam_waist > 0.0) {
            return Err(Error::invalid("beam waist", beam_waist, "must be > 0"));
        }
        if !(responsivity > 0.0) {
            return Err(Error::invalid("responsivity", responsivity, "must be > 0"));
        }
        if !(electronic_noise_psd >= 0.0) {
            return Err(Error::invalid("electronic noise", electronic_noise_psd, "must be >= 0"));
        }
        if !(gap >= 0.0) {
            return Err(Error::invalid("gap", gap, "must be >= 0"));
        }
        Ok(SplitDetectorGeometry {
            beam_waist,
            responsivity,
            electronic_noise_psd,
            gap,
        })
    }

    /// Fraction of the gapless knife-edge slope surviving the dead zone.
    pub fn gap_factor(&self) -> f64 {
        (-self.gap * self.gap / (2.0 * self.beam_waist * self.beam_waist)).exp()
    }
}

impl Default for SplitDetectorGeometry {
    fn default() -> Self {
        SplitDetectorGeometry {
            beam_waist: 1e-3,
            responsivity: 0.61,
            electronic_noise_psd: 0.02,
            gap: 0.0,
        }
    }
}

/// Linearized split-detector response: left-minus-right power (W) for a beam
/// of `power` displaced by `displacement` at the detector,
/// `power·√(8/π)·d/w` times the dead-zone factor.
pub fn displacement_signal(displacement: f64, geometry: &SplitDetectorGeometry, power: f64) -> Result<f64> {
    let limit = 0.1 * geometry.beam_waist;
    if displacement.abs() > limit {
        return Err(Error::OutOfLinearRange {
            displacement,
            limit,
        });
    }
    Ok(power * (8.0 / std::f64::consts::PI).sqrt() * displacement / geometry.beam_waist * geometry.gap_factor())
}

/// Optical-lever magnification that makes a shot-noise-limited split
/// detector resolve the displacement PSD `hcλ/(8π²P)` at total power `P`
/// when only `probe_power` of `total_power` carries the deflection.
///
/// With this gain a cantilever displacement `x` produces a differential
/// photon rate `4π·Ṅ_total·x/λ`.
pub fn snl_matched_lever_gain(
    geometry: &SplitDetectorGeometry,
    wavelength: f64,
    probe_power: f64,
    total_power: f64,
) -> f64 {
    (2.0 * std::f64::consts::PI.powi(3)).sqrt() * geometry.beam_waist / wavelength * (total_power / probe_power)
        / geometry.gap_factor()
}

/// One point of a conjugate-aperture sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AperturePoint {
    pub conj_transmission: f64,
    /// Differential noise relative to the SNL of a coherent probe of the same
    /// power behind the same probe aperture (dB).
    pub noise_db: f64,
    /// Differential noise relative to the SNL at the same total detected
    /// power (dB).
    pub noise_snl_db: f64,
    /// SNR for a 1 s count integration (dB).
    pub snr_db: f64,
    /// SNR with coherent beams of the same detected powers (dB).
    pub coherent_snr_db: f64,
    /// SNR of the coherent probe alone behind the probe aperture (dB).
    pub classical_snr_db: f64,
}

/// Sweeps the conjugate aperture transmission with the probe aperture fixed.
///
/// `signal_rate` is the differential photon-rate amplitude the displacement
/// produces through the probe aperture; it is the same for every point.
pub fn aperture_sweep(
    state: &TwinBeamState,
    probe: LossChannel,
    conj_transmissions: &[f64],
    signal_rate: f64,
) -> Result<Vec<AperturePoint>> {
    let classical_var = probe.transmission() * state.mean_probe;
    if !(classical_var > 0.0) {
        return Err(Error::ZeroPower);
    }
    let s2 = signal_rate * signal_rate;
    conj_transmissions
        .iter()
        .map(|&t| {
            let conj = LossChannel::new(t)?;
            let out = state.apply_loss(probe, conj);
            let var = out.difference_variance();
            let coherent_var = out.total_rate();
            Ok(AperturePoint {
                conj_transmission: t,
                noise_db: ratio_to_db(var / classical_var),
                noise_snl_db: ratio_to_db(out.intensity_difference_noise()?),
                snr_db: ratio_to_db(s2 / var),
                coherent_snr_db: ratio_to_db(s2 / coherent_var),
                classical_snr_db: ratio_to_db(s2 / classical_var),
            })
        })
        .collect()
}

/// Relative shot-noise-limited SNR of a razor blade cutting a Gaussian beam
/// at power transmission `transmission`: slope² over transmitted power.
pub fn knife_edge_snr_factor(transmission: f64) -> Result<f64> {
    if !(transmission > 0.0 && transmission < 1.0) {
        return Err(Error::invalid("transmission", transmission, "must lie in (0, 1)"));
    }
    let u = inverse_normal_cdf(transmission);
    let density = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    Ok(density * density / transmission)
}

/// Transmission that maximizes [`knife_edge_snr_factor`] (golden-section).
pub fn optimal_knife_edge_transmission() -> f64 {
    let f = |t: f64| knife_edge_snr_factor(t).unwrap_or(0.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (1e-6, 1.0 - 1e-6);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    while b - a > 1e-10 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    0.5 * (a + b)
}

fn normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

fn inverse_normal_cdf(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ratio of a single mode split evenly across the halves (`η_d = 1`) to the
/// ideal multimode value `1/(2G−1)`.
pub fn single_mode_penalty(gain: Gain) -> Result<f64> {
    let layout = ModeLayout::new(
        1.0,
        0.0,
        vec![SplitMode {
            power: 1.0,
            overlap: 0.5,
        }],
        1.0,
    )?;
    Ok(split_detector_noise(&layout, gain)? / ideal_twin_noise(gain))
}
