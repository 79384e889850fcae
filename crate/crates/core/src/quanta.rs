//! Photon statistics of the phase-insensitive twin-beam amplifier.
//!
//! A bright coherent seed of rate `s` (photons/s) enters the probe port and
//! vacuum enters the conjugate port. The Bogoliubov solutions
//!
//! ```text
//! a1(t)  = a1(0)·√G − a2(0)†·√(G−1)
//! a2(t)† = a2(0)†·√G − a1(0)·√(G−1)
//! ```
//!
//! linearized about the seed amplitude give Gaussian photon-number statistics
//! with means `G·s`, `(G−1)·s` and the rate-normalized covariance returned by
//! [`TwinBeamState::amplify`]. Loss is a binomial thinning of each beam, which
//! in this regime is exactly a linear map on means and covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_ratio, ratio_to_db};

/// Phase-insensitive amplifier gain, `G ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Gain(f64);

impl Gain {
    pub const UNITY: Gain = Gain(1.0);

    pub fn new(g: f64) -> Result<Self> {
        if g.is_finite() && g >= 1.0 {
            Ok(Gain(g))
        } else {
            Err(Error::invalid("gain", g, "must be finite and >= 1"))
        }
    }

    /// Gain whose lossless intensity-difference noise `1/(2G−1)` equals `ratio`.
    pub fn from_ideal_noise_ratio(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::invalid("noise ratio", ratio, "must lie in (0, 1]"));
        }
        Gain::new(0.5 * (1.0 / ratio + 1.0))
    }

    /// Gain whose lossless squeezing is `db` decibels below the SNL.
    pub fn from_ideal_squeezing_db(db: f64) -> Result<Self> {
        if !(db >= 0.0) {
            return Err(Error::invalid("squeezing", db, "must be >= 0 dB"));
        }
        Gain::from_ideal_noise_ratio(db_to_ratio(-db))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Gain {
    type Error = Error;
    fn try_from(g: f64) -> Result<Self> {
        Gain::new(g)
    }
}

impl From<Gain> for f64 {
    fn from(g: Gain) -> f64 {
        g.0
    }
}

/// `G = cosh²(κt)` for lumped coupling `kappa` (1/s) acting for time `t` (s).
pub fn gain_from_interaction(kappa: f64, t: f64) -> Result<Gain> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("kappa", kappa, "must be finite and >= 0"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("interaction time", t, "must be finite and >= 0"));
    }
    let c = (kappa * t).cosh();
    Gain::new(c * c)
}

/// Intensity-difference noise of a lossless twin beam, `1/(2G−1)` in SNL units.
pub fn ideal_twin_noise(gain: Gain) -> f64 {
    1.0 / (2.0 * gain.0 - 1.0)
}

/// A single-beam power transmission `η ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LossChannel(f64);

impl LossChannel {
    pub const LOSSLESS: LossChannel = LossChannel(1.0);

    pub fn new(transmission: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&transmission) {
            Ok(LossChannel(transmission))
        } else {
            Err(Error::invalid("transmission", transmission, "must lie in [0, 1]"))
        }
    }

    pub fn transmission(self) -> f64 {
        self.0
    }

    /// Two channels in series.
    pub fn then(self, other: LossChannel) -> LossChannel {
        LossChannel(self.0 * other.0)
    }
}

impl TryFrom<f64> for LossChannel {
    type Error = Error;
    fn try_from(t: f64) -> Result<Self> {
        LossChannel::new(t)
    }
}

impl From<LossChannel> for f64 {
    fn from(c: LossChannel) -> f64 {
        c.0
    }
}

/// Probe/conjugate photon-number statistics.
///
/// Means are photon rates (photons/s). `number_cov` is rate-normalized: the
/// covariance of photon counts accumulated over an interval `τ` is
/// `number_cov · τ`, so a coherent beam of rate `m` has variance entry `m`.
/// Index 0 is the probe, 1 the conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamState {
    pub gain: Gain,
    pub mean_probe: f64,
    pub mean_conj: f64,
    pub number_cov: [[f64; 2]; 2],
    pub wavelength: f64,
}

impl TwinBeamState {
    /// Coherent probe of rate `rate`, vacuum conjugate.
    pub fn coherent(rate: f64, wavelength: f64) -> Result<Self> {
        TwinBeamState::amplify(rate, Gain::UNITY, wavelength)
    }

    /// Amplifies a coherent seed of `seed_rate` photons/s with gain `gain`.
    pub fn amplify(seed_rate: f64, gain: Gain, wavelength: f64) -> Result<Self> {
        if !(seed_rate >= 0.0) || !seed_rate.is_finite() {
            return Err(Error::invalid("seed rate", seed_rate, "must be finite and >= 0"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength", wavelength, "must be > 0"));
        }
        let g = gain.0;
        let s = seed_rate;
        let var_probe = g * (2.0 * g - 1.0) * s;
        let var_conj = (g - 1.0) * (2.0 * g - 1.0) * s;
        let cov = 2.0 * g * (g - 1.0) * s;
        Ok(TwinBeamState {
            gain,
            mean_probe: g * s,
            mean_conj: (g - 1.0) * s,
            number_cov: [[var_probe, cov], [cov, var_conj]],
            wavelength,
        })
    }

    /// Independent binomial thinning of each beam.
    pub fn apply_loss(&self, probe: LossChannel, conj: LossChannel) -> TwinBeamState {
        let (ep, ec) = (probe.0, conj.0);
        let [[vp, c], [_, vc]] = self.number_cov;
        let var_probe = ep * ep * vp + ep * (1.0 - ep) * self.mean_probe;
        let var_conj = ec * ec * vc + ec * (1.0 - ec) * self.mean_conj;
        let cov = ep * ec * c;
        TwinBeamState {
            gain: self.gain,
            mean_probe: ep * self.mean_probe,
            mean_conj: ec * self.mean_conj,
            number_cov: [[var_probe, cov], [cov, var_conj]],
            wavelength: self.wavelength,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.mean_probe + self.mean_conj
    }

    /// Rate-normalized variance of `N_probe − N_conj`.
    pub fn difference_variance(&self) -> f64 {
        let [[vp, c], [_, vc]] = self.number_cov;
        vp + vc - 2.0 * c
    }

    /// `Var(N_probe − N_conj)` over the shot noise of a coherent beam with the
    /// same total detected rate.
    pub fn intensity_difference_noise(&self) -> Result<f64> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Err(Error::ZeroPower);
        }
        Ok(self.difference_variance() / total)
    }

    /// Symmetric, non-negative diagonal, non-negative determinant.
    pub fn is_physical(&self) -> bool {
        let [[a, b], [c, d]] = self.number_cov;
        let scale = a.abs().max(d.abs()).max(1.0);
        let tol = 1e-12 * scale * scale;
        (b - c).abs() <= 1e-12 * scale && a >= 0.0 && d >= 0.0 && a * d - b * c >= -tol
    }
}

/// Intensity-difference noise after equal loss `eta` on both beams of a
/// lossless twin beam: `(2G−1+2η−2Gη)/(2G−1)`.
pub fn symmetric_loss_noise(gain: Gain, eta: f64) -> f64 {
    let g = gain.0;
    (2.0 * g - 1.0 + 2.0 * eta - 2.0 * g * eta) / (2.0 * g - 1.0)
}

/// How a squeezing level is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezingUnit {
    /// Noise-power ratio `R ∈ (0, 1]` against the SNL.
    PowerRatio,
    /// `−10·log10 R`, positive below the SNL.
    Decibel,
    /// Squeezing parameter `r` with `R = e^(−2r)`.
    SqueezingParameter,
}

impl std::str::FromStr for SqueezingUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" | "power_ratio" => Ok(SqueezingUnit::PowerRatio),
            "db" | "dB" | "decibel" => Ok(SqueezingUnit::Decibel),
            "r" | "squeezing_parameter" => Ok(SqueezingUnit::SqueezingParameter),
            _ => Err(Error::UnknownVariant {
                kind: "squeezing unit",
                value: s.to_string(),
                expected: "ratio, db, r",
            }),
        }
    }
}

/// Converts a squeezing level between conventions.
pub fn convert_squeezing(value: f64, from: SqueezingUnit, to: SqueezingUnit) -> Result<f64> {
    let ratio = match from {
        SqueezingUnit::PowerRatio => value,
        SqueezingUnit::Decibel => db_to_ratio(-value),
        SqueezingUnit::SqueezingParameter => (-2.0 * value).exp(),
    };
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::invalid("noise ratio", ratio, "must be finite and > 0"));
    }
    Ok(match to {
        SqueezingUnit::PowerRatio => ratio,
        SqueezingUnit::Decibel => -ratio_to_db(ratio),
        SqueezingUnit::SqueezingParameter => -0.5 * ratio.ln(),
    })
}
