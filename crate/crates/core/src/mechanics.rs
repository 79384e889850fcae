//! Cantilever displacement-noise budget.
//!
//! All PSDs are one-sided displacement PSDs in m²/Hz. Bandwidth enters only
//! through [`min_displacement`].

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_ratio, BOLTZMANN, PLANCK, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantileverParams {
    /// N/m.
    pub spring_constant: f64,
    /// Quality factor of the readout mode.
    pub quality_factor: f64,
    /// Readout (signal) mode frequency, Hz.
    pub mode_frequency: f64,
    /// Fundamental flexural resonance used by the thermal model, Hz.
    pub fundamental_frequency: f64,
    /// K.
    pub temperature: f64,
}

impl CantileverParams {
    pub fn new(
        spring_constant: f64,
        quality_factor: f64,
        mode_frequency: f64,
        fundamental_frequency: f64,
        temperature: f64,
    ) -> Result<Self> {
        let p = CantileverParams {
            spring_constant,
            quality_factor,
            mode_frequency,
            fundamental_frequency,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spring_constant > 0.0) {
            return Err(Error::invalid("spring constant", self.spring_constant, "must be > 0"));
        }
        if !(self.quality_factor >= 1.0) {
            return Err(Error::invalid("quality factor", self.quality_factor, "must be >= 1"));
        }
        if !(self.mode_frequency > 0.0) {
            return Err(Error::invalid("mode frequency", self.mode_frequency, "must be > 0"));
        }
        if !(self.fundamental_frequency > 0.0) {
            return Err(Error::invalid(
                "fundamental frequency",
                self.fundamental_frequency,
                "must be > 0",
            ));
        }
        // T = 0 is allowed: it switches the thermal term off.
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature", self.temperature, "must be >= 0"));
        }
        Ok(())
    }

    /// `k/(2π·f_fundamental)²`, kg.
    pub fn effective_mass(&self) -> f64 {
        let w0 = 2.0 * PI * self.fundamental_frequency;
        self.spring_constant / (w0 * w0)
    }
}

impl Default for CantileverParams {
    /// Gold-coated contact-mode lever read out at its 745 kHz piezo-loaded
    /// resonance, room temperature.
    fn default() -> Self {
        CantileverParams {
            spring_constant: 0.2,
            quality_factor: 124.0,
            mode_frequency: 745e3,
            fundamental_frequency: 13e3,
            temperature: 300.0,
        }
    }
}

fn check_power(power: f64) -> Result<()> {
    if power > 0.0 && power.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("optical power", power, "must be finite and > 0"))
    }
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("wavelength", wavelength, "must be > 0"))
    }
}

/// Shot-noise displacement PSD `hcλ/(8π²P)`.
pub fn snl_psd(power: f64, wavelength: f64) -> Result<f64> {
    check_power(power)?;
    check_wavelength(wavelength)?;
    Ok(PLANCK * SPEED_OF_LIGHT * wavelength / (8.0 * PI * PI * power))
}

/// Radiation-pressure displacement PSD `8PhQ²/(cλk²)`.
pub fn back_action_psd(power: f64, wavelength: f64, params: &CantileverParams) -> Result<f64> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::invalid("optical power", power, "must be finite and >= 0"));
    }
    check_wavelength(wavelength)?;
    params.validate()?;
    let q = params.quality_factor;
    let k = params.spring_constant;
    Ok(8.0 * power * PLANCK * q * q / (SPEED_OF_LIGHT * wavelength * k * k))
}

/// Whether detecting squeezed light adds back action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackActionModel {
    /// Back action independent of the readout squeezing.
    #[default]
    Unchanged,
    /// Back action grows by the same factor the optical floor shrinks.
    AntiSqueezed,
}

impl BackActionModel {
    fn factor(self, squeezing_db: f64) -> f64 {
        match self {
            BackActionModel::Unchanged => 1.0,
            BackActionModel::AntiSqueezed => db_to_ratio(squeezing_db),
        }
    }
}

impl FromStr for BackActionModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unchanged" => Ok(BackActionModel::Unchanged),
            "anti_squeezed" | "anti-squeezed" => Ok(BackActionModel::AntiSqueezed),
            _ => Err(Error::UnknownVariant {
                kind: "back-action model",
                value: s.to_string(),
                expected: "unchanged, anti_squeezed",
            }),
        }
    }
}

fn check_squeezing(db: f64) -> Result<()> {
    if db >= 0.0 && db.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("squeezing", db, "must be finite and >= 0 dB"))
    }
}

/// Power at which back action equals the squeezed optical floor,
/// `(cλk/(8πQ))·10^(−dB/20)`.
pub fn crossing_power(params: &CantileverParams, wavelength: f64, squeezing_db: f64) -> Result<f64> {
    params.validate()?;
    check_wavelength(wavelength)?;
    check_squeezing(squeezing_db)?;
    Ok(SPEED_OF_LIGHT * wavelength * params.spring_constant / (8.0 * PI * params.quality_factor)
        * 10f64.powf(-squeezing_db / 20.0))
}

/// [`crossing_power`] found numerically: bisection in log P on
/// `ln(back) − ln(snl·10^(−dB/10))`, which is monotone in P.
pub fn crossing_power_bisection(params: &CantileverParams, wavelength: f64, squeezing_db: f64) -> Result<f64> {
    check_squeezing(squeezing_db)?;
    let floor = db_to_ratio(-squeezing_db);
    let diff = |ln_p: f64| -> Result<f64> {
        let p = ln_p.exp();
        Ok(back_action_psd(p, wavelength, params)?.ln() - (snl_psd(p, wavelength)? * floor).ln())
    };
    let (mut lo, mut hi) = ((1e-30f64).ln(), (1e30f64).ln());
    if diff(lo)? > 0.0 || diff(hi)? < 0.0 {
        return Err(Error::InvalidRange("crossing power outside 1e-30..1e30 W".into()));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if diff(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Thermal displacement PSD of a damped harmonic oscillator at the
/// fundamental resonance (fluctuation-dissipation, one-sided):
/// `4k_BT/(k·ω0·Q) / ((1−(f/f0)²)² + (f/(f0·Q))²)`.
pub fn thermal_psd(frequency: f64, params: &CantileverParams) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(Error::invalid("frequency", frequency, "must be > 0"));
    }
    params.validate()?;
    let f0 = params.fundamental_frequency;
    let q = params.quality_factor;
    let w0 = 2.0 * PI * f0;
    let x = frequency / f0;
    let denom = (1.0 - x * x).powi(2) + (x / q).powi(2);
    Ok(4.0 * BOLTZMANN * params.temperature / (params.spring_constant * w0 * q) / denom)
}

/// How squeezing converts into a smaller resolvable displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementConvention {
    /// Displacement amplitude scales with the square root of the noise power,
    /// `x / 10^(dB/20)`.
    Amplitude,
    /// Displacement scales with the noise power itself, `x / 10^(dB/10)`;
    /// this is the arithmetic behind 392 fm → 156 fm at 4 dB.
    #[default]
    Power,
}

impl DisplacementConvention {
    pub fn name(self) -> &'static str {
        match self {
            DisplacementConvention::Amplitude => "amplitude",
            DisplacementConvention::Power => "power",
        }
    }
}

impl FromStr for DisplacementConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(DisplacementConvention::Amplitude),
            "power" => Ok(DisplacementConvention::Power),
            _ => Err(Error::UnknownVariant {
                kind: "displacement convention",
                value: s.to_string(),
                expected: "amplitude, power",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinDisplacement {
    /// m.
    pub value: f64,
    /// m, with no squeezing.
    pub coherent: f64,
    pub convention: DisplacementConvention,
}

/// Smallest displacement resolvable at SNR 1 in bandwidth `rbw`.
pub fn min_displacement(
    power: f64,
    wavelength: f64,
    rbw: f64,
    squeezing_db: f64,
    convention: DisplacementConvention,
) -> Result<MinDisplacement> {
    if !(rbw > 0.0) {
        return Err(Error::invalid("resolution bandwidth", rbw, "must be > 0"));
    }
    check_squeezing(squeezing_db)?;
    let coherent = (snl_psd(power, wavelength)? * rbw).sqrt();
    let divisor = match convention {
        DisplacementConvention::Amplitude => 10f64.powf(squeezing_db / 20.0),
        DisplacementConvention::Power => 10f64.powf(squeezing_db / 10.0),
    };
    Ok(MinDisplacement {
        value: coherent / divisor,
        coherent,
        convention,
    })
}

/// Inputs of a single budget evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetQuery {
    /// W.
    pub power: f64,
    /// m.
    pub wavelength: f64,
    /// Hz.
    pub frequency: f64,
    pub squeezing_db: f64,
    /// Measurement bandwidth for the minimum displacement, Hz.
    pub bandwidth: f64,
    pub back_action: BackActionModel,
    pub convention: DisplacementConvention,
}

impl Default for BudgetQuery {
    fn default() -> Self {
        BudgetQuery {
            power: 130e-6,
            wavelength: 795e-9,
            frequency: 745e3,
            squeezing_db: 0.0,
            bandwidth: 10e3,
            back_action: BackActionModel::Unchanged,
            convention: DisplacementConvention::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub query: BudgetQuery,
    pub thermal: f64,
    pub back_action: f64,
    pub shot_noise: f64,
    /// `back_action + shot_noise`.
    pub sql: f64,
    /// Squeezed optical floor plus (possibly anti-squeezed) back action.
    pub squeezed_floor: f64,
    /// Power where back action meets the squeezed optical floor, W.
    pub crossing_power: f64,
    pub min_displacement: MinDisplacement,
}

impl NoiseBudget {
    /// The optical floor (shot or squeezed) dominates back action.
    pub fn optical_limited(&self) -> bool {
        self.query.power < self.crossing_power
    }
}

pub fn noise_budget(query: &BudgetQuery, params: &CantileverParams) -> Result<NoiseBudget> {
    check_squeezing(query.squeezing_db)?;
    let shot_noise = snl_psd(query.power, query.wavelength)?;
    let back_action = back_action_psd(query.power, query.wavelength, params)?;
    let thermal = thermal_psd(query.frequency, params)?;
    let ba_factor = query.back_action.factor(query.squeezing_db);
    let squeezed_floor = shot_noise * db_to_ratio(-query.squeezing_db) + back_action * ba_factor;
    let crossing = crossing_power(params, query.wavelength, query.squeezing_db)? / ba_factor.sqrt();
    Ok(NoiseBudget {
        query: *query,
        thermal,
        back_action,
        shot_noise,
        sql: back_action + shot_noise,
        squeezed_floor,
        crossing_power: crossing,
        min_displacement: min_displacement(
            query.power,
            query.wavelength,
            query.bandwidth,
            query.squeezing_db,
            query.convention,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 795e-9;

    #[test]
    fn snl_scaling_and_domain() {
        let a = snl_psd(1e-4, LAMBDA).unwrap();
        assert_relative_eq!(snl_psd(4e-4, LAMBDA).unwrap(), a / 4.0, max_relative = 1e-14);
        assert!(snl_psd(0.0, LAMBDA).is_err());
        assert!(snl_psd(-1.0, LAMBDA).is_err());
    }

    #[test]
    fn back_action_structure() {
        let p = CantileverParams::default();
        assert_eq!(back_action_psd(0.0, LAMBDA, &p).unwrap(), 0.0);
        let base = back_action_psd(1e-4, LAMBDA, &p).unwrap();
        assert_relative_eq!(back_action_psd(2e-4, LAMBDA, &p).unwrap(), 2.0 * base, max_relative = 1e-14);
        let q2 = CantileverParams { quality_factor: 248.0, ..p };
        assert_relative_eq!(back_action_psd(1e-4, LAMBDA, &q2).unwrap(), 4.0 * base, max_relative = 1e-14);
        let k2 = CantileverParams { spring_constant: 0.4, ..p };
        assert_relative_eq!(back_action_psd(1e-4, LAMBDA, &k2).unwrap(), base / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn thermal_limits() {
        let cold = CantileverParams { temperature: 0.0, ..Default::default() };
        assert_eq!(thermal_psd(1e5, &cold).unwrap(), 0.0);
        let p = CantileverParams::default();
        assert!(thermal_psd(0.0, &p).is_err());
        // far above resonance the PSD falls as f^-4
        let r = thermal_psd(1e7, &p).unwrap() / thermal_psd(2e7, &p).unwrap();
        assert_relative_eq!(r, 16.0, max_relative = 1e-3);
    }

    #[test]
    fn thermal_below_shot_noise_at_readout_mode() {
        let p = CantileverParams::default();
        let thermal = thermal_psd(745e3, &p).unwrap().sqrt();
        let shot = snl_psd(130e-6, LAMBDA).unwrap().sqrt();
        assert!(thermal < shot, "{thermal} vs {shot}");
    }

    #[test]
    fn effective_mass_from_fundamental() {
        let p = CantileverParams::default();
        let m = p.effective_mass();
        let f = (p.spring_constant / m).sqrt() / (2.0 * PI);
        assert_relative_eq!(f, 13e3, max_relative = 1e-12);
    }

    #[test]
    fn min_displacement_rbw_scaling_and_conventions() {
        let a = min_displacement(130e-6, LAMBDA, 1e4, 0.0, DisplacementConvention::Power).unwrap();
        let b = min_displacement(130e-6, LAMBDA, 4e4, 0.0, DisplacementConvention::Power).unwrap();
        assert_relative_eq!(b.value, 2.0 * a.value, max_relative = 1e-14);
        let amp = min_displacement(130e-6, LAMBDA, 1e4, 4.0, DisplacementConvention::Amplitude).unwrap();
        let pap = min_displacement(130e-6, LAMBDA, 1e4, 4.0, DisplacementConvention::Power).unwrap();
        assert_relative_eq!(amp.value * amp.value, pap.value * a.value, max_relative = 1e-12);
        assert!("bogus".parse::<DisplacementConvention>().is_err());
        assert!(min_displacement(130e-6, LAMBDA, 0.0, 0.0, DisplacementConvention::Power).is_err());
    }

    #[test]
    fn budget_identity_and_zero_squeezing() {
        let b = noise_budget(&BudgetQuery::default(), &CantileverParams::default()).unwrap();
        assert_eq!(b.sql, b.back_action + b.shot_noise);
        assert_eq!(b.squeezed_floor, b.sql);
        assert!(b.optical_limited());
    }

    #[test]
    fn anti_squeezed_back_action_raises_floor() {
        let p = CantileverParams::default();
        for power in [1e-5, 1e-3, 1e-1] {
            let q = BudgetQuery { power, squeezing_db: 6.0, ..Default::default() };
            let plain = noise_budget(&q, &p).unwrap();
            let anti = noise_budget(&BudgetQuery { back_action: BackActionModel::AntiSqueezed, ..q }, &p).unwrap();
            assert!(anti.squeezed_floor >= plain.squeezed_floor);
            assert!(anti.crossing_power < plain.crossing_power);
        }
    }

    #[test]
    fn crossing_closed_form_vs_bisection() {
        let p = CantileverParams::default();
        for db in [0.0, 4.0, 13.0, 26.0] {
            let a = crossing_power(&p, LAMBDA, db).unwrap();
            let b = crossing_power_bisection(&p, LAMBDA, db).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
        assert!(crossing_power(&p, LAMBDA, -1.0).is_err());
    }
}
