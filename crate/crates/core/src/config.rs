//! TOML run configuration.
//!
//! Every section is optional and every key falls back to the laboratory
//! defaults. Dimensional values are strings with units:
//!
//! ```toml
//! seed = 7
//! output_dir = "results"
//!
//! [measurement]
//! power = "130 uW"
//! wavelength = "795 nm"
//! drive_calibration = "40 fm/mV"
//!
//! [cantilever]
//! spring_constant = "0.2 N/m"
//! quality_factor = 124
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Fig3aConfig, Fig3bConfig, Fig3cConfig, Fig4Config, MeasurementConfig, ReproductionConfig};
use crate::mechanics::{BackActionModel, BudgetQuery, CantileverParams, DisplacementConvention};
use crate::spatial::{ModeLayout, SplitDetectorGeometry};
use crate::timeseries::{SpectrumSettings, Window};
use crate::units::{AmperePerWatt, Hertz, Kelvin, Meter, MeterPerVolt, NewtonPerMeter, Quantity, Radian, Volt, Watt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit_plot_scripts: bool,
    pub source: SourceSection,
    pub measurement: MeasurementSection,
    pub cantilever: CantileverSection,
    pub budget: BudgetSection,
    /// Detector layout for gain sweeps; isolated at the measurement power when absent.
    pub layout: Option<ModeLayout>,
    pub fig3a: Fig3aSection,
    pub fig3b: Fig3bSection,
    pub fig3c: Fig3cSection,
    pub fig4: Fig4Section,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output_dir: PathBuf::from("results"),
            emit_plot_scripts: false,
            source: SourceSection::default(),
            measurement: MeasurementSection::default(),
            cantilever: CantileverSection::default(),
            budget: BudgetSection::default(),
            layout: None,
            fig3a: Fig3aSection::default(),
            fig3b: Fig3bSection::default(),
            fig3c: Fig3cSection::default(),
            fig4: Fig4Section::default(),
        }
    }
}

/// Four-wave-mixing source description. Recorded with the outputs; the
/// models take the squeezing level directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub pump_power: Quantity<Watt>,
    pub pump_waist: Quantity<Meter>,
    pub probe_waist: Quantity<Meter>,
    pub crossing_angle: Quantity<Radian>,
    pub cell_length: Quantity<Meter>,
    pub cell_temperature: Quantity<Kelvin>,
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            pump_power: Quantity::new(150e-3),
            pump_waist: Quantity::new(800e-6),
            probe_waist: Quantity::new(400e-6),
            crossing_angle: Quantity::new(0.3f64.to_radians()),
            cell_length: Quantity::new(12.7e-3),
            cell_temperature: Quantity::new(403.15),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementSection {
    /// Total optical power on the split detector.
    pub power: Quantity<Watt>,
    pub wavelength: Quantity<Meter>,
    pub detector_efficiency: f64,
    pub sample_rate: Quantity<Hertz>,
    pub modulation_frequency: Quantity<Hertz>,
    pub analysis_span: Quantity<Hertz>,
    pub rbw: Quantity<Hertz>,
    pub vbw: Quantity<Hertz>,
    pub averages: usize,
    pub window: Window,
    pub drive_calibration: Quantity<MeterPerVolt>,
    pub beam_waist: Quantity<Meter>,
    pub responsivity: Quantity<AmperePerWatt>,
    /// Electronic noise power relative to the shot noise at `power`.
    pub electronic_noise: f64,
    pub gap: Quantity<Meter>,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        MeasurementSection::from(&MeasurementConfig::default())
    }
}

impl From<&MeasurementConfig> for MeasurementSection {
    fn from(m: &MeasurementConfig) -> Self {
        MeasurementSection {
            power: Quantity::new(m.power),
            wavelength: Quantity::new(m.wavelength),
            detector_efficiency: m.detector_efficiency,
            sample_rate: Quantity::new(m.sample_rate),
            modulation_frequency: Quantity::new(m.modulation_frequency),
            analysis_span: Quantity::new(m.analysis_span),
            rbw: Quantity::new(m.spectrum.rbw),
            vbw: Quantity::new(m.spectrum.vbw),
            averages: m.spectrum.averages,
            window: m.spectrum.window,
            drive_calibration: Quantity::new(m.drive_calibration),
            beam_waist: Quantity::new(m.geometry.beam_waist),
            responsivity: Quantity::new(m.geometry.responsivity),
            electronic_noise: m.geometry.electronic_noise_psd,
            gap: Quantity::new(m.geometry.gap),
        }
    }
}

impl MeasurementSection {
    pub fn resolve(&self) -> Result<MeasurementConfig> {
        if !(0.0..=1.0).contains(&self.detector_efficiency) || self.detector_efficiency == 0.0 {
            return Err(Error::Config(format!(
                "measurement.detector_efficiency = {} must lie in (0, 1]",
                self.detector_efficiency
            )));
        }
        if !(self.power.si() > 0.0) {
            return Err(Error::Config("measurement.power must be > 0".into()));
        }
        if !(self.wavelength.si() > 0.0) {
            return Err(Error::Config("measurement.wavelength must be > 0".into()));
        }
        if self.averages == 0 {
            return Err(Error::Config("measurement.averages must be >= 1".into()));
        }
        Ok(MeasurementConfig {
            power: self.power.si(),
            wavelength: self.wavelength.si(),
            detector_efficiency: self.detector_efficiency,
            sample_rate: self.sample_rate.si(),
            modulation_frequency: self.modulation_frequency.si(),
            analysis_span: self.analysis_span.si(),
            spectrum: SpectrumSettings {
                rbw: self.rbw.si(),
                vbw: self.vbw.si(),
                averages: self.averages,
                window: self.window,
            },
            drive_calibration: self.drive_calibration.si(),
            geometry: SplitDetectorGeometry::new(
                self.beam_waist.si(),
                self.responsivity.si(),
                self.electronic_noise,
                self.gap.si(),
            )?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CantileverSection {
    pub spring_constant: Quantity<NewtonPerMeter>,
    pub quality_factor: f64,
    pub mode_frequency: Quantity<Hertz>,
    pub fundamental_frequency: Quantity<Hertz>,
    pub temperature: Quantity<Kelvin>,
}

impl Default for CantileverSection {
    fn default() -> Self {
        let p = CantileverParams::default();
        CantileverSection {
            spring_constant: Quantity::new(p.spring_constant),
            quality_factor: p.quality_factor,
            mode_frequency: Quantity::new(p.mode_frequency),
            fundamental_frequency: Quantity::new(p.fundamental_frequency),
            temperature: Quantity::new(p.temperature),
        }
    }
}

impl CantileverSection {
    pub fn resolve(&self) -> Result<CantileverParams> {
        CantileverParams::new(
            self.spring_constant.si(),
            self.quality_factor,
            self.mode_frequency.si(),
            self.fundamental_frequency.si(),
            self.temperature.si(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Defaults to the measurement power.
    pub power: Option<Quantity<Watt>>,
    pub squeezing_db: f64,
    /// Defaults to the measurement RBW.
    pub bandwidth: Option<Quantity<Hertz>>,
    pub back_action: BackActionModel,
    pub convention: DisplacementConvention,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            power: None,
            squeezing_db: 0.0,
            bandwidth: None,
            back_action: BackActionModel::Unchanged,
            convention: DisplacementConvention::Power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3aSection {
    pub source_squeezing_db: f64,
    pub probe_transmission: f64,
    pub points: usize,
    pub displacement: Quantity<Meter>,
    pub monte_carlo_samples: usize,
}

impl Default for Fig3aSection {
    fn default() -> Self {
        let c = Fig3aConfig::default();
        Fig3aSection {
            source_squeezing_db: c.source_squeezing_db,
            probe_transmission: c.probe_transmission,
            points: c.points,
            displacement: Quantity::new(c.displacement),
            monte_carlo_samples: c.monte_carlo_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3bSection {
    pub squeezing_db: f64,
    pub drives: Vec<Quantity<Volt>>,
}

impl Default for Fig3bSection {
    fn default() -> Self {
        let c = Fig3bConfig::default();
        Fig3bSection {
            squeezing_db: c.squeezing_db,
            drives: c.drives.iter().map(|&v| Quantity::new(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3cSection {
    pub squeezing_db: f64,
    pub drives: Vec<Quantity<Volt>>,
}

impl Default for Fig3cSection {
    fn default() -> Self {
        let c = Fig3cConfig::default();
        Fig3cSection {
            squeezing_db: c.squeezing_db,
            drives: c.drives.iter().map(|&v| Quantity::new(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Section {
    pub squeezing_db: f64,
    pub powers: Vec<Quantity<Watt>>,
    pub drive: Quantity<Volt>,
    pub theory_squeezing_db: Vec<f64>,
    pub theory_power_min: Quantity<Watt>,
    pub theory_power_max: Quantity<Watt>,
    pub theory_points: usize,
}

impl Default for Fig4Section {
    fn default() -> Self {
        let c = Fig4Config::default();
        Fig4Section {
            squeezing_db: c.squeezing_db,
            powers: c.powers.iter().map(|&p| Quantity::new(p)).collect(),
            drive: Quantity::new(c.drive),
            theory_squeezing_db: c.theory_squeezing_db.clone(),
            theory_power_min: Quantity::new(c.theory_power_range.0),
            theory_power_max: Quantity::new(c.theory_power_range.1),
            theory_points: c.theory_points,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn reproduction(&self) -> Result<ReproductionConfig> {
        let volts = |v: &[Quantity<Volt>]| v.iter().map(|q| q.si()).collect::<Vec<_>>();
        Ok(ReproductionConfig {
            seed: self.seed,
            measurement: self.measurement.resolve()?,
            cantilever: self.cantilever.resolve()?,
            fig3a: Fig3aConfig {
                source_squeezing_db: self.fig3a.source_squeezing_db,
                probe_transmission: self.fig3a.probe_transmission,
                points: self.fig3a.points,
                displacement: self.fig3a.displacement.si(),
                monte_carlo_samples: self.fig3a.monte_carlo_samples,
            },
            fig3b: Fig3bConfig {
                squeezing_db: self.fig3b.squeezing_db,
                drives: volts(&self.fig3b.drives),
            },
            fig3c: Fig3cConfig {
                squeezing_db: self.fig3c.squeezing_db,
                drives: volts(&self.fig3c.drives),
            },
            fig4: Fig4Config {
                squeezing_db: self.fig4.squeezing_db,
                powers: self.fig4.powers.iter().map(|q| q.si()).collect(),
                drive: self.fig4.drive.si(),
                theory_squeezing_db: self.fig4.theory_squeezing_db.clone(),
                theory_power_range: (self.fig4.theory_power_min.si(), self.fig4.theory_power_max.si()),
                theory_points: self.fig4.theory_points,
            },
        })
    }

    pub fn budget_query(&self) -> Result<BudgetQuery> {
        let m = self.measurement.resolve()?;
        Ok(BudgetQuery {
            power: self.budget.power.map_or(m.power, |q| q.si()),
            wavelength: m.wavelength,
            frequency: self.cantilever.mode_frequency.si(),
            squeezing_db: self.budget.squeezing_db,
            bandwidth: self.budget.bandwidth.map_or(m.spectrum.rbw, |q| q.si()),
            back_action: self.budget.back_action,
            convention: self.budget.convention,
        })
    }

    pub fn layout(&self) -> Result<ModeLayout> {
        match &self.layout {
            Some(l) => Ok(l.clone()),
            None => {
                let m = self.measurement.resolve()?;
                ModeLayout::isolated(m.power, m.detector_efficiency)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.reproduction().unwrap().measurement, MeasurementConfig::default());
        assert_eq!(c.budget_query().unwrap(), BudgetQuery::default());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = RunConfig::from_toml("[measurement]\npower = \"1 mW\"\nlaser = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("laser"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn missing_unit_rejected() {
        assert!(RunConfig::from_toml("[measurement]\npower = \"130\"\n").is_err());
        assert!(RunConfig::from_toml("[measurement]\npower = 130e-6\n").is_err());
        assert!(RunConfig::from_toml("[measurement]\npower = \"130 um\"\n").is_err());
    }

    #[test]
    fn units_are_scaled() {
        let c = RunConfig::from_toml(
            "[measurement]\npower = \"60 uW\"\ndrive_calibration = \"40 fm/mV\"\n[fig4]\npowers = [\"1 mW\"]\n",
        )
        .unwrap();
        let r = c.reproduction().unwrap();
        assert!((r.measurement.power - 60e-6).abs() < 1e-18);
        assert!((r.measurement.drive_calibration - 4e-11).abs() < 1e-24);
        assert_eq!(r.fig4.powers, vec![1e-3]);
    }

    #[test]
    fn layout_section() {
        let c = RunConfig::from_toml(
            "[layout]\ntotal_power = \"1 mW\"\nisolated_power = \"0.5 mW\"\ndetector_efficiency = 0.96\n\
             [[layout.split_modes]]\npower = \"0.5 mW\"\noverlap = 0.7\n",
        )
        .unwrap();
        assert_eq!(c.layout().unwrap().split_modes().len(), 1);
        let bad = RunConfig::from_toml(
            "[layout]\ntotal_power = \"1 mW\"\nisolated_power = \"0.4 mW\"\ndetector_efficiency = 0.96\n",
        );
        assert!(bad.is_err());
    }
}
