//! Reproduction scenarios for the aperture sweep, the spectrum-analyzer
//! traces, the SNR-versus-drive curves and the power dependence of the
//! displacement sensitivity.
//!
//! Every scenario returns CSV tables and an anchor report. An anchor binds a
//! computed number to a reported value, an independent oracle, or nothing at
//! all (informational).

mod fig3;
mod fig4;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use fig3::{run_fig3a, run_fig3b, run_fig3c};
pub use fig4::run_fig4;

use crate::error::{Error, Result};
use crate::mechanics::CantileverParams;
use crate::quanta::Gain;
use crate::spatial::{gain_for_squeezing, snl_matched_lever_gain, ModeLayout, SplitDetectorGeometry};
use crate::timeseries::{
    simulate_photocurrents, spectrum_analyze, white_psd, ChannelModel, Modulation, SimulationRun, SpectrumSettings,
    SpectrumTrace, Window,
};
use crate::units::{photon_energy, photon_rate};

pub const SCENARIOS: [&str; 4] = ["fig3a", "fig3b", "fig3c", "fig4"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    /// A value reported for the real experiment.
    Reported,
    /// An independent calculation of the same quantity.
    Derived,
    /// Recorded but never fails.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub quantity: String,
    pub unit: String,
    pub expected: f64,
    /// Absolute half-width of the acceptance band; `None` when informational.
    pub tolerance: Option<f64>,
    pub got: f64,
    pub pass: bool,
    pub kind: AnchorKind,
    pub provenance: String,
}

impl Anchor {
    pub fn check(
        kind: AnchorKind,
        quantity: &str,
        unit: &str,
        expected: f64,
        tolerance: f64,
        got: f64,
        provenance: &str,
    ) -> Self {
        Anchor {
            quantity: quantity.into(),
            unit: unit.into(),
            expected,
            tolerance: Some(tolerance),
            got,
            pass: (got - expected).abs() <= tolerance,
            kind,
            provenance: provenance.into(),
        }
    }

    /// Passes when `got` lies in `[lo, hi]`.
    pub fn band(kind: AnchorKind, quantity: &str, unit: &str, lo: f64, hi: f64, got: f64, provenance: &str) -> Self {
        Anchor::check(kind, quantity, unit, 0.5 * (lo + hi), 0.5 * (hi - lo), got, provenance)
    }

    /// A yes/no property, recorded as 1 or 0.
    pub fn holds(kind: AnchorKind, quantity: &str, holds: bool, provenance: &str) -> Self {
        Anchor::check(kind, quantity, "bool", 1.0, 0.0, if holds { 1.0 } else { 0.0 }, provenance)
    }

    pub fn informational(quantity: &str, unit: &str, expected: f64, got: f64, provenance: &str) -> Self {
        Anchor {
            quantity: quantity.into(),
            unit: unit.into(),
            expected,
            tolerance: None,
            got,
            pass: true,
            kind: AnchorKind::Informational,
            provenance: provenance.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub scenario: String,
    pub seed: u64,
    pub anchors: Vec<Anchor>,
}

impl AnchorReport {
    pub fn passed(&self) -> bool {
        self.anchors.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Anchor> {
        self.anchors.iter().filter(|a| !a.pass)
    }

    pub fn get(&self, quantity: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.quantity == quantity)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("anchor report is plain data");
        s.push('\n');
        s
    }
}

/// A numeric table whose CSV header names each column with its unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// `(name, unit)`; an empty unit marks a dimensionless column.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|(c, u)| (c.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn header(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|(c, u)| if u.is_empty() { format!("{c} [1]") } else { format!("{c} [{u}]") })
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|(c, _)| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Shortest round-trip text; exponent notation outside `[1e-3, 1e6)`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-3..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub report: AnchorReport,
    pub tables: Vec<Table>,
}

impl ScenarioOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<table>.csv` for every table and `<scenario>_anchors.json`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?)?;
            written.push(path);
        }
        let path = dir.join(format!("{}_anchors.json", self.report.scenario));
        fs::write(&path, self.report.to_json())?;
        written.push(path);
        Ok(written)
    }
}

/// Detection chain shared by the time-domain scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Total optical power on the split detector (W).
    pub power: f64,
    /// m.
    pub wavelength: f64,
    pub detector_efficiency: f64,
    /// Hz.
    pub sample_rate: f64,
    /// Cantilever drive frequency (Hz).
    pub modulation_frequency: f64,
    /// Band above the modulation frequency kept below Nyquist (Hz).
    pub analysis_span: f64,
    pub spectrum: SpectrumSettings,
    /// Peak displacement per volt of piezo drive (m/V).
    pub drive_calibration: f64,
    pub geometry: SplitDetectorGeometry,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            power: 130e-6,
            wavelength: 795e-9,
            detector_efficiency: 0.96,
            sample_rate: 2e6,
            modulation_frequency: 745e3,
            analysis_span: 100e3,
            spectrum: SpectrumSettings {
                rbw: 10e3,
                vbw: 100.0,
                averages: 20,
                window: Window::FlatTop,
            },
            drive_calibration: 40e-15 / 1e-3,
            geometry: SplitDetectorGeometry::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3aConfig {
    /// Intensity-difference squeezing of the source with no loss (dB).
    pub source_squeezing_db: f64,
    pub probe_transmission: f64,
    /// Grid points over conjugate transmission `0..=1`.
    pub points: usize,
    /// rms cantilever displacement giving the signal (m).
    pub displacement: f64,
    /// Samples of the Monte Carlo check at full conjugate transmission.
    pub monte_carlo_samples: usize,
}

impl Default for Fig3aConfig {
    fn default() -> Self {
        Fig3aConfig {
            source_squeezing_db: 4.5,
            probe_transmission: 0.5,
            points: 101,
            displacement: 10e-15,
            monte_carlo_samples: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3bConfig {
    /// Squeezing measured at the detector (dB).
    pub squeezing_db: f64,
    /// Piezo drive amplitudes (V).
    pub drives: Vec<f64>,
}

impl Default for Fig3bConfig {
    fn default() -> Self {
        Fig3bConfig {
            squeezing_db: 4.0,
            drives: vec![0.0, 30e-3, 60e-3, 90e-3, 120e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3cConfig {
    pub squeezing_db: f64,
    /// V.
    pub drives: Vec<f64>,
}

impl Default for Fig3cConfig {
    fn default() -> Self {
        Fig3cConfig {
            squeezing_db: 3.0,
            drives: (2..=17).map(|i| i as f64 * 10e-3).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Config {
    /// Squeezing at the detector with electronics subtracted (dB).
    pub squeezing_db: f64,
    /// Total detected powers of the measured points (W).
    pub powers: Vec<f64>,
    /// Piezo drive used to infer the minimum displacement (V).
    pub drive: f64,
    /// Squeezing levels of the theory curves (dB).
    pub theory_squeezing_db: Vec<f64>,
    /// Power range of the theory curves (W).
    pub theory_power_range: (f64, f64),
    pub theory_points: usize,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Fig4Config {
            squeezing_db: 2.8,
            powers: vec![40e-6, 60e-6, 80e-6, 100e-6, 130e-6],
            drive: 100e-3,
            theory_squeezing_db: vec![0.0, 4.0, 13.0, 26.0],
            theory_power_range: (10e-6, 100e-3),
            theory_points: 61,
        }
    }
}

/// Everything the scenarios read.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReproductionConfig {
    pub seed: u64,
    pub measurement: MeasurementConfig,
    pub cantilever: CantileverParams,
    pub fig3a: Fig3aConfig,
    pub fig3b: Fig3bConfig,
    pub fig3c: Fig3cConfig,
    pub fig4: Fig4Config,
}

/// Runs a scenario by name.
pub fn run_scenario(name: &str, config: &ReproductionConfig) -> Result<ScenarioOutput> {
    match name {
        "fig3a" => run_fig3a(config),
        "fig3b" => run_fig3b(config),
        "fig3c" => run_fig3c(config),
        "fig4" => run_fig4(config),
        _ => Err(Error::UnknownVariant {
            kind: "scenario",
            value: name.to_string(),
            expected: "fig3a, fig3b, fig3c, fig4, all",
        }),
    }
}

/// Independent child seed for stream `index` of scenario `tag`
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut z = seed;
    for b in tag.bytes().chain(index.to_le_bytes()) {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15 ^ u64::from(b));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Channel statistics and signal scaling of one squeezed or coherent
/// measurement at a given total power.
pub struct Bench {
    pub m: MeasurementConfig,
    pub squeezed: ChannelModel,
    pub coherent: ChannelModel,
    pub lever_gain: f64,
    pub probe_power: f64,
    /// Electronic variance per channel (photons/sample)².
    pub electronic: f64,
    /// PSD of the coherent differential at this power.
    pub snl_psd: f64,
}

impl Bench {
    /// Source gain that shows `squeezing_db` on the isolated layout.
    pub fn gain(m: &MeasurementConfig, squeezing_db: f64) -> Result<Gain> {
        let layout = ModeLayout::isolated(m.power, m.detector_efficiency)?;
        gain_for_squeezing(&layout, squeezing_db)
    }

    /// `electronic_rel` is the total electronic differential variance
    /// relative to the shot noise at the reference power `m.power`.
    pub fn new(m: &MeasurementConfig, gain: Gain, power: f64, electronic_rel: f64) -> Result<Self> {
        let layout = ModeLayout::isolated(power, m.detector_efficiency)?;
        let squeezed = ChannelModel::from_layout(&layout, gain, m.wavelength, m.sample_rate)?;
        let coherent = squeezed.coherent_like();
        let per_sample = |w: f64| w * photon_energy(m.wavelength) * m.sample_rate;
        let probe_power = per_sample(squeezed.probe_mean());
        let total_power = per_sample(squeezed.total_mean());
        let reference_counts = photon_rate(m.power, m.wavelength) / m.sample_rate;
        Ok(Bench {
            m: *m,
            lever_gain: snl_matched_lever_gain(&m.geometry, m.wavelength, probe_power, total_power),
            probe_power,
            electronic: electronic_rel * reference_counts / 4.0,
            snl_psd: white_psd(squeezed.total_mean(), m.sample_rate),
            squeezed,
            coherent,
        })
    }

    pub fn electronic_psd(&self) -> f64 {
        white_psd(4.0 * self.electronic, self.m.sample_rate)
    }

    /// Spectrum of the differential photocurrent for a peak cantilever
    /// displacement `displacement`.
    pub fn trace(&self, squeezed: bool, displacement: f64, seed: u64) -> Result<SpectrumTrace> {
        let m = &self.m;
        let modulation = if displacement == 0.0 {
            None
        } else {
            Some(Modulation::from_displacement(
                m.modulation_frequency,
                displacement,
                self.lever_gain,
                &m.geometry,
                self.probe_power,
                m.wavelength,
                m.sample_rate,
            )?)
        };
        let run = SimulationRun {
            sample_rate: m.sample_rate,
            samples: m.spectrum.required_samples(m.sample_rate),
            seed,
            channels: if squeezed { self.squeezed.clone() } else { self.coherent.clone() },
            modulation,
            electronic_noise: self.electronic,
            analysis_span: m.analysis_span,
        };
        let currents = simulate_photocurrents(&run)?;
        spectrum_analyze(&currents.differential(), m.sample_rate, &m.spectrum)
    }
}

/// Minimum displacement inferred from a peak of SNR `snr_db` produced by an
/// rms displacement `rms`: the displacement whose signal equals the noise.
pub fn inferred_min_displacement(rms: f64, snr_db: f64) -> f64 {
    let s_over_n = 10f64.powf(snr_db / 10.0) - 1.0;
    rms / s_over_n.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_header_carries_units() {
        let mut t = Table::new("t", &[("power", "W"), ("ratio", "")]);
        t.push(vec![1.5e-4, 2.0]);
        assert_eq!(t.to_csv().unwrap(), "power [W],ratio [1]\n1.5e-4,2\n");
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, "fig3b", 0);
        assert_ne!(a, derive_seed(1, "fig3b", 1));
        assert_ne!(a, derive_seed(1, "fig3c", 0));
        assert_ne!(a, derive_seed(2, "fig3b", 0));
        assert_eq!(a, derive_seed(1, "fig3b", 0));
    }

    #[test]
    fn band_anchor() {
        assert!(Anchor::band(AnchorKind::Reported, "x", "dB", 2.4, 2.9, 2.6, "").pass);
        assert!(!Anchor::band(AnchorKind::Reported, "x", "dB", 2.4, 2.9, 3.0, "").pass);
        let mut r = AnchorReport {
            scenario: "s".into(),
            seed: 0,
            anchors: vec![Anchor::informational("i", "", 0.27, 0.5, "")],
        };
        assert!(r.passed());
        r.anchors.push(Anchor::holds(AnchorKind::Derived, "p", false, ""));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn inferred_displacement_at_unit_snr() {
        assert!((inferred_min_displacement(3.0, 10.0 * 2f64.log10()) - 3.0).abs() < 1e-12);
    }
}
