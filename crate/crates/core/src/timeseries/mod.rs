//! Time-domain Monte Carlo of split-detector photocurrents and spectrum
//! analyzer emulation.
//!
//! Photocurrents are photon counts per sample on four channels: probe and
//! conjugate, each on the left and right detector half. Shot noise is
//! replaced by Gaussian noise of equal variance. The split detector sums both
//! beams on each half, so the recorded differential signal is
//! `(PL + CL) − (PR + CR)`; mirror-image twin pairs land on opposite halves
//! and their correlated noise cancels in that difference.

mod spectrum;

pub use spectrum::{
    extract_snr, noise_floor, spectrum_analyze, FloorEstimate, SpectrumSettings, SpectrumTrace, Window,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quanta::{Gain, LossChannel, TwinBeamState};
use crate::spatial::{displacement_signal, ModeLayout, SplitDetectorGeometry};
use crate::units::{photon_energy, photon_rate};

pub const PROBE_LEFT: usize = 0;
pub const PROBE_RIGHT: usize = 1;
pub const CONJ_LEFT: usize = 2;
pub const CONJ_RIGHT: usize = 3;

/// Weights of the four channels in the split-detector difference.
pub const DIFFERENTIAL: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Samples generated from one random substream. Fixed so that output does
/// not depend on how chunks are scheduled.
pub const CHUNK_LEN: usize = 4096;

/// Which half the probe member of a twin pair lands on; its conjugate
/// partner lands on the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOrientation {
    ProbeLeft,
    ProbeRight,
}

/// Per-sample means and covariance of the four channels (photons/sample).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelModel {
    pub means: [f64; 4],
    pub covariance: [[f64; 4]; 4],
}

impl ChannelModel {
    pub fn new(means: [f64; 4], covariance: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..i {
                let (a, b) = (covariance[i][j], covariance[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotPositiveSemidefinite { pivot: i, value: a - b });
                }
            }
        }
        cholesky_psd(&covariance)?;
        Ok(ChannelModel { means, covariance })
    }

    pub fn empty() -> Self {
        ChannelModel {
            means: [0.0; 4],
            covariance: [[0.0; 4]; 4],
        }
    }

    /// Adds an independent twin pair; `state` rates are converted to counts
    /// per sample of length `dt`.
    pub fn add_pair(&mut self, state: &TwinBeamState, orientation: PairOrientation, dt: f64) {
        let (p, c) = match orientation {
            PairOrientation::ProbeLeft => (PROBE_LEFT, CONJ_RIGHT),
            PairOrientation::ProbeRight => (PROBE_RIGHT, CONJ_LEFT),
        };
        self.means[p] += state.mean_probe * dt;
        self.means[c] += state.mean_conj * dt;
        let [[vp, cov], [_, vc]] = state.number_cov;
        self.covariance[p][p] += vp * dt;
        self.covariance[c][c] += vc * dt;
        self.covariance[p][c] += cov * dt;
        self.covariance[c][p] += cov * dt;
    }

    /// A single twin pair, probe on the left half.
    pub fn from_pair(state: &TwinBeamState, sample_rate: f64) -> Self {
        let mut m = ChannelModel::empty();
        m.add_pair(state, PairOrientation::ProbeLeft, 1.0 / sample_rate);
        m
    }

    /// Channel statistics realizing the split-detector layout.
    ///
    /// Isolated power forms two mirror pairs, one per orientation, detected
    /// with `η_d`. A split mode of power `P_i` is a pair of undetected power
    /// `P_i/η_d` seen with its effective efficiency `η_i`. The differential
    /// variance divided by the shot noise of `P0` then equals
    /// [`split_detector_noise`](crate::spatial::split_detector_noise).
    pub fn from_layout(layout: &ModeLayout, gain: Gain, wavelength: f64, sample_rate: f64) -> Result<Self> {
        let eta_d = layout.detector_efficiency();
        if !(eta_d > 0.0) {
            return Err(Error::invalid("detector efficiency", eta_d, "must be > 0"));
        }
        let dt = 1.0 / sample_rate;
        let amp = 2.0 * gain.value() - 1.0;
        let detector = LossChannel::new(eta_d)?;
        let mut model = ChannelModel::empty();

        let half = photon_rate(layout.isolated_power() / 2.0, wavelength);
        let isolated = TwinBeamState::amplify(half / (eta_d * amp), gain, wavelength)?.apply_loss(detector, detector);
        model.add_pair(&isolated, PairOrientation::ProbeLeft, dt);
        model.add_pair(&isolated, PairOrientation::ProbeRight, dt);

        for (i, mode) in layout.split_modes().iter().enumerate() {
            let eta = LossChannel::new(mode.overlap)?;
            let seed = photon_rate(mode.power, wavelength) / (eta_d * amp);
            let state = TwinBeamState::amplify(seed, gain, wavelength)?.apply_loss(eta, eta);
            let orientation = if i % 2 == 0 {
                PairOrientation::ProbeLeft
            } else {
                PairOrientation::ProbeRight
            };
            model.add_pair(&state, orientation, dt);
        }
        Ok(model)
    }

    /// Coherent beams with the same channel means: uncorrelated shot noise.
    pub fn coherent_like(&self) -> Self {
        let mut cov = [[0.0; 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = self.means[i];
        }
        ChannelModel {
            means: self.means,
            covariance: cov,
        }
    }

    pub fn total_mean(&self) -> f64 {
        self.means.iter().sum()
    }

    pub fn probe_mean(&self) -> f64 {
        self.means[PROBE_LEFT] + self.means[PROBE_RIGHT]
    }

    pub fn differential_mean(&self) -> f64 {
        (0..4).map(|i| DIFFERENTIAL[i] * self.means[i]).sum()
    }

    pub fn differential_variance(&self) -> f64 {
        let mut v = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                v += DIFFERENTIAL[i] * DIFFERENTIAL[j] * self.covariance[i][j];
            }
        }
        v
    }
}

/// Lower-triangular `L` with `L·Lᵀ = cov`, tolerating semidefinite input.
pub fn cholesky_psd(cov: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    let scale = (0..4).map(|i| cov[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut l = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut d = cov[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -tol {
            return Err(Error::NotPositiveSemidefinite { pivot: j, value: d });
        }
        if d <= tol {
            // degenerate direction: the rest of the column must vanish too
            for i in j + 1..4 {
                let mut s = cov[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if s.abs() > 1e-6 * scale {
                    return Err(Error::NotPositiveSemidefinite { pivot: j, value: d });
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..4 {
            let mut s = cov[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// Sinusoidal cantilever motion seen as an antisymmetric shift of the probe
/// between the detector halves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Modulation {
    /// Hz.
    pub frequency: f64,
    /// Peak differential signal, photons per sample.
    pub differential_amplitude: f64,
}

impl Modulation {
    /// Modulation produced by a cantilever displacement of peak amplitude
    /// `displacement` (m), magnified by `lever_gain` onto a split detector
    /// receiving `probe_power` (W) of displaced probe light.
    pub fn from_displacement(
        frequency: f64,
        displacement: f64,
        lever_gain: f64,
        geometry: &SplitDetectorGeometry,
        probe_power: f64,
        wavelength: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        let watts = displacement_signal(lever_gain * displacement, geometry, probe_power)?;
        Ok(Modulation {
            frequency,
            differential_amplitude: watts / photon_energy(wavelength) / sample_rate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRun {
    /// Hz.
    pub sample_rate: f64,
    pub samples: usize,
    pub seed: u64,
    pub channels: ChannelModel,
    pub modulation: Option<Modulation>,
    /// Electronic noise variance added independently to every channel,
    /// (photons/sample)².
    pub electronic_noise: f64,
    /// Bandwidth above the modulation frequency that must stay below Nyquist.
    pub analysis_span: f64,
}

impl SimulationRun {
    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) {
            return Err(Error::invalid("sample rate", self.sample_rate, "must be > 0"));
        }
        if !(self.electronic_noise >= 0.0) {
            return Err(Error::invalid("electronic noise", self.electronic_noise, "must be >= 0"));
        }
        let edge = self.modulation.map_or(0.0, |m| m.frequency) + self.analysis_span;
        if self.sample_rate <= 2.0 * edge {
            return Err(Error::Undersampled {
                sample_rate: self.sample_rate,
                band_edge: edge,
            });
        }
        Ok(())
    }
}

/// Four-channel sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Photocurrents {
    pub sample_rate: f64,
    pub samples: Vec<[f64; 4]>,
}

impl Photocurrents {
    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[index]).collect()
    }

    /// `(PL + CL) − (PR + CR)`.
    pub fn differential(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s[0] * DIFFERENTIAL[0] + s[1] * DIFFERENTIAL[1] + s[2] * DIFFERENTIAL[2] + s[3] * DIFFERENTIAL[3])
            .collect()
    }
}

/// Generates the photocurrents of `run`.
///
/// Chunk `c` of [`CHUNK_LEN`] samples draws from ChaCha8 stream `c` of
/// `run.seed`, so output is bit-identical for any thread count.
pub fn simulate_photocurrents(run: &SimulationRun) -> Result<Photocurrents> {
    run.validate()?;
    let l = cholesky_psd(&run.channels.covariance)?;
    let means = run.channels.means;
    let e_sigma = run.electronic_noise.sqrt();
    let modulation = run.modulation;
    let dt = 1.0 / run.sample_rate;

    let mut samples = vec![[0.0f64; 4]; run.samples];
    samples
        .par_chunks_mut(CHUNK_LEN)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            rng.set_stream(chunk as u64);
            let start = chunk * CHUNK_LEN;
            for (offset, s) in out.iter_mut().enumerate() {
                let mut z = [0.0f64; 4];
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                for i in 0..4 {
                    let mut x = means[i];
                    for (k, zk) in z.iter().enumerate().take(i + 1) {
                        x += l[i][k] * zk;
                    }
                    s[i] = x;
                }
                if e_sigma > 0.0 {
                    for si in s.iter_mut() {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        *si += e_sigma * e;
                    }
                }
                if let Some(m) = modulation {
                    let t = (start + offset) as f64 * dt;
                    let half = 0.5 * m.differential_amplitude * (2.0 * std::f64::consts::PI * m.frequency * t).sin();
                    s[PROBE_LEFT] += half;
                    s[PROBE_RIGHT] -= half;
                }
            }
        });
    Ok(Photocurrents {
        sample_rate: run.sample_rate,
        samples,
    })
}

/// One-sided PSD of white noise with per-sample variance `variance`.
pub fn white_psd(variance: f64, sample_rate: f64) -> f64 {
    2.0 * variance / sample_rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 795e-9;

    fn identity_run(samples: usize, seed: u64) -> SimulationRun {
        let mut cov = [[0.0; 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 1e6;
        }
        SimulationRun {
            sample_rate: 2e6,
            samples,
            seed,
            channels: ChannelModel::new([1e6; 4], cov).unwrap(),
            modulation: None,
            electronic_noise: 0.0,
            analysis_span: 0.0,
        }
    }

    #[test]
    fn non_psd_covariance_rejected() {
        let mut cov = [[0.0; 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        cov[0][1] = 2.0;
        cov[1][0] = 2.0;
        assert!(matches!(
            ChannelModel::new([0.0; 4], cov),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn cholesky_reconstructs() {
        let state = TwinBeamState::amplify(1e9, Gain::new(3.0).unwrap(), LAMBDA).unwrap();
        let m = ChannelModel::from_pair(&state, 1e6);
        let l = cholesky_psd(&m.covariance).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * l[j][k]).sum();
                assert_relative_eq!(v, m.covariance[i][j], epsilon = 1e-6 * m.covariance[0][0]);
            }
        }
    }

    #[test]
    fn layout_model_reproduces_split_detector_noise() {
        use crate::spatial::{split_detector_noise, SplitMode};
        let layout = ModeLayout::new(
            130e-6,
            100e-6,
            vec![
                SplitMode { power: 20e-6, overlap: 0.7 },
                SplitMode { power: 10e-6, overlap: 0.9 },
            ],
            0.96,
        )
        .unwrap();
        let gain = Gain::new(2.4).unwrap();
        let fs = 2e6;
        let m = ChannelModel::from_layout(&layout, gain, LAMBDA, fs).unwrap();
        let snl = photon_rate(layout.total_power(), LAMBDA) / fs;
        assert_relative_eq!(
            m.differential_variance() / snl,
            split_detector_noise(&layout, gain).unwrap(),
            max_relative = 1e-12
        );
        let coh = m.coherent_like();
        assert_relative_eq!(coh.differential_variance(), coh.total_mean(), max_relative = 1e-15);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let run = identity_run(20_000, 7);
        let a = simulate_photocurrents(&run).unwrap();
        let b = simulate_photocurrents(&run).unwrap();
        assert_eq!(a, b);
        let c = simulate_photocurrents(&SimulationRun { seed: 8, ..run }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let run = identity_run(50_000, 11);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_photocurrents(&run).unwrap());
        let b = four.install(|| simulate_photocurrents(&run).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn independent_channels_variance() {
        let n = 200_000;
        let p = simulate_photocurrents(&identity_run(n, 3)).unwrap();
        let d = p.differential();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = 4e6;
        let se = expected * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - expected).abs() < 3.0 * se, "{var} vs {expected}");
    }

    #[test]
    fn undersampled_run_rejected() {
        let mut run = identity_run(100, 1);
        run.modulation = Some(Modulation { frequency: 745e3, differential_amplitude: 1.0 });
        run.analysis_span = 300e3;
        assert!(matches!(simulate_photocurrents(&run), Err(Error::Undersampled { .. })));
    }

    #[test]
    fn modulation_is_antisymmetric_on_probe() {
        let mut run = identity_run(64, 1);
        run.channels = ChannelModel::new([5.0; 4], [[0.0; 4]; 4]).unwrap();
        run.modulation = Some(Modulation { frequency: 1e5, differential_amplitude: 2.0 });
        let p = simulate_photocurrents(&run).unwrap();
        for s in &p.samples {
            assert_relative_eq!(s[PROBE_LEFT] + s[PROBE_RIGHT], 10.0, epsilon = 1e-12);
            assert_eq!(s[CONJ_LEFT], 5.0);
        }
        let d = p.differential();
        let t = 3.0 / 2e6;
        assert_relative_eq!(d[3], 2.0 * (2.0 * std::f64::consts::PI * 1e5 * t).sin(), epsilon = 1e-12);
    }
}
