//! Swept-analyzer emulation by segmented periodograms.
//!
//! The resolution bandwidth is the equivalent noise bandwidth of the segment
//! window. A video filter of bandwidth VBW averages the detector output over
//! roughly `RBW/VBW` independent resolution cells, so each trace average is
//! the mean of `ceil(RBW/VBW)` consecutive segment periodograms. Trace
//! averages are arithmetic means of independent traces.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
    /// Five-term flat top: peak amplitude within ~0.01 dB anywhere in a bin.
    #[default]
    FlatTop,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let tau = 2.0 * std::f64::consts::PI;
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let x = tau * i as f64 / nf;
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::FlatTop => {
                        0.215_578_95 - 0.416_631_58 * x.cos() + 0.277_263_158 * (2.0 * x).cos()
                            - 0.083_578_947 * (3.0 * x).cos()
                            + 0.006_947_368 * (4.0 * x).cos()
                    }
                }
            })
            .collect()
    }

    /// Nominal equivalent noise bandwidth in bins.
    pub fn enbw_bins(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 1.5,
            Window::FlatTop => 3.770_2,
        }
    }

    /// Half-width of the main lobe in bins.
    pub fn main_lobe_bins(self) -> usize {
        match self {
            Window::Rectangular => 1,
            Window::Hann => 2,
            Window::FlatTop => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSettings {
    /// Hz.
    pub rbw: f64,
    /// Hz.
    pub vbw: f64,
    pub averages: usize,
    pub window: Window,
}

impl SpectrumSettings {
    pub fn segment_len(&self, sample_rate: f64) -> usize {
        ((self.window.enbw_bins() * sample_rate / self.rbw).round() as usize).max(2)
    }

    pub fn segments_per_average(&self) -> usize {
        if self.vbw >= self.rbw {
            1
        } else {
            (self.rbw / self.vbw).ceil() as usize
        }
    }

    /// Samples needed for one full trace.
    pub fn required_samples(&self, sample_rate: f64) -> usize {
        self.segment_len(sample_rate) * self.segments_per_average() * self.averages
    }

    fn validate(&self) -> Result<()> {
        if !(self.rbw > 0.0) {
            return Err(Error::invalid("rbw", self.rbw, "must be > 0"));
        }
        if !(self.vbw > 0.0) {
            return Err(Error::invalid("vbw", self.vbw, "must be > 0"));
        }
        if self.averages == 0 {
            return Err(Error::invalid("averages", 0.0, "must be >= 1"));
        }
        Ok(())
    }
}

/// One-sided PSD trace (signal units²/Hz) on bins `0..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTrace {
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
    /// Effective resolution bandwidth (window ENBW), Hz.
    pub rbw: f64,
    pub vbw: f64,
    pub averages: usize,
    pub segments_per_average: usize,
    pub window: Window,
    /// Each trace average before the final mean.
    #[serde(skip)]
    pub per_average: Vec<Vec<f64>>,
}

impl SpectrumTrace {
    pub fn bin_spacing(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Power falling in the resolution bandwidth of bin `k`.
    pub fn bin_power(&self, k: usize) -> f64 {
        self.psd[k] * self.rbw
    }

    pub fn nearest_bin(&self, frequency: f64) -> usize {
        let k = (frequency / self.bin_spacing()).round();
        (k.max(0.0) as usize).min(self.psd.len() - 1)
    }

    /// Trace with a white PSD removed (electronics subtraction).
    pub fn subtract(&self, white: f64) -> SpectrumTrace {
        let sub = |v: &Vec<f64>| v.iter().map(|p| p - white).collect::<Vec<_>>();
        SpectrumTrace {
            psd: sub(&self.psd),
            per_average: self.per_average.iter().map(sub).collect(),
            ..self.clone()
        }
    }

    /// Bins away from DC and from the main lobes around `exclude` frequencies.
    pub fn floor_bins(&self, exclude: &[f64]) -> Vec<usize> {
        let lobe = self.window.main_lobe_bins();
        let peaks: Vec<usize> = exclude.iter().map(|&f| self.nearest_bin(f)).collect();
        (lobe..self.psd.len() - 1)
            .filter(|k| peaks.iter().all(|p| k.abs_diff(*p) > lobe))
            .collect()
    }
}

/// Welch-style analysis of `signal` sampled at `sample_rate`.
pub fn spectrum_analyze(signal: &[f64], sample_rate: f64, settings: &SpectrumSettings) -> Result<SpectrumTrace> {
    settings.validate()?;
    let n = settings.segment_len(sample_rate);
    let per_avg = settings.segments_per_average();
    let required = settings.required_samples(sample_rate);
    if signal.len() < required {
        return Err(Error::InsufficientSamples {
            required,
            available: signal.len(),
        });
    }

    let window = settings.window.coefficients(n);
    let sum_w: f64 = window.iter().sum();
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();
    let rbw = sample_rate * sum_w2 / (sum_w * sum_w);
    let bins = n / 2 + 1;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let scale = 1.0 / (sample_rate * sum_w2);

    let segments: Vec<Vec<f64>> = (0..per_avg * settings.averages)
        .into_par_iter()
        .map(|s| {
            let seg = &signal[s * n..(s + 1) * n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            let mut buf: Vec<Complex<f64>> = seg
                .iter()
                .zip(&window)
                .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
                .collect();
            fft.process(&mut buf);
            (0..bins)
                .map(|k| {
                    let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { 1.0 } else { 2.0 };
                    one_sided * scale * buf[k].norm_sqr()
                })
                .collect()
        })
        .collect();

    let per_average: Vec<Vec<f64>> = segments
        .chunks(per_avg)
        .map(|group| {
            let mut acc = vec![0.0; bins];
            for seg in group {
                for (a, v) in acc.iter_mut().zip(seg) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / per_avg as f64).collect()
        })
        .collect();
    let mut psd = vec![0.0; bins];
    for avg in &per_average {
        for (p, v) in psd.iter_mut().zip(avg) {
            *p += v;
        }
    }
    for p in &mut psd {
        *p /= settings.averages as f64;
    }

    Ok(SpectrumTrace {
        frequencies: (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect(),
        psd,
        rbw,
        vbw: settings.vbw,
        averages: settings.averages,
        segments_per_average: per_avg,
        window: settings.window,
        per_average,
    })
}

/// Peak bin at `signal_freq` over the median off-peak floor, dB.
pub fn extract_snr(trace: &SpectrumTrace, signal_freq: f64) -> Result<f64> {
    let lobe = trace.window.main_lobe_bins();
    let k = trace.nearest_bin(signal_freq);
    let edge = signal_freq < 0.0 || signal_freq > *trace.frequencies.last().unwrap_or(&0.0);
    if edge || k <= lobe || k + lobe >= trace.psd.len() - 1 {
        return Err(Error::PeakAtEdge {
            frequency: signal_freq,
        });
    }
    let mut floor: Vec<f64> = trace.floor_bins(&[signal_freq]).iter().map(|&j| trace.psd[j]).collect();
    floor.sort_by(f64::total_cmp);
    let median = if floor.len() % 2 == 1 {
        floor[floor.len() / 2]
    } else {
        0.5 * (floor[floor.len() / 2 - 1] + floor[floor.len() / 2])
    };
    Ok(10.0 * (trace.psd[k] / median).log10())
}

/// Mean off-peak PSD with its standard error across trace averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorEstimate {
    pub mean: f64,
    pub std_error: f64,
}

pub fn noise_floor(trace: &SpectrumTrace, exclude: &[f64]) -> FloorEstimate {
    let bins = trace.floor_bins(exclude);
    let per: Vec<f64> = trace
        .per_average
        .iter()
        .map(|avg| bins.iter().map(|&k| avg[k]).sum::<f64>() / bins.len() as f64)
        .collect();
    let n = per.len() as f64;
    let mean = per.iter().sum::<f64>() / n;
    let std_error = if per.len() > 1 {
        (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    FloorEstimate { mean, std_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn insufficient_samples_reports_minimum() {
        let s = SpectrumSettings { rbw: 10e3, vbw: 100.0, averages: 20, window: Window::FlatTop };
        let need = s.required_samples(2e6);
        match spectrum_analyze(&vec![0.0; 100], 2e6, &s) {
            Err(Error::InsufficientSamples { required, available }) => {
                assert_eq!(required, need);
                assert_eq!(available, 100);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enbw_matches_requested_rbw() {
        let s = SpectrumSettings { rbw: 10e3, vbw: 10e3, averages: 1, window: Window::FlatTop };
        let fs = 2e6;
        let t = spectrum_analyze(&white(s.required_samples(fs), 1.0, 1), fs, &s).unwrap();
        assert!((t.rbw - 10e3).abs() / 10e3 < 0.01, "{}", t.rbw);
    }

    #[test]
    fn edge_peak_rejected() {
        let s = SpectrumSettings { rbw: 10e3, vbw: 10e3, averages: 2, window: Window::FlatTop };
        let fs = 2e6;
        let t = spectrum_analyze(&white(s.required_samples(fs), 1.0, 2), fs, &s).unwrap();
        assert!(extract_snr(&t, 0.0).is_err());
        assert!(extract_snr(&t, 1e6).is_err());
        assert!(extract_snr(&t, 2e6).is_err());
        assert!(extract_snr(&t, 500e3).is_ok());
    }

    #[test]
    fn subtraction_shifts_every_bin() {
        let s = SpectrumSettings { rbw: 10e3, vbw: 10e3, averages: 2, window: Window::Hann };
        let fs = 2e6;
        let t = spectrum_analyze(&white(s.required_samples(fs), 1.0, 3), fs, &s).unwrap();
        let u = t.subtract(0.25e-6);
        for (a, b) in t.psd.iter().zip(&u.psd) {
            assert!((a - b - 0.25e-6).abs() < 1e-18);
        }
    }
}
