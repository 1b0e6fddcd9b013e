//! Streaming Welch periodogram: Hann window, fixed hop, one-sided output.
//!
//! Normalisation: P_k = c·|X_k|²/(fs·Σw²) with c = 2 except at DC and
//! Nyquist, so unit-variance white noise reads 2/fs, i.e. 1/B for the
//! one-sided bandwidth B = fs/2. No detrending is applied.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{SpectrumTrace, SpectrumUnit};

pub struct WelchAccumulator {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_power: f64,
    hop: usize,
    fs: f64,
    pending: Vec<f64>,
    scratch: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
    sum: Vec<f64>,
    segments: usize,
}

impl WelchAccumulator {
    pub fn new(segment_length: usize, overlap: f64, fs: f64) -> Result<Self> {
        if segment_length < 8 {
            return Err(Error::InsufficientData(format!("segment length {segment_length} < 8")));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::Domain(format!("overlap {overlap} must be in [0, 1)")));
        }
        let n = segment_length;
        // Periodic Hann.
        let window: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let fft_scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            fft,
            window,
            window_power,
            hop: ((n as f64) * (1.0 - overlap)).round().max(1.0) as usize,
            fs,
            pending: Vec::with_capacity(n),
            scratch: vec![Complex64::default(); n],
            fft_scratch,
            sum: vec![0.0; n / 2 + 1],
            segments: 0,
        })
    }

    pub fn segment_length(&self) -> usize {
        self.window.len()
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        self.pending.push(v);
        if self.pending.len() == self.window.len() {
            self.process();
            self.pending.drain(..self.hop);
        }
    }

    pub fn extend(&mut self, values: &[f64]) {
        for &v in values {
            self.push(v);
        }
    }

    fn process(&mut self) {
        for ((s, &x), &w) in self.scratch.iter_mut().zip(&self.pending).zip(&self.window) {
            *s = Complex64::new(x * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.scratch, &mut self.fft_scratch);
        for (acc, z) in self.sum.iter_mut().zip(&self.scratch) {
            *acc += z.norm_sqr();
        }
        self.segments += 1;
    }

    /// Averaged PSD restricted to bins in [f_lo, f_hi].
    pub fn finish_range(&self, f_lo: f64, f_hi: f64) -> Result<SpectrumTrace> {
        if self.segments < 2 {
            return Err(Error::InsufficientData(format!(
                "{} Welch segment(s); at least 2 are required",
                self.segments
            )));
        }
        let n = self.window.len();
        let last = n / 2;
        let norm = 1.0 / (self.fs * self.window_power * self.segments as f64);
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for (k, &s) in self.sum.iter().enumerate() {
            let f = k as f64 * self.fs / n as f64;
            if f < f_lo || f > f_hi {
                continue;
            }
            let one_sided = if k == 0 || (k == last && n % 2 == 0) { 1.0 } else { 2.0 };
            freqs.push(f);
            values.push(one_sided * s * norm);
        }
        Ok(SpectrumTrace::new(freqs, values, SpectrumUnit::RawPsd)?
            .with_meta("estimator", "welch")
            .with_meta("window", "hann")
            .with_meta("segment_length", n)
            .with_meta("hop", self.hop)
            .with_meta("segments", self.segments)
            .with_meta("bin_width_hz", self.fs / n as f64)
            .with_meta("normalization", "one-sided; unit-variance white noise -> 2/fs"))
    }

    pub fn finish(&self) -> Result<SpectrumTrace> {
        self.finish_range(0.0, f64::INFINITY)
    }
}

/// Welch PSD of a stored series.
pub fn welch_psd(series: &[f64], fs: f64, segment_length: usize, overlap: f64) -> Result<SpectrumTrace> {
    if series.len() < segment_length {
        return Err(Error::InsufficientData(format!(
            "series of {} samples is shorter than one segment ({segment_length})",
            series.len()
        )));
    }
    let mut acc = WelchAccumulator::new(segment_length, overlap, fs)?;
    acc.extend(series);
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::run_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn white_noise_is_flat_at_two_over_fs() {
        let mut rng = run_rng(5, 0);
        let fs = 1e6;
        let sigma = 3.0;
        let x: Vec<f64> = (0..256 * 401).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let p = welch_psd(&x, fs, 512, 0.5).unwrap();
        let expected = 2.0 * sigma * sigma / fs;
        let segs: f64 = p.metadata["segments"].parse().unwrap();
        // Bins away from DC/Nyquist; 50 % Hann overlap gives ≈ 0.95·K effective averages.
        let band = 4.0 / (0.9 * segs).sqrt();
        let inner = &p.values()[1..p.len() - 1];
        for &v in inner {
            assert!((v / expected - 1.0).abs() < band);
        }
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn sine_peaks_at_nearest_bin() {
        let fs = 1024.0;
        let f0 = 100.3;
        let x: Vec<f64> = (0..8192).map(|k| (2.0 * PI * f0 * k as f64 / fs).sin()).collect();
        let p = welch_psd(&x, fs, 1024, 0.5).unwrap();
        let (imax, _) = p.values().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert_eq!(p.freqs()[imax], 100.0);
    }

    #[test]
    fn ou_process_has_lorentzian_half_width() {
        // x_{k+1} = a x_k + ξ with a = e^{−γh}: PSD ∝ 1/(γ² + ω²) for ω ≪ fs.
        let mut rng = run_rng(6, 0);
        let fs = 1e4;
        let gamma = 2.0 * PI * 50.0;
        let a = (-gamma / fs).exp();
        let mut x = 0.0;
        let series: Vec<f64> = (0..2_000_000)
            .map(|_| {
                x = a * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let p = welch_psd(&series, fs, 4096, 0.5).unwrap();
        // 1/P is linear in f² for a Lorentzian: intercept/slope = half-width².
        let pts: Vec<(f64, f64)> = p
            .freqs()
            .iter()
            .zip(p.values())
            .filter(|(&f, _)| f > 0.0 && f < 200.0)
            .map(|(&f, &v)| (f * f, 1.0 / v))
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let width = (intercept / slope).sqrt();
        assert!((width / (gamma / (2.0 * PI)) - 1.0).abs() < 0.05, "{width}");
    }

    #[test]
    fn too_short_is_an_error() {
        assert!(matches!(welch_psd(&[0.0; 10], 1.0, 16, 0.5), Err(Error::InsufficientData(_))));
        let x = vec![0.0; 16];
        assert!(welch_psd(&x, 1.0, 16, 0.5).is_err());
    }
}
