//! Butterworth high/low-pass filters as cascaded biquads, applied forward and
//! backward (zero phase) with odd-extension padding and steady-state initial
//! conditions.

use serde::{Deserialize, Serialize};

use crate::buffer::AudioBuffer;
use crate::error::{DspError, Result};
use crate::scalar::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Highpass,
    Lowpass,
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let u = x.first().copied().unwrap_or(0.0);
        let g = self.dc_gain();
        let mut z2 = (self.b[2] - self.a[1] * g) * u;
        let mut z1 = (self.b[1] - self.a[0] * g) * u + z2;
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + z1;
                z1 = self.b[1] * v - self.a[0] * y + z2;
                z2 = self.b[2] * v - self.a[1] * y;
                y
            })
            .collect()
    }
}

/// Second-order sections of an order-`order` Butterworth design via the
/// bilinear transform. Odd orders add one first-order section.
fn design(mode: FilterMode, cutoff_hz: f64, sample_rate: f64, order: usize) -> Vec<Biquad> {
    let k = (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
    let mut sections = Vec::new();
    for i in 0..order / 2 {
        let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k * k);
        let a = [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm];
        let b = match mode {
            FilterMode::Lowpass => [k * k * norm, 2.0 * k * k * norm, k * k * norm],
            FilterMode::Highpass => [norm, -2.0 * norm, norm],
        };
        sections.push(Biquad { b, a });
    }
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        let a = [(k - 1.0) * norm, 0.0];
        let b = match mode {
            FilterMode::Lowpass => [k * norm, k * norm, 0.0],
            FilterMode::Highpass => [norm, -norm, 0.0],
        };
        sections.push(Biquad { b, a });
    }
    sections
}

fn cascade(sections: &[Biquad], x: Vec<f64>) -> Vec<f64> {
    sections.iter().fold(x, |acc, s| s.run(&acc))
}

fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Vec<f64> {
    let pad = pad.min(x.len().saturating_sub(1));
    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    let (first, last) = (x[0], x[x.len() - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));
    let mut y = cascade(sections, ext);
    y.reverse();
    let mut y = cascade(sections, y);
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}

pub fn filter<T: Sample>(
    audio: &AudioBuffer<T>,
    mode: FilterMode,
    cutoff_hz: f64,
    order: usize,
) -> Result<AudioBuffer<T>> {
    let sr = audio.sample_rate() as f64;
    if !(cutoff_hz > 0.0) || cutoff_hz >= sr / 2.0 {
        return Err(DspError::param(
            "cutoff_hz",
            format!("must be in (0, {}) Hz", sr / 2.0),
        ));
    }
    if !(1..=12).contains(&order) {
        return Err(DspError::param("order", "must be in 1..=12"));
    }
    let sections = design(mode, cutoff_hz, sr, order);
    let pad = 3 * order + (6.0 * sr / cutoff_hz).ceil() as usize;
    audio.map_channels(|c| {
        if c.is_empty() {
            return Ok(Vec::new());
        }
        let x: Vec<f64> = c.iter().map(|s| s.as_f64()).collect();
        Ok(filtfilt(&sections, &x, pad).into_iter().map(T::lit).collect())
    })
}

/// Single-pass magnitude response of the designed filter at `freq_hz`.
pub fn single_pass_gain_db(mode: FilterMode, cutoff_hz: f64, sample_rate: f64, order: usize, freq_hz: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
    let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
    let mut mag = 1.0;
    for s in design(mode, cutoff_hz, sample_rate, order) {
        let num = ((s.b[0] + s.b[1] * c1 + s.b[2] * c2).powi(2) + (s.b[1] * s1 + s.b[2] * s2).powi(2)).sqrt();
        let den = ((1.0 + s.a[0] * c1 + s.a[1] * c2).powi(2) + (s.a[0] * s1 + s.a[1] * s2).powi(2)).sqrt();
        mag *= num / den;
    }
    20.0 * mag.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_four_octave_attenuation() {
        for sr in [16_000.0, 44_100.0] {
            let lp = single_pass_gain_db(FilterMode::Lowpass, 1000.0, sr, 4, 2000.0);
            let hp = single_pass_gain_db(FilterMode::Highpass, 1000.0, sr, 4, 500.0);
            assert!(lp <= -24.0, "lowpass {lp}");
            assert!(hp <= -24.0, "highpass {hp}");
            let at_cutoff = single_pass_gain_db(FilterMode::Lowpass, 1000.0, sr, 4, 1000.0);
            assert!((at_cutoff + 3.01).abs() < 0.05);
        }
    }

    #[test]
    fn highpass_removes_dc() {
        let a = AudioBuffer::mono(16_000, vec![0.3f64; 16_000]).unwrap();
        let y = filter(&a, FilterMode::Highpass, 1000.0, 4).unwrap();
        let mean = y.channels()[0].iter().sum::<f64>() / 16_000.0;
        assert!(mean.abs() < 1e-4, "mean {mean}");
    }

    #[test]
    fn cutoff_at_nyquist_rejected() {
        let a = AudioBuffer::mono(16_000, vec![0.0f64; 100]).unwrap();
        assert!(filter(&a, FilterMode::Lowpass, 8_000.0, 4).is_err());
        assert!(filter(&a, FilterMode::Lowpass, 0.0, 4).is_err());
    }
}
