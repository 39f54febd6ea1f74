//! Two bounded denoisers.
//!
//! `fft_gate`: spectral gating against a noise floor taken from the quietest
//! 10% of frames and median-smoothed across frequency, so narrow tonal peaks
//! do not leak into the floor estimate.
//!
//! `wavelet_threshold`: multi-level Haar transform with soft thresholding of
//! the detail coefficients at a MAD-based universal threshold.

use serde::{Deserialize, Serialize};

use crate::buffer::AudioBuffer;
use crate::error::{DspError, Result};
use crate::scalar::{median, Sample};
use crate::stft::CentredStft;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseMethod {
    FftGate,
    WaveletThreshold,
}

const GATE_FFT: usize = 2048;
const GATE_HOP: usize = 512;
const QUIET_FRACTION: f64 = 0.10;
const FLOOR_SMOOTH_BINS: usize = 31;
const MAX_HAAR_LEVELS: usize = 6;

fn gate_channel(x: &[f64], strength: f64) -> Vec<f64> {
    let mut stft = CentredStft::analyze(x, GATE_FFT, GATE_HOP);
    let bins = GATE_FFT / 2 + 1;
    let power: Vec<Vec<f64>> = stft
        .frames
        .iter()
        .map(|f| f.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let mut order: Vec<(f64, usize)> = power
        .iter()
        .enumerate()
        .map(|(j, p)| (p.iter().sum::<f64>(), j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let quiet = ((order.len() as f64 * QUIET_FRACTION).ceil() as usize).max(1);
    let mut floor = vec![0.0; bins];
    for &(_, j) in &order[..quiet] {
        for (f, p) in floor.iter_mut().zip(&power[j]) {
            *f += p / quiet as f64;
        }
    }
    let half = FLOOR_SMOOTH_BINS / 2;
    let smoothed: Vec<f64> = (0..bins)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(bins);
            let mut w = floor[lo..hi].to_vec();
            median(&mut w).unwrap_or(0.0)
        })
        .collect();
    let over = 1.0 + 3.0 * strength;
    for (frame, p) in stft.frames.iter_mut().zip(&power) {
        for k in 0..bins {
            let gain = if p[k] > 0.0 {
                (1.0 - over * smoothed[k] / p[k]).max(0.0).sqrt()
            } else {
                0.0
            };
            let g = 1.0 - strength * (1.0 - gain);
            frame[k] = frame[k] * g;
        }
    }
    stft.synthesize()
}

fn haar_forward(x: &mut [f64], levels: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut len = x.len();
    let mut tmp = vec![0.0; len];
    for _ in 0..levels {
        let half = len / 2;
        for i in 0..half {
            tmp[i] = (x[2 * i] + x[2 * i + 1]) * s;
            tmp[half + i] = (x[2 * i] - x[2 * i + 1]) * s;
        }
        x[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
}

fn haar_inverse(x: &mut [f64], levels: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut tmp = vec![0.0; x.len()];
    for level in (0..levels).rev() {
        let len = x.len() >> level;
        let half = len / 2;
        for i in 0..half {
            tmp[2 * i] = (x[i] + x[half + i]) * s;
            tmp[2 * i + 1] = (x[i] - x[half + i]) * s;
        }
        x[..len].copy_from_slice(&tmp[..len]);
    }
}

fn wavelet_channel(x: &[f64], strength: f64) -> Vec<f64> {
    if x.len() < 4 {
        return x.to_vec();
    }
    let levels = ((x.len() as f64).log2().floor() as usize).clamp(1, MAX_HAAR_LEVELS);
    let block = 1usize << levels;
    let padded_len = x.len().div_ceil(block) * block;
    let mut buf = x.to_vec();
    let last = *x.last().unwrap();
    buf.resize(padded_len, last);
    haar_forward(&mut buf, levels);
    let finest = &buf[padded_len / 2..];
    let mut abs: Vec<f64> = finest.iter().map(|v| v.abs()).collect();
    let sigma = median(&mut abs).unwrap_or(0.0) / 0.6745;
    let threshold = strength * sigma * (2.0 * (padded_len as f64).ln()).sqrt();
    let approx_len = padded_len >> levels;
    for v in &mut buf[approx_len..] {
        *v = v.signum() * (v.abs() - threshold).max(0.0);
    }
    haar_inverse(&mut buf, levels);
    buf.truncate(x.len());
    buf
}

pub fn denoise<T: Sample>(
    audio: &AudioBuffer<T>,
    method: DenoiseMethod,
    strength: f64,
) -> Result<AudioBuffer<T>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(DspError::param("strength", "must be in [0, 1]"));
    }
    audio.map_channels(|c| {
        let x: Vec<f64> = c.iter().map(|s| s.as_f64()).collect();
        let y = match method {
            DenoiseMethod::FftGate => gate_channel(&x, strength),
            DenoiseMethod::WaveletThreshold => wavelet_channel(&x, strength),
        };
        Ok(y.into_iter().map(T::lit).collect())
    })
}
