use serde::Serialize;

use crate::error::{DspError, Result};
use crate::frames::FrameGrid;
use crate::scalar::Sample;
use crate::stft::magnitude_frames;

pub const DEFAULT_MELS: usize = 40;
const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels` x `n_fft/2+1`.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let bins = n_fft / 2 + 1;
    let max_mel = hz_to_mel(sample_rate as f64 / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / n_fft as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mfcc {
    pub frame_times: Vec<f64>,
    /// `n_coeff` rows, one column per frame.
    pub coefficients: Vec<Vec<f64>>,
}

pub fn mfcc<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    grid: &FrameGrid,
    n_coeff: usize,
    n_mels: usize,
) -> Result<Mfcc> {
    if n_coeff == 0 || n_coeff > n_mels {
        return Err(DspError::param("n_coeff", format!("must be in 1..={n_mels}")));
    }
    let bank = mel_filterbank(n_mels, grid.frame_length, sample_rate);
    let mags = magnitude_frames(samples, grid);
    let mut coefficients = vec![Vec::with_capacity(mags.len()); n_coeff];
    let scale0 = (1.0 / n_mels as f64).sqrt();
    let scale = (2.0 / n_mels as f64).sqrt();
    for m in &mags {
        let log_mel: Vec<f64> = bank
            .iter()
            .map(|filt| {
                let e: f64 = filt
                    .iter()
                    .zip(m)
                    .map(|(&w, &v)| w * v.as_f64() * v.as_f64())
                    .sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();
        for (c, row) in coefficients.iter_mut().enumerate() {
            let sum: f64 = log_mel
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * (std::f64::consts::PI * c as f64 * (i as f64 + 0.5) / n_mels as f64).cos()
                })
                .sum();
            row.push(sum * if c == 0 { scale0 } else { scale });
        }
    }
    Ok(Mfcc {
        frame_times: grid.frame_times(samples.len(), sample_rate),
        coefficients,
    })
}
