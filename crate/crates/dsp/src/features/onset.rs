//! Spectral-flux onset detection on short centred frames.

use serde::Serialize;

use crate::scalar::Sample;
use crate::stft::CentredStft;

/// Onset framing: roughly 25 ms frames rounded to a power of two, quarter hop.
pub fn onset_frame_length(sample_rate: u32) -> usize {
    let target = 0.025 * sample_rate as f64;
    let exp = target.log2().round().clamp(6.0, 13.0) as u32;
    1usize << exp
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnsetEnvelope {
    pub frame_rate_hz: f64,
    pub times: Vec<f64>,
    /// Half-wave rectified spectral flux, normalised to a maximum of 1
    /// (all zeros for silence).
    pub strength: Vec<f64>,
    /// Pre-normalisation maximum.
    pub raw_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnsetAnalysis {
    pub onset_times_s: Vec<f64>,
    pub onset_strengths: Vec<f64>,
    pub envelope: OnsetEnvelope,
}

const SILENT_FLUX: f64 = 1e-6;
const PEAK_THRESHOLD: f64 = 0.1;
const MIN_SPACING_S: f64 = 0.03;
const MEAN_WINDOW_S: f64 = 0.1;
const MEAN_DELTA: f64 = 0.05;

pub fn onset_envelope<T: Sample>(samples: &[T], sample_rate: u32) -> OnsetEnvelope {
    let n = onset_frame_length(sample_rate);
    let hop = n / 4;
    let stft = CentredStft::analyze(samples, n, hop);
    let mags: Vec<Vec<f64>> = stft
        .frames
        .iter()
        .map(|f| f.iter().map(|c| c.norm().as_f64()).collect())
        .collect();
    let duration = samples.len() as f64 / sample_rate as f64;
    let mut flux = vec![0.0; mags.len()];
    for j in 1..mags.len() {
        flux[j] = mags[j]
            .iter()
            .zip(&mags[j - 1])
            .map(|(a, b)| (a - b).max(0.0))
            .sum();
    }
    let raw_max = flux.iter().copied().fold(0.0, f64::max);
    let strength = if raw_max > SILENT_FLUX {
        flux.iter().map(|v| v / raw_max).collect()
    } else {
        vec![0.0; flux.len()]
    };
    let times = (0..flux.len())
        .map(|j| ((j * hop) as f64 / sample_rate as f64).min(duration))
        .collect();
    OnsetEnvelope {
        frame_rate_hz: sample_rate as f64 / hop as f64,
        times,
        strength,
        raw_max,
    }
}

fn pick_peaks(env: &OnsetEnvelope) -> Vec<usize> {
    let s = &env.strength;
    let fps = env.frame_rate_hz;
    let local = ((MIN_SPACING_S * fps).round() as usize).max(1);
    let mean_w = ((MEAN_WINDOW_S * fps).round() as usize).max(1);
    let mut peaks: Vec<usize> = Vec::new();
    for j in 0..s.len() {
        let v = s[j];
        if v < PEAK_THRESHOLD {
            continue;
        }
        let lo = j.saturating_sub(local);
        let hi = (j + local + 1).min(s.len());
        // Ties resolve to the earliest frame.
        if s[lo..j].iter().any(|&u| u >= v) || s[j + 1..hi].iter().any(|&u| u > v) {
            continue;
        }
        let mlo = j.saturating_sub(mean_w);
        let mhi = (j + mean_w + 1).min(s.len());
        let local_mean = s[mlo..mhi].iter().sum::<f64>() / (mhi - mlo) as f64;
        if v < local_mean + MEAN_DELTA {
            continue;
        }
        if let Some(&last) = peaks.last() {
            if j - last < local {
                continue;
            }
        }
        peaks.push(j);
    }
    peaks
}

pub fn onset_analysis<T: Sample>(samples: &[T], sample_rate: u32) -> OnsetAnalysis {
    let envelope = onset_envelope(samples, sample_rate);
    let peaks = pick_peaks(&envelope);
    OnsetAnalysis {
        onset_times_s: peaks.iter().map(|&j| envelope.times[j]).collect(),
        onset_strengths: peaks.iter().map(|&j| envelope.strength[j]).collect(),
        envelope,
    }
}
