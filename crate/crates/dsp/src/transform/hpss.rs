//! Harmonic/percussive separation with median-filtered soft masks.
//!
//! The harmonic part is the masked inverse STFT; the percussive part is the
//! exact residual, so the two components always sum to the input.

use crate::buffer::AudioBuffer;
use crate::error::Result;
use crate::scalar::{median, Sample};
use crate::stft::CentredStft;

const HPSS_FFT: usize = 2048;
const HPSS_HOP: usize = 512;
const KERNEL: usize = 17;

fn median_time(mag: &[Vec<f64>], j: usize, k: usize) -> f64 {
    let half = KERNEL / 2;
    let lo = j.saturating_sub(half);
    let hi = (j + half + 1).min(mag.len());
    let mut w: Vec<f64> = (lo..hi).map(|t| mag[t][k]).collect();
    median(&mut w).unwrap_or(0.0)
}

fn median_freq(row: &[f64], k: usize) -> f64 {
    let half = KERNEL / 2;
    let lo = k.saturating_sub(half);
    let hi = (k + half + 1).min(row.len());
    let mut w = row[lo..hi].to_vec();
    median(&mut w).unwrap_or(0.0)
}

fn harmonic_channel(x: &[f64]) -> Vec<f64> {
    let mut stft = CentredStft::analyze(x, HPSS_FFT, HPSS_HOP);
    let mag: Vec<Vec<f64>> = stft
        .frames
        .iter()
        .map(|f| f.iter().map(|c| c.norm()).collect())
        .collect();
    for j in 0..mag.len() {
        for k in 0..mag[j].len() {
            let h = median_time(&mag, j, k);
            let p = median_freq(&mag[j], k);
            let (h2, p2) = (h * h, p * p);
            let mask = if h2 + p2 > 0.0 { h2 / (h2 + p2) } else { 0.5 };
            stft.frames[j][k] = stft.frames[j][k] * mask;
        }
    }
    stft.synthesize()
}

/// Returns `(harmonic, percussive)`.
pub fn hpss<T: Sample>(audio: &AudioBuffer<T>) -> Result<(AudioBuffer<T>, AudioBuffer<T>)> {
    let mut harmonic = Vec::with_capacity(audio.channel_count());
    let mut percussive = Vec::with_capacity(audio.channel_count());
    for c in audio.channels() {
        let x: Vec<f64> = c.iter().map(|s| s.as_f64()).collect();
        let h: Vec<T> = harmonic_channel(&x).into_iter().map(T::lit).collect();
        let p: Vec<T> = c.iter().zip(&h).map(|(&s, &hv)| s - hv).collect();
        harmonic.push(h);
        percussive.push(p);
    }
    Ok((
        AudioBuffer::new(audio.sample_rate(), harmonic)?,
        AudioBuffer::new(audio.sample_rate(), percussive)?,
    ))
}
