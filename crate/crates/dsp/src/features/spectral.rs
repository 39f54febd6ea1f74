//! Frame-level spectral descriptors.
//!
//! Centroid and bandwidth are moments of the magnitude spectrum; rolloff and
//! flatness are computed on the power spectrum.

use serde::Serialize;

use super::Series;
use crate::frames::FrameGrid;
use crate::scalar::Sample;
use crate::stft::{bin_frequencies, magnitude_frames};

pub const DEFAULT_ROLLOFF: f64 = 0.85;
const FLATNESS_FLOOR: f64 = 1e-10;
const CONTRAST_QUANTILE: f64 = 0.02;
/// Lower edges of the octave contrast bands; the last band runs to Nyquist.
const CONTRAST_EDGES_HZ: [f64; 7] = [0.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary<T> {
    pub frame_times: Vec<f64>,
    pub centroid_hz: Series<T>,
    pub bandwidth_hz: Series<T>,
    pub rolloff_hz: Series<T>,
    pub flatness: Series<T>,
    /// One series per contrast band whose lower edge is below Nyquist.
    pub contrast_db: Vec<Series<T>>,
    pub contrast_band_edges_hz: Vec<f64>,
}

/// Descriptors of a single magnitude spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDescriptors<T> {
    pub centroid_hz: T,
    pub bandwidth_hz: T,
    pub rolloff_hz: T,
    pub flatness: T,
}

pub fn frame_descriptors<T: Sample>(
    magnitude: &[T],
    freqs: &[f64],
    rolloff_fraction: f64,
) -> FrameDescriptors<T> {
    let total_mag: T = magnitude.iter().copied().sum();
    let (centroid, bandwidth) = if total_mag > T::zero() {
        let c = magnitude
            .iter()
            .zip(freqs)
            .map(|(&m, &f)| m * T::lit(f))
            .sum::<T>()
            / total_mag;
        let var = magnitude
            .iter()
            .zip(freqs)
            .map(|(&m, &f)| {
                let d = T::lit(f) - c;
                m * d * d
            })
            .sum::<T>()
            / total_mag;
        (c, var.sqrt())
    } else {
        (T::zero(), T::zero())
    };

    let power: Vec<T> = magnitude.iter().map(|&m| m * m).collect();
    let total_power: T = power.iter().copied().sum();
    let rolloff = if total_power > T::zero() {
        let target = total_power * T::lit(rolloff_fraction);
        let mut acc = T::zero();
        let mut idx = power.len() - 1;
        for (k, &p) in power.iter().enumerate() {
            acc = acc + p;
            if acc >= target {
                idx = k;
                break;
            }
        }
        T::lit(freqs[idx])
    } else {
        T::zero()
    };

    let floor = T::lit(FLATNESS_FLOOR);
    let n = T::from_usize_lossy(power.len());
    let log_mean = power.iter().map(|&p| p.max(floor).ln()).sum::<T>() / n;
    let arith = power.iter().map(|&p| p.max(floor)).sum::<T>() / n;
    let flatness = (log_mean.exp() / arith).min(T::one()).max(T::zero());

    FrameDescriptors {
        centroid_hz: centroid,
        bandwidth_hz: bandwidth,
        rolloff_hz: rolloff,
        flatness,
    }
}

fn band_contrast<T: Sample>(magnitude: &[T], lo: usize, hi: usize) -> T {
    let mut band: Vec<T> = magnitude[lo..hi].iter().map(|&m| m * m).collect();
    if band.is_empty() {
        return T::zero();
    }
    band.sort_by(|a, b| a.partial_cmp(b).expect("finite power"));
    let q = ((band.len() as f64 * CONTRAST_QUANTILE).round() as usize).max(1);
    let valley = band[..q].iter().copied().sum::<T>() / T::from_usize_lossy(q);
    let peak = band[band.len() - q..].iter().copied().sum::<T>() / T::from_usize_lossy(q);
    let floor = T::lit(FLATNESS_FLOOR);
    T::lit(10.0) * ((peak + floor) / (valley + floor)).log10()
}

pub fn contrast_bands(n: usize, sample_rate: u32) -> Vec<(usize, usize, f64)> {
    let nyquist = sample_rate as f64 / 2.0;
    let bin_hz = sample_rate as f64 / n as f64;
    let bins = n / 2 + 1;
    let lows: Vec<f64> = CONTRAST_EDGES_HZ
        .iter()
        .copied()
        .filter(|&e| e < nyquist)
        .collect();
    lows.iter()
        .enumerate()
        .map(|(i, &lo_hz)| {
            let hi_hz = lows.get(i + 1).copied().unwrap_or(nyquist + bin_hz);
            let lo = (lo_hz / bin_hz).ceil() as usize;
            let hi = ((hi_hz / bin_hz).ceil() as usize).min(bins);
            (lo.min(bins), hi.max(lo.min(bins)), lo_hz)
        })
        .collect()
}

pub fn spectral_features<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    grid: &FrameGrid,
    rolloff_fraction: f64,
) -> SpectralSummary<T> {
    let freqs = bin_frequencies(grid.frame_length, sample_rate);
    let mags = magnitude_frames(samples, grid);
    let bands = contrast_bands(grid.frame_length, sample_rate);
    let mut centroid = Vec::with_capacity(mags.len());
    let mut bandwidth = Vec::with_capacity(mags.len());
    let mut rolloff = Vec::with_capacity(mags.len());
    let mut flatness = Vec::with_capacity(mags.len());
    let mut contrast = vec![Vec::with_capacity(mags.len()); bands.len()];
    for m in &mags {
        let d = frame_descriptors(m, &freqs, rolloff_fraction);
        centroid.push(d.centroid_hz);
        bandwidth.push(d.bandwidth_hz);
        rolloff.push(d.rolloff_hz);
        flatness.push(d.flatness);
        for (b, &(lo, hi, _)) in bands.iter().enumerate() {
            contrast[b].push(band_contrast(m, lo, hi));
        }
    }
    SpectralSummary {
        frame_times: grid.frame_times(samples.len(), sample_rate),
        centroid_hz: Series::new(centroid),
        bandwidth_hz: Series::new(bandwidth),
        rolloff_hz: Series::new(rolloff),
        flatness: Series::new(flatness),
        contrast_db: contrast.into_iter().map(Series::new).collect(),
        contrast_band_edges_hz: bands.iter().map(|b| b.2).collect(),
    }
}

/// Whole-signal statistics over the frame-averaged magnitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralStatistics {
    pub centroid_hz: f64,
    pub bandwidth_hz: f64,
    pub rolloff_hz: f64,
    pub flatness: f64,
    pub peak_frequency_hz: f64,
    pub frames: usize,
}

pub fn spectral_statistics<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    grid: &FrameGrid,
) -> SpectralStatistics {
    let freqs = bin_frequencies(grid.frame_length, sample_rate);
    let mags = magnitude_frames(samples, grid);
    let bins = freqs.len();
    let mut avg = vec![T::zero(); bins];
    for m in &mags {
        for (a, &v) in avg.iter_mut().zip(m) {
            *a = *a + v;
        }
    }
    let count = T::from_usize_lossy(mags.len().max(1));
    for a in &mut avg {
        *a = *a / count;
    }
    let d = frame_descriptors(&avg, &freqs, DEFAULT_ROLLOFF);
    let peak = avg
        .iter()
        .enumerate()
        .fold((0usize, T::zero()), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
        .0;
    SpectralStatistics {
        centroid_hz: d.centroid_hz.as_f64(),
        bandwidth_hz: d.bandwidth_hz.as_f64(),
        rolloff_hz: d.rolloff_hz.as_f64(),
        flatness: d.flatness.as_f64(),
        peak_frequency_hz: freqs[peak],
        frames: mags.len(),
    }
}
