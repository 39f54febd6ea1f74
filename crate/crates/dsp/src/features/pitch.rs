//! YIN fundamental-frequency tracking.
//!
//! Per frame: difference function over half the frame, cumulative-mean
//! normalisation, first dip below the absolute threshold, then parabolic
//! refinement of the lag on the raw difference function.

use serde::Serialize;

use crate::error::{DspError, Result};
use crate::frames::FrameGrid;
use crate::scalar::{median, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinConfig {
    pub threshold: f64,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    /// Frames whose RMS is below this level are unvoiced without analysis.
    pub silence_rms: f64,
}

impl Default for YinConfig {
    fn default() -> Self {
        Self {
            threshold: 0.15,
            fmin_hz: 50.0,
            fmax_hz: 2000.0,
            silence_rms: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchStats {
    pub voiced_frames: usize,
    pub voiced_ratio: f64,
    pub median_hz: Option<f64>,
    pub mean_hz: Option<f64>,
    pub min_hz: Option<f64>,
    pub max_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchTrack {
    pub frame_times: Vec<f64>,
    /// 0.0 for unvoiced frames.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub stats: PitchStats,
}

fn frame_pitch<T: Sample>(
    frame: &[T],
    sample_rate: f64,
    cfg: &YinConfig,
    diff: &mut [f64],
) -> Option<f64> {
    let n = frame.len();
    let half = n / 2;
    let tau_max = ((sample_rate / cfg.fmin_hz).ceil() as usize).min(half - 1);
    let tau_min = ((sample_rate / cfg.fmax_hz).floor() as usize).max(2);
    if tau_min + 2 >= tau_max {
        return None;
    }
    let energy: f64 = frame.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() / n as f64;
    if energy.sqrt() < cfg.silence_rms {
        return None;
    }
    let window = n - tau_max - 1;
    diff[0] = 0.0;
    for tau in 1..=tau_max {
        let mut acc = 0.0;
        for j in 0..window {
            let d = frame[j].as_f64() - frame[j + tau].as_f64();
            acc += d * d;
        }
        diff[tau] = acc;
    }
    let mut cmnd = vec![1.0; tau_max + 1];
    let mut running = 0.0;
    for tau in 1..=tau_max {
        running += diff[tau];
        cmnd[tau] = if running > 0.0 {
            diff[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    let mut tau = tau_min;
    let mut found = None;
    while tau < tau_max {
        if cmnd[tau] < cfg.threshold {
            while tau + 1 < tau_max && cmnd[tau + 1] < cmnd[tau] {
                tau += 1;
            }
            found = Some(tau);
            break;
        }
        tau += 1;
    }
    let tau = found?;
    let (a, b, c) = (diff[tau - 1], diff[tau], diff[tau + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > f64::EPSILON {
        (0.5 * (a - c) / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let f0 = sample_rate / (tau as f64 + shift);
    (f0.is_finite() && f0 <= sample_rate / 2.0).then_some(f0)
}

pub fn yin<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    grid: &FrameGrid,
    cfg: &YinConfig,
) -> Result<PitchTrack> {
    if !(0.0..1.0).contains(&cfg.threshold) || cfg.threshold == 0.0 {
        return Err(DspError::param("threshold", "must be in (0, 1)"));
    }
    if cfg.fmin_hz <= 0.0 || cfg.fmax_hz <= cfg.fmin_hz {
        return Err(DspError::param("fmin_hz", "need 0 < fmin < fmax"));
    }
    let sr = sample_rate as f64;
    let n = grid.frame_length;
    let mut frame = vec![T::zero(); n];
    let mut diff = vec![0.0; n / 2 + 1];
    let count = grid.frame_count(samples.len());
    let mut f0 = Vec::with_capacity(count);
    let mut voiced = Vec::with_capacity(count);
    for j in 0..count {
        grid.fill_frame(samples, j, &mut frame);
        match frame_pitch(&frame, sr, cfg, &mut diff) {
            Some(hz) => {
                f0.push(hz);
                voiced.push(true);
            }
            None => {
                f0.push(0.0);
                voiced.push(false);
            }
        }
    }
    let mut voiced_values: Vec<f64> = f0
        .iter()
        .zip(&voiced)
        .filter(|(_, &v)| v)
        .map(|(&f, _)| f)
        .collect();
    let voiced_frames = voiced_values.len();
    let mean_hz = (voiced_frames > 0).then(|| voiced_values.iter().sum::<f64>() / voiced_frames as f64);
    let min_hz = voiced_values.iter().copied().reduce(f64::min);
    let max_hz = voiced_values.iter().copied().reduce(f64::max);
    let median_hz = median(&mut voiced_values);
    Ok(PitchTrack {
        frame_times: grid.frame_times(samples.len(), sample_rate),
        f0_hz: f0,
        voiced,
        stats: PitchStats {
            voiced_frames,
            voiced_ratio: voiced_frames as f64 / count as f64,
            median_hz,
            mean_hz,
            min_hz,
            max_hz,
        },
    })
}
