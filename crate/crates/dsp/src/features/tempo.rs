//! Two-candidate tempo estimate from the autocorrelation of the onset envelope.

use serde::Serialize;

use super::onset::{onset_envelope, OnsetEnvelope};
use crate::error::{DspError, Result};
use crate::scalar::Sample;

pub const MIN_BPM: f64 = 40.0;
pub const MAX_BPM: f64 = 240.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TempoCandidate {
    pub bpm: f64,
    /// Relative salience; the two candidates sum to one.
    pub salience: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TempoEstimate {
    pub primary: TempoCandidate,
    pub secondary: TempoCandidate,
}

fn autocorrelation(env: &[f64], max_lag: usize) -> Vec<f64> {
    let n = env.len();
    let mean = env.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = env.iter().map(|v| v - mean).collect();
    (0..=max_lag)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            centred[..n - lag]
                .iter()
                .zip(&centred[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

fn refine(ac: &[f64], lag: usize) -> f64 {
    if lag == 0 || lag + 1 >= ac.len() {
        return lag as f64;
    }
    let (a, b, c) = (ac[lag - 1], ac[lag], ac[lag + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < f64::EPSILON {
        lag as f64
    } else {
        lag as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }
}

pub fn tempo_from_envelope(env: &OnsetEnvelope) -> Result<TempoEstimate> {
    if env.strength.iter().all(|&v| v == 0.0) {
        return Err(DspError::NoRhythmicContent);
    }
    let fps = env.frame_rate_hz;
    let min_lag = (60.0 * fps / MAX_BPM).floor().max(1.0) as usize;
    let max_lag = (60.0 * fps / MIN_BPM).ceil() as usize;
    if min_lag + 2 >= env.strength.len() {
        return Err(DspError::NoRhythmicContent);
    }
    let ac = autocorrelation(&env.strength, max_lag + 1);
    let upper = max_lag.min(ac.len() - 2);
    let mut peaks: Vec<(f64, f64)> = (min_lag.max(1)..=upper)
        .filter(|&l| ac[l] > 0.0 && ac[l] > ac[l - 1] && ac[l] >= ac[l + 1])
        .map(|l| (60.0 * fps / refine(&ac, l), ac[l]))
        .filter(|(bpm, _)| (MIN_BPM..=MAX_BPM).contains(bpm))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let Some(&(bpm1, s1)) = peaks.first() else {
        return Err(DspError::NoRhythmicContent);
    };
    let (bpm2, s2) = match peaks.get(1) {
        Some(&p) => p,
        None => {
            let alt = if bpm1 * 2.0 <= MAX_BPM { bpm1 * 2.0 } else { bpm1 / 2.0 };
            (alt, 0.0)
        }
    };
    let total = s1 + s2;
    Ok(TempoEstimate {
        primary: TempoCandidate {
            bpm: bpm1,
            salience: s1 / total,
        },
        secondary: TempoCandidate {
            bpm: bpm2,
            salience: s2 / total,
        },
    })
}

pub fn tempo_estimate<T: Sample>(samples: &[T], sample_rate: u32) -> Result<TempoEstimate> {
    tempo_from_envelope(&onset_envelope(samples, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::onset::tests::click_train;

    #[test]
    fn click_track_120() {
        let times: Vec<f64> = (0..24).map(|k| 0.25 + 0.5 * k as f64).collect();
        let x = click_train(16_000, &times, 12.5);
        let t = tempo_estimate(&x, 16_000).unwrap();
        let p = t.primary.bpm;
        assert!(
            (p - 120.0).abs() <= 2.0 || (p - 60.0).abs() <= 1.0 || (p - 240.0).abs() <= 4.0,
            "primary {p}"
        );
        assert!(
            (t.primary.bpm - 120.0).abs() <= 2.0 || (t.secondary.bpm - 120.0).abs() <= 2.0,
            "{t:?}"
        );
        assert!((t.primary.salience + t.secondary.salience - 1.0).abs() < 1e-6);
    }

    #[test]
    fn silence_has_no_rhythm() {
        assert_eq!(
            tempo_estimate(&vec![0.0f64; 64_000], 16_000),
            Err(DspError::NoRhythmicContent)
        );
    }
}
