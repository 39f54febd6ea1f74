use serde::Serialize;

use crate::scalar::{amplitude_db, Sample};

/// Samples at or above this magnitude count as clipped.
pub const CLIP_LEVEL: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeStats {
    pub peak: f64,
    pub mean_abs: f64,
    pub rms: f64,
    pub clipping_ratio: f64,
    /// RMS level in dBFS; `-inf` for digital silence.
    pub mean_volume_db: f64,
    /// Peak level in dBFS; `-inf` for digital silence.
    pub max_volume_db: f64,
    pub dc_offset: f64,
}

pub fn amplitude_stats<T: Sample>(channels: &[Vec<T>]) -> AmplitudeStats {
    let mut peak = 0.0f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut sum = 0.0;
    let mut clipped = 0usize;
    let mut count = 0usize;
    for ch in channels {
        for &s in ch {
            let v = s.as_f64();
            let a = v.abs();
            peak = peak.max(a);
            abs_sum += a;
            sq_sum += v * v;
            sum += v;
            if a >= CLIP_LEVEL {
                clipped += 1;
            }
            count += 1;
        }
    }
    let n = count.max(1) as f64;
    let rms = (sq_sum / n).sqrt();
    AmplitudeStats {
        peak,
        mean_abs: abs_sum / n,
        rms,
        clipping_ratio: clipped as f64 / n,
        mean_volume_db: amplitude_db(rms),
        max_volume_db: amplitude_db(peak),
        dc_offset: sum / n,
    }
}
