//! Usability check for original or derived audio.

use serde::Serialize;

use crate::buffer::AudioBuffer;
use crate::features::amplitude::amplitude_stats;
use crate::frames::FrameGrid;
use crate::scalar::Sample;

/// Peak below this is treated as silent (about -80 dBFS).
pub const SILENT_PEAK: f64 = 1e-4;
/// A frame is clipped when at least this share of its samples is at clip level.
pub const CLIPPED_FRAME_SAMPLE_RATIO: f64 = 0.01;
/// Flag clipping when more than this share of frames is clipped.
pub const CLIPPED_FRAME_LIMIT: f64 = 0.10;
pub const MIN_USABLE_DURATION_S: f64 = 0.1;
pub const DC_OFFSET_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    Silent,
    Clipping,
    TooShort,
    DcOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub usable: bool,
    pub flags: Vec<QualityFlag>,
    pub peak: f64,
    pub clipped_frame_ratio: f64,
    pub duration_s: f64,
}

/// Share of default-grid frames (rectangular) whose clipping ratio reaches
/// `CLIPPED_FRAME_SAMPLE_RATIO` on any channel.
pub fn clipped_frame_ratio<T: Sample>(audio: &AudioBuffer<T>) -> f64 {
    let grid = FrameGrid::default();
    let count = grid.frame_count(audio.len());
    let clipped = (0..count)
        .filter(|&j| {
            let a = grid.frame_start(j);
            let b = (a + grid.frame_length).min(audio.len());
            let frame: Vec<Vec<T>> = audio.channels().iter().map(|c| c[a..b].to_vec()).collect();
            frame
                .iter()
                .any(|c| amplitude_stats(std::slice::from_ref(c)).clipping_ratio >= CLIPPED_FRAME_SAMPLE_RATIO)
        })
        .count();
    clipped as f64 / count as f64
}

pub fn verify_quality<T: Sample>(audio: &AudioBuffer<T>) -> QualityReport {
    let stats = amplitude_stats(audio.channels());
    let clipped = clipped_frame_ratio(audio);
    let mut flags = Vec::new();
    if stats.peak < SILENT_PEAK {
        flags.push(QualityFlag::Silent);
    }
    if clipped > CLIPPED_FRAME_LIMIT {
        flags.push(QualityFlag::Clipping);
    }
    if audio.duration_s() < MIN_USABLE_DURATION_S {
        flags.push(QualityFlag::TooShort);
    }
    if stats.dc_offset.abs() > DC_OFFSET_LIMIT {
        flags.push(QualityFlag::DcOffset);
    }
    QualityReport {
        usable: flags.is_empty(),
        flags,
        peak: stats.peak,
        clipped_frame_ratio: clipped,
        duration_s: audio.duration_s(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_silent() {
        let r = verify_quality(&AudioBuffer::mono(16_000, vec![0.0f64; 16_000]).unwrap());
        assert!(!r.usable);
        assert_eq!(r.flags, vec![QualityFlag::Silent]);
    }

    #[test]
    fn clean_tone_usable() {
        let x: Vec<f64> = (0..16_000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin())
            .collect();
        let r = verify_quality(&AudioBuffer::mono(16_000, x).unwrap());
        assert!(r.usable && r.flags.is_empty());
    }
}
