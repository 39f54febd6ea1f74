//! Key-centre estimation by correlating mean chroma with the
//! Krumhansl-Kessler major and minor profiles in all twelve rotations.

use serde::Serialize;

use super::chroma::{chroma, PITCH_CLASSES};
use crate::error::{DspError, Result};
use crate::frames::FrameGrid;
use crate::scalar::Sample;

pub const MAJOR_PROFILE: [f64; 12] = [
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88,
];
pub const MINOR_PROFILE: [f64; 12] = [
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyEstimate {
    pub tonic: &'static str,
    pub tonic_index: usize,
    pub mode: Mode,
    pub correlation: f64,
    pub label: String,
}

fn pearson(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..12 {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma).powi(2);
        db += (b[i] - mb).powi(2);
    }
    if da <= 0.0 || db <= 0.0 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

pub fn key_from_chroma(mean_chroma: &[f64; 12]) -> Result<KeyEstimate> {
    let mean = mean_chroma.iter().sum::<f64>() / 12.0;
    if mean_chroma.iter().all(|&v| (v - mean).abs() < 1e-9) {
        return Err(DspError::NoTonalContent);
    }
    let mut best: Option<(f64, usize, Mode)> = None;
    for (mode, profile) in [(Mode::Major, &MAJOR_PROFILE), (Mode::Minor, &MINOR_PROFILE)] {
        for tonic in 0..12 {
            let mut rotated = [0.0; 12];
            for (pc, slot) in rotated.iter_mut().enumerate() {
                *slot = profile[(pc + 12 - tonic) % 12];
            }
            let r = pearson(mean_chroma, &rotated);
            if best.map_or(true, |b| r > b.0) {
                best = Some((r, tonic, mode));
            }
        }
    }
    let (correlation, tonic_index, mode) = best.expect("24 candidates");
    let tonic = PITCH_CLASSES[tonic_index];
    let label = format!(
        "{tonic} {}",
        match mode {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    );
    Ok(KeyEstimate {
        tonic,
        tonic_index,
        mode,
        correlation,
        label,
    })
}

pub fn key_estimate<T: Sample>(samples: &[T], sample_rate: u32, grid: &FrameGrid) -> Result<KeyEstimate> {
    key_from_chroma(&chroma(samples, sample_rate, grid).mean)
}
