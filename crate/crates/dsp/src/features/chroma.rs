use serde::Serialize;

use crate::frames::FrameGrid;
use crate::scalar::Sample;
use crate::stft::{bin_frequencies, magnitude_frames};

pub const PITCH_CLASSES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

const CHROMA_FMIN_HZ: f64 = 55.0;
const CHROMA_FMAX_HZ: f64 = 5000.0;

/// Pitch class (C = 0) of a frequency in twelve-tone equal temperament, A4 = 440 Hz.
pub fn pitch_class(freq_hz: f64) -> usize {
    let semis = (12.0 * (freq_hz / 440.0).log2()).round() as i64 + 9;
    semis.rem_euclid(12) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chroma {
    pub frame_times: Vec<f64>,
    /// Per frame, twelve energies in C..B order, max-normalised per frame.
    pub frames: Vec<[f64; 12]>,
    pub mean: [f64; 12],
}

impl Chroma {
    pub fn argmax(frame: &[f64; 12]) -> usize {
        frame
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
            .0
    }
}

pub fn chroma<T: Sample>(samples: &[T], sample_rate: u32, grid: &FrameGrid) -> Chroma {
    let freqs = bin_frequencies(grid.frame_length, sample_rate);
    let fmax = CHROMA_FMAX_HZ.min(sample_rate as f64 / 2.0);
    let classes: Vec<Option<usize>> = freqs
        .iter()
        .map(|&f| (f >= CHROMA_FMIN_HZ && f <= fmax).then(|| pitch_class(f)))
        .collect();
    let mags = magnitude_frames(samples, grid);
    let frames: Vec<[f64; 12]> = mags
        .iter()
        .map(|m| {
            let mut c = [0.0; 12];
            for (&v, class) in m.iter().zip(&classes) {
                if let Some(pc) = class {
                    let v = v.as_f64();
                    c[*pc] += v * v;
                }
            }
            let max = c.iter().copied().fold(0.0, f64::max);
            if max > 1e-12 {
                for v in &mut c {
                    *v /= max;
                }
            } else {
                c = [0.0; 12];
            }
            c
        })
        .collect();
    let mut mean = [0.0; 12];
    for f in &frames {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= frames.len().max(1) as f64;
    }
    Chroma {
        frame_times: grid.frame_times(samples.len(), sample_rate),
        frames,
        mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitch_classes() {
        assert_eq!(PITCH_CLASSES[pitch_class(440.0)], "A");
        assert_eq!(PITCH_CLASSES[pitch_class(261.63)], "C");
        assert_eq!(PITCH_CLASSES[pitch_class(392.0)], "G");
        assert_eq!(PITCH_CLASSES[pitch_class(110.0)], "A");
    }

    #[test]
    fn a4_frames_peak_at_a() {
        let x: Vec<f64> = (0..16_000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin())
            .collect();
        let c = chroma(&x, 16_000, &FrameGrid::default());
        assert!(c.frames.iter().all(|f| Chroma::argmax(f) == 9));
    }

    #[test]
    fn silence_all_zero() {
        let c = chroma(&vec![0.0f32; 8000], 16_000, &FrameGrid::default());
        assert!(c.frames.iter().all(|f| f.iter().all(|&v| v == 0.0)));
    }
}
