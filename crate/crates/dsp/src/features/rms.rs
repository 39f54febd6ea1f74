use serde::Serialize;

use super::Series;
use crate::frames::FrameGrid;
use crate::scalar::Sample;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsEnvelope<T> {
    pub frame_times: Vec<f64>,
    pub rms: Series<T>,
}

/// Window-weighted RMS per frame: `sqrt(sum(w^2 x^2) / sum(w^2))`.
pub fn rms_energy<T: Sample>(samples: &[T], sample_rate: u32, grid: &FrameGrid) -> RmsEnvelope<T> {
    let window: Vec<T> = grid.window.coefficients(grid.frame_length);
    let norm: T = window.iter().map(|&w| w * w).sum();
    let mut frame = vec![T::zero(); grid.frame_length];
    let values = (0..grid.frame_count(samples.len()))
        .map(|j| {
            grid.fill_frame(samples, j, &mut frame);
            let acc: T = frame
                .iter()
                .zip(&window)
                .map(|(&x, &w)| w * w * x * x)
                .sum();
            (acc / norm).sqrt()
        })
        .collect();
    RmsEnvelope {
        frame_times: grid.frame_times(samples.len(), sample_rate),
        rms: Series::new(values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::WindowKind;

    #[test]
    fn square_wave_full_scale() {
        let x: Vec<f64> = (0..16_000).map(|i| if (i / 20) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = rms_energy(&x, 16_000, &FrameGrid::default());
        assert!((e.rms.mean - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sine_amplitude_over_root_two() {
        for a in [0.25, 0.5, 0.9] {
            let x: Vec<f64> = (0..32_000)
                .map(|i| a * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin())
                .collect();
            for window in [WindowKind::Hann, WindowKind::Rectangular] {
                let g = FrameGrid::new(2048, 512, window).unwrap();
                let e = rms_energy(&x, 16_000, &g);
                assert!((e.rms.mean - a / 2f64.sqrt()).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn silence_zero() {
        let e = rms_energy(&vec![0.0f32; 4000], 8000, &FrameGrid::default());
        assert_eq!(e.rms.mean, 0.0);
    }
}
