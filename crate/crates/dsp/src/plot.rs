//! Deterministic PNG renderings of waveforms and spectrograms.

use serde::{Deserialize, Serialize};

use crate::buffer::AudioBuffer;
use crate::error::{DspError, Result};
use crate::frames::{FrameGrid, WindowKind};
use crate::scalar::Sample;
use crate::stft::magnitude_frames;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Waveform,
    Spectrogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotImage {
    pub kind: PlotKind,
    pub width: u32,
    pub height: u32,
    pub png: Vec<u8>,
}

pub const PLOT_WIDTH: u32 = 800;
pub const WAVEFORM_HEIGHT: u32 = 200;
pub const SPECTROGRAM_HEIGHT: u32 = 256;
const SPECTROGRAM_RANGE_DB: f64 = 80.0;

fn encode_gray(width: u32, height: u32, pixels: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| DspError::Render(e.to_string()))?;
        writer
            .write_image_data(pixels)
            .map_err(|e| DspError::Render(e.to_string()))?;
    }
    Ok(out)
}

fn waveform<T: Sample>(samples: &[T]) -> Result<PlotImage> {
    let (w, h) = (PLOT_WIDTH, WAVEFORM_HEIGHT);
    let mut pixels = vec![255u8; (w * h) as usize];
    let mid = h as f64 / 2.0;
    for x in 0..w as usize {
        let a = x * samples.len() / w as usize;
        let b = (((x + 1) * samples.len()) / w as usize).max(a + 1).min(samples.len());
        if a >= samples.len() {
            break;
        }
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for s in &samples[a..b] {
            let v = s.as_f64().clamp(-1.0, 1.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let top = (mid - hi * (mid - 1.0)).round() as usize;
        let bottom = (mid - lo * (mid - 1.0)).round() as usize;
        for y in top.min(h as usize - 1)..=bottom.min(h as usize - 1) {
            pixels[y * w as usize + x] = 0;
        }
    }
    Ok(PlotImage {
        kind: PlotKind::Waveform,
        width: w,
        height: h,
        png: encode_gray(w, h, &pixels)?,
    })
}

fn spectrogram<T: Sample>(samples: &[T]) -> Result<PlotImage> {
    let grid = FrameGrid::new(512, 128, WindowKind::Hann)?;
    let mags = magnitude_frames(samples, &grid);
    let bins = 257usize;
    let (w, h) = (PLOT_WIDTH, SPECTROGRAM_HEIGHT);
    let db: Vec<Vec<f64>> = mags
        .iter()
        .map(|m| m.iter().map(|v| 20.0 * (v.as_f64() + 1e-12).log10()).collect())
        .collect();
    let max_db = db.iter().flatten().copied().fold(f64::MIN, f64::max);
    let mut pixels = vec![0u8; (w * h) as usize];
    for x in 0..w as usize {
        let frame = (x * db.len() / w as usize).min(db.len() - 1);
        for y in 0..h as usize {
            let bin = ((h as usize - 1 - y) * bins / h as usize).min(bins - 1);
            let level = ((db[frame][bin] - max_db + SPECTROGRAM_RANGE_DB) / SPECTROGRAM_RANGE_DB)
                .clamp(0.0, 1.0);
            pixels[y * w as usize + x] = (level * 255.0).round() as u8;
        }
    }
    Ok(PlotImage {
        kind: PlotKind::Spectrogram,
        width: w,
        height: h,
        png: encode_gray(w, h, &pixels)?,
    })
}

/// Renders each requested kind once, in `PlotKind` order.
pub fn render_plots<T: Sample>(audio: &AudioBuffer<T>, kinds: &[PlotKind]) -> Result<Vec<PlotImage>> {
    if kinds.is_empty() {
        return Err(DspError::param("kinds", "at least one plot kind required"));
    }
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let mono = audio.to_mono();
    kinds
        .into_iter()
        .map(|k| match k {
            PlotKind::Waveform => waveform(&mono),
            PlotKind::Spectrogram => spectrogram(&mono),
        })
        .collect()
}
