//! Shared analysis framing for every frame-based feature.

use serde::{Deserialize, Serialize};

use crate::error::{DspError, Result};
use crate::scalar::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic window of length `n`.
    pub fn coefficients<T: Sample>(self, n: usize) -> Vec<T> {
        match self {
            WindowKind::Rectangular => vec![T::one(); n],
            WindowKind::Hann => (0..n)
                .map(|i| {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    T::lit(0.5 - 0.5 * phase.cos())
                })
                .collect(),
        }
    }
}

/// Frames start at sample 0 and advance by `hop_length`; a signal shorter
/// than one frame yields a single zero-padded frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGrid {
    pub frame_length: usize,
    pub hop_length: usize,
    pub window: WindowKind,
}

impl Default for FrameGrid {
    fn default() -> Self {
        Self {
            frame_length: 2048,
            hop_length: 512,
            window: WindowKind::Hann,
        }
    }
}

impl FrameGrid {
    pub fn new(frame_length: usize, hop_length: usize, window: WindowKind) -> Result<Self> {
        let grid = Self {
            frame_length,
            hop_length,
            window,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_length < 16 {
            return Err(DspError::param("frame_length", "must be at least 16"));
        }
        if self.hop_length == 0 || self.hop_length > self.frame_length {
            return Err(DspError::param(
                "hop_length",
                "must be in 1..=frame_length",
            ));
        }
        Ok(())
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.frame_length {
            1
        } else {
            1 + (len - self.frame_length) / self.hop_length
        }
    }

    pub fn frame_start(&self, index: usize) -> usize {
        index * self.hop_length
    }

    /// Frame centres in seconds; never past the end of the signal.
    pub fn frame_times(&self, len: usize, sample_rate: u32) -> Vec<f64> {
        let sr = sample_rate as f64;
        if len <= self.frame_length {
            return vec![len as f64 / 2.0 / sr];
        }
        (0..self.frame_count(len))
            .map(|j| (self.frame_start(j) + self.frame_length / 2) as f64 / sr)
            .collect()
    }

    /// Copies frame `index` into `out`, zero-padding past the end.
    pub fn fill_frame<T: Sample>(&self, samples: &[T], index: usize, out: &mut [T]) {
        let start = self.frame_start(index);
        for (i, slot) in out.iter_mut().enumerate().take(self.frame_length) {
            *slot = samples.get(start + i).copied().unwrap_or_else(T::zero);
        }
    }
}
