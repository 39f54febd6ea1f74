use serde::Serialize;

use crate::error::{DspError, Result};
use crate::scalar::Sample;

/// Planar multi-channel audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    sample_rate: u32,
    channels: Vec<Vec<T>>,
}

impl<T: Sample> AudioBuffer<T> {
    pub fn new(sample_rate: u32, channels: Vec<Vec<T>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(DspError::param("sample_rate", "must be positive"));
        }
        let Some(first) = channels.first() else {
            return Err(DspError::param("channels", "at least one channel required"));
        };
        let len = first.len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(DspError::param("channels", "channel lengths differ"));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<T>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<T>> {
        self.channels
    }

    /// Channel average. A single-channel buffer is returned unchanged.
    pub fn to_mono(&self) -> Vec<T> {
        if self.channels.len() == 1 {
            return self.channels[0].clone();
        }
        let scale = T::one() / T::from_usize_lossy(self.channels.len());
        (0..self.len())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<T>() * scale)
            .collect()
    }

    /// Applies `f` to every channel independently.
    pub fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[T]) -> Result<Vec<T>>,
    {
        let channels = self
            .channels
            .iter()
            .map(|c| f(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.sample_rate, channels)
    }

    pub fn convert<U: Sample>(&self) -> AudioBuffer<U> {
        AudioBuffer {
            sample_rate: self.sample_rate,
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| U::lit(s.as_f64())).collect())
                .collect(),
        }
    }
}

/// File-level facts reported by the metadata tools.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AudioMetadata {
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub channels: usize,
    pub format: String,
}
