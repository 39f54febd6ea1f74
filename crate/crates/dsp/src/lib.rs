//! Native audio tools: decoding, framing, feature extraction and derivations.
//!
//! Every routine is generic over [`Sample`] (`f32` or `f64`). The orchestration
//! layer works in double precision through the [`Audio`] alias.

pub mod buffer;
pub mod error;
pub mod features;
pub mod frames;
pub mod plot;
pub mod quality;
pub mod scalar;
pub mod stft;
pub mod transform;
pub mod wav;

pub use buffer::{AudioBuffer, AudioMetadata};
pub use error::{DspError, Result};
pub use features::{Interval, Series};
pub use frames::{FrameGrid, WindowKind};
pub use scalar::Sample;

/// Double-precision audio, used throughout the orchestration layer.
pub type Audio = AudioBuffer<f64>;
/// Single-precision audio.
pub type Audio32 = AudioBuffer<f32>;
pub type SpectralSummary = features::spectral::SpectralSummary<f64>;
pub type SpectralSummary32 = features::spectral::SpectralSummary<f32>;
pub type RmsEnvelope = features::rms::RmsEnvelope<f64>;
