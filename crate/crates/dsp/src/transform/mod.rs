//! Derivations that produce new audio. None of them mutate their input.

pub mod denoise;
pub mod filter;
pub mod hpss;
pub mod resample;

use serde::{Deserialize, Serialize};

use crate::buffer::AudioBuffer;
use crate::error::{DspError, Result};
use crate::scalar::Sample;

/// Sample-exact slice `[round(start*sr), round(end*sr))`.
pub fn trim<T: Sample>(audio: &AudioBuffer<T>, start_s: f64, end_s: f64) -> Result<AudioBuffer<T>> {
    let duration = audio.duration_s();
    if !(start_s >= 0.0) || !(end_s > start_s) || end_s > duration + 1e-9 {
        return Err(DspError::param(
            "start_s/end_s",
            format!("need 0 <= start_s < end_s <= {duration:.6}, got [{start_s}, {end_s}]"),
        ));
    }
    let sr = audio.sample_rate() as f64;
    let a = (start_s * sr).round() as usize;
    let b = ((end_s * sr).round() as usize).min(audio.len());
    if b <= a {
        return Err(DspError::param("start_s/end_s", "span shorter than one sample"));
    }
    audio.map_channels(|c| Ok(c[a..b].to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    Mono,
    Stereo,
}

pub fn convert_channels<T: Sample>(
    audio: &AudioBuffer<T>,
    target: ChannelLayout,
) -> Result<AudioBuffer<T>> {
    match (target, audio.channel_count()) {
        (ChannelLayout::Mono, 1) | (ChannelLayout::Stereo, 2) => Ok(audio.clone()),
        (ChannelLayout::Mono, _) => AudioBuffer::mono(audio.sample_rate(), audio.to_mono()),
        (ChannelLayout::Stereo, 1) => {
            let c = audio.channels()[0].clone();
            AudioBuffer::new(audio.sample_rate(), vec![c.clone(), c])
        }
        (ChannelLayout::Stereo, _) => {
            let ch = audio.channels();
            AudioBuffer::new(audio.sample_rate(), vec![ch[0].clone(), ch[1].clone()])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(sr: u32, secs: f64) -> AudioBuffer<f64> {
        let n = (sr as f64 * secs) as usize;
        AudioBuffer::mono(sr, (0..n).map(|i| (i % 1000) as f64 / 1000.0).collect()).unwrap()
    }

    #[test]
    fn trim_five_seconds() {
        let a = ramp(16_000, 24.0);
        let t = trim(&a, 3.0, 8.0).unwrap();
        assert_eq!(t.duration_s(), 5.0);
        assert_eq!(t.channels()[0][0], a.channels()[0][48_000]);
    }

    #[test]
    fn trim_full_is_identity() {
        let a = ramp(8_000, 2.5);
        assert_eq!(trim(&a, 0.0, a.duration_s()).unwrap(), a);
    }

    #[test]
    fn trim_reversed_or_out_of_range_fails() {
        let a = ramp(8_000, 10.0);
        assert!(trim(&a, 8.0, 3.0).is_err());
        assert!(trim(&a, 3.0, 11.0).is_err());
        assert!(trim(&a, -1.0, 2.0).is_err());
    }

    #[test]
    fn channel_conversions() {
        let l: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let stereo = AudioBuffer::new(8_000, vec![l.clone(), l.clone()]).unwrap();
        let mono = convert_channels(&stereo, ChannelLayout::Mono).unwrap();
        assert_eq!(mono.channels()[0], l);
        let m = AudioBuffer::mono(8_000, l.clone()).unwrap();
        let s = convert_channels(&m, ChannelLayout::Stereo).unwrap();
        assert_eq!(s.channels(), &[l.clone(), l.clone()]);
        assert_eq!(convert_channels(&m, ChannelLayout::Mono).unwrap(), m);
    }
}
