//! Band-limited resampling with a Blackman-windowed sinc kernel.

use crate::buffer::AudioBuffer;
use crate::error::{DspError, Result};
use crate::scalar::Sample;

const ZERO_CROSSINGS: f64 = 32.0;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    let t = (x + 1.0) / 2.0;
    let tau = 2.0 * std::f64::consts::PI;
    0.42 - 0.5 * (tau * t).cos() + 0.08 * (2.0 * tau * t).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn resample_channel<T: Sample>(x: &[T], from: u32, to: u32) -> Vec<T> {
    let ratio = to as f64 / from as f64;
    let cutoff = ratio.min(1.0) * 0.97;
    let half_width = ZERO_CROSSINGS / cutoff;
    let out_len = (x.len() as f64 * ratio).round() as usize;
    (0..out_len)
        .map(|n| {
            let pos = n as f64 / ratio;
            let lo = ((pos - half_width).ceil().max(0.0)) as usize;
            let hi = ((pos + half_width).floor() as usize).min(x.len().saturating_sub(1));
            let mut acc = 0.0;
            for (k, &s) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = pos - k as f64;
                acc += s.as_f64() * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            T::lit(acc)
        })
        .collect()
}

pub fn resample<T: Sample>(audio: &AudioBuffer<T>, target_hz: i64) -> Result<AudioBuffer<T>> {
    if target_hz <= 0 || target_hz > u32::MAX as i64 {
        return Err(DspError::param("target_hz", "must be a positive rate"));
    }
    let target = target_hz as u32;
    if target == audio.sample_rate() {
        return Ok(audio.clone());
    }
    let channels = audio
        .channels()
        .iter()
        .map(|c| resample_channel(c, audio.sample_rate(), target))
        .collect();
    AudioBuffer::new(target, channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_rate_identity() {
        let a = AudioBuffer::mono(16_000, vec![0.1f64, -0.2, 0.3]).unwrap();
        assert_eq!(resample(&a, 16_000).unwrap(), a);
    }

    #[test]
    fn upsample_preserves_duration() {
        let a = AudioBuffer::mono(8_000, vec![0.0f64; 8_001]).unwrap();
        let b = resample(&a, 16_000).unwrap();
        assert!((b.duration_s() - a.duration_s()).abs() <= 1.0 / 16_000.0);
    }

    #[test]
    fn non_positive_rate_rejected() {
        let a = AudioBuffer::mono(8_000, vec![0.0f64; 10]).unwrap();
        assert!(resample(&a, 0).is_err());
        assert!(resample(&a, -5).is_err());
    }
}
