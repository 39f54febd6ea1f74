//! Energy-based temporal segmentation: silence intervals, activity regions and
//! fixed or silence-delimited segments.

use serde::Serialize;

use super::Interval;
use crate::error::{DspError, Result};
use crate::scalar::{amplitude_db, Sample};

/// 20 ms frames on a 10 ms hop; the final frame is truncated at the end.
const FRAME_S: f64 = 0.02;
const HOP_S: f64 = 0.01;

struct LevelFrame {
    start: usize,
    end: usize,
    dbfs: f64,
}

fn level_frames<T: Sample>(samples: &[T], sample_rate: u32) -> Vec<LevelFrame> {
    let sr = sample_rate as f64;
    let frame = ((FRAME_S * sr).round() as usize).max(1);
    let hop = ((HOP_S * sr).round() as usize).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let end = (start + frame).min(samples.len());
        let ms = samples[start..end]
            .iter()
            .map(|x| x.as_f64().powi(2))
            .sum::<f64>()
            / (end - start) as f64;
        out.push(LevelFrame {
            start,
            end,
            dbfs: amplitude_db(ms.sqrt()),
        });
        if end == samples.len() {
            break;
        }
        start += hop;
    }
    out
}

fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            let j = (i..flags.len()).find(|&k| !flags[k]).unwrap_or(flags.len());
            out.push((i, j - 1));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Intervals at least `min_len_s` long whose 20 ms frames all sit below `threshold_dbfs`.
pub fn detect_silence<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    threshold_dbfs: f64,
    min_len_s: f64,
) -> Result<Vec<Interval>> {
    if min_len_s < 0.0 {
        return Err(DspError::param("min_len_s", "must be non-negative"));
    }
    let sr = sample_rate as f64;
    let frames = level_frames(samples, sample_rate);
    let silent: Vec<bool> = frames.iter().map(|f| f.dbfs < threshold_dbfs).collect();
    Ok(runs(&silent)
        .into_iter()
        .map(|(a, b)| Interval {
            start_s: frames[a].start as f64 / sr,
            end_s: frames[b].end as f64 / sr,
        })
        .filter(|iv| iv.duration_s() + 1e-9 >= min_len_s)
        .collect())
}

/// Regions whose level exceeds `threshold_dbfs`, extended by `hang_s` and
/// merged across gaps shorter than `hang_s`.
pub fn energy_vad<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    threshold_dbfs: f64,
    hang_s: f64,
) -> Result<Vec<Interval>> {
    if hang_s < 0.0 {
        return Err(DspError::param("hang_s", "must be non-negative"));
    }
    let sr = sample_rate as f64;
    let duration = samples.len() as f64 / sr;
    let frames = level_frames(samples, sample_rate);
    let active: Vec<bool> = frames.iter().map(|f| f.dbfs > threshold_dbfs).collect();
    let mut merged: Vec<Interval> = Vec::new();
    for (a, b) in runs(&active) {
        let iv = Interval {
            start_s: frames[a].start as f64 / sr,
            end_s: (frames[b].end as f64 / sr + hang_s).min(duration),
        };
        match merged.last_mut() {
            Some(last) if iv.start_s - last.end_s < hang_s => last.end_s = last.end_s.max(iv.end_s),
            _ => merged.push(iv),
        }
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    Fixed,
    Silence,
}

/// Fixed-length spans, or the complement of the detected silence intervals.
pub fn segment<T: Sample>(
    samples: &[T],
    sample_rate: u32,
    mode: SegmentMode,
    segment_s: f64,
    threshold_dbfs: f64,
    min_silence_s: f64,
) -> Result<Vec<Interval>> {
    let duration = samples.len() as f64 / sample_rate as f64;
    match mode {
        SegmentMode::Fixed => {
            if !(segment_s > 0.0) {
                return Err(DspError::param("segment_s", "must be positive"));
            }
            let mut out = Vec::new();
            let mut k = 0usize;
            loop {
                let start_s = k as f64 * segment_s;
                if start_s >= duration - 1e-9 {
                    break;
                }
                out.push(Interval {
                    start_s,
                    end_s: ((k + 1) as f64 * segment_s).min(duration),
                });
                k += 1;
            }
            Ok(out)
        }
        SegmentMode::Silence => {
            let silences = detect_silence(samples, sample_rate, threshold_dbfs, min_silence_s)?;
            Ok(complement(&silences, duration))
        }
    }
}

/// Gaps between sorted, non-overlapping intervals within `[0, duration]`.
pub fn complement(intervals: &[Interval], duration: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for iv in intervals {
        if iv.start_s > cursor {
            out.push(Interval {
                start_s: cursor,
                end_s: iv.start_s,
            });
        }
        cursor = cursor.max(iv.end_s);
    }
    if cursor < duration {
        out.push(Interval {
            start_s: cursor,
            end_s: duration,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(sr: u32, secs: f64) -> Vec<f64> {
        (0..(sr as f64 * secs) as usize)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr as f64).sin())
            .collect()
    }

    fn tone_gap_tone() -> Vec<f64> {
        let mut x = tone(16_000, 1.0);
        x.extend(vec![0.0; 16_000]);
        x.extend(tone(16_000, 1.0));
        x
    }

    #[test]
    fn silence_between_tones() {
        let s = detect_silence(&tone_gap_tone(), 16_000, -40.0, 0.3).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].start_s - 1.0).abs() <= 0.05 && (s[0].end_s - 2.0).abs() <= 0.05, "{s:?}");
    }

    #[test]
    fn all_silence_covers_clip() {
        let s = detect_silence(&vec![0.0f64; 24_000], 16_000, -40.0, 0.3).unwrap();
        assert_eq!(s, vec![Interval { start_s: 0.0, end_s: 1.5 }]);
    }

    #[test]
    fn continuous_tone_has_no_silence() {
        assert!(detect_silence(&tone(16_000, 2.0), 16_000, -40.0, 0.1).unwrap().is_empty());
    }

    #[test]
    fn fixed_segments() {
        let x = vec![0.1f64; 5 * 8_000];
        let segs = segment(&x, 8_000, SegmentMode::Fixed, 2.0, -40.0, 0.3).unwrap();
        let spans: Vec<(f64, f64)> = segs.iter().map(|s| (s.start_s, s.end_s)).collect();
        assert_eq!(spans, vec![(0.0, 2.0), (2.0, 4.0), (4.0, 5.0)]);
        let one = segment(&x, 8_000, SegmentMode::Fixed, 30.0, -40.0, 0.3).unwrap();
        assert_eq!(one, vec![Interval { start_s: 0.0, end_s: 5.0 }]);
    }

    #[test]
    fn silence_mode_is_complement() {
        let x = tone_gap_tone();
        let silences = detect_silence(&x, 16_000, -40.0, 0.3).unwrap();
        let segs = segment(&x, 16_000, SegmentMode::Silence, 0.0, -40.0, 0.3).unwrap();
        assert_eq!(segs, complement(&silences, 3.0));
        assert_eq!(segs.len(), 2);
    }

    #[test]
    fn vad_edge_cases() {
        assert!(energy_vad(&vec![0.0f64; 16_000], 16_000, -35.0, 0.2).unwrap().is_empty());
        assert_eq!(energy_vad(&tone(16_000, 2.0), 16_000, -35.0, 0.2).unwrap().len(), 1);
    }
}
