//! Dispatch for tools computed in-process.

use std::sync::Arc;

use serde_json::{json, Value};

use hearsay_dsp::features::{amplitude, chroma, key, mfcc, onset, pitch, rms, segmentation, spectral, tempo};
use hearsay_dsp::quality::verify_quality;
use hearsay_dsp::transform::{self, denoise, filter, hpss, resample, ChannelLayout};
use hearsay_dsp::wav::metadata;
use hearsay_dsp::{Audio, FrameGrid};

use super::ToolFailure;
use crate::ids::ArtifactId;
use crate::registry::CheckedParams;
use crate::state::db_value;

pub const NATIVE_TOOLS: &[&str] = &[
    "analyze_onsets",
    "analyze_pitch",
    "analyze_spectral_features",
    "compute_amplitude_stats",
    "compute_spectral_statistics",
    "compute_volume_stats",
    "convert_channels",
    "denoise_fft",
    "denoise_wavelet",
    "detect_energy_activity",
    "detect_silence",
    "estimate_key",
    "estimate_tempo",
    "extract_chroma",
    "extract_mfcc",
    "extract_rms_energy",
    "get_audio_metadata",
    "get_audio_stream_stats",
    "highpass_filter",
    "lowpass_filter",
    "resample_audio",
    "segment_audio",
    "separate_hpss",
    "trim_audio",
    "verify_processing_quality",
];

const PITCH_CLASSES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
const MFCC_MELS: usize = 40;
const MAX_FILTER_ORDER: i64 = 12;

/// One resolved artifact argument.
#[derive(Debug, Clone)]
pub struct NativeInput {
    pub id: ArtifactId,
    pub audio: Arc<Audio>,
    pub format: String,
}

/// Derived audio awaiting registration.
#[derive(Debug, Clone)]
pub struct DerivedAudio {
    pub parent: ArtifactId,
    pub audio: Audio,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct NativeOutput {
    pub evidence: Option<Value>,
    pub derived: Vec<DerivedAudio>,
}

impl NativeOutput {
    fn evidence(v: Value) -> Self {
        NativeOutput {
            evidence: Some(v),
            derived: Vec::new(),
        }
    }

    fn derived(parent: ArtifactId, audio: Audio) -> Self {
        NativeOutput {
            evidence: None,
            derived: vec![DerivedAudio {
                parent,
                audio,
                output: None,
            }],
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn required_f64(p: &CheckedParams, name: &str) -> Result<f64, ToolFailure> {
    p.f64(name).ok_or_else(|| ToolFailure::InvalidParams(format!("missing {name}")))
}

fn intervals_payload(intervals: &[hearsay_dsp::Interval]) -> Value {
    Value::Array(
        intervals
            .iter()
            .map(|iv| json!({"start_s": iv.start_s, "end_s": iv.end_s}))
            .collect(),
    )
}

fn amplitude_payload(a: &amplitude::AmplitudeStats) -> Value {
    json!({
        "peak": a.peak,
        "mean_abs": a.mean_abs,
        "rms": a.rms,
        "clipping_ratio": a.clipping_ratio,
        "mean_volume_db": db_value(a.mean_volume_db),
        "max_volume_db": db_value(a.max_volume_db),
        "dc_offset": a.dc_offset,
    })
}

/// Runs `implementation` on `inputs`, which follow the schema order of the
/// artifact parameters in `params`.
pub fn run_native(implementation: &str, params: &CheckedParams, inputs: &[NativeInput]) -> Result<NativeOutput, ToolFailure> {
    let first = inputs
        .first()
        .ok_or_else(|| ToolFailure::InvalidParams("no audio argument".into()))?;
    let audio = first.audio.as_ref();
    let sr = audio.sample_rate();
    let grid = FrameGrid::default();
    let mono = || audio.to_mono();
    let out = match implementation {
        "get_audio_metadata" => NativeOutput::evidence(to_value(&metadata(audio, &first.format))),
        "get_audio_stream_stats" => {
            let meta = metadata(audio, &first.format);
            let channels: Vec<Value> = audio
                .channels()
                .iter()
                .map(|c| amplitude_payload(&amplitude::amplitude_stats(std::slice::from_ref(c))))
                .collect();
            NativeOutput::evidence(json!({
                "duration_s": meta.duration_s,
                "sample_rate_hz": meta.sample_rate_hz,
                "channels": meta.channels,
                "format": meta.format,
                "frames": audio.len(),
                "overall": amplitude_payload(&amplitude::amplitude_stats(audio.channels())),
                "per_channel": channels,
            }))
        }
        "compute_amplitude_stats" => NativeOutput::evidence(amplitude_payload(&amplitude::amplitude_stats(audio.channels()))),
        "compute_volume_stats" => {
            let a = amplitude::amplitude_stats(audio.channels());
            NativeOutput::evidence(json!({
                "mean_volume_db": db_value(a.mean_volume_db),
                "max_volume_db": db_value(a.max_volume_db),
            }))
        }
        "extract_rms_energy" => {
            let env = rms::rms_energy(&mono(), sr, &grid);
            NativeOutput::evidence(json!({"frame_grid": grid, "frame_times": env.frame_times, "rms": env.rms}))
        }
        "analyze_spectral_features" => {
            let rolloff = params.f64("rolloff_fraction").unwrap_or(spectral::DEFAULT_ROLLOFF);
            let clips: Vec<Value> = inputs
                .iter()
                .map(|i| {
                    let s = spectral::spectral_features(&i.audio.to_mono(), i.audio.sample_rate(), &grid, rolloff);
                    let mut v = to_value(&s);
                    v["audio_id"] = json!(i.id);
                    v
                })
                .collect();
            NativeOutput::evidence(json!({"frame_grid": grid, "rolloff_fraction": rolloff, "clips": clips}))
        }
        "compute_spectral_statistics" => NativeOutput::evidence(to_value(&spectral::spectral_statistics(&mono(), sr, &grid))),
        "analyze_pitch" => {
            let cfg = pitch::YinConfig {
                fmin_hz: required_f64(params, "fmin_hz")?,
                fmax_hz: required_f64(params, "fmax_hz")?.min(audio.nyquist_hz()),
                ..pitch::YinConfig::default()
            };
            let track = pitch::yin(&mono(), sr, &grid, &cfg)?;
            NativeOutput::evidence(to_value(&track))
        }
        "analyze_onsets" => {
            let a = onset::onset_analysis(&mono(), sr);
            NativeOutput::evidence(json!({
                "onset_count": a.onset_times_s.len(),
                "onset_times_s": a.onset_times_s,
                "onset_strengths": a.onset_strengths,
                "envelope": a.envelope,
            }))
        }
        "estimate_tempo" => NativeOutput::evidence(to_value(&tempo::tempo_estimate(&mono(), sr)?)),
        "estimate_key" => NativeOutput::evidence(to_value(&key::key_estimate(&mono(), sr, &grid)?)),
        "extract_chroma" => {
            let c = chroma::chroma(&mono(), sr, &grid);
            NativeOutput::evidence(json!({
                "pitch_classes": PITCH_CLASSES,
                "frame_times": c.frame_times,
                "frames": c.frames,
                "mean": c.mean,
            }))
        }
        "extract_mfcc" => {
            let n = params.i64("n_coeff").unwrap_or(13);
            if !(1..=MFCC_MELS as i64).contains(&n) {
                return Err(ToolFailure::InvalidParams(format!("n_coeff must be in 1..={MFCC_MELS}")));
            }
            let m = mfcc::mfcc(&mono(), sr, &grid, n as usize, MFCC_MELS)?;
            NativeOutput::evidence(json!({"n_coeff": n, "frame_times": m.frame_times, "coefficients": m.coefficients}))
        }
        "detect_silence" => {
            let thr = required_f64(params, "threshold_dbfs")?;
            let min = required_f64(params, "min_len_s")?;
            let iv = segmentation::detect_silence(&mono(), sr, thr, min)?;
            NativeOutput::evidence(json!({
                "threshold_dbfs": thr,
                "min_len_s": min,
                "duration_s": audio.duration_s(),
                "silent_intervals": intervals_payload(&iv),
            }))
        }
        "detect_energy_activity" => {
            let thr = required_f64(params, "threshold_dbfs")?;
            let hang = required_f64(params, "hang_s")?;
            let iv = segmentation::energy_vad(&mono(), sr, thr, hang)?;
            NativeOutput::evidence(json!({
                "threshold_dbfs": thr,
                "hang_s": hang,
                "duration_s": audio.duration_s(),
                "active_intervals": intervals_payload(&iv),
            }))
        }
        "segment_audio" => {
            let mode = match params.str("mode") {
                Some("fixed") => segmentation::SegmentMode::Fixed,
                Some("silence") => segmentation::SegmentMode::Silence,
                other => return Err(ToolFailure::InvalidParams(format!("unsupported mode {other:?}"))),
            };
            let spans = segmentation::segment(
                &mono(),
                sr,
                mode,
                required_f64(params, "segment_s")?,
                required_f64(params, "threshold_dbfs")?,
                required_f64(params, "min_silence_s")?,
            )?;
            let mut derived = Vec::new();
            if params.bool("create_clips").unwrap_or(false) {
                for (k, iv) in spans.iter().enumerate() {
                    derived.push(DerivedAudio {
                        parent: first.id,
                        audio: transform::trim(audio, iv.start_s, iv.end_s)?,
                        output: Some(format!("segment_{k}")),
                    });
                }
            }
            NativeOutput {
                evidence: Some(json!({
                    "mode": mode,
                    "duration_s": audio.duration_s(),
                    "segments": intervals_payload(&spans),
                })),
                derived,
            }
        }
        "verify_processing_quality" => NativeOutput::evidence(to_value(&verify_quality(audio))),
        "trim_audio" => {
            let out = transform::trim(audio, required_f64(params, "start_s")?, required_f64(params, "end_s")?)?;
            NativeOutput::derived(first.id, out)
        }
        "convert_channels" => {
            let layout = match params.str("target") {
                Some("mono") => ChannelLayout::Mono,
                Some("stereo") => ChannelLayout::Stereo,
                other => return Err(ToolFailure::InvalidParams(format!("unsupported target {other:?}"))),
            };
            NativeOutput::derived(first.id, transform::convert_channels(audio, layout)?)
        }
        "highpass_filter" | "lowpass_filter" => {
            let mode = if implementation == "highpass_filter" {
                filter::FilterMode::Highpass
            } else {
                filter::FilterMode::Lowpass
            };
            let order = params.i64("order").unwrap_or(4);
            if !(1..=MAX_FILTER_ORDER).contains(&order) {
                return Err(ToolFailure::InvalidParams(format!("order must be in 1..={MAX_FILTER_ORDER}")));
            }
            let out = filter::filter(audio, mode, required_f64(params, "cutoff_hz")?, order as usize)?;
            NativeOutput::derived(first.id, out)
        }
        "resample_audio" => {
            let target = params
                .i64("target_hz")
                .ok_or_else(|| ToolFailure::InvalidParams("missing target_hz".into()))?;
            NativeOutput::derived(first.id, resample::resample(audio, target)?)
        }
        "denoise_fft" | "denoise_wavelet" => {
            let method = if implementation == "denoise_fft" {
                denoise::DenoiseMethod::FftGate
            } else {
                denoise::DenoiseMethod::WaveletThreshold
            };
            let out = denoise::denoise(audio, method, required_f64(params, "strength")?)?;
            NativeOutput::derived(first.id, out)
        }
        "separate_hpss" => {
            let (h, p) = hpss::hpss(audio)?;
            NativeOutput {
                evidence: None,
                derived: vec![
                    DerivedAudio {
                        parent: first.id,
                        audio: h,
                        output: Some("harmonic".into()),
                    },
                    DerivedAudio {
                        parent: first.id,
                        audio: p,
                        output: Some("percussive".into()),
                    },
                ],
            }
        }
        other => return Err(ToolFailure::Execution(format!("no native implementation {other}"))),
    };
    Ok(out)
}
