//! Deterministic inputs and scripts for replaying the hot-water case: two
//! pours in one clip, the second hotter and audibly brighter.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hearsay_dsp::transform::filter::{filter, FilterMode};
use hearsay_dsp::wav::encode_wav_pcm16;
use hearsay_dsp::Audio;

use crate::backend::{Backends, Script, ScriptEntry, ScriptedBackend};
use crate::orchestrator::QuestionInput;
use crate::planner::ExpectedFormat;
use crate::state::MediaInput;

pub const SAMPLE_RATE: u32 = 16_000;
pub const DURATION_S: f64 = 24.0;
pub const FIRST_POUR: (f64, f64) = (3.0, 8.0);
pub const SECOND_POUR: (f64, f64) = (19.0, 24.0);

pub const HOT_WATER_QUESTION: &str = "The recording contains two water-pouring segments. Which one is hot water?";
pub const HOT_WATER_ID: &str = "hot_water";

pub fn hot_water_options() -> Vec<String> {
    vec![
        "First segment = hot water; second segment = cold water".into(),
        "Second segment = hot water; first segment = cold water".into(),
    ]
}

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn band(x: Vec<f64>, mode: FilterMode, cutoff: f64) -> Vec<f64> {
    let a = Audio::mono(SAMPLE_RATE, x).expect("non-empty");
    filter(&a, mode, cutoff, 4).expect("valid cutoff").into_channels().remove(0)
}

/// 24 s mono clip: faint room noise, a dull pour at 3-8 s and a pour with
/// extra high-frequency hiss at 19-24 s.
pub fn two_pour_clip() -> Audio {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_f1e5);
    let n = (DURATION_S * SAMPLE_RATE as f64) as usize;
    let mut x: Vec<f64> = noise(&mut rng, n).into_iter().map(|v| 0.002 * v).collect();
    let body = band(noise(&mut rng, n), FilterMode::Lowpass, 1_500.0);
    let hiss = band(noise(&mut rng, n), FilterMode::Highpass, 4_000.0);
    let sr = SAMPLE_RATE as f64;
    for (span, hiss_gain) in [(FIRST_POUR, 0.0), (SECOND_POUR, 0.6)] {
        let (a, b) = ((span.0 * sr) as usize, ((span.1 * sr) as usize).min(n));
        for i in a..b {
            let t = (i - a) as f64 / sr;
            // Gurgle modulation plus short fades so the pours have edges.
            let env = (0.75 + 0.25 * (2.0 * std::f64::consts::PI * 6.0 * t).sin())
                * (t / 0.05).min(1.0)
                * (((b - i) as f64 / sr) / 0.05).min(1.0);
            x[i] += env * (0.5 * body[i] + hiss_gain * hiss[i]);
        }
    }
    Audio::mono(SAMPLE_RATE, x).expect("non-empty")
}

pub fn two_pour_wav() -> Vec<u8> {
    encode_wav_pcm16(&two_pour_clip())
}

pub fn hot_water_question() -> QuestionInput {
    QuestionInput {
        id: HOT_WATER_ID.into(),
        question: HOT_WATER_QUESTION.into(),
        expected_format: ExpectedFormat::MultipleChoice {
            options: hot_water_options(),
        },
        audio: vec![MediaInput {
            bytes: Arc::new(two_pour_wav()),
            path: "hot_water.wav".into(),
            file: None,
        }],
    }
}

pub const HOT_WATER_CAPTION: &str = "DESCRIPTION: Two pouring events are audible. Segment 1 is at about 3-8 s and segment 2 at about 19-24 s; both sound like water poured into a cup.\n\
FOCUS:\n\
- pouring texture of each segment\n\
- presence of steam or sizzle cues\n\
PRELIMINARY: A\n\
UNCERTAINTY:\n\
- acoustic evidence is insufficient\n\
- no audible steam hiss\n\
CONFIDENCE: 0.3";

pub const HOT_WATER_FOLLOW_UP: &str = "The second audio segment contains more high-frequency hissing and sizzling than the first, which sounds duller and smoother.";

pub const HOT_WATER_ANSWER: &str = "B";

/// Scripted replies for the whole hot-water run.
pub fn hot_water_script() -> Script {
    Script::default()
        .frontend(HOT_WATER_CAPTION)
        .frontend(HOT_WATER_FOLLOW_UP)
        .frontend(HOT_WATER_ANSWER)
        .planner(json!({
            "clarified_intent": "Decide which of the two pours is hot water.",
            "focus_points": ["pour timing", "high-frequency hiss or sizzle in each pour"],
            "candidate_operations": [
                {"description": "isolate each pour", "candidate_tools": ["trim_audio"]},
                {"description": "compare high-frequency energy between pours", "candidate_tools": ["analyze_spectral_features"]}
            ]
        }))
        .planner(json!({
            "kind": "call_tools",
            "rationale": "The caption is low-confidence; isolate both pours for comparison.",
            "calls": [
                {"tool": "trim_audio", "params": {"audio_id": "audio_0", "start_s": 3.0, "end_s": 8.0}},
                {"tool": "trim_audio", "params": {"audio_id": "audio_0", "start_s": 19.0, "end_s": 24.0}}
            ]
        }))
        .planner(json!({
            "kind": "call_tools",
            "rationale": "Compare spectral brightness of the two isolated pours.",
            "calls": [
                {"tool": "analyze_spectral_features", "params": {"audio_ids": ["audio_1", "audio_2"]}}
            ]
        }))
        .planner(json!({
            "kind": "follow_up",
            "rationale": "The measurements differ; ask the frontend to re-listen to both pours with this in mind.",
            "follow_up_request": {
                "artifact_ids": ["audio_1", "audio_2"],
                "prompt": "Compare the two pours. Is there high-frequency hiss, sizzle or steam in either one?"
            }
        }))
        .planner(json!({
            "kind": "answer",
            "rationale": "Measurements and re-listening agree on which pour is brighter and hissier."
        }))
}

/// Both roles served by one scripted backend.
pub fn scripted(script: Script) -> Backends {
    Backends::shared(Arc::new(ScriptedBackend::new(script)))
}

/// Short two-tone clip used by randomized runs; cheap enough for thousands
/// of runs.
pub fn short_clip_wav(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = 8_000;
    let n = sr as usize * 2;
    let f = rng.gen_range(110.0..880.0);
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let f = if t < 1.0 { f } else { 1.5 * f };
            0.4 * (2.0 * std::f64::consts::PI * f * t).sin() + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    encode_wav_pcm16(&Audio::mono(sr, x).expect("non-empty"))
}

pub fn random_question(seed: u64) -> QuestionInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let expected_format = if rng.gen_bool(0.8) {
        let n = rng.gen_range(2..=4);
        ExpectedFormat::MultipleChoice {
            options: (0..n).map(|i| format!("option number {i}")).collect(),
        }
    } else {
        ExpectedFormat::FreeText {
            description: "one short sentence".into(),
        }
    };
    QuestionInput {
        id: format!("rand_{seed}"),
        question: "What happens in the second half of the clip?".into(),
        expected_format,
        audio: vec![MediaInput {
            bytes: Arc::new(short_clip_wav(seed)),
            path: format!("rand_{seed}.wav"),
            file: None,
        }],
    }
}

fn random_call(rng: &mut ChaCha8Rng) -> serde_json::Value {
    let id = |rng: &mut ChaCha8Rng| format!("audio_{}", rng.gen_range(0..4));
    match rng.gen_range(0..10) {
        0 => {
            let a = rng.gen_range(0.0..1.5);
            json!({"tool": "trim_audio", "params": {"audio_id": id(rng), "start_s": a, "end_s": a + rng.gen_range(-0.2..1.0)}})
        }
        1 => json!({"tool": "highpass_filter", "params": {"audio_id": id(rng), "cutoff_hz": rng.gen_range(50.0..6000.0)}}),
        2 => json!({"tool": "extract_rms_energy", "params": {"audio_id": id(rng)}}),
        3 => json!({"tool": "analyze_spectral_features", "params": {"audio_ids": [id(rng), id(rng)]}}),
        4 => json!({"tool": "segment_audio", "params": {"audio_id": id(rng), "mode": "fixed", "segment_s": 0.5, "create_clips": rng.gen_bool(0.5)}}),
        5 => json!({"tool": "get_audio_metadata", "params": {"audio_id": id(rng)}}),
        6 => json!({"tool": "transcribe_whisperx", "params": {"audio_id": id(rng)}}),
        7 => json!({"tool": "content", "params": {"audio_id": id(rng)}}),
        8 => json!({"tool": "compute_volume_stats", "params": {"audio_id": id(rng), "bogus": 1}}),
        _ => json!({"tool": "analyze_pitch", "params": {"audio_id": id(rng), "fmin_hz": 80.0, "fmax_hz": 1000.0}}),
    }
}

fn random_planner_reply(rng: &mut ChaCha8Rng) -> ScriptEntry {
    match rng.gen_range(0..20) {
        0..=9 => {
            let n = rng.gen_range(1..=3);
            let calls: Vec<_> = (0..n).map(|_| random_call(rng)).collect();
            json!({"kind": "call_tools", "rationale": "measure", "calls": calls}).into()
        }
        10..=12 => json!({
            "kind": "follow_up",
            "rationale": "re-listen",
            "follow_up_request": {"artifact_ids": [format!("audio_{}", rng.gen_range(0..3))], "prompt": "Listen again."}
        })
        .into(),
        13..=14 => json!({"kind": "answer", "rationale": "enough"}).into(),
        15 => json!({"kind": "fail", "rationale": "cannot tell", "fail_reason": "unanswerable"}).into(),
        16 => "not json at all".into(),
        17 => r#"{"kind": "answer", "rationale": "a"} {"kind": "answer", "rationale": "b"}"#.into(),
        18 => json!({"kind": "dance", "rationale": "?"}).into(),
        _ => json!({"kind": "call_tools", "rationale": "empty", "calls": []}).into(),
    }
}

fn random_frontend_reply(rng: &mut ChaCha8Rng) -> ScriptEntry {
    match rng.gen_range(0..10) {
        0..=3 => ["A", "B", "C", "(B) option number 1"][rng.gen_range(0..4)].into(),
        4..=6 => "The clip holds a steady tone that rises in pitch halfway through.".into(),
        7 => HOT_WATER_CAPTION.into(),
        8 => "".into(),
        _ => "Z".into(),
    }
}

/// Randomized but reproducible script mixing valid and malformed replies,
/// unknown tools, bad parameters and occasional backend failures.
pub fn random_script(seed: u64) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut script = Script::default().frontend(HOT_WATER_CAPTION);
    if rng.gen_bool(0.9) {
        script = script.planner(json!({
            "clarified_intent": "Identify what changes.",
            "focus_points": ["second half"],
            "candidate_operations": [{"description": "compare halves", "candidate_tools": ["trim_audio"]}]
        }));
    } else {
        script = script.planner("no plan here");
    }
    for _ in 0..rng.gen_range(0..20) {
        script = script.planner(random_planner_reply(&mut rng));
    }
    for _ in 0..rng.gen_range(0..8) {
        script = script.frontend(random_frontend_reply(&mut rng));
    }
    if rng.gen_bool(0.05) {
        script = script.frontend(crate::backend::ScriptedFailure::ContentSafety);
    }
    script
}
