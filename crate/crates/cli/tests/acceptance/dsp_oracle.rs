//! DSP checks against oracles that share no code with the estimators: a
//! direct O(N^2) DFT for spectral descriptors, known tone frequencies for
//! pitch, a Krumhansl-Schmuckler correlation over ideal pitch-class
//! durations for key, and known click rates for tempo.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hearsay_dsp::features::key::{key_estimate, Mode};
use hearsay_dsp::features::pitch::{yin, YinConfig};
use hearsay_dsp::features::spectral::spectral_features;
use hearsay_dsp::features::tempo::tempo_estimate;
use hearsay_dsp::{FrameGrid, WindowKind};

const SR: u32 = 16_000;
const N: usize = 1024;
const HOP: usize = 512;
const ROLLOFF: f64 = 0.85;

fn tone(f: f64, secs: f64) -> Vec<f64> {
    let n = (secs * SR as f64) as usize;
    (0..n).map(|i| (2.0 * PI * f * i as f64 / SR as f64).sin()).collect()
}

fn corpus() -> Vec<(&'static str, Vec<f64>)> {
    let n = SR as usize;
    let t = |i: usize| i as f64 / SR as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let white: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut acc = 0.0;
    let brown: Vec<f64> = white
        .iter()
        .map(|w| {
            acc = 0.995 * acc + 0.1 * w;
            acc
        })
        .collect();
    vec![
        ("sine 440", tone(440.0, 1.0)),
        ("sine 2500", tone(2500.0, 1.0)),
        (
            "two tones",
            (0..n).map(|i| 0.5 * (2.0 * PI * 300.0 * t(i)).sin() + 0.3 * (2.0 * PI * 3300.0 * t(i)).sin()).collect(),
        ),
        ("chirp", (0..n).map(|i| (2.0 * PI * (200.0 * t(i) + 2900.0 * t(i) * t(i))).sin()).collect()),
        ("white noise", white.clone()),
        ("brown noise", brown),
        ("square 220", tone(220.0, 1.0).iter().map(|x| x.signum() * 0.5).collect()),
        (
            "am tone",
            (0..n).map(|i| (1.0 + 0.5 * (2.0 * PI * 5.0 * t(i)).sin()) * (2.0 * PI * 1000.0 * t(i)).sin()).collect(),
        ),
        ("click train", (0..n).map(|i| if i % 640 == 0 { 1.0 } else { 0.0 }).collect()),
        ("tone in noise", (0..n).map(|i| (2.0 * PI * 1000.0 * t(i)).sin() + 0.1 * white[i]).collect()),
    ]
}

/// Mean centroid, rolloff and flatness over frames starting at 0 with the
/// periodic Hann window, from a direct DFT.
fn oracle_descriptors(x: &[f64]) -> [f64; 3] {
    let cos: Vec<f64> = (0..N).map(|k| (2.0 * PI * k as f64 / N as f64).cos()).collect();
    let sin: Vec<f64> = (0..N).map(|k| (2.0 * PI * k as f64 / N as f64).sin()).collect();
    let frames = 1 + (x.len() - N) / HOP;
    let bins = N / 2 + 1;
    let mut sums = [0.0; 3];
    for j in 0..frames {
        let frame: Vec<f64> = (0..N).map(|i| x[j * HOP + i] * (0.5 - 0.5 * cos[i])).collect();
        let mag: Vec<f64> = (0..bins)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in frame.iter().enumerate() {
                    let idx = (k * i) % N;
                    re += v * cos[idx];
                    im -= v * sin[idx];
                }
                (re * re + im * im).sqrt()
            })
            .collect();
        let freq = |k: usize| k as f64 * SR as f64 / N as f64;
        let total: f64 = mag.iter().sum();
        let centroid = if total > 0.0 { mag.iter().enumerate().map(|(k, m)| m * freq(k)).sum::<f64>() / total } else { 0.0 };
        let power: Vec<f64> = mag.iter().map(|m| m * m).collect();
        let total_p: f64 = power.iter().sum();
        let mut cum = 0.0;
        let mut rolloff = 0.0;
        if total_p > 0.0 {
            for (k, p) in power.iter().enumerate() {
                cum += p;
                if cum >= ROLLOFF * total_p {
                    rolloff = freq(k);
                    break;
                }
            }
        }
        let floored: Vec<f64> = power.iter().map(|p| p.max(1e-10)).collect();
        let geo = (floored.iter().map(|p| p.ln()).sum::<f64>() / bins as f64).exp();
        let arith = floored.iter().sum::<f64>() / bins as f64;
        sums[0] += centroid;
        sums[1] += rolloff;
        sums[2] += (geo / arith).clamp(0.0, 1.0);
    }
    sums.map(|s| s / frames as f64)
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 0.01 * want.abs() + 1e-12
}

fn spectral() {
    let grid = FrameGrid::new(N, HOP, WindowKind::Hann).unwrap();
    for (name, x) in corpus() {
        let s = spectral_features(&x, SR, &grid, ROLLOFF);
        let got = [s.centroid_hz.mean, s.rolloff_hz.mean, s.flatness.mean];
        let want = oracle_descriptors(&x);
        for (k, label) in ["centroid", "rolloff", "flatness"].iter().enumerate() {
            assert!(close(got[k], want[k]), "{name} {label}: {} vs oracle {}", got[k], want[k]);
        }
    }
}

fn pitch() {
    let grid = FrameGrid::new(2048, 512, WindowKind::Hann).unwrap();
    for f in [82.41, 110.0, 196.0, 261.63, 440.0, 659.25, 1000.0] {
        let track = yin(&tone(f, 1.0), SR, &grid, &YinConfig::default()).unwrap();
        let median = track.stats.median_hz.expect("voiced");
        assert!((median - f).abs() <= 1.0, "pitch of {f} Hz tone read as {median}");
    }
}

/// Krumhansl-Kessler probe-tone ratings, C major and C minor.
const KK_MAJOR: [f64; 12] = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
const KK_MINOR: [f64; 12] = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

fn ks_oracle(durations: &[f64; 12]) -> (usize, bool) {
    let corr = |profile: &[f64; 12], tonic: usize| {
        let p: Vec<f64> = (0..12).map(|pc| profile[(pc + 12 - tonic) % 12]).collect();
        let (mx, my) = (durations.iter().sum::<f64>() / 12.0, p.iter().sum::<f64>() / 12.0);
        let cov: f64 = (0..12).map(|i| (durations[i] - mx) * (p[i] - my)).sum();
        let vx: f64 = durations.iter().map(|d| (d - mx).powi(2)).sum();
        let vy: f64 = p.iter().map(|v| (v - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    };
    let mut best = (f64::MIN, 0, true);
    for tonic in 0..12 {
        for (major, profile) in [(true, &KK_MAJOR), (false, &KK_MINOR)] {
            let r = corr(profile, tonic);
            if r > best.0 {
                best = (r, tonic, major);
            }
        }
    }
    (best.1, best.2)
}

/// Ascending scale from the tonic with the tonic and fifth held longer.
/// Returns the audio and the seconds spent on each pitch class.
fn scale_clip(tonic: usize, major: bool) -> (Vec<f64>, [f64; 12]) {
    let steps: [usize; 7] = if major { [0, 2, 4, 5, 7, 9, 11] } else { [0, 2, 3, 5, 7, 8, 11] };
    let mut notes: Vec<(usize, f64)> = vec![(0, 0.6)];
    notes.extend(steps[1..].iter().map(|&s| (s, 0.3)));
    notes.extend([(7, 0.3), (0, 0.3)]);
    let mut audio = Vec::new();
    let mut durations = [0.0; 12];
    for (step, secs) in notes {
        let midi = 60 + tonic + step;
        let f = 440.0 * 2f64.powf((midi as f64 - 69.0) / 12.0);
        let n = (secs * SR as f64) as usize;
        let fade = 160;
        audio.extend((0..n).map(|i| {
            let env = (i.min(n - 1 - i) as f64 / fade as f64).min(1.0);
            0.5 * env * (2.0 * PI * f * i as f64 / SR as f64).sin()
        }));
        durations[(tonic + step) % 12] += secs;
    }
    (audio, durations)
}

fn key() {
    let grid = FrameGrid::new(4096, 1024, WindowKind::Hann).unwrap();
    let mut agree = 0;
    let mut misses = Vec::new();
    for tonic in 0..12 {
        for major in [true, false] {
            let (audio, durations) = scale_clip(tonic, major);
            let want = ks_oracle(&durations);
            let est = key_estimate(&audio, SR, &grid).unwrap();
            let got = (est.tonic_index, est.mode == Mode::Major);
            if got == want {
                agree += 1;
            } else {
                misses.push(format!("{tonic}/{major}: {} vs oracle {want:?}", est.label));
            }
        }
    }
    assert!(agree >= 22, "key agreement {agree}/24: {misses:?}");
}

fn click_track(bpm: f64, secs: f64) -> Vec<f64> {
    let n = (secs * SR as f64) as usize;
    let period = 60.0 / bpm * SR as f64;
    let mut x = vec![0.0; n];
    let mut beat = 0.0;
    while (beat as usize) < n {
        let start = beat as usize;
        for i in 0..320.min(n - start) {
            x[start + i] += (-(i as f64) / 40.0).exp() * (2.0 * PI * 2000.0 * i as f64 / SR as f64).sin();
        }
        beat += period;
    }
    x
}

fn tempo() {
    for bpm in [60.0, 90.0, 120.0, 150.0] {
        let est = tempo_estimate(&click_track(bpm, 12.0), SR).unwrap();
        let hit = [est.primary.bpm, est.secondary.bpm]
            .iter()
            .any(|&c| [bpm, 2.0 * bpm, bpm / 2.0].iter().any(|&t| (c - t).abs() <= 0.04 * t));
        assert!(hit, "{bpm} BPM clicks gave {} / {}", est.primary.bpm, est.secondary.bpm);
    }
}

pub fn dsp_oracles() {
    spectral();
    pitch();
    key();
    tempo();
}
