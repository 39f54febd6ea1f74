//! WAV decode/encode and the external-decoder escape hatch for other containers.

use std::io::Cursor;
use std::path::Path;
use std::process::Command;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::buffer::{AudioBuffer, AudioMetadata};
use crate::error::{DspError, Result};
use crate::scalar::Sample;

/// Returns true when the bytes carry a RIFF/WAVE header.
pub fn is_wav(bytes: &[u8]) -> bool {
    bytes.len() >= 12 && &bytes[0..4] == b"RIFF" && &bytes[8..12] == b"WAVE"
}

fn format_label(spec: &WavSpec) -> String {
    match spec.sample_format {
        SampleFormat::Float => format!("wav/float{}", spec.bits_per_sample),
        SampleFormat::Int => format!("wav/pcm{}", spec.bits_per_sample),
    }
}

/// Decodes 8/16/24/32-bit PCM and 32-bit float WAV into planar samples.
pub fn decode_wav<T: Sample>(bytes: &[u8]) -> Result<(AudioBuffer<T>, String)> {
    if bytes.is_empty() {
        return Err(DspError::Undecodable("zero-byte media".into()));
    }
    let reader =
        WavReader::new(Cursor::new(bytes)).map_err(|e| DspError::Undecodable(e.to_string()))?;
    let spec = reader.spec();
    let channel_count = spec.channels as usize;
    if channel_count == 0 {
        return Err(DspError::Undecodable("zero channels".into()));
    }
    let interleaved: Vec<T> = match spec.sample_format {
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(DspError::Undecodable(format!(
                    "unsupported float width {}",
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(|v| T::lit(v as f64)))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| DspError::Undecodable(e.to_string()))?
        }
        SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !(bits == 8 || bits == 16 || bits == 24 || bits == 32) {
                return Err(DspError::Undecodable(format!("unsupported PCM width {bits}")));
            }
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| T::lit(v as f64 * scale)))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| DspError::Undecodable(e.to_string()))?
        }
    };
    if interleaved.is_empty() {
        return Err(DspError::EmptyAudio);
    }
    let frames = interleaved.len() / channel_count;
    let mut channels = vec![Vec::with_capacity(frames); channel_count];
    for frame in interleaved.chunks_exact(channel_count) {
        for (c, &s) in frame.iter().enumerate() {
            channels[c].push(s);
        }
    }
    let audio = AudioBuffer::new(spec.sample_rate, channels)?;
    Ok((audio, format_label(&spec)))
}

/// Encodes as 32-bit float WAV. Output bytes are a pure function of the samples.
pub fn encode_wav_f32<T: Sample>(audio: &AudioBuffer<T>) -> Vec<u8> {
    let spec = WavSpec {
        channels: audio.channel_count() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut cursor, spec).expect("in-memory writer");
        for i in 0..audio.len() {
            for ch in audio.channels() {
                writer
                    .write_sample(ch[i].as_f64() as f32)
                    .expect("in-memory write");
            }
        }
        writer.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}

/// Encodes as 16-bit PCM WAV with saturation.
pub fn encode_wav_pcm16<T: Sample>(audio: &AudioBuffer<T>) -> Vec<u8> {
    let spec = WavSpec {
        channels: audio.channel_count() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut cursor, spec).expect("in-memory writer");
        for i in 0..audio.len() {
            for ch in audio.channels() {
                let v = (ch[i].as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).expect("in-memory write");
            }
        }
        writer.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}

/// Shell-free command template with an `{input}` placeholder; the command must
/// write a WAV stream to standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalDecoder {
    template: String,
}

impl ExternalDecoder {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        if !template.contains("{input}") {
            return Err(DspError::param("decoder", "template lacks {input} placeholder"));
        }
        if template.split_whitespace().next().is_none() {
            return Err(DspError::param("decoder", "empty command"));
        }
        Ok(Self { template })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn decode_to_wav(&self, input: &Path) -> Result<Vec<u8>> {
        let input = input.to_string_lossy();
        let mut parts = self
            .template
            .split_whitespace()
            .map(|p| p.replace("{input}", &input));
        let program = parts.next().expect("validated non-empty");
        let output = Command::new(&program)
            .args(parts)
            .output()
            .map_err(|e| DspError::ExternalDecoder(format!("{program}: {e}")))?;
        if !output.status.success() {
            return Err(DspError::ExternalDecoder(format!(
                "{program} exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(output.stdout)
    }
}

/// Decodes WAV natively; anything else goes through `external` when a path is known.
pub fn decode_media<T: Sample>(
    bytes: &[u8],
    path: Option<&Path>,
    external: Option<&ExternalDecoder>,
) -> Result<(AudioBuffer<T>, String)> {
    if is_wav(bytes) || external.is_none() || path.is_none() {
        return decode_wav(bytes);
    }
    let wav = external.unwrap().decode_to_wav(path.unwrap())?;
    let (audio, _) = decode_wav(&wav)?;
    let ext = path
        .and_then(|p| p.extension())
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_else(|| "unknown".into());
    Ok((audio, format!("external/{ext}")))
}

pub fn metadata<T: Sample>(audio: &AudioBuffer<T>, format: &str) -> AudioMetadata {
    AudioMetadata {
        duration_s: audio.duration_s(),
        sample_rate_hz: audio.sample_rate(),
        channels: audio.channel_count(),
        format: format.to_string(),
    }
}
