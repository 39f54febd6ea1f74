use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use hearsay_dsp::plot::PlotKind;

use crate::ids::{ArtifactId, PlotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactSource {
    Original,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub parent: ArtifactId,
    pub tool: String,
    pub params: Map<String, Value>,
    /// Distinguishes sibling outputs of one call, e.g. `harmonic`/`percussive`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Where the media bytes live and what they hash to. Traces carry this
/// reference, never the bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaRef {
    pub path: String,
    pub sha256: String,
}

impl MediaRef {
    pub fn for_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        MediaRef {
            path: path.into(),
            sha256: sha256_hex(bytes),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioArtifact {
    pub id: ArtifactId,
    pub source: ArtifactSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub media: MediaRef,
    pub format: String,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub channels: usize,
}

/// A rendered plot. Plots are images, so they live outside the audio list and
/// can never be passed where audio is expected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotArtifact {
    pub id: PlotId,
    pub parent: ArtifactId,
    pub kind: PlotKind,
    pub tool: String,
    pub width: u32,
    pub height: u32,
    pub media: MediaRef,
}
