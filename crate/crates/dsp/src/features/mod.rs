pub mod amplitude;
pub mod chroma;
pub mod key;
pub mod mfcc;
pub mod onset;
pub mod pitch;
pub mod rms;
pub mod segmentation;
pub mod spectral;
pub mod tempo;

use serde::Serialize;

use crate::scalar::{mean, Sample};

/// Per-frame values together with their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series<T> {
    pub values: Vec<T>,
    pub mean: T,
}

impl<T: Sample> Series<T> {
    pub fn new(values: Vec<T>) -> Self {
        let mean = mean(&values);
        Self { values, mean }
    }
}

/// Half-open time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
}

impl Interval {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}
