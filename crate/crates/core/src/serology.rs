//! Gold-standard serology: immunoassay value to positive / negative / missing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Condition, PathologyRecord, SerologyStatus};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{marker} cutoff must be finite and > 0, got {value}")]
pub struct ThresholdError {
    pub marker: &'static str,
    pub value: f64,
}

/// Positivity cutoffs in immunoassay units. A value at the cutoff is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerologyThresholds {
    hbsag_cutoff: f64,
    anti_hcv_cutoff: f64,
}

impl Default for SerologyThresholds {
    fn default() -> Self {
        SerologyThresholds {
            hbsag_cutoff: Condition::HepatitisB.default_cutoff(),
            anti_hcv_cutoff: Condition::HepatitisC.default_cutoff(),
        }
    }
}

impl SerologyThresholds {
    pub fn new(hbsag_cutoff: f64, anti_hcv_cutoff: f64) -> Result<Self, ThresholdError> {
        for (marker, value) in [("HBsAg", hbsag_cutoff), ("anti-HCV", anti_hcv_cutoff)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ThresholdError { marker, value });
            }
        }
        Ok(SerologyThresholds {
            hbsag_cutoff,
            anti_hcv_cutoff,
        })
    }

    pub fn hbsag_cutoff(&self) -> f64 {
        self.hbsag_cutoff
    }

    pub fn anti_hcv_cutoff(&self) -> f64 {
        self.anti_hcv_cutoff
    }

    pub fn cutoff(&self, condition: Condition) -> f64 {
        match condition {
            Condition::HepatitisB => self.hbsag_cutoff,
            Condition::HepatitisC => self.anti_hcv_cutoff,
        }
    }
}

pub fn classify_value(value: Option<f64>, cutoff: f64) -> SerologyStatus {
    match value {
        None => SerologyStatus::Missing,
        Some(v) if v >= cutoff => SerologyStatus::Positive,
        Some(_) => SerologyStatus::Negative,
    }
}

pub fn classify_marker(
    record: &PathologyRecord,
    condition: Condition,
    thresholds: &SerologyThresholds,
) -> SerologyStatus {
    classify_value(record.marker_value(condition), thresholds.cutoff(condition))
}
