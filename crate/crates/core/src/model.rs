//! Shared value types: records, cohorts, conditions and serology states.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Oldest accepted age in years.
pub const MAX_AGE: u32 = 130;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("record_id must not be empty")]
    EmptyRecordId,
    #[error("duplicate record_id `{0}`")]
    DuplicateRecordId(String),
    #[error("record `{id}`: age {age} outside 0..={MAX_AGE}")]
    AgeOutOfRange { id: String, age: u32 },
    #[error("record `{id}`: {marker} value {value} must be finite and non-negative")]
    InvalidAssayValue {
        id: String,
        marker: &'static str,
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
    Unspecified,
}

impl Sex {
    /// Parses the ingestion tokens `M`, `F`, `1`, `2` (case-insensitive).
    /// Anything else yields `None`.
    pub fn from_token(token: &str) -> Option<Sex> {
        match token.trim().to_ascii_uppercase().as_str() {
            "M" | "1" => Some(Sex::Male),
            "F" | "2" => Some(Sex::Female),
            _ => None,
        }
    }

    /// Token written to cohort files. Unspecified is written as an empty field.
    pub fn token(self) -> &'static str {
        match self {
            Sex::Male => "M",
            Sex::Female => "F",
            Sex::Unspecified => "",
        }
    }
}

/// One de-identified pathology request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologyRecord {
    pub record_id: String,
    pub age: Option<u32>,
    pub sex: Sex,
    pub note_text: String,
    pub hbsag_iu: Option<f64>,
    pub anti_hcv_iu: Option<f64>,
    pub collection_year: Option<i32>,
}

impl PathologyRecord {
    /// Checks record-level invariants (id, age range, assay values).
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.record_id.is_empty() {
            return Err(ModelError::EmptyRecordId);
        }
        if let Some(age) = self.age {
            if age > MAX_AGE {
                return Err(ModelError::AgeOutOfRange {
                    id: self.record_id.clone(),
                    age,
                });
            }
        }
        for (marker, value) in [("HBsAg", self.hbsag_iu), ("anti-HCV", self.anti_hcv_iu)] {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::InvalidAssayValue {
                        id: self.record_id.clone(),
                        marker,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn marker_value(&self, condition: Condition) -> Option<f64> {
        match condition {
            Condition::HepatitisB => self.hbsag_iu,
            Condition::HepatitisC => self.anti_hcv_iu,
        }
    }
}

/// An ordered, id-unique collection of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    records: Vec<PathologyRecord>,
    provenance: String,
}

impl Cohort {
    pub fn new(
        records: Vec<PathologyRecord>,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(records.len());
        for record in &records {
            record.validate()?;
            if !seen.insert(record.record_id.as_str()) {
                return Err(ModelError::DuplicateRecordId(record.record_id.clone()));
            }
        }
        Ok(Cohort {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn empty(provenance: impl Into<String>) -> Self {
        Cohort {
            records: Vec::new(),
            provenance: provenance.into(),
        }
    }

    pub fn records(&self) -> &[PathologyRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PathologyRecord> {
        self.records.iter()
    }
}

impl<'a> IntoIterator for &'a Cohort {
    type Item = &'a PathologyRecord;
    type IntoIter = std::slice::Iter<'a, PathologyRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Gold-standard state of one marker for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerologyStatus {
    Positive,
    Negative,
    Missing,
}

/// Binary label produced by the note classifier for one condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestLabel {
    Positive,
    Negative,
}

impl TestLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TestLabel::Positive => "positive",
            TestLabel::Negative => "negative",
        }
    }
}

impl fmt::Display for TestLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Target infection, tied to its serological marker and lexicon category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    HepatitisB,
    HepatitisC,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::HepatitisB, Condition::HepatitisC];

    pub fn marker_name(self) -> &'static str {
        match self {
            Condition::HepatitisB => "HBsAg",
            Condition::HepatitisC => "anti-HCV",
        }
    }

    /// Default positivity cutoff in immunoassay units.
    pub fn default_cutoff(self) -> f64 {
        match self {
            Condition::HepatitisB => 1.6,
            Condition::HepatitisC => 1.0,
        }
    }

    /// Lexicon category holding direct mentions of the condition.
    pub fn category_id(self) -> u8 {
        match self {
            Condition::HepatitisB => 1,
            Condition::HepatitisC => 2,
        }
    }

    /// Short CLI token (`hbv` / `hcv`).
    pub fn short_name(self) -> &'static str {
        match self {
            Condition::HepatitisB => "hbv",
            Condition::HepatitisC => "hcv",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Condition::HepatitisB => "Hepatitis B",
            Condition::HepatitisC => "Hepatitis C",
        }
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hbv" | "hepatitis_b" | "hep-b" | "b" => Ok(Condition::HepatitisB),
            "hcv" | "hepatitis_c" | "hep-c" | "c" => Ok(Condition::HepatitisC),
            other => Err(format!("unknown condition `{other}` (expected hbv or hcv)")),
        }
    }
}
