//! Cohort CSV parsing, serialization and demographic summaries.
//!
//! The file schema is fixed:
//!
//! ```text
//! record_id,age,sex,note_text,hbsag_iu,anti_hcv_iu,collection_year
//! ```
//!
//! UTF-8, comma separated, free text quoted, an empty field meaning "absent".

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cohort, ModelError, PathologyRecord, Sex, MAX_AGE};

pub const HEADER: [&str; 7] = [
    "record_id",
    "age",
    "sex",
    "note_text",
    "hbsag_iu",
    "anti_hcv_iu",
    "collection_year",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cohort file not found: {0}")]
    NotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing header row (expected `{}`)", HEADER.join(","))]
    MissingHeader,
    #[error("header mismatch: found `{found}`, expected `{}`", HEADER.join(","))]
    HeaderMismatch { found: String },
    #[error("line {line}, column `{column}`: {message}")]
    Malformed {
        line: u64,
        column: String,
        message: String,
    },
    #[error("line {line}: duplicate record_id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("cohort is empty")]
    EmptyCohort,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    /// Line number of the offending row, when the error is row-level.
    pub fn line(&self) -> Option<u64> {
        match self {
            IngestError::Malformed { line, .. }
            | IngestError::DuplicateId { line, .. }
            | IngestError::Csv { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    Lenient,
}

/// One row dropped in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub line: u64,
    pub message: String,
}

/// Row-level note that did not prevent parsing (e.g. unrecognized sex token).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowWarning {
    pub line: u64,
    pub message: String,
}

/// Machine-readable outcome of a parse, written as JSON by `validate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub source: String,
    pub mode: ParseMode,
    pub rows_read: usize,
    pub records_accepted: usize,
    pub skipped: Vec<SkippedRow>,
    pub warnings: Vec<RowWarning>,
}

#[derive(Debug, Clone)]
pub struct ParsedCohort {
    pub cohort: Cohort,
    pub report: ValidationReport,
}

pub fn parse_cohort_file(path: &Path, mode: ParseMode) -> Result<ParsedCohort, IngestError> {
    let file = File::open(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            IngestError::NotFound(path.to_path_buf())
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })?;
    parse_cohort_reader(file, &path.display().to_string(), mode)
}

pub fn parse_cohort_str(text: &str, source: &str, mode: ParseMode) -> Result<ParsedCohort, IngestError> {
    parse_cohort_reader(text.as_bytes(), source, mode)
}

pub fn parse_cohort_reader<R: Read>(
    reader: R,
    source: &str,
    mode: ParseMode,
) -> Result<ParsedCohort, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader);

    let headers = csv_reader.headers().map_err(|e| IngestError::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(IngestError::MissingHeader);
    }
    let found: Vec<&str> = headers.iter().map(|h| h.trim().trim_start_matches('\u{feff}')).collect();
    if found != HEADER {
        return Err(IngestError::HeaderMismatch {
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    let mut rows_read = 0usize;

    for row in csv_reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                let err = IngestError::Csv {
                    line,
                    message: e.to_string(),
                };
                rows_read += 1;
                match mode {
                    ParseMode::Strict => return Err(err),
                    ParseMode::Lenient => {
                        skipped.push(SkippedRow {
                            line,
                            message: err.to_string(),
                        });
                        continue;
                    }
                }
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        // A trailing empty line can surface as a single empty field.
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        rows_read += 1;

        let outcome = parse_row(&row, line).and_then(|(record, warning)| {
            if seen.contains(&record.record_id) {
                Err(IngestError::DuplicateId {
                    line,
                    id: record.record_id,
                })
            } else {
                Ok((record, warning))
            }
        });
        match outcome {
            Ok((record, warning)) => {
                if let Some(message) = warning {
                    warnings.push(RowWarning { line, message });
                }
                seen.insert(record.record_id.clone());
                records.push(record);
            }
            Err(err) => match mode {
                ParseMode::Strict => return Err(err),
                ParseMode::Lenient => skipped.push(SkippedRow {
                    line,
                    message: err.to_string(),
                }),
            },
        }
    }

    let records_accepted = records.len();
    let cohort = Cohort::new(records, source)?;
    Ok(ParsedCohort {
        cohort,
        report: ValidationReport {
            source: source.to_string(),
            mode,
            rows_read,
            records_accepted,
            skipped,
            warnings,
        },
    })
}

fn malformed(line: u64, column: &str, message: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_row(
    row: &csv::StringRecord,
    line: u64,
) -> Result<(PathologyRecord, Option<String>), IngestError> {
    if row.len() != HEADER.len() {
        return Err(IngestError::Csv {
            line,
            message: format!("expected {} fields, found {}", HEADER.len(), row.len()),
        });
    }
    let record_id = row[0].trim().to_string();
    if record_id.is_empty() {
        return Err(malformed(line, "record_id", "empty record_id"));
    }

    let age = match row[1].trim() {
        "" => None,
        s => {
            let age: u32 = s
                .parse()
                .map_err(|_| malformed(line, "age", format!("`{s}` is not a non-negative integer")))?;
            if age > MAX_AGE {
                return Err(malformed(line, "age", format!("{age} outside 0..={MAX_AGE}")));
            }
            Some(age)
        }
    };

    let sex_token = row[2].trim();
    let (sex, warning) = match Sex::from_token(sex_token) {
        Some(sex) => (sex, None),
        None if sex_token.is_empty() => (Sex::Unspecified, None),
        None => (
            Sex::Unspecified,
            Some(format!("unrecognized sex token `{sex_token}`, treated as unspecified")),
        ),
    };

    let hbsag_iu = parse_assay(&row[4], line, "hbsag_iu")?;
    let anti_hcv_iu = parse_assay(&row[5], line, "anti_hcv_iu")?;
    let collection_year = match row[6].trim() {
        "" => None,
        s => Some(s.parse::<i32>().map_err(|_| {
            malformed(line, "collection_year", format!("`{s}` is not a calendar year"))
        })?),
    };

    Ok((
        PathologyRecord {
            record_id,
            age,
            sex,
            note_text: row[3].to_string(),
            hbsag_iu,
            anti_hcv_iu,
            collection_year,
        },
        warning,
    ))
}

fn parse_assay(field: &str, line: u64, column: &str) -> Result<Option<f64>, IngestError> {
    let s = field.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let value: f64 = s
        .parse()
        .map_err(|_| malformed(line, column, format!("`{s}` is not a decimal number")))?;
    if !value.is_finite() || value < 0.0 {
        return Err(malformed(line, column, format!("{s} must be finite and non-negative")));
    }
    Ok(Some(value))
}

fn quote_always(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn quote_if_needed(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        quote_always(s)
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes a cohort in the ingestion schema. Note text is always quoted;
/// floats use the shortest representation that parses back to the same value.
pub fn write_cohort<W: Write>(cohort: &Cohort, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for r in cohort {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            quote_if_needed(&r.record_id),
            opt(r.age),
            r.sex.token(),
            quote_always(&r.note_text),
            opt(r.hbsag_iu),
            opt(r.anti_hcv_iu),
            opt(r.collection_year),
        )?;
    }
    Ok(())
}

pub fn cohort_to_csv(cohort: &Cohort) -> String {
    let mut buf = Vec::new();
    write_cohort(cohort, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("cohort CSV is UTF-8")
}

/// Counts for one decade-wide age band, split by sex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBand {
    pub label: String,
    pub male: usize,
    pub female: usize,
    pub unspecified: usize,
}

impl AgeBand {
    pub fn total(&self) -> usize {
        self.male + self.female + self.unspecified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n_total: usize,
    pub n_with_age: usize,
    pub age_mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub age_sd: Option<f64>,
    pub n_male: usize,
    pub n_female: usize,
    pub n_unspecified: usize,
    pub n_missing_hbsag: usize,
    pub n_missing_anti_hcv: usize,
    /// Bands `0-9` .. `90-99`, `100+`, then `unknown` for absent ages.
    pub age_histogram: Vec<AgeBand>,
}

pub fn summarize_demographics(cohort: &Cohort) -> Result<CohortSummary, IngestError> {
    summarize_records(cohort.records())
}

pub fn summarize_records<'a, I>(records: I) -> Result<CohortSummary, IngestError>
where
    I: IntoIterator<Item = &'a PathologyRecord>,
{
    let mut bands: Vec<AgeBand> = (0..10)
        .map(|d| format!("{}-{}", d * 10, d * 10 + 9))
        .chain(["100+".to_string(), "unknown".to_string()])
        .map(|label| AgeBand {
            label,
            male: 0,
            female: 0,
            unspecified: 0,
        })
        .collect();

    let mut n_total = 0usize;
    let (mut n_male, mut n_female, mut n_unspecified) = (0, 0, 0);
    let (mut missing_hbsag, mut missing_anti_hcv) = (0, 0);
    // Integer sums keep the statistics independent of record order.
    let mut n_age: u128 = 0;
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;

    for r in records {
        n_total += 1;
        match r.sex {
            Sex::Male => n_male += 1,
            Sex::Female => n_female += 1,
            Sex::Unspecified => n_unspecified += 1,
        }
        missing_hbsag += usize::from(r.hbsag_iu.is_none());
        missing_anti_hcv += usize::from(r.anti_hcv_iu.is_none());

        let band_index = match r.age {
            Some(age) => {
                n_age += 1;
                sum += u128::from(age);
                sum_sq += u128::from(age) * u128::from(age);
                (age as usize / 10).min(10)
            }
            None => 11,
        };
        let band = &mut bands[band_index];
        match r.sex {
            Sex::Male => band.male += 1,
            Sex::Female => band.female += 1,
            Sex::Unspecified => band.unspecified += 1,
        }
    }

    if n_total == 0 {
        return Err(IngestError::EmptyCohort);
    }

    let age_mean = (n_age > 0).then(|| sum as f64 / n_age as f64);
    let age_sd = match n_age {
        0 => None,
        1 => Some(0.0),
        n => {
            let numerator = n * sum_sq - sum * sum;
            Some((numerator as f64 / (n * (n - 1)) as f64).sqrt())
        }
    };

    Ok(CohortSummary {
        n_total,
        n_with_age: n_age as usize,
        age_mean,
        age_sd,
        n_male,
        n_female,
        n_unspecified,
        n_missing_hbsag: missing_hbsag,
        n_missing_anti_hcv: missing_anti_hcv,
        age_histogram: bands,
    })
}
