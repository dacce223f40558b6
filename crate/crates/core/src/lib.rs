//! Rule-based classification of free-text pathology request notes, scored
//! against hepatitis B / C serology with diagnostic test accuracy metrics.

pub mod classifier;
pub mod cli;
pub mod dta;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod report;
pub mod serology;
pub mod synth;

pub use classifier::{classify_note, Lexicon, NoteClassification, NoteClassifier};
pub use dta::{build_contingency, compute_metrics, CiConfig, ContingencyTable, MetricPanel};
pub use model::{Cohort, Condition, PathologyRecord, SerologyStatus, Sex, TestLabel};
pub use serology::SerologyThresholds;
pub use evaluation::{evaluate_condition, CategoryResult, ConditionEvaluation, EvaluationConfig};
pub use report::{ReportDocument, ReportFormat};
pub use synth::{synthesize_exact, synthesize_random, SynthesisSpec};
