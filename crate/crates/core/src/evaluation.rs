//! End-to-end study for one condition: classify every note, tally the
//! primary category against serology, then repeat for each control category.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Lexicon, NoteClassification, NoteClassifier, CATEGORY_COUNT};
use crate::dta::{compute_metrics, CiConfig, CiConfigError, ContingencyTable, MetricPanel, Tally};
use crate::ingest::{summarize_records, CohortSummary};
use crate::model::{Cohort, Condition, PathologyRecord};
use crate::serology::{classify_marker, SerologyThresholds};

pub const DEFAULT_CONTROL_CATEGORIES: [u8; 10] = [10, 16, 17, 22, 24, 26, 29, 31, 32, 37];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("control category {0} is outside 1..={CATEGORY_COUNT}")]
    UnknownCategory(u8),
    #[error("control category {0} is the target condition's own category")]
    TargetAsControl(u8),
    #[error("control category {0} listed twice")]
    DuplicateControl(u8),
    #[error(transparent)]
    CiConfig(#[from] CiConfigError),
    /// A bookkeeping identity failed; this is a bug, not bad input.
    #[error("internal invariant violated for category {category_id}: {message}")]
    Invariant { category_id: u8, message: String },
}

impl EvaluationError {
    pub fn is_internal(&self) -> bool {
        matches!(self, EvaluationError::Invariant { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub target_condition: Condition,
    pub control_category_ids: Vec<u8>,
    pub exclude_vaccination: bool,
    pub thresholds: SerologyThresholds,
    pub ci_config: CiConfig,
}

impl EvaluationConfig {
    pub fn for_condition(condition: Condition) -> Self {
        EvaluationConfig {
            target_condition: condition,
            control_category_ids: DEFAULT_CONTROL_CATEGORIES.to_vec(),
            exclude_vaccination: true,
            thresholds: SerologyThresholds::default(),
            ci_config: CiConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvaluationError> {
        self.ci_config.validate()?;
        let own = self.target_condition.category_id();
        let mut seen = Vec::with_capacity(self.control_category_ids.len());
        for &id in &self.control_category_ids {
            if id == 0 || id > CATEGORY_COUNT {
                return Err(EvaluationError::UnknownCategory(id));
            }
            if id == own {
                return Err(EvaluationError::TargetAsControl(id));
            }
            if seen.contains(&id) {
                return Err(EvaluationError::DuplicateControl(id));
            }
            seen.push(id);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category_id: u8,
    pub label: String,
    pub icd10: Option<String>,
    /// Records belonging to the category before any exclusion.
    pub n_classified: u64,
    pub n_vaccination_excluded: u64,
    pub n_missing_excluded: u64,
    pub n_evaluated: u64,
    /// 100 * (TP + FN) / n_evaluated; absent when nothing was evaluated.
    pub percent_marker_positive: Option<f64>,
    pub table: ContingencyTable,
    pub panel: MetricPanel,
}

/// Figures printed in the published accuracy table, kept verbatim so the
/// report can footnote any that differ from the raw-count values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub source: String,
    pub sn: String,
    pub sp: String,
    pub ppv: String,
    pub npv: String,
    pub lr_pos: String,
    pub lr_neg: String,
}

impl PublishedRow {
    pub fn table3(condition: Condition) -> PublishedRow {
        let row = |sn: &str, sp: &str, ppv: &str, npv: &str, lr_pos: &str, lr_neg: &str| PublishedRow {
            source: format!("published accuracy row for {}", condition.display_name()),
            sn: sn.into(),
            sp: sp.into(),
            ppv: ppv.into(),
            npv: npv.into(),
            lr_pos: lr_pos.into(),
            lr_neg: lr_neg.into(),
        };
        match condition {
            Condition::HepatitisB => row(
                "90 (80.6-95.4)",
                "56 (45.7-65.7)",
                "61 (54.9-65.9)",
                "87 (78.3-93.4)",
                "2.05 (1.61-2.56)",
                "0.18 (0.09-0.37)",
            ),
            Condition::HepatitisC => row(
                "86 (77.9-91.4)",
                "21 (10.5-35.0)",
                "73 (69.3-75.8)",
                "37 (22.5-54.4)",
                "1.08 (0.92-1.27)",
                "0.67 (0.34-1.40)",
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvaluation {
    pub condition: Condition,
    pub provenance: String,
    pub config: EvaluationConfig,
    pub n_records: u64,
    pub primary: CategoryResult,
    pub controls: Vec<CategoryResult>,
    /// Whole-cohort demographics; absent for an empty cohort.
    pub cohort_demographics: Option<CohortSummary>,
    /// Demographics of the evaluated primary-category records.
    pub primary_demographics: Option<CohortSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<PublishedRow>,
}

impl ConditionEvaluation {
    /// Primary first, then controls in configured order.
    pub fn all_results(&self) -> impl Iterator<Item = &CategoryResult> {
        std::iter::once(&self.primary).chain(self.controls.iter())
    }
}

struct Classified<'a> {
    record: &'a PathologyRecord,
    classification: NoteClassification,
    vaccination: bool,
}

pub fn evaluate_condition(
    cohort: &Cohort,
    config: &EvaluationConfig,
    lexicon: &Lexicon,
) -> Result<ConditionEvaluation, EvaluationError> {
    evaluate_with_classifier(cohort, config, &NoteClassifier::new(lexicon.clone()))
}

pub fn evaluate_with_classifier(
    cohort: &Cohort,
    config: &EvaluationConfig,
    classifier: &NoteClassifier,
) -> Result<ConditionEvaluation, EvaluationError> {
    config.validate()?;
    let lexicon = classifier.lexicon();
    let vaccination_ids: Vec<u8> = lexicon
        .rules()
        .iter()
        .filter(|r| r.vaccination)
        .map(|r| r.category_id)
        .collect();

    let classified: Vec<Classified> = cohort
        .iter()
        .map(|record| {
            let classification = classifier.classify(&record.note_text);
            let vaccination = vaccination_ids.iter().any(|&id| classification.belongs_to(id));
            Classified {
                record,
                classification,
                vaccination,
            }
        })
        .collect();

    let condition = config.target_condition;
    let (primary, primary_members) = evaluate_category(&classified, condition.category_id(), config, lexicon)?;
    let controls = config
        .control_category_ids
        .iter()
        .map(|&id| evaluate_category(&classified, id, config, lexicon).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ConditionEvaluation {
        condition,
        provenance: cohort.provenance().to_string(),
        config: config.clone(),
        n_records: cohort.len() as u64,
        primary,
        controls,
        cohort_demographics: summarize_records(cohort.records()).ok(),
        primary_demographics: summarize_records(primary_members).ok(),
        published: None,
    })
}

fn evaluate_category<'a>(
    classified: &[Classified<'a>],
    category_id: u8,
    config: &EvaluationConfig,
    lexicon: &Lexicon,
) -> Result<(CategoryResult, Vec<&'a PathologyRecord>), EvaluationError> {
    let condition = config.target_condition;
    let mut n_classified = 0u64;
    let mut n_vaccination = 0u64;
    let mut tally = Tally::default();
    let mut evaluated = Vec::new();

    for c in classified.iter().filter(|c| c.classification.belongs_to(category_id)) {
        n_classified += 1;
        if config.exclude_vaccination && c.vaccination {
            n_vaccination += 1;
            continue;
        }
        let truth = classify_marker(c.record, condition, &config.thresholds);
        if tally.table.record(c.classification.label(condition), truth) {
            evaluated.push(c.record);
        } else {
            tally.excluded_missing += 1;
        }
    }

    let table = tally.table;
    let n_evaluated = table.n();
    if n_evaluated + tally.excluded_missing + n_vaccination != n_classified {
        return Err(EvaluationError::Invariant {
            category_id,
            message: format!(
                "evaluated {n_evaluated} + missing {} + vaccination {n_vaccination} != classified {n_classified}",
                tally.excluded_missing
            ),
        });
    }

    let rule = lexicon.rule(category_id);
    let result = CategoryResult {
        category_id,
        label: lexicon.label(category_id).to_string(),
        icd10: rule.and_then(|r| r.icd10_chapter.clone()),
        n_classified,
        n_vaccination_excluded: n_vaccination,
        n_missing_excluded: tally.excluded_missing,
        n_evaluated,
        percent_marker_positive: (n_evaluated > 0)
            .then(|| 100.0 * table.diseased() as f64 / n_evaluated as f64),
        table,
        panel: compute_metrics(&table, &config.ci_config),
    };
    Ok((result, evaluated))
}
