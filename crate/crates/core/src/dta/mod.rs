//! Diagnostic test accuracy: 2x2 tables, the six accuracy metrics and their
//! confidence intervals, and prevalence-adjusted predictive values.
//!
//! Every point estimate is computed from the raw counts. A metric whose
//! denominator is zero is [`Estimate::NotDefined`]; LR+ with perfect
//! specificity (or LR- with zero specificity) and a non-zero numerator is
//! [`Estimate::Infinite`].

mod interval;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use interval::{
    ci_likelihood_ratio, ci_likelihood_ratio_haldane, ci_proportion, clopper_pearson, logit,
    normal_quantile, wilson, z_for_level, CiMethod, Interval, IntervalError, LikelihoodRatio,
    ProportionMethod, Z_95,
};

use crate::model::{SerologyStatus, TestLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ContingencyTable {
    pub const fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ContingencyTable { tp, fp, fn_, tn }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Reference-standard positives, TP + FN.
    pub fn diseased(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn healthy(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn test_positive(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn test_negative(&self) -> u64 {
        self.fn_ + self.tn
    }

    pub fn record(&mut self, label: TestLabel, truth: SerologyStatus) -> bool {
        match (label, truth) {
            (_, SerologyStatus::Missing) => return false,
            (TestLabel::Positive, SerologyStatus::Positive) => self.tp += 1,
            (TestLabel::Positive, SerologyStatus::Negative) => self.fp += 1,
            (TestLabel::Negative, SerologyStatus::Positive) => self.fn_ += 1,
            (TestLabel::Negative, SerologyStatus::Negative) => self.tn += 1,
        }
        true
    }
}

/// A tallied table plus the number of pairs dropped for missing serology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub table: ContingencyTable,
    pub excluded_missing: u64,
}

pub fn build_contingency<I>(pairs: I) -> Tally
where
    I: IntoIterator<Item = (TestLabel, SerologyStatus)>,
{
    let mut tally = Tally::default();
    for (label, truth) in pairs {
        if !tally.table.record(label, truth) {
            tally.excluded_missing += 1;
        }
    }
    tally
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "value", rename_all = "snake_case")]
pub enum Estimate {
    Defined(f64),
    Infinite,
    NotDefined,
}

impl Estimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Estimate::Defined(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Estimate::Defined(_))
    }

    fn ratio(numerator: u64, denominator: u64) -> Estimate {
        if denominator == 0 {
            Estimate::NotDefined
        } else {
            Estimate::Defined(numerator as f64 / denominator as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub estimate: Estimate,
    pub ci: Option<Interval>,
    pub method: Option<CiMethod>,
    /// Why no interval is attached, when the point estimate exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_note: Option<String>,
}

impl MetricEstimate {
    fn undefined() -> Self {
        MetricEstimate {
            estimate: Estimate::NotDefined,
            ci: None,
            method: None,
            ci_note: None,
        }
    }

    fn with_ci(estimate: Estimate, ci: Result<(Interval, CiMethod), IntervalError>) -> Self {
        match ci {
            Ok((interval, method)) => MetricEstimate {
                estimate,
                ci: Some(interval),
                method: Some(method),
                ci_note: None,
            },
            Err(e) => MetricEstimate {
                estimate,
                ci: None,
                method: None,
                ci_note: Some(e.to_string()),
            },
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.estimate.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPanel {
    pub sn: MetricEstimate,
    pub sp: MetricEstimate,
    pub ppv: MetricEstimate,
    pub npv: MetricEstimate,
    pub lr_pos: MetricEstimate,
    pub lr_neg: MetricEstimate,
    /// (TP + FN) / n.
    pub prevalence_sample: Estimate,
}

impl MetricPanel {
    pub fn all_undefined() -> Self {
        MetricPanel {
            sn: MetricEstimate::undefined(),
            sp: MetricEstimate::undefined(),
            ppv: MetricEstimate::undefined(),
            npv: MetricEstimate::undefined(),
            lr_pos: MetricEstimate::undefined(),
            lr_neg: MetricEstimate::undefined(),
            prevalence_sample: Estimate::NotDefined,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiConfigError {
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiConfig {
    pub level: f64,
    /// Method for Sn and Sp. PPV and NPV always use the logit interval.
    pub proportion_method: ProportionMethod,
    /// Add 0.5 to every cell when a likelihood-ratio interval hits a zero cell.
    pub haldane: bool,
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            level: 0.95,
            proportion_method: ProportionMethod::Exact,
            haldane: false,
        }
    }
}

impl CiConfig {
    pub fn validate(&self) -> Result<(), CiConfigError> {
        if self.level > 0.0 && self.level < 1.0 {
            Ok(())
        } else {
            Err(CiConfigError::InvalidLevel(self.level))
        }
    }
}

fn proportion(successes: u64, trials: u64, config: &CiConfig) -> MetricEstimate {
    if trials == 0 {
        return MetricEstimate::undefined();
    }
    MetricEstimate::with_ci(
        Estimate::ratio(successes, trials),
        ci_proportion(successes, trials, config.level, config.proportion_method)
            .map(|i| (i, config.proportion_method.into())),
    )
}

fn predictive(successes: u64, trials: u64, config: &CiConfig) -> MetricEstimate {
    if trials == 0 {
        return MetricEstimate::undefined();
    }
    MetricEstimate::with_ci(Estimate::ratio(successes, trials), logit(successes, trials, config.level))
}

/// LR+ = Sn / (1 - Sp) and LR- = (1 - Sn) / Sp, with Sn and Sp taken from
/// the counts at full precision. A zero denominator with a non-zero
/// numerator is infinite; 0/0 is undefined.
fn likelihood_ratio(t: &ContingencyTable, which: LikelihoodRatio) -> Estimate {
    if t.diseased() == 0 || t.healthy() == 0 {
        return Estimate::NotDefined;
    }
    let sn = t.tp as f64 / t.diseased() as f64;
    let sp = t.tn as f64 / t.healthy() as f64;
    let (numerator_count, denominator_count, numerator, denominator) = match which {
        LikelihoodRatio::Positive => (t.tp, t.fp, sn, 1.0 - sp),
        LikelihoodRatio::Negative => (t.fn_, t.tn, 1.0 - sn, sp),
    };
    match (numerator_count, denominator_count) {
        (0, 0) => Estimate::NotDefined,
        (_, 0) => Estimate::Infinite,
        _ => Estimate::Defined(numerator / denominator),
    }
}

fn lr_metric(table: &ContingencyTable, which: LikelihoodRatio, config: &CiConfig) -> MetricEstimate {
    let t = table;
    let estimate = likelihood_ratio(t, which);
    if estimate == Estimate::NotDefined {
        return MetricEstimate::undefined();
    }
    let ci = if config.haldane {
        ci_likelihood_ratio_haldane(table, which, config.level)
    } else {
        ci_likelihood_ratio(table, which, config.level).map(|i| (i, CiMethod::LogRatio))
    };
    MetricEstimate::with_ci(estimate, ci)
}

pub fn compute_metrics(table: &ContingencyTable, config: &CiConfig) -> MetricPanel {
    let t = table;
    MetricPanel {
        sn: proportion(t.tp, t.diseased(), config),
        sp: proportion(t.tn, t.healthy(), config),
        ppv: predictive(t.tp, t.test_positive(), config),
        npv: predictive(t.tn, t.test_negative(), config),
        lr_pos: lr_metric(t, LikelihoodRatio::Positive, config),
        lr_neg: lr_metric(t, LikelihoodRatio::Negative, config),
        prevalence_sample: Estimate::ratio(t.diseased(), t.n()),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{name} = {value} is not a proportion in [0, 1]")]
pub struct ProportionError {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveValues {
    pub ppv: Estimate,
    pub npv: Estimate,
}

/// PPV and NPV at an arbitrary prevalence via Bayes' rule. 0/0 forms are undefined.
pub fn adjust_predictive_values(
    sn: f64,
    sp: f64,
    prevalence: f64,
) -> Result<PredictiveValues, ProportionError> {
    for (name, value) in [("sn", sn), ("sp", sp), ("prevalence", prevalence)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ProportionError { name, value });
        }
    }
    let p = prevalence;
    let divide = |num: f64, den: f64| {
        if den == 0.0 {
            Estimate::NotDefined
        } else {
            Estimate::Defined(num / den)
        }
    };
    let true_pos = sn * p;
    let false_pos = (1.0 - sp) * (1.0 - p);
    let true_neg = sp * (1.0 - p);
    let false_neg = (1.0 - sn) * p;
    Ok(PredictiveValues {
        ppv: divide(true_pos, true_pos + false_pos),
        npv: divide(true_neg, true_neg + false_neg),
    })
}
