//! Rendering of evaluation results: markdown, CSV and JSON reports, the
//! plot-ready series and demographic histogram files.
//!
//! Display rounding is half away from zero. Percentages use an integer point
//! with one-decimal interval bounds in the primary table and one decimal
//! (trailing `.0` dropped) in the category table; likelihood ratios use two
//! decimals.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dta::{Estimate, MetricEstimate, MetricPanel};
use crate::evaluation::{CategoryResult, ConditionEvaluation, PublishedRow};
use crate::ingest::CohortSummary;

pub const NOT_DEFINED: &str = "n.d.";
pub const INFINITE: &str = "+inf";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected markdown, csv or json)")]
    UnknownFormat(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV encoding failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

/// Round half away from zero to `dp` decimals and format with exactly `dp` digits.
pub fn format_fixed(x: f64, dp: usize) -> String {
    let scale = 10f64.powi(dp as i32);
    let rounded = (x * scale).round() / scale;
    // avoids "-0.00"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.dp$}")
}

/// One decimal with a trailing `.0` removed: 100.0 -> "100", 97.25 -> "97.3".
pub fn format_trimmed(x: f64) -> String {
    let s = format_fixed(x, 1);
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

pub fn format_estimate(e: Estimate, scale: f64, dp: usize) -> String {
    match e {
        Estimate::Defined(v) => format_fixed(v * scale, dp),
        Estimate::Infinite => INFINITE.to_string(),
        Estimate::NotDefined => NOT_DEFINED.to_string(),
    }
}

/// A proportion as a decimal fraction, e.g. 0.896 -> "0.90" at two places.
pub fn format_proportion(e: Estimate, dp: usize) -> String {
    format_estimate(e, 1.0, dp)
}

fn with_interval(m: &MetricEstimate, scale: f64, point_dp: usize, ci_dp: usize, marker: &str) -> String {
    let point = format_estimate(m.estimate, scale, point_dp);
    if !m.estimate.is_defined() {
        return point;
    }
    let ci = match m.ci {
        Some(i) => format!(
            "{}-{}",
            format_fixed(i.low * scale, ci_dp),
            format_fixed(i.high * scale, ci_dp)
        ),
        None => NOT_DEFINED.to_string(),
    };
    format!("{point}{marker} ({ci})")
}

/// Percent with integer point and one-decimal bounds: "90 (80.6-95.4)".
pub fn format_percent_cell(m: &MetricEstimate) -> String {
    with_interval(m, 100.0, 0, 1, "")
}

/// Ratio and bounds at two decimals: "2.03 (1.61-2.56)".
pub fn format_ratio_cell(m: &MetricEstimate) -> String {
    with_interval(m, 1.0, 2, 2, "")
}

/// Category-table percentage: one decimal, trailing `.0` dropped, or `n.d.`.
pub fn format_percent_short(e: Estimate) -> String {
    match e {
        Estimate::Defined(v) => format_trimmed(100.0 * v),
        Estimate::Infinite => INFINITE.to_string(),
        Estimate::NotDefined => NOT_DEFINED.to_string(),
    }
}

fn point_of(cell: &str) -> &str {
    cell.split(" (").next().unwrap_or(cell)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimaryDisplay {
    pub sn: String,
    pub sp: String,
    pub ppv: String,
    pub npv: String,
    pub lr_pos: String,
    pub lr_neg: String,
    /// Two-decimal fractions for Sn, Sp, PPV, NPV.
    pub sn_fraction: String,
    pub sp_fraction: String,
    pub ppv_fraction: String,
    pub npv_fraction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDisplay {
    pub category_id: u8,
    pub icd10: String,
    pub label: String,
    pub n_evaluated: u64,
    pub percent_marker_positive: String,
    pub sn: String,
    pub sp: String,
    pub ppv: String,
    pub npv: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDisplay {
    pub summary_line: String,
    pub primary: PrimaryDisplay,
    pub categories: Vec<CategoryDisplay>,
    pub footnotes: Vec<String>,
}

/// JSON twin of the printed report: the full-precision evaluation plus the
/// rounded strings derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub evaluation: ConditionEvaluation,
    pub display: ReportDisplay,
}

fn primary_display(panel: &MetricPanel, published: Option<&PublishedRow>, footnotes: &mut Vec<String>) -> PrimaryDisplay {
    let mut cell = |name: &str, computed: String, published: Option<&String>| -> String {
        match published {
            Some(p) if point_of(p) != point_of(&computed) => {
                footnotes.push(format!(
                    "* {name}: computed from raw counts; the published table prints {}.",
                    point_of(p)
                ));
                let point = point_of(&computed);
                format!("{point}*{}", &computed[point.len()..])
            }
            _ => computed,
        }
    };
    PrimaryDisplay {
        sn: cell("Sn", format_percent_cell(&panel.sn), published.map(|p| &p.sn)),
        sp: cell("Sp", format_percent_cell(&panel.sp), published.map(|p| &p.sp)),
        ppv: cell("PPV", format_percent_cell(&panel.ppv), published.map(|p| &p.ppv)),
        npv: cell("NPV", format_percent_cell(&panel.npv), published.map(|p| &p.npv)),
        lr_pos: cell("LR+", format_ratio_cell(&panel.lr_pos), published.map(|p| &p.lr_pos)),
        lr_neg: cell("LR-", format_ratio_cell(&panel.lr_neg), published.map(|p| &p.lr_neg)),
        sn_fraction: format_proportion(panel.sn.estimate, 2),
        sp_fraction: format_proportion(panel.sp.estimate, 2),
        ppv_fraction: format_proportion(panel.ppv.estimate, 2),
        npv_fraction: format_proportion(panel.npv.estimate, 2),
    }
}

pub fn category_display(r: &CategoryResult) -> CategoryDisplay {
    CategoryDisplay {
        category_id: r.category_id,
        icd10: r.icd10.clone().unwrap_or_else(|| "-".to_string()),
        label: r.label.clone(),
        n_evaluated: r.n_evaluated,
        percent_marker_positive: r
            .percent_marker_positive
            .map(format_trimmed)
            .unwrap_or_else(|| NOT_DEFINED.to_string()),
        sn: format_percent_short(r.panel.sn.estimate),
        sp: format_percent_short(r.panel.sp.estimate),
        ppv: format_percent_short(r.panel.ppv.estimate),
        npv: format_percent_short(r.panel.npv.estimate),
    }
}

/// Terse one-line summary of a primary panel: "Sn 90 (80.6-95.4) | Sp ...".
pub fn summary_line(r: &CategoryResult) -> String {
    let p = &r.panel;
    format!(
        "Sn {} | Sp {} | PPV {} | NPV {} | LR+ {} | LR- {} | n={} (missing {})",
        format_percent_cell(&p.sn),
        format_percent_cell(&p.sp),
        format_percent_cell(&p.ppv),
        format_percent_cell(&p.npv),
        format_ratio_cell(&p.lr_pos),
        format_ratio_cell(&p.lr_neg),
        r.n_evaluated,
        r.n_missing_excluded
    )
}

impl ReportDocument {
    pub fn new(evaluation: ConditionEvaluation) -> Self {
        let mut footnotes = Vec::new();
        let primary = primary_display(&evaluation.primary.panel, evaluation.published.as_ref(), &mut footnotes);
        if let Some(p) = &evaluation.published {
            if !footnotes.is_empty() {
                footnotes.push(format!("Starred cells compare against the {}.", p.source));
            }
        }
        footnotes.push(format!("{NOT_DEFINED} = not defined (zero denominator)."));
        let display = ReportDisplay {
            summary_line: summary_line(&evaluation.primary),
            primary,
            categories: evaluation.all_results().map(category_display).collect(),
            footnotes,
        };
        ReportDocument { evaluation, display }
    }

    /// Parse a stored JSON report, re-deriving the display strings from the
    /// embedded evaluation.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        Ok(ReportDocument::new(doc.evaluation))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        match format {
            ReportFormat::Markdown => Ok(self.to_markdown()),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_markdown(&self) -> String {
        let e = &self.evaluation;
        let d = &self.display;
        let marker = e.condition.marker_name();
        let mut out = String::new();
        let _ = writeln!(out, "# {}: clinical notes against {marker} serology\n", e.condition.display_name());
        let _ = writeln!(out, "Source: `{}` ({} records)\n", e.provenance, e.n_records);
        let _ = writeln!(
            out,
            "{marker} cutoff: >= {} IU; proportion CI: {}; vaccination checks excluded: {}\n",
            e.config.thresholds.cutoff(e.condition),
            crate::dta::CiMethod::from(e.config.ci_config.proportion_method).label(),
            if e.config.exclude_vaccination { "yes" } else { "no" }
        );

        let _ = writeln!(out, "## Primary category\n");
        let _ = writeln!(out, "Summary: {}\n", d.summary_line);
        let _ = writeln!(
            out,
            "| Clinical note | n | Sn (%) (95% CI) | Sp (%) (95% CI) | PPV (%) (95% CI) | NPV (%) (95% CI) | LR+ (95% CI) | LR- (95% CI) |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        let p = &d.primary;
        let _ = writeln!(
            out,
            "| Category {}: {} | {} | {} | {} | {} | {} | {} | {} |\n",
            e.primary.category_id, e.primary.label, e.primary.n_evaluated, p.sn, p.sp, p.ppv, p.npv, p.lr_pos, p.lr_neg
        );
        let t = &e.primary.table;
        let _ = writeln!(
            out,
            "Counts: TP {}, FP {}, FN {}, TN {}; excluded for missing {marker}: {}; vaccination checks removed: {}\n",
            t.tp, t.fp, t.fn_, t.tn, e.primary.n_missing_excluded, e.primary.n_vaccination_excluded
        );
        let _ = writeln!(
            out,
            "Proportions: Sn {}, Sp {}, PPV {}, NPV {}\n",
            p.sn_fraction, p.sp_fraction, p.ppv_fraction, p.npv_fraction
        );

        let _ = writeln!(out, "## Categories\n");
        let _ = writeln!(
            out,
            "| ICD-10 Code | Code Summary | n | Percentage (%) {marker} Positive | Sn (%) | Sp (%) | PPV (%) | NPV (%) |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        for c in &d.categories {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                c.icd10, c.label, c.n_evaluated, c.percent_marker_positive, c.sn, c.sp, c.ppv, c.npv
            );
        }
        let _ = writeln!(out);
        for r in e.all_results() {
            let t = &r.table;
            let _ = writeln!(
                out,
                "- category {}: classified {}, vaccination removed {}, missing {}, evaluated {} (TP {}, FP {}, FN {}, TN {})",
                r.category_id, r.n_classified, r.n_vaccination_excluded, r.n_missing_excluded, r.n_evaluated, t.tp, t.fp, t.fn_, t.tn
            );
        }
        let _ = writeln!(out);
        for f in &d.footnotes {
            let _ = writeln!(out, "{f}");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "role",
            "category_id",
            "icd10",
            "label",
            "n_classified",
            "n_vaccination_excluded",
            "n_missing_excluded",
            "n_evaluated",
            "tp",
            "fp",
            "fn",
            "tn",
            "percent_marker_positive",
            "sn",
            "sp",
            "ppv",
            "npv",
            "lr_pos",
            "lr_neg",
        ])?;
        let e = &self.evaluation;
        for (i, r) in e.all_results().enumerate() {
            let role = if i == 0 { "primary" } else { "control" };
            let c = &self.display.categories[i];
            let (sn, sp, ppv, npv, lr_pos, lr_neg) = if i == 0 {
                let p = &self.display.primary;
                (p.sn.clone(), p.sp.clone(), p.ppv.clone(), p.npv.clone(), p.lr_pos.clone(), p.lr_neg.clone())
            } else {
                (
                    format_percent_cell(&r.panel.sn),
                    format_percent_cell(&r.panel.sp),
                    format_percent_cell(&r.panel.ppv),
                    format_percent_cell(&r.panel.npv),
                    format_ratio_cell(&r.panel.lr_pos),
                    format_ratio_cell(&r.panel.lr_neg),
                )
            };
            w.write_record([
                role.to_string(),
                r.category_id.to_string(),
                c.icd10.clone(),
                r.label.clone(),
                r.n_classified.to_string(),
                r.n_vaccination_excluded.to_string(),
                r.n_missing_excluded.to_string(),
                r.n_evaluated.to_string(),
                r.table.tp.to_string(),
                r.table.fp.to_string(),
                r.table.fn_.to_string(),
                r.table.tn.to_string(),
                c.percent_marker_positive.clone(),
                sn,
                sp,
                ppv,
                npv,
                lr_pos,
                lr_neg,
            ])?;
        }
        finish_csv(w)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, ReportError> {
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits the UTF-8 it was given"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotData {
    pub sensitivity_csv: String,
    pub specificity_csv: String,
}

fn plot_series(results: &[&CategoryResult], pick: fn(&MetricPanel) -> &MetricEstimate) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["category_id", "label", "value", "ci_low", "ci_high", "status"])?;
    for r in results {
        let m = pick(&r.panel);
        let (value, status) = match m.estimate {
            Estimate::Defined(v) => (v.to_string(), "defined"),
            Estimate::Infinite => (String::new(), "infinite"),
            Estimate::NotDefined => (String::new(), NOT_DEFINED),
        };
        let (low, high) = m
            .ci
            .map(|i| (i.low.to_string(), i.high.to_string()))
            .unwrap_or_default();
        w.write_record([r.category_id.to_string(), r.label.clone(), value, low, high, status.to_string()])?;
    }
    finish_csv(w)
}

/// Bar-chart series of Sn and Sp per category, ordered by category id.
pub fn emit_plot_data(results: &[CategoryResult]) -> Result<PlotData, ReportError> {
    let mut sorted: Vec<&CategoryResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.category_id);
    Ok(PlotData {
        sensitivity_csv: plot_series(&sorted, |p| &p.sn)?,
        specificity_csv: plot_series(&sorted, |p| &p.sp)?,
    })
}

/// Age-band histogram by sex for the whole cohort and the evaluated primary group.
pub fn demographics_csv(evaluation: &ConditionEvaluation) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "age_band", "male", "female", "unspecified", "total"])?;
    let groups: [(&str, &Option<CohortSummary>); 2] = [
        ("cohort", &evaluation.cohort_demographics),
        ("primary_evaluated", &evaluation.primary_demographics),
    ];
    for (group, summary) in groups {
        let Some(s) = summary else { continue };
        for band in &s.age_histogram {
            w.write_record([
                group.to_string(),
                band.label.clone(),
                band.male.to_string(),
                band.female.to_string(),
                band.unspecified.to_string(),
                band.total().to_string(),
            ])?;
        }
    }
    finish_csv(w)
}

pub const OUTPUT_FILES: [&str; 6] = [
    "report.md",
    "report.csv",
    "report.json",
    "plotdata_sensitivity.csv",
    "plotdata_specificity.csv",
    "demographics.csv",
];

/// Write every report artifact into `dir`, creating it if needed.
pub fn write_outputs(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let plot = emit_plot_data(&doc.evaluation.controls)?;
    let contents = [
        doc.to_markdown(),
        doc.to_csv()?,
        doc.to_json()?,
        plot.sensitivity_csv,
        plot.specificity_csv,
        demographics_csv(&doc.evaluation)?,
    ];
    let mut written = Vec::with_capacity(OUTPUT_FILES.len());
    for (name, body) in OUTPUT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dta::{compute_metrics, CiConfig, ContingencyTable};
    use crate::evaluation::EvaluationConfig;
    use crate::model::Condition;

    fn result(id: u8, table: ContingencyTable) -> CategoryResult {
        CategoryResult {
            category_id: id,
            label: format!("category {id}"),
            icd10: None,
            n_classified: table.n(),
            n_vaccination_excluded: 0,
            n_missing_excluded: 0,
            n_evaluated: table.n(),
            percent_marker_positive: (table.n() > 0).then(|| 100.0 * table.diseased() as f64 / table.n() as f64),
            table,
            panel: compute_metrics(&table, &CiConfig::default()),
        }
    }

    fn evaluation(primary: CategoryResult, controls: Vec<CategoryResult>) -> ConditionEvaluation {
        ConditionEvaluation {
            condition: Condition::HepatitisB,
            provenance: "unit".into(),
            config: EvaluationConfig::for_condition(Condition::HepatitisB),
            n_records: primary.n_classified,
            primary,
            controls,
            cohort_demographics: None,
            primary_demographics: None,
            published: None,
        }
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(format_fixed(0.125, 2), "0.13");
        assert_eq!(format_fixed(2.5, 0), "3");
        assert_eq!(format_fixed(-2.5, 0), "-3");
        assert_eq!(format_fixed(-0.001, 2), "0.00");
        assert_eq!(format_trimmed(100.0), "100");
        assert_eq!(format_trimmed(97.25), "97.3");
        assert_eq!(format_trimmed(0.0), "0");
        assert_eq!(format_trimmed(0.94), "0.9");
    }

    #[test]
    fn hbv_primary_cells() {
        let doc = ReportDocument::new(evaluation(result(1, ContingencyTable::new(69, 45, 8, 57)), vec![]));
        let p = &doc.display.primary;
        assert_eq!(p.sn, "90 (80.6-95.4)");
        assert_eq!(p.sp, "56 (45.7-65.7)");
        assert_eq!(p.lr_pos, "2.03 (1.61-2.56)");
        assert_eq!(p.lr_neg, "0.19 (0.09-0.37)");
        assert_eq!(p.sn_fraction, "0.90");
        assert!(doc.to_markdown().contains("Sn 90 (80.6-95.4)"));
        assert_eq!(doc.display.categories[0].percent_marker_positive, "43");
    }

    #[test]
    fn published_differences_are_starred() {
        let mut e = evaluation(result(1, ContingencyTable::new(69, 45, 8, 57)), vec![]);
        e.published = Some(PublishedRow::table3(Condition::HepatitisB));
        let doc = ReportDocument::new(e);
        let p = &doc.display.primary;
        assert_eq!(p.sn, "90 (80.6-95.4)");
        assert_eq!(p.lr_pos, "2.03* (1.61-2.56)");
        assert_eq!(p.lr_neg, "0.19* (0.09-0.37)");
        let md = doc.to_markdown();
        assert!(md.contains("2.03* (1.61-2.56)"));
        assert!(md.contains("prints 2.05"));
        assert!(md.contains("prints 0.18"));
    }

    #[test]
    fn undefined_cells() {
        let doc = ReportDocument::new(evaluation(
            result(1, ContingencyTable::default()),
            vec![result(32, ContingencyTable::new(0, 0, 0, 10))],
        ));
        assert_eq!(doc.display.primary.sn, NOT_DEFINED);
        assert_eq!(doc.display.primary.lr_pos, NOT_DEFINED);
        let ws = &doc.display.categories[1];
        assert_eq!((ws.sn.as_str(), ws.sp.as_str(), ws.ppv.as_str(), ws.npv.as_str()), ("n.d.", "100", "n.d.", "100"));
        assert_eq!(ws.percent_marker_positive, "0");
        assert!(doc.to_markdown().contains("| n.d. | 100 | n.d. | 100 |"));
    }

    #[test]
    fn infinite_ratio_cell() {
        let r = result(1, ContingencyTable::new(5, 0, 0, 5));
        assert_eq!(format_ratio_cell(&r.panel.lr_pos), INFINITE);
        assert_eq!(format_ratio_cell(&r.panel.lr_neg), "0.00 (n.d.)");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let doc = ReportDocument::new(evaluation(
            result(1, ContingencyTable::new(101, 38, 17, 10)),
            vec![result(10, ContingencyTable::new(0, 0, 3, 300))],
        ));
        let json = doc.to_json().unwrap();
        let back = ReportDocument::from_json(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.evaluation.primary.panel, doc.evaluation.primary.panel);
    }

    #[test]
    fn plot_data_sorted_by_id() {
        let results = vec![
            result(37, ContingencyTable::new(0, 0, 2, 90)),
            result(10, ContingencyTable::new(0, 0, 1, 99)),
        ];
        let plot = emit_plot_data(&results).unwrap();
        let lines: Vec<&str> = plot.sensitivity_csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("10,"));
        assert!(lines[2].starts_with("37,"));
        let single = emit_plot_data(&results[..1]).unwrap();
        assert_eq!(single.specificity_csv.lines().count(), 2);
        assert!(single.specificity_csv.lines().nth(1).unwrap().starts_with("37,category 37,1,"));
    }

    #[test]
    fn format_tokens() {
        assert_eq!("markdown".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!(matches!("xml".parse::<ReportFormat>(), Err(ReportError::UnknownFormat(_))));
    }

    #[test]
    fn rendering_is_deterministic() {
        let make = || {
            ReportDocument::new(evaluation(
                result(1, ContingencyTable::new(69, 45, 8, 57)),
                vec![result(10, ContingencyTable::new(0, 1, 3, 300))],
            ))
        };
        assert_eq!(make().to_markdown(), make().to_markdown());
        assert_eq!(make().to_csv().unwrap(), make().to_csv().unwrap());
    }
}
