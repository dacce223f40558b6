//! Acceptance criteria, one PASS/FAIL line each. Custom harness so the
//! verdict lines always reach the console.

use std::path::Path;
use std::process::{Command, ExitCode};

use clinote::classifier::{Lexicon, NoteClassifier};
use clinote::dta::{clopper_pearson, compute_metrics, CiConfig, ContingencyTable, Estimate, MetricPanel};
use clinote::evaluation::{evaluate_condition, EvaluationConfig};
use clinote::model::{Condition, TestLabel};
use clinote::report::{format_proportion, ReportDocument};
use clinote::synth::{synthesize_exact, synthesize_random, RandomSpec, SplitMix64, SynthesisSpec};

const HBV: ContingencyTable = ContingencyTable::new(69, 45, 8, 57);
const HCV: ContingencyTable = ContingencyTable::new(101, 38, 17, 10);

struct Checks {
    items: Vec<(String, bool)>,
}

impl Checks {
    fn new() -> Self {
        Checks { items: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.items.push((what.into(), ok));
    }

    fn eq<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, got: T, want: T) {
        let ok = got == want;
        self.check(format!("{what}: got {got:?}, want {want:?}"), ok);
    }

    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check(format!("{what}: got {got:.5}, want {want} +/- {tol}"), (got - want).abs() <= tol);
    }
}

fn verdict(id: &str, title: &str, checks: Checks) -> bool {
    let failed: Vec<&String> = checks.items.iter().filter(|(_, ok)| !ok).map(|(s, _)| s).collect();
    let pass = failed.is_empty();
    println!(
        "[{}] {id} {title} ({}/{} checks)",
        if pass { "PASS" } else { "FAIL" },
        checks.items.len() - failed.len(),
        checks.items.len()
    );
    for f in failed {
        println!("        mismatch: {f}");
    }
    pass
}

fn panel(t: &ContingencyTable) -> MetricPanel {
    compute_metrics(t, &CiConfig::default())
}

fn fractions(p: &MetricPanel) -> [String; 4] {
    [p.sn.estimate, p.sp.estimate, p.ppv.estimate, p.npv.estimate].map(|e| format_proportion(e, 2))
}

fn c1() -> bool {
    let mut c = Checks::new();
    let p = panel(&HBV);
    c.eq("counts", (HBV.tp, HBV.fp, HBV.fn_, HBV.tn, HBV.n()), (69, 45, 8, 57, 179));
    let got = fractions(&p);
    for (name, (g, want)) in ["Sn", "Sp", "PPV", "NPV"].iter().zip(got.iter().zip(["0.90", "0.56", "0.61", "0.87"])) {
        c.eq(name, g.as_str(), want);
    }
    verdict("C1", "HBV worked example, 2-dp display values", c)
}

fn c2() -> bool {
    let mut c = Checks::new();
    let got = fractions(&panel(&HCV));
    for (name, (g, want)) in ["Sn", "Sp", "PPV", "NPV"].iter().zip(got.iter().zip(["0.86", "0.21", "0.73", "0.37"])) {
        c.eq(name, g.as_str(), want);
    }
    verdict("C2", "HCV worked example, 2-dp display values", c)
}

fn c3() -> bool {
    let mut c = Checks::new();
    let cases = [
        ("HBV Sn", HBV.tp, HBV.diseased(), (80.6, 95.4)),
        ("HBV Sp", HBV.tn, HBV.healthy(), (45.7, 65.7)),
        ("HCV Sn", HCV.tp, HCV.diseased(), (77.9, 91.4)),
        ("HCV Sp", HCV.tn, HCV.healthy(), (10.5, 35.0)),
    ];
    for (name, k, n, (lo, hi)) in cases {
        let i = clopper_pearson(k, n, 0.95).expect("valid counts");
        c.near(&format!("{name} low"), 100.0 * i.low, lo, 0.5);
        c.near(&format!("{name} high"), 100.0 * i.high, hi, 0.5);
    }
    verdict("C3", "Clopper-Pearson Sn/Sp intervals within 0.5 pp", c)
}

fn c4() -> bool {
    let mut c = Checks::new();
    let cases = [
        ("HBV LR+", panel(&HBV).lr_pos, (1.61, 2.56)),
        ("HBV LR-", panel(&HBV).lr_neg, (0.09, 0.37)),
        ("HCV LR+", panel(&HCV).lr_pos, (0.92, 1.27)),
        ("HCV LR-", panel(&HCV).lr_neg, (0.34, 1.40)),
    ];
    for (name, m, (lo, hi)) in cases {
        match m.ci {
            Some(i) => {
                c.near(&format!("{name} low"), i.low, lo, 0.02);
                c.near(&format!("{name} high"), i.high, hi, 0.02);
            }
            None => c.check(format!("{name}: no interval"), false),
        }
    }
    verdict("C4", "log-method LR intervals within 0.02", c)
}

fn run_cli(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_clinote"))
        .args(args)
        .output()
        .expect("spawn clinote");
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn point(cell: &str) -> &str {
    cell.split(" (").next().unwrap_or(cell).trim_end_matches('*')
}

fn interval(cell: &str) -> Option<(f64, f64)> {
    let inner = cell.split_once(" (")?.1.strip_suffix(')')?;
    let (a, b) = inner.split_once('-')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

struct PipelineCase {
    preset: &'static str,
    condition: &'static str,
    records: usize,
    missing: u64,
    table: ContingencyTable,
    /// Published row: Sn, Sp, PPV, NPV, LR+, LR-.
    row: [&'static str; 6],
}

fn pipeline(c: &mut Checks, dir: &Path, case: &PipelineCase) {
    let csv = dir.join(format!("{}.csv", case.preset));
    let out = dir.join(format!("{}-out", case.preset));
    let (ok, _) = run_cli(&["synth", "--preset", case.preset, "--output", csv.to_str().unwrap()]);
    c.check(format!("{} synth exits 0", case.preset), ok);
    let text = std::fs::read_to_string(&csv).unwrap_or_default();
    c.eq(&format!("{} records", case.preset), text.lines().count().saturating_sub(1), case.records);

    let (ok, stdout) = run_cli(&[
        "evaluate",
        csv.to_str().unwrap(),
        "--condition",
        case.condition,
        "--published",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    c.check(format!("{} evaluate exits 0", case.preset), ok);
    c.check(format!("{} console summary present", case.preset), stdout.contains("Sn "));
    let Ok(json) = std::fs::read_to_string(out.join("report.json")) else {
        c.check(format!("{} report.json written", case.preset), false);
        return;
    };
    let doc = ReportDocument::from_json(&json).expect("report.json parses");
    let primary = &doc.evaluation.primary;
    c.eq(&format!("{} n", case.preset), primary.n_evaluated, case.table.n());
    c.eq(&format!("{} missing", case.preset), primary.n_missing_excluded, case.missing);
    c.eq(&format!("{} table", case.preset), primary.table, case.table);

    let d = &doc.display.primary;
    let cells = [&d.sn, &d.sp, &d.ppv, &d.npv, &d.lr_pos, &d.lr_neg];
    let names = ["Sn", "Sp", "PPV", "NPV", "LR+", "LR-"];
    let markdown = std::fs::read_to_string(out.join("report.md")).unwrap_or_default();
    for i in 0..6 {
        let name = format!("{} {}", case.preset, names[i]);
        let published = case.row[i];
        let (got, want) = (point(cells[i]), point(published));
        if i >= 4 && got != want {
            // raw-count ratio shown with a footnote carrying the published figure
            c.check(
                format!("{name}: {got}* with footnote {want}"),
                cells[i].contains('*') && markdown.contains(&format!("prints {want}")),
            );
        } else {
            c.eq(&format!("{name} point"), got, want);
        }
        // PPV/NPV intervals are reported but not gated
        if i == 2 || i == 3 {
            continue;
        }
        let tol = if i < 4 { 0.5 } else { 0.02 };
        match (interval(cells[i]), interval(published)) {
            (Some((gl, gh)), Some((wl, wh))) => {
                c.near(&format!("{name} low"), gl, wl, tol);
                c.near(&format!("{name} high"), gh, wh, tol);
            }
            _ => c.check(format!("{name} interval missing in `{}`", cells[i]), false),
        }
    }
}

fn c5() -> bool {
    let mut c = Checks::new();
    let dir = tempfile::tempdir().expect("temp dir");
    pipeline(
        &mut c,
        dir.path(),
        &PipelineCase {
            preset: "figS1-hbv",
            condition: "hbv",
            records: 241,
            missing: 62,
            table: HBV,
            row: ["90 (80.6-95.4)", "56 (45.7-65.7)", "61 (54.9-65.9)", "87 (78.3-93.4)", "2.05 (1.61-2.56)", "0.18 (0.09-0.37)"],
        },
    );
    pipeline(
        &mut c,
        dir.path(),
        &PipelineCase {
            preset: "figS1-hcv",
            condition: "hcv",
            records: 327,
            missing: 161,
            table: HCV,
            row: ["86 (77.9-91.4)", "21 (10.5-35.0)", "73 (69.3-75.8)", "37 (22.5-54.4)", "1.08 (0.92-1.27)", "0.67 (0.34-1.40)"],
        },
    );
    verdict("C5", "synth -> evaluate pipeline reproduces the accuracy rows", c)
}

fn c6() -> bool {
    let mut c = Checks::new();
    let classifier = NoteClassifier::new(Lexicon::default_lexicon());
    let positive = ["Hep C", "Known Hep C", "Hep C Pos", "Hx Hep C", "Hep C exposure"];
    let negative = ["?Hep C", "Possible Hep C", "Hepatitis cause?", "Screen Hep C"];
    for phrase in positive {
        c.eq(phrase, classifier.classify(phrase).hcv_label, TestLabel::Positive);
    }
    for phrase in negative {
        c.eq(phrase, classifier.classify(phrase).hcv_label, TestLabel::Negative);
    }
    verdict("C6", "nine discussion phrases classify with the stated polarity", c)
}

fn c7() -> bool {
    let mut c = Checks::new();
    let lexicon = Lexicon::default_lexicon();
    let cohort = synthesize_random(
        &RandomSpec {
            n: 200,
            prevalence: 0.0,
            note_mix: vec![(32, 1.0)],
            seed: 7,
        },
        &lexicon,
    )
    .expect("random cohort");
    let e = evaluate_condition(&cohort, &EvaluationConfig::for_condition(Condition::HepatitisB), &lexicon).expect("evaluate");
    let doc = ReportDocument::new(e);
    let Some(ws) = doc.display.categories.iter().find(|r| r.category_id == 32) else {
        c.check("work screening row present", false);
        return verdict("C7", "n.d. semantics on a work-screening category", c);
    };
    let result = doc.evaluation.controls.iter().find(|r| r.category_id == 32).unwrap();
    c.eq("evaluated", result.n_evaluated, 200);
    c.eq("Sp fraction", format_proportion(result.panel.sp.estimate, 2), "1.00".to_string());
    c.eq("row (Sn, Sp, PPV, NPV)", (ws.sn.as_str(), ws.sp.as_str(), ws.ppv.as_str(), ws.npv.as_str()), ("n.d.", "100", "n.d.", "100"));
    c.eq("% positive", ws.percent_marker_positive.as_str(), "0");
    verdict("C7", "n.d. semantics on a work-screening category", c)
}

/// Textbook evaluation of each metric, written independently of the library.
fn naive(tp: u64, fp: u64, fn_: u64, tn: u64) -> [Option<f64>; 6] {
    let div = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
    let sn = div(tp, tp + fn_);
    let sp = div(tn, tn + fp);
    let ratio = |num: f64, den: f64| -> Option<f64> {
        if den == 0.0 {
            if num > 0.0 { Some(f64::INFINITY) } else { None }
        } else {
            Some(num / den)
        }
    };
    let (lr_pos, lr_neg) = match (sn, sp) {
        (Some(sn), Some(sp)) => (ratio(sn, 1.0 - sp), ratio(1.0 - sn, sp)),
        _ => (None, None),
    };
    [sn, sp, div(tp, tp + fp), div(tn, tn + fn_), lr_pos, lr_neg]
}

fn as_option(e: Estimate) -> Option<f64> {
    match e {
        Estimate::Defined(v) => Some(v),
        Estimate::Infinite => Some(f64::INFINITY),
        Estimate::NotDefined => None,
    }
}

fn criterion_8a(c: &mut Checks) {
    let mut tables = 0;
    let mut mismatches = Vec::new();
    for tp in 0..=6 {
        for fp in 0..=6 {
            for fn_ in 0..=6 {
                for tn in 0..=6 {
                    tables += 1;
                    let p = panel(&ContingencyTable::new(tp, fp, fn_, tn));
                    let got = [&p.sn, &p.sp, &p.ppv, &p.npv, &p.lr_pos, &p.lr_neg];
                    let want = naive(tp, fp, fn_, tn);
                    for (m, w) in got.iter().zip(want) {
                        let g = as_option(m.estimate);
                        let same = match (g, w) {
                            (None, None) => true,
                            (Some(a), Some(b)) if a.is_infinite() || b.is_infinite() => a == b,
                            (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                            _ => false,
                        };
                        let contained = match (m.estimate, m.ci) {
                            (Estimate::Defined(v), Some(i)) => i.low <= v + 1e-12 && v <= i.high + 1e-12,
                            _ => true,
                        };
                        if !same || !contained {
                            mismatches.push(format!("({tp},{fp},{fn_},{tn}) got {g:?} want {w:?}"));
                        }
                    }
                }
            }
        }
    }
    c.check(
        format!("8a brute-force oracle over {tables} tables: {} mismatches {:?}", mismatches.len(), mismatches.first()),
        mismatches.is_empty(),
    );
}

fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let mut coefficient = 1.0;
    for i in 0..k {
        coefficient = coefficient * (n - i) as f64 / (i + 1) as f64;
    }
    coefficient * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn criterion_8b(c: &mut Checks) {
    let mut worst = (1.0f64, 0u64, 0.0f64);
    for n in 1..=12u64 {
        let intervals: Vec<_> = (0..=n).map(|k| clopper_pearson(k, n, 0.95).unwrap()).collect();
        for step in 1..=19 {
            let p = step as f64 * 0.05;
            let coverage: f64 = (0..=n)
                .filter(|&k| intervals[k as usize].low <= p && p <= intervals[k as usize].high)
                .map(|k| binomial_pmf(k, n, p))
                .sum();
            if coverage < worst.0 {
                worst = (coverage, n, p);
            }
        }
    }
    c.check(
        format!("8b minimum Clopper-Pearson coverage {:.4} at n={}, p={:.2}", worst.0, worst.1, worst.2),
        worst.0 >= 0.95,
    );
}

fn criterion_8c(c: &mut Checks) {
    let mut rng = SplitMix64::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut cell = || 1 + rng.below(500);
        let t = ContingencyTable::new(cell(), cell(), cell(), cell());
        let p = panel(&t);
        let (sn, sp, ppv, npv) = (
            p.sn.value().unwrap(),
            p.sp.value().unwrap(),
            p.ppv.value().unwrap(),
            p.npv.value().unwrap(),
        );
        let prev = p.prevalence_sample.value().unwrap();
        let errors = [
            (as_option(p.lr_pos.estimate).unwrap() - sn / (1.0 - sp)).abs(),
            (as_option(p.lr_neg.estimate).unwrap() - (1.0 - sn) / sp).abs(),
            (ppv - sn * prev / (sn * prev + (1.0 - sp) * (1.0 - prev))).abs(),
            (npv - sp * (1.0 - prev) / (sp * (1.0 - prev) + (1.0 - sn) * prev)).abs(),
        ];
        worst = errors.iter().fold(worst, |a, &b| a.max(b));
    }
    c.check(format!("8c LR and Bayes identities on 10^4 tables, max error {worst:e}"), worst <= 1e-12);
}

fn criterion_8d(c: &mut Checks) {
    let lexicon = Lexicon::default_lexicon();
    let mut rng = SplitMix64::new(99);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let condition = if rng.bernoulli(0.5) { Condition::HepatitisB } else { Condition::HepatitisC };
        let mut cell = || rng.below(150);
        let table = ContingencyTable::new(cell(), cell(), cell(), cell());
        let missing = rng.below(150);
        let spec = SynthesisSpec::new(condition, table, missing, rng.next_u64());
        let cohort = synthesize_exact(&spec).expect("feasible spec");
        let e = evaluate_condition(&cohort, &EvaluationConfig::for_condition(condition), &lexicon).expect("evaluate");
        if e.primary.table != table || e.primary.n_missing_excluded != missing {
            failures.push(format!("{table:?} missing {missing} seed {}", spec.seed));
        }
    }
    c.check(format!("8d synthesize_exact -> evaluate on 100 specs, {} failures {:?}", failures.len(), failures.first()), failures.is_empty());
}

fn c8() -> bool {
    let mut c = Checks::new();
    criterion_8a(&mut c);
    criterion_8b(&mut c);
    criterion_8c(&mut c);
    criterion_8d(&mut c);
    for (what, _) in &c.items {
        println!("        {what}");
    }
    verdict("C8", "property suites (oracle, coverage, identities, round trip)", c)
}

fn c9() -> bool {
    let mut c = Checks::new();
    c.check("category-table rows are reproduced behaviourally by C7 and C8, not numerically", true);
    verdict("C9", "category-table raw counts unpublished; no numerical claim", c)
}

fn main() -> ExitCode {
    println!("acceptance criteria");
    let results = [c1(), c2(), c3(), c4(), c5(), c6(), c7(), c8(), c9()];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
