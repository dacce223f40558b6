//! Deterministic synthetic cohorts: exact reconstruction of a target 2x2
//! table, and seeded random cohorts for stress and property tests.
//!
//! All randomness comes from [`SplitMix64`], consumed in a fixed order, so a
//! spec and seed always produce the same cohort byte for byte.

mod rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rng::{SplitMix64, GOLDEN_GAMMA, MIX_1, MIX_2};

use crate::classifier::{Lexicon, CATEGORY_COUNT, NO_NOTES_CATEGORY};
use crate::dta::ContingencyTable;
use crate::model::{Cohort, Condition, ModelError, PathologyRecord, Sex};

pub const PRESETS: [&str; 2] = ["figS1-hbv", "figS1-hcv"];
pub const MAX_AGE_DRAW: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("sex split {male}+{female} does not equal the {expected} records requested")]
    SexSplitMismatch { male: u64, female: u64, expected: u64 },
    #[error("evaluated sex split {male}+{female} does not equal the table total {expected}")]
    EvaluatedSplitMismatch { male: u64, female: u64, expected: u64 },
    #[error("evaluated sex split exceeds the overall split")]
    EvaluatedSplitExceeds,
    #[error("{0} phrase pool is empty")]
    EmptyPool(&'static str),
    #[error("cutoff must be finite and > 0, got {0}")]
    InvalidCutoff(f64),
    #[error("age mean {mean} / sd {sd} must be finite with mean in [0, 100] and sd >= 0")]
    InvalidAge { mean: f64, sd: f64 },
    #[error("prevalence {0} is not in [0, 1]")]
    InvalidPrevalence(f64),
    #[error("invalid note mixture: {0}")]
    InvalidWeights(String),
    #[error("unknown preset `{0}` (expected figS1-hbv or figS1-hcv)")]
    UnknownPreset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SexSplit {
    pub male: u64,
    pub female: u64,
}

impl SexSplit {
    pub fn total(&self) -> u64 {
        self.male + self.female
    }

    /// Males take the extra record when `n` is odd.
    pub fn even(n: u64) -> SexSplit {
        SexSplit {
            male: n - n / 2,
            female: n / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhrasePools {
    /// Notes asserting the condition (test positive).
    pub statements: Vec<String>,
    /// Query or screening notes (test negative).
    pub queries: Vec<String>,
}

impl PhrasePools {
    pub fn for_condition(condition: Condition) -> PhrasePools {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        match condition {
            Condition::HepatitisB => PhrasePools {
                statements: own(&["Hep B", "Known Hep B", "Hep B Pos", "Hx Hep B", "Hep B exposure", "Hepatitis B positive"]),
                queries: own(&["?Hep B", "Possible Hep B", "Screen Hep B", "Hep B?"]),
            },
            Condition::HepatitisC => PhrasePools {
                statements: own(&["Hep C", "Known Hep C", "Hep C Pos", "Hx Hep C", "Hep C exposure", "Hepatitis C positive"]),
                queries: own(&["?Hep C", "Possible Hep C", "Screen Hep C", "Hep C?"]),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub condition: Condition,
    pub target_table: ContingencyTable,
    pub n_missing: u64,
    /// Target mean and SD of age in the evaluated (non-missing) records.
    pub age_mean: f64,
    pub age_sd: f64,
    /// Whole cohort; must sum to table n + n_missing.
    pub sex_split: SexSplit,
    /// Optional split for the evaluated records alone; the rest go to the
    /// missing-serology records.
    pub evaluated_sex_split: Option<SexSplit>,
    pub seed: u64,
    pub phrase_pools: PhrasePools,
    /// Positivity cutoff for the condition's marker.
    pub cutoff: f64,
}

impl SynthesisSpec {
    /// Spec with default pools, cutoff, an even sex split and adult ages.
    pub fn new(condition: Condition, target_table: ContingencyTable, n_missing: u64, seed: u64) -> Self {
        SynthesisSpec {
            condition,
            target_table,
            n_missing,
            age_mean: 40.0,
            age_sd: 17.6,
            sex_split: SexSplit::even(target_table.n() + n_missing),
            evaluated_sex_split: None,
            seed,
            phrase_pools: PhrasePools::for_condition(condition),
            cutoff: condition.default_cutoff(),
        }
    }

    pub fn n_records(&self) -> u64 {
        self.target_table.n() + self.n_missing
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let expected = self.n_records();
        if self.sex_split.total() != expected {
            return Err(SynthesisError::SexSplitMismatch {
                male: self.sex_split.male,
                female: self.sex_split.female,
                expected,
            });
        }
        if let Some(e) = self.evaluated_sex_split {
            let n = self.target_table.n();
            if e.total() != n {
                return Err(SynthesisError::EvaluatedSplitMismatch {
                    male: e.male,
                    female: e.female,
                    expected: n,
                });
            }
            if e.male > self.sex_split.male || e.female > self.sex_split.female {
                return Err(SynthesisError::EvaluatedSplitExceeds);
            }
        }
        if self.phrase_pools.statements.is_empty() {
            return Err(SynthesisError::EmptyPool("statement"));
        }
        if self.phrase_pools.queries.is_empty() {
            return Err(SynthesisError::EmptyPool("query"));
        }
        if !self.cutoff.is_finite() || self.cutoff <= 0.0 {
            return Err(SynthesisError::InvalidCutoff(self.cutoff));
        }
        if !self.age_mean.is_finite()
            || !self.age_sd.is_finite()
            || !(0.0..=MAX_AGE_DRAW).contains(&self.age_mean)
            || self.age_sd < 0.0
        {
            return Err(SynthesisError::InvalidAge {
                mean: self.age_mean,
                sd: self.age_sd,
            });
        }
        Ok(())
    }
}

/// Specs reproducing the two worked accuracy examples, with the group
/// demographics of the published study.
pub fn preset(name: &str, seed: u64) -> Result<SynthesisSpec, SynthesisError> {
    let (condition, table, n_missing, mean, sd, evaluated, missing) = match name {
        "figS1-hbv" => (
            Condition::HepatitisB,
            ContingencyTable::new(69, 45, 8, 57),
            62,
            38.0,
            14.4,
            SexSplit { male: 98, female: 81 },
            SexSplit::even(62),
        ),
        "figS1-hcv" => (
            Condition::HepatitisC,
            ContingencyTable::new(101, 38, 17, 10),
            161,
            36.0,
            15.8,
            SexSplit { male: 85, female: 81 },
            SexSplit::even(161),
        ),
        other => return Err(SynthesisError::UnknownPreset(other.to_string())),
    };
    let mut spec = SynthesisSpec::new(condition, table, n_missing, seed);
    spec.age_mean = mean;
    spec.age_sd = sd;
    spec.sex_split = SexSplit {
        male: evaluated.male + missing.male,
        female: evaluated.female + missing.female,
    };
    spec.evaluated_sex_split = Some(evaluated);
    Ok(spec)
}

/// Assay value in hundredths: positives in [cutoff, 10 * cutoff], negatives in [0, cutoff).
struct AssayDraw {
    positive_low: u64,
    positive_high: u64,
}

impl AssayDraw {
    fn new(cutoff: f64) -> Self {
        let mut low = (cutoff * 100.0).ceil() as u64;
        while low > 0 && ((low - 1) as f64 / 100.0) >= cutoff {
            low -= 1;
        }
        while (low as f64 / 100.0) < cutoff {
            low += 1;
        }
        let mut high = (cutoff * 1000.0).floor() as u64;
        while (high as f64 / 100.0) > 10.0 * cutoff && high > low {
            high -= 1;
        }
        AssayDraw {
            positive_low: low,
            positive_high: high.max(low),
        }
    }

    fn draw(&self, rng: &mut SplitMix64, positive: bool) -> f64 {
        let k = if positive {
            rng.range_inclusive(self.positive_low, self.positive_high)
        } else {
            // positive_low >= 1 because cutoff > 0
            rng.below(self.positive_low)
        };
        k as f64 / 100.0
    }
}

fn truncated_normal(rng: &mut SplitMix64, mean: f64, sd: f64) -> f64 {
    for _ in 0..1000 {
        let x = mean + sd * rng.standard_normal();
        if (0.0..=MAX_AGE_DRAW).contains(&x) {
            return x;
        }
    }
    mean
}

/// Shift and scale `xs` to the given sample mean and SD, then clamp and round.
fn match_moments(xs: &[f64], mean: f64, sd: f64) -> Vec<u32> {
    let n = xs.len();
    let adjusted: Vec<f64> = if n >= 2 {
        let m = xs.iter().sum::<f64>() / n as f64;
        let s = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        if s > 0.0 {
            xs.iter().map(|x| mean + sd * (x - m) / s).collect()
        } else {
            xs.to_vec()
        }
    } else {
        xs.to_vec()
    };
    adjusted
        .into_iter()
        .map(|x| x.clamp(0.0, MAX_AGE_DRAW).round() as u32)
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Tp,
    Fp,
    Fn,
    Tn,
    Missing,
}

fn sexes(split: SexSplit, rng: &mut SplitMix64) -> Vec<Sex> {
    let mut v: Vec<Sex> = std::iter::repeat_n(Sex::Male, split.male as usize)
        .chain(std::iter::repeat_n(Sex::Female, split.female as usize))
        .collect();
    rng.shuffle(&mut v);
    v
}

pub fn synthesize_exact(spec: &SynthesisSpec) -> Result<Cohort, SynthesisError> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let t = &spec.target_table;
    let provenance = format!("synthetic:{}:exact:seed={}", spec.condition.short_name(), spec.seed);
    if spec.n_records() == 0 {
        return Ok(Cohort::empty(provenance));
    }

    let evaluated_cells: Vec<Cell> = [(Cell::Tp, t.tp), (Cell::Fp, t.fp), (Cell::Fn, t.fn_), (Cell::Tn, t.tn)]
        .into_iter()
        .flat_map(|(c, k)| std::iter::repeat_n(c, k as usize))
        .collect();
    let n_eval = evaluated_cells.len();

    let (eval_sexes, missing_sexes) = match spec.evaluated_sex_split {
        Some(e) => {
            let rest = SexSplit {
                male: spec.sex_split.male - e.male,
                female: spec.sex_split.female - e.female,
            };
            (sexes(e, &mut rng), sexes(rest, &mut rng))
        }
        None => {
            let mut all = sexes(spec.sex_split, &mut rng);
            let missing = all.split_off(n_eval);
            (all, missing)
        }
    };

    let eval_draws: Vec<f64> = (0..n_eval)
        .map(|_| truncated_normal(&mut rng, spec.age_mean, spec.age_sd))
        .collect();
    let eval_ages = match_moments(&eval_draws, spec.age_mean, spec.age_sd);
    let missing_ages: Vec<u32> = (0..spec.n_missing)
        .map(|_| truncated_normal(&mut rng, spec.age_mean, spec.age_sd).round() as u32)
        .collect();

    let assay = AssayDraw::new(spec.cutoff);
    let pools = &spec.phrase_pools;
    let pick = |rng: &mut SplitMix64, pool: &[String]| pool[rng.below(pool.len() as u64) as usize].clone();

    let cells = evaluated_cells
        .into_iter()
        .zip(eval_sexes)
        .zip(eval_ages)
        .chain(
            std::iter::repeat_n(Cell::Missing, spec.n_missing as usize)
                .zip(missing_sexes)
                .zip(missing_ages),
        );
    let mut records = Vec::with_capacity(spec.n_records() as usize);
    for ((cell, sex), age) in cells {
        let (note, value) = match cell {
            Cell::Tp => (pick(&mut rng, &pools.statements), Some(assay.draw(&mut rng, true))),
            Cell::Fp => (pick(&mut rng, &pools.statements), Some(assay.draw(&mut rng, false))),
            Cell::Fn => (pick(&mut rng, &pools.queries), Some(assay.draw(&mut rng, true))),
            Cell::Tn => (pick(&mut rng, &pools.queries), Some(assay.draw(&mut rng, false))),
            Cell::Missing => {
                let k = rng.below((pools.statements.len() + pools.queries.len()) as u64) as usize;
                let note = pools
                    .statements
                    .get(k)
                    .unwrap_or_else(|| &pools.queries[k - pools.statements.len()])
                    .clone();
                (note, None)
            }
        };
        let (hbsag_iu, anti_hcv_iu) = match spec.condition {
            Condition::HepatitisB => (value, None),
            Condition::HepatitisC => (None, value),
        };
        records.push(PathologyRecord {
            record_id: String::new(),
            age: Some(age),
            sex,
            note_text: note,
            hbsag_iu,
            anti_hcv_iu,
            collection_year: None,
        });
    }
    rng.shuffle(&mut records);
    for (i, r) in records.iter_mut().enumerate() {
        r.record_id = format!("syn-{:06}", i + 1);
    }
    Ok(Cohort::new(records, provenance)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: u64,
    /// Probability that each marker is positive, drawn independently per marker.
    pub prevalence: f64,
    /// (category id, weight) pairs.
    pub note_mix: Vec<(u8, f64)>,
    pub seed: u64,
}

impl RandomSpec {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        if !(0.0..=1.0).contains(&self.prevalence) {
            return Err(SynthesisError::InvalidPrevalence(self.prevalence));
        }
        if self.note_mix.is_empty() {
            return Err(SynthesisError::InvalidWeights("no categories given".into()));
        }
        for &(id, w) in &self.note_mix {
            if id == 0 || id > CATEGORY_COUNT {
                return Err(SynthesisError::InvalidWeights(format!("category {id} outside 1..={CATEGORY_COUNT}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(SynthesisError::InvalidWeights(format!("weight {w} for category {id}")));
            }
        }
        if self.note_mix.iter().all(|&(_, w)| w == 0.0) {
            return Err(SynthesisError::InvalidWeights("all weights are zero".into()));
        }
        Ok(())
    }
}

/// A note that the default lexicon places in `category_id`.
fn phrase_for(category_id: u8, lexicon: &Lexicon, rng: &mut SplitMix64) -> String {
    if category_id == NO_NOTES_CATEGORY {
        return String::new();
    }
    for condition in Condition::ALL {
        if category_id == condition.category_id() {
            let pools = PhrasePools::for_condition(condition);
            let pool = if rng.bernoulli(0.5) { &pools.statements } else { &pools.queries };
            return pool[rng.below(pool.len() as u64) as usize].clone();
        }
    }
    match lexicon.rule(category_id) {
        Some(rule) if !rule.patterns.is_empty() => {
            let p = &rule.patterns[rng.below(rule.patterns.len() as u64) as usize];
            p.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
        }
        _ => String::new(),
    }
}

pub fn synthesize_random(spec: &RandomSpec, lexicon: &Lexicon) -> Result<Cohort, SynthesisError> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let total: f64 = spec.note_mix.iter().map(|&(_, w)| w).sum();
    let hbsag = AssayDraw::new(Condition::HepatitisB.default_cutoff());
    let anti_hcv = AssayDraw::new(Condition::HepatitisC.default_cutoff());

    let mut records = Vec::with_capacity(spec.n as usize);
    for i in 0..spec.n {
        let target = rng.next_f64() * total;
        let mut acc = 0.0;
        let mut category = spec.note_mix.iter().rev().find(|&&(_, w)| w > 0.0).map(|&(id, _)| id).unwrap_or(1);
        for &(id, w) in &spec.note_mix {
            acc += w;
            if w > 0.0 && target < acc {
                category = id;
                break;
            }
        }
        let note_text = phrase_for(category, lexicon, &mut rng);
        let b_pos = rng.bernoulli(spec.prevalence);
        let c_pos = rng.bernoulli(spec.prevalence);
        let age = truncated_normal(&mut rng, 40.0, 17.6).round() as u32;
        let sex = if rng.bernoulli(0.5) { Sex::Male } else { Sex::Female };
        records.push(PathologyRecord {
            record_id: format!("rnd-{:06}", i + 1),
            age: Some(age),
            sex,
            note_text,
            hbsag_iu: Some(hbsag.draw(&mut rng, b_pos)),
            anti_hcv_iu: Some(anti_hcv.draw(&mut rng, c_pos)),
            collection_year: None,
        });
    }
    Ok(Cohort::new(records, format!("synthetic:random:seed={}", spec.seed))?)
}
