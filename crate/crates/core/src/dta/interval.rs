//! Confidence intervals for proportions and likelihood ratios.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use super::ContingencyTable;

/// z for a 95% two-sided interval, fixed to 6 decimals.
pub const Z_95: f64 = 1.959964;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("interval needs at least one trial")]
    ZeroTrials,
    #[error("successes {successes} exceed trials {trials}")]
    SuccessesExceedTrials { successes: u64, trials: u64 },
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
    #[error("log interval undefined: {0} cell is zero")]
    ZeroCell(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProportionMethod {
    /// Clopper-Pearson equal-tailed binomial interval.
    Exact,
    /// Wilson score interval.
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    ClopperPearson,
    Wilson,
    Logit,
    LogRatio,
    LogRatioHaldane,
}

impl CiMethod {
    pub fn label(self) -> &'static str {
        match self {
            CiMethod::ClopperPearson => "Clopper-Pearson",
            CiMethod::Wilson => "Wilson score",
            CiMethod::Logit => "logit",
            CiMethod::LogRatio => "log method",
            CiMethod::LogRatioHaldane => "log method, Haldane +0.5",
        }
    }
}

impl From<ProportionMethod> for CiMethod {
    fn from(m: ProportionMethod) -> Self {
        match m {
            ProportionMethod::Exact => CiMethod::ClopperPearson,
            ProportionMethod::Score => CiMethod::Wilson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodRatio {
    Positive,
    Negative,
}

fn check_level(level: f64) -> Result<(), IntervalError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(IntervalError::InvalidLevel(level))
    }
}

/// Two-sided standard-normal quantile for `level`; exactly [`Z_95`] at 0.95.
pub fn z_for_level(level: f64) -> Result<f64, IntervalError> {
    check_level(level)?;
    if level == 0.95 {
        return Ok(Z_95);
    }
    Ok(normal_quantile(1.0 - (1.0 - level) / 2.0))
}

/// Inverse standard-normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

fn check_counts(successes: u64, trials: u64) -> Result<(), IntervalError> {
    if trials == 0 {
        return Err(IntervalError::ZeroTrials);
    }
    if successes > trials {
        return Err(IntervalError::SuccessesExceedTrials { successes, trials });
    }
    Ok(())
}

/// Interval for `successes / trials` by the requested method.
pub fn ci_proportion(
    successes: u64,
    trials: u64,
    level: f64,
    method: ProportionMethod,
) -> Result<Interval, IntervalError> {
    match method {
        ProportionMethod::Exact => clopper_pearson(successes, trials, level),
        ProportionMethod::Score => wilson(successes, trials, level),
    }
}

/// Smallest p in [0, 1] with `f(p) >= target`, for `f` increasing in p.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Clopper-Pearson interval: the lower bound solves P(X >= k | p) = alpha/2,
/// the upper bound P(X <= k | p) = alpha/2, via the regularized incomplete beta
/// identity P(X >= k | p) = I_p(k, n - k + 1).
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> Result<Interval, IntervalError> {
    check_counts(successes, trials)?;
    check_level(level)?;
    let alpha = 1.0 - level;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        bisect_increasing(|p| beta_reg(k, n - k + 1.0, p), alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        bisect_increasing(|p| beta_reg(k + 1.0, n - k, p), 1.0 - alpha / 2.0)
    };
    Ok(Interval { low, high })
}

pub fn wilson(successes: u64, trials: u64, level: f64) -> Result<Interval, IntervalError> {
    check_counts(successes, trials)?;
    let z = z_for_level(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok(Interval { low, high })
}

/// Logit-transformed Wald interval. At 0 or all successes the logit is
/// infinite; those cases fall back to Clopper-Pearson, reported by the
/// returned method.
pub fn logit(successes: u64, trials: u64, level: f64) -> Result<(Interval, CiMethod), IntervalError> {
    check_counts(successes, trials)?;
    if successes == 0 || successes == trials {
        return Ok((clopper_pearson(successes, trials, level)?, CiMethod::ClopperPearson));
    }
    let z = z_for_level(level)?;
    let (x, n) = (successes as f64, trials as f64);
    let centre = (x / (n - x)).ln();
    let se = (1.0 / x + 1.0 / (n - x)).sqrt();
    let expit = |v: f64| 1.0 / (1.0 + (-v).exp());
    Ok((
        Interval {
            low: expit(centre - z * se),
            high: expit(centre + z * se),
        },
        CiMethod::Logit,
    ))
}

fn log_ratio_interval(
    ratio: f64,
    variance: f64,
    level: f64,
) -> Result<Interval, IntervalError> {
    let z = z_for_level(level)?;
    let spread = z * variance.sqrt();
    let centre = ratio.ln();
    Ok(Interval {
        low: (centre - spread).exp(),
        high: (centre + spread).exp(),
    })
}

/// Log-method interval for LR+ or LR-, from raw counts:
/// `exp(ln LR +/- z * sqrt(1/a - 1/(a+b) + 1/c - 1/(c+d)))`.
pub fn ci_likelihood_ratio(
    table: &ContingencyTable,
    which: LikelihoodRatio,
    level: f64,
) -> Result<Interval, IntervalError> {
    check_level(level)?;
    let (tp, fp, fn_, tn) = (table.tp, table.fp, table.fn_, table.tn);
    match which {
        LikelihoodRatio::Positive => {
            if tp == 0 {
                return Err(IntervalError::ZeroCell("TP"));
            }
            if fp == 0 {
                return Err(IntervalError::ZeroCell("FP"));
            }
        }
        LikelihoodRatio::Negative => {
            if fn_ == 0 {
                return Err(IntervalError::ZeroCell("FN"));
            }
            if tn == 0 {
                return Err(IntervalError::ZeroCell("TN"));
            }
        }
    }
    let cells = [tp as f64, fp as f64, fn_ as f64, tn as f64];
    lr_interval_from_cells(cells, which, level)
}

/// As [`ci_likelihood_ratio`], but when a cell the interval depends on is
/// zero, 0.5 is added to all four cells first. Returns the method used.
pub fn ci_likelihood_ratio_haldane(
    table: &ContingencyTable,
    which: LikelihoodRatio,
    level: f64,
) -> Result<(Interval, CiMethod), IntervalError> {
    match ci_likelihood_ratio(table, which, level) {
        Err(IntervalError::ZeroCell(_)) => {
            let cells = [
                table.tp as f64 + 0.5,
                table.fp as f64 + 0.5,
                table.fn_ as f64 + 0.5,
                table.tn as f64 + 0.5,
            ];
            Ok((lr_interval_from_cells(cells, which, level)?, CiMethod::LogRatioHaldane))
        }
        other => other.map(|i| (i, CiMethod::LogRatio)),
    }
}

fn lr_interval_from_cells(
    [tp, fp, fn_, tn]: [f64; 4],
    which: LikelihoodRatio,
    level: f64,
) -> Result<Interval, IntervalError> {
    let diseased = tp + fn_;
    let healthy = fp + tn;
    match which {
        LikelihoodRatio::Positive => {
            let ratio = (tp / diseased) / (fp / healthy);
            let var = 1.0 / tp - 1.0 / diseased + 1.0 / fp - 1.0 / healthy;
            log_ratio_interval(ratio, var, level)
        }
        LikelihoodRatio::Negative => {
            let ratio = (fn_ / diseased) / (tn / healthy);
            let var = 1.0 / fn_ - 1.0 / diseased + 1.0 / tn - 1.0 / healthy;
            log_ratio_interval(ratio, var, level)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Binomial pmf by direct products; independent of the beta-function route.
    fn pmf(i: u64, n: u64, p: f64) -> f64 {
        let mut c = 1.0f64;
        for j in 0..i {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        c * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
    }

    fn lower_tail(k: u64, n: u64, p: f64) -> f64 {
        (0..=k).map(|i| pmf(i, n, p)).sum()
    }

    /// Brute-force tail search for the exact interval.
    fn cp_oracle(k: u64, n: u64, alpha: f64) -> (f64, f64) {
        let solve_decreasing = |f: &dyn Fn(f64) -> f64, target: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let low = if k == 0 {
            0.0
        } else {
            // P(X >= k) = 1 - P(X <= k-1) is increasing; 1 - that is decreasing
            solve_decreasing(&|p| lower_tail(k - 1, n, p), 1.0 - alpha / 2.0)
        };
        let high = if k == n {
            1.0
        } else {
            solve_decreasing(&|p| lower_tail(k, n, p), alpha / 2.0)
        };
        (low, high)
    }

    #[test]
    fn exact_intervals_from_the_accuracy_table() {
        let sn = clopper_pearson(69, 77, 0.95).unwrap();
        assert!((sn.low - 0.806).abs() < 5e-4 && (sn.high - 0.954).abs() < 5e-4, "{sn:?}");
        let sp = clopper_pearson(57, 102, 0.95).unwrap();
        assert!((sp.low - 0.457).abs() < 5e-4 && (sp.high - 0.657).abs() < 5e-4, "{sp:?}");
    }

    #[test]
    fn exact_zero_successes_closed_form() {
        let i = clopper_pearson(0, 10, 0.95).unwrap();
        assert_eq!(i.low, 0.0);
        let closed = 1.0 - 0.025f64.powf(0.1);
        assert!((i.high - closed).abs() < 1e-12);
        // 0.3085 to four places; the three-place figure 0.309 is within 1e-3
        assert!((i.high - 0.309).abs() < 1e-3);
        let (_, oracle_high) = cp_oracle(0, 10, 0.05);
        assert!((i.high - oracle_high).abs() < 1e-10);
    }

    #[test]
    fn exact_agrees_with_brute_force_tail_search() {
        for n in 1..=40u64 {
            for k in 0..=n {
                let i = clopper_pearson(k, n, 0.95).unwrap();
                let (lo, hi) = cp_oracle(k, n, 0.05);
                assert!((i.low - lo).abs() < 1e-9, "k={k} n={n}: {} vs {lo}", i.low);
                assert!((i.high - hi).abs() < 1e-9, "k={k} n={n}: {} vs {hi}", i.high);
            }
        }
        let i = clopper_pearson(69, 77, 0.95).unwrap();
        let (lo, hi) = cp_oracle(69, 77, 0.05);
        assert!((i.low - lo).abs() < 1e-9 && (i.high - hi).abs() < 1e-9);
    }

    #[test]
    fn exact_degenerate_bounds() {
        let all = clopper_pearson(7, 7, 0.95).unwrap();
        assert_eq!(all.high, 1.0);
        assert!(all.low > 0.0);
    }

    /// Wilson bounds as the roots of (p_hat - p)^2 = z^2 p (1 - p) / n, found by bisection.
    fn wilson_oracle(k: u64, n: u64, z: f64) -> (f64, f64) {
        let p_hat = k as f64 / n as f64;
        let g = |p: f64| (p_hat - p).powi(2) - z * z * p * (1.0 - p) / n as f64;
        let root = |mut lo: f64, mut hi: f64| {
            // g changes sign between lo and hi
            let sign_lo = g(lo) > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        (root(0.0, p_hat), root(p_hat, 1.0))
    }

    #[test]
    fn score_interval() {
        let i = wilson(69, 77, 0.95).unwrap();
        // frozen from an independent high-precision evaluation
        assert!((i.low - 0.808156248232512).abs() < 1e-12);
        assert!((i.high - 0.9464070766274424).abs() < 1e-12);
        let (lo, hi) = wilson_oracle(69, 77, Z_95);
        assert!((i.low - lo).abs() < 1e-10 && (i.high - hi).abs() < 1e-10);
        for (k, n) in [(1, 3), (5, 9), (10, 48), (101, 118)] {
            let i = wilson(k, n, 0.95).unwrap();
            let (lo, hi) = wilson_oracle(k, n, Z_95);
            assert!((i.low - lo).abs() < 1e-10 && (i.high - hi).abs() < 1e-10, "{k}/{n}");
        }
    }

    #[test]
    fn proportion_errors() {
        assert_eq!(ci_proportion(0, 0, 0.95, ProportionMethod::Exact), Err(IntervalError::ZeroTrials));
        assert!(matches!(
            ci_proportion(5, 4, 0.95, ProportionMethod::Score),
            Err(IntervalError::SuccessesExceedTrials { .. })
        ));
        assert_eq!(
            ci_proportion(1, 4, 1.0, ProportionMethod::Exact),
            Err(IntervalError::InvalidLevel(1.0))
        );
    }

    #[test]
    fn quantile_accuracy() {
        assert_eq!(z_for_level(0.95).unwrap(), Z_95);
        // reference quantiles
        for (p, q) in [
            (0.975, 1.959963984540054),
            (0.95, 1.6448536269514722),
            (0.995, 2.5758293035489004),
            (0.5, 0.0),
            (0.01, -2.3263478740408408),
            (0.9999, 3.7190164854556804),
        ] {
            assert!((normal_quantile(p) - q).abs() < 1e-8, "p={p}");
        }
        let z90 = z_for_level(0.90).unwrap();
        assert!((z90 - 1.6448536269514722).abs() < 1e-8);
    }

    #[test]
    fn likelihood_ratio_intervals_from_the_accuracy_table() {
        let hbv = ContingencyTable::new(69, 45, 8, 57);
        let pos = ci_likelihood_ratio(&hbv, LikelihoodRatio::Positive, 0.95).unwrap();
        assert!((pos.low - 1.61).abs() < 0.005 && (pos.high - 2.56).abs() < 0.005, "{pos:?}");
        let neg = ci_likelihood_ratio(&hbv, LikelihoodRatio::Negative, 0.95).unwrap();
        assert!((neg.low - 0.09).abs() < 0.005 && (neg.high - 0.37).abs() < 0.005, "{neg:?}");
        let hcv = ContingencyTable::new(101, 38, 17, 10);
        let neg = ci_likelihood_ratio(&hcv, LikelihoodRatio::Negative, 0.95).unwrap();
        assert!((neg.low - 0.34).abs() < 0.005 && (neg.high - 1.40).abs() < 0.005, "{neg:?}");
    }

    #[test]
    fn likelihood_ratio_zero_cells() {
        let t = ContingencyTable::new(5, 0, 2, 5);
        assert_eq!(
            ci_likelihood_ratio(&t, LikelihoodRatio::Positive, 0.95),
            Err(IntervalError::ZeroCell("FP"))
        );
        let (i, method) = ci_likelihood_ratio_haldane(&t, LikelihoodRatio::Positive, 0.95).unwrap();
        assert_eq!(method, CiMethod::LogRatioHaldane);
        // (5.5/7.5) / (0.5/6) = 8.8
        assert!(i.contains(8.8));
        let t = ContingencyTable::new(5, 2, 2, 5);
        let (_, method) = ci_likelihood_ratio_haldane(&t, LikelihoodRatio::Positive, 0.95).unwrap();
        assert_eq!(method, CiMethod::LogRatio);
    }

    #[test]
    fn logit_interval_and_fallback() {
        let (i, m) = logit(69, 114, 0.95).unwrap();
        assert_eq!(m, CiMethod::Logit);
        assert!(i.contains(69.0 / 114.0));
        let (i, m) = logit(0, 9, 0.95).unwrap();
        assert_eq!(m, CiMethod::ClopperPearson);
        assert_eq!(i.low, 0.0);
    }
}
