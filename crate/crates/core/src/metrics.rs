//! Detection and calibration metrics.
//!
//! AUROC is computed from midrank sums; ties between a positive and a
//! negative earn half credit. AUPR is step-wise average precision over
//! descending score thresholds, with tied scores collapsed into one
//! threshold and no interpolation between operating points.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::dirichlet::argmax;
use crate::error::{Error, Result};

/// One scored example. `positive` is the class treated as label 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub positive: bool,
}

impl ScoredSample {
    pub fn new(score: f64, positive: bool) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFinite {
                what: "score",
                index: 0,
            });
        }
        Ok(ScoredSample { score, positive })
    }
}

/// Uniform or mixed class count of a group of records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    Uniform(usize),
    Mixed,
}

impl Cardinality {
    pub fn of(ks: impl IntoIterator<Item = usize>) -> Option<Self> {
        let mut it = ks.into_iter();
        let first = it.next()?;
        Some(if it.all(|k| k == first) {
            Cardinality::Uniform(first)
        } else {
            Cardinality::Mixed
        })
    }

    pub fn uniform(self) -> Option<usize> {
        match self {
            Cardinality::Uniform(k) => Some(k),
            Cardinality::Mixed => None,
        }
    }
}

impl core::fmt::Display for Cardinality {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Cardinality::Uniform(k) => write!(f, "{k}"),
            Cardinality::Mixed => f.write_str("MIXED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub auroc: f64,
    pub aupr: f64,
    pub aupr_baseline: f64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub metric_name: String,
    pub k_id: Cardinality,
    pub k_ood: Cardinality,
}

impl DetectionResult {
    pub fn evaluate(
        samples: &[ScoredSample],
        metric_name: impl Into<String>,
        k_id: Cardinality,
        k_ood: Cardinality,
    ) -> Result<Self> {
        let (n_positive, n_negative) = class_counts(samples);
        Ok(DetectionResult {
            auroc: auroc(samples)?,
            aupr: aupr(samples)?,
            aupr_baseline: aupr_baseline(n_positive, n_negative)?,
            n_positive,
            n_negative,
            metric_name: metric_name.into(),
            k_id,
            k_ood,
        })
    }
}

fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.positive).count();
    (pos, samples.len() - pos)
}

fn check_finite(samples: &[ScoredSample]) -> Result<()> {
    match samples.iter().position(|s| !s.score.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what: "score",
            index,
        }),
        None => Ok(()),
    }
}

fn sorted_scores(samples: &[ScoredSample], descending: bool) -> Vec<ScoredSample> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| {
        let o = a.score.total_cmp(&b.score);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    v
}

/// Calls `f(start, end)` for every run of equal scores in a sorted slice.
fn for_each_tie_group(sorted: &[ScoredSample], mut f: impl FnMut(usize, usize)) {
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].score == sorted[start].score {
            end += 1;
        }
        f(start, end);
        start = end;
    }
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half. `O(n log n)` via midrank sums.
pub fn auroc(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let (n_pos, n_neg) = class_counts(samples);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let sorted = sorted_scores(samples, false);
    // Twice the positive rank sum keeps midranks integral.
    let mut twice_rank_sum: u128 = 0;
    for_each_tie_group(&sorted, |start, end| {
        let pos_in_group = sorted[start..end].iter().filter(|s| s.positive).count() as u128;
        // ranks start+1 ..= end, midrank = (start + 1 + end) / 2
        twice_rank_sum += pos_in_group * (start as u128 + 1 + end as u128);
    });
    let np = n_pos as u128;
    // 2 * U = 2 * R_pos - n_pos (n_pos + 1)
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Step-wise average precision: `sum_k (R_k - R_{k-1}) P_k` over descending
/// thresholds, one threshold per distinct score.
pub fn aupr(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let (n_pos, n_neg) = class_counts(samples);
    if n_pos == 0 {
        return Err(Error::SingleClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let sorted = sorted_scores(samples, true);
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for_each_tie_group(&sorted, |start, end| {
        let pos = sorted[start..end].iter().filter(|s| s.positive).count();
        tp += pos;
        fp += end - start - pos;
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    });
    Ok(ap)
}

/// Precision of a random ranking: the positive prevalence.
pub fn aupr_baseline(n_positive: usize, n_negative: usize) -> Result<f64> {
    if n_positive + n_negative == 0 {
        return Err(Error::Empty { what: "sample set" });
    }
    if n_positive == 0 || n_negative == 0 {
        return Err(Error::SingleClass {
            positives: n_positive,
            negatives: n_negative,
        });
    }
    Ok(n_positive as f64 / (n_positive + n_negative) as f64)
}

/// `O(n^2)` pairwise AUROC with half credit for ties.
pub fn auroc_bruteforce(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let (n_pos, n_neg) = class_counts(samples);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let mut twice_wins: u128 = 0;
    for p in samples.iter().filter(|s| s.positive) {
        for n in samples.iter().filter(|s| !s.positive) {
            twice_wins += match p.score.partial_cmp(&n.score) {
                Some(Ordering::Greater) => 2,
                Some(Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// AUPR by explicit sweep: for every distinct threshold (descending) count
/// predictions with `score >= threshold` from scratch.
pub fn aupr_reference(samples: &[ScoredSample]) -> Result<f64> {
    check_finite(samples)?;
    let (n_pos, n_neg) = class_counts(samples);
    if n_pos == 0 {
        return Err(Error::SingleClass {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let mut thresholds: Vec<f64> = samples.iter().map(|s| s.score).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup_by(|a, b| a == b);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = samples
            .iter()
            .filter(|s| s.positive && s.score >= t)
            .count();
        let predicted = samples.iter().filter(|s| s.score >= t).count();
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / predicted as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Index of the right-closed bin `(b/B, (b+1)/B]` containing `c`; 0 goes to
/// the first bin. Boundaries are compared as computed doubles `j / B`.
fn bin_index(c: f64, bins: usize) -> usize {
    let b = bins as f64;
    let mut idx = ((c * b) as usize).min(bins - 1);
    while idx > 0 && c <= idx as f64 / b {
        idx -= 1;
    }
    while idx + 1 < bins && c > (idx + 1) as f64 / b {
        idx += 1;
    }
    idx
}

/// Expected calibration error over `bins` equal-width bins.
pub fn ece(confidences: &[f64], correct: &[bool], bins: usize) -> Result<f64> {
    if confidences.len() != correct.len() {
        return Err(Error::LengthMismatch {
            what: "confidences vs correctness",
            expected: confidences.len(),
            found: correct.len(),
        });
    }
    if confidences.is_empty() {
        return Err(Error::Empty {
            what: "confidences",
        });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter {
            name: "bins",
            detail: "must be at least 1".into(),
        });
    }
    for (index, &c) in confidences.iter().enumerate() {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidParameter {
                name: "confidence",
                detail: alloc::format!("{c} at index {index} is outside [0, 1]"),
            });
        }
    }
    let mut count = vec_of(bins, 0usize);
    let mut conf_sum = vec_of(bins, 0.0f64);
    let mut hits = vec_of(bins, 0usize);
    for (&c, &ok) in confidences.iter().zip(correct) {
        let b = bin_index(c, bins);
        count[b] += 1;
        conf_sum[b] += c;
        hits[b] += ok as usize;
    }
    let n = confidences.len() as f64;
    let mut total = 0.0;
    for b in 0..bins {
        if count[b] == 0 {
            continue;
        }
        let nb = count[b] as f64;
        total += nb / n * (hits[b] as f64 / nb - conf_sum[b] / nb).abs();
    }
    Ok(total)
}

/// The fifteen-bin ECE used for evidential classifiers.
pub fn ece15(confidences: &[f64], correct: &[bool]) -> Result<f64> {
    ece(confidences, correct, 15)
}

fn vec_of<T: Clone>(n: usize, v: T) -> Vec<T> {
    alloc::vec![v; n]
}

const NLL_FLOOR: f64 = 1e-12;

fn check_labels(probabilities: &[Vec<f64>], gold_labels: &[usize]) -> Result<()> {
    if probabilities.len() != gold_labels.len() {
        return Err(Error::LengthMismatch {
            what: "probabilities vs labels",
            expected: probabilities.len(),
            found: gold_labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(Error::Empty {
            what: "probabilities",
        });
    }
    for (p, &g) in probabilities.iter().zip(gold_labels) {
        if g >= p.len() {
            return Err(Error::IndexOutOfRange {
                what: "gold label",
                index: g,
                len: p.len(),
            });
        }
    }
    Ok(())
}

/// Mean `-ln p[gold]`, with `p` floored at `1e-12`.
pub fn nll(probabilities: &[Vec<f64>], gold_labels: &[usize]) -> Result<f64> {
    check_labels(probabilities, gold_labels)?;
    let sum: f64 = probabilities
        .iter()
        .zip(gold_labels)
        .map(|(p, &g)| -libm::log(p[g].max(NLL_FLOOR)))
        .sum();
    Ok(sum / probabilities.len() as f64)
}

/// Fraction of samples whose argmax (first on ties) is the gold label.
pub fn accuracy(probabilities: &[Vec<f64>], gold_labels: &[usize]) -> Result<f64> {
    check_labels(probabilities, gold_labels)?;
    let hits = probabilities
        .iter()
        .zip(gold_labels)
        .filter(|(p, &g)| argmax(p) == g)
        .count();
    Ok(hits as f64 / probabilities.len() as f64)
}
