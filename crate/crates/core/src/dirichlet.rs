//! Evidence records and the Dirichlet quantities derived from them.
//!
//! A record holds non-negative evidence `e` over `K` named classes. The
//! Dirichlet state has `alpha_i = e_i + 1` and strength `S = sum(alpha)`.
//! Vacuity is `K / S`, the expected class probabilities are `alpha_i / S`.
//!
//! Appending a class with concentration `S / K` (evidence `S / K - 1`) is the
//! only way to grow `K` without moving vacuity; appending zero evidence raises
//! vacuity by `(S - K) / (S (S + 1))`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Which side of a detection comparison a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Id,
    Ood,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Id => "id",
            Group::Ood => "ood",
        }
    }
}

/// One prediction: per-class evidence plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceRecord {
    id: String,
    group: Group,
    class_names: Vec<String>,
    evidence: Vec<f64>,
    gold_label: Option<usize>,
}

fn validate_evidence(evidence: &[f64]) -> Result<()> {
    if evidence.len() < 2 {
        return Err(Error::TooFewClasses {
            found: evidence.len(),
        });
    }
    for (index, &value) in evidence.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: "evidence",
                index,
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeEvidence { index, value });
        }
    }
    Ok(())
}

impl EvidenceRecord {
    pub fn new(
        id: impl Into<String>,
        group: Group,
        class_names: Vec<String>,
        evidence: Vec<f64>,
        gold_label: Option<usize>,
    ) -> Result<Self> {
        validate_evidence(&evidence)?;
        if class_names.len() != evidence.len() {
            return Err(Error::LengthMismatch {
                what: "class names vs evidence",
                expected: evidence.len(),
                found: class_names.len(),
            });
        }
        if let Some(label) = gold_label {
            if label >= evidence.len() {
                return Err(Error::IndexOutOfRange {
                    what: "gold label",
                    index: label,
                    len: evidence.len(),
                });
            }
        }
        Ok(EvidenceRecord {
            id: id.into(),
            group,
            class_names,
            evidence,
            gold_label,
        })
    }

    /// Builds a record with class names `A`, `B`, `C`, ... (then `C27`, ...).
    pub fn with_letter_classes(
        id: impl Into<String>,
        group: Group,
        evidence: Vec<f64>,
        gold_label: Option<usize>,
    ) -> Result<Self> {
        let names = letter_names(evidence.len());
        Self::new(id, group, names, evidence, gold_label)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn evidence(&self) -> &[f64] {
        &self.evidence
    }

    pub fn gold_label(&self) -> Option<usize> {
        self.gold_label
    }

    /// Number of evaluated classes.
    pub fn k(&self) -> usize {
        self.evidence.len()
    }

    pub fn to_dirichlet(&self) -> DirichletState {
        evidence_to_alpha(self)
    }

    pub fn scores(&self) -> UncertaintyScores {
        UncertaintyScores::from_state(&self.to_dirichlet())
    }
}

/// Class names for `k` classes: `A`..`Z`, then `C27`, `C28`, ...
pub fn letter_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            if i < 26 {
                String::from(char::from(b'A' + i as u8))
            } else {
                format!("C{}", i + 1)
            }
        })
        .collect()
}

/// Dirichlet concentrations with cached strength.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletState {
    alpha: Vec<f64>,
    strength: f64,
}

impl DirichletState {
    /// `alpha_i = e_i + 1`; rejects negative or non-finite evidence.
    pub fn from_evidence(evidence: &[f64]) -> Result<Self> {
        validate_evidence(evidence)?;
        Ok(Self::from_valid_alpha(
            evidence.iter().map(|e| e + 1.0).collect(),
        ))
    }

    /// Accepts concentrations directly; each must be finite and at least 1.
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::TooFewClasses { found: alpha.len() });
        }
        for (index, &value) in alpha.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "concentration",
                    index,
                });
            }
            if value < 1.0 {
                return Err(Error::ConcentrationBelowOne { index, value });
            }
        }
        Ok(Self::from_valid_alpha(alpha))
    }

    pub(crate) fn from_valid_alpha(alpha: Vec<f64>) -> Self {
        let strength = alpha.iter().sum();
        DirichletState { alpha, strength }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `S = sum(alpha)`, also written `alpha_0`.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn evidence(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a - 1.0).collect()
    }

    pub fn expected_probabilities(&self) -> Vec<f64> {
        expected_probabilities(self)
    }

    pub fn vacuity(&self) -> f64 {
        vacuity(self)
    }

    pub fn max_probability(&self) -> f64 {
        max_probability(self)
    }

    /// Index of the largest concentration; first index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.alpha)
    }

    /// A copy with one extra class of concentration `alpha_new`.
    pub fn with_appended(&self, alpha_new: f64) -> Result<Self> {
        let mut alpha = self.alpha.clone();
        alpha.push(alpha_new);
        Self::from_alpha(alpha)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn evidence_to_alpha(record: &EvidenceRecord) -> DirichletState {
    DirichletState::from_valid_alpha(record.evidence.iter().map(|e| e + 1.0).collect())
}

pub fn expected_probabilities(state: &DirichletState) -> Vec<f64> {
    state.alpha.iter().map(|a| a / state.strength).collect()
}

/// Vacuity (uncertainty mass) `K / S`.
pub fn vacuity(state: &DirichletState) -> f64 {
    state.k() as f64 / state.strength
}

/// `max_i alpha_i / S`.
pub fn max_probability(state: &DirichletState) -> f64 {
    state.alpha[state.argmax()] / state.strength
}

/// Shannon entropy in bits divided by `log2 K`.
pub fn normalized_entropy(probs: &[f64]) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::TooFewClasses { found: probs.len() });
    }
    let mut sum = 0.0;
    for (index, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite {
                what: "probability",
                index,
            });
        }
        if p < 0.0 {
            return Err(Error::NotNormalized { sum: f64::NAN });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(normalized_entropy_unchecked(probs))
}

pub(crate) fn normalized_entropy_unchecked(probs: &[f64]) -> f64 {
    let bits: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log2(p))
        .sum();
    let h = bits / libm::log2(probs.len() as f64);
    h.clamp(0.0, 1.0)
}

/// The concentration (and evidence) a new class needs to leave vacuity
/// unchanged: `alpha_new = S / K`, `e_new = S / K - 1`.
pub fn invariance_concentration(state: &DirichletState) -> (f64, f64) {
    let alpha_new = state.strength / state.k() as f64;
    (alpha_new, alpha_new - 1.0)
}

/// Uncertainty quantities for one Dirichlet state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyScores {
    pub vacuity: f64,
    pub max_probability: f64,
    pub normalized_entropy: f64,
}

impl UncertaintyScores {
    pub fn from_state(state: &DirichletState) -> Self {
        UncertaintyScores {
            vacuity: vacuity(state),
            max_probability: max_probability(state),
            normalized_entropy: normalized_entropy_unchecked(&expected_probabilities(state)),
        }
    }
}

fn next_synthetic_index(names: &[String]) -> usize {
    names
        .iter()
        .filter_map(|n| n.strip_prefix('X').and_then(|d| d.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
        + 1
}

/// Appends `count` synthetic classes (`X1`, `X2`, ...) carrying
/// `appended_evidence` each. Existing evidence is never touched.
pub fn append_classes(
    record: &EvidenceRecord,
    count: usize,
    appended_evidence: f64,
) -> Result<EvidenceRecord> {
    if !appended_evidence.is_finite() {
        return Err(Error::NonFinite {
            what: "appended evidence",
            index: record.k(),
        });
    }
    if appended_evidence < 0.0 {
        return Err(Error::NegativeEvidence {
            index: record.k(),
            value: appended_evidence,
        });
    }
    let mut out = record.clone();
    let first = next_synthetic_index(&out.class_names);
    for i in 0..count {
        out.class_names.push(format!("X{}", first + i));
        out.evidence.push(appended_evidence);
    }
    Ok(out)
}

/// Appends `count` classes, each receiving the evidence that keeps this
/// record's vacuity fixed (`S / K - 1`, recomputed after every append).
pub fn append_invariant_classes(record: &EvidenceRecord, count: usize) -> EvidenceRecord {
    let mut out = record.clone();
    let first = next_synthetic_index(&out.class_names);
    for i in 0..count {
        let (_, e_new) = invariance_concentration(&out.to_dirichlet());
        out.class_names.push(format!("X{}", first + i));
        out.evidence.push(e_new.max(0.0));
    }
    out
}

/// Drops class `class_index`. Records whose gold label is that class are
/// excluded (`Ok(None)`); remaining labels are re-indexed.
pub fn remove_class(record: &EvidenceRecord, class_index: usize) -> Result<Option<EvidenceRecord>> {
    let k = record.k();
    if class_index >= k {
        return Err(Error::IndexOutOfRange {
            what: "class",
            index: class_index,
            len: k,
        });
    }
    if k <= 2 {
        return Err(Error::TooFewClasses { found: k - 1 });
    }
    let gold_label = match record.gold_label {
        Some(g) if g == class_index => return Ok(None),
        Some(g) if g > class_index => Some(g - 1),
        other => other,
    };
    let mut out = record.clone();
    out.evidence.remove(class_index);
    out.class_names.remove(class_index);
    out.gold_label = gold_label;
    Ok(Some(out))
}
