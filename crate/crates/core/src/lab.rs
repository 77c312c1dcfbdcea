//! Class-cardinality experiments over fixed prediction records.
//!
//! Nothing here recomputes model outputs. Expansion appends synthetic
//! classes to copies of the records, restriction drops a class from copies,
//! and every comparison states the class counts it was computed over.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dirichlet::{
    append_classes, append_invariant_classes, remove_class, EvidenceRecord, Group,
};
use crate::error::{Error, Result};
use crate::metrics::{Cardinality, DetectionResult, ScoredSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreMetric {
    /// Vacuity `K / S`.
    Vacuity,
    /// Max expected probability `max alpha / S`.
    MaxProbability,
    /// Entropy of the expected probabilities over `log2 K`.
    NormalizedEntropy,
}

impl ScoreMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMetric::Vacuity => "vacuity",
            ScoreMetric::MaxProbability => "mp",
            ScoreMetric::NormalizedEntropy => "entropy",
        }
    }
}

/// Which group is the positive class of the detection problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// ID = 1, scores grow with confidence (`S/K`, MP, `1 - H/log2 K`).
    IdPositive,
    /// OOD = 1, scores grow with uncertainty (`K/S`, `1 - MP`, `H/log2 K`).
    OodPositive,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::IdPositive => "id-pos",
            Orientation::OodPositive => "ood-pos",
        }
    }

    fn positive_group(self) -> Group {
        match self {
            Orientation::IdPositive => Group::Id,
            Orientation::OodPositive => Group::Ood,
        }
    }
}

/// Score of one record. The ID-positive vacuity score is the reciprocal
/// `1/u`, evaluated as `S / K` in a single division.
pub fn score_record(record: &EvidenceRecord, metric: ScoreMetric, orientation: Orientation) -> f64 {
    let state = record.to_dirichlet();
    let k = state.k() as f64;
    match (metric, orientation) {
        (ScoreMetric::Vacuity, Orientation::IdPositive) => state.strength() / k,
        (ScoreMetric::Vacuity, Orientation::OodPositive) => k / state.strength(),
        (ScoreMetric::MaxProbability, Orientation::IdPositive) => state.max_probability(),
        (ScoreMetric::MaxProbability, Orientation::OodPositive) => 1.0 - state.max_probability(),
        (ScoreMetric::NormalizedEntropy, o) => {
            let h = record.scores().normalized_entropy;
            match o {
                Orientation::IdPositive => 1.0 - h,
                Orientation::OodPositive => h,
            }
        }
    }
}

/// Scores every record; label 1 for the orientation's positive group.
pub fn score_group(
    records: &[EvidenceRecord],
    metric: ScoreMetric,
    orientation: Orientation,
) -> Vec<ScoredSample> {
    let positive = orientation.positive_group();
    records
        .iter()
        .map(|r| ScoredSample {
            score: score_record(r, metric, orientation),
            positive: r.group() == positive,
        })
        .collect()
}

fn metric_label(metric: ScoreMetric, orientation: Orientation) -> String {
    format!("{}:{}", metric.as_str(), orientation.as_str())
}

fn group_cardinality(records: &[EvidenceRecord]) -> Cardinality {
    Cardinality::of(records.iter().map(EvidenceRecord::k)).unwrap_or(Cardinality::Mixed)
}

/// Detection metrics for `id` vs `ood` under one scoring rule, without any
/// cardinality check.
pub fn detect(
    id: &[EvidenceRecord],
    ood: &[EvidenceRecord],
    metric: ScoreMetric,
    orientation: Orientation,
) -> Result<DetectionResult> {
    let mut samples = score_group(id, metric, orientation);
    samples.extend(score_group(ood, metric, orientation));
    DetectionResult::evaluate(
        &samples,
        metric_label(metric, orientation),
        group_cardinality(id),
        group_cardinality(ood),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offender {
    pub id: String,
    pub group: Group,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub k_id: Cardinality,
    pub k_ood: Cardinality,
    pub verdict: Verdict,
    /// The class count most ID records use; offenders are measured against it.
    pub reference_k: usize,
    pub offenders: Vec<Offender>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// PASS iff every record in both groups has the same `K`. On FAIL every
/// record whose `K` differs from the most common ID `K` (smallest on ties)
/// is listed.
pub fn audit_cardinality(id: &[EvidenceRecord], ood: &[EvidenceRecord]) -> Result<AuditReport> {
    if id.is_empty() {
        return Err(Error::Empty { what: "ID records" });
    }
    if ood.is_empty() {
        return Err(Error::Empty {
            what: "OOD records",
        });
    }
    let k_id = group_cardinality(id);
    let k_ood = group_cardinality(ood);
    let pass =
        matches!((k_id, k_ood), (Cardinality::Uniform(a), Cardinality::Uniform(b)) if a == b);

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in id {
        *counts.entry(r.k()).or_default() += 1;
    }
    let mut reference_k = 0;
    let mut best = 0;
    for (&k, &n) in &counts {
        if n > best {
            best = n;
            reference_k = k;
        }
    }

    let offenders = if pass {
        Vec::new()
    } else {
        id.iter()
            .chain(ood)
            .filter(|r| r.k() != reference_k)
            .map(|r| Offender {
                id: r.id().to_string(),
                group: r.group(),
                k: r.k(),
            })
            .collect()
    };
    Ok(AuditReport {
        k_id,
        k_ood,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        reference_k,
        offenders,
    })
}

/// Machine-readable notice that a comparison was scored over mismatched
/// class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchWarning {
    pub experiment: String,
    pub condition: String,
    pub k_id: Cardinality,
    pub k_ood: Cardinality,
    pub message: String,
}

impl MismatchWarning {
    fn new(experiment: &str, condition: &str, k_id: Cardinality, k_ood: Cardinality) -> Self {
        MismatchWarning {
            experiment: experiment.to_string(),
            condition: condition.to_string(),
            k_id,
            k_ood,
            message: format!(
                "ID and OOD scored with different class counts (K_ID={k_id}, K_OOD={k_ood}); \
                 AUROC/AUPR reflect the class count, not the model"
            ),
        }
    }
}

/// Scores `id` vs `ood`. Mismatched class counts are an error unless
/// `allow_mismatch`, in which case a warning accompanies the result.
pub fn run_detection(
    id: &[EvidenceRecord],
    ood: &[EvidenceRecord],
    metric: ScoreMetric,
    orientation: Orientation,
    allow_mismatch: bool,
) -> Result<(DetectionResult, Option<MismatchWarning>)> {
    let audit = audit_cardinality(id, ood)?;
    let warning = if audit.passed() {
        None
    } else if allow_mismatch {
        Some(MismatchWarning::new(
            "metrics",
            "as-is",
            audit.k_id,
            audit.k_ood,
        ))
    } else {
        return Err(mismatch_error(&audit));
    };
    Ok((detect(id, ood, metric, orientation)?, warning))
}

fn mismatch_error(audit: &AuditReport) -> Error {
    Error::CardinalityMismatch {
        detail: format!(
            "K_ID={}, K_OOD={}, {} offending records",
            audit.k_id,
            audit.k_ood,
            audit.offenders.len()
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionMode {
    /// Append classes to OOD records only.
    OodOnly,
    /// Append classes to both groups.
    Matched,
}

impl ExpansionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpansionMode::OodOnly => "ood-only",
            ExpansionMode::Matched => "matched",
        }
    }
}

/// Evidence carried by each appended class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppendedEvidence {
    Constant(f64),
    /// Per record `S/K - 1`, which leaves that record's vacuity unchanged.
    Invariant,
}

impl Default for AppendedEvidence {
    fn default() -> Self {
        AppendedEvidence::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSpec {
    pub mode: ExpansionMode,
    pub k_targets: Vec<usize>,
    pub appended: AppendedEvidence,
}

impl ExpansionSpec {
    /// Targets `base_k + 1 ..= k_max`.
    pub fn up_to(
        mode: ExpansionMode,
        base_k: usize,
        k_max: usize,
        appended: AppendedEvidence,
    ) -> Self {
        ExpansionSpec {
            mode,
            k_targets: (base_k + 1..=k_max).collect(),
            appended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Baseline,
    OodOnly,
    Matched,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Baseline => "Baseline",
            Condition::OodOnly => "OOD-only expansion",
            Condition::Matched => "Matched expansion",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRow {
    pub condition: Condition,
    pub k_id: usize,
    pub k_ood: usize,
    pub result: DetectionResult,
    pub delta_auroc: f64,
    pub delta_aupr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTable {
    pub metric: ScoreMetric,
    pub orientation: Orientation,
    pub mode: ExpansionMode,
    pub appended: AppendedEvidence,
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionTable {
    pub fn baseline(&self) -> &ExpansionRow {
        &self.rows[0]
    }
}

fn expand(
    records: &[EvidenceRecord],
    extra: usize,
    appended: AppendedEvidence,
) -> Result<Vec<EvidenceRecord>> {
    records
        .iter()
        .map(|r| match appended {
            AppendedEvidence::Constant(v) => append_classes(r, extra, v),
            AppendedEvidence::Invariant => Ok(append_invariant_classes(r, extra)),
        })
        .collect()
}

/// Baseline row plus one row per target `K`. Inputs are only read.
pub fn run_expansion_experiment(
    id: &[EvidenceRecord],
    ood: &[EvidenceRecord],
    spec: &ExpansionSpec,
    metric: ScoreMetric,
    orientation: Orientation,
) -> Result<ExpansionTable> {
    let audit = audit_cardinality(id, ood)?;
    if !audit.passed() {
        return Err(mismatch_error(&audit));
    }
    let base_k = audit.reference_k;
    if let AppendedEvidence::Constant(v) = spec.appended {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "appended evidence",
                detail: format!("{v} must be finite and >= 0"),
            });
        }
    }
    if let Some(&bad) = spec.k_targets.iter().find(|&&t| t <= base_k) {
        return Err(Error::InvalidParameter {
            name: "k target",
            detail: format!("{bad} must exceed the baseline K = {base_k}"),
        });
    }

    let baseline = detect(id, ood, metric, orientation)?;
    let mut rows = Vec::with_capacity(spec.k_targets.len() + 1);
    rows.push(ExpansionRow {
        condition: Condition::Baseline,
        k_id: base_k,
        k_ood: base_k,
        delta_auroc: 0.0,
        delta_aupr: 0.0,
        result: baseline.clone(),
    });
    for &target in &spec.k_targets {
        let extra = target - base_k;
        let ood_x = expand(ood, extra, spec.appended)?;
        let (condition, k_id, result) = match spec.mode {
            ExpansionMode::OodOnly => (
                Condition::OodOnly,
                base_k,
                detect(id, &ood_x, metric, orientation)?,
            ),
            ExpansionMode::Matched => {
                let id_x = expand(id, extra, spec.appended)?;
                (
                    Condition::Matched,
                    target,
                    detect(&id_x, &ood_x, metric, orientation)?,
                )
            }
        };
        rows.push(ExpansionRow {
            condition,
            k_id,
            k_ood: target,
            delta_auroc: result.auroc - baseline.auroc,
            delta_aupr: result.aupr - baseline.aupr,
            result,
        });
    }
    Ok(ExpansionTable {
        metric,
        orientation,
        mode: spec.mode,
        appended: spec.appended,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionOutcome {
    pub removed_class: usize,
    /// Restricted records scored at their original `K`.
    pub as_is: DetectionResult,
    /// Records after dropping the class, excluding those labelled with it.
    pub removed: DetectionResult,
    pub excluded_ids: Vec<String>,
    pub warnings: Vec<MismatchWarning>,
}

/// Scores `restricted` (e.g. five-option OOD records) against `id` twice:
/// as-is, and with class `removed_class` dropped. Records whose gold label is
/// the dropped class leave the second run.
pub fn run_restriction_experiment(
    restricted: &[EvidenceRecord],
    removed_class: usize,
    id: &[EvidenceRecord],
    metric: ScoreMetric,
    orientation: Orientation,
) -> Result<RestrictionOutcome> {
    if restricted.is_empty() {
        return Err(Error::Empty {
            what: "restricted records",
        });
    }
    let k = match group_cardinality(restricted) {
        Cardinality::Uniform(k) => k,
        Cardinality::Mixed => {
            return Err(Error::CardinalityMismatch {
                detail: "restricted records do not share one K".into(),
            })
        }
    };
    if removed_class >= k {
        return Err(Error::IndexOutOfRange {
            what: "removed class",
            index: removed_class,
            len: k,
        });
    }

    let mut warnings = Vec::new();
    let as_is = detect(id, restricted, metric, orientation)?;
    let audit = audit_cardinality(id, restricted)?;
    if !audit.passed() {
        warnings.push(MismatchWarning::new(
            "restrict",
            "as-is",
            audit.k_id,
            audit.k_ood,
        ));
    }

    let mut kept = Vec::with_capacity(restricted.len());
    let mut excluded_ids = Vec::new();
    for r in restricted {
        match remove_class(r, removed_class)? {
            Some(r) => kept.push(r),
            None => excluded_ids.push(r.id().to_string()),
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty {
            what: "records left after restriction",
        });
    }
    let removed = detect(id, &kept, metric, orientation)?;
    let audit = audit_cardinality(id, &kept)?;
    if !audit.passed() {
        warnings.push(MismatchWarning::new(
            "restrict",
            "removed",
            audit.k_id,
            audit.k_ood,
        ));
    }
    Ok(RestrictionOutcome {
        removed_class,
        as_is,
        removed,
        excluded_ids,
        warnings,
    })
}
