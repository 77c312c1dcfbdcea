//! Line-delimited prediction records.
//!
//! One JSON object per line:
//! `{"id":"q1","group":"id","classes":["A","B"],"evidence":[3,1],"label":0}`.
//! `logits` may replace `evidence`; they pass through softplus on load.
//! Blank lines are skipped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vacuity_core::losses::softplus_evidence;
use vacuity_core::{EvidenceRecord, Group};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    group: GroupTag,
    classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evidence: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GroupTag {
    Id,
    Ood,
}

impl From<GroupTag> for Group {
    fn from(g: GroupTag) -> Group {
        match g {
            GroupTag::Id => Group::Id,
            GroupTag::Ood => Group::Ood,
        }
    }
}

impl From<Group> for GroupTag {
    fn from(g: Group) -> GroupTag {
        match g {
            Group::Id => GroupTag::Id,
            Group::Ood => GroupTag::Ood,
        }
    }
}

/// Parses record text; `origin` names the source in error messages.
pub fn parse_str(text: &str, origin: &Path) -> Result<Vec<EvidenceRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let fail = |message: String| CliError::Record {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let line: Line = serde_json::from_str(raw).map_err(|e| fail(e.to_string()))?;
        let evidence = match (line.evidence, line.logits) {
            (Some(e), None) => e,
            (None, Some(z)) => softplus_evidence(&z).map_err(|e| fail(e.to_string()))?,
            (Some(_), Some(_)) => return Err(fail("both evidence and logits given".into())),
            (None, None) => return Err(fail("one of evidence or logits is required".into())),
        };
        let record = EvidenceRecord::new(
            line.id,
            line.group.into(),
            line.classes,
            evidence,
            line.label,
        )
        .map_err(|e| fail(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn parse_records(path: impl AsRef<Path>) -> Result<Vec<EvidenceRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_str(&text, path)
}

/// Loads a file and checks every line belongs to `expected`.
pub fn load_group(path: impl AsRef<Path>, expected: Group) -> Result<Vec<EvidenceRecord>> {
    let path = path.as_ref();
    let records = parse_records(path)?;
    if let Some((i, r)) = records
        .iter()
        .enumerate()
        .find(|(_, r)| r.group() != expected)
    {
        return Err(CliError::Usage(format!(
            "{}: record {} ({}) has group \"{}\" but the file was passed as {}",
            path.display(),
            i + 1,
            r.id(),
            r.group().as_str(),
            expected.as_str()
        )));
    }
    if records.is_empty() {
        return Err(CliError::Usage(format!("{}: no records", path.display())));
    }
    Ok(records)
}

/// Serialises records in evidence form, one line each.
pub fn to_jsonl(records: &[EvidenceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let line = Line {
            id: r.id().to_string(),
            group: r.group().into(),
            classes: r.class_names().to_vec(),
            evidence: Some(r.evidence().to_vec()),
            logits: None,
            label: r.gold_label(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<EvidenceRecord>> {
        parse_str(text, Path::new("t.jsonl"))
    }

    #[test]
    fn evidence_line() {
        let r =
            parse(r#"{"id":"q1","group":"id","classes":["A","B","C","D"],"evidence":[12,8,9,7]}"#)
                .unwrap();
        assert_eq!(r[0].to_dirichlet().alpha(), &[13.0, 9.0, 10.0, 8.0]);
        assert_eq!(r[0].gold_label(), None);
    }

    #[test]
    fn logits_through_softplus() {
        let r = parse(r#"{"id":"q","group":"ood","classes":["A","B"],"logits":[0,0]}"#).unwrap();
        for &e in r[0].evidence() {
            assert!((e - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_name_the_line() {
        let text = "\n{\"id\":\"a\",\"group\":\"id\",\"classes\":[\"A\",\"B\"],\"evidence\":[1,1]}\n\
                    {\"id\":\"b\",\"group\":\"id\",\"classes\":[\"A\",\"B\"],\"evidence\":[-1,1]}\n";
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.starts_with("t.jsonl:3:"), "{msg}");
        assert!(msg.contains("negative evidence"), "{msg}");
    }

    #[test]
    fn mixed_or_missing_forms_rejected() {
        let both = r#"{"id":"a","group":"id","classes":["A","B"],"evidence":[1,1],"logits":[0,0]}"#;
        assert!(parse(both).unwrap_err().to_string().contains("both"));
        let none = r#"{"id":"a","group":"id","classes":["A","B"]}"#;
        assert!(parse(none).is_err());
        let short = r#"{"id":"a","group":"id","classes":["A","B","C"],"evidence":[1,1]}"#;
        assert!(parse(short).is_err());
        let junk = "{not json";
        assert!(matches!(parse(junk), Err(CliError::Record { line: 1, .. })));
    }
}
