use crate::dsl::parse_map;
use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use crate::dynamics::TypeLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepLabel {
    Zero,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlcPartner {
    pub partner: String,
    pub c: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw: Option<[f64; 2]>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub type_label: Option<TypeLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub koenigs_closed_form: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slc_partners: Vec<SlcPartner>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

impl CorpusEntry {
    pub fn map(&self) -> Result<MapExpr> {
        parse_map(&self.expr)
    }

    pub fn expected(&self) -> Expected {
        self.expected.clone().unwrap_or_default()
    }

    pub fn dw(&self) -> Option<C64> {
        self.expected.as_ref()?.dw.map(|[re, im]| C64::new(re, im))
    }

    pub fn closed_form(&self) -> Result<Option<MapExpr>> {
        match self.expected.as_ref().and_then(|e| e.koenigs_closed_form.as_deref()) {
            Some(s) => parse_map(s).map(Some),
            None => Ok(None),
        }
    }

    /// Partner maps with their expected coefficients.
    pub fn partners(&self) -> Result<Vec<(MapExpr, C64)>> {
        let Some(e) = self.expected.as_ref() else { return Ok(Vec::new()) };
        e.slc_partners
            .iter()
            .map(|p| Ok((parse_map(&p.partner)?, C64::new(p.c[0], p.c[1]))))
            .collect()
    }
}

fn invalid(name: &str, what: impl std::fmt::Display) -> Error {
    Error::Corpus(format!("entry `{name}`: {what}"))
}

fn validate(e: &CorpusEntry) -> Result<()> {
    e.map().map_err(|err| invalid(&e.name, format!("expr: {err}")))?;
    let Some(x) = &e.expected else { return Ok(()) };
    if let Some(s) = &x.koenigs_closed_form {
        parse_map(s).map_err(|err| invalid(&e.name, format!("koenigs_closed_form: {err}")))?;
    }
    for p in &x.slc_partners {
        parse_map(&p.partner).map_err(|err| invalid(&e.name, format!("partner: {err}")))?;
        if !(p.c[0].is_finite() && p.c[1].is_finite()) {
            return Err(invalid(&e.name, "partner coefficient must be finite"));
        }
    }
    if let Some([re, im]) = x.dw {
        let m = C64::new(re, im).norm();
        if !(m <= 1.0 + 1e-12) {
            return Err(invalid(&e.name, format!("|dw| = {m} exceeds 1")));
        }
        if let Some(mu) = x.multiplier {
            if (m - 1.0).abs() <= 1e-9 && !(mu > 0.0 && mu <= 1.0) {
                return Err(invalid(&e.name, format!("boundary multiplier {mu} outside (0, 1]")));
            }
        }
    }
    Ok(())
}

/// Parses and validates a corpus document.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    let entries: Vec<CorpusEntry> = serde_json::from_str(text).map_err(|e| Error::Corpus(e.to_string()))?;
    for e in &entries {
        validate(e)?;
    }
    Ok(entries)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"[{"name": "a", "expr": "z", "colour": 1}]"#;
        assert!(matches!(parse_corpus(bad), Err(Error::Corpus(m)) if m.contains("colour")));
        let bad2 = r#"[{"name": "a", "expr": "z", "expected": {"dw": [1, 0], "mu": 1}}]"#;
        assert!(parse_corpus(bad2).is_err());
    }

    #[test]
    fn expected_values_validated() {
        let far = r#"[{"name": "a", "expr": "z/2", "expected": {"dw": [2, 0]}}]"#;
        assert!(parse_corpus(far).is_err());
        let mult = r#"[{"name": "a", "expr": "(z+1)/2", "expected": {"dw": [1, 0], "multiplier": 1.5}}]"#;
        assert!(parse_corpus(mult).is_err());
        let expr = r#"[{"name": "a", "expr": "z^"}]"#;
        assert!(matches!(parse_corpus(expr), Err(Error::Corpus(m)) if m.contains("byte 2")));
    }

    #[test]
    fn minimal_entry() {
        let ok = r#"[{"name": "half", "expr": "(z+1)/2",
            "expected": {"dw": [1, 0], "type": "hyperbolic", "multiplier": 0.5,
                         "slc_partners": [{"partner": "z", "c": [0, 0]}]}}]"#;
        let v = parse_corpus(ok).unwrap();
        assert_eq!(v[0].expected().type_label, Some(TypeLabel::Hyperbolic));
        assert_eq!(v[0].partners().unwrap().len(), 1);
    }
}
