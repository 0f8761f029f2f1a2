//! QMOOD quality attributes and improvement statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricVector;

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("unknown metric name {name} in attribute {attribute}")]
    UnknownMetricName { attribute: String, name: String },
    #[error("coefficient table is missing attribute {0}")]
    MissingAttribute(String),
    #[error("rate undefined for a zero baseline")]
    UndefinedRate,
    #[error("cannot load coefficient table: {0}")]
    Load(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Reusability,
    Flexibility,
    Understandability,
    Effectiveness,
    Extendibility,
    Functionality,
}

impl Attribute {
    pub const ALL: [Attribute; 6] = [
        Attribute::Reusability,
        Attribute::Flexibility,
        Attribute::Understandability,
        Attribute::Effectiveness,
        Attribute::Extendibility,
        Attribute::Functionality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Reusability => "Reusability",
            Attribute::Flexibility => "Flexibility",
            Attribute::Understandability => "Understandability",
            Attribute::Effectiveness => "Effectiveness",
            Attribute::Extendibility => "Extendibility",
            Attribute::Functionality => "Functionality",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Attribute name -> (metric name -> weight). Repeated terms in a source
/// table are summed when the table is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub attributes: BTreeMap<String, BTreeMap<String, f64>>,
}

fn row(terms: &[(&str, f64)]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for (name, w) in terms {
        *m.entry(name.to_string()).or_insert(0.0) += w;
    }
    m
}

impl Default for CoefficientTable {
    /// The printed table with NOS and MOP read as NOP and the repeated
    /// Understandability terms counted once.
    fn default() -> Self {
        let mut attributes = BTreeMap::new();
        attributes.insert(
            "Reusability".into(),
            row(&[("DCC", -0.25), ("CAM", 0.25), ("CIS", 0.5), ("DSC", 0.5)]),
        );
        attributes.insert(
            "Flexibility".into(),
            row(&[("DAM", 0.25), ("DCC", -0.25), ("MOA", 0.5), ("NOP", 0.5)]),
        );
        attributes.insert(
            "Understandability".into(),
            row(&[
                ("ANA", -0.33),
                ("DAM", 0.33),
                ("DCC", -0.33),
                ("CAM", 0.33),
                ("NOP", -0.33),
                ("NOM", -0.33),
                ("DSC", -0.33),
            ]),
        );
        attributes.insert(
            "Effectiveness".into(),
            row(&[("ANA", 0.2), ("DAM", 0.2), ("MOA", 0.2), ("MFA", 0.2), ("NOP", 0.2)]),
        );
        attributes.insert(
            "Extendibility".into(),
            row(&[("ANA", 0.5), ("DCC", -0.5), ("MFA", 0.5), ("NOP", 0.5)]),
        );
        attributes.insert(
            "Functionality".into(),
            row(&[
                ("MOA", 0.12),
                ("NOP", 0.22),
                ("CIS", 0.22),
                ("DSC", 0.22),
                ("NOH", 0.22),
            ]),
        );
        Self { attributes }
    }
}

impl CoefficientTable {
    /// The table exactly as printed: Understandability keeps its repeated
    /// terms, and the undefined symbols NOS and MOP are kept by name, so
    /// evaluating it fails with `UnknownMetricName`.
    pub fn printed_literal() -> Self {
        let mut t = Self::default();
        t.attributes.insert(
            "Understandability".into(),
            row(&[
                ("ANA", -0.33),
                ("DAM", 0.33),
                ("DCC", -0.33),
                ("CAM", 0.33),
                ("NOP", -0.33),
                ("NOM", -0.33),
                ("DSC", -0.33),
                ("CAM", 0.33),
                ("NOP", -0.33),
                ("NOM", -0.33),
                ("DSC", -0.33),
            ]),
        );
        t.attributes.insert(
            "Extendibility".into(),
            row(&[("ANA", 0.5), ("DCC", -0.5), ("MFA", 0.5), ("NOS", 0.5)]),
        );
        t.attributes.insert(
            "Functionality".into(),
            row(&[
                ("MOA", 0.12),
                ("MOP", 0.22),
                ("CIS", 0.22),
                ("DSC", 0.22),
                ("NOH", 0.22),
            ]),
        );
        t
    }

    /// The printed table with only the duplicated Understandability terms
    /// kept (±0.66); NOS and MOP read as NOP.
    pub fn printed() -> Self {
        let mut t = Self::default();
        let u = t.attributes.get_mut("Understandability").unwrap();
        for name in ["CAM", "NOP", "NOM", "DSC"] {
            *u.get_mut(name).unwrap() *= 2.0;
        }
        t
    }

    /// Loads a TOML table of the form
    /// `[Reusability]\nDCC = -0.25\n...`, one section per attribute.
    pub fn from_toml_str(text: &str) -> Result<Self, QualityError> {
        let attributes: BTreeMap<String, BTreeMap<String, f64>> =
            toml::from_str(text).map_err(|e| QualityError::Load(e.to_string()))?;
        Ok(Self { attributes })
    }

    pub fn load(path: &Path) -> Result<Self, QualityError> {
        let text = std::fs::read_to_string(path).map_err(|e| QualityError::Load(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Resolves a named table: `default`, `printed`, `printed-literal`, or a TOML path.
    pub fn named(source: &str) -> Result<Self, QualityError> {
        match source {
            "default" | "" => Ok(Self::default()),
            "printed" => Ok(Self::printed()),
            "printed-literal" => Ok(Self::printed_literal()),
            path => Self::load(Path::new(path)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QmoodVector {
    pub reusability: f64,
    pub flexibility: f64,
    pub understandability: f64,
    pub effectiveness: f64,
    pub extendibility: f64,
    pub functionality: f64,
}

impl QmoodVector {
    pub fn get(&self, a: Attribute) -> f64 {
        match a {
            Attribute::Reusability => self.reusability,
            Attribute::Flexibility => self.flexibility,
            Attribute::Understandability => self.understandability,
            Attribute::Effectiveness => self.effectiveness,
            Attribute::Extendibility => self.extendibility,
            Attribute::Functionality => self.functionality,
        }
    }

    fn set(&mut self, a: Attribute, v: f64) {
        match a {
            Attribute::Reusability => self.reusability = v,
            Attribute::Flexibility => self.flexibility = v,
            Attribute::Understandability => self.understandability = v,
            Attribute::Effectiveness => self.effectiveness = v,
            Attribute::Extendibility => self.extendibility = v,
            Attribute::Functionality => self.functionality = v,
        }
    }
}

pub fn qmood_attributes(metrics: &MetricVector, coeffs: &CoefficientTable) -> Result<QmoodVector, QualityError> {
    let mut out = QmoodVector::default();
    for a in Attribute::ALL {
        let terms = coeffs
            .attributes
            .get(a.name())
            .ok_or_else(|| QualityError::MissingAttribute(a.name().to_string()))?;
        let mut sum = 0.0;
        for (name, w) in terms {
            let v = metrics.get(name).ok_or_else(|| QualityError::UnknownMetricName {
                attribute: a.name().to_string(),
                name: name.clone(),
            })?;
            sum += w * v;
        }
        out.set(a, sum);
    }
    Ok(out)
}

/// Signed percent change of one attribute, or undefined for a zero baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Improvement {
    Percent(f64),
    Undefined,
}

impl Improvement {
    pub fn value(self) -> Option<f64> {
        match self {
            Improvement::Percent(v) => Some(v),
            Improvement::Undefined => None,
        }
    }
}

impl fmt::Display for Improvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Improvement::Percent(v) => write!(f, "{v:.6}"),
            Improvement::Undefined => f.write_str("undefined"),
        }
    }
}

/// `(after - before) / |before| * 100` per attribute.
pub fn quality_improvement(before: &QmoodVector, after: &QmoodVector) -> BTreeMap<Attribute, Improvement> {
    Attribute::ALL
        .iter()
        .map(|&a| {
            let b = before.get(a);
            let qi = if b == 0.0 {
                Improvement::Undefined
            } else {
                Improvement::Percent((after.get(a) - b) / b.abs() * 100.0)
            };
            (a, qi)
        })
        .collect()
}

/// `(before - after) / before * 100`.
pub fn improvement_rate(before: f64, after: f64) -> Result<f64, QualityError> {
    if before == 0.0 {
        return Err(QualityError::UndefinedRate);
    }
    Ok((before - after) / before * 100.0)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn mv(pairs: &[(&str, f64)]) -> MetricVector {
        let mut values = [0.0; 11];
        for (name, v) in pairs {
            let i = MetricVector::NAMES.iter().position(|n| n == name).unwrap();
            values[i] = *v;
        }
        MetricVector::from_values(values)
    }

    #[test]
    fn zero_metrics_give_zero() {
        let q = qmood_attributes(&MetricVector::default(), &CoefficientTable::default()).unwrap();
        assert_eq!(q, QmoodVector::default());
    }

    #[test]
    fn reusability_substitution() {
        let m = mv(&[("DCC", 2.0), ("CAM", 0.5), ("CIS", 4.0), ("DSC", 10.0)]);
        let q = qmood_attributes(&m, &CoefficientTable::default()).unwrap();
        assert!((q.reusability - 6.625).abs() < 1e-12);
    }

    #[test]
    fn printed_table_doubles_duplicates() {
        let m = mv(&[("CAM", 1.0), ("NOM", 1.0)]);
        let d = qmood_attributes(&m, &CoefficientTable::default()).unwrap();
        let p = qmood_attributes(&m, &CoefficientTable::printed()).unwrap();
        assert!((d.understandability - 0.0).abs() < 1e-12);
        assert!((p.understandability - 0.0).abs() < 1e-12);
        let m = mv(&[("CAM", 1.0)]);
        let p = qmood_attributes(&m, &CoefficientTable::printed()).unwrap();
        assert!((p.understandability - 0.66).abs() < 1e-12);
    }

    #[test]
    fn literal_table_reports_undefined_symbols() {
        let err = qmood_attributes(&MetricVector::default(), &CoefficientTable::printed_literal()).unwrap_err();
        assert!(matches!(err, QualityError::UnknownMetricName { name, .. } if name == "NOS"));
    }

    #[test]
    fn toml_table() {
        let t = CoefficientTable::from_toml_str(
            "[Reusability]\nDSC = 1.0\n[Flexibility]\n[Understandability]\n[Effectiveness]\n[Extendibility]\n[Functionality]\nFOO = 1.0\n",
        )
        .unwrap();
        assert!(matches!(
            qmood_attributes(&MetricVector::default(), &t),
            Err(QualityError::UnknownMetricName { .. })
        ));
    }

    #[test]
    fn qi_cases() {
        let before = QmoodVector {
            reusability: 4.0,
            flexibility: -2.0,
            ..Default::default()
        };
        let after = QmoodVector {
            reusability: 4.4,
            flexibility: -1.0,
            ..Default::default()
        };
        let qi = quality_improvement(&before, &after);
        assert!((qi[&Attribute::Reusability].value().unwrap() - 10.0).abs() < 1e-9);
        assert!((qi[&Attribute::Flexibility].value().unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(qi[&Attribute::Functionality], Improvement::Undefined);
    }

    #[test]
    fn rate_cases() {
        assert!((improvement_rate(40.0, 19.0).unwrap() - 52.5).abs() < 1e-12);
        assert!((improvement_rate(10.0, 12.0).unwrap() + 20.0).abs() < 1e-12);
        assert_eq!(improvement_rate(0.0, 5.0), Err(QualityError::UndefinedRate));
    }

    fn metric_vec() -> impl Strategy<Value = MetricVector> {
        prop::array::uniform11(-50.0f64..50.0).prop_map(MetricVector::from_values)
    }

    proptest! {
        #[test]
        fn attributes_are_linear(a in metric_vec(), b in metric_vec()) {
            let t = CoefficientTable::default();
            let sum = MetricVector::from_values(std::array::from_fn(|i| a.values()[i] + b.values()[i]));
            let qa = qmood_attributes(&a, &t).unwrap();
            let qb = qmood_attributes(&b, &t).unwrap();
            let qs = qmood_attributes(&sum, &t).unwrap();
            for attr in Attribute::ALL {
                prop_assert!((qs.get(attr) - qa.get(attr) - qb.get(attr)).abs() < 1e-9);
            }
        }

        #[test]
        fn qi_of_identical_vectors_is_zero(v in prop::array::uniform6(prop_oneof![-9.0f64..-0.1, 0.1f64..9.0])) {
            let q = QmoodVector {
                reusability: v[0], flexibility: v[1], understandability: v[2],
                effectiveness: v[3], extendibility: v[4], functionality: v[5],
            };
            for (_, qi) in quality_improvement(&q, &q) {
                prop_assert_eq!(qi, Improvement::Percent(0.0));
            }
        }

        #[test]
        fn swapped_rate_identity(a in 0.1f64..100.0, b in 0.1f64..100.0) {
            let ir = improvement_rate(a, b).unwrap();
            let rel = (b - a) / a * 100.0;
            prop_assert!((ir + rel).abs() < 1e-9);
        }
    }
}
