//! Atomic boolean tests on datapoints, and the registry for opaque labelers.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::label::{LabelId, LabelSet};

/// Atomic predicate evaluated on one datapoint. Evaluation is deterministic
/// and side-effect-free.
///
/// The derived `Ord` is the canonical predicate order used for deterministic
/// tie-breaking: word containment first, then attribute equality, then opaque
/// comparisons, lexicographic within each kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Predicate {
    /// True iff `word` appears in the datapoint's token list.
    #[serde(rename = "contains-word")]
    ContainsWord { word: String },
    /// True iff the datapoint has attribute `attr` with exactly `value`.
    #[serde(rename = "attr-equals")]
    AttrEquals { attr: String, value: String },
    /// True iff the registered labeler `opaque` returns `label` on the
    /// datapoint.
    #[serde(rename = "opaque-equals")]
    OpaqueEquals { opaque: String, label: LabelId },
}

impl Predicate {
    pub fn contains_word(word: impl Into<String>) -> Self {
        Predicate::ContainsWord { word: word.into() }
    }

    pub fn attr_equals(attr: impl Into<String>, value: impl Into<String>) -> Self {
        Predicate::AttrEquals {
            attr: attr.into(),
            value: value.into(),
        }
    }

    pub fn opaque_equals(opaque: impl Into<String>, label: LabelId) -> Self {
        Predicate::OpaqueEquals {
            opaque: opaque.into(),
            label,
        }
    }

    pub fn eval(&self, x: &Datapoint, env: &EvalEnv) -> Result<bool> {
        match self {
            Predicate::ContainsWord { word } => Ok(x.has_token(word)),
            Predicate::AttrEquals { attr, value } => {
                Ok(x.attrs.get(attr).is_some_and(|v| v == value))
            }
            Predicate::OpaqueEquals { opaque, label } => {
                let out = env.call_opaque(opaque, x)?;
                Ok(out == *label)
            }
        }
    }
}

impl std::fmt::Display for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Predicate::ContainsWord { word } => write!(f, "'{word}' in v"),
            Predicate::AttrEquals { attr, value } => write!(f, "v.{attr} == '{value}'"),
            Predicate::OpaqueEquals { opaque, label } => write!(f, "{opaque}(v) == {label}"),
        }
    }
}

/// An opaque labeler: any deterministic datapoint -> label function.
pub type OpaqueLabeler = Arc<dyn Fn(&Datapoint) -> LabelId + Send + Sync>;

/// Named registry of opaque labelers. Rule files reference labelers by name,
/// which keeps the files serializable.
#[derive(Default, Clone)]
pub struct OpaqueRegistry {
    labelers: BTreeMap<String, OpaqueLabeler>,
}

impl OpaqueRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: impl Into<String>, labeler: F)
    where
        F: Fn(&Datapoint) -> LabelId + Send + Sync + 'static,
    {
        self.labelers.insert(name.into(), Arc::new(labeler));
    }

    pub fn get(&self, name: &str) -> Option<&OpaqueLabeler> {
        self.labelers.get(name)
    }
}

impl std::fmt::Debug for OpaqueRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpaqueRegistry")
            .field("names", &self.labelers.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Evaluation context: the label vocabulary plus any registered opaque
/// labelers. Shared immutably, so evaluation is safe to run concurrently.
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a> {
    pub labels: &'a LabelSet,
    pub opaques: &'a OpaqueRegistry,
}

impl<'a> EvalEnv<'a> {
    pub fn new(labels: &'a LabelSet, opaques: &'a OpaqueRegistry) -> Self {
        EvalEnv { labels, opaques }
    }

    fn call_opaque(&self, name: &str, x: &Datapoint) -> Result<LabelId> {
        let labeler = self
            .opaques
            .get(name)
            .ok_or_else(|| Error::UnresolvedPredicate(name.to_string()))?;
        let out = labeler(x);
        if !self.labels.contains(out) {
            return Err(Error::LabelerContract {
                name: name.to_string(),
                returned: out.index(),
                count: self.labels.len(),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ABSTAIN;

    fn env_fixture() -> (LabelSet, OpaqueRegistry) {
        let labels = LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap();
        let mut reg = OpaqueRegistry::new();
        reg.register("always_pos", |_| LabelId(1));
        reg.register("out_of_range", |_| LabelId(9));
        (labels, reg)
    }

    #[test]
    fn contains_word_matches_whole_tokens() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let x = Datapoint::new("d", "one star. rather poorly written");
        assert!(Predicate::contains_word("star").eval(&x, &env).unwrap());
        // "star" is a token; "tar" is only a substring.
        assert!(!Predicate::contains_word("tar").eval(&x, &env).unwrap());
    }

    #[test]
    fn attr_equals() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let x = Datapoint::new("d", "t").with_attr("source", "web");
        assert!(Predicate::attr_equals("source", "web").eval(&x, &env).unwrap());
        assert!(!Predicate::attr_equals("source", "app").eval(&x, &env).unwrap());
        assert!(!Predicate::attr_equals("missing", "web").eval(&x, &env).unwrap());
    }

    #[test]
    fn opaque_requires_registration_and_valid_output() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let x = Datapoint::new("d", "t");
        assert!(Predicate::opaque_equals("always_pos", LabelId(1))
            .eval(&x, &env)
            .unwrap());
        assert!(matches!(
            Predicate::opaque_equals("missing", ABSTAIN).eval(&x, &env),
            Err(Error::UnresolvedPredicate(_))
        ));
        assert!(matches!(
            Predicate::opaque_equals("out_of_range", ABSTAIN).eval(&x, &env),
            Err(Error::LabelerContract { .. })
        ));
    }
}
