//! Label vocabulary. Index 0 is always the abstain label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a [`LabelSet`]. Id 0 is reserved for the abstain label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct LabelId(pub u16);

/// The reserved abstain label (no prediction).
pub const ABSTAIN: LabelId = LabelId(0);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_abstain(self) -> bool {
        self == ABSTAIN
    }
}

impl std::fmt::Display for LabelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One vocabulary entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub id: LabelId,
    pub name: String,
}

/// Ordered label vocabulary; the first entry is the abstain label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    /// Builds a vocabulary from names; `names[0]` is the abstain label.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidInput(
                "label vocabulary must contain at least the abstain label".into(),
            ));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate label name `{a}`")));
            }
        }
        Ok(LabelSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, id: LabelId) -> bool {
        id.index() < self.names.len()
    }

    pub fn name(&self, id: LabelId) -> Result<&str> {
        self.names
            .get(id.index())
            .map(String::as_str)
            .ok_or(Error::LabelOutOfRange {
                id: id.index(),
                count: self.names.len(),
            })
    }

    pub fn get(&self, id: LabelId) -> Result<Label> {
        Ok(Label {
            id,
            name: self.name(id)?.to_string(),
        })
    }

    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| LabelId(i as u16))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// All label ids in id order, abstain first.
    pub fn ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        (0..self.names.len()).map(|i| LabelId(i as u16))
    }

    /// Non-abstain label ids in id order.
    pub fn non_abstain_ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        (1..self.names.len()).map(|i| LabelId(i as u16))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abstain_is_index_zero() {
        let set = LabelSet::new(vec!["ABSTAIN", "POS", "NEG"]).unwrap();
        assert_eq!(set.id_of("ABSTAIN"), Some(ABSTAIN));
        assert_eq!(set.id_of("NEG"), Some(LabelId(2)));
        assert_eq!(set.name(LabelId(1)).unwrap(), "POS");
        assert!(set.name(LabelId(3)).is_err());
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(LabelSet::new(Vec::<String>::new()).is_err());
        assert!(LabelSet::new(vec!["A", "A"]).is_err());
    }
}
