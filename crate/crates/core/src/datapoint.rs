//! Datapoints and tokenization.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::label::LabelId;

/// Lowercases and splits on any non-alphanumeric character, dropping empty
/// tokens. Deterministic and language-agnostic, so word-containment
/// predicates are well-defined.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// One input record. `tokens` is always derived from `text` via [`tokenize`];
/// `gt` is present only for datapoints in the labeled seed pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datapoint {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub attrs: BTreeMap<String, String>,
    pub gt: Option<LabelId>,
}

impl Datapoint {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Datapoint {
            id: id.into(),
            text,
            tokens,
            attrs: BTreeMap::new(),
            gt: None,
        }
    }

    pub fn with_gt(mut self, gt: LabelId) -> Self {
        self.gt = Some(gt);
        self
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }

    pub fn token_set(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    pub fn has_token(&self, word: &str) -> bool {
        self.tokens.iter().any(|t| t == word)
    }

    /// True when no predicate in the space can tell the two apart: equal
    /// token sets and equal attribute maps.
    pub fn indistinguishable_from(&self, other: &Datapoint) -> bool {
        self.token_set() == other.token_set() && self.attrs == other.attrs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(
            tokenize("Waste of money!"),
            vec!["waste", "of", "money"]
        );
        assert_eq!(tokenize("yes, get it!"), vec!["yes", "get", "it"]);
        assert_eq!(tokenize("  --  "), Vec::<String>::new());
    }

    #[test]
    fn tokens_are_pure_function_of_text() {
        let a = Datapoint::new("a", "Great Product");
        let b = Datapoint::new("b", "great    product?");
        assert_eq!(a.tokens, b.tokens);
        assert!(a.indistinguishable_from(&b));
    }

    #[test]
    fn attrs_distinguish_equal_texts() {
        let a = Datapoint::new("a", "same text").with_attr("source", "web");
        let b = Datapoint::new("b", "same text").with_attr("source", "app");
        assert!(!a.indistinguishable_from(&b));
    }
}
