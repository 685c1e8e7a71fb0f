//! Candidate predicate generation over a finite working set.
//!
//! Two predicates with the same signature (boolean vector over the working
//! set) are interchangeable in any repair over that set, so only one
//! representative per signature class is kept. Constant signatures cannot
//! split anything and are dropped.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::datapoint::Datapoint;
use crate::error::{Error, Result};
use crate::predicate::{EvalEnv, Predicate};

/// Boolean vector of a predicate's outcomes over a fixed-order working set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateSignature {
    pub bits: Vec<bool>,
}

impl PredicateSignature {
    pub fn is_constant(&self) -> bool {
        self.bits.iter().all(|&b| b) || self.bits.iter().all(|&b| !b)
    }
}

/// Evaluates `p` over `xs` in order; entry `i` is `p(xs[i])`.
pub fn signature(p: &Predicate, xs: &[&Datapoint], env: &EvalEnv) -> Result<PredicateSignature> {
    if xs.is_empty() {
        return Err(Error::InvalidInput(
            "signature requires a non-empty working set".into(),
        ));
    }
    let bits = xs
        .iter()
        .map(|x| p.eval(x, env))
        .collect::<Result<Vec<bool>>>()?;
    Ok(PredicateSignature { bits })
}

/// All predicates derivable from the working set itself: word containment
/// for every token, attribute equality for every (attr, value) pair. In
/// canonical order.
fn derivable_predicates(xs: &[&Datapoint]) -> Vec<Predicate> {
    let mut words = BTreeSet::new();
    let mut attrs = BTreeSet::new();
    for x in xs {
        for t in &x.tokens {
            words.insert(t.clone());
        }
        for (k, v) in &x.attrs {
            attrs.insert((k.clone(), v.clone()));
        }
    }
    let mut preds: Vec<Predicate> = words
        .into_iter()
        .map(Predicate::contains_word)
        .collect();
    preds.extend(
        attrs
            .into_iter()
            .map(|(attr, value)| Predicate::attr_equals(attr, value)),
    );
    preds
}

/// Candidate predicates over the working set: one representative per
/// distinct non-constant signature, ordered canonically. The representative
/// of each class is its canonically smallest member (for word predicates,
/// the lexicographically smallest word), so identical inputs always yield
/// identical candidates.
pub fn candidate_predicates(xs: &[&Datapoint], env: &EvalEnv) -> Result<Vec<Predicate>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput(
            "candidate generation requires a non-empty working set".into(),
        ));
    }
    let mut by_signature: BTreeMap<PredicateSignature, Predicate> = BTreeMap::new();
    for pred in derivable_predicates(xs) {
        let sig = signature(&pred, xs, env)?;
        if sig.is_constant() {
            continue;
        }
        // Predicates arrive in canonical order, so the first one wins.
        by_signature.entry(sig).or_insert(pred);
    }
    let mut candidates: Vec<Predicate> = by_signature.into_values().collect();
    candidates.sort();
    Ok(candidates)
}

/// A predicate telling `x1` and `x2` apart: the lexicographically smallest
/// token present in exactly one of them, falling back to a differing
/// attribute. Errors when the datapoints are predicate-indistinguishable.
pub fn separator_predicate(x1: &Datapoint, x2: &Datapoint) -> Result<Predicate> {
    let t1 = x1.token_set();
    let t2 = x2.token_set();
    if let Some(word) = t1.symmetric_difference(&t2).next() {
        return Ok(Predicate::contains_word(*word));
    }
    let keys: BTreeSet<&String> = x1.attrs.keys().chain(x2.attrs.keys()).collect();
    for key in keys {
        match (x1.attrs.get(key), x2.attrs.get(key)) {
            (Some(v1), Some(v2)) if v1 != v2 => {
                return Ok(Predicate::attr_equals(key, v1));
            }
            (Some(v1), None) => return Ok(Predicate::attr_equals(key, v1)),
            (None, Some(v2)) => return Ok(Predicate::attr_equals(key, v2)),
            _ => {}
        }
    }
    Err(Error::NoSeparator(x1.id.clone(), x2.id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::LabelSet;
    use crate::predicate::OpaqueRegistry;

    fn env_fixture() -> (LabelSet, OpaqueRegistry) {
        (
            LabelSet::new(vec!["ABSTAIN", "A", "B"]).unwrap(),
            OpaqueRegistry::new(),
        )
    }

    #[test]
    fn signature_follows_evaluation_order() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let a = Datapoint::new("a", "good movie");
        let b = Datapoint::new("b", "bad movie");
        let xs = vec![&a, &b];
        let movie = signature(&Predicate::contains_word("movie"), &xs, &env).unwrap();
        assert_eq!(movie.bits, vec![true, true]);
        assert!(movie.is_constant());
        let good = signature(&Predicate::contains_word("good"), &xs, &env).unwrap();
        assert_eq!(good.bits, vec![true, false]);
        let single = signature(&Predicate::contains_word("good"), &xs[..1], &env).unwrap();
        assert_eq!(single.bits.len(), 1);
    }

    #[test]
    fn candidates_keep_one_representative_per_class() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let a = Datapoint::new("a", "good movie");
        let b = Datapoint::new("b", "bad movie");
        let xs = vec![&a, &b];
        let candidates = candidate_predicates(&xs, &env).unwrap();
        // 'movie' is constant over the set and excluded; 'good' and 'bad'
        // realize the two non-constant signatures.
        assert_eq!(
            candidates,
            vec![
                Predicate::contains_word("bad"),
                Predicate::contains_word("good"),
            ]
        );
    }

    #[test]
    fn singleton_working_set_yields_no_candidates() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let a = Datapoint::new("a", "only one doc");
        let candidates = candidate_predicates(&[&a], &env).unwrap();
        assert!(candidates.is_empty());
    }

    #[test]
    fn three_review_example_has_the_pure_split_signature() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let d1 = Datapoint::new("d1", "I rate this one stars. This is bad.");
        let d2 = Datapoint::new("d2", "I rate this four stars. This is great.");
        let d3 = Datapoint::new("d3", "I rate this five stars. This is great.");
        let xs = vec![&d1, &d2, &d3];
        let candidates = candidate_predicates(&xs, &env).unwrap();
        let great = Predicate::contains_word("great");
        assert!(candidates.contains(&great));
        assert_eq!(
            signature(&great, &xs, &env).unwrap().bits,
            vec![false, true, true]
        );
    }

    #[test]
    fn separator_finds_first_differing_token() {
        let a = Datapoint::new("a", "good movie");
        let b = Datapoint::new("b", "bad movie");
        // Symmetric difference {good, bad}; 'bad' is smallest.
        assert_eq!(
            separator_predicate(&a, &b).unwrap(),
            Predicate::contains_word("bad")
        );

        let c = Datapoint::new("c", "the same words here");
        let d = Datapoint::new("d", "the same other words here");
        assert_eq!(
            separator_predicate(&c, &d).unwrap(),
            Predicate::contains_word("other")
        );
    }

    #[test]
    fn separator_falls_back_to_attrs_and_fails_when_identical() {
        let a = Datapoint::new("a", "same text").with_attr("source", "web");
        let b = Datapoint::new("b", "same text").with_attr("source", "app");
        assert_eq!(
            separator_predicate(&a, &b).unwrap(),
            Predicate::attr_equals("source", "web")
        );

        let c = Datapoint::new("c", "identical doc");
        let d = Datapoint::new("d", "identical doc");
        assert!(matches!(
            separator_predicate(&c, &d),
            Err(Error::NoSeparator(_, _))
        ));
    }

    #[test]
    fn separator_separates_on_its_own_signature() {
        let (labels, reg) = env_fixture();
        let env = EvalEnv::new(&labels, &reg);
        let pairs = [
            ("one star bad", "five stars great"),
            ("alpha beta", "alpha gamma"),
            ("x", "x y"),
        ];
        for (ta, tb) in pairs {
            let a = Datapoint::new("a", ta);
            let b = Datapoint::new("b", tb);
            let p = separator_predicate(&a, &b).unwrap();
            let sig = signature(&p, &[&a, &b], &env).unwrap();
            assert_ne!(sig.bits[0], sig.bits[1], "{ta:?} vs {tb:?}");
        }
    }
}
