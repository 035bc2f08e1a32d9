//! Similarity measures between vocabularies: VSM cosine over term
//! frequencies, Jaro-Winkler, SoftTFIDF, and the tailored measure (TSM) over
//! classes, patterns and action heads.

mod jaro;
mod soft_tfidf;
mod tsm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ontology::{Ontology, Relation};

pub use jaro::{jaro, jaro_winkler};
pub use soft_tfidf::{soft_tfidf, soft_tfidf_directed, Corpus, INNER_THRESHOLD};
pub use tsm::{
    structured_similarity, tsm, tsm_concept, tsm_concept_traced, tsm_corpus, tsm_with, Aggregation, Branch, Combine, ConceptTrace,
    SimilarityMatrix, TsmConfig, TsmReport, ALGORITHM_RELATIONS, SYNONYM_THRESHOLD,
};

/// Splits on underscores, hyphens and whitespace, lowercasing each token.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| c == '_' || c == '-' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A bag of tokens with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenDoc {
    counts: BTreeMap<String, usize>,
}

impl TokenDoc {
    pub fn new() -> Self {
        TokenDoc::default()
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut d = TokenDoc::new();
        for t in tokens {
            d.push_text(t.as_ref());
        }
        d
    }

    /// Adds the tokens of `text`.
    pub fn push_text(&mut self, text: &str) {
        for t in tokenize(text) {
            *self.counts.entry(t).or_default() += 1;
        }
    }

    pub fn count(&self, token: &str) -> usize {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Cosine of raw term-frequency vectors; 0 when either side is empty.
pub fn cosine_tf(a: &TokenDoc, b: &TokenDoc) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a.counts().map(|(t, n)| (n * b.count(t)) as f64).sum();
    let norm = |d: &TokenDoc| d.counts().map(|(_, n)| (n * n) as f64).sum::<f64>().sqrt();
    (dot / (norm(a) * norm(b))).clamp(0.0, 1.0)
}

/// Concept names plus annotation values of every concept (the `uri`
/// self-references excluded).
pub fn ontology_document(o: &Ontology) -> TokenDoc {
    let mut d = TokenDoc::new();
    for c in o.concepts() {
        d.push_text(c);
        for a in o.annotations(c) {
            if a.rel != Relation::Uri {
                d.push_text(&a.value);
            }
        }
    }
    d
}

/// Quick whole-ontology similarity used as a pre-filter.
pub fn vsm_similarity(local: &Ontology, remote: &Ontology) -> f64 {
    cosine_tf(&ontology_document(local), &ontology_document(remote))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_and_lowercases() {
        assert_eq!(tokenize("Kitchen_range-top  x"), ["kitchen", "range", "top", "x"]);
        assert!(tokenize("__").is_empty());
    }

    #[test]
    fn cosine_examples() {
        let d = |s: &str| TokenDoc::from_tokens(s.split(' '));
        assert!((cosine_tf(&d("a a b"), &d("a b b")) - 0.8).abs() < 1e-12);
        assert_eq!(cosine_tf(&d("a b"), &d("c d")), 0.0);
        assert!((cosine_tf(&d("a b"), &d("a b")) - 1.0).abs() < 1e-12);
        assert_eq!(cosine_tf(&d("a"), &TokenDoc::new()), 0.0);
    }

    #[test]
    fn vsm_against_empty_ontology_is_zero() {
        let o = crate::ontology::build_class_ontology("x", &crate::task::ClassHierarchy::new());
        assert_eq!(vsm_similarity(&o, &Ontology::new("e")), 0.0);
        assert!((vsm_similarity(&o, &o) - 1.0).abs() < 1e-12);
    }
}
