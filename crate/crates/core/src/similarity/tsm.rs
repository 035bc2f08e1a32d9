use serde::{Deserialize, Serialize};

use super::{soft_tfidf, tokenize, Corpus, INNER_THRESHOLD};
use crate::ontology::{normalize_term, Ontology, ObjectProperty, PropertyKind, Relation, Term};
use crate::task::ROOT_CLASS;

/// Synonym-annotation SoftTFIDF above which the relation average is skipped.
pub const SYNONYM_THRESHOLD: f64 = 0.7;

/// Relations averaged by the fallback branch.
pub const ALGORITHM_RELATIONS: [Relation; 11] = [
    Relation::Synonym,
    Relation::IsA,
    Relation::UsedFor,
    Relation::AtLocation,
    Relation::CapableOf,
    Relation::RelatedTo,
    Relation::Antonym,
    Relation::HasA,
    Relation::DerivedFrom,
    Relation::HasContext,
    Relation::Uri,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Same word up to plural inflection, or listed as a synonym.
    Exact,
    /// SoftTFIDF over synonym annotations.
    Synonym,
    /// Average over the per-relation values.
    RelationAverage,
}

/// How a concept pair got its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptTrace {
    pub value: f64,
    pub branch: Branch,
    /// Relations that had annotations on both sides.
    pub relations_evaluated: Vec<Relation>,
}

fn stems(s: &str) -> Vec<String> {
    let n = normalize_term(s);
    let mut out = vec![n.clone()];
    if let Some(x) = n.strip_suffix("es") {
        out.push(x.to_string());
    }
    if let Some(x) = n.strip_suffix('s') {
        out.push(x.to_string());
    }
    out
}

fn inflected(a: &str, b: &str) -> bool {
    let sa = stems(a);
    stems(b).iter().any(|x| !x.is_empty() && sa.contains(x))
}

fn lists_synonym(a: Term, b: &str) -> bool {
    let b = normalize_term(b);
    a.annotations
        .iter()
        .any(|x| x.rel == Relation::Synonym && normalize_term(&x.value) == b)
}

fn relation_tokens(t: Term, rel: Relation) -> Vec<String> {
    t.annotations
        .iter()
        .filter(|a| a.rel == rel)
        .flat_map(|a| tokenize(&a.value))
        .collect()
}

fn relation_value(a: Term, b: Term, rel: Relation, corpus: &Corpus) -> Option<f64> {
    let (x, y) = (relation_tokens(a, rel), relation_tokens(b, rel));
    if x.is_empty() || y.is_empty() {
        return None;
    }
    Some(soft_tfidf(&x, &y, corpus, INNER_THRESHOLD))
}

/// Concept similarity with the branch taken.
pub fn tsm_concept_traced(a: Term, b: Term, corpus: &Corpus) -> ConceptTrace {
    if inflected(a.name, b.name) || lists_synonym(a, b.name) || lists_synonym(b, a.name) {
        return ConceptTrace {
            value: 1.0,
            branch: Branch::Exact,
            relations_evaluated: Vec::new(),
        };
    }
    let mut evaluated = Vec::new();
    if let Some(v) = relation_value(a, b, Relation::Synonym, corpus) {
        if v > SYNONYM_THRESHOLD {
            return ConceptTrace {
                value: v,
                branch: Branch::Synonym,
                relations_evaluated: vec![Relation::Synonym],
            };
        }
    }
    let mut sum = 0.0;
    for rel in ALGORITHM_RELATIONS {
        if let Some(v) = relation_value(a, b, rel, corpus) {
            sum += v;
            evaluated.push(rel);
        }
    }
    let value = if evaluated.is_empty() {
        0.0
    } else {
        (sum / evaluated.len() as f64).clamp(0.0, 1.0)
    };
    ConceptTrace {
        value,
        branch: Branch::RelationAverage,
        relations_evaluated: evaluated,
    }
}

pub fn tsm_concept(a: Term, b: Term, corpus: &Corpus) -> f64 {
    tsm_concept_traced(a, b, corpus).value
}

/// Name similarity averaged with the mean positional slot similarity. A slot
/// scores the best pairing of its member concepts; slots only one side has
/// score 0.
pub fn structured_similarity(
    p: &ObjectProperty,
    lo: &Ontology,
    q: &ObjectProperty,
    ro: &Ontology,
    corpus: &Corpus,
) -> f64 {
    let name = tsm_concept(lo.term(&p.name), ro.term(&q.name), corpus);
    let arity = p.arity().max(q.arity());
    if arity == 0 {
        return name;
    }
    let mut slots = 0.0;
    for (a, b) in p.slots.iter().zip(&q.slots) {
        let mut best: f64 = 0.0;
        for x in a {
            for y in b {
                best = best.max(tsm_concept(lo.term(x), ro.term(y), corpus));
            }
        }
        slots += best;
    }
    (name + slots / arity as f64) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn build(rows: Vec<String>, cols: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let cells = (0..rows.len())
            .map(|i| (0..cols.len()).map(|j| f(i, j)).collect())
            .collect();
        SimilarityMatrix { rows, cols, cells }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row][col]
    }

    pub fn row_max(&self) -> Vec<f64> {
        self.cells.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect()
    }

    pub fn col_max(&self) -> Vec<f64> {
        (0..self.cols.len())
            .map(|j| self.cells.iter().map(|r| r[j]).fold(0.0, f64::max))
            .collect()
    }

    /// Mean of the best matches `agg` selects; 0 for an empty matrix.
    pub fn score(&self, agg: Aggregation) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        match agg {
            Aggregation::Rows => mean(&self.row_max()),
            Aggregation::Columns => mean(&self.col_max()),
            Aggregation::Pooled => {
                let mut all = self.row_max();
                all.extend(self.col_max());
                mean(&all)
            }
        }
    }

    /// Tab-separated, with a header row of column names.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("\t");
        out.push_str(&self.cols.join("\t"));
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.cells) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!("\t{v:.4}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Which best matches a matrix score averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Best remote match of each local item.
    Rows,
    /// Best local match of each remote item.
    #[default]
    Columns,
    Pooled,
}

/// How the per-matrix scores become one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    Mean,
    /// Every facet must be covered; one weak matrix pulls the value down.
    #[default]
    Product,
}

impl Combine {
    fn apply(self, scores: &[f64]) -> f64 {
        match self {
            Combine::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
            Combine::Product => scores.iter().product(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsmConfig {
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub combine: Combine,
}

impl Default for TsmConfig {
    fn default() -> Self {
        TsmConfig {
            threshold: 0.5,
            aggregation: Aggregation::default(),
            combine: Combine::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsmReport {
    pub class: SimilarityMatrix,
    pub pattern: SimilarityMatrix,
    pub head: SimilarityMatrix,
    #[serde(rename = "final")]
    pub final_value: f64,
    pub manageable: bool,
    /// Only the class matrix was usable.
    pub degraded: bool,
}

/// One document per concept and property: its name and annotation values.
pub fn tsm_corpus(ontologies: &[&Ontology]) -> Corpus {
    let mut c = Corpus::new();
    for o in ontologies {
        for name in o.annotated_names() {
            let mut doc = tokenize(&name);
            for a in o.annotations(&name) {
                if a.rel != Relation::Uri {
                    doc.extend(tokenize(&a.value));
                }
            }
            c.add_doc(doc);
        }
    }
    c
}

fn concepts(o: &Ontology) -> Vec<String> {
    o.concepts().filter(|c| *c != ROOT_CLASS).map(str::to_string).collect()
}

fn property_matrix(local: &Ontology, remote: &Ontology, kind: PropertyKind, corpus: &Corpus) -> SimilarityMatrix {
    let lp: Vec<&ObjectProperty> = local.properties_of(kind).collect();
    let rp: Vec<&ObjectProperty> = remote.properties_of(kind).collect();
    SimilarityMatrix::build(
        lp.iter().map(|p| p.name.clone()).collect(),
        rp.iter().map(|p| p.name.clone()).collect(),
        |i, j| structured_similarity(lp[i], local, rp[j], remote, corpus),
    )
}

pub fn tsm(local: &Ontology, remote: &Ontology) -> TsmReport {
    tsm_with(local, remote, &TsmConfig::default())
}

pub fn tsm_with(local: &Ontology, remote: &Ontology, cfg: &TsmConfig) -> TsmReport {
    let corpus = tsm_corpus(&[local, remote]);
    let (lc, rc) = (concepts(local), concepts(remote));
    let class = SimilarityMatrix::build(lc.clone(), rc.clone(), |i, j| {
        tsm_concept(local.term(&lc[i]), remote.term(&rc[j]), &corpus)
    });
    let pattern = property_matrix(local, remote, PropertyKind::Pattern, &corpus);
    let head = property_matrix(local, remote, PropertyKind::SchemaHead, &corpus);
    let degraded = pattern.is_empty() && head.is_empty();
    let final_value = if degraded {
        class.score(cfg.aggregation)
    } else {
        let scores = [&class, &pattern, &head].map(|m| m.score(cfg.aggregation));
        cfg.combine.apply(&scores)
    }
    .clamp(0.0, 1.0);
    TsmReport {
        class,
        pattern,
        head,
        final_value,
        manageable: final_value >= cfg.threshold,
        degraded,
    }
}
