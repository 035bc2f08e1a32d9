//! Ontological view of planning vocabulary: a concept taxonomy mirroring the
//! class hierarchy, ConceptNet-style annotations, and `hasParameterN` object
//! properties describing pattern and action-head signatures.

mod annotations;
mod relation;
mod remote;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::task::{ClassHierarchy, Pattern, SchemaHead, Slot, TaskError};

pub use annotations::{enrich, normalize_term, AnnotationSource, ENDPOINT_ENV};
pub use relation::Relation;
pub use remote::{load_remote_tasks, RemoteTaskInfo};

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("unknown concept `{0}`")]
    MissingConcept(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("annotation file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Annotation {
    pub rel: Relation,
    #[serde(rename = "val")]
    pub value: String,
}

impl Annotation {
    pub fn new(rel: Relation, value: &str) -> Self {
        Annotation {
            rel,
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    Pattern,
    SchemaHead,
}

/// A pattern or action head with one concept set per parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectProperty {
    pub name: String,
    pub kind: PropertyKind,
    pub slots: Vec<Vec<String>>,
}

impl ObjectProperty {
    pub fn arity(&self) -> usize {
        self.slots.len()
    }
}

/// A named thing with its annotations, as seen by the similarity measures.
#[derive(Debug, Clone, Copy)]
pub struct Term<'a> {
    pub name: &'a str,
    pub annotations: &'a [Annotation],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub name: String,
    pub classes: ClassHierarchy,
    annotations: BTreeMap<String, Vec<Annotation>>,
    properties: Vec<ObjectProperty>,
}

impl Ontology {
    /// An ontology without concepts.
    pub fn new(name: &str) -> Self {
        Ontology {
            name: name.to_string(),
            classes: ClassHierarchy::empty(),
            annotations: BTreeMap::new(),
            properties: Vec::new(),
        }
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.classes.classes()
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.classes.contains(concept)
    }

    pub fn parent(&self, concept: &str) -> Option<&str> {
        self.classes.parent(concept)
    }

    pub fn annotations(&self, name: &str) -> &[Annotation] {
        self.annotations.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_annotations(&self) -> impl Iterator<Item = (&str, &[Annotation])> {
        self.annotations.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Appends `a` to the annotations of `name` unless already present.
    pub fn annotate(&mut self, name: &str, a: Annotation) {
        let list = self.annotations.entry(name.to_string()).or_default();
        if !list.contains(&a) {
            list.push(a);
        }
    }

    pub fn properties(&self) -> &[ObjectProperty] {
        &self.properties
    }

    pub fn properties_of(&self, kind: PropertyKind) -> impl Iterator<Item = &ObjectProperty> {
        self.properties.iter().filter(move |p| p.kind == kind)
    }

    pub fn term<'a>(&'a self, name: &'a str) -> Term<'a> {
        Term {
            name,
            annotations: self.annotations(name),
        }
    }

    /// Names of concepts and properties, the things enrichment annotates.
    pub fn annotated_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.concepts().map(str::to_string).collect();
        for p in &self.properties {
            if !names.contains(&p.name) {
                names.push(p.name.clone());
            }
        }
        names
    }

    /// Adds `concept` under `parent`.
    pub fn insert_concept(&mut self, concept: &str, parent: &str) -> Result<(), OntologyError> {
        self.classes.add(concept, parent)?;
        Ok(())
    }

    /// Appends `concept` to slot `slot` of every property named `name`.
    pub(crate) fn extend_slot(&mut self, name: &str, kind: PropertyKind, slot: usize, concept: &str) {
        for p in self.properties.iter_mut().filter(|p| p.name == name && p.kind == kind) {
            if let Some(s) = p.slots.get_mut(slot) {
                if !s.iter().any(|c| c == concept) {
                    s.push(concept.to_string());
                }
            }
        }
    }
}

/// One concept per class, same parent structure, no properties.
pub fn build_class_ontology(name: &str, classes: &ClassHierarchy) -> Ontology {
    Ontology {
        name: name.to_string(),
        classes: classes.clone(),
        annotations: BTreeMap::new(),
        properties: Vec::new(),
    }
}

fn slot_concepts(slot: &Slot, ont: &Ontology) -> Result<Vec<String>, OntologyError> {
    slot.classes()
        .iter()
        .map(|c| {
            if ont.contains(c) {
                Ok(c.clone())
            } else {
                Err(OntologyError::MissingConcept(c.clone()))
            }
        })
        .collect()
}

/// Adds one property per pattern and per action head; existing properties of
/// the same name and kind are replaced.
pub fn extend_ontology(
    ontology: &Ontology,
    patterns: &[Pattern],
    heads: &[SchemaHead],
) -> Result<Ontology, OntologyError> {
    let mut out = ontology.clone();
    let records = patterns
        .iter()
        .map(|p| (p.name.as_str(), PropertyKind::Pattern, p.slots.as_slice()))
        .chain(heads.iter().map(|h| (h.name.as_str(), PropertyKind::SchemaHead, h.slots.as_slice())));
    for (name, kind, slots) in records {
        let slots = slots
            .iter()
            .map(|s| slot_concepts(s, ontology))
            .collect::<Result<Vec<_>, _>>()?;
        out.properties.retain(|p| !(p.name == name && p.kind == kind));
        out.properties.push(ObjectProperty {
            name: name.to_string(),
            kind,
            slots,
        });
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Functional-style rendering: a header, one `SubClassOf` per concept, one
/// `AnnotationAssertion` per annotation and one `ObjectPropertyAssertion` per
/// slot member.
pub fn export_owl(ontology: &Ontology) -> String {
    let mut out = format!("Ontology(<{}>)\n", ontology.name);
    let mut concepts: Vec<&str> = ontology.concepts().collect();
    concepts.sort_unstable();
    for c in concepts {
        let parent = ontology.parent(c).unwrap_or(OWL_THING);
        let _ = writeln!(out, "SubClassOf({c} {parent})");
    }
    for (name, list) in &ontology.annotations {
        for a in list {
            let _ = writeln!(out, "AnnotationAssertion({} {name} {})", a.rel, quote(&a.value));
        }
    }
    let mut props: Vec<&ObjectProperty> = ontology.properties.iter().collect();
    props.sort_by(|a, b| (&a.name, a.kind).cmp(&(&b.name, b.kind)));
    for p in props {
        for (k, slot) in p.slots.iter().enumerate() {
            for c in slot {
                let _ = writeln!(out, "ObjectPropertyAssertion(hasParameter{} {} {c})", k + 1, p.name);
            }
        }
    }
    out
}

/// Parent of the root in exported text.
pub const OWL_THING: &str = "owl:Thing";
