use std::collections::BTreeMap;
use std::path::Path;

use super::{Annotation, Ontology, OntologyError, Relation};

/// Base URL of a ConceptNet-compatible service consulted for terms the snapshot misses.
pub const ENDPOINT_ENV: &str = "ONTOGOAL_CONCEPTNET_URL";

/// `kitchen_range` → `kitchen range`.
pub fn normalize_term(s: &str) -> String {
    s.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Annotation lookups: a pinned snapshot first, then an optional live endpoint.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSource {
    snapshot: BTreeMap<String, Vec<Annotation>>,
    endpoint: Option<String>,
}

impl AnnotationSource {
    pub fn empty() -> Self {
        AnnotationSource::default()
    }

    /// Parses `{term: [{"rel": ..., "val": ...}]}`.
    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let raw: BTreeMap<String, Vec<Annotation>> = serde_json::from_str(text)?;
        let mut snapshot: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
        for (term, list) in raw {
            let entry = snapshot.entry(normalize_term(&term)).or_default();
            for a in list {
                if !entry.contains(&a) {
                    entry.push(a);
                }
            }
        }
        Ok(AnnotationSource {
            snapshot,
            endpoint: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, OntologyError> {
        let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn with_endpoint(mut self, url: Option<String>) -> Self {
        self.endpoint = url;
        self
    }

    /// Picks up the endpoint from the environment, if set.
    pub fn with_env_endpoint(self) -> Self {
        let url = std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty());
        self.with_endpoint(url)
    }

    pub fn len(&self) -> usize {
        self.snapshot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshot.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.snapshot.keys().map(String::as_str)
    }

    /// Depth-one edges for `term`. A miss with an unreachable endpoint only warns.
    pub fn lookup(&self, term: &str) -> Vec<Annotation> {
        let key = normalize_term(term);
        if let Some(list) = self.snapshot.get(&key) {
            return list.clone();
        }
        match &self.endpoint {
            Some(url) => fetch(url, &key).unwrap_or_else(|e| {
                log::warn!("annotation fetch for `{key}` failed: {e}");
                Vec::new()
            }),
            None => Vec::new(),
        }
    }
}

#[cfg(feature = "conceptnet-fetch")]
fn fetch(endpoint: &str, term: &str) -> Result<Vec<Annotation>, String> {
    let slug = term.replace(' ', "_");
    let url = format!("{}/c/en/{slug}?limit=100", endpoint.trim_end_matches('/'));
    let body: serde_json::Value = reqwest::blocking::get(&url)
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.json())
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for edge in body["edges"].as_array().into_iter().flatten() {
        let start = edge["start"]["label"].as_str().unwrap_or_default();
        if normalize_term(start) != term {
            continue;
        }
        let Some(rel) = edge["rel"]["label"].as_str().and_then(|r| r.parse::<Relation>().ok()) else {
            continue;
        };
        if let Some(end) = edge["end"]["label"].as_str() {
            let a = Annotation::new(rel, &end.to_lowercase());
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    Ok(out)
}

#[cfg(not(feature = "conceptnet-fetch"))]
fn fetch(_endpoint: &str, _term: &str) -> Result<Vec<Annotation>, String> {
    Err("built without the conceptnet-fetch feature".to_string())
}

/// Attaches a `uri` self-annotation and the source's edges to every concept
/// and property name. Idempotent.
pub fn enrich(ontology: &Ontology, source: &AnnotationSource) -> Ontology {
    let mut out = ontology.clone();
    for name in ontology.annotated_names() {
        out.annotate(&name, Annotation::new(Relation::Uri, &name));
        for a in source.lookup(&name) {
            out.annotate(&name, a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::build_class_ontology;
    use crate::task::ClassHierarchy;

    fn source() -> AnnotationSource {
        AnnotationSource::from_json(
            r#"{"kitchen_range": [{"rel": "synonym", "val": "stove"}],
                "Television": [{"rel": "IsA", "val": "display device"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn keys_are_normalized() {
        let s = source();
        assert_eq!(s.lookup("kitchen range"), s.lookup("KITCHEN_RANGE"));
        assert_eq!(s.lookup("television")[0].rel, Relation::IsA);
        assert!(s.lookup("zebra").is_empty());
    }

    #[test]
    fn enrichment_adds_uri_and_edges_once() {
        let classes = ClassHierarchy::from_entries([("television", "thing"), ("zebra", "thing")]).unwrap();
        let o = build_class_ontology("x", &classes);
        let once = enrich(&o, &source());
        assert_eq!(once.annotations("zebra"), [Annotation::new(Relation::Uri, "zebra")]);
        assert_eq!(once.annotations("television").len(), 2);
        assert_eq!(enrich(&once, &source()), once);
    }

    #[test]
    fn bad_relation_is_rejected() {
        assert!(AnnotationSource::from_json(r#"{"a": [{"rel": "likes", "val": "b"}]}"#).is_err());
    }

    #[test]
    fn unreachable_endpoint_degrades_to_empty() {
        let s = AnnotationSource::empty().with_endpoint(Some("http://127.0.0.1:9".to_string()));
        assert!(s.lookup("anything").is_empty());
    }
}
