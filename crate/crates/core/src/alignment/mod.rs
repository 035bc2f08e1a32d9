//! Placing a new class in the local taxonomy by matching its remote parent or,
//! failing that, its remote siblings, then extending the task with it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ontology::{Ontology, OntologyError, PropertyKind};
use crate::similarity::{tsm_concept, tsm_corpus, Corpus};
use crate::task::{ClassHierarchy, PlanningTask, Slot, TaskError, ROOT_CLASS};

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("class `{0}` is already known")]
    DuplicateClass(String),
    #[error("object `{0}` is already known")]
    DuplicateObject(String),
    #[error("class `{0}` was not placed")]
    Rejected(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMode {
    ParentMatch,
    SiblingVote,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub local: String,
    pub remote: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub class: String,
    pub mode: PlacementMode,
    pub parent: Option<String>,
    pub evidence: Vec<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sibling_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Placement {
    fn rejected(class: &str, diagnostic: impl Into<String>) -> Self {
        Placement {
            class: class.to_string(),
            mode: PlacementMode::Rejected,
            parent: None,
            evidence: Vec::new(),
            sibling_fraction: None,
            diagnostic: Some(diagnostic.into()),
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.mode == PlacementMode::Rejected
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Concept similarity from which two concepts match.
    pub match_cutoff: f64,
    /// Share of remote siblings that must match.
    pub sibling_threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            match_cutoff: 0.6,
            sibling_threshold: 0.5,
        }
    }
}

/// Best local concept for `remote_concept`; the first one wins ties.
fn best_local(
    local: &Ontology,
    remote: &Ontology,
    remote_concept: &str,
    corpus: &Corpus,
    include_root: bool,
) -> Option<(String, f64)> {
    let mut best: Option<(String, f64)> = None;
    for c in local.concepts() {
        if c == ROOT_CLASS && !include_root {
            continue;
        }
        let v = tsm_concept(local.term(c), remote.term(remote_concept), corpus);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((c.to_string(), v));
        }
    }
    best
}

struct Vote {
    parent: String,
    fraction: f64,
    evidence: Vec<Evidence>,
}

fn sibling_vote(
    local: &Ontology,
    remote: &Ontology,
    class: &str,
    corpus: &Corpus,
    cfg: &AlignConfig,
) -> Result<Vote, String> {
    let siblings = remote.classes.siblings(class);
    if siblings.is_empty() {
        return Err(format!("`{class}` has no siblings in `{}`", remote.name));
    }
    let mut evidence = Vec::new();
    for s in &siblings {
        if let Some((c, v)) = best_local(local, remote, s, corpus, false) {
            if v >= cfg.match_cutoff {
                evidence.push(Evidence {
                    local: c,
                    remote: s.to_string(),
                    similarity: v,
                });
            }
        }
    }
    let fraction = evidence.len() as f64 / siblings.len() as f64;
    if evidence.is_empty() || fraction < cfg.sibling_threshold {
        return Err(format!(
            "{} of {} siblings of `{class}` matched",
            evidence.len(),
            siblings.len()
        ));
    }
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &evidence {
        if let Some(p) = local.parent(&e.local) {
            *votes.entry(p).or_default() += 1;
        }
    }
    let (parent, n) = votes
        .iter()
        .max_by_key(|(_, n)| **n)
        .map(|(p, n)| (p.to_string(), *n))
        .ok_or_else(|| format!("matched siblings of `{class}` have no local parent"))?;
    if n * 2 <= evidence.len() {
        return Err(format!("matched siblings of `{class}` disagree on a parent"));
    }
    Ok(Vote {
        parent,
        fraction,
        evidence,
    })
}

/// Where `class` of `remote` goes in `local`.
///
/// A matching remote parent decides, unless the siblings agree on a more
/// specific local concept below it.
pub fn neighbourhood_align(local: &Ontology, remote: &Ontology, class: &str, cfg: &AlignConfig) -> Placement {
    if !remote.contains(class) {
        return Placement::rejected(class, format!("`{class}` is not in `{}`", remote.name));
    }
    if local.contains(class) {
        return Placement::rejected(class, format!("`{class}` is already in `{}`", local.name));
    }
    let corpus = tsm_corpus(&[local, remote]);
    let parent_match = remote.parent(class).and_then(|rp| {
        best_local(local, remote, rp, &corpus, true)
            .filter(|(_, v)| *v >= cfg.match_cutoff)
            .map(|(c, v)| (c, rp.to_string(), v))
    });
    let vote = sibling_vote(local, remote, class, &corpus, cfg);
    match (parent_match, vote) {
        (Some((lp, _, _)), Ok(v)) if lp != v.parent && local.classes.subsumes(&lp, &v.parent) => Placement {
            class: class.to_string(),
            mode: PlacementMode::SiblingVote,
            parent: Some(v.parent),
            evidence: v.evidence,
            sibling_fraction: Some(v.fraction),
            diagnostic: None,
        },
        (Some((lp, rp, sim)), _) => Placement {
            class: class.to_string(),
            mode: PlacementMode::ParentMatch,
            parent: Some(lp.clone()),
            evidence: vec![Evidence {
                local: lp,
                remote: rp,
                similarity: sim,
            }],
            sibling_fraction: None,
            diagnostic: None,
        },
        (None, Ok(v)) => Placement {
            class: class.to_string(),
            mode: PlacementMode::SiblingVote,
            parent: Some(v.parent),
            evidence: v.evidence,
            sibling_fraction: Some(v.fraction),
            diagnostic: None,
        },
        (None, Err(why)) => Placement::rejected(class, why),
    }
}

/// Slots that should also admit `class` placed under `parent`: those listing
/// a sibling but neither the parent nor one of its ancestors.
fn wants_class(slot: &[String], classes: &ClassHierarchy, class: &str, parent: &str) -> bool {
    let covered = slot.iter().any(|s| classes.subsumes(s, parent));
    let siblings = classes.siblings(class);
    !covered && slot.iter().any(|s| siblings.contains(&s.as_str()))
}

/// Adds the placed class to the task and the ontology, widening slots that
/// enumerate its siblings.
pub fn integrate_class(
    task: &PlanningTask,
    local: &Ontology,
    placement: &Placement,
) -> Result<(PlanningTask, Ontology), AlignError> {
    let class = placement.class.as_str();
    let parent = match (&placement.mode, &placement.parent) {
        (PlacementMode::Rejected, _) | (_, None) => return Err(AlignError::Rejected(class.to_string())),
        (_, Some(p)) => p.as_str(),
    };
    if task.domain.classes.contains(class) || local.contains(class) {
        return Err(AlignError::DuplicateClass(class.to_string()));
    }
    let mut t = task.clone();
    let mut o = local.clone();
    t.domain.classes.add(class, parent)?;
    o.insert_concept(class, parent)?;
    let classes = t.domain.classes.clone();
    let mut widen = |name: &str, kind: PropertyKind, i: usize, slot: &mut Slot| {
        if wants_class(&slot.0, &classes, class, parent) {
            slot.0.push(class.to_string());
            o.extend_slot(name, kind, i, class);
        }
    };
    for p in &mut t.domain.patterns {
        for (i, s) in p.slots.iter_mut().enumerate() {
            widen(&p.name, PropertyKind::Pattern, i, s);
        }
    }
    for a in &mut t.domain.schemas {
        for (i, s) in a.pars.iter_mut().enumerate() {
            widen(&a.name, PropertyKind::SchemaHead, i, s);
        }
    }
    t.validate()?;
    Ok((t, o))
}

/// Declares `object` of `class`, appended after the existing objects.
pub fn integrate_object(task: &PlanningTask, object: &str, class: &str) -> Result<PlanningTask, AlignError> {
    if task.problem.objects.contains_key(object) {
        return Err(AlignError::DuplicateObject(object.to_string()));
    }
    if !task.domain.classes.contains(class) {
        return Err(AlignError::UnknownClass(class.to_string()));
    }
    let mut t = task.clone();
    t.problem.objects.insert(object.to_string(), class.to_string());
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{build_class_ontology, Annotation, Relation};

    fn ont(name: &str, entries: &[(&str, &str)]) -> Ontology {
        build_class_ontology(name, &ClassHierarchy::from_entries(entries.iter().copied()).unwrap())
    }

    #[test]
    fn synonym_parent_matches_directly() {
        let local = ont("l", &[("appliance", "thing"), ("oven", "appliance")]);
        let mut remote = ont("r", &[("device", "thing"), ("toaster", "device")]);
        remote.annotate("device", Annotation::new(Relation::Synonym, "appliance"));
        let p = neighbourhood_align(&local, &remote, "toaster", &AlignConfig::default());
        assert_eq!(p.mode, PlacementMode::ParentMatch);
        assert_eq!(p.parent.as_deref(), Some("appliance"));
    }

    #[test]
    fn nothing_matching_is_rejected() {
        let local = ont("l", &[("appliance", "thing")]);
        let remote = ont("r", &[("zzz", "thing"), ("qqq", "zzz"), ("toaster", "zzz")]);
        let p = neighbourhood_align(&local, &remote, "toaster", &AlignConfig::default());
        assert!(p.is_rejected());
        assert!(p.diagnostic.is_some());
    }

    #[test]
    fn siblings_refine_a_generic_parent() {
        let local = ont(
            "l",
            &[("item", "thing"), ("appliance", "item"), ("fridge", "appliance"), ("tv", "appliance")],
        );
        let remote = ont(
            "r",
            &[("item", "thing"), ("fridge", "item"), ("tv", "item"), ("stove", "item"), ("lamp", "item")],
        );
        let p = neighbourhood_align(&local, &remote, "stove", &AlignConfig::default());
        assert_eq!(p.mode, PlacementMode::SiblingVote);
        assert_eq!(p.parent.as_deref(), Some("appliance"));
        assert!((p.sibling_fraction.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejected_placement_cannot_integrate() {
        let task = PlanningTask::default();
        let o = Ontology::new("x");
        let p = Placement::rejected("a", "no");
        assert!(matches!(integrate_class(&task, &o, &p), Err(AlignError::Rejected(_))));
    }
}
