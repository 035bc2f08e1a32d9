use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WorldState;
use crate::task::{Assignment, PlanningTask};

/// Observed assignments the expected world does not share.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiscrepancySet {
    pub entries: Vec<Assignment>,
}

impl DiscrepancySet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Objects mentioned by some entry that `task` does not declare, in order
    /// of first mention.
    pub fn unknown_objects(&self, task: &PlanningTask) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.entries {
            for o in &a.var.objects {
                if task.class_of(o).is_none() && !out.contains(o) {
                    out.push(o.clone());
                }
            }
        }
        out
    }
}

/// Entries `(v, val)` with `observed(v) = val` and `expected(v) != val`.
pub fn detect_discrepancy(observed: &WorldState, expected: &WorldState) -> DiscrepancySet {
    let mut entries: Vec<Assignment> = observed
        .facts
        .difference(&expected.facts)
        .map(|v| Assignment::new(v.clone(), true))
        .chain(
            expected
                .facts
                .difference(&observed.facts)
                .map(|v| Assignment::new(v.clone(), false)),
        )
        .collect();
    entries.sort();
    DiscrepancySet { entries }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    NewObjectOfNewClass { object: String, class: String },
    NewObjectOfKnownClass { object: String, class: String },
    StateChange,
    Unresolved { object: String },
}

/// Classifies each unknown object of `set`; a set over known objects only is a
/// plain state change.
pub fn classify_discrepancy(
    set: &DiscrepancySet,
    task: &PlanningTask,
    oracle: &BTreeMap<String, String>,
) -> Vec<Classification> {
    let unknown = set.unknown_objects(task);
    if unknown.is_empty() {
        return vec![Classification::StateChange];
    }
    unknown
        .into_iter()
        .map(|object| match oracle.get(&object) {
            None => {
                log::warn!("no class known for new object `{object}`");
                Classification::Unresolved { object }
            }
            Some(class) if task.domain.classes.contains(class) => Classification::NewObjectOfKnownClass {
                object,
                class: class.clone(),
            },
            Some(class) => Classification::NewObjectOfNewClass {
                object,
                class: class.clone(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_task, Variable};

    #[test]
    fn same_state_has_no_discrepancy() {
        let mut s = WorldState::default();
        s.set(&Variable::new("p", &["a"]), true);
        assert!(detect_discrepancy(&s, &s).is_empty());
    }

    #[test]
    fn lost_fact_is_reported_false() {
        let mut expected = WorldState::default();
        let v = Variable::new("p", &["a"]);
        expected.set(&v, true);
        let d = detect_discrepancy(&WorldState::default(), &expected);
        assert_eq!(d.entries, vec![Assignment::new(v, false)]);
    }

    #[test]
    fn classification_cases() {
        let task = parse_task("(:classes box - thing) (:patterns (at box))", "(:objects b1 - box)").unwrap();
        let set = |o: &str| DiscrepancySet {
            entries: vec![Assignment::new(Variable::new("at", &[o]), true)],
        };
        let oracle: BTreeMap<String, String> = [("b2", "box"), ("c1", "crate")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(classify_discrepancy(&set("b1"), &task, &oracle), [Classification::StateChange]);
        assert!(matches!(
            &classify_discrepancy(&set("b2"), &task, &oracle)[0],
            Classification::NewObjectOfKnownClass { class, .. } if class == "box"
        ));
        assert!(matches!(
            &classify_discrepancy(&set("c1"), &task, &oracle)[0],
            Classification::NewObjectOfNewClass { class, .. } if class == "crate"
        ));
        assert!(matches!(
            &classify_discrepancy(&set("zz"), &task, &oracle)[0],
            Classification::Unresolved { .. }
        ));
    }
}
