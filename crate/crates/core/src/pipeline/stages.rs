use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::alignment::{integrate_class, integrate_object, neighbourhood_align, AlignConfig, AlignError, Placement};
use crate::ontology::{
    build_class_ontology, enrich, extend_ontology, AnnotationSource, Ontology, OntologyError, RemoteTaskInfo,
};
use crate::planner::PlanError;
use crate::sim::WorldState;
use crate::similarity::{tsm_with, vsm_similarity, TsmConfig, TsmReport};
use crate::task::{Assignment, Plan, PlanningTask, Variable};

/// Remotes that look like the local task, with every score computed.
#[derive(Debug, Clone, Default)]
pub struct Prefilter {
    pub scores: BTreeMap<String, f64>,
    pub selected: Vec<RemoteTaskInfo>,
}

/// VSM between the enriched local class ontology and each remote's.
pub fn stage1_prefilter(
    local: &Ontology,
    remotes: &[RemoteTaskInfo],
    source: &AnnotationSource,
    threshold: f64,
) -> Prefilter {
    let mut out = Prefilter::default();
    for r in remotes {
        let v = vsm_similarity(local, &enrich(&r.class_ontology(), source));
        log::info!("vsm {} = {v:.4}", r.agent_id);
        out.scores.insert(r.agent_id.clone(), v);
        if v >= threshold {
            out.selected.push(r.clone());
        }
    }
    out
}

/// Local ontology with classes, patterns and action heads, enriched.
pub fn local_ontology(task: &PlanningTask, source: &AnnotationSource) -> Result<Ontology, OntologyError> {
    let base = build_class_ontology("local", &task.domain.classes);
    let ext = extend_ontology(&base, &task.domain.patterns, &task.domain.heads())?;
    Ok(enrich(&ext, source))
}

pub struct Assessment {
    /// Agents of the prefiltered set that know the class.
    pub candidates: Vec<String>,
    pub reports: BTreeMap<String, TsmReport>,
    /// Best candidate reaching the threshold.
    pub chosen: Option<String>,
    pub local: Ontology,
    pub remotes: BTreeMap<String, Ontology>,
}

impl Assessment {
    pub fn best(&self) -> Option<(&str, &TsmReport)> {
        let mut best: Option<(&str, &TsmReport)> = None;
        for id in &self.candidates {
            let r = &self.reports[id];
            if best.is_none_or(|(_, b)| r.final_value > b.final_value) {
                best = Some((id, r));
            }
        }
        best
    }
}

/// TSM against every prefiltered remote that declares `class`.
pub fn stage2_assess(
    task: &PlanningTask,
    prefiltered: &[RemoteTaskInfo],
    class: &str,
    source: &AnnotationSource,
    cfg: &TsmConfig,
) -> Result<Assessment, OntologyError> {
    let local = local_ontology(task, source)?;
    let mut a = Assessment {
        candidates: Vec::new(),
        reports: BTreeMap::new(),
        chosen: None,
        local,
        remotes: BTreeMap::new(),
    };
    for r in prefiltered.iter().filter(|r| r.classes.contains(class)) {
        let remote = enrich(&r.extended_ontology()?, source);
        let report = tsm_with(&a.local, &remote, cfg);
        log::info!("tsm {} = {:.4}", r.agent_id, report.final_value);
        a.candidates.push(r.agent_id.clone());
        a.reports.insert(r.agent_id.clone(), report);
        a.remotes.insert(r.agent_id.clone(), remote);
    }
    a.chosen = a
        .best()
        .filter(|(_, r)| r.manageable)
        .map(|(id, _)| id.to_string());
    Ok(a)
}

/// Aligns `class` and, when placed, adds it and `object` to the task.
pub fn stage3_integrate(
    task: &PlanningTask,
    local: &Ontology,
    remote: &Ontology,
    class: &str,
    object: &str,
    cfg: &AlignConfig,
) -> Result<(Placement, Option<(PlanningTask, Ontology)>), AlignError> {
    let placement = neighbourhood_align(local, remote, class, cfg);
    if placement.is_rejected() {
        return Ok((placement, None));
    }
    let (t, o) = integrate_class(task, local, &placement)?;
    let t = integrate_object(&t, object, class)?;
    Ok((placement, Some((t, o))))
}

/// Initial-state facts about `object`: the triggering discrepancy entries plus
/// whatever the information source reports for patterns that admit it.
/// Patterns without an answer stay false.
pub fn stage4_create_variables(
    task: &PlanningTask,
    object: &str,
    discrepancy: &[Assignment],
    info: &[Assignment],
) -> (PlanningTask, Vec<Assignment>) {
    let mut t = task.clone();
    let Some(class) = task.class_of(object) else {
        return (t, Vec::new());
    };
    let admitting: Vec<&str> = task
        .domain
        .patterns
        .iter()
        .filter(|p| p.slots.iter().any(|s| s.admits_class(&task.domain.classes, class)))
        .map(|p| p.name.as_str())
        .collect();
    let mut added: Vec<Assignment> = Vec::new();
    let push = |a: &Assignment, added: &mut Vec<Assignment>| {
        if added.iter().any(|x| x.var == a.var) {
            return;
        }
        match task.check_variable(&a.var) {
            Ok(()) => added.push(a.clone()),
            Err(e) => log::warn!("ignoring {a}: {e}"),
        }
    };
    for a in discrepancy.iter().filter(|a| a.var.mentions(object)) {
        push(a, &mut added);
    }
    for a in info.iter().filter(|a| a.var.mentions(object)) {
        if admitting.contains(&a.var.pattern.as_str()) {
            push(a, &mut added);
        } else {
            log::warn!("ignoring {a}: `{}` does not admit `{object}`", a.var.pattern);
        }
    }
    for p in &admitting {
        if !added.iter().any(|a| a.var.pattern == *p) {
            log::info!("no information on `{p}` for `{object}`, assuming false");
        }
    }
    for a in &added {
        t.instance.init.retain(|x| x.var != a.var);
        t.instance.init.push(a.clone());
    }
    (t, added)
}

/// New goals over `object` when its class is, or is a sibling of, the class
/// of an object some goal mentions. One candidate per goal predicate and per
/// argument position that admits the object, modelled on the first goal of
/// that predicate.
pub fn stage5_formulate_goals(task: &PlanningTask, object: &str) -> Vec<Assignment> {
    let classes = &task.domain.classes;
    let Some(class) = task.class_of(object) else {
        return Vec::new();
    };
    let goals = &task.instance.goals;
    let related = goals.iter().flat_map(|g| &g.var.objects).any(|o| match task.class_of(o) {
        Some(c) => c == class || classes.siblings(c).contains(&class),
        None => false,
    });
    if !related {
        return Vec::new();
    }
    let mut out: Vec<Assignment> = Vec::new();
    let mut seen: Vec<(&str, bool)> = Vec::new();
    for g in goals {
        let key = (g.var.pattern.as_str(), g.value);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let Some(pattern) = task.domain.pattern(&g.var.pattern) else {
            continue;
        };
        for (i, slot) in pattern.slots.iter().enumerate() {
            if !slot.admits_class(classes, class) {
                continue;
            }
            let mut objects = g.var.objects.clone();
            objects[i] = object.to_string();
            let cand = Assignment::new(
                Variable {
                    pattern: g.var.pattern.clone(),
                    objects,
                },
                g.value,
            );
            if !goals.contains(&cand) && !out.contains(&cand) {
                out.push(cand);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opportunity {
    /// Candidates the plan achieves.
    pub accepted: Vec<Assignment>,
    /// Original goals still open when the plan was made.
    pub remaining: Vec<Assignment>,
    pub plan: Option<Plan>,
}

/// Tries all candidates together, then each on its own, always alongside the
/// original goals not yet achieved in `state`.
pub fn identify_opportunity<F>(
    task: &PlanningTask,
    candidates: &[Assignment],
    state: &WorldState,
    mut solver: F,
) -> Opportunity
where
    F: FnMut(&PlanningTask, &WorldState) -> Result<Plan, PlanError>,
{
    let remaining: Vec<Assignment> = state.unmet(&task.instance.goals).into_iter().cloned().collect();
    let mut attempts: Vec<Vec<Assignment>> = vec![candidates.to_vec()];
    if candidates.len() > 1 {
        attempts.extend(candidates.iter().map(|c| vec![c.clone()]));
    }
    for goals in attempts {
        let mut t = task.clone();
        t.instance.goals = remaining.iter().chain(&goals).cloned().collect();
        match solver(&t, state) {
            Ok(plan) => {
                return Opportunity {
                    accepted: goals,
                    remaining,
                    plan: Some(plan),
                }
            }
            Err(e) => log::info!(
                "no plan for {}: {e}",
                goals.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            ),
        }
    }
    Opportunity {
        accepted: Vec::new(),
        remaining,
        plan: None,
    }
}
