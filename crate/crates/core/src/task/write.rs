use std::fmt::Write as _;

use super::*;

/// Renders a task back into `(domain-text, problem-text)`.
pub fn serialize_task(task: &PlanningTask) -> (String, String) {
    (write_domain(&task.domain), write_problem(task))
}

fn slot_text(slot: &Slot) -> String {
    match slot.classes() {
        [one] => one.clone(),
        many => format!("({})", many.join(" ")),
    }
}

fn slots_text(slots: &[Slot]) -> String {
    slots.iter().map(slot_text).collect::<Vec<_>>().join(" ")
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Param(i) => format!("?{i}"),
        Term::Object(o) => o.clone(),
    }
}

fn literal_text(l: &Literal) -> String {
    let mut s = format!("({}", l.pattern);
    for t in &l.terms {
        s.push(' ');
        s.push_str(&term_text(t));
    }
    s.push(')');
    if l.value {
        s
    } else {
        format!("(not {s})")
    }
}

fn head_text(name: &str, slots: &[Slot]) -> String {
    if slots.is_empty() {
        format!("({name})")
    } else {
        format!("({name} {})", slots_text(slots))
    }
}

pub(crate) fn write_classes(out: &mut String, classes: &ClassHierarchy) {
    out.push_str("(:classes");
    let entries: Vec<(&str, &str)> = classes.entries().collect();
    let mut i = 0;
    while i < entries.len() {
        let parent = entries[i].1;
        out.push_str("\n ");
        while i < entries.len() && entries[i].1 == parent {
            let _ = write!(out, " {}", entries[i].0);
            i += 1;
        }
        let _ = write!(out, " - {parent}");
    }
    out.push_str(")\n");
}

pub(crate) fn write_patterns(out: &mut String, patterns: &[Pattern]) {
    out.push_str("(:patterns");
    for p in patterns {
        let _ = write!(out, "\n  {}", head_text(&p.name, &p.slots));
    }
    out.push_str(")\n");
}

fn write_heads(out: &mut String, heads: &[SchemaHead]) {
    out.push_str("(:heads");
    for h in heads {
        let _ = write!(out, "\n  {}", head_text(&h.name, &h.slots));
    }
    out.push_str(")\n");
}

/// Renders a public signature in the remote-task format.
pub fn write_signature(sig: &Signature) -> String {
    let mut out = String::new();
    write_classes(&mut out, &sig.classes);
    if !sig.patterns.is_empty() {
        write_patterns(&mut out, &sig.patterns);
    }
    if !sig.heads.is_empty() {
        write_heads(&mut out, &sig.heads);
    }
    out
}

pub fn write_domain(domain: &Domain) -> String {
    let mut out = String::new();
    write_classes(&mut out, &domain.classes);
    write_patterns(&mut out, &domain.patterns);
    out.push_str("(:actions");
    for a in &domain.schemas {
        let _ = write!(out, "\n  ({}\n    :pars ({})", a.name, slots_text(&a.pars));
        match &a.duration {
            DurationSpec::Constant(t) => {
                let _ = write!(out, "\n    :duration {t}");
            }
            DurationSpec::Lookup { pattern, params } => {
                let _ = write!(out, "\n    :duration (lookup {pattern}");
                for p in params {
                    let _ = write!(out, " {p}");
                }
                out.push(')');
            }
        }
        for (key, items) in [(":cond", &a.conds), (":eff", &a.effs)] {
            if items.is_empty() {
                continue;
            }
            let _ = write!(out, "\n    {key}");
            for tl in items {
                let _ = write!(out, "\n      ({} {})", tl.timing.keyword(), literal_text(&tl.literal));
            }
        }
        out.push(')');
    }
    out.push_str(")\n");
    out
}

pub fn write_problem(task: &PlanningTask) -> String {
    let mut out = String::from("(:objects");
    let objs: Vec<(&String, &String)> = task.problem.objects.iter().collect();
    let mut i = 0;
    while i < objs.len() {
        let class = objs[i].1;
        out.push_str("\n ");
        while i < objs.len() && objs[i].1 == class {
            let _ = write!(out, " {}", objs[i].0);
            i += 1;
        }
        let _ = write!(out, " - {class}");
    }
    out.push_str(")\n(:init");
    let inst = &task.instance;
    for a in &inst.init {
        let _ = write!(out, "\n  {a}");
    }
    for (var, value) in &inst.numeric {
        let _ = write!(out, "\n  (= {var} {value})");
    }
    for t in &inst.timed {
        let _ = write!(out, "\n  (at {} {})", t.time, t.assignment);
    }
    out.push_str(")\n(:goal");
    for g in &inst.goals {
        let _ = write!(out, "\n  {g}");
    }
    out.push_str(")\n");
    out
}
