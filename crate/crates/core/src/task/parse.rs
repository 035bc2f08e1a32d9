use indexmap::IndexMap;

use super::sexpr::{read_all, Pos, Sexp};
use super::*;

type Result<T> = std::result::Result<T, TaskError>;

/// Classes, patterns and action heads: the public vocabulary of a task.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub classes: ClassHierarchy,
    pub patterns: Vec<Pattern>,
    pub heads: Vec<SchemaHead>,
}

pub fn parse_task(domain_text: &str, problem_text: &str) -> Result<PlanningTask> {
    let domain = parse_domain(domain_text)?;
    let (problem, instance) = parse_problem(problem_text)?;
    let task = PlanningTask {
        domain,
        problem,
        instance,
    };
    task.validate()?;
    Ok(task)
}

fn sections(text: &str) -> Result<Vec<(String, Vec<Sexp>, Pos)>> {
    let mut out = Vec::new();
    for form in read_all(text)? {
        let pos = form.pos();
        let items = form
            .as_list()
            .ok_or_else(|| TaskError::syntax(pos, "expected a `(:section ...)` form"))?;
        let head = items
            .first()
            .and_then(Sexp::as_atom)
            .filter(|h| h.starts_with(':'))
            .ok_or_else(|| TaskError::syntax(pos, "section must start with a `:keyword`"))?;
        out.push((head.to_string(), items[1..].to_vec(), pos));
    }
    Ok(out)
}

/// Parses a domain file: `(:classes ...)`, `(:patterns ...)`, `(:actions ...)`.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let mut domain = Domain::default();
    for (name, body, pos) in sections(text)? {
        match name.as_str() {
            ":classes" => domain.classes = parse_classes(&body, pos)?,
            ":patterns" => domain.patterns = body.iter().map(parse_pattern).collect::<Result<_>>()?,
            ":actions" => domain.schemas = body.iter().map(parse_schema).collect::<Result<_>>()?,
            other => return Err(TaskError::syntax(pos, format!("unknown domain section `{other}`"))),
        }
    }
    Ok(domain)
}

/// Parses a task vocabulary file. Accepts `(:heads ...)` for remote tasks that
/// only publish action heads, or a full `(:actions ...)` section.
pub fn parse_signature(text: &str) -> Result<Signature> {
    let mut sig = Signature::default();
    for (name, body, pos) in sections(text)? {
        match name.as_str() {
            ":classes" => sig.classes = parse_classes(&body, pos)?,
            ":patterns" => sig.patterns = body.iter().map(parse_pattern).collect::<Result<_>>()?,
            ":heads" => {
                sig.heads = body
                    .iter()
                    .map(|s| parse_pattern(s).map(|p| SchemaHead { name: p.name, slots: p.slots }))
                    .collect::<Result<_>>()?
            }
            ":actions" => {
                sig.heads = body
                    .iter()
                    .map(|s| parse_schema(s).map(|a| a.head()))
                    .collect::<Result<_>>()?
            }
            other => return Err(TaskError::syntax(pos, format!("unknown section `{other}`"))),
        }
    }
    let slots = sig
        .patterns
        .iter()
        .flat_map(|p| &p.slots)
        .chain(sig.heads.iter().flat_map(|h| &h.slots));
    for slot in slots {
        if let Some(c) = slot.classes().iter().find(|c| !sig.classes.contains(c)) {
            return Err(TaskError::UndefinedClass(c.clone()));
        }
    }
    Ok(sig)
}

fn atom(s: &Sexp) -> Result<&str> {
    s.as_atom()
        .ok_or_else(|| TaskError::syntax(s.pos(), "expected a name"))
}

fn list(s: &Sexp) -> Result<&[Sexp]> {
    s.as_list()
        .ok_or_else(|| TaskError::syntax(s.pos(), "expected a list"))
}

fn parse_classes(body: &[Sexp], pos: Pos) -> Result<ClassHierarchy> {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut it = body.iter();
    while let Some(s) = it.next() {
        let a = atom(s)?;
        if a == "-" {
            let parent = it
                .next()
                .ok_or_else(|| TaskError::syntax(s.pos(), "missing parent after `-`"))?;
            let parent = atom(parent)?;
            if pending.is_empty() {
                return Err(TaskError::syntax(s.pos(), "`-` without class names"));
            }
            entries.extend(pending.drain(..).map(|c| (c, parent.to_string())));
        } else {
            pending.push(a.to_string());
        }
    }
    if let Some(c) = pending.first() {
        return Err(TaskError::syntax(pos, format!("class `{c}` has no parent")));
    }
    ClassHierarchy::from_entries(entries.iter().map(|(c, p)| (c.as_str(), p.as_str())))
}

fn parse_slot(s: &Sexp) -> Result<Slot> {
    match s {
        Sexp::Atom(a, _) => Ok(Slot::single(a)),
        Sexp::List(items, pos) => {
            if items.is_empty() {
                return Err(TaskError::syntax(*pos, "empty class disjunction"));
            }
            Ok(Slot(items.iter().map(|i| atom(i).map(str::to_string)).collect::<Result<_>>()?))
        }
    }
}

fn parse_pattern(s: &Sexp) -> Result<Pattern> {
    let items = list(s)?;
    let name = items
        .first()
        .ok_or_else(|| TaskError::syntax(s.pos(), "empty pattern"))?;
    Ok(Pattern {
        name: atom(name)?.to_string(),
        slots: items[1..].iter().map(parse_slot).collect::<Result<_>>()?,
    })
}

fn parse_term(s: &Sexp) -> Result<Term> {
    let a = atom(s)?;
    match a.strip_prefix('?') {
        Some(idx) => idx
            .parse()
            .map(Term::Param)
            .map_err(|_| TaskError::syntax(s.pos(), format!("bad parameter reference `{a}`"))),
        None => Ok(Term::Object(a.to_string())),
    }
}

fn parse_literal_with<T>(s: &Sexp, arg: impl Fn(&Sexp) -> Result<T>) -> Result<(String, Vec<T>, bool)> {
    let items = list(s)?;
    let head = items
        .first()
        .ok_or_else(|| TaskError::syntax(s.pos(), "empty literal"))?;
    let head = atom(head)?;
    if head == "not" {
        if items.len() != 2 {
            return Err(TaskError::syntax(s.pos(), "`not` takes exactly one literal"));
        }
        let (name, args, value) = parse_literal_with(&items[1], arg)?;
        if !value {
            return Err(TaskError::syntax(s.pos(), "nested `not`"));
        }
        return Ok((name, args, false));
    }
    let args = items[1..].iter().map(arg).collect::<Result<_>>()?;
    Ok((head.to_string(), args, true))
}

fn parse_literal(s: &Sexp) -> Result<Literal> {
    let (pattern, terms, value) = parse_literal_with(s, parse_term)?;
    Ok(Literal {
        pattern,
        terms,
        value,
    })
}

fn parse_assignment(s: &Sexp) -> Result<Assignment> {
    let (pattern, objects, value) = parse_literal_with(s, |a| atom(a).map(str::to_string))?;
    Ok(Assignment {
        var: Variable { pattern, objects },
        value,
    })
}

fn parse_number(s: &Sexp) -> Result<Time> {
    let a = atom(s)?;
    a.parse()
        .map_err(|e: crate::time::ParseTimeError| TaskError::syntax(s.pos(), e.to_string()))
}

fn parse_timed_literal(s: &Sexp) -> Result<TimedLiteral> {
    let items = list(s)?;
    if items.len() != 2 {
        return Err(TaskError::syntax(s.pos(), "expected `(<timing> <literal>)`"));
    }
    let timing = match atom(&items[0])? {
        "at-start" => Timing::AtStart,
        "over-all" => Timing::OverAll,
        "at-end" => Timing::AtEnd,
        other => return Err(TaskError::syntax(items[0].pos(), format!("unknown timing `{other}`"))),
    };
    Ok(TimedLiteral {
        timing,
        literal: parse_literal(&items[1])?,
    })
}

fn parse_schema(s: &Sexp) -> Result<ActionSchema> {
    let items = list(s)?;
    let name = items
        .first()
        .ok_or_else(|| TaskError::syntax(s.pos(), "empty action"))?;
    let name = atom(name)?.to_string();
    let mut pars = None;
    let mut duration = None;
    let mut conds = Vec::new();
    let mut effs = Vec::new();
    let mut i = 1;
    while i < items.len() {
        let key = atom(&items[i])?;
        i += 1;
        match key {
            ":pars" => {
                let slots = items
                    .get(i)
                    .ok_or_else(|| TaskError::syntax(s.pos(), ":pars needs a list"))?;
                pars = Some(list(slots)?.iter().map(parse_slot).collect::<Result<Vec<_>>>()?);
                i += 1;
            }
            ":duration" => {
                let d = items
                    .get(i)
                    .ok_or_else(|| TaskError::syntax(s.pos(), ":duration needs a value"))?;
                duration = Some(parse_duration(d)?);
                i += 1;
            }
            ":cond" | ":eff" => {
                let target = if key == ":cond" { &mut conds } else { &mut effs };
                while let Some(Sexp::List(..)) = items.get(i) {
                    target.push(parse_timed_literal(&items[i])?);
                    i += 1;
                }
            }
            other => {
                return Err(TaskError::syntax(
                    items[i - 1].pos(),
                    format!("unknown action keyword `{other}`"),
                ))
            }
        }
    }
    if effs.iter().any(|e: &TimedLiteral| e.timing == Timing::OverAll) {
        return Err(TaskError::syntax(s.pos(), format!("effects of `{name}` cannot be over-all")));
    }
    Ok(ActionSchema {
        pars: pars.ok_or_else(|| TaskError::syntax(s.pos(), format!("action `{name}` lacks :pars")))?,
        duration: duration.unwrap_or(DurationSpec::Constant(Time::ZERO)),
        name,
        conds,
        effs,
    })
}

fn parse_duration(s: &Sexp) -> Result<DurationSpec> {
    match s {
        Sexp::Atom(..) => Ok(DurationSpec::Constant(parse_number(s)?)),
        Sexp::List(items, pos) => {
            if items.len() < 2 || items[0].as_atom() != Some("lookup") {
                return Err(TaskError::syntax(*pos, "expected `(lookup <pattern> <par-idx>*)`"));
            }
            let params = items[2..]
                .iter()
                .map(|i| {
                    atom(i)?
                        .parse::<usize>()
                        .map_err(|_| TaskError::syntax(i.pos(), "bad parameter index"))
                })
                .collect::<Result<_>>()?;
            Ok(DurationSpec::Lookup {
                pattern: atom(&items[1])?.to_string(),
                params,
            })
        }
    }
}

/// Parses a problem file: `(:objects ...)`, `(:init ...)`, `(:goal ...)`.
pub fn parse_problem(text: &str) -> Result<(Problem, Instance)> {
    let mut problem = Problem::default();
    let mut instance = Instance::default();
    for (name, body, pos) in sections(text)? {
        match name.as_str() {
            ":objects" => problem.objects = parse_objects(&body, pos)?,
            ":init" => {
                for item in &body {
                    parse_init_item(item, &mut instance)?;
                }
            }
            ":goal" => {
                instance.goals = body.iter().map(parse_assignment).collect::<Result<_>>()?
            }
            other => return Err(TaskError::syntax(pos, format!("unknown problem section `{other}`"))),
        }
    }
    Ok((problem, instance))
}

fn parse_objects(body: &[Sexp], pos: Pos) -> Result<IndexMap<String, String>> {
    let mut objects = IndexMap::new();
    let mut pending: Vec<String> = Vec::new();
    let mut it = body.iter();
    while let Some(s) = it.next() {
        let a = atom(s)?;
        if a == "-" {
            let class = it
                .next()
                .ok_or_else(|| TaskError::syntax(s.pos(), "missing class after `-`"))?;
            let class = atom(class)?;
            for o in pending.drain(..) {
                if objects.insert(o.clone(), class.to_string()).is_some() {
                    return Err(TaskError::DuplicateObject(o));
                }
            }
        } else {
            pending.push(a.to_string());
        }
    }
    if let Some(o) = pending.first() {
        return Err(TaskError::syntax(pos, format!("object `{o}` has no class")));
    }
    Ok(objects)
}

fn parse_init_item(s: &Sexp, instance: &mut Instance) -> Result<()> {
    let items = list(s)?;
    match items.first().and_then(Sexp::as_atom) {
        Some("=") => {
            if items.len() != 3 {
                return Err(TaskError::syntax(s.pos(), "expected `(= (<pattern> <objs>*) <num>)`"));
            }
            let a = parse_assignment(&items[1])?;
            if !a.value {
                return Err(TaskError::syntax(items[1].pos(), "numeric variable cannot be negated"));
            }
            instance.numeric.insert(a.var, parse_number(&items[2])?);
        }
        Some("at") if items.len() == 3 && items[2].as_list().is_some() => {
            let time = parse_number(&items[1])?;
            if time.is_negative() {
                return Err(TaskError::syntax(items[1].pos(), "timed literal before time zero"));
            }
            instance.timed.push(TimedAssignment {
                time,
                assignment: parse_assignment(&items[2])?,
            });
        }
        _ => instance.init.push(parse_assignment(s)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOMAIN: &str = "
        (:classes agent item location - thing robot - agent box - item)
        (:patterns (at (robot box) location) (free robot) (dist location location))
        (:actions
          (go :pars (robot location location) :duration (lookup dist 1 2)
              :cond (at-start (at ?0 ?1)) (over-all (free ?0))
              :eff (at-start (not (at ?0 ?1))) (at-end (at ?0 ?2))))";
    const PROBLEM: &str = "
        (:objects r1 - robot l1 l2 - location b - box)
        (:init (at r1 l1) (free r1) (= (dist l1 l2) 2.5) (at 600 (not (free r1))))
        (:goal (at r1 l2))";

    #[test]
    fn parses_small_task() {
        let task = parse_task(DOMAIN, PROBLEM).unwrap();
        assert_eq!(task.domain.classes.len(), 6);
        assert_eq!(task.domain.patterns.len(), 3);
        let go = &task.domain.schemas[0];
        assert_eq!(go.conds.len(), 2);
        assert!(!go.effs[0].literal.value);
        assert_eq!(
            go.duration,
            DurationSpec::Lookup {
                pattern: "dist".into(),
                params: vec![1, 2]
            }
        );
        assert_eq!(task.instance.timed[0].time, Time::from_int(600));
        assert_eq!(task.instance.numeric[&Variable::new("dist", &["l1", "l2"])], "2.5".parse().unwrap());
    }

    #[test]
    fn empty_patterns_section_is_valid() {
        let task = parse_task("(:classes a - thing) (:patterns)", "(:objects x - a)").unwrap();
        assert!(task.domain.patterns.is_empty());
    }

    #[test]
    fn undefined_object_class_is_named() {
        let err = parse_task(DOMAIN, "(:objects t - toaster)").unwrap_err();
        assert_eq!(err, TaskError::UndefinedClass("toaster".into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_task("(:classes a - thing)\n(:patterns (p a)", "").unwrap_err();
        assert!(matches!(err, TaskError::Syntax { line: 2, col: 1, .. }), "{err:?}");
        let err = parse_domain("(:classes a b)").unwrap_err();
        assert!(matches!(err, TaskError::Syntax { .. }));
        let err = parse_domain("(:actions (x :pars () :cond (sometime (p))))").unwrap_err();
        assert!(err.to_string().contains("unknown timing"), "{err}");
    }

    #[test]
    fn undefined_pattern_in_goal() {
        let err = parse_task(DOMAIN, "(:objects r1 - robot) (:goal (flying r1))").unwrap_err();
        assert_eq!(err, TaskError::UndefinedPattern("flying".into()));
    }

    #[test]
    fn signature_accepts_heads() {
        let sig = parse_signature(
            "(:classes robot item - thing phone - item)
             (:patterns (battery phone))
             (:heads (fix robot (phone item)))",
        )
        .unwrap();
        assert_eq!(sig.heads[0].slots[1].classes(), ["phone", "item"]);
        let err = parse_signature("(:classes a - thing) (:heads (x b))").unwrap_err();
        assert_eq!(err, TaskError::UndefinedClass("b".into()));
    }
}
