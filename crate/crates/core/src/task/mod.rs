//! Temporal planning task model: classes, patterns, durative action schemas,
//! objects, initial state (with timed literals) and goals.

mod ground;
mod parse;
mod plan;
pub mod sexpr;
mod write;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::time::Time;

pub use ground::{ground_actions, ground_step, GroundAction, GroundLiteral};
pub use parse::{parse_domain, parse_problem, parse_signature, parse_task, Signature};
pub use plan::{parse_plan, Plan, PlanStep};
pub use write::{serialize_task, write_domain, write_problem, write_signature};

/// Root of every class hierarchy.
pub const ROOT_CLASS: &str = "thing";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undefined class `{0}`")]
    UndefinedClass(String),
    #[error("undefined pattern `{0}`")]
    UndefinedPattern(String),
    #[error("undefined object `{0}`")]
    UndefinedObject(String),
    #[error("undefined action schema `{0}`")]
    UndefinedSchema(String),
    #[error("class `{0}` declared twice")]
    DuplicateClass(String),
    #[error("object `{0}` declared twice")]
    DuplicateObject(String),
    #[error("class hierarchy has a cycle through `{0}`")]
    Cycle(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("slot {slot} of `{pattern}` does not admit `{object}` (class `{class}`)")]
    ClassMismatch {
        pattern: String,
        slot: usize,
        object: String,
        class: String,
    },
    #[error("parameter index ?{index} out of range in action `{action}`")]
    ParamIndex { action: String, index: usize },
    #[error("numeric variable {0} has no initial value")]
    MissingNumeric(Variable),
}

impl TaskError {
    pub(crate) fn syntax(pos: sexpr::Pos, msg: impl Into<String>) -> Self {
        TaskError::Syntax {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }
}

impl From<sexpr::SyntaxError> for TaskError {
    fn from(e: sexpr::SyntaxError) -> Self {
        TaskError::syntax(e.pos, e.msg)
    }
}

/// Class forest rooted at [`ROOT_CLASS`]. Declaration order is preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHierarchy {
    parents: IndexMap<String, Option<String>>,
}

impl Default for ClassHierarchy {
    fn default() -> Self {
        Self::new()
    }
}

impl ClassHierarchy {
    pub fn new() -> Self {
        let mut parents = IndexMap::new();
        parents.insert(ROOT_CLASS.to_string(), None);
        ClassHierarchy { parents }
    }

    /// A hierarchy without even the root, for empty ontologies.
    pub fn empty() -> Self {
        ClassHierarchy {
            parents: IndexMap::new(),
        }
    }

    /// Adds `class` under `parent`. The parent must already exist.
    pub fn add(&mut self, class: &str, parent: &str) -> Result<(), TaskError> {
        if self.parents.contains_key(class) {
            return Err(TaskError::DuplicateClass(class.to_string()));
        }
        if !self.parents.contains_key(parent) {
            return Err(TaskError::UndefinedClass(parent.to_string()));
        }
        self.parents
            .insert(class.to_string(), Some(parent.to_string()));
        Ok(())
    }

    /// Builds a hierarchy from `(class, parent)` pairs given in any order.
    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, TaskError> {
        let mut parents: IndexMap<String, Option<String>> = IndexMap::new();
        parents.insert(ROOT_CLASS.to_string(), None);
        for (class, parent) in entries {
            if parents.contains_key(class) {
                return Err(TaskError::DuplicateClass(class.to_string()));
            }
            parents.insert(class.to_string(), Some(parent.to_string()));
        }
        let h = ClassHierarchy { parents };
        h.check()?;
        Ok(h)
    }

    fn check(&self) -> Result<(), TaskError> {
        for (class, parent) in &self.parents {
            if let Some(p) = parent {
                if !self.parents.contains_key(p) {
                    return Err(TaskError::UndefinedClass(p.clone()));
                }
            }
            let mut seen = 0;
            let mut cur = parent.as_deref();
            while let Some(c) = cur {
                seen += 1;
                if c == class || seen > self.parents.len() {
                    return Err(TaskError::Cycle(class.clone()));
                }
                cur = self.parents[c].as_deref();
            }
        }
        Ok(())
    }

    pub fn contains(&self, class: &str) -> bool {
        self.parents.contains_key(class)
    }

    pub fn parent(&self, class: &str) -> Option<&str> {
        self.parents.get(class).and_then(|p| p.as_deref())
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Classes in declaration order, root first.
    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.parents.keys().map(String::as_str)
    }

    /// `(class, parent)` pairs, excluding the root.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents
            .iter()
            .filter_map(|(c, p)| p.as_deref().map(|p| (c.as_str(), p)))
    }

    pub fn children<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries()
            .filter(move |(_, p)| *p == class)
            .map(|(c, _)| c)
    }

    /// Other children of `class`'s parent.
    pub fn siblings<'a>(&'a self, class: &'a str) -> Vec<&'a str> {
        match self.parent(class) {
            Some(p) => self.children(p).filter(|c| *c != class).collect(),
            None => Vec::new(),
        }
    }

    /// Strict ancestors of `class`, nearest first.
    pub fn ancestors(&self, class: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.parent(class);
        while let Some(c) = cur {
            out.push(c);
            cur = self.parent(c);
        }
        out
    }

    /// True when `class` is `ancestor` or descends from it.
    pub fn subsumes(&self, ancestor: &str, class: &str) -> bool {
        if ancestor == class {
            return self.contains(class);
        }
        let mut cur = self.parent(class);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }
}

/// One argument position: a disjunction of admissible classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot(pub Vec<String>);

impl Slot {
    pub fn single(class: &str) -> Self {
        Slot(vec![class.to_string()])
    }

    pub fn classes(&self) -> &[String] {
        &self.0
    }

    pub fn admits_class(&self, classes: &ClassHierarchy, class: &str) -> bool {
        self.0.iter().any(|s| classes.subsumes(s, class))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub slots: Vec<Slot>,
}

impl Pattern {
    pub fn arity(&self) -> usize {
        self.slots.len()
    }
}

/// An argument inside an action literal: a schema parameter or an object constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Param(usize),
    Object(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub pattern: String,
    pub terms: Vec<Term>,
    pub value: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    AtStart,
    OverAll,
    AtEnd,
}

impl Timing {
    pub fn keyword(self) -> &'static str {
        match self {
            Timing::AtStart => "at-start",
            Timing::OverAll => "over-all",
            Timing::AtEnd => "at-end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedLiteral {
    pub timing: Timing,
    pub literal: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationSpec {
    Constant(Time),
    /// Reads a numeric initial value of `pattern` instantiated with the given parameters.
    Lookup { pattern: String, params: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub pars: Vec<Slot>,
    pub duration: DurationSpec,
    pub conds: Vec<TimedLiteral>,
    pub effs: Vec<TimedLiteral>,
}

impl ActionSchema {
    pub fn head(&self) -> SchemaHead {
        SchemaHead {
            name: self.name.clone(),
            slots: self.pars.clone(),
        }
    }
}

/// Public signature of an action schema: name plus parameter slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaHead {
    pub name: String,
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Domain {
    pub classes: ClassHierarchy,
    pub patterns: Vec<Pattern>,
    pub schemas: Vec<ActionSchema>,
}

impl Domain {
    pub fn pattern(&self, name: &str) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn heads(&self) -> Vec<SchemaHead> {
        self.schemas.iter().map(ActionSchema::head).collect()
    }
}

/// A pattern instantiated with objects, e.g. `(be av area_inspect)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub pattern: String,
    pub objects: Vec<String>,
}

impl Variable {
    pub fn new(pattern: &str, objects: &[&str]) -> Self {
        Variable {
            pattern: pattern.to_string(),
            objects: objects.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn mentions(&self, object: &str) -> bool {
        self.objects.iter().any(|o| o == object)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pattern)?;
        for o in &self.objects {
            write!(f, " {o}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub var: Variable,
    pub value: bool,
}

impl Assignment {
    pub fn new(var: Variable, value: bool) -> Self {
        Assignment { var, value }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value {
            write!(f, "{}", self.var)
        } else {
            write!(f, "(not {})", self.var)
        }
    }
}

/// An assignment known at time zero to happen at a later instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAssignment {
    pub time: Time,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Problem {
    /// object name → class name, in declaration order.
    pub objects: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Instance {
    pub init: Vec<Assignment>,
    pub numeric: IndexMap<Variable, Time>,
    pub timed: Vec<TimedAssignment>,
    pub goals: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanningTask {
    pub domain: Domain,
    pub problem: Problem,
    pub instance: Instance,
}

impl PlanningTask {
    pub fn class_of(&self, object: &str) -> Option<&str> {
        self.problem.objects.get(object).map(String::as_str)
    }

    pub fn object_index(&self, object: &str) -> Option<usize> {
        self.problem.objects.get_index_of(object)
    }

    /// Objects whose class is admitted by `slot`, in declaration order.
    pub fn objects_for_slot<'a>(&'a self, slot: &'a Slot) -> impl Iterator<Item = &'a str> + 'a {
        self.problem
            .objects
            .iter()
            .filter(move |(_, c)| slot.admits_class(&self.domain.classes, c))
            .map(|(o, _)| o.as_str())
    }

    /// Binds `objects` to the arguments of `pattern`.
    pub fn instantiate_variable(
        &self,
        pattern: &Pattern,
        objects: &[&str],
    ) -> Result<Variable, TaskError> {
        if objects.len() != pattern.arity() {
            return Err(TaskError::Arity {
                name: pattern.name.clone(),
                expected: pattern.arity(),
                got: objects.len(),
            });
        }
        for (i, (slot, obj)) in pattern.slots.iter().zip(objects).enumerate() {
            let class = self
                .class_of(obj)
                .ok_or_else(|| TaskError::UndefinedObject(obj.to_string()))?;
            if !slot.admits_class(&self.domain.classes, class) {
                return Err(TaskError::ClassMismatch {
                    pattern: pattern.name.clone(),
                    slot: i + 1,
                    object: obj.to_string(),
                    class: class.to_string(),
                });
            }
        }
        Ok(Variable::new(&pattern.name, objects))
    }

    pub fn check_variable(&self, var: &Variable) -> Result<(), TaskError> {
        let pattern = self
            .domain
            .pattern(&var.pattern)
            .ok_or_else(|| TaskError::UndefinedPattern(var.pattern.clone()))?;
        let objs: Vec<&str> = var.objects.iter().map(String::as_str).collect();
        self.instantiate_variable(pattern, &objs).map(|_| ())
    }

    /// V: every variable mentioned by the initial state, timed literals or goals.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let inst = &self.instance;
        inst.init
            .iter()
            .map(|a| a.var.clone())
            .chain(inst.numeric.keys().cloned())
            .chain(inst.timed.iter().map(|t| t.assignment.var.clone()))
            .chain(inst.goals.iter().map(|a| a.var.clone()))
            .collect()
    }

    /// Checks every invariant that ties the problem to the domain.
    pub fn validate(&self) -> Result<(), TaskError> {
        let d = &self.domain;
        d.classes.check()?;
        let slots = d
            .patterns
            .iter()
            .flat_map(|p| p.slots.iter())
            .chain(d.schemas.iter().flat_map(|s| s.pars.iter()));
        for slot in slots {
            for c in slot.classes() {
                if !d.classes.contains(c) {
                    return Err(TaskError::UndefinedClass(c.clone()));
                }
            }
        }
        for class in self.problem.objects.values() {
            if !d.classes.contains(class) {
                return Err(TaskError::UndefinedClass(class.clone()));
            }
        }
        for schema in &d.schemas {
            let check_lit = |lit: &Literal| -> Result<(), TaskError> {
                let p = d
                    .pattern(&lit.pattern)
                    .ok_or_else(|| TaskError::UndefinedPattern(lit.pattern.clone()))?;
                if p.arity() != lit.terms.len() {
                    return Err(TaskError::Arity {
                        name: lit.pattern.clone(),
                        expected: p.arity(),
                        got: lit.terms.len(),
                    });
                }
                for t in &lit.terms {
                    match t {
                        Term::Param(i) if *i >= schema.pars.len() => {
                            return Err(TaskError::ParamIndex {
                                action: schema.name.clone(),
                                index: *i,
                            })
                        }
                        Term::Object(o) if !self.problem.objects.contains_key(o) => {
                            return Err(TaskError::UndefinedObject(o.clone()))
                        }
                        _ => {}
                    }
                }
                Ok(())
            };
            for tl in schema.conds.iter().chain(&schema.effs) {
                check_lit(&tl.literal)?;
            }
            if let DurationSpec::Lookup { pattern, params } = &schema.duration {
                let p = d
                    .pattern(pattern)
                    .ok_or_else(|| TaskError::UndefinedPattern(pattern.clone()))?;
                if p.arity() != params.len() {
                    return Err(TaskError::Arity {
                        name: pattern.clone(),
                        expected: p.arity(),
                        got: params.len(),
                    });
                }
                if let Some(&i) = params.iter().find(|&&i| i >= schema.pars.len()) {
                    return Err(TaskError::ParamIndex {
                        action: schema.name.clone(),
                        index: i,
                    });
                }
            }
        }
        for var in self.variables() {
            self.check_variable(&var)?;
        }
        Ok(())
    }
}
