use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundLiteral {
    pub timing: Timing,
    pub var: Variable,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub duration: Time,
    pub conds: Vec<GroundLiteral>,
    pub effs: Vec<GroundLiteral>,
}

impl GroundAction {
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

fn bind(schema: &ActionSchema, lit: &TimedLiteral, args: &[&str]) -> GroundLiteral {
    let objects = lit
        .literal
        .terms
        .iter()
        .map(|t| match t {
            Term::Param(i) => args[*i].to_string(),
            Term::Object(o) => o.clone(),
        })
        .collect();
    debug_assert!(lit.literal.terms.iter().all(|t| match t {
        Term::Param(i) => *i < schema.pars.len(),
        Term::Object(_) => true,
    }));
    GroundLiteral {
        timing: lit.timing,
        var: Variable {
            pattern: lit.literal.pattern.clone(),
            objects,
        },
        value: lit.literal.value,
    }
}

/// Instantiates `schema` with `args`. Class compatibility is the caller's concern.
pub(crate) fn instantiate(
    task: &PlanningTask,
    schema: &ActionSchema,
    args: &[&str],
) -> Result<GroundAction, TaskError> {
    let duration = match &schema.duration {
        DurationSpec::Constant(t) => *t,
        DurationSpec::Lookup { pattern, params } => {
            let var = Variable {
                pattern: pattern.clone(),
                objects: params.iter().map(|&i| args[i].to_string()).collect(),
            };
            *task
                .instance
                .numeric
                .get(&var)
                .ok_or(TaskError::MissingNumeric(var))?
        }
    };
    Ok(GroundAction {
        schema: schema.name.clone(),
        args: args.iter().map(|s| s.to_string()).collect(),
        duration,
        conds: schema.conds.iter().map(|c| bind(schema, c, args)).collect(),
        effs: schema.effs.iter().map(|e| bind(schema, e, args)).collect(),
    })
}

/// Grounds the plan step `(name args...)`, checking arity and slot classes.
pub fn ground_step(task: &PlanningTask, name: &str, args: &[String]) -> Result<GroundAction, TaskError> {
    let schema = task
        .domain
        .schema(name)
        .ok_or_else(|| TaskError::UndefinedSchema(name.to_string()))?;
    if schema.pars.len() != args.len() {
        return Err(TaskError::Arity {
            name: name.to_string(),
            expected: schema.pars.len(),
            got: args.len(),
        });
    }
    for (i, (slot, obj)) in schema.pars.iter().zip(args).enumerate() {
        let class = task
            .class_of(obj)
            .ok_or_else(|| TaskError::UndefinedObject(obj.clone()))?;
        if !slot.admits_class(&task.domain.classes, class) {
            return Err(TaskError::ClassMismatch {
                pattern: name.to_string(),
                slot: i + 1,
                object: obj.clone(),
                class: class.to_string(),
            });
        }
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    instantiate(task, schema, &refs)
}

/// Every type-compatible binding of every schema, schemas in declaration
/// order and bindings in object declaration order.
pub fn ground_actions(task: &PlanningTask) -> Result<Vec<GroundAction>, TaskError> {
    let mut out = Vec::new();
    for schema in &task.domain.schemas {
        let candidates: Vec<Vec<&str>> = schema
            .pars
            .iter()
            .map(|slot| task.objects_for_slot(slot).collect())
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; candidates.len()];
        'bindings: loop {
            let args: Vec<&str> = idx.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
            out.push(instantiate(task, schema, &args)?);
            // odometer increment, last position fastest
            let mut pos = idx.len();
            loop {
                if pos == 0 {
                    break 'bindings;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < candidates[pos].len() {
                    continue 'bindings;
                }
                idx[pos] = 0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_task;
    use super::*;

    #[test]
    fn empty_par_list_grounds_once() {
        let task = parse_task(
            "(:classes a - thing) (:patterns (ready)) (:actions (tick :pars () :duration 1 :eff (at-end (ready))))",
            "(:objects)",
        )
        .unwrap();
        let ground = ground_actions(&task).unwrap();
        assert_eq!(ground.len(), 1);
        assert_eq!(ground[0].effs[0].var, Variable::new("ready", &[]));
    }

    #[test]
    fn missing_numeric_lookup_is_named() {
        let task = parse_task(
            "(:classes l - thing) (:patterns (d l l)) (:actions (go :pars (l l) :duration (lookup d 0 1)))",
            "(:objects x y - l) (:init (= (d x y) 1))",
        )
        .unwrap();
        let err = ground_actions(&task).unwrap_err();
        assert_eq!(err, TaskError::MissingNumeric(Variable::new("d", &["x", "x"])));
    }

    #[test]
    fn slot_without_objects_yields_nothing() {
        let task = parse_task(
            "(:classes a b - thing) (:actions (use :pars (a b)))",
            "(:objects x - a)",
        )
        .unwrap();
        assert!(ground_actions(&task).unwrap().is_empty());
    }
}
