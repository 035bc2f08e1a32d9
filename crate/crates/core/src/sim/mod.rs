//! Discrete-event execution simulator: plans are encoded into a timeline of
//! condition checks and effect applications, exogenous happenings are injected
//! on the fly, and the observed world is compared against the expected one.

mod discrepancy;
mod timeline;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::task::{Assignment, Plan, PlanningTask, TaskError, Timing, Variable};
use crate::time::Time;

pub use discrepancy::{classify_discrepancy, detect_discrepancy, Classification, DiscrepancySet};
pub use timeline::{encode_timeline, EventKind, Provenance, TimedEvent, Timeline};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("plan step {index} `{action}`: {source}")]
    Step {
        index: usize,
        action: String,
        source: TaskError,
    },
    #[error("plan step {index} `{action}` declares duration {declared}, schema gives {expected}")]
    Duration {
        index: usize,
        action: String,
        declared: Time,
        expected: Time,
    },
    #[error("event at {time} lies before the simulation clock {clock}")]
    PastEvent { time: Time, clock: Time },
}

/// Closed-world state: a boolean variable is true iff it is in `facts`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorldState {
    pub facts: BTreeSet<Variable>,
    pub numerics: BTreeMap<Variable, Time>,
    pub clock: Time,
}

impl WorldState {
    /// The state at time zero, before any timed literal fires.
    pub fn initial(task: &PlanningTask) -> Self {
        let mut s = WorldState::default();
        for a in &task.instance.init {
            s.set(&a.var, a.value);
        }
        s.numerics = task
            .instance
            .numeric
            .iter()
            .map(|(v, t)| (v.clone(), *t))
            .collect();
        s
    }

    pub fn holds(&self, var: &Variable) -> bool {
        self.facts.contains(var)
    }

    pub fn value(&self, var: &Variable) -> bool {
        self.holds(var)
    }

    pub fn set(&mut self, var: &Variable, value: bool) {
        if value {
            self.facts.insert(var.clone());
        } else {
            self.facts.remove(var);
        }
    }

    pub fn satisfies(&self, a: &Assignment) -> bool {
        self.holds(&a.var) == a.value
    }

    pub fn unmet<'a>(&self, goals: &'a [Assignment]) -> Vec<&'a Assignment> {
        goals.iter().filter(|g| !self.satisfies(g)).collect()
    }
}

/// A condition that did not hold when checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub time: Time,
    pub step: usize,
    pub action: String,
    pub timing: Timing,
    pub var: Variable,
    pub required: bool,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let req = if self.required { "TRUE" } else { "FALSE" };
        write!(
            f,
            "{}: step {} {} {} condition {} = {req} does not hold",
            self.time,
            self.step,
            self.action,
            self.timing.keyword(),
            self.var
        )
    }
}

/// What processing one event produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Processed {
    pub event: TimedEvent,
    pub violation: Option<Violation>,
    pub discrepancy: Option<DiscrepancySet>,
}

/// One simulation run: a timeline plus the expected and observed worlds.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub timeline: Timeline,
    pub expected: WorldState,
    pub observed: WorldState,
    pub violations: Vec<Violation>,
}

impl Simulation {
    pub fn new(timeline: Timeline, state: WorldState) -> Self {
        Simulation {
            timeline,
            expected: state.clone(),
            observed: state,
            violations: Vec::new(),
        }
    }

    pub fn for_plan(task: &PlanningTask, plan: &Plan) -> Result<Self, SimError> {
        Ok(Simulation::new(encode_timeline(task, plan)?, WorldState::initial(task)))
    }

    pub fn clock(&self) -> Time {
        self.timeline.clock()
    }

    pub fn is_finished(&self) -> bool {
        self.timeline.peek().is_none()
    }

    /// Processes the next event, or returns `None` once the timeline is spent.
    ///
    /// Checks read the observed world. Plan effects and timed literals update
    /// both worlds; events reported by other agents only reach the observed
    /// one, and the resulting difference is returned as a discrepancy. The
    /// expected world is then synchronised so each novelty is reported once.
    pub fn advance(&mut self) -> Option<Processed> {
        let event = self.timeline.pop()?;
        self.expected.clock = event.time;
        self.observed.clock = event.time;
        let mut out = Processed {
            event: event.clone(),
            violation: None,
            discrepancy: None,
        };
        match (&event.kind, &event.provenance) {
            (EventKind::ConditionCheck, Provenance::Step { index, timing, action }) => {
                if self.observed.holds(&event.var) != event.value {
                    let v = Violation {
                        time: event.time,
                        step: *index,
                        action: action.clone(),
                        timing: *timing,
                        var: event.var.clone(),
                        required: event.value,
                    };
                    log::debug!("violation {v}");
                    self.violations.push(v.clone());
                    out.violation = Some(v);
                }
            }
            (EventKind::Exogenous, Provenance::Agent(_)) => {
                self.observed.set(&event.var, event.value);
                let d = detect_discrepancy(&self.observed, &self.expected);
                if !d.is_empty() {
                    out.discrepancy = Some(d);
                }
                self.expected = self.observed.clone();
            }
            _ => {
                self.expected.set(&event.var, event.value);
                self.observed.set(&event.var, event.value);
            }
        }
        Some(out)
    }

    /// Runs to the end of the timeline.
    pub fn run(&mut self) -> Vec<Processed> {
        std::iter::from_fn(|| self.advance()).collect()
    }
}

/// Outcome of replaying a plan with no exogenous interference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
    pub unmet_goals: Vec<Assignment>,
    pub final_state: WorldState,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.unmet_goals.is_empty()
    }
}

/// Replays `plan` from the initial state of `task`.
pub fn validate_plan(task: &PlanningTask, plan: &Plan) -> Result<Validation, SimError> {
    validate_from_state(task, plan, WorldState::initial(task), None)
}

/// Replays `plan` from `state`. Timed literals strictly after `after` are
/// scheduled (all of them when `after` is `None`).
pub fn validate_from_state(
    task: &PlanningTask,
    plan: &Plan,
    state: WorldState,
    after: Option<Time>,
) -> Result<Validation, SimError> {
    let timeline = timeline::encode_with_timed(task, plan, 0, after, state.clock)?;
    let mut sim = Simulation::new(timeline, state);
    sim.run();
    let unmet_goals = sim
        .observed
        .unmet(&task.instance.goals)
        .into_iter()
        .cloned()
        .collect();
    Ok(Validation {
        violations: sim.violations,
        unmet_goals,
        final_state: sim.observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_plan, parse_task};

    fn tiny() -> PlanningTask {
        parse_task(
            "(:classes r l - thing) (:patterns (at r l) (on r))
             (:actions (go :pars (r l l) :duration 2
                 :cond (at-start (at ?0 ?1)) (over-all (on ?0))
                 :eff (at-start (not (at ?0 ?1))) (at-end (at ?0 ?2))))",
            "(:objects bot - r a b - l) (:init (at bot a) (on bot) (at 1 (not (on bot))))
             (:goal (at bot b))",
        )
        .unwrap()
    }

    #[test]
    fn timed_literal_breaks_over_all() {
        let task = tiny();
        let plan = parse_plan("0: (go bot a b) [2]").unwrap();
        let v = validate_plan(&task, &plan).unwrap();
        assert!(!v.is_valid());
        // the sample at 1 precedes the timed literal at the same instant
        assert_eq!(v.violations.len(), 1, "{:?}", v.violations);
        assert_eq!(v.violations[0].time, Time::from_int(2));
        assert_eq!(v.violations[0].timing, Timing::OverAll);
        assert!(v.unmet_goals.is_empty());
    }

    #[test]
    fn empty_plan_on_goal_free_task_is_valid() {
        let task = parse_task("(:classes r - thing)", "(:objects x - r)").unwrap();
        assert!(validate_plan(&task, &Plan::default()).unwrap().is_valid());
    }

    #[test]
    fn declared_duration_must_match() {
        let task = tiny();
        let plan = parse_plan("0: (go bot a b) [3]").unwrap();
        assert!(matches!(validate_plan(&task, &plan), Err(SimError::Duration { .. })));
    }

    #[test]
    fn exogenous_report_only_reaches_observed_state() {
        let task = tiny();
        let mut sim = Simulation::for_plan(&task, &Plan::default()).unwrap();
        let fact = Variable::new("at", &["parcel", "a"]);
        sim.timeline
            .inject_exogenous(TimedEvent::exogenous(Time::ZERO, fact.clone(), true, "courier"))
            .unwrap();
        let first = sim.advance().unwrap();
        let d = first.discrepancy.expect("new fact is a discrepancy");
        assert_eq!(d.entries, vec![Assignment::new(fact.clone(), true)]);
        assert!(sim.observed.holds(&fact));
    }
}
