use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::task::{ground_step, GroundLiteral, Plan, PlanningTask, Timing, Variable};
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ConditionCheck,
    EffectApply,
    Exogenous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Step {
        index: usize,
        timing: Timing,
        action: String,
    },
    TimedInit,
    Agent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub time: Time,
    pub kind: EventKind,
    pub var: Variable,
    pub value: bool,
    pub provenance: Provenance,
}

impl TimedEvent {
    /// A fact reported by another agent.
    pub fn exogenous(time: Time, var: Variable, value: bool, source: &str) -> Self {
        TimedEvent {
            time,
            kind: EventKind::Exogenous,
            var,
            value,
            provenance: Provenance::Agent(source.to_string()),
        }
    }
}

// Same-instant order: plan events before exogenous ones; among plan events,
// earlier-started steps first, then start checks, start effects, end checks,
// end effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    time: Time,
    class: u8,
    step_start: Time,
    step: usize,
    phase: u8,
    seq: u64,
}

const PHASE_START_CHECK: u8 = 0;
const PHASE_START_EFFECT: u8 = 1;
const PHASE_END_CHECK: u8 = 2;
const PHASE_END_EFFECT: u8 = 3;

#[derive(Debug, Clone)]
struct Interval {
    step: usize,
    action: String,
    start: Time,
    end: Time,
    conds: Vec<(Variable, bool)>,
    sampled: BTreeSet<Time>,
}

/// Chronologically ordered events with a processing cursor.
#[derive(Debug, Clone, Default)]
pub struct Timeline {
    entries: Vec<(Key, TimedEvent)>,
    next: usize,
    clock: Time,
    intervals: Vec<Interval>,
    seq: u64,
}

/// Encodes `plan` against `task`, with every timed literal scheduled.
pub fn encode_timeline(task: &PlanningTask, plan: &Plan) -> Result<Timeline, SimError> {
    encode_with_timed(task, plan, 0, None, Time::ZERO)
}

pub(crate) fn encode_with_timed(
    task: &PlanningTask,
    plan: &Plan,
    first_index: usize,
    after: Option<Time>,
    clock: Time,
) -> Result<Timeline, SimError> {
    let mut tl = Timeline {
        clock,
        ..Timeline::default()
    };
    for t in &task.instance.timed {
        if after.is_some_and(|a| t.time <= a) {
            continue;
        }
        let key = tl.key(t.time, 1, Time::ZERO, 0, 0);
        tl.entries.push((
            key,
            TimedEvent {
                time: t.time,
                kind: EventKind::Exogenous,
                var: t.assignment.var.clone(),
                value: t.assignment.value,
                provenance: Provenance::TimedInit,
            },
        ));
    }
    tl.append_plan(task, plan, first_index)?;
    Ok(tl)
}

impl Timeline {
    fn key(&mut self, time: Time, class: u8, step_start: Time, step: usize, phase: u8) -> Key {
        self.seq += 1;
        Key {
            time,
            class,
            step_start,
            step,
            phase,
            seq: self.seq,
        }
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    /// Every event, processed or not, in order.
    pub fn events(&self) -> impl Iterator<Item = &TimedEvent> {
        self.entries.iter().map(|(_, e)| e)
    }

    pub fn pending(&self) -> impl Iterator<Item = &TimedEvent> {
        self.entries[self.next..].iter().map(|(_, e)| e)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn peek(&self) -> Option<&TimedEvent> {
        self.entries.get(self.next).map(|(_, e)| e)
    }

    pub(super) fn pop(&mut self) -> Option<TimedEvent> {
        let (_, e) = self.entries.get(self.next)?;
        self.next += 1;
        self.clock = e.time;
        Some(e.clone())
    }

    fn insert(&mut self, key: Key, event: TimedEvent) {
        let pos = self.entries[self.next..].partition_point(|(k, _)| *k < key) + self.next;
        self.entries.insert(pos, (key, event));
    }

    /// Adds the steps of `plan`, numbered from `first_index`, to the pending events.
    pub fn append_plan(
        &mut self,
        task: &PlanningTask,
        plan: &Plan,
        first_index: usize,
    ) -> Result<(), SimError> {
        for (offset, step) in plan.steps.iter().enumerate() {
            let index = first_index + offset;
            let ga = ground_step(task, &step.action, &step.args).map_err(|source| SimError::Step {
                index,
                action: step.signature(),
                source,
            })?;
            if ga.duration != step.duration {
                return Err(SimError::Duration {
                    index,
                    action: step.signature(),
                    declared: step.duration,
                    expected: ga.duration,
                });
            }
            if step.start < self.clock {
                return Err(SimError::PastEvent {
                    time: step.start,
                    clock: self.clock,
                });
            }
            let (start, end) = (step.start, step.end());
            let action = step.signature();
            let of = |timing: Timing| move |l: &&GroundLiteral| l.timing == timing;
            let over_all: Vec<&GroundLiteral> = ga.conds.iter().filter(of(Timing::OverAll)).collect();
            let groups: [(Time, u8, EventKind, Vec<&GroundLiteral>); 4] = [
                (
                    start,
                    PHASE_START_CHECK,
                    EventKind::ConditionCheck,
                    ga.conds
                        .iter()
                        .filter(of(Timing::AtStart))
                        .chain(over_all.iter().copied())
                        .collect(),
                ),
                (
                    start,
                    PHASE_START_EFFECT,
                    EventKind::EffectApply,
                    ga.effs.iter().filter(of(Timing::AtStart)).collect(),
                ),
                (
                    end,
                    PHASE_END_CHECK,
                    EventKind::ConditionCheck,
                    over_all
                        .iter()
                        .copied()
                        .chain(ga.conds.iter().filter(of(Timing::AtEnd)))
                        .collect(),
                ),
                (
                    end,
                    PHASE_END_EFFECT,
                    EventKind::EffectApply,
                    ga.effs.iter().filter(of(Timing::AtEnd)).collect(),
                ),
            ];
            for (time, phase, kind, lits) in groups {
                for lit in lits {
                    let key = self.key(time, 0, start, index, phase);
                    let event = TimedEvent {
                        time,
                        kind,
                        var: lit.var.clone(),
                        value: lit.value,
                        provenance: Provenance::Step {
                            index,
                            timing: lit.timing,
                            action: action.clone(),
                        },
                    };
                    self.insert(key, event);
                }
            }
            if !over_all.is_empty() {
                self.intervals.push(Interval {
                    step: index,
                    action,
                    start,
                    end,
                    conds: over_all.iter().map(|l| (l.var.clone(), l.value)).collect(),
                    sampled: BTreeSet::new(),
                });
            }
        }
        self.resample();
        Ok(())
    }

    /// Inserts an exogenous event; it runs after plan events at the same instant.
    pub fn inject_exogenous(&mut self, event: TimedEvent) -> Result<(), SimError> {
        if event.time < self.clock {
            return Err(SimError::PastEvent {
                time: event.time,
                clock: self.clock,
            });
        }
        let key = self.key(event.time, 1, Time::ZERO, 0, 0);
        self.insert(key, event);
        self.resample();
        Ok(())
    }

    /// Samples every over-all condition at each pending event instant that
    /// falls strictly inside its interval.
    fn resample(&mut self) {
        let instants: BTreeSet<Time> = self.entries[self.next..].iter().map(|(k, _)| k.time).collect();
        for i in 0..self.intervals.len() {
            let iv = &self.intervals[i];
            let fresh: Vec<Time> = instants
                .range(iv.start..iv.end)
                .copied()
                .filter(|&t| t > iv.start && !iv.sampled.contains(&t))
                .collect();
            for t in fresh {
                let iv = &self.intervals[i];
                let (step, start, action, conds) = (iv.step, iv.start, iv.action.clone(), iv.conds.clone());
                for (var, value) in conds {
                    let key = self.key(t, 0, start, step, PHASE_END_CHECK);
                    let event = TimedEvent {
                        time: t,
                        kind: EventKind::ConditionCheck,
                        var,
                        value,
                        provenance: Provenance::Step {
                            index: step,
                            timing: Timing::OverAll,
                            action: action.clone(),
                        },
                    };
                    self.insert(key, event);
                }
                self.intervals[i].sampled.insert(t);
            }
        }
    }

    /// Indices of steps with at least one event already processed and at
    /// least one still pending.
    pub fn in_flight_steps(&self) -> BTreeSet<usize> {
        let started = self.started_steps();
        self.entries[self.next..]
            .iter()
            .filter_map(|(_, e)| match e.provenance {
                Provenance::Step { index, .. } if started.contains(&index) => Some(index),
                _ => None,
            })
            .collect()
    }

    fn started_steps(&self) -> BTreeSet<usize> {
        self.entries[..self.next]
            .iter()
            .filter_map(|(_, e)| match e.provenance {
                Provenance::Step { index, .. } => Some(index),
                _ => None,
            })
            .collect()
    }

    /// Drops every event of steps that have not started yet; returns their indices.
    pub fn retract_unstarted(&mut self) -> BTreeSet<usize> {
        let started = self.started_steps();
        let mut dropped = BTreeSet::new();
        let mut kept = Vec::with_capacity(self.entries.len());
        for (i, entry) in std::mem::take(&mut self.entries).into_iter().enumerate() {
            if i >= self.next {
                if let Provenance::Step { index, .. } = entry.1.provenance {
                    if !started.contains(&index) {
                        dropped.insert(index);
                        continue;
                    }
                }
            }
            kept.push(entry);
        }
        self.entries = kept;
        self.intervals.retain(|iv| !dropped.contains(&iv.step));
        dropped
    }

    /// Highest step index ever scheduled, plus one.
    pub fn next_step_index(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|(_, e)| match e.provenance {
                Provenance::Step { index, .. } => Some(index + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_plan, parse_task, Variable};

    fn task() -> PlanningTask {
        parse_task(
            "(:classes r l - thing) (:patterns (at r l) (on r))
             (:actions (go :pars (r l l) :duration 4
                 :cond (at-start (at ?0 ?1)) (over-all (on ?0))
                 :eff (at-start (not (at ?0 ?1))) (at-end (at ?0 ?2))))",
            "(:objects bot - r a b - l) (:init (at bot a) (on bot) (at 2 (on bot)))",
        )
        .unwrap()
    }

    #[test]
    fn over_all_is_sampled_at_inner_instants() {
        let task = task();
        let tl = encode_timeline(&task, &parse_plan("0: (go bot a b) [4]").unwrap()).unwrap();
        let checks: Vec<Time> = tl
            .events()
            .filter(|e| e.kind == EventKind::ConditionCheck && e.var == Variable::new("on", &["bot"]))
            .map(|e| e.time)
            .collect();
        assert_eq!(checks, [Time::ZERO, Time::from_int(2), Time::from_int(4)]);
    }

    #[test]
    fn injection_inside_interval_adds_a_sample() {
        let task = task();
        let mut tl = encode_timeline(&task, &parse_plan("0: (go bot a b) [4]").unwrap()).unwrap();
        let before = tl.len();
        tl.inject_exogenous(TimedEvent::exogenous(
            Time::from_int(3),
            Variable::new("at", &["box", "a"]),
            true,
            "x",
        ))
        .unwrap();
        assert_eq!(tl.len(), before + 2);
        let times: Vec<Time> = tl.events().map(|e| e.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn past_injection_is_rejected() {
        let task = task();
        let mut tl = encode_timeline(&task, &parse_plan("0: (go bot a b) [4]").unwrap()).unwrap();
        tl.pop();
        tl.pop();
        tl.pop();
        let late = TimedEvent::exogenous(Time::from_int(-1), Variable::new("on", &["bot"]), true, "x");
        assert!(tl.inject_exogenous(late).is_err());
        let now = TimedEvent::exogenous(tl.clock(), Variable::new("on", &["bot"]), true, "x");
        tl.inject_exogenous(now).unwrap();
    }

    #[test]
    fn exogenous_follows_plan_events_at_same_instant() {
        let task = task();
        let mut tl = encode_timeline(&task, &parse_plan("0: (go bot a b) [4]").unwrap()).unwrap();
        tl.inject_exogenous(TimedEvent::exogenous(Time::from_int(4), Variable::new("on", &["bot"]), false, "x"))
            .unwrap();
        let last = tl.events().last().unwrap();
        assert_eq!(last.kind, EventKind::Exogenous);
    }
}
