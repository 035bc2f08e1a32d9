//! Grounded forward-search planner with sequential durative semantics: each
//! action starts `EPSILON` after the previous one ends, and timed literals fire
//! in between exactly as the simulator would apply them.

mod external;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::sim::{validate_from_state, SimError, Violation, WorldState};
use crate::task::{
    ground_actions, Assignment, GroundAction, GroundLiteral, Plan, PlanStep, PlanningTask, TaskError, Timing, Variable,
};
use crate::time::Time;

pub use external::{invoke_external, ExternalOptions, TIMEOUT_ENV};

/// Gap between the end of one action and the start of the next.
pub const EPSILON: Time = Time::from_ticks(10);

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Latest admissible action end.
    pub deadline: Option<Time>,
    pub node_budget: usize,
    /// Wall-clock limit on the search itself.
    pub time_limit: Option<std::time::Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            deadline: None,
            node_budget: DEFAULT_NODE_BUDGET,
            time_limit: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("no plan found ({explored} nodes expanded{})", if *.budget_exhausted { ", budget exhausted" } else { "" })]
    Unsolvable { explored: usize, budget_exhausted: bool },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid plan: {reason}")]
    InvalidPlan { reason: String },
    #[error("planner exited with status {status:?}: {stderr}")]
    Process { status: Option<i32>, stderr: String },
    #[error("planner timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("planner i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty planner command")]
    EmptyCommand,
}

impl PlanError {
    pub(crate) fn invalid(violations: &[Violation], unmet: &[Assignment]) -> Self {
        let reason = match (violations.first(), unmet.first()) {
            (Some(v), _) => v.to_string(),
            (None, Some(g)) => format!("goal {g} not achieved"),
            (None, None) => "unknown".to_string(),
        };
        PlanError::InvalidPlan { reason }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, v: bool) {
        if v {
            self.0[i / 64] |= 1 << (i % 64);
        } else {
            self.0[i / 64] &= !(1 << (i % 64));
        }
    }
}

type Lit = (usize, bool);

struct Op {
    ground: GroundAction,
    start_pre: Vec<Lit>,
    over_all: Vec<Lit>,
    end_pre: Vec<Lit>,
    start_eff: Vec<Lit>,
    end_eff: Vec<Lit>,
}

struct Node {
    facts: Bits,
    clock: Time,
    timed: usize,
    g: u32,
    parent: Option<(usize, usize, Time)>,
}

struct Problem {
    ops: Vec<Op>,
    pending: Vec<(Time, Vec<Lit>)>,
    goals: Vec<Lit>,
    deadline: Option<Time>,
}

fn holds(facts: &Bits, lits: &[Lit]) -> bool {
    lits.iter().all(|&(v, val)| facts.get(v) == val)
}

fn apply(facts: &mut Bits, lits: &[Lit]) {
    for &(v, val) in lits {
        facts.set(v, val);
    }
}

impl Problem {
    fn unmet(&self, facts: &Bits) -> u32 {
        self.goals.iter().filter(|&&(v, val)| facts.get(v) != val).count() as u32
    }

    fn is_goal(&self, node: &Node) -> bool {
        let mut facts = node.facts.clone();
        for (_, lits) in &self.pending[node.timed..] {
            apply(&mut facts, lits);
        }
        self.unmet(&facts) == 0
    }

    /// Mirrors the simulator's event order for one action started at `clock + EPSILON`.
    fn successor(&self, node: &Node, op: &Op) -> Option<(Bits, Time, usize, Time)> {
        let start = node.clock + EPSILON;
        let end = start + op.ground.duration;
        if self.deadline.is_some_and(|d| end > d) {
            return None;
        }
        let mut facts = node.facts.clone();
        let mut ti = node.timed;
        while ti < self.pending.len() && self.pending[ti].0 < start {
            apply(&mut facts, &self.pending[ti].1);
            ti += 1;
        }
        let before = facts.clone();
        if !holds(&facts, &op.start_pre) || !holds(&facts, &op.over_all) {
            return None;
        }
        apply(&mut facts, &op.start_eff);
        while ti < self.pending.len() && self.pending[ti].0 < end {
            let t = self.pending[ti].0;
            if t > start && !holds(&facts, &op.over_all) {
                return None;
            }
            while ti < self.pending.len() && self.pending[ti].0 == t {
                apply(&mut facts, &self.pending[ti].1);
                ti += 1;
            }
        }
        if !holds(&facts, &op.over_all) || !holds(&facts, &op.end_pre) {
            return None;
        }
        apply(&mut facts, &op.end_eff);
        let noop = op
            .start_eff
            .iter()
            .chain(&op.end_eff)
            .all(|&(v, _)| before.get(v) == facts.get(v));
        if noop {
            return None;
        }
        Some((facts, end, ti, start))
    }
}

fn lits(ls: &[GroundLiteral], timing: Timing, interner: &mut Interner) -> Vec<Lit> {
    ls.iter()
        .filter(|l| l.timing == timing)
        .map(|l| (interner.id(&l.var), l.value))
        .collect()
}

struct Interner(HashMap<Variable, usize>);

impl Interner {
    fn id(&mut self, v: &Variable) -> usize {
        let n = self.0.len();
        *self.0.entry(v.clone()).or_insert(n)
    }
}

/// Solves `task` from its initial state.
pub fn solve(task: &PlanningTask, opts: &SolveOptions) -> Result<Plan, PlanError> {
    search(task, &WorldState::initial(task), None, opts)
}

/// Solves `task` from `state`; timed literals after `state.clock` are still to come.
pub fn solve_from_state(task: &PlanningTask, state: &WorldState, opts: &SolveOptions) -> Result<Plan, PlanError> {
    search(task, state, Some(state.clock), opts)
}

fn search(
    task: &PlanningTask,
    state: &WorldState,
    after: Option<Time>,
    opts: &SolveOptions,
) -> Result<Plan, PlanError> {
    let started = Instant::now();
    let mut ground = ground_actions(task)?;
    let key = |g: &GroundAction| {
        let idx: Vec<usize> = g
            .args
            .iter()
            .map(|a| task.object_index(a).unwrap_or(usize::MAX))
            .collect();
        (g.schema.clone(), idx)
    };
    ground.sort_by_cached_key(key);

    let mut interner = Interner(HashMap::new());
    let ops: Vec<Op> = ground
        .into_iter()
        .map(|g| Op {
            start_pre: lits(&g.conds, Timing::AtStart, &mut interner),
            over_all: lits(&g.conds, Timing::OverAll, &mut interner),
            end_pre: lits(&g.conds, Timing::AtEnd, &mut interner),
            start_eff: lits(&g.effs, Timing::AtStart, &mut interner),
            end_eff: lits(&g.effs, Timing::AtEnd, &mut interner),
            ground: g,
        })
        .collect();
    let goals: Vec<Lit> = task
        .instance
        .goals
        .iter()
        .map(|a| (interner.id(&a.var), a.value))
        .collect();
    let mut timed: Vec<&crate::task::TimedAssignment> = task
        .instance
        .timed
        .iter()
        .filter(|t| after.is_none_or(|a| t.time > a))
        .collect();
    timed.sort_by_key(|t| t.time);
    let mut pending: Vec<(Time, Vec<Lit>)> = Vec::new();
    for t in timed {
        let lit = (interner.id(&t.assignment.var), t.assignment.value);
        match pending.last_mut() {
            Some((time, ls)) if *time == t.time => ls.push(lit),
            _ => pending.push((t.time, vec![lit])),
        }
    }
    let known: Vec<(usize, &Variable)> = state
        .facts
        .iter()
        .filter_map(|v| interner.0.get(v).map(|&i| (i, v)))
        .collect();
    let mut facts = Bits::new(interner.0.len());
    for (i, _) in known {
        facts.set(i, true);
    }

    let problem = Problem {
        ops,
        pending,
        goals,
        deadline: opts.deadline,
    };
    let root = Node {
        facts,
        clock: state.clock,
        timed: 0,
        g: 0,
        parent: None,
    };
    let mut nodes = vec![root];
    let mut seen: HashMap<(Bits, usize), Vec<(u32, Time)>> = HashMap::new();
    seen.insert((nodes[0].facts.clone(), 0), vec![(0, state.clock)]);
    let mut open = BinaryHeap::new();
    let h0 = problem.unmet(&nodes[0].facts);
    let mut seq = 0u64;
    open.push(Reverse((h0, h0, seq, 0usize)));
    let mut explored = 0usize;

    while let Some(Reverse((_, _, _, id))) = open.pop() {
        if problem.is_goal(&nodes[id]) {
            let plan = reconstruct(&nodes, &problem, id);
            let v = validate_from_state(task, &plan, state.clone(), after)?;
            if v.is_valid() {
                log::debug!("plan of {} steps after {explored} expansions", plan.len());
                return Ok(plan);
            }
            log::warn!("search produced a plan the simulator rejects: {:?}", v.violations.first());
            continue;
        }
        explored += 1;
        if explored > opts.node_budget || opts.time_limit.is_some_and(|l| started.elapsed() > l) {
            return Err(PlanError::Unsolvable {
                explored,
                budget_exhausted: true,
            });
        }
        for (oi, op) in problem.ops.iter().enumerate() {
            let Some((facts, clock, timed, start)) = problem.successor(&nodes[id], op) else {
                continue;
            };
            let g = nodes[id].g + 1;
            let entry = seen.entry((facts.clone(), timed)).or_default();
            if entry.iter().any(|&(g2, c2)| g2 <= g && c2 <= clock) {
                continue;
            }
            entry.retain(|&(g2, c2)| !(g <= g2 && clock <= c2));
            entry.push((g, clock));
            let h = problem.unmet(&facts);
            nodes.push(Node {
                facts,
                clock,
                timed,
                g,
                parent: Some((id, oi, start)),
            });
            seq += 1;
            open.push(Reverse((g + h, h, seq, nodes.len() - 1)));
        }
    }
    Err(PlanError::Unsolvable {
        explored,
        budget_exhausted: false,
    })
}

fn reconstruct(nodes: &[Node], problem: &Problem, mut id: usize) -> Plan {
    let mut steps = Vec::new();
    while let Some((parent, oi, start)) = nodes[id].parent {
        let g = &problem.ops[oi].ground;
        steps.push(PlanStep {
            start,
            action: g.schema.clone(),
            args: g.args.clone(),
            duration: g.duration,
        });
        id = parent;
    }
    steps.reverse();
    Plan { steps }
}
