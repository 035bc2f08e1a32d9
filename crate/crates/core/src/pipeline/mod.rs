//! Scenario runner: simulate the plan, and for every object of an unknown
//! class reported by another agent decide whether it is relevant, manageable
//! and worth new goals, replanning when it is.

mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignConfig, AlignError, Placement};
use crate::ontology::{build_class_ontology, enrich, load_remote_tasks, AnnotationSource, OntologyError, RemoteTaskInfo};
use crate::planner::{solve, solve_from_state, PlanError, SolveOptions};
use crate::sim::{classify_discrepancy, Classification, Processed, Provenance, SimError, Simulation, TimedEvent, Violation, WorldState};
use crate::similarity::{TsmConfig, TsmReport};
use crate::task::{parse_plan, parse_task, Assignment, Plan, PlanStep, PlanningTask, TaskError, Variable};
use crate::time::Time;

pub use stages::{
    identify_opportunity, local_ontology, stage1_prefilter, stage2_assess, stage3_integrate, stage4_create_variables,
    stage5_formulate_goals, Assessment, Opportunity, Prefilter,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {msg}")]
    Fixture { path: String, msg: String },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

impl PipelineError {
    fn fixture(path: &Path, msg: impl ToString) -> Self {
        PipelineError::Fixture {
            path: path.display().to_string(),
            msg: msg.to_string(),
        }
    }

    /// 2 for unreadable or malformed inputs, 1 for faults while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Fixture { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFiles {
    pub domain: PathBuf,
    pub problem: PathBuf,
}

/// `[pattern, object...]`
pub type FactSpec = Vec<String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSpec {
    pub time: Time,
    pub fact: FactSpec,
    #[serde(default = "yes")]
    pub value: bool,
    #[serde(default = "default_source")]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSpec {
    pub fact: FactSpec,
    #[serde(default = "yes")]
    pub value: bool,
}

fn yes() -> bool {
    true
}

fn default_source() -> String {
    "external".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub vsm: f64,
    pub tsm: f64,
    pub sibling: f64,
    #[serde(rename = "match")]
    pub match_cutoff: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            vsm: 0.5,
            tsm: 0.5,
            sibling: 0.5,
            match_cutoff: 0.6,
        }
    }
}

impl Thresholds {
    pub fn tsm_config(&self) -> TsmConfig {
        TsmConfig {
            threshold: self.tsm,
            ..TsmConfig::default()
        }
    }

    pub fn align_config(&self) -> AlignConfig {
        AlignConfig {
            match_cutoff: self.match_cutoff,
            sibling_threshold: self.sibling,
        }
    }
}

/// The scenario file. Paths are relative to the file itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub task: TaskFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    #[serde(default)]
    pub exogenous: Vec<ExogenousSpec>,
    #[serde(default)]
    pub class_oracle: BTreeMap<String, String>,
    #[serde(default)]
    pub object_info: BTreeMap<String, Vec<InfoSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remotes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn fact_variable(fact: &FactSpec) -> Option<Variable> {
    let (pattern, objects) = fact.split_first()?;
    Some(Variable {
        pattern: pattern.to_lowercase(),
        objects: objects.iter().map(|o| o.to_lowercase()).collect(),
    })
}

/// A scenario with every referenced file read and parsed.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub task: PlanningTask,
    pub plan: Option<Plan>,
    pub exogenous: Vec<TimedEvent>,
    pub class_oracle: BTreeMap<String, String>,
    pub object_info: BTreeMap<String, Vec<Assignment>>,
    pub remotes: Vec<RemoteTaskInfo>,
    pub annotations: AnnotationSource,
    pub thresholds: Thresholds,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::fixture(path, e))
}

impl LoadedScenario {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = read(path)?;
        let sc: Scenario = serde_json::from_str(&text).map_err(|e| PipelineError::fixture(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_scenario(&sc, base)
    }

    /// Resolves relative paths of `sc` against `base`.
    pub fn from_scenario(sc: &Scenario, base: &Path) -> Result<Self, PipelineError> {
        let at = |p: &Path| base.join(p);
        let (dp, pp) = (at(&sc.task.domain), at(&sc.task.problem));
        let task = parse_task(&read(&dp)?, &read(&pp)?).map_err(|e| PipelineError::fixture(&dp, e))?;
        task.validate().map_err(|e| PipelineError::fixture(&pp, e))?;
        let plan = match &sc.plan {
            Some(p) => {
                let p = at(p);
                Some(parse_plan(&read(&p)?).map_err(|e| PipelineError::fixture(&p, e))?)
            }
            None => None,
        };
        let exogenous = sc
            .exogenous
            .iter()
            .map(|e| {
                let var = fact_variable(&e.fact).ok_or_else(|| PipelineError::fixture(base, "empty exogenous fact"))?;
                Ok(TimedEvent::exogenous(e.time, var, e.value, &e.source))
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let mut object_info = BTreeMap::new();
        for (o, facts) in &sc.object_info {
            let list = facts
                .iter()
                .map(|f| {
                    fact_variable(&f.fact)
                        .map(|v| Assignment::new(v, f.value))
                        .ok_or_else(|| PipelineError::fixture(base, format!("empty fact for `{o}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            object_info.insert(o.to_lowercase(), list);
        }
        let remotes = match &sc.remotes {
            Some(dir) => {
                let dir = at(dir);
                if !dir.is_dir() {
                    return Err(PipelineError::fixture(&dir, "not a directory"));
                }
                load_remote_tasks(&dir)
            }
            None => Vec::new(),
        };
        let annotations = match &sc.annotations {
            Some(p) => {
                let p = at(p);
                AnnotationSource::load(&p).map_err(|e| PipelineError::fixture(&p, e))?
            }
            None => AnnotationSource::empty(),
        }
        .with_env_endpoint();
        Ok(LoadedScenario {
            task,
            plan,
            exogenous,
            class_oracle: sc
                .class_oracle
                .iter()
                .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
                .collect(),
            object_info,
            remotes,
            annotations,
            thresholds: sc.thresholds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    RejectedIrrelevant,
    RejectedUnmanageable,
    Integrated,
}

/// What happened to one new object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionOutcome {
    pub object: String,
    pub class: String,
    pub time: Time,
    pub decision: Decision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub vsm_scores: BTreeMap<String, f64>,
    /// Final TSM value per candidate remote.
    pub tsm_scores: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tsm_report: Option<TsmReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub host: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
    pub added_facts: Vec<Assignment>,
    pub candidate_goals: Vec<Assignment>,
    pub new_goals: Vec<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_plan: Option<Plan>,
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub outcomes: Vec<AcquisitionOutcome>,
    pub executed: Vec<String>,
    pub goals_achieved: usize,
    pub goals_total: usize,
    pub final_facts: Vec<String>,
    pub vsm_scores: BTreeMap<String, f64>,
    pub violations: Vec<Violation>,
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn is_success(&self) -> bool {
        self.violations.is_empty() && self.goals_achieved == self.goals_total
    }

    /// Objects `o` with `(pattern o)` among the final facts.
    pub fn objects_with(&self, pattern: &str) -> Vec<String> {
        let prefix = format!("({pattern} ");
        self.final_facts
            .iter()
            .filter_map(|f| f.strip_prefix(&prefix))
            .filter_map(|rest| rest.strip_suffix(')'))
            .filter(|rest| !rest.contains(' '))
            .map(str::to_string)
            .collect()
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: Report,
    pub trace: Vec<Processed>,
    /// The task as extended during the run.
    pub task: PlanningTask,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Drops facts over objects the task does not declare.
fn known_state(task: &PlanningTask, state: &WorldState) -> WorldState {
    let mut s = state.clone();
    s.facts
        .retain(|v| v.objects.iter().all(|o| task.class_of(o).is_some()));
    s
}

/// The observed world once every step already under way has finished.
fn settled_state(sim: &Simulation) -> WorldState {
    if sim.timeline.in_flight_steps().is_empty() {
        return sim.observed.clone();
    }
    let mut probe = sim.clone();
    probe.timeline.retract_unstarted();
    while probe
        .timeline
        .pending()
        .any(|e| matches!(e.provenance, Provenance::Step { .. }))
    {
        probe.advance();
    }
    probe.observed
}

struct Runner<'a> {
    sc: &'a LoadedScenario,
    task: PlanningTask,
    prefilter: Prefilter,
    sim: Simulation,
    schedule: BTreeMap<usize, PlanStep>,
    solve_opts: SolveOptions,
}

impl Runner<'_> {
    fn acquire(&mut self, object: &str, class: &str, discrepancy: &[Assignment]) -> Result<AcquisitionOutcome, PipelineError> {
        let th = self.sc.thresholds;
        let mut out = AcquisitionOutcome {
            object: object.to_string(),
            class: class.to_string(),
            time: self.sim.clock(),
            decision: Decision::RejectedIrrelevant,
            reason: None,
            vsm_scores: self.prefilter.scores.clone(),
            tsm_scores: BTreeMap::new(),
            tsm_report: None,
            host: None,
            placement: None,
            added_facts: Vec::new(),
            candidate_goals: Vec::new(),
            new_goals: Vec::new(),
            new_plan: None,
            timings: BTreeMap::new(),
        };

        let t = Instant::now();
        let a = stage2_assess(&self.task, &self.prefilter.selected, class, &self.sc.annotations, &th.tsm_config())?;
        out.timings.insert("stage2".into(), ms(t));
        out.tsm_scores = a.reports.iter().map(|(k, r)| (k.clone(), r.final_value)).collect();
        if a.candidates.is_empty() {
            out.reason = Some(format!("no similar remote task declares `{class}`"));
            return Ok(out);
        }
        let Some(host) = a.chosen.clone() else {
            out.decision = Decision::RejectedUnmanageable;
            out.tsm_report = a.best().map(|(_, r)| r.clone());
            out.reason = Some(format!("no remote reaches TSM {}", th.tsm));
            return Ok(out);
        };
        out.tsm_report = Some(a.reports[&host].clone());
        out.host = Some(host.clone());

        let t = Instant::now();
        let (placement, integrated) =
            stage3_integrate(&self.task, &a.local, &a.remotes[&host], class, object, &th.align_config())?;
        out.timings.insert("stage3".into(), ms(t));
        out.placement = Some(placement);
        let Some((task, _)) = integrated else {
            out.decision = Decision::RejectedUnmanageable;
            out.reason = Some(format!("`{class}` could not be placed in the local taxonomy"));
            return Ok(out);
        };
        out.decision = Decision::Integrated;

        let t = Instant::now();
        let info = self.sc.object_info.get(object).map(Vec::as_slice).unwrap_or(&[]);
        let (task, added) = stage4_create_variables(&task, object, discrepancy, info);
        for a in &added {
            self.sim.observed.set(&a.var, a.value);
            self.sim.expected.set(&a.var, a.value);
        }
        out.added_facts = added;
        out.timings.insert("stage4".into(), ms(t));

        let t = Instant::now();
        out.candidate_goals = stage5_formulate_goals(&task, object);
        out.timings.insert("stage5".into(), ms(t));
        self.task = task;
        if out.candidate_goals.is_empty() {
            return Ok(out);
        }

        let t = Instant::now();
        let state = known_state(&self.task, &settled_state(&self.sim));
        let opts = self.solve_opts.clone();
        let opp = identify_opportunity(&self.task, &out.candidate_goals, &state, |t, s| {
            solve_from_state(t, s, &opts)
        });
        out.timings.insert("opportunity".into(), ms(t));
        if let Some(plan) = opp.plan {
            self.task.instance.goals.extend(opp.accepted.iter().cloned());
            for i in self.sim.timeline.retract_unstarted() {
                self.schedule.remove(&i);
            }
            let first = self.sim.timeline.next_step_index();
            self.sim.timeline.append_plan(&self.task, &plan, first)?;
            for (k, s) in plan.steps.iter().enumerate() {
                self.schedule.insert(first + k, s.clone());
            }
            out.new_goals = opp.accepted;
            out.new_plan = Some(plan);
        }
        Ok(out)
    }
}

/// Runs the scenario with the built-in planner.
pub fn run_scenario(sc: &LoadedScenario) -> Result<ScenarioRun, PipelineError> {
    run_scenario_with(sc, &SolveOptions::default())
}

pub fn run_scenario_with(sc: &LoadedScenario, solve_opts: &SolveOptions) -> Result<ScenarioRun, PipelineError> {
    let start = Instant::now();
    let mut timings = BTreeMap::new();
    let task = sc.task.clone();

    let t = Instant::now();
    let plan = match &sc.plan {
        Some(p) => p.clone(),
        None => solve(&task, solve_opts)?,
    };
    timings.insert("initial-plan".to_string(), ms(t));

    let t = Instant::now();
    let local = enrich(&build_class_ontology("local", &task.domain.classes), &sc.annotations);
    let prefilter = stage1_prefilter(&local, &sc.remotes, &sc.annotations, sc.thresholds.vsm);
    timings.insert("stage1".to_string(), ms(t));

    let mut sim = Simulation::for_plan(&task, &plan)?;
    for e in &sc.exogenous {
        sim.timeline.inject_exogenous(e.clone())?;
    }
    let mut run = Runner {
        sc,
        task,
        prefilter,
        sim,
        schedule: plan.steps.iter().cloned().enumerate().collect(),
        solve_opts: solve_opts.clone(),
    };

    let mut outcomes = Vec::new();
    let mut trace = Vec::new();
    let t = Instant::now();
    while let Some(p) = run.sim.advance() {
        let discrepancy = p.discrepancy.clone();
        trace.push(p);
        let Some(d) = discrepancy else { continue };
        for c in classify_discrepancy(&d, &run.task, &sc.class_oracle) {
            match c {
                Classification::NewObjectOfNewClass { object, class } => {
                    let o = run.acquire(&object, &class, &d.entries)?;
                    log::info!("{object} ({class}): {:?}", o.decision);
                    outcomes.push(o);
                }
                Classification::NewObjectOfKnownClass { object, class } => {
                    log::info!("`{object}` is a {class}, a class the task already has; nothing to acquire");
                }
                Classification::Unresolved { object } => {
                    log::warn!("class of `{object}` unknown, ignoring it");
                }
                Classification::StateChange => {
                    log::info!("state change: {}", d.entries.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                }
            }
        }
    }
    timings.insert("simulation".to_string(), ms(t));
    timings.insert("total".to_string(), ms(start));

    let final_state = &run.sim.observed;
    let goals = &run.task.instance.goals;
    let report = Report {
        outcomes,
        executed: run.schedule.values().map(ToString::to_string).collect(),
        goals_achieved: goals.iter().filter(|g| final_state.satisfies(g)).count(),
        goals_total: goals.len(),
        final_facts: final_state.facts.iter().map(ToString::to_string).collect(),
        vsm_scores: run.prefilter.scores.clone(),
        violations: run.sim.violations.clone(),
        timings,
    };
    Ok(ScenarioRun {
        report,
        trace,
        task: run.task,
    })
}
