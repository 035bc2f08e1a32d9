use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};

use ontogoal::alignment::{neighbourhood_align, AlignConfig};
use ontogoal::ontology::{build_class_ontology, enrich, export_owl, extend_ontology, AnnotationSource, Ontology};
use ontogoal::pipeline::{run_scenario, LoadedScenario};
use ontogoal::planner::{invoke_external, solve, ExternalOptions, SolveOptions};
use ontogoal::sim::validate_plan;
use ontogoal::similarity::{tsm, vsm_similarity};
use ontogoal::task::{parse_plan, parse_signature, parse_task, PlanningTask, Signature};

#[derive(Parser)]
#[command(name = "ontogoal", version, about = "Ontology-driven goal formulation for temporal planning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and handle the new objects it reports.
    Run {
        scenario: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write one JSON line per processed event here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve a task with the built-in planner or an external command.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        /// Command template with {domain}, {problem} and {plan_out} placeholders.
        #[arg(long)]
        external: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a plan and report violated conditions and unmet goals.
    Simulate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
    },
    /// Compare two task vocabularies.
    Similarity {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Stage::Tsm)]
        stage: Stage,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Place a class of a remote task in the local taxonomy.
    Align {
        task: PathBuf,
        remote: PathBuf,
        class: String,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Write the ontology of a task vocabulary in functional syntax.
    ExportOwl {
        task: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Classes only, without pattern and action-head properties.
        #[arg(long)]
        classes_only: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Vsm,
    Tsm,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn fixture(path: &Path, e: impl Display) -> Failure {
    Failure {
        code: 2,
        err: anyhow!("{}: {e}", path.display()),
    }
}

fn fault(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: e.into() }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fixture(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fault(anyhow!("{}: {e}", path.display())))
}

fn load_task(domain: &Path, problem: &Path) -> Result<PlanningTask, Failure> {
    let task = parse_task(&read(domain)?, &read(problem)?).map_err(|e| fixture(domain, e))?;
    task.validate().map_err(|e| fixture(problem, e))?;
    Ok(task)
}

fn load_signature(path: &Path) -> Result<Signature, Failure> {
    parse_signature(&read(path)?).map_err(|e| fixture(path, e))
}

fn load_annotations(path: Option<&Path>) -> Result<AnnotationSource, Failure> {
    let src = match path {
        Some(p) => AnnotationSource::load(p).map_err(|e| fixture(p, e))?,
        None => AnnotationSource::empty(),
    };
    Ok(src.with_env_endpoint())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_else(|| "task".to_string())
}

fn ontology(path: &Path, sig: &Signature, extended: bool, src: &AnnotationSource) -> Result<Ontology, Failure> {
    let base = build_class_ontology(&stem(path), &sig.classes);
    let o = if extended {
        extend_ontology(&base, &sig.patterns, &sig.heads).map_err(|e| fixture(path, e))?
    } else {
        base
    };
    Ok(enrich(&o, src))
}

fn run(scenario: &Path, report: Option<&Path>, trace: Option<&Path>) -> Outcome {
    let sc = LoadedScenario::load(scenario).map_err(|e| Failure {
        code: e.exit_code() as u8,
        err: e.into(),
    })?;
    let out = run_scenario(&sc).map_err(|e| Failure {
        code: e.exit_code() as u8,
        err: e.into(),
    })?;
    let r = &out.report;
    for o in &r.outcomes {
        let decision = serde_json::to_value(o.decision).map_err(fault)?;
        println!("{} {} ({}): {}", o.time, o.object, o.class, decision.as_str().unwrap_or_default());
    }
    for v in &r.violations {
        println!("violation: {v}");
    }
    println!("executed {} actions", r.executed.len());
    println!("goals achieved {}/{}", r.goals_achieved, r.goals_total);
    if let Some(p) = report {
        write(p, &serde_json::to_string_pretty(r).map_err(fault)?)?;
    }
    if let Some(p) = trace {
        let mut text = String::new();
        for e in &out.trace {
            text.push_str(&serde_json::to_string(e).map_err(fault)?);
            text.push('\n');
        }
        write(p, &text)?;
    }
    Ok(if r.is_success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn plan(domain: &Path, problem: &Path, external: Option<&str>, output: Option<&Path>) -> Outcome {
    let task = load_task(domain, problem)?;
    let plan = match external {
        Some(cmd) => invoke_external(cmd, &task, &ExternalOptions::default()),
        None => solve(&task, &SolveOptions::default()),
    }
    .map_err(fault)?;
    match output {
        Some(p) => write(p, &plan.to_string())?,
        None => print!("{plan}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(domain: &Path, problem: &Path, plan_path: &Path) -> Outcome {
    let task = load_task(domain, problem)?;
    let plan = parse_plan(&read(plan_path)?).map_err(|e| fixture(plan_path, e))?;
    let v = validate_plan(&task, &plan).map_err(|e| fixture(plan_path, e))?;
    for x in &v.violations {
        println!("violation: {x}");
    }
    for g in &v.unmet_goals {
        println!("unmet goal: {g}");
    }
    if v.is_valid() {
        println!("plan valid: {} actions, all {} goals achieved", plan.len(), task.instance.goals.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn similarity(a: &Path, b: &Path, stage: Stage, annotations: Option<&Path>) -> Outcome {
    let src = load_annotations(annotations)?;
    let (sa, sb) = (load_signature(a)?, load_signature(b)?);
    match stage {
        Stage::Vsm => {
            let v = vsm_similarity(&ontology(a, &sa, false, &src)?, &ontology(b, &sb, false, &src)?);
            println!("{v:.4}");
        }
        Stage::Tsm => {
            let r = tsm(&ontology(a, &sa, true, &src)?, &ontology(b, &sb, true, &src)?);
            for (name, m) in [("classes", &r.class), ("patterns", &r.pattern), ("heads", &r.head)] {
                println!("# {name}");
                print!("{}", m.to_tsv());
            }
            println!("{}", serde_json::to_string_pretty(&r).map_err(fault)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn align(task: &Path, remote: &Path, class: &str, annotations: Option<&Path>) -> Outcome {
    let src = load_annotations(annotations)?;
    let local = ontology(task, &load_signature(task)?, true, &src)?;
    let remote = ontology(remote, &load_signature(remote)?, true, &src)?;
    let p = neighbourhood_align(&local, &remote, &class.to_lowercase(), &AlignConfig::default());
    println!("{}", serde_json::to_string_pretty(&p).map_err(fault)?);
    Ok(if p.is_rejected() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn export(task: &Path, output: &Path, annotations: Option<&Path>, classes_only: bool) -> Outcome {
    let src = load_annotations(annotations)?;
    let o = ontology(task, &load_signature(task)?, !classes_only, &src)?;
    write(output, &export_owl(&o))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, report, trace } => run(scenario, report.as_deref(), trace.as_deref()),
        Command::Plan {
            domain,
            problem,
            external,
            output,
        } => plan(domain, problem, external.as_deref(), output.as_deref()),
        Command::Simulate { domain, problem, plan } => simulate(domain, problem, plan),
        Command::Similarity {
            a,
            b,
            stage,
            annotations,
        } => similarity(a, b, *stage, annotations.as_deref()),
        Command::Align {
            task,
            remote,
            class,
            annotations,
        } => align(task, remote, class, annotations.as_deref()),
        Command::ExportOwl {
            task,
            output,
            annotations,
            classes_only,
        } => export(task, output, annotations.as_deref(), *classes_only),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
