use std::fs::File;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::PlanError;
use crate::sim::validate_plan;
use crate::task::{parse_plan, serialize_task, Plan, PlanningTask};

/// Seconds an external planner may run; read when no explicit timeout is given.
pub const TIMEOUT_ENV: &str = "ONTOGOAL_PLANNER_TIMEOUT";

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Default)]
pub struct ExternalOptions {
    pub timeout: Option<Duration>,
}

impl ExternalOptions {
    fn timeout(&self) -> Duration {
        self.timeout
            .or_else(|| {
                std::env::var(TIMEOUT_ENV)
                    .ok()
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|s| *s > 0.0)
                    .map(Duration::from_secs_f64)
            })
            .unwrap_or(DEFAULT_TIMEOUT)
    }
}

/// Runs an external planner. `template` is split on whitespace and the
/// placeholders `{domain}`, `{problem}` and `{plan_out}` are substituted in
/// each word. The plan written to `{plan_out}` must validate against `task`.
pub fn invoke_external(template: &str, task: &PlanningTask, opts: &ExternalOptions) -> Result<Plan, PlanError> {
    let dir = tempfile::tempdir()?;
    let domain = dir.path().join("domain.task");
    let problem = dir.path().join("problem.task");
    let plan_out = dir.path().join("plan.out");
    let (d, p) = serialize_task(task);
    std::fs::write(&domain, d)?;
    std::fs::write(&problem, p)?;

    let argv: Vec<String> = template
        .split_whitespace()
        .map(|w| {
            w.replace("{domain}", &domain.to_string_lossy())
                .replace("{problem}", &problem.to_string_lossy())
                .replace("{plan_out}", &plan_out.to_string_lossy())
        })
        .collect();
    let (program, args) = argv.split_first().ok_or(PlanError::EmptyCommand)?;
    let stdout_path = dir.path().join("stdout");
    let stderr_path = dir.path().join("stderr");
    log::info!("running external planner: {}", argv.join(" "));
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(File::create(&stdout_path)?)
        .stderr(File::create(&stderr_path)?)
        .spawn()?;

    let limit = opts.timeout();
    let begun = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if begun.elapsed() > limit {
            let _ = child.kill();
            let _ = child.wait();
            return Err(PlanError::Timeout(limit));
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    if !status.success() {
        let stderr = std::fs::read_to_string(&stderr_path).unwrap_or_default();
        return Err(PlanError::Process {
            status: status.code(),
            stderr: stderr.trim().to_string(),
        });
    }
    let text = std::fs::read_to_string(&plan_out)?;
    let plan = parse_plan(&text)?;
    let v = validate_plan(task, &plan)?;
    if !v.is_valid() {
        return Err(PlanError::invalid(&v.violations, &v.unmet_goals));
    }
    Ok(plan)
}
