use std::path::PathBuf;
use std::process::{Command, Output};

fn ra(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/ra")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn ontogoal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontogoal")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_reports_the_case_study() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.jsonl");
    let o = ontogoal(&[
        "run",
        &ra("scenario.json"),
        "--report",
        report.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("iphone_id7500 (mobile_phone): rejected-unmanageable"), "{out}");
    assert!(out.contains("bosch_id3400 (kitchen_range): integrated"), "{out}");
    assert!(out.contains("goals achieved 8/8"), "{out}");
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["outcomes"][1]["placement"]["parent"], "major_appliance");
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().count() > 100);
    for l in lines.lines() {
        serde_json::from_str::<serde_json::Value>(l).unwrap();
    }
}

#[test]
fn missing_scenario_is_a_fixture_error() {
    let o = ontogoal(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/scenario.json"));
}

#[test]
fn malformed_task_is_a_fixture_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.task");
    std::fs::write(&bad, "(:classes a - thing").unwrap();
    let o = ontogoal(&["plan", bad.to_str().unwrap(), &ra("problem.task")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plan_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan1.plan");
    let o = ontogoal(&["plan", &ra("domain.task"), &ra("problem.task"), "-o", plan.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&plan).unwrap();
    assert_eq!(text.lines().count(), 27);
    assert!(text.lines().next().unwrap().contains("(MOVE AV AREA_STORAGE AREA_TRANSIT)"));
    let o = ontogoal(&["simulate", &ra("domain.task"), &ra("problem.task"), plan.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("plan valid: 27 actions"));
}

#[test]
fn simulate_reports_a_broken_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("broken.plan");
    let text: String = std::fs::read_to_string(ra("plan1.plan"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("5.0005"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&plan, text).unwrap();
    let o = ontogoal(&["simulate", &ra("domain.task"), &ra("problem.task"), plan.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn external_planner_round_trip() {
    let template = format!("{} plan {{domain}} {{problem}} -o {{plan_out}}", env!("CARGO_BIN_EXE_ontogoal"));
    let o = ontogoal(&["plan", &ra("domain.task"), &ra("problem.task"), "--external", &template]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 27);
}

#[test]
fn failing_external_planner() {
    let o = ontogoal(&["plan", &ra("domain.task"), &ra("problem.task"), "--external", "false"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn similarity_stages() {
    let ann = ra("annotations.json");
    let o = ontogoal(&[
        "similarity",
        &ra("domain.task"),
        &ra("remotes/c.task"),
        "--stage",
        "vsm",
        "--annotations",
        &ann,
    ]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v < 0.5);

    let o = ontogoal(&["similarity", &ra("domain.task"), &ra("remotes/b.task"), "--annotations", &ann]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("# classes") && out.contains("# heads"));
    let json = &out[out.find("\n{").unwrap()..];
    let r: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(r["manageable"], true);
}

#[test]
fn align_places_kitchen_range() {
    let ann = ra("annotations.json");
    let o = ontogoal(&["align", &ra("domain.task"), &ra("remotes/b.task"), "kitchen_range", "--annotations", &ann]);
    assert_eq!(code(&o), 0);
    let p: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(p["mode"], "sibling-vote");
    assert_eq!(p["parent"], "major_appliance");

    let o = ontogoal(&["align", &ra("domain.task"), &ra("remotes/b.task"), "toaster"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn export_owl_writes_the_ontology() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.owl");
    let o = ontogoal(&["export-owl", &ra("remotes/b.task"), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("kitchen_range"));
    assert!(text.contains("fix"));

    let classes = dir.path().join("c.owl");
    let o = ontogoal(&["export-owl", &ra("remotes/b.task"), "-o", classes.to_str().unwrap(), "--classes-only"]);
    assert_eq!(code(&o), 0);
    assert!(!std::fs::read_to_string(&classes).unwrap().contains("fix"));
}
