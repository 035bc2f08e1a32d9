use std::fmt;

use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub start: Time,
    pub action: String,
    pub args: Vec<String>,
    pub duration: Time,
}

impl PlanStep {
    pub fn end(&self) -> Time {
        self.start + self.duration
    }

    /// `(move av area_storage area_transit)`
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.action);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} [{}]",
            self.start,
            self.signature().to_uppercase(),
            self.duration
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Action names only, for sequence comparisons that ignore timestamps.
    pub fn action_names(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.action.as_str()).collect()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses `T: (NAME ARGS...) [D]` lines. Names are case-insensitive and
/// normalized to lowercase; steps are stably sorted by start time.
pub fn parse_plan(text: &str) -> Result<Plan, TaskError> {
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let bad = |msg: &str| TaskError::Syntax {
            line: idx + 1,
            col: 1,
            msg: format!("{msg}: `{line}`"),
        };
        let (time, rest) = line.split_once(':').ok_or_else(|| bad("missing `:` after time"))?;
        let start: Time = time.trim().parse().map_err(|_| bad("bad start time"))?;
        let rest = rest.trim();
        let open = rest.strip_prefix('(').ok_or_else(|| bad("expected `(`"))?;
        let (call, tail) = open.split_once(')').ok_or_else(|| bad("expected `)`"))?;
        let mut words = call.split_whitespace().map(str::to_lowercase);
        let action = words.next().ok_or_else(|| bad("missing action name"))?;
        let args = words.collect();
        let dur = tail
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| bad("expected `[duration]`"))?;
        let duration: Time = dur.trim().parse().map_err(|_| bad("bad duration"))?;
        if start.is_negative() || duration.is_negative() {
            return Err(bad("negative time"));
        }
        steps.push(PlanStep {
            start,
            action,
            args,
            duration,
        });
    }
    steps.sort_by_key(|s| s.start);
    Ok(Plan { steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_listing_style_line() {
        let plan = parse_plan("0.0003: (MOVE AV AREA_STORAGE AREA_TRANSIT) [5.0000]\n").unwrap();
        let s = &plan.steps[0];
        assert_eq!(s.start, Time::from_ticks(3));
        assert_eq!(s.action, "move");
        assert_eq!(s.args, ["av", "area_storage", "area_transit"]);
        assert_eq!(s.duration, Time::from_int(5));
        assert_eq!(s.to_string(), "0.0003: (MOVE AV AREA_STORAGE AREA_TRANSIT) [5.0000]");
    }

    #[test]
    fn empty_text_is_empty_plan() {
        assert!(parse_plan("").unwrap().is_empty());
        assert!(parse_plan("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = parse_plan("1.0: (A) [1]\n2.0 (B) [1]").unwrap_err();
        assert!(matches!(err, TaskError::Syntax { line: 2, .. }), "{err:?}");
        assert!(parse_plan("1.0: (A)").is_err());
    }

    #[test]
    fn sort_is_stable_for_ties() {
        let plan = parse_plan("2: (b) [0]\n1: (c) [0]\n2: (a) [0]").unwrap();
        assert_eq!(plan.action_names(), ["c", "b", "a"]);
    }
}
