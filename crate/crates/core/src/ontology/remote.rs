use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_class_ontology, extend_ontology, Ontology, OntologyError};
use crate::task::{parse_signature, ClassHierarchy, Pattern, SchemaHead};

/// The public part of another agent's task: classes, and optionally pattern
/// signatures and action heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteTaskInfo {
    pub agent_id: String,
    pub classes: ClassHierarchy,
    pub patterns: Vec<Pattern>,
    pub heads: Vec<SchemaHead>,
}

impl RemoteTaskInfo {
    pub fn parse(agent_id: &str, text: &str) -> Result<Self, OntologyError> {
        let sig = parse_signature(text)?;
        Ok(RemoteTaskInfo {
            agent_id: agent_id.to_string(),
            classes: sig.classes,
            patterns: sig.patterns,
            heads: sig.heads,
        })
    }

    pub fn has_signatures(&self) -> bool {
        !self.patterns.is_empty() || !self.heads.is_empty()
    }

    pub fn class_ontology(&self) -> Ontology {
        build_class_ontology(&self.agent_id, &self.classes)
    }

    pub fn extended_ontology(&self) -> Result<Ontology, OntologyError> {
        extend_ontology(&self.class_ontology(), &self.patterns, &self.heads)
    }
}

/// Reads every `*.task` file of `dir` in file-name order; the file stem is the
/// agent id. Unreadable or malformed files are skipped with a warning.
pub fn load_remote_tasks(dir: &Path) -> Vec<RemoteTaskInfo> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("remote repository {}: {e}", dir.display());
            return Vec::new();
        }
    };
    let mut paths: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "task"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let parsed = std::fs::read_to_string(&path)
            .map_err(|source| OntologyError::Io {
                path: path.display().to_string(),
                source,
            })
            .and_then(|text| RemoteTaskInfo::parse(&id, &text));
        match parsed {
            Ok(info) => out.push(info),
            Err(e) => log::warn!("skipping remote task {}: {e}", path.display()),
        }
    }
    out
}
