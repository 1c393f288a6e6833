//! Scenario-file driven front end: parse a JSON scenario, build the typed
//! model objects through the library constructors, and run validation,
//! inequality checks, setting search or Monte-Carlo simulation.

pub mod output;
pub mod runner;
pub mod scenario;

use std::path::Path;

pub use output::Format;
pub use runner::{CheckOutcome, RunError, SearchOutput, ValidationSummary};
pub use scenario::{BuiltScenario, ScenarioFile};

/// Parse a scenario file; parse errors carry the offending field path and
/// line/column.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, RunError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(deserializer).map_err(|e| {
        let inner = e.inner();
        RunError::Parse(format!(
            "field `{}` at line {} column {}: {}",
            e.path(),
            inner.line(),
            inner.column(),
            inner
        ))
    })
}
