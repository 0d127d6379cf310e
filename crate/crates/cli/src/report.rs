use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Settings;
use crate::error::CliResult;

/// Machine-readable summary of one invocation. Contains no timestamps, so
/// identical invocations produce identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<String>,
    pub params: Settings,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, settings: &Settings) -> Self {
        RunReport {
            command: command.to_owned(),
            inputs: Vec::new(),
            params: settings.clone(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        condguide::io::write_json_atomic(path, self)?;
        Ok(())
    }
}

/// Report location: the explicit `--report` path, else `<dir>/<command>_report.json`.
pub fn report_path(explicit: Option<&Path>, dir: &Path, command: &str) -> PathBuf {
    explicit.map_or_else(
        || dir.join(format!("{command}_report.json")),
        Path::to_path_buf,
    )
}
