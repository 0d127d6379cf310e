use std::io::Write;
use std::path::Path;

use condguide::scheduler::plan_windows;

use crate::args::WindowsArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::report::RunReport;

pub fn run(args: &WindowsArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let plan = plan_windows(args.total, settings.window, settings.stride)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut run_report = RunReport::new("windows", settings);
    match &args.out {
        Some(path) => {
            condguide::io::write_json_atomic(path, &plan)?;
            run_report.output(path);
        }
        None => {
            let mut text = serde_json::to_string(&plan)
                .map_err(|e| CliError::data(format!("JSON encoding failed: {e}")))?;
            text.push('\n');
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(format!("standard output: {e}")))?;
        }
    }
    // No output directory here, so a report is written only when asked for.
    if let Some(path) = report {
        run_report.write(path)?;
    }
    Ok(())
}
