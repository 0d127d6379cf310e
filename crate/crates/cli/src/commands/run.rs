//! Long-video generation through an external generator process.
//!
//! For each window the generator is started as
//! `PROGRAM [ARGS...] OUTPUT_DIR` with the window's pose slice (pose JSON)
//! on stdin and `CONDGUIDE_WINDOW_INDEX`, `CONDGUIDE_WINDOW_START` and
//! `CONDGUIDE_WINDOW_LENGTH` in its environment. It must write one PNG per
//! frame into `OUTPUT_DIR`; files are taken in name order.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use condguide::io::encode_image_png;
use condguide::pose::PoseSequence;
use condguide::scheduler::{plan_windows, run_windowed, Window};
use condguide::Raster;

use super::{par_map, PoseJob};
use crate::args::RunArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{list_files, load_image, write_output};
use crate::report::report_path;

fn generate(
    args: &RunArgs,
    pose: &PoseSequence,
    index: usize,
    window: Window,
) -> CliResult<Vec<Raster<f32>>> {
    let slice = pose.slice(window.start..window.end())?;
    let dir = tempfile::tempdir().map_err(|e| CliError::io(format!("temporary directory: {e}")))?;
    let program = args.generator.display();
    let mut child = Command::new(&args.generator)
        .args(&args.generator_args)
        .arg(dir.path())
        .env("CONDGUIDE_WINDOW_INDEX", index.to_string())
        .env("CONDGUIDE_WINDOW_START", window.start.to_string())
        .env("CONDGUIDE_WINDOW_LENGTH", window.length.to_string())
        .stdin(Stdio::piped())
        // Keep our stdout free for machine-readable output.
        .stdout(Stdio::from(std::io::stderr()))
        .spawn()
        .map_err(|e| CliError::io(format!("{program}: {e}")))?;
    let written = child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(&slice.to_json_bytes());
    let status = child
        .wait()
        .map_err(|e| CliError::io(format!("{program}: {e}")))?;
    if !status.success() {
        return Err(CliError::data(format!(
            "{program} failed on window {index}: {status}"
        )));
    }
    // A generator that ignores stdin may close it early; only a failed exit matters.
    if let Err(e) = written {
        log::debug!("{program}: pose slice not fully consumed: {e}");
    }
    let files = list_files(dir.path(), &["png"])?;
    if files.len() != window.length {
        return Err(CliError::data(format!(
            "{program} wrote {} frames for window {index}, expected {}",
            files.len(),
            window.length
        )));
    }
    par_map(&files, |_, p| load_image(p))
}

pub fn run(args: &RunArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let mut job = PoseJob::start("run", &args.input, &args.out, settings)?;
    let plan = plan_windows(job.pose.len(), settings.window, settings.stride)?;

    // The scheduler wraps generator errors; keep the original to preserve its exit category.
    let mut failure = None;
    let blended = run_windowed(&job.pose, settings.window, settings.stride, |i, _| {
        generate(args, &job.pose, i, plan.windows[i]).map_err(|e| {
            let message = e.to_string();
            failure = Some(e);
            message
        })
    });
    let frames = match (blended, failure) {
        (_, Some(e)) => return Err(e),
        (r, None) => r?,
    };

    let pngs = par_map(&frames, |_, f| Ok(encode_image_png(f)?))?;
    for (k, png) in pngs.iter().enumerate() {
        let path = job.frame_path(&args.out, k, "png");
        write_output(&path, png)?;
        job.report.output(&path);
    }
    job.report.write(&report_path(report, &args.out, "run"))
}
