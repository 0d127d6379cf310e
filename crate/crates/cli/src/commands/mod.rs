mod analyze;
mod depthorder;
mod dilate;
mod flowmap;
mod metrics;
mod refpose;
mod run;
mod windows;

use std::path::Path;

use condguide::pose::PoseSequence;
use rayon::prelude::*;

use crate::args::{Command, PoseInput};
use crate::config::Settings;
use crate::error::CliResult;
use crate::inputs::{clip_id, ensure_dir, load_pose};
use crate::report::RunReport;

pub fn dispatch(command: &Command, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    match command {
        Command::Dilate(a) => dilate::run(a, settings, report),
        Command::Flowmap(a) => flowmap::run(a, settings, report),
        Command::Depthorder(a) => depthorder::run(a, settings, report),
        Command::Refpose(a) => refpose::run(a, settings, report),
        Command::Analyze(a) => analyze::run(a, settings, report),
        Command::Windows(a) => windows::run(a, settings, report),
        Command::Metrics(a) => metrics::run(a, settings, report),
        Command::Run(a) => run::run(a, settings, report),
    }
}

/// A loaded pose sequence with its clip id, an existing output directory and
/// a report that already lists the pose input and low-confidence warnings.
struct PoseJob {
    pose: PoseSequence,
    clip: String,
    report: RunReport,
}

impl PoseJob {
    fn start(command: &str, input: &PoseInput, out: &Path, settings: &Settings) -> CliResult<Self> {
        let pose = load_pose(&input.pose)?;
        let clip = clip_id(input.clip.as_deref(), &input.pose);
        ensure_dir(out)?;
        let mut report = RunReport::new(command, settings);
        report.input(&input.pose);
        for (frame, id) in pose.flagged_characters(settings.render.confidence_threshold) {
            report.warn(format!(
                "frame {frame}: character {id} has no keypoint above the confidence threshold"
            ));
        }
        Ok(PoseJob { pose, clip, report })
    }

    fn frame_path(&self, out: &Path, frame: usize, ext: &str) -> std::path::PathBuf {
        out.join(format!("{}_{frame:05}.{ext}", self.clip))
    }
}

/// Maps `f` over `items` on the current thread pool, keeping input order.
fn par_map<T, U, F>(items: &[T], f: F) -> CliResult<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> CliResult<U> + Sync + Send,
{
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}
