use std::path::Path;

use condguide::io::encode_rgb_png;
use condguide::pose::reference_pose_map;

use super::{par_map, PoseJob};
use crate::args::RefposeArgs;
use crate::config::Settings;
use crate::error::CliResult;
use crate::inputs::write_output;
use crate::report::report_path;

pub fn run(args: &RefposeArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let mut job = PoseJob::start("refpose", &args.input, &args.out, settings)?;
    let topology = job.pose.topology();
    let pngs = par_map(job.pose.frames(), |_, frame| {
        Ok(encode_rgb_png(&reference_pose_map(
            frame,
            topology,
            &settings.render,
        )?)?)
    })?;
    for (k, png) in pngs.iter().enumerate() {
        let path = job.frame_path(&args.out, k, "png");
        write_output(&path, png)?;
        job.report.output(&path);
    }
    job.report.write(&report_path(report, &args.out, "refpose"))
}
