use std::path::Path;

use condguide::dilation::frame_dilation_maps;
use condguide::io::encode_mask_png;

use super::{par_map, PoseJob};
use crate::args::DilateArgs;
use crate::config::Settings;
use crate::error::CliResult;
use crate::inputs::write_output;
use crate::report::report_path;

pub fn run(args: &DilateArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let mut job = PoseJob::start("dilate", &args.input, &args.out, settings)?;
    let params = settings.dilation();
    let topology = job.pose.topology();

    let frames = par_map(job.pose.frames(), |_, frame| {
        frame_dilation_maps(frame, topology, &params)?
            .into_iter()
            .map(|m| Ok((m.character_id, m.degenerate, encode_mask_png(&m.mask)?)))
            .collect::<CliResult<Vec<_>>>()
    })?;

    for (k, masks) in frames.iter().enumerate() {
        for (id, degenerate, png) in masks {
            if *degenerate {
                job.report.warn(format!(
                    "frame {k}: character {id} has no visible joint; mask is empty"
                ));
            }
            let path = args.out.join(format!("{}_{k:05}_{id}.png", job.clip));
            write_output(&path, png)?;
            job.report.output(&path);
        }
    }
    job.report.write(&report_path(report, &args.out, "dilate"))
}
