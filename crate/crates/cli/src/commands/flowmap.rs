use std::path::{Path, PathBuf};

use condguide::dilation::frame_character_mask;
use condguide::flow::{estimate_flow_blockmatch, flow_guidance_inference, flow_guidance_training};
use condguide::io::{read_file, read_flow, write_guidance};
use condguide::FlowField;

use super::{par_map, PoseJob};
use crate::args::{FlowmapArgs, Mode};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{list_files, load_image, write_output};
use crate::report::report_path;

fn expect_count(dir: &Path, found: usize, expected: usize, what: &str) -> CliResult<()> {
    if found == expected {
        Ok(())
    } else {
        Err(CliError::data(format!(
            "{}: expected {expected} {what}, found {found}",
            dir.display()
        )))
    }
}

/// Flow into frame `k + 1` for every `k`, from PNG frames or CGFL files.
fn training_flows(
    args: &FlowmapArgs,
    frames: usize,
    settings: &Settings,
    job: &mut PoseJob,
) -> CliResult<Vec<FlowField>> {
    match (&args.frames, &args.flows) {
        (Some(dir), _) => {
            let files = list_files(dir, &["png"])?;
            expect_count(dir, files.len(), frames, "PNG frames (one per pose frame)")?;
            job.report.input(dir);
            let images = par_map(&files, |_, p| load_image(p))?;
            let pairs: Vec<usize> = (1..images.len()).collect();
            par_map(&pairs, |_, &k| {
                estimate_flow_blockmatch(&images[k - 1], &images[k], &settings.block_match)
                    .map_err(|e| CliError::from(e).context(files[k].display()))
            })
        }
        (None, Some(dir)) => {
            let files = list_files(dir, &["cgfl"])?;
            expect_count(
                dir,
                files.len(),
                frames.saturating_sub(1),
                "CGFL files (one per frame pair)",
            )?;
            job.report.input(dir);
            par_map(&files, |_, p: &PathBuf| {
                read_flow(&read_file(p)?).map_err(|e| CliError::from(e).context_if_data(p))
            })
        }
        (None, None) => Err(CliError::usage("training mode needs --frames or --flows")),
    }
}

pub fn run(args: &FlowmapArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    if args.mode == Mode::Infer && (args.frames.is_some() || args.flows.is_some()) {
        return Err(CliError::usage(
            "--frames and --flows only apply in training mode; inference uses zero background flow",
        ));
    }
    let mut job = PoseJob::start("flowmap", &args.input, &args.out, settings)?;
    let params = settings.dilation();
    let topology = job.pose.topology();
    let n = job.pose.len();

    // (frame index, encoded guidance map)
    let maps: Vec<(usize, Vec<u8>)> = match args.mode {
        Mode::Infer => par_map(job.pose.frames(), |k, frame| {
            let mask = frame_character_mask(frame, topology, &params)?;
            Ok((k, write_guidance(&flow_guidance_inference(&mask)?)))
        })?,
        Mode::Train => {
            let flows = training_flows(args, n, settings, &mut job)?;
            let topology = job.pose.topology();
            let frames = job.pose.frames().get(1..).unwrap_or_default();
            if n < 2 {
                job.report.warn(
                    "training mode needs at least two frames; no guidance maps written".into(),
                );
            }
            par_map(&flows, |i, flow| {
                let mask = frame_character_mask(&frames[i], topology, &params)?;
                let map = flow_guidance_training(flow, &mask)
                    .map_err(|e| CliError::from(e).context(format!("frame {}", i + 1)))?;
                Ok((i + 1, write_guidance(&map)))
            })?
        }
    };

    for (k, bytes) in &maps {
        let path = job.frame_path(&args.out, *k, "cggm");
        write_output(&path, bytes)?;
        job.report.output(&path);
    }
    job.report.write(&report_path(report, &args.out, "flowmap"))
}
