use std::path::Path;

use condguide::depth_order::{
    depth_order_inference, depth_order_training, reference_ranks, CharacterRank, DepthOrderMap,
};
use condguide::io::{
    encode_order_png, read_rank_sidecar, write_json_atomic, write_pfm, FrameRanks, RankSidecar,
};

use super::{par_map, PoseJob};
use crate::args::{DepthorderArgs, Mode};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{list_files, load_depth, load_pose, write_output};
use crate::report::{report_path, RunReport};

fn reference(
    args: &DepthorderArgs,
    settings: &Settings,
    report: &mut RunReport,
) -> CliResult<Vec<CharacterRank>> {
    let k = args.reference_frame;
    if let Some(path) = &args.reference_ranks {
        report.input(path);
        let sidecar =
            read_rank_sidecar(path).map_err(|e| CliError::from(e).context_if_data(path))?;
        return sidecar
            .frames
            .into_iter()
            .find(|f| f.frame == k)
            .map(|f| f.ranks)
            .ok_or_else(|| CliError::data(format!("{}: no ranks for frame {k}", path.display())));
    }
    match (&args.reference_pose, &args.reference_depth) {
        (Some(pose_path), Some(depth_path)) => {
            report.input(pose_path);
            report.input(depth_path);
            let pose = load_pose(pose_path)?;
            let frame = pose.frames().get(k).ok_or_else(|| {
                CliError::data(format!(
                    "{}: reference frame {k} out of range ({} frames)",
                    pose_path.display(),
                    pose.len()
                ))
            })?;
            let depth = load_depth(
                depth_path,
                settings.depth_convention,
                settings.depth_png_scale,
            )?;
            Ok(reference_ranks(
                frame,
                pose.topology(),
                &depth,
                &settings.depth_order(),
            )?)
        }
        _ => Err(CliError::usage(
            "inference mode needs --reference-ranks, or --reference-pose with --reference-depth",
        )),
    }
}

pub fn run(args: &DepthorderArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    match args.mode {
        Mode::Train if args.depth.is_none() => {
            return Err(CliError::usage("training mode needs --depth"));
        }
        Mode::Train if args.reference_ranks.is_some() || args.reference_pose.is_some() => {
            return Err(CliError::usage(
                "reference inputs only apply in inference mode",
            ));
        }
        Mode::Infer if args.depth.is_some() => {
            return Err(CliError::usage(
                "--depth only applies in training mode; inference takes reference ranks",
            ));
        }
        _ => {}
    }
    // Usage problems are reported before any file is touched.
    if args.mode == Mode::Infer && args.reference_ranks.is_none() && args.reference_pose.is_none() {
        return Err(CliError::usage(
            "inference mode needs --reference-ranks, or --reference-pose with --reference-depth",
        ));
    }

    let mut job = PoseJob::start("depthorder", &args.input, &args.out, settings)?;
    let params = settings.depth_order();
    let topology = job.pose.topology();

    let maps: Vec<DepthOrderMap> = match args.mode {
        Mode::Train => {
            let dir = args.depth.as_deref().expect("checked above");
            let files = list_files(dir, &["pfm", "png"])?;
            if files.len() != job.pose.len() {
                return Err(CliError::data(format!(
                    "{}: expected {} depth files (one per pose frame), found {}",
                    dir.display(),
                    job.pose.len(),
                    files.len()
                )));
            }
            job.report.input(dir);
            par_map(job.pose.frames(), |k, frame| {
                let depth = load_depth(
                    &files[k],
                    settings.depth_convention,
                    settings.depth_png_scale,
                )?;
                depth_order_training(frame, topology, &depth, &params)
                    .map_err(|e| CliError::from(e).context(format!("frame {k}")))
            })?
        }
        Mode::Infer => {
            let ranks = reference(args, settings, &mut job.report)?;
            let topology = job.pose.topology();
            par_map(job.pose.frames(), |k, frame| {
                depth_order_inference(&ranks, frame, topology, &params)
                    .map_err(|e| CliError::from(e).context(format!("frame {k}")))
            })?
        }
    };

    let mut sidecar = RankSidecar {
        frames: Vec::with_capacity(maps.len()),
    };
    for (k, map) in maps.into_iter().enumerate() {
        for r in map
            .ranks
            .iter()
            .filter(|r| args.mode == Mode::Train && r.mean_depth.is_none())
        {
            job.report.warn(format!(
                "frame {k}: character {} has no unoccluded pixels; ranked behind the others",
                r.character_id
            ));
        }
        let pfm = job.frame_path(&args.out, k, "pfm");
        write_output(&pfm, &write_pfm(&map.map)?)?;
        job.report.output(&pfm);
        let png = job.frame_path(&args.out, k, "png");
        write_output(&png, &encode_order_png(&map)?)?;
        job.report.output(&png);
        sidecar.frames.push(FrameRanks {
            frame: k,
            ranks: map.ranks,
        });
    }
    let ranks_path = args.out.join(format!("{}_ranks.json", job.clip));
    write_json_atomic(&ranks_path, &sidecar)?;
    job.report.output(&ranks_path);
    job.report
        .write(&report_path(report, &args.out, "depthorder"))
}
