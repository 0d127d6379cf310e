use std::collections::BTreeMap;
use std::path::Path;

use condguide::analytics::{
    body_occlusion_rate, character_count_mode, histogram, occlusion_quartile_edges,
    video_background_flow_mean, FlowStability, Histogram,
};
use condguide::dilation::frame_dilation_maps;
use condguide::flow::estimate_flow_blockmatch;
use condguide::io::{read_file, read_flow, read_manifest, write_json_atomic, ManifestEntry};
use condguide::{mask_union, BinaryMask, FlowField};
use rayon::prelude::*;
use serde::Serialize;

use super::par_map;
use crate::args::AnalyzeArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{ensure_dir, list_files, load_image, load_pose};
use crate::report::{report_path, RunReport};

#[derive(Debug, Serialize)]
struct ClipRow {
    clip_id: String,
    /// Empty when the clip has fewer than two frames.
    flow_mean: Option<f64>,
    char_count_mode: usize,
    occlusion_mean: f64,
}

#[derive(Debug, Serialize)]
struct StabilityCounts {
    threshold: f64,
    stable: usize,
    noisy: usize,
    undefined: usize,
}

#[derive(Debug, Serialize)]
struct Histograms {
    clips: usize,
    occlusion: Histogram,
    flow_stability: StabilityCounts,
    /// Clips per most-frequent character count.
    character_count: BTreeMap<usize, usize>,
}

/// Flow into each frame after the first, from CGFL files if the directory
/// has any, else estimated from its PNG frames.
fn clip_flows(dir: &Path, frames: usize, settings: &Settings) -> CliResult<Vec<FlowField>> {
    let flow_files = list_files(dir, &["cgfl"])?;
    if !flow_files.is_empty() {
        if flow_files.len() + 1 != frames {
            return Err(CliError::data(format!(
                "{}: expected {} CGFL files for {frames} pose frames, found {}",
                dir.display(),
                frames.saturating_sub(1),
                flow_files.len()
            )));
        }
        return par_map(&flow_files, |_, p| {
            read_flow(&read_file(p)?).map_err(|e| CliError::from(e).context_if_data(p))
        });
    }
    let images = list_files(dir, &["png"])?;
    if images.len() != frames {
        return Err(CliError::data(format!(
            "{}: expected {frames} PNG frames or {} CGFL files, found {} PNG files",
            dir.display(),
            frames.saturating_sub(1),
            images.len()
        )));
    }
    let images = par_map(&images, |_, p| load_image(p))?;
    let pairs: Vec<usize> = (1..images.len()).collect();
    par_map(&pairs, |_, &k| {
        Ok(estimate_flow_blockmatch(
            &images[k - 1],
            &images[k],
            &settings.block_match,
        )?)
    })
}

fn analyze_clip(entry: &ManifestEntry, settings: &Settings) -> CliResult<ClipRow> {
    let clip_id = entry.clip_id();
    let pose = load_pose(&entry.pose)?;
    let params = settings.dilation();
    let masks: Vec<Vec<BinaryMask>> = par_map(pose.frames(), |_, frame| {
        Ok(frame_dilation_maps(frame, pose.topology(), &params)?
            .into_iter()
            .map(|m| m.mask)
            .collect())
    })?;
    let occlusion = body_occlusion_rate(&masks, settings.occlusion_variant)?;

    let flows = clip_flows(&entry.clip, pose.len(), settings)?;
    let flow_mean = if flows.is_empty() {
        None
    } else {
        let unions = masks[1..]
            .iter()
            .zip(pose.frames()[1..].iter())
            .map(|(m, f)| {
                if m.is_empty() {
                    Ok(BinaryMask::empty(f.width, f.height)?)
                } else {
                    Ok(mask_union(m)?)
                }
            })
            .collect::<CliResult<Vec<_>>>()?;
        Some(video_background_flow_mean(&flows, &unions)?)
    };

    Ok(ClipRow {
        clip_id,
        flow_mean,
        char_count_mode: character_count_mode(&pose),
        occlusion_mean: occlusion.mean,
    })
}

pub fn run(args: &AnalyzeArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let manifest = read_manifest(&args.manifest)
        .map_err(|e| CliError::from(e).context_if_data(&args.manifest))?;
    ensure_dir(&args.out)?;
    let mut run_report = RunReport::new("analyze", settings);
    run_report.input(&args.manifest);

    let rows = manifest
        .clips
        .par_iter()
        .map(|entry| {
            analyze_clip(entry, settings)
                .map_err(|e| e.context(format!("clip {}", entry.clip_id())))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut stability = StabilityCounts {
        threshold: settings.stable_threshold,
        stable: 0,
        noisy: 0,
        undefined: 0,
    };
    let mut character_count = BTreeMap::new();
    for (entry, row) in manifest.clips.iter().zip(&rows) {
        run_report.input(&entry.clip);
        run_report.input(&entry.pose);
        match row
            .flow_mean
            .map(|m| FlowStability::classify(m, settings.stable_threshold))
        {
            Some(FlowStability::Stable) => stability.stable += 1,
            Some(FlowStability::Noisy) => stability.noisy += 1,
            None => {
                stability.undefined += 1;
                run_report.warn(format!(
                    "clip {}: fewer than two frames; background flow mean is undefined",
                    row.clip_id
                ));
            }
        }
        *character_count.entry(row.char_count_mode).or_insert(0usize) += 1;
    }
    let occlusion_means: Vec<f64> = rows.iter().map(|r| r.occlusion_mean).collect();
    let histograms = Histograms {
        clips: rows.len(),
        occlusion: histogram(&occlusion_means, &occlusion_quartile_edges())?,
        flow_stability: stability,
        character_count,
    };

    let mut csv = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        csv.serialize(row)
            .map_err(|e| CliError::data(format!("CSV encoding failed: {e}")))?;
    }
    let csv_bytes = csv
        .into_inner()
        .map_err(|e| CliError::data(format!("CSV encoding failed: {e}")))?;
    let csv_path = args.out.join("analysis.csv");
    condguide::io::write_atomic(&csv_path, &csv_bytes)?;
    run_report.output(&csv_path);

    let hist_path = args.out.join("histograms.json");
    write_json_atomic(&hist_path, &histograms)?;
    run_report.output(&hist_path);
    run_report.write(&report_path(report, &args.out, "analyze"))
}
