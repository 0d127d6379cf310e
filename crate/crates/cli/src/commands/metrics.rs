use std::io::Write;
use std::path::{Path, PathBuf};

use condguide::io::{read_features, read_file};
use condguide::metrics::{
    frechet_distance, image_metric_report, standardize, FeatureSet, FrechetEntry, FrechetParams,
    SsimParams,
};
use condguide::Raster;

use super::par_map;
use crate::args::MetricsArgs;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::inputs::{list_files, load_image};
use crate::report::RunReport;

fn load_frames(dir: &Path, size: Option<usize>) -> CliResult<Vec<Raster<f32>>> {
    let files = list_files(dir, &["png"])?;
    if files.is_empty() {
        return Err(CliError::data(format!("{}: no PNG frames", dir.display())));
    }
    par_map(&files, |_, p| {
        let img = load_image(p)?;
        match size {
            Some(s) => standardize(&img, s).map_err(|e| CliError::from(e).context(p.display())),
            None => Ok(img),
        }
    })
}

fn load_features(path: &Path) -> CliResult<FeatureSet> {
    read_features(&read_file(path)?, &path.display().to_string())
        .map_err(|e| CliError::from(e).context_if_data(path))
}

fn frechet(name: &str, pair: &[PathBuf], report: &mut RunReport) -> CliResult<FrechetEntry> {
    let (real, gen) = (&pair[0], &pair[1]);
    report.input(real);
    report.input(gen);
    let value = frechet_distance(
        &load_features(real)?,
        &load_features(gen)?,
        &FrechetParams::default(),
    )
    .map_err(|e| CliError::from(e).context(format!("{name} Fréchet distance")))?;
    Ok(FrechetEntry {
        name: name.to_owned(),
        value,
    })
}

pub fn run(args: &MetricsArgs, settings: &Settings, report: Option<&Path>) -> CliResult<()> {
    let mut run_report = RunReport::new("metrics", settings);
    run_report.input(&args.real);
    run_report.input(&args.generated);
    let real = load_frames(&args.real, settings.standardize)?;
    let gen = load_frames(&args.generated, settings.standardize)?;
    if real.len() != gen.len() {
        return Err(CliError::data(format!(
            "{} has {} frames but {} has {}",
            args.real.display(),
            real.len(),
            args.generated.display(),
            gen.len()
        )));
    }
    if settings.standardize.is_none() && real.iter().any(|f| f.width() != f.height()) {
        run_report.warn(
            "frames are not standardized; scores are not comparable across resolutions".into(),
        );
    }
    let mut metrics = image_metric_report(&real, &gen, &SsimParams::default())?;
    if let Some(pair) = &args.features {
        metrics
            .frechet
            .push(frechet("image", pair, &mut run_report)?);
    }
    if let Some(pair) = &args.video_features {
        metrics
            .frechet
            .push(frechet("video", pair, &mut run_report)?);
    }

    match &args.out {
        Some(path) => {
            condguide::io::write_json_atomic(path, &metrics)?;
            run_report.output(path);
        }
        None => {
            let mut text = serde_json::to_string_pretty(&metrics)
                .map_err(|e| CliError::data(format!("JSON encoding failed: {e}")))?;
            text.push('\n');
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(format!("standard output: {e}")))?;
        }
    }
    if let Some(path) = report {
        run_report.write(path)?;
    }
    Ok(())
}
