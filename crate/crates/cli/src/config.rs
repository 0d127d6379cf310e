//! Parameter resolution: command-line flag, then config file, then default.

use std::num::NonZeroUsize;
use std::path::Path;

use clap::Args;
use condguide::analytics::OcclusionVariant;
use condguide::depth_order::{DepthOrderParams, OcclusionFallback};
use condguide::dilation::{
    DilationParams, DilationRadius, DEFAULT_RADIUS_FLOOR, DEFAULT_RADIUS_FRACTION,
};
use condguide::flow::{BlockMatchParams, STABLE_FLOW_THRESHOLD};
use condguide::pose::{RenderParams, DEFAULT_CONFIDENCE_THRESHOLD};
use condguide::scheduler::{DEFAULT_STRIDE, DEFAULT_WINDOW};
use condguide::DepthConvention;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Parses a kebab-case enum value through its serde representation.
fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

/// Algorithm parameters accepted by every subcommand. Each one can also be
/// set in the config file under the key named in its help text.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ParamFlags {
    /// Keypoints below this confidence are not drawn [config: render.confidence_threshold] [default: 0.3]
    #[arg(long, global = true, value_name = "C")]
    pub confidence_threshold: Option<f32>,

    /// Limb thickness in pixels [config: render.line_width] [default: 4 px at 512 px width, scaled]
    #[arg(long, global = true, value_name = "PX")]
    pub line_width: Option<f64>,

    /// Joint disk radius in pixels [config: render.joint_radius] [default: 4 px at 512 px width, scaled]
    #[arg(long, global = true, value_name = "PX")]
    pub joint_radius: Option<f64>,

    /// Dilation radius as a fraction of the visible-joint bounding-box diagonal [config: dilation.radius_fraction] [default: 0.06]
    #[arg(long, global = true, value_name = "F")]
    pub radius_fraction: Option<f64>,

    /// Smallest bounding-box-derived dilation radius [config: dilation.radius_floor] [default: 3]
    #[arg(long, global = true, value_name = "PX")]
    pub radius_floor: Option<f64>,

    /// Fixed dilation radius; overrides the bounding-box rule [config: dilation.radius]
    #[arg(long, global = true, value_name = "PX")]
    pub dilation_radius: Option<f64>,

    /// Block-matching tile size [config: flow.block] [default: 8]
    #[arg(long, global = true, value_name = "PX")]
    pub block: Option<usize>,

    /// Block-matching search radius [config: flow.search] [default: 4]
    #[arg(long, global = true, value_name = "PX")]
    pub search: Option<usize>,

    /// Background flow mean below which a clip counts as stable [config: flow.stable_threshold] [default: 1.0]
    #[arg(long, global = true, value_name = "PX")]
    pub stable_threshold: Option<f64>,

    /// Which depth values are nearer: larger-is-closer or smaller-is-closer [config: depth.convention] [default: larger-is-closer]
    #[arg(long, global = true, value_name = "CONV", value_parser = kebab::<DepthConvention>)]
    pub depth_convention: Option<DepthConvention>,

    /// Fully occluded characters: error or rank-behind [config: depth.fallback] [default: error]
    #[arg(long, global = true, value_name = "MODE", value_parser = kebab::<OcclusionFallback>)]
    pub occlusion_fallback: Option<OcclusionFallback>,

    /// Multiplier applied to 16-bit PNG depth samples [config: depth.png_scale] [default: 1.0]
    #[arg(long, global = true, value_name = "S")]
    pub depth_scale: Option<f32>,

    /// Frames per generation window [config: windows.window] [default: 16]
    #[arg(long, global = true, value_name = "N")]
    pub window: Option<usize>,

    /// Frames between window starts [config: windows.stride] [default: 8]
    #[arg(long, global = true, value_name = "N")]
    pub stride: Option<usize>,

    /// Occlusion rate for 3+ characters: all-intersection or pairwise-max [config: analysis.occlusion_variant] [default: all-intersection]
    #[arg(long, global = true, value_name = "V", value_parser = kebab::<OcclusionVariant>)]
    pub occlusion_variant: Option<OcclusionVariant>,

    /// Center-crop and resize frames to SIZE x SIZE before metrics [config: metrics.standardize] [default: off; bare flag means 512]
    #[arg(long, global = true, value_name = "SIZE", num_args = 0..=1, default_missing_value = "512")]
    pub standardize: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub confidence_threshold: Option<f32>,
    pub line_width: Option<f64>,
    pub joint_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationSection {
    pub radius_fraction: Option<f64>,
    pub radius_floor: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub block: Option<usize>,
    pub search: Option<usize>,
    pub stable_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSection {
    pub convention: Option<DepthConvention>,
    pub fallback: Option<OcclusionFallback>,
    pub png_scale: Option<f32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    pub window: Option<usize>,
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub occlusion_variant: Option<OcclusionVariant>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub standardize: Option<usize>,
}

/// Contents of a `--config` file (TOML, or JSON when the extension is `.json`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub jobs: Option<usize>,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub dilation: DilationSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub depth: DepthSection,
    #[serde(default)]
    pub windows: WindowsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved parameters for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    /// Worker threads; left out of reports because it never changes outputs.
    #[serde(skip)]
    pub jobs: usize,
    pub render: RenderParams,
    pub radius: DilationRadius,
    pub block_match: BlockMatchParams,
    pub stable_threshold: f64,
    pub depth_convention: DepthConvention,
    pub occlusion_fallback: OcclusionFallback,
    pub depth_png_scale: f32,
    pub window: usize,
    pub stride: usize,
    pub occlusion_variant: OcclusionVariant,
    pub standardize: Option<usize>,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "{name} must be a positive number, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "{name} must be a non-negative number, got {v}"
        )))
    }
}

fn nonzero(name: &str, v: usize) -> CliResult<usize> {
    if v > 0 {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{name} must be positive")))
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

impl Settings {
    /// `jobs_flag` and `jobs_env` come from `--jobs` and `CONDGUIDE_JOBS`;
    /// the environment variable ranks below the config file.
    pub fn resolve(
        flags: &ParamFlags,
        config: &ConfigFile,
        jobs_flag: Option<usize>,
        jobs_env: Option<usize>,
    ) -> CliResult<Self> {
        let jobs = jobs_flag
            .or(config.jobs)
            .or(jobs_env)
            .unwrap_or_else(default_jobs);

        let threshold = flags
            .confidence_threshold
            .or(config.render.confidence_threshold)
            .unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CliError::usage(format!(
                "confidence threshold must lie in [0, 1], got {threshold}"
            )));
        }
        let line_width = flags.line_width.or(config.render.line_width);
        let joint_radius = flags.joint_radius.or(config.render.joint_radius);
        if let Some(v) = line_width {
            positive("line width", v)?;
        }
        if let Some(v) = joint_radius {
            non_negative("joint radius", v)?;
        }

        let radius = match flags.dilation_radius.or(config.dilation.radius) {
            Some(pixels) => DilationRadius::Fixed {
                pixels: non_negative("dilation radius", pixels)?,
            },
            None => DilationRadius::BoundingBoxFraction {
                fraction: non_negative(
                    "radius fraction",
                    flags
                        .radius_fraction
                        .or(config.dilation.radius_fraction)
                        .unwrap_or(DEFAULT_RADIUS_FRACTION),
                )?,
                floor: non_negative(
                    "radius floor",
                    flags
                        .radius_floor
                        .or(config.dilation.radius_floor)
                        .unwrap_or(DEFAULT_RADIUS_FLOOR),
                )?,
            },
        };

        let defaults = BlockMatchParams::default();
        let block_match = BlockMatchParams {
            block: nonzero(
                "block",
                flags.block.or(config.flow.block).unwrap_or(defaults.block),
            )?,
            search: flags
                .search
                .or(config.flow.search)
                .unwrap_or(defaults.search),
        };

        let window = nonzero(
            "window",
            flags
                .window
                .or(config.windows.window)
                .unwrap_or(DEFAULT_WINDOW),
        )?;
        let stride = nonzero(
            "stride",
            flags
                .stride
                .or(config.windows.stride)
                .unwrap_or(DEFAULT_STRIDE),
        )?;
        if stride > window {
            return Err(CliError::usage(format!(
                "stride {stride} exceeds window {window}; frames would be skipped"
            )));
        }

        let standardize = flags.standardize.or(config.metrics.standardize);
        if standardize == Some(0) {
            return Err(CliError::usage("standardize size must be positive"));
        }

        Ok(Settings {
            jobs: nonzero("jobs", jobs)?,
            render: RenderParams {
                confidence_threshold: threshold,
                line_width,
                joint_radius,
            },
            radius,
            block_match,
            stable_threshold: non_negative(
                "stable threshold",
                flags
                    .stable_threshold
                    .or(config.flow.stable_threshold)
                    .unwrap_or(STABLE_FLOW_THRESHOLD),
            )?,
            depth_convention: flags
                .depth_convention
                .or(config.depth.convention)
                .unwrap_or_default(),
            occlusion_fallback: flags
                .occlusion_fallback
                .or(config.depth.fallback)
                .unwrap_or_default(),
            depth_png_scale: positive(
                "depth scale",
                flags.depth_scale.or(config.depth.png_scale).unwrap_or(1.0) as f64,
            )? as f32,
            window,
            stride,
            occlusion_variant: flags
                .occlusion_variant
                .or(config.analysis.occlusion_variant)
                .unwrap_or_default(),
            standardize,
        })
    }

    pub fn dilation(&self) -> DilationParams {
        DilationParams {
            stroke: self.render,
            radius: self.radius,
        }
    }

    pub fn depth_order(&self) -> DepthOrderParams {
        DepthOrderParams {
            dilation: self.dilation(),
            fallback: self.occlusion_fallback,
        }
    }
}
