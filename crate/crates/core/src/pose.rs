//! Pose sequences: parsing, validation and skeleton rendering.
//!
//! Pose files are UTF-8 JSON:
//!
//! ```json
//! {"topology": {"joint_count": 18, "joint_names": [...], "edges": [[1, 2], ...],
//!               "joint_colors": [[255, 0, 0], ...], "edge_colors": [[255, 0, 0], ...]},
//!  "frames": [{"characters": [{"id": 0, "keypoints": [[x, y, conf], ...]}]}],
//!  "width": 512, "height": 512}
//! ```
//!
//! Coordinates are pixels with a top-left origin. The palette entries are
//! optional on input; a hue wheel is generated when they are absent.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::draw::Primitive;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Raster};

pub type Rgb = [u8; 3];

/// Confidence below which joints are not drawn (and characters are flagged).
pub const DEFAULT_CONFIDENCE_THRESHOLD: f32 = 0.3;

/// Line width in pixels at the reference frame width; scales linearly.
pub const DEFAULT_LINE_WIDTH_AT_REFERENCE: f64 = 4.0;
pub const REFERENCE_FRAME_WIDTH: f64 = 512.0;

const BODY18_JOINTS: [&str; 18] = [
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
];

const BODY18_EDGES: [(usize, usize); 17] = [
    (1, 2),
    (1, 5),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (1, 8),
    (8, 9),
    (9, 10),
    (1, 11),
    (11, 12),
    (12, 13),
    (1, 0),
    (0, 14),
    (14, 16),
    (0, 15),
    (15, 17),
];

const BODY18_COLORS: [Rgb; 18] = [
    [255, 0, 0],
    [255, 85, 0],
    [255, 170, 0],
    [255, 255, 0],
    [170, 255, 0],
    [85, 255, 0],
    [0, 255, 0],
    [0, 255, 85],
    [0, 255, 170],
    [0, 255, 255],
    [0, 170, 255],
    [0, 85, 255],
    [0, 0, 255],
    [85, 0, 255],
    [170, 0, 255],
    [255, 0, 255],
    [255, 0, 170],
    [255, 0, 85],
];

/// Evenly spaced fully saturated hues, used when a topology has no palette.
fn hue_wheel(n: usize) -> Vec<Rgb> {
    (0..n)
        .map(|i| {
            let h = 6.0 * i as f64 / n.max(1) as f64;
            let sector = h.floor() as u32 % 6;
            let f = h - h.floor();
            let up = (255.0 * f).round() as u8;
            let down = 255 - up;
            match sector {
                0 => [255, up, 0],
                1 => [down, 255, 0],
                2 => [0, 255, up],
                3 => [0, down, 255],
                4 => [up, 0, 255],
                _ => [255, 0, down],
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkeletonTopology {
    joint_count: usize,
    joint_names: Vec<String>,
    edges: Vec<(usize, usize)>,
    joint_colors: Vec<Rgb>,
    edge_colors: Vec<Rgb>,
}

impl SkeletonTopology {
    /// Builds a topology, generating a palette where none is supplied.
    pub fn new(
        joint_names: Vec<String>,
        edges: Vec<(usize, usize)>,
        joint_colors: Option<Vec<Rgb>>,
        edge_colors: Option<Vec<Rgb>>,
    ) -> Result<Self> {
        let joint_count = joint_names.len();
        if joint_count == 0 {
            return Err(Error::parse(None, "topology has no joints"));
        }
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= joint_count || b >= joint_count {
                return Err(Error::parse(
                    None,
                    format!("edge {i} ({a}, {b}) references a joint >= {joint_count}"),
                ));
            }
            if a == b {
                return Err(Error::parse(
                    None,
                    format!("edge {i} is a self-loop on joint {a}"),
                ));
            }
        }
        let joint_colors = joint_colors.unwrap_or_else(|| hue_wheel(joint_count));
        let edge_colors = edge_colors.unwrap_or_else(|| hue_wheel(edges.len()));
        if joint_colors.len() != joint_count {
            return Err(Error::parse(
                None,
                format!(
                    "{} joint colors for {joint_count} joints",
                    joint_colors.len()
                ),
            ));
        }
        if edge_colors.len() != edges.len() {
            return Err(Error::parse(
                None,
                format!(
                    "{} edge colors for {} edges",
                    edge_colors.len(),
                    edges.len()
                ),
            ));
        }
        Ok(SkeletonTopology {
            joint_count,
            joint_names,
            edges,
            joint_colors,
            edge_colors,
        })
    }

    /// The 18-joint body skeleton with 17 limbs and an OpenPose-style palette.
    pub fn body18() -> Self {
        SkeletonTopology {
            joint_count: BODY18_JOINTS.len(),
            joint_names: BODY18_JOINTS.iter().map(|s| s.to_string()).collect(),
            edges: BODY18_EDGES.to_vec(),
            joint_colors: BODY18_COLORS.to_vec(),
            edge_colors: BODY18_COLORS[..BODY18_EDGES.len()].to_vec(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn joint_colors(&self) -> &[Rgb] {
        &self.joint_colors
    }

    pub fn edge_colors(&self) -> &[Rgb] {
        &self.edge_colors
    }
}

#[derive(Deserialize)]
struct RawTopology {
    #[serde(default)]
    joint_count: Option<usize>,
    joint_names: Vec<String>,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    joint_colors: Option<Vec<Rgb>>,
    #[serde(default)]
    edge_colors: Option<Vec<Rgb>>,
}

impl<'de> Deserialize<'de> for SkeletonTopology {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTopology::deserialize(d)?;
        if let Some(n) = raw.joint_count {
            if n != raw.joint_names.len() {
                return Err(serde::de::Error::custom(format!(
                    "joint_count {n} does not match {} joint names",
                    raw.joint_names.len()
                )));
            }
        }
        SkeletonTopology::new(
            raw.joint_names,
            raw.edges,
            raw.joint_colors,
            raw.edge_colors,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f32; 3]", into = "[f32; 3]")]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub confidence: f32,
}

impl From<[f32; 3]> for Keypoint {
    fn from([x, y, confidence]: [f32; 3]) -> Self {
        Keypoint { x, y, confidence }
    }
}

impl From<Keypoint> for [f32; 3] {
    fn from(k: Keypoint) -> Self {
        [k.x, k.y, k.confidence]
    }
}

impl Keypoint {
    pub fn new(x: f32, y: f32, confidence: f32) -> Self {
        Keypoint { x, y, confidence }
    }

    pub fn is_visible(&self, threshold: f32) -> bool {
        self.confidence >= threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterPose {
    #[serde(rename = "id")]
    pub character_id: u32,
    pub keypoints: Vec<Keypoint>,
}

impl CharacterPose {
    pub fn new(character_id: u32, keypoints: Vec<Keypoint>) -> Self {
        CharacterPose {
            character_id,
            keypoints,
        }
    }

    pub fn visible_joints(&self, threshold: f32) -> impl Iterator<Item = (usize, &Keypoint)> {
        self.keypoints
            .iter()
            .enumerate()
            .filter(move |(_, k)| k.is_visible(threshold))
    }

    /// True when no joint reaches `threshold`.
    pub fn is_low_confidence(&self, threshold: f32) -> bool {
        self.visible_joints(threshold).next().is_none()
    }

    /// Axis-aligned bounds `(min_x, min_y, max_x, max_y)` of visible joints.
    pub fn visible_bounds(&self, threshold: f32) -> Option<(f64, f64, f64, f64)> {
        self.visible_joints(threshold).fold(None, |acc, (_, k)| {
            let (x, y) = (k.x as f64, k.y as f64);
            Some(match acc {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            })
        })
    }

    /// Copy with every keypoint moved by `(dx, dy)`.
    pub fn translated(&self, dx: f32, dy: f32) -> Self {
        CharacterPose {
            character_id: self.character_id,
            keypoints: self
                .keypoints
                .iter()
                .map(|k| Keypoint::new(k.x + dx, k.y + dy, k.confidence))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub width: usize,
    pub height: usize,
    pub characters: Vec<CharacterPose>,
}

impl PoseFrame {
    pub fn new(width: usize, height: usize, characters: Vec<CharacterPose>) -> Self {
        PoseFrame {
            width,
            height,
            characters,
        }
    }

    pub fn character_ids(&self) -> Vec<u32> {
        self.characters.iter().map(|c| c.character_id).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    characters: Vec<CharacterPose>,
}

#[derive(Serialize, Deserialize)]
struct PoseFileRecord {
    topology: SkeletonTopology,
    frames: Vec<FrameRecord>,
    width: usize,
    height: usize,
}

/// A validated sequence of frames sharing one topology and resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    topology: SkeletonTopology,
    width: usize,
    height: usize,
    frames: Vec<PoseFrame>,
}

fn validate_frame(
    index: usize,
    characters: &[CharacterPose],
    topology: &SkeletonTopology,
) -> Result<()> {
    let mut ids = HashSet::new();
    for c in characters {
        if !ids.insert(c.character_id) {
            return Err(Error::parse(
                Some(index),
                format!("duplicate character id {}", c.character_id),
            ));
        }
        if c.keypoints.len() != topology.joint_count {
            return Err(Error::parse(
                Some(index),
                format!(
                    "character {} has {} keypoints, topology has {} joints",
                    c.character_id,
                    c.keypoints.len(),
                    topology.joint_count
                ),
            ));
        }
        for (j, k) in c.keypoints.iter().enumerate() {
            if !(k.x.is_finite() && k.y.is_finite()) {
                return Err(Error::parse(
                    Some(index),
                    format!(
                        "character {} joint {j} has a non-finite coordinate",
                        c.character_id
                    ),
                ));
            }
            if !(0.0..=1.0).contains(&k.confidence) {
                return Err(Error::parse(
                    Some(index),
                    format!(
                        "character {} joint {j} confidence {} outside [0, 1]",
                        c.character_id, k.confidence
                    ),
                ));
            }
        }
    }
    Ok(())
}

impl PoseSequence {
    pub fn new(
        topology: SkeletonTopology,
        width: usize,
        height: usize,
        frames: Vec<Vec<CharacterPose>>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::parse(None, "no frames"));
        }
        if width == 0 || height == 0 {
            return Err(Error::parse(
                None,
                format!("resolution {width}x{height} is empty"),
            ));
        }
        for (i, chars) in frames.iter().enumerate() {
            validate_frame(i, chars, &topology)?;
        }
        let frames = frames
            .into_iter()
            .map(|characters| PoseFrame::new(width, height, characters))
            .collect();
        Ok(PoseSequence {
            topology,
            width,
            height,
            frames,
        })
    }

    /// Parses and validates a pose-JSON document.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let record: PoseFileRecord = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(None, format!("malformed pose JSON: {e}")))?;
        PoseSequence::new(
            record.topology,
            record.width,
            record.height,
            record.frames.into_iter().map(|f| f.characters).collect(),
        )
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let record = PoseFileRecord {
            topology: self.topology.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| FrameRecord {
                    characters: f.characters.clone(),
                })
                .collect(),
            width: self.width,
            height: self.height,
        };
        serde_json::to_vec(&record).expect("pose records always serialize")
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Sub-sequence over `range` with the same topology and resolution.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.frames.len() {
            return Err(Error::InvalidArgument(format!(
                "frame range {range:?} outside 0..{}",
                self.frames.len()
            )));
        }
        Ok(PoseSequence {
            topology: self.topology.clone(),
            width: self.width,
            height: self.height,
            frames: self.frames[range].to_vec(),
        })
    }

    /// `(frame_index, character_id)` for characters with no joint at or
    /// above `threshold`. Such characters are kept in the sequence.
    pub fn flagged_characters(&self, threshold: f32) -> Vec<(usize, u32)> {
        self.frames
            .iter()
            .enumerate()
            .flat_map(|(i, f)| {
                f.characters
                    .iter()
                    .filter(move |c| c.is_low_confidence(threshold))
                    .map(move |c| (i, c.character_id))
            })
            .collect()
    }
}

/// Stroke parameters shared by pose rendering and skeletal dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub confidence_threshold: f32,
    /// Limb thickness in pixels; `None` scales the default with frame width.
    pub line_width: Option<f64>,
    /// Joint disk radius in pixels; `None` scales the default with frame width.
    pub joint_radius: Option<f64>,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            line_width: None,
            joint_radius: None,
        }
    }
}

impl RenderParams {
    fn scaled_default(frame_width: usize) -> f64 {
        (DEFAULT_LINE_WIDTH_AT_REFERENCE * frame_width as f64 / REFERENCE_FRAME_WIDTH).max(1.0)
    }

    pub fn line_width_for(&self, frame_width: usize) -> f64 {
        self.line_width
            .unwrap_or_else(|| Self::scaled_default(frame_width))
    }

    pub fn joint_radius_for(&self, frame_width: usize) -> f64 {
        self.joint_radius
            .unwrap_or_else(|| Self::scaled_default(frame_width))
    }
}

/// One skeleton primitive tagged with its palette color.
pub(crate) struct Stroke {
    pub primitive: Primitive,
    pub color: Rgb,
}

/// Limbs first (topology order), then joints, for one character. Joints
/// below the confidence threshold are skipped along with their limbs.
pub(crate) fn skeleton_strokes(
    character: &CharacterPose,
    topology: &SkeletonTopology,
    params: &RenderParams,
    frame_width: usize,
) -> Vec<Stroke> {
    let half_width = params.line_width_for(frame_width) / 2.0;
    let radius = params.joint_radius_for(frame_width);
    let visible = |j: usize| {
        character
            .keypoints
            .get(j)
            .is_some_and(|k| k.is_visible(params.confidence_threshold))
    };
    let point = |j: usize| {
        let k = &character.keypoints[j];
        (k.x as f64, k.y as f64)
    };
    let mut strokes = Vec::new();
    for (&(a, b), &color) in topology.edges.iter().zip(&topology.edge_colors) {
        if visible(a) && visible(b) {
            strokes.push(Stroke {
                primitive: Primitive::Segment {
                    from: point(a),
                    to: point(b),
                    half_width,
                },
                color,
            });
        }
    }
    for (j, &color) in topology.joint_colors.iter().enumerate() {
        if visible(j) {
            strokes.push(Stroke {
                primitive: Primitive::Disk {
                    center: point(j),
                    radius,
                },
                color,
            });
        }
    }
    strokes
}

/// Pixels covered by one character's rendered skeleton.
pub fn skeleton_coverage(
    character: &CharacterPose,
    topology: &SkeletonTopology,
    params: &RenderParams,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    let mut mask = BinaryMask::empty(width, height)?;
    let bits = mask.bits_mut();
    for stroke in skeleton_strokes(character, topology, params, width) {
        stroke
            .primitive
            .for_each_pixel(width, height, |x, y| bits[y * width + x] = 1);
    }
    Ok(mask)
}

/// Renders a frame's skeletons as a 3-channel float image in `[0, 1]` on a
/// black background. Later characters and later strokes paint over earlier
/// ones; out-of-bounds geometry is clipped.
pub fn render_pose_map(
    frame: &PoseFrame,
    topology: &SkeletonTopology,
    params: &RenderParams,
) -> Result<Raster<f32>> {
    let (w, h) = (frame.width, frame.height);
    let mut out = Raster::filled(w, h, 3, 0.0f32)?;
    let data = out.data_mut();
    for character in &frame.characters {
        for stroke in skeleton_strokes(character, topology, params, w) {
            let rgb = stroke.color.map(|c| c as f32 / 255.0);
            stroke.primitive.for_each_pixel(w, h, |x, y| {
                let i = (y * w + x) * 3;
                data[i..i + 3].copy_from_slice(&rgb);
            });
        }
    }
    Ok(out)
}

/// Pose map of externally extracted reference-image keypoints. Shares the
/// renderer with [`render_pose_map`], so identical keypoints give identical
/// maps.
pub fn reference_pose_map(
    reference: &PoseFrame,
    topology: &SkeletonTopology,
    params: &RenderParams,
) -> Result<Raster<f32>> {
    render_pose_map(reference, topology, params)
}
