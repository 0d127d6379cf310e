//! Synthetic two-character clips and helpers for driving the CLI.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use condguide::io::{encode_rgb_png, write_flow, write_pfm};
use condguide::pose::{
    render_pose_map, CharacterPose, Keypoint, PoseSequence, RenderParams, SkeletonTopology,
};
use condguide::{FlowField, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Body18 joint offsets for a standing figure, in units of a quarter of its height.
const FIGURE: [(f32, f32); 18] = [
    (0.0, -1.8),   // nose
    (0.0, -1.4),   // neck
    (-0.4, -1.4),  // right shoulder
    (-0.6, -0.8),  // right elbow
    (-0.7, -0.3),  // right wrist
    (0.4, -1.4),   // left shoulder
    (0.6, -0.8),   // left elbow
    (0.7, -0.3),   // left wrist
    (-0.25, 0.0),  // right hip
    (-0.3, 0.9),   // right knee
    (-0.3, 1.8),   // right ankle
    (0.25, 0.0),   // left hip
    (0.3, 0.9),    // left knee
    (0.3, 1.8),    // left ankle
    (-0.1, -1.9),  // right eye
    (0.1, -1.9),   // left eye
    (-0.2, -1.85), // right ear
    (0.2, -1.85),  // left ear
];

pub struct Clip {
    pub dir: PathBuf,
    pub pose: PathBuf,
    pub frames: PathBuf,
    pub flows: PathBuf,
    pub depth: PathBuf,
    pub width: usize,
    pub height: usize,
    pub len: usize,
}

fn figure(id: u32, cx: f32, cy: f32, scale: f32) -> CharacterPose {
    let kps = FIGURE
        .iter()
        .map(|&(dx, dy)| Keypoint::new(cx + dx * scale, cy + dy * scale, 0.9))
        .collect();
    CharacterPose::new(id, kps)
}

/// Character centres at frame `k`: character 1 walks right, character 2
/// walks left, and they cross in the middle of the clip.
fn centres(k: usize, len: usize, width: usize) -> [(f32, f32); 2] {
    let t = k as f32 / (len.max(2) - 1) as f32;
    let w = width as f32;
    [(w * (0.2 + 0.6 * t), 30.0), (w * (0.8 - 0.6 * t), 32.0)]
}

pub fn pose_sequence(len: usize, width: usize, height: usize) -> PoseSequence {
    let frames = (0..len)
        .map(|k| {
            let [a, b] = centres(k, len, width);
            vec![figure(1, a.0, a.1, 12.0), figure(2, b.0, b.1, 10.0)]
        })
        .collect();
    PoseSequence::new(SkeletonTopology::body18(), width, height, frames).unwrap()
}

/// Writes a clip of `len` frames to `root`: pose JSON, PNG frames of a
/// noise background panning one pixel per frame under the rendered
/// skeletons, matching CGFL flows, and disparity PFMs where character 1 is
/// nearest.
pub fn write_clip(root: &Path, len: usize, width: usize, height: usize, seed: u64) -> Clip {
    let clip = Clip {
        dir: root.to_path_buf(),
        pose: root.join("walk.json"),
        frames: root.join("frames"),
        flows: root.join("flows"),
        depth: root.join("depth"),
        width,
        height,
        len,
    };
    for d in [&clip.frames, &clip.flows, &clip.depth] {
        std::fs::create_dir_all(d).unwrap();
    }
    let pose = pose_sequence(len, width, height);
    std::fs::write(&clip.pose, pose.to_json_bytes()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pan = width + len;
    let noise: Vec<f32> = (0..pan * height * 3)
        .map(|_| rng.random_range(0.0f32..1.0))
        .collect();
    let params = RenderParams::default();
    for (k, frame) in pose.frames().iter().enumerate() {
        let skel = render_pose_map(frame, pose.topology(), &params).unwrap();
        // Panning right by k: out(x) = background(x - k).
        let img = Raster::from_fn(width, height, 3, |x, y, c| {
            let s = *skel.get(x, y, c);
            let lit = skel.pixel(x, y).iter().any(|&v| v > 0.0);
            if lit {
                s
            } else {
                noise[(y * pan + (x + len - k)) * 3 + c]
            }
        })
        .unwrap();
        let name = format!("f{k:03}.png");
        std::fs::write(clip.frames.join(name), encode_rgb_png(&img).unwrap()).unwrap();

        let [a, b] = centres(k, len, width);
        let depth = Raster::from_fn(width, height, 1, |x, y, _| {
            let near = |(cx, cy): (f32, f32), r: f32| {
                let (dx, dy) = (x as f32 - cx, y as f32 - cy);
                dx * dx + dy * dy <= r * r
            };
            if near(a, 26.0) {
                8.0
            } else if near(b, 22.0) {
                4.0
            } else {
                1.0
            }
        })
        .unwrap();
        std::fs::write(
            clip.depth.join(format!("d{k:03}.pfm")),
            write_pfm(&depth).unwrap(),
        )
        .unwrap();
        if k > 0 {
            let flow = FlowField::uniform(width, height, 1.0, 0.0).unwrap();
            std::fs::write(clip.flows.join(format!("m{k:03}.cgfl")), write_flow(&flow)).unwrap();
        }
    }
    clip
}

/// Runs the CLI in-process with the given arguments.
pub fn cli<S: AsRef<str>>(args: &[S]) -> i32 {
    let argv =
        std::iter::once("condguide".to_owned()).chain(args.iter().map(|s| s.as_ref().to_owned()));
    condguide_cli::run(argv)
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Every file under `dir` (recursively) with its bytes, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}
