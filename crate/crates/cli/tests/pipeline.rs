mod common;

use std::path::Path;
use std::process::Command;

use common::{cli, p, snapshot, write_clip, Clip};
use condguide::depth_order::{depth_order_training, DepthOrderParams};
use condguide::dilation::{frame_character_mask, frame_dilation_maps, DilationParams};
use condguide::flow::{flow_guidance_inference, flow_guidance_training};
use condguide::io::{
    decode_image, decode_mask_png, encode_rgb_png, read_guidance, read_pfm, read_pfm_depth,
    read_rank_sidecar,
};
use condguide::pose::{render_pose_map, RenderParams};
use condguide::{mask_union, DepthConvention, FlowField};

const BIN: &str = env!("CARGO_BIN_EXE_condguide");

fn clip(dir: &Path, len: usize) -> Clip {
    write_clip(&dir.join("clip"), len, 96, 64, 7)
}

fn pose(c: &Clip) -> condguide::pose::PoseSequence {
    condguide::io::read_pose_file(&c.pose).unwrap()
}

#[test]
fn windows_prints_plan_on_stdout() {
    let out = Command::new(BIN)
        .args([
            "windows", "--total", "32", "--window", "16", "--stride", "8",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let starts: Vec<u64> = plan["windows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["start"].as_u64().unwrap())
        .collect();
    assert_eq!(starts, vec![0, 8, 16]);
    let coverage: Vec<u64> = plan["coverage"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let expected: Vec<u64> = [1, 2, 2, 1].iter().flat_map(|&c| [c; 8]).collect();
    assert_eq!(coverage, expected);
}

#[test]
fn missing_pose_file_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.json");
    let out = Command::new(BIN)
        .args([
            "dilate",
            "--pose",
            &p(&missing),
            "--out",
            &p(&dir.path().join("o")),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&p(&missing)));
}

#[test]
fn depthorder_inference_without_reference_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 3);
    let out = Command::new(BIN)
        .args([
            "depthorder",
            "--mode",
            "infer",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&dir.path().join("o")),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn bad_arguments_and_help_exit_codes() {
    assert_eq!(cli(&["windows"]), 1);
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&["--help"]), 0);
    assert_eq!(cli(&["windows", "--total", "0"]), 1);
}

#[test]
fn malformed_pose_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let pose = dir.path().join("bad.json");
    std::fs::write(&pose, b"{\"width\": 4").unwrap();
    let out = Command::new(BIN)
        .args([
            "refpose",
            "--pose",
            &p(&pose),
            "--out",
            &p(&dir.path().join("o")),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn frame_count_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 4);
    std::fs::remove_file(c.depth.join("d003.pfm")).unwrap();
    let code = cli(&[
        "depthorder",
        "--mode",
        "train",
        "--pose",
        &p(&c.pose),
        "--depth",
        &p(&c.depth),
        "--out",
        &p(&dir.path().join("o")),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn dilate_writes_library_masks() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 5);
    let out = dir.path().join("masks");
    assert_eq!(
        cli(&[
            "dilate",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&out),
            "--clip",
            "walk"
        ]),
        0
    );
    let seq = pose(&c);
    let params = DilationParams::default();
    for (k, frame) in seq.frames().iter().enumerate() {
        for m in frame_dilation_maps(frame, seq.topology(), &params).unwrap() {
            let file = out.join(format!("walk_{k:05}_{}.png", m.character_id));
            let bytes = std::fs::read(&file).unwrap();
            assert_eq!(
                decode_mask_png(&bytes).unwrap(),
                m.mask,
                "{}",
                file.display()
            );
            // 8-bit grayscale, 0 or 255.
            let img = decode_image(&bytes).unwrap();
            assert!(img.data().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("dilate_report.json")).unwrap()).unwrap();
    assert_eq!(report["outputs"].as_array().unwrap().len(), 10);
    assert_eq!(report["params"]["window"], 16);
}

#[test]
fn flowmap_routes() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 6);
    let seq = pose(&c);
    let params = DilationParams::default();
    let masks: Vec<_> = seq
        .frames()
        .iter()
        .map(|f| frame_character_mask(f, seq.topology(), &params).unwrap())
        .collect();
    let read = |path: &Path| read_guidance(&std::fs::read(path).unwrap()).unwrap();

    // Stored flows: frame k gets the guidance of flow file k - 1.
    let from_flows = dir.path().join("g_flows");
    assert_eq!(
        cli(&[
            "flowmap",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--flows",
            &p(&c.flows),
            "--out",
            &p(&from_flows)
        ]),
        0
    );
    assert!(!from_flows.join("walk_00000.cggm").exists());
    for (k, mask) in masks.iter().enumerate().skip(1) {
        let expected =
            flow_guidance_training(&FlowField::uniform(96, 64, 1.0, 0.0).unwrap(), mask).unwrap();
        assert_eq!(
            read(&from_flows.join(format!("walk_{k:05}.cggm"))),
            expected
        );
    }

    // Estimated flows recover the one-pixel pan on background blocks that
    // are well clear of both frames' characters.
    let from_frames = dir.path().join("g_frames");
    assert_eq!(
        cli(&[
            "flowmap",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--frames",
            &p(&c.frames),
            "--out",
            &p(&from_frames)
        ]),
        0
    );
    let mut checked = 0;
    for k in 1..c.len {
        let g = read(&from_frames.join(format!("walk_{k:05}.cggm")));
        assert_eq!(g.mask(), &masks[k]);
        let both = mask_union(&[masks[k - 1].clone(), masks[k].clone()]).unwrap();
        for by in (0usize..64).step_by(8) {
            for bx in (8usize..96).step_by(8) {
                let clear = (by.saturating_sub(8)..(by + 16).min(64))
                    .all(|y| (bx - 8..(bx + 16).min(96)).all(|x| !both.get(x, y)));
                if clear {
                    assert_eq!(g.at(bx, by), (1.0, 0.0), "frame {k} block ({bx}, {by})");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 50, "only {checked} blocks checked");

    let inferred = dir.path().join("g_infer");
    assert_eq!(
        cli(&[
            "flowmap",
            "--mode",
            "infer",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&inferred)
        ]),
        0
    );
    for (k, m) in masks.iter().enumerate() {
        assert_eq!(
            read(&inferred.join(format!("walk_{k:05}.cggm"))),
            flow_guidance_inference(m).unwrap()
        );
    }

    assert_eq!(
        cli(&[
            "flowmap",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&inferred)
        ]),
        1
    );
    assert_eq!(
        cli(&[
            "flowmap",
            "--mode",
            "infer",
            "--pose",
            &p(&c.pose),
            "--flows",
            &p(&c.flows),
            "--out",
            &p(&inferred)
        ]),
        1
    );
}

#[test]
fn depthorder_train_and_infer() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 6);
    let seq = pose(&c);
    let train = dir.path().join("train");
    assert_eq!(
        cli(&[
            "depthorder",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--depth",
            &p(&c.depth),
            "--out",
            &p(&train)
        ]),
        0
    );
    let params = DepthOrderParams::default();
    for (k, frame) in seq.frames().iter().enumerate() {
        let depth = read_pfm_depth(
            &std::fs::read(c.depth.join(format!("d{k:03}.pfm"))).unwrap(),
            DepthConvention::LargerIsCloser,
        )
        .unwrap();
        let expected = depth_order_training(frame, seq.topology(), &depth, &params).unwrap();
        let written =
            read_pfm(&std::fs::read(train.join(format!("walk_{k:05}.pfm"))).unwrap()).unwrap();
        assert_eq!(written.raster, expected.map);
        assert!(train.join(format!("walk_{k:05}.png")).exists());
    }
    let sidecar = read_rank_sidecar(&train.join("walk_ranks.json")).unwrap();
    assert_eq!(sidecar.frames.len(), 6);
    for f in &sidecar.frames {
        // Character 1 stands on the nearer disparity plateau.
        let first = f.ranks.iter().find(|r| r.rank == 1).unwrap();
        assert_eq!(first.character_id, 1);
        assert_eq!(first.level_value, 1.0);
    }

    // Reference ranks from the sidecar and from a reference pose + depth agree.
    let via_sidecar = dir.path().join("infer_a");
    let via_pose = dir.path().join("infer_b");
    assert_eq!(
        cli(&[
            "depthorder",
            "--mode",
            "infer",
            "--pose",
            &p(&c.pose),
            "--reference-ranks",
            &p(&train.join("walk_ranks.json")),
            "--reference-frame",
            "2",
            "--out",
            &p(&via_sidecar),
        ]),
        0
    );
    assert_eq!(
        cli(&[
            "depthorder",
            "--mode",
            "infer",
            "--pose",
            &p(&c.pose),
            "--reference-pose",
            &p(&c.pose),
            "--reference-depth",
            &p(&c.depth.join("d002.pfm")),
            "--reference-frame",
            "2",
            "--out",
            &p(&via_pose),
        ]),
        0
    );
    for k in 0..6 {
        let name = format!("walk_{k:05}.pfm");
        assert_eq!(
            std::fs::read(via_sidecar.join(&name)).unwrap(),
            std::fs::read(via_pose.join(&name)).unwrap()
        );
    }
    // Inference with training's own ranks reproduces the training map of that frame.
    assert_eq!(
        std::fs::read(via_sidecar.join("walk_00002.pfm")).unwrap(),
        std::fs::read(train.join("walk_00002.pfm")).unwrap()
    );
}

#[test]
fn refpose_matches_renderer() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 3);
    let out = dir.path().join("ref");
    assert_eq!(
        cli(&["refpose", "--pose", &p(&c.pose), "--out", &p(&out)]),
        0
    );
    let seq = pose(&c);
    for (k, frame) in seq.frames().iter().enumerate() {
        let img = render_pose_map(frame, seq.topology(), &RenderParams::default()).unwrap();
        assert_eq!(
            std::fs::read(out.join(format!("walk_{k:05}.png"))).unwrap(),
            encode_rgb_png(&img).unwrap()
        );
    }
}

#[test]
fn analyze_writes_csv_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 5);
    let manifest = dir.path().join("manifest.json");
    let entries = serde_json::json!([
        {"id": "stored", "clip": "clip/flows", "pose": "clip/walk.json"},
        {"clip": "clip/frames", "pose": "clip/walk.json"},
    ]);
    std::fs::write(&manifest, serde_json::to_vec(&entries).unwrap()).unwrap();
    let out = dir.path().join("stats");
    assert_eq!(
        cli(&["analyze", "--manifest", &p(&manifest), "--out", &p(&out)]),
        0
    );

    let csv = std::fs::read_to_string(out.join("analysis.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "clip_id,flow_mean,char_count_mode,occlusion_mean");
    assert_eq!(lines.len(), 3);
    // The stored flow is a uniform one-pixel pan everywhere.
    assert!(lines[1].starts_with("stored,1.0,2,"), "{}", lines[1]);
    assert!(lines[2].starts_with("frames,"), "{}", lines[2]);

    let seq = pose(&c);
    let params = DilationParams::default();
    let per_frame: Vec<Vec<_>> = seq
        .frames()
        .iter()
        .map(|f| {
            frame_dilation_maps(f, seq.topology(), &params)
                .unwrap()
                .into_iter()
                .map(|m| m.mask)
                .collect()
        })
        .collect();
    let occlusion = condguide::analytics::body_occlusion_rate(
        &per_frame,
        condguide::analytics::OcclusionVariant::AllIntersection,
    )
    .unwrap()
    .mean;
    let field: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(field, occlusion);

    let hist: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("histograms.json")).unwrap()).unwrap();
    assert_eq!(hist["clips"], 2);
    assert_eq!(
        hist["flow_stability"]["noisy"].as_u64().unwrap()
            + hist["flow_stability"]["stable"].as_u64().unwrap(),
        2
    );
    assert_eq!(hist["character_count"]["2"], 2);
    assert_eq!(
        hist["occlusion"]["edges"],
        serde_json::json!([0.0, 0.05, 0.13, 0.21, 1.0])
    );
}

#[test]
fn metrics_on_identical_directories() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 3);
    let out = dir.path().join("m.json");
    assert_eq!(
        cli(&[
            "metrics",
            "--real",
            &p(&c.frames),
            "--gen",
            &p(&c.frames),
            "--out",
            &p(&out)
        ]),
        0
    );
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(m["psnr"], "inf");
    assert_eq!(m["ssim"], 1.0);
    assert_eq!(m["l1"], 0.0);
    assert_eq!(m["frames"], 3);

    let feats = condguide::metrics::FeatureSet::from_vectors(
        &[vec![0.0, 1.0], vec![2.0, 1.0], vec![1.0, 3.0]],
        "f",
    )
    .unwrap();
    let fpath = dir.path().join("f.cgfs");
    std::fs::write(&fpath, condguide::io::write_features(&feats)).unwrap();
    assert_eq!(
        cli(&[
            "metrics",
            "--real",
            &p(&c.frames),
            "--gen",
            &p(&c.frames),
            "--features",
            &p(&fpath),
            &p(&fpath),
            "--standardize",
            "32",
            "--out",
            &p(&out),
        ]),
        0
    );
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(m["frechet"][0]["name"], "image");
    assert!(m["frechet"][0]["value"].as_f64().unwrap().abs() < 1e-6);
}

#[cfg(unix)]
#[test]
fn run_with_copying_generator_is_lossless() {
    use std::os::unix::fs::PermissionsExt;

    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 20);
    let script = dir.path().join("gen.sh");
    std::fs::write(
        &script,
        "#!/bin/sh\n\
         cat > /dev/null\n\
         i=0\n\
         while [ $i -lt \"$CONDGUIDE_WINDOW_LENGTH\" ]; do\n\
           n=$((CONDGUIDE_WINDOW_START + i))\n\
           cp \"$1/$(printf f%03d.png $n)\" \"$2/$(printf out%03d.png $i)\"\n\
           i=$((i + 1))\n\
         done\n",
    )
    .unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let out = dir.path().join("video");
    let code = cli(&[
        "run",
        "--pose",
        &p(&c.pose),
        "--out",
        &p(&out),
        "--generator",
        &p(&script),
        "--",
        &p(&c.frames),
    ]);
    assert_eq!(code, 0);
    for k in 0..20 {
        let a =
            decode_image(&std::fs::read(out.join(format!("walk_{k:05}.png"))).unwrap()).unwrap();
        let b =
            decode_image(&std::fs::read(c.frames.join(format!("f{k:03}.png"))).unwrap()).unwrap();
        assert_eq!(a, b, "frame {k}");
    }

    // A generator that fails is reported as a data error.
    let failing = dir.path().join("fail.sh");
    std::fs::write(&failing, "#!/bin/sh\nexit 4\n").unwrap();
    std::fs::set_permissions(&failing, std::fs::Permissions::from_mode(0o755)).unwrap();
    assert_eq!(
        cli(&[
            "run",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&out),
            "--generator",
            &p(&failing)
        ]),
        3
    );
    let absent = dir.path().join("absent");
    assert_eq!(
        cli(&[
            "run",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&out),
            "--generator",
            &p(&absent)
        ]),
        2
    );
}

fn pipeline(c: &Clip, out: &Path, jobs: &str) {
    for args in [
        vec![
            "dilate",
            "--pose",
            &p(&c.pose),
            "--out",
            &p(&out.join("masks")),
        ],
        vec![
            "flowmap",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--frames",
            &p(&c.frames),
            "--out",
            &p(&out.join("flow")),
        ],
        vec![
            "depthorder",
            "--mode",
            "train",
            "--pose",
            &p(&c.pose),
            "--depth",
            &p(&c.depth),
            "--out",
            &p(&out.join("depth")),
        ],
        vec![
            "windows",
            "--total",
            "12",
            "--out",
            &p(&out.join("plan.json")),
        ],
    ] {
        let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        argv.extend(["--jobs".to_owned(), jobs.to_owned()]);
        assert_eq!(cli(&argv), 0, "{argv:?}");
    }
}

#[test]
fn outputs_do_not_depend_on_jobs_or_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let c = clip(dir.path(), 12);
    let out = dir.path().join("out");
    pipeline(&c, &out, "1");
    let first = snapshot(&out);
    std::fs::remove_dir_all(&out).unwrap();
    pipeline(&c, &out, "4");
    assert_eq!(snapshot(&out), first);
    assert!(first.len() > 12 * 5);
}
