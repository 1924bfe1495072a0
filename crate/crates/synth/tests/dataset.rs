use std::fs;
use std::path::Path;

use jpp_synth::dataset::{label_path, manifest_path};
use jpp_synth::{derive_factors, generate_dataset, iterate_split, Dataset, GenConfig, SynthError};
use sha2::{Digest, Sha256};

fn small(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        canvas_height: 64,
        canvas_width: 64,
        train: 6,
        val: 3,
        test: 3,
    }
}

fn tree_digest(root: &Path) -> String {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update(fs::read(&f).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    generate_dataset(&small(7), a.path()).unwrap();
    generate_dataset(&small(7), b.path()).unwrap();
    generate_dataset(&small(8), c.path()).unwrap();
    assert_eq!(tree_digest(a.path()), tree_digest(b.path()));
    assert_ne!(tree_digest(a.path()), tree_digest(c.path()));
}

#[test]
fn load_round_trips_and_factors_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&small(3), dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(ds.manifest(), &manifest);
    for split in ["train", "val", "test"] {
        let ids: Vec<String> = iterate_split(dir.path(), split)
            .unwrap()
            .into_iter()
            .map(|s| {
                assert_eq!((s.image.height(), s.image.width()), (64, 64));
                assert_eq!(derive_factors(&s.joints), s.factors, "{}", s.id);
                s.id
            })
            .collect();
        assert_eq!(ids, manifest.splits[split]);
    }
    let fresh = jpp_synth::generate_sample(
        3,
        "val_00001",
        (64, 64),
        &jpp_synth::SkeletonSpec::for_canvas(64, 64),
        &jpp_synth::RenderStyle::for_canvas(64, 64),
    )
    .unwrap();
    assert_eq!(ds.load_sample("val_00001").unwrap(), fresh);
}

#[test]
fn parsing_loads_skip_pose_file() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&small(1), dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    for id in ds.ids("train").unwrap() {
        ds.load_parsing_sample(id).unwrap();
    }
    assert_eq!(ds.pose_reads(), 0);
    ds.load_sample("train_00000").unwrap();
    ds.load_sample("train_00001").unwrap();
    assert_eq!(ds.pose_reads(), 1);
}

#[test]
fn bad_files_name_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&small(2), dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();

    let labels = ds.load_labels("test_00002").unwrap();
    let mut raw = labels.into_raw();
    raw[5] = 20;
    image::GrayImage::from_raw(64, 64, raw)
        .unwrap()
        .save(label_path(dir.path(), "test", "test_00002"))
        .unwrap();
    match ds.load_sample("test_00002") {
        Err(SynthError::LabelOutOfRange { id, value }) => {
            assert_eq!((id.as_str(), value), ("test_00002", 20))
        }
        other => panic!("unexpected {other:?}"),
    }

    fs::remove_file(label_path(dir.path(), "test", "test_00001")).unwrap();
    let err = ds.load_sample("test_00001").unwrap_err();
    assert!(err.to_string().contains("test_00001"), "{err}");

    assert!(matches!(ds.load_sample("nope"), Err(SynthError::UnknownId(_))));
    assert!(matches!(ds.ids("dev"), Err(SynthError::UnknownSplit(_))));
    assert!(manifest_path(dir.path()).exists());
}

#[test]
fn config_errors_name_the_key() {
    let err = GenConfig::from_toml("seed = 1\ntrain = -5\n").unwrap_err();
    assert!(matches!(err, SynthError::Config { ref key, .. } if key == "train"));
    assert!(err.to_string().contains("train"));
    let ok = GenConfig::from_toml("seed = 4\nval = 2\n").unwrap();
    assert_eq!((ok.seed, ok.val, ok.train), (4, 2, 305));
    assert_eq!(GenConfig::from_toml(&ok.to_toml()).unwrap(), ok);
}

#[test]
fn defaults_cover_every_factor() {
    // enough samples that each challenge factor occurs at least once
    let spec = jpp_synth::SkeletonSpec::for_canvas(96, 96);
    let style = jpp_synth::RenderStyle::for_canvas(96, 96);
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..200 {
        let s = jpp_synth::generate_sample(11, &format!("x{i}"), (96, 96), &spec, &style).unwrap();
        seen.extend(s.factors);
    }
    assert_eq!(seen.len(), jpp_core::ChallengeFactor::ALL.len(), "{seen:?}");
}
