//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.
//!
//! `cargo test -p jpp-cli --test acceptance [-- <number>...]`

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use jpp_cli::commands::{read_summary, variant_config, EVAL_REPORT, VARIANTS};
use jpp_core::metrics::{
    aggregate_pckh, head_segment_length, parsing_scores, pckh, ConfusionMatrix, JointOutcome, PCKH_GROUPS,
};
use jpp_core::selfsup::{joint_structure_loss, structure_sensitive_loss};
use jpp_core::{Joint, JointSet, LabelMap, PartLabel, Planes, NUM_CLASSES, NUM_PSEUDO_JOINTS};
use jpp_net::{image_to_planes, JppNet, ModelKind, NetConfig, StageOutputs};
use jpp_synth::{generate_dataset, Dataset, GenConfig};
use jpp_train::gradcheck::{check_gradients, tiny_config};
use jpp_train::{predict, train_jppnet, InferConfig, LossMode, Resolution, RunOptions, Targets, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        ("metrics oracle equivalence", Duration::from_secs(10), metrics_oracle),
        ("PCKh properties", Duration::from_secs(5), pckh_properties),
        ("joint and structure loss unit suite", Duration::from_secs(5), structure_loss_units),
        ("full-preset layer shapes", Duration::from_secs(120), full_shapes),
        ("gradient check", Duration::from_secs(300), gradient_check),
        ("overfit smoke", Duration::from_secs(900), overfit_smoke),
        ("structure-sensitivity separation", Duration::from_secs(60), structure_separation),
        ("ablation harness", Duration::from_secs(7200), ablation_harness),
        ("end-to-end identity", Duration::from_secs(60), end_to_end_identity),
        ("determinism", Duration::from_secs(1200), determinism),
    ];
    // libtest-style flags are ignored; bare numbers select criteria
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let el = t.elapsed();
        let r = r.and_then(|d| {
            if el <= *limit {
                Ok(d)
            } else {
                Err(format!("{d}; took {:.1}s, limit {}s", el.as_secs_f64(), limit.as_secs()))
            }
        });
        match r {
            Ok(d) => println!("PASS {n:>2} {name} ({:.1}s): {d}", el.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL {n:>2} {name} ({:.1}s): {e}", el.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// 1 -------------------------------------------------------------------------

fn random_map(rng: &mut ChaCha8Rng, h: usize, w: usize) -> LabelMap {
    LabelMap::from_raw(h, w, (0..h * w).map(|_| rng.random_range(0..NUM_CLASSES as u8)).collect()).unwrap()
}

/// Per-class tp / gt / pred counts by direct pixel enumeration.
fn brute_counts(pairs: &[(LabelMap, LabelMap)]) -> [[u64; 3]; NUM_CLASSES] {
    let mut c = [[0u64; 3]; NUM_CLASSES];
    for (p, g) in pairs {
        for y in 0..g.height() {
            for x in 0..g.width() {
                let (pv, gv) = (p.get(y, x).index(), g.get(y, x).index());
                c[gv][1] += 1;
                c[pv][2] += 1;
                if pv == gv {
                    c[gv][0] += 1;
                }
            }
        }
    }
    c
}

fn metrics_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = vec![];
    for _ in 0..200 {
        // skew towards agreement so IoU values are not all tiny
        let g = random_map(&mut rng, 16, 16);
        let mut p = random_map(&mut rng, 16, 16);
        for y in 0..16 {
            for x in 0..16 {
                if rng.random_bool(0.6) {
                    p.set(y, x, g.get(y, x));
                }
            }
        }
        pairs.push((p, g));
    }
    let mut pooled = ConfusionMatrix::new();
    for (k, (p, g)) in pairs.iter().enumerate() {
        let mut cm = ConfusionMatrix::new();
        cm.add(p, g).map_err(|e| e.to_string())?;
        pooled.add(p, g).map_err(|e| e.to_string())?;
        compare(&cm, &brute_counts(std::slice::from_ref(&pairs[k])), &format!("pair {k}"))?;
    }
    compare(&pooled, &brute_counts(&pairs), "pooled")?;
    Ok("200 pairs and the pooled matrix match the pixel oracle".into())
}

fn compare(cm: &ConfusionMatrix, c: &[[u64; 3]; NUM_CLASSES], what: &str) -> Result<(), String> {
    let s = parsing_scores(cm).map_err(|e| e.to_string())?;
    let total: u64 = c.iter().map(|r| r[1]).sum();
    let tp: u64 = c.iter().map(|r| r[0]).sum();
    ensure(cm.total() == total && cm.trace() == tp, format!("{what}: counts"))?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    ensure(close(s.overall_accuracy, tp as f64 / total as f64), format!("{what}: overall accuracy"))?;
    let (mut acc, mut na, mut iou, mut ni) = (0.0, 0, 0.0, 0);
    for (k, [t, g, p]) in c.iter().enumerate() {
        ensure(cm.get(k, k) == *t && cm.row_sum(k) == *g && cm.col_sum(k) == *p, format!("{what}: class {k}"))?;
        let a = (*g > 0).then(|| *t as f64 / *g as f64);
        let union = g + p - t;
        let i = (union > 0).then(|| *t as f64 / union as f64);
        ensure(a == s.per_class_accuracy[k] && i == s.per_class_iou[k], format!("{what}: class {k} ratios"))?;
        if let Some(a) = a {
            acc += a;
            na += 1;
        }
        if let Some(i) = i {
            iou += i;
            ni += 1;
        }
    }
    ensure(close(s.mean_accuracy, acc / na as f64), format!("{what}: mean accuracy"))?;
    ensure(close(s.mean_iou, iou / ni as f64), format!("{what}: mean IoU"))
}

// 2 -------------------------------------------------------------------------

fn random_pose(rng: &mut ChaCha8Rng) -> JointSet {
    // dyadic coordinates keep scaled and shifted distances exact
    let mut j = JointSet::absent();
    for s in j.0.iter_mut() {
        *s = Joint::visible(rng.random_range(0..4096) as f64 / 64.0, rng.random_range(0..4096) as f64 / 64.0);
    }
    j
}

fn pckh_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gts: Vec<JointSet> = (0..100).map(|_| random_pose(&mut rng)).collect();
    let perfect: Vec<_> = gts.iter().map(|g| pckh(g, g, 0.5).unwrap()).collect();
    let s = aggregate_pckh(&perfect).map_err(|e| e.to_string())?;
    ensure(s.total == 1.0 && s.groups.iter().all(|g| *g == Some(1.0)), "perfect predictions")?;

    let mut displaced = vec![];
    for g in &gts {
        let d = 0.51 * head_segment_length(g).unwrap();
        let mut p = *g;
        for (k, j) in p.0.iter_mut().enumerate() {
            let a = k as f64 * 0.7;
            j.x += d * a.cos();
            j.y += d * a.sin();
        }
        displaced.push(pckh(&p, g, 0.5).unwrap());
    }
    let s = aggregate_pckh(&displaced).map_err(|e| e.to_string())?;
    ensure(s.total == 0.0 && s.groups.iter().all(|g| *g == Some(0.0)), "0.51 head displacement")?;

    for g in &gts {
        let mut p = *g;
        for j in p.0.iter_mut() {
            j.x += rng.random_range(-64..64) as f64 / 16.0;
            j.y += rng.random_range(-64..64) as f64 / 16.0;
        }
        let base = pckh(&p, g, 0.5).unwrap();
        for (s, tx, ty) in [(2.0, 17.0, -5.0), (0.25, -3.0, 40.0), (8.0, 0.5, 0.25)] {
            let map = |j: &JointSet| j.transformed(s, s, tx, ty);
            ensure(pckh(&map(&p), &map(g), 0.5).unwrap() == base, "translation/scale invariance")?;
        }
    }

    let mut g = JointSet::absent();
    g.set(jpp_core::JointId::HEAD_TOP, Joint::visible(10.0, 10.0));
    g.set(jpp_core::JointId::UPPER_NECK, Joint::visible(10.0, 20.0));
    g.set(jpp_core::JointId::R_WRIST, Joint::visible(30.0, 30.0));
    let mut p = g;
    p.set(jpp_core::JointId::R_WRIST, Joint::visible(35.0, 30.0));
    let v = pckh(&p, &g, 0.5).unwrap();
    ensure(v[jpp_core::JointId::R_WRIST.index()] == JointOutcome::Correct, "boundary at exactly 0.5")?;
    ensure(PCKH_GROUPS.len() == 7, "group table")?;
    Ok("perfect = 1, displaced = 0, invariance exact, boundary inclusive".into())
}

// 3 -------------------------------------------------------------------------

fn structure_loss_units() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let stack = Planes::from_vec(
        NUM_PSEUDO_JOINTS,
        6,
        6,
        (0..NUM_PSEUDO_JOINTS * 36).map(|_| rng.random_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let (lj, _) = joint_structure_loss(&stack, &stack).map_err(|e| e.to_string())?;
    ensure(lj == 0.0 && structure_sensitive_loss(lj, 2.7) == 0.0, "identical stacks")?;

    let mut gt = Planes::zeros(NUM_PSEUDO_JOINTS, 1, 1);
    gt.set(4, 0, 0, 1.0);
    let (lj, n) = joint_structure_loss(&Planes::zeros(NUM_PSEUDO_JOINTS, 1, 1), &gt).map_err(|e| e.to_string())?;
    ensure(lj == 0.5 && n == 1, format!("single pixel gave {lj}"))?;

    for _ in 0..1000 {
        let a = rng.random_range(0.0..10.0);
        let b = rng.random_range(0.0..10.0);
        ensure(structure_sensitive_loss(a, b) == a * b, "product")?;
    }
    Ok("zero on identical stacks, 0.5 on one pixel, exact product in 1000 trials".into())
}

// 4 -------------------------------------------------------------------------

fn full_shapes() -> Result<String, String> {
    let net = JppNet::new(NetConfig::full(), 0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = jpp_core::RgbImage::from_raw(384, 384, (0..384 * 384 * 3).map(|_| rng.random()).collect()).unwrap();
    let (out, trace) = net.forward_traced(&image_to_planes(&img)).map_err(|e| e.to_string())?;
    let t: BTreeMap<String, (usize, usize, usize)> = trace.into_iter().map(|e| (e.name, e.shape)).collect();
    ensure(out.len() == 3, "three stages")?;
    for (s, o) in out.iter().enumerate() {
        ensure(o.parsing_scores.shape() == (20, 48, 48), format!("stage {s} parsing"))?;
        ensure(o.pose_heatmaps.as_ref().map(|p| p.shape()) == Some((16, 48, 48)), format!("stage {s} pose"))?;
    }
    let mut rows: Vec<(String, usize)> = [
        ("part.conv-1", 512),
        ("part.conv-2", 256),
        ("part.aspp", 20),
        ("joint.conv-1", 512),
        ("joint.conv-2", 512),
        ("joint.conv-3", 256),
        ("joint.conv-4", 256),
        ("joint.conv-5", 256),
        ("joint.conv-6", 256),
        ("joint.conv-7", 512),
        ("joint.conv-8", 16),
    ]
    .iter()
    .map(|(n, c)| (n.to_string(), *c))
    .collect();
    for s in 1..=2 {
        for b in ["pose_refine", "parse_refine"] {
            for (n, c) in [
                ("remap-1", 128),
                ("remap-2", 128),
                ("concat", 512),
                ("conv-1", 512),
                ("conv-2", 256),
                ("conv-3", 256),
                ("conv-4", 256),
                ("conv-5", 256),
            ] {
                rows.push((format!("{b}{s}.{n}"), c));
            }
        }
        rows.push((format!("pose_refine{s}.conv-6"), 16));
        rows.push((format!("parse_refine{s}.aspp"), 20));
    }
    rows.push(("backbone.res4".into(), 1024));
    rows.push(("backbone.res5".into(), 2048));
    for (name, c) in &rows {
        let got = t.get(name).ok_or(format!("{name} missing from trace"))?;
        ensure(*got == (*c, 48, 48), format!("{name}: {got:?}, expected ({c}, 48, 48)"))?;
    }
    Ok(format!("{} layers match, concat 512 wide", rows.len()))
}

// 5 -------------------------------------------------------------------------

fn gradient_check() -> Result<String, String> {
    let j = check_gradients(tiny_config(8, ModelKind::Joint), LossMode::Joint, 220, 51, 1e-5).map_err(|e| e.to_string())?;
    let s = check_gradients(tiny_config(8, ModelKind::ParsingOnly), LossMode::Ss, 220, 52, 1e-5).map_err(|e| e.to_string())?;
    ensure(s.l_joint.unwrap_or(0.0) > 0.0, "ss probe has a zero structure weight")?;
    for (m, r) in [("joint", &j), ("ss", &s)] {
        ensure(r.checked >= 200, format!("{m}: {} weights", r.checked))?;
        ensure(r.max_rel_error < 1e-3, format!("{m}: max relative error {:.2e} at {:?}", r.max_rel_error, r.worst))?;
    }
    Ok(format!(
        "max relative error joint {:.1e}, ss {:.1e} over {} + {} weights",
        j.max_rel_error, s.max_rel_error, j.checked, s.checked
    ))
}

// 6 -------------------------------------------------------------------------

/// Toy preset overfit settings: no augmentation, batch 1, 2000 steps.
pub fn smoke_config() -> TrainConfig {
    TrainConfig {
        epochs_parsing: 20,
        epochs_joint: 180,
        batch_size: 1,
        scale_min: 1.0,
        scale_max: 1.0,
        flip_prob: 0.0,
        pose_weights: vec![100.0; 3],
        grad_clip: 0.0,
        ..TrainConfig::default()
    }
}

fn overfit_smoke() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gen = GenConfig {
        seed: 1,
        train: 10,
        val: 0,
        test: 0,
        ..GenConfig::default()
    };
    generate_dataset(&gen, dir.path()).map_err(|e| e.to_string())?;
    let data = Dataset::open(dir.path()).map_err(|e| e.to_string())?;
    let cfg = smoke_config();
    let out = train_jppnet(&cfg, &data, &dir.path().join("run"), RunOptions::default()).map_err(|e| e.to_string())?;
    let steps = out.records.last().map_or(0, |r| r.step);
    ensure(steps <= 2000, format!("{steps} iterations"))?;
    let icfg = InferConfig {
        resolution: Resolution::Output,
        ..InferConfig::single()
    };
    let mut cm = ConfusionMatrix::new();
    let mut vecs = vec![];
    for id in data.ids("train").map_err(|e| e.to_string())? {
        let s = data.load_sample(id).map_err(|e| e.to_string())?;
        let p = predict(&out.net, &s.image, &icfg).map_err(|e| e.to_string())?;
        cm.add(&p.labels, &s.labels.resized(p.labels.height(), p.labels.width()))
            .map_err(|e| e.to_string())?;
        vecs.extend(pckh(&p.joints, &s.joints, 0.5));
    }
    let miou = parsing_scores(&cm).map_err(|e| e.to_string())?.mean_iou;
    let pk = aggregate_pckh(&vecs).map_err(|e| e.to_string())?.total;
    let d = format!("{steps} iterations, train mIoU {miou:.4} (output resolution), train PCKh@0.5 {pk:.4}");
    ensure(miou >= 0.85 && pk >= 0.9, d.clone())?;
    Ok(d)
}

// 7 -------------------------------------------------------------------------

fn body_map() -> LabelMap {
    let mut m = LabelMap::new(32, 32, PartLabel::BACKGROUND);
    let mut fill = |l: PartLabel, y0: usize, y1: usize, x0: usize, x1: usize| {
        for y in y0..y1 {
            for x in x0..x1 {
                m.set(y, x, l);
            }
        }
    };
    fill(PartLabel::FACE, 1, 5, 13, 19);
    fill(PartLabel::UPPER_CLOTHES, 5, 15, 11, 21);
    fill(PartLabel::PANTS, 15, 19, 11, 21);
    fill(PartLabel::LEFT_ARM, 5, 17, 22, 25);
    fill(PartLabel::RIGHT_ARM, 5, 17, 7, 10);
    fill(PartLabel::LEFT_LEG, 19, 28, 16, 20);
    fill(PartLabel::RIGHT_LEG, 19, 28, 12, 16);
    fill(PartLabel::LEFT_SHOE, 28, 31, 16, 20);
    fill(PartLabel::RIGHT_SHOE, 28, 31, 12, 16);
    m
}

fn scores_for(m: &LabelMap) -> Planes {
    let mut s = Planes::zeros(NUM_CLASSES, m.height(), m.width());
    for y in 0..m.height() {
        for x in 0..m.width() {
            s.set(m.get(y, x).index(), y, x, 4.0);
        }
    }
    s
}

fn ss_terms(pred: &LabelMap, gt: &LabelMap) -> Result<(f64, f64), String> {
    let st = [StageOutputs {
        parsing_scores: scores_for(pred),
        pose_heatmaps: None,
        parsing_context: None,
        pose_context: None,
    }];
    let targets = Targets {
        labels: gt.clone(),
        heatmaps: None,
    };
    let (b, _) = jpp_train::total_loss(&st, &targets, &TrainConfig::default(), LossMode::Ss).map_err(|e| e.to_string())?;
    let s = b.structure.ok_or("no structure terms")?;
    Ok((s.l_parsing, b.total))
}

fn structure_separation() -> Result<String, String> {
    let gt = body_map();
    let limbs = [
        (PartLabel::LEFT_ARM, 5, 17, 22, 25),
        (PartLabel::RIGHT_ARM, 5, 17, 7, 10),
        (PartLabel::LEFT_LEG, 19, 28, 16, 20),
        (PartLabel::RIGHT_LEG, 19, 28, 12, 16),
    ];
    let mut worst_gap = f64::INFINITY;
    for (label, y0, y1, x0, x1) in limbs {
        // same pixel count wrong in both: both end rows vs. the two top rows
        let mut keep = gt.clone();
        let mut shift = gt.clone();
        for x in x0..x1 {
            keep.set(y0, x, PartLabel::BACKGROUND);
            keep.set(y1 - 1, x, PartLabel::BACKGROUND);
            shift.set(y0, x, PartLabel::BACKGROUND);
            shift.set(y0 + 1, x, PartLabel::BACKGROUND);
        }
        let (ce_keep, ls_keep) = ss_terms(&keep, &gt)?;
        let (ce_shift, ls_shift) = ss_terms(&shift, &gt)?;
        ensure((ce_keep - ce_shift).abs() < 1e-12, format!("{}: cross-entropy differs", label.name()))?;
        ensure(
            ls_shift > ls_keep,
            format!("{}: displaced {ls_shift} vs preserved {ls_keep}", label.name()),
        )?;
        worst_gap = worst_gap.min(ls_shift - ls_keep);
    }
    Ok(format!("4 limb pairs with equal cross-entropy; smallest gap {worst_gap:.3e}"))
}

// CLI helpers ----------------------------------------------------------------

fn jpp(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_jpp")).args(args).output().expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn jpp_ok(args: &[&str]) -> Result<String, String> {
    let (c, out, err) = jpp(args);
    ensure(c == 0, format!("jpp {} exited {c}: {err}", args.join(" ")))?;
    Ok(out)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write(p: &Path, text: &str) -> PathBuf {
    std::fs::write(p, text).unwrap();
    p.to_path_buf()
}

// 8 -------------------------------------------------------------------------

fn ablation_harness() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let gen = write(&root.join("gen.toml"), "seed = 8\ntrain = 160\nval = 40\ntest = 0\n");
    let data = root.join("data");
    jpp_ok(&["gen-data", "--config", s(&gen), "--out", s(&data)])?;
    let cfg = write(
        &root.join("ablate.toml"),
        "split = \"val\"\n\n[train]\nseed = 3\nepochs_parsing = 1\nepochs_joint = 1\nbatch_size = 4\npose_weights = [100.0]\n",
    );
    let out = root.join("ablate");
    jpp_ok(&["ablate", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)])?;

    let csv = std::fs::read_to_string(out.join("ablation.csv")).map_err(|e| e.to_string())?;
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let expected: Vec<&str> = VARIANTS.iter().map(|v| v.0).collect();
    ensure(names == expected, format!("rows {names:?}"))?;

    let base = TrainConfig {
        seed: 3,
        epochs_parsing: 1,
        epochs_joint: 1,
        batch_size: 4,
        pose_weights: vec![100.0],
        ..TrainConfig::default()
    };
    for (_, slug, msc, stages) in VARIANTS {
        let echo = std::fs::read_to_string(out.join("variants").join(slug).join("config.toml")).map_err(|e| e.to_string())?;
        let c = TrainConfig::from_toml(&echo).map_err(|e| e.to_string())?;
        ensure(c.msc == msc && c.stages == stages, format!("{slug}: echoed config"))?;
        ensure(c == variant_config(&base, msc, stages), format!("{slug}: echo differs from the variant"))?;
    }

    // re-run one variant from nothing but its echoed configs
    let v = out.join("variants").join("joint-s1");
    let rerun = root.join("rerun");
    jpp_ok(&["train", "--config", s(&v.join("config.toml")), "--data", s(&data), "--out", s(&rerun)])?;
    jpp_ok(&[
        "eval",
        "--config",
        s(&v.join("eval").join("config.toml")),
        "--data",
        s(&data),
        "--split",
        "val",
        "--checkpoint",
        s(&rerun.join("model.ckpt")),
        "--out",
        s(&rerun.join("eval")),
    ])?;
    let a = read_summary(&v.join("eval").join(EVAL_REPORT)).map_err(|e| e.to_string())?;
    let b = read_summary(&rerun.join("eval").join(EVAL_REPORT)).map_err(|e| e.to_string())?;
    ensure(a == b, "re-run of Joint + S1 gave different numbers")?;
    Ok(format!("five rows {expected:?}; configs echoed; Joint + S1 re-run identical (mIoU {:.4})", a.parsing.mean_iou))
}

// 9 -------------------------------------------------------------------------

fn end_to_end_identity() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let gen = write(&root.join("gen.toml"), "seed = 9\ntrain = 2\nval = 24\ntest = 0\n");
    let data = root.join("data");
    jpp_ok(&["gen-data", "--config", s(&gen), "--out", s(&data)])?;
    let gt = root.join("gt");
    jpp_ok(&["predict", "--ground-truth", "--data", s(&data), "--split", "val", "--out", s(&gt)])?;
    let ev = root.join("eval");
    jpp_ok(&["eval", "--data", s(&data), "--split", "val", "--pred", s(&gt), "--factors", "--out", s(&ev)])?;
    let r = read_summary(&ev.join(EVAL_REPORT)).map_err(|e| e.to_string())?;
    let p = &r.parsing;
    let pose = r.pose.as_ref().ok_or("no pose scores")?;
    ensure(
        p.overall_accuracy == 1.0 && p.mean_accuracy == 1.0 && p.mean_iou == 1.0 && pose.total == 1.0,
        format!("{p:?} pckh {}", pose.total),
    )?;
    Ok(format!("{} samples: accuracy, mean accuracy, mIoU and PCKh all 1.0", r.samples))
}

// 10 ------------------------------------------------------------------------

fn pipeline(root: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let gen = write(&root.join("gen.toml"), "seed = 10\ntrain = 12\nval = 6\ntest = 0\n");
    let train = write(&root.join("train.toml"), "epochs_parsing = 2\nepochs_joint = 2\nbatch_size = 2\n");
    let data = root.join("data");
    let run = root.join("run");
    let ev = root.join("eval");
    jpp_ok(&["gen-data", "--config", s(&gen), "--out", s(&data), "--seed", "10"])?;
    jpp_ok(&["train", "--config", s(&train), "--data", s(&data), "--out", s(&run), "--seed", "10"])?;
    jpp_ok(&[
        "eval",
        "--data",
        s(&data),
        "--split",
        "val",
        "--checkpoint",
        s(&run.join("model.ckpt")),
        "--factors",
        "--out",
        s(&ev),
        "--seed",
        "10",
    ])?;
    let mut files = vec![];
    for d in [&run, &ev] {
        let mut names: Vec<_> = std::fs::read_dir(d)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        for p in names {
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            files.push((rel, std::fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    Ok(files)
}

fn determinism() -> Result<String, String> {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = pipeline(a.path())?;
    let fb = pipeline(b.path())?;
    ensure(fa.len() == fb.len() && fa.len() > 8, format!("{} vs {} files", fa.len(), fb.len()))?;
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        ensure(na == nb && ba == bb, format!("{na} differs"))?;
    }
    ensure(fa.iter().any(|(n, _)| n.ends_with("eval_report.json")), "no eval report")?;
    Ok(format!("{} report and checkpoint files byte-identical across two runs", fa.len()))
}

