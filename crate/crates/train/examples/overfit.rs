//! Overfits the toy preset on a handful of samples and reports train scores.
//!
//! usage: overfit [samples] [epochs_parsing] [epochs_joint] [batch] [lr] [pose_weight]

use std::time::Instant;

use jpp_core::metrics::{aggregate_pckh, parsing_scores, pckh, ConfusionMatrix};
use jpp_synth::{generate_dataset, Dataset, GenConfig};
use jpp_train::{predict, train_jppnet, InferConfig, Resolution, RunOptions, TrainConfig};

fn env(key: &str, d: f64) -> f64 {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(d)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let n = arg(0, 10.0) as usize;
    let tmp = tempfile::tempdir()?;
    let dir = match args.get(6) {
        Some(p) => std::path::PathBuf::from(p),
        None => tmp.path().to_path_buf(),
    };
    let gen = GenConfig {
        seed: 1,
        train: n,
        val: 0,
        test: 0,
        ..GenConfig::default()
    };
    generate_dataset(&gen, &dir)?;
    let data = Dataset::open(&dir)?;
    let cfg = TrainConfig {
        epochs_parsing: arg(1, 50.0) as usize,
        epochs_joint: arg(2, 150.0) as usize,
        batch_size: arg(3, 1.0) as usize,
        base_lr: arg(4, 0.01),
        scale_min: 1.0,
        scale_max: 1.0,
        flip_prob: 0.0,
        pose_weights: vec![arg(5, 1.0); 3],
        grad_clip: env("CLIP", 10.0),
        lr_power: env("POWER", 0.9),
        heatmap_sigma: env("SIGMA", 1.0),
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let out = train_jppnet(&cfg, &data, &dir.join("run"), RunOptions::default())?;
    for r in &out.records {
        if r.epoch % 10 == 9 {
            println!("{:?} {} step {} loss {:.4} parse {:?} pose {:?}", r.phase, r.epoch, r.step, r.loss, r.parsing, r.pose);
        }
    }
    println!("train time {:.1}s", t.elapsed().as_secs_f64());
    for res in [Resolution::Output, Resolution::Native] {
        let icfg = InferConfig { resolution: res, ..InferConfig::single() };
        let mut conf = ConfusionMatrix::new();
        let mut vecs = vec![];
        for id in data.ids("train")? {
            let s = data.load_sample(id)?;
            let p = predict(&out.net, &s.image, &icfg)?;
            conf.add(&p.labels, &s.labels.resized(p.labels.height(), p.labels.width()))?;
            vecs.extend(pckh(&p.joints, &s.joints, 0.5));
            if std::env::var("VERBOSE").is_ok() && res == Resolution::Output {
                for j in [0usize, 5, 9, 8] {
                    println!("{id} j{j} gt {:?} pred {:?}", s.joints.0[j], p.joints.0[j]);
                }
            }
        }
        let ps = parsing_scores(&conf)?;
        let pk = aggregate_pckh(&vecs)?;
        println!("{res:?}: miou {:.4} acc {:.4} pckh {:.4} {:?}", ps.mean_iou, ps.overall_accuracy, pk.total, pk.groups);
    }
    Ok(())
}
