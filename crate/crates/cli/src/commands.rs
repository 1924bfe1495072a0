use std::path::{Path, PathBuf};

use jpp_core::metrics::{FactorTable, ParsingScores, PckhScores};
use jpp_synth::dataset::manifest_path;
use jpp_synth::{generate_dataset, Dataset, GenConfig};
use jpp_train::eval::read_archive_index;
use jpp_train::infer::ArchiveIndex;
use jpp_train::trainer::MODEL_CHECKPOINT;
use jpp_train::{
    batch_predict, evaluate_archive, export_ground_truth, load_model, train_jppnet, train_ssjppnet, EpochRecord,
    EvalReport, InferConfig, RunOptions, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_OK};
use crate::report::{self, class_table, factor_table, parsing_row, parsing_table, pose_columns, pose_row, pose_table, Table};
use crate::{Cli, Command, ModeArg};

pub const CONFIG_ECHO: &str = "config.toml";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const PREDICTIONS_DIR: &str = "preds";

#[derive(Clone, Debug, PartialEq)]
pub struct CommandResult {
    pub code: i32,
    pub reports: Vec<PathBuf>,
    pub summary: String,
}

impl CommandResult {
    fn ok(reports: Vec<PathBuf>, summary: String) -> Self {
        Self {
            code: EXIT_OK,
            reports,
            summary,
        }
    }
}

pub fn run(cli: &Cli) -> Result<CommandResult, CliError> {
    let config_text = cli
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::io(p, e)))
        .transpose()?;
    let text = config_text.as_deref();
    match &cli.command {
        Command::GenData => cmd_gen_data(text, cli.seed, out_dir(cli)?),
        Command::Train {
            data,
            mode,
            resume,
            init,
        } => cmd_train(text, cli.seed, data, *mode, *resume, init.as_deref(), out_dir(cli)?),
        Command::Eval {
            data,
            split,
            pred,
            checkpoint,
            factors,
        } => {
            let source = match (pred, checkpoint) {
                (Some(p), _) => Source::Archive(p),
                (None, Some(c)) => Source::Checkpoint(c),
                (None, None) => return Err(CliError::Usage("eval needs --pred or --checkpoint".into())),
            };
            cmd_eval(text, data, split, source, *factors, out_dir(cli)?)
        }
        Command::Predict {
            data,
            split,
            checkpoint,
            ground_truth,
        } => cmd_predict(text, data, split, checkpoint.as_deref(), *ground_truth, out_dir(cli)?),
        Command::Ablate { data } => cmd_ablate(text, cli.seed, data, out_dir(cli)?),
        Command::Report { inputs } => cmd_report(inputs, cli.out.as_deref()),
    }
}

fn out_dir(cli: &Cli) -> Result<&Path, CliError> {
    cli.out
        .as_deref()
        .ok_or_else(|| CliError::Usage("this command needs --out".into()))
}

fn create_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

/// Echoes the config verbatim next to the resolved values actually used.
fn echo_config(out: &Path, text: Option<&str>, resolved: &str) -> Result<(), CliError> {
    report::write(&out.join(CONFIG_ECHO), text.unwrap_or(resolved))?;
    report::write(&out.join(RESOLVED_CONFIG), resolved)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialises") + "\n"
}

fn toml_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    msg.strip_prefix("unknown field")
        .and_then(|_| msg.split('`').nth(1))
        .unwrap_or("<file>")
        .to_string()
}

fn parse_infer(text: Option<&str>) -> Result<InferConfig, CliError> {
    let cfg: InferConfig = match text {
        Some(t) => toml::from_str(t).map_err(|e| CliError::Config {
            key: toml_key(&e),
            reason: e.message().to_string(),
        })?,
        None => InferConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_gen_data(text: Option<&str>, seed: Option<u64>, out: &Path) -> Result<CommandResult, CliError> {
    let mut cfg = match text {
        Some(t) => GenConfig::from_toml(t)?,
        None => GenConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let manifest = generate_dataset(&cfg, out)?;
    echo_config(out, text, &cfg.to_toml())?;
    let counts: Vec<String> = manifest
        .splits
        .iter()
        .map(|(k, v)| format!("{k} {}", v.len()))
        .collect();
    Ok(CommandResult::ok(
        vec![manifest_path(out)],
        format!("generated {} (seed {})\n", counts.join(", "), cfg.seed),
    ))
}

fn parse_train(text: Option<&str>, seed: Option<u64>) -> Result<TrainConfig, CliError> {
    let mut cfg = match text {
        Some(t) => TrainConfig::from_toml(t)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[derive(Serialize, Deserialize)]
struct TrainReport {
    mode: String,
    steps: usize,
    final_loss: Option<f64>,
    checkpoint: String,
    records: Vec<EpochRecord>,
}

pub fn cmd_train(
    text: Option<&str>,
    seed: Option<u64>,
    data: &Path,
    mode: ModeArg,
    resume: bool,
    init: Option<&Path>,
    out: &Path,
) -> Result<CommandResult, CliError> {
    let cfg = parse_train(text, seed)?;
    if init.is_some() && mode != ModeArg::Ss {
        return Err(CliError::Usage("--init only applies to --mode ss".into()));
    }
    let ds = Dataset::open(data)?;
    create_dir(out)?;
    echo_config(out, text, &cfg.to_toml())?;
    let opts = RunOptions {
        resume,
        init: init.map(load_model).transpose()?,
        max_steps: None,
    };
    let outcome = match mode {
        ModeArg::Joint => train_jppnet(&cfg, &ds, out, opts)?,
        ModeArg::Ss => train_ssjppnet(&cfg, &ds, out, opts)?,
    };
    let last = outcome.records.last();
    let rep = TrainReport {
        mode: format!("{mode:?}").to_lowercase(),
        steps: last.map_or(0, |r| r.step),
        final_loss: last.map(|r| r.loss),
        checkpoint: MODEL_CHECKPOINT.into(),
        records: outcome.records.clone(),
    };
    let path = out.join(TRAIN_REPORT);
    report::write(&path, &to_json(&rep))?;
    if mode == ModeArg::Ss && ds.pose_reads() != 0 {
        return Err(CliError::Runtime("ss training read joint annotations".into()));
    }
    Ok(CommandResult::ok(
        vec![path, outcome.checkpoint],
        format!(
            "trained {} steps, final loss {}\n",
            rep.steps,
            rep.final_loss.map_or("-".into(), |l| format!("{l:.6}"))
        ),
    ))
}

enum Source<'a> {
    Archive(&'a Path),
    Checkpoint(&'a Path),
}

/// The JSON evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub method: String,
    pub split: String,
    pub samples: usize,
    pub parsing: ParsingScores,
    pub pose: Option<PckhScores>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factors: Option<FactorTable>,
}

impl EvalSummary {
    fn new(method: &str, r: EvalReport, with_factors: bool) -> Self {
        Self {
            method: method.into(),
            split: r.split,
            samples: r.samples,
            parsing: r.parsing,
            pose: r.pose,
            factors: with_factors.then_some(r.factors),
        }
    }
}

/// Writes the JSON report, the CSV tables and a text rendering.
fn write_eval(out: &Path, s: &EvalSummary) -> Result<(Vec<PathBuf>, String), CliError> {
    let mut paths = vec![out.join(EVAL_REPORT)];
    report::write(&paths[0], &to_json(s))?;
    let mut tables = vec![
        ("parsing.csv", parsing_table(&s.method, &s.parsing)),
        ("pose.csv", pose_table(&s.method, s.pose.as_ref())),
        ("classes.csv", class_table(&s.method, &s.parsing)),
    ];
    if let Some(f) = &s.factors {
        tables.push(("factors.csv", factor_table(f)));
    }
    let mut text = format!("split {} ({} samples)\n", s.split, s.samples);
    for (name, t) in &tables {
        let p = out.join(name);
        t.write_csv(&p)?;
        paths.push(p);
        if *name != "classes.csv" {
            text += "\n";
            text += &t.to_text();
        }
    }
    let p = out.join("report.txt");
    report::write(&p, &text)?;
    paths.push(p);
    Ok((paths, text))
}

fn check_split(index: &ArchiveIndex, split: &str) -> Result<(), CliError> {
    if index.split != split {
        return Err(CliError::Data(format!(
            "archive holds split {}, asked to evaluate {split}",
            index.split
        )));
    }
    Ok(())
}

fn cmd_eval(
    text: Option<&str>,
    data: &Path,
    split: &str,
    source: Source,
    factors: bool,
    out: &Path,
) -> Result<CommandResult, CliError> {
    let ds = Dataset::open(data)?;
    ds.ids(split)?;
    create_dir(out)?;
    let (archive, method) = match source {
        Source::Archive(p) => (p.to_path_buf(), "archive"),
        Source::Checkpoint(c) => {
            let icfg = parse_infer(text)?;
            echo_config(out, text, &toml::to_string(&icfg).expect("flat config"))?;
            let net = load_model(c)?;
            let dir = out.join(PREDICTIONS_DIR);
            batch_predict(&net, &ds, split, &icfg, &dir)?;
            (dir, "model")
        }
    };
    check_split(&read_archive_index(&archive)?, split)?;
    let summary = EvalSummary::new(method, evaluate_archive(&archive, &ds)?, factors);
    let (paths, text) = write_eval(out, &summary)?;
    Ok(CommandResult::ok(paths, text))
}

fn cmd_predict(
    text: Option<&str>,
    data: &Path,
    split: &str,
    checkpoint: Option<&Path>,
    ground_truth: bool,
    out: &Path,
) -> Result<CommandResult, CliError> {
    let ds = Dataset::open(data)?;
    let index = if ground_truth {
        export_ground_truth(&ds, split, out)?
    } else {
        let c = checkpoint.ok_or_else(|| CliError::Usage("predict needs --checkpoint or --ground-truth".into()))?;
        let icfg = parse_infer(text)?;
        let net = load_model(c)?;
        let index = batch_predict(&net, &ds, split, &icfg, out)?;
        echo_config(out, text, &toml::to_string(&icfg).expect("flat config"))?;
        index
    };
    Ok(CommandResult::ok(
        vec![out.join(jpp_train::infer::ARCHIVE_INDEX)],
        format!("wrote {} predictions for split {}\n", index.ids.len(), index.split),
    ))
}

/// One experiment file for the ablation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    /// Split the variants are evaluated on.
    pub split: String,
    pub train: TrainConfig,
    pub infer: InferConfig,
}

impl Default for AblateConfig {
    fn default() -> Self {
        Self {
            split: "val".into(),
            train: TrainConfig::default(),
            infer: InferConfig::default(),
        }
    }
}

/// Display name, directory name, MSC flag and refinement stage count.
pub const VARIANTS: [(&str, &str, bool, usize); 5] = [
    ("Joint", "joint", false, 0),
    ("Joint + MSC", "joint-msc", true, 0),
    ("Joint + S1", "joint-s1", false, 1),
    ("Joint + MSC + S1", "joint-msc-s1", true, 1),
    ("Joint + MSC + S2", "joint-msc-s2", true, 2),
];

/// The base config with a variant's architecture switches applied; per-stage
/// weight lists are cut or padded (with their last value) to fit.
pub fn variant_config(base: &TrainConfig, msc: bool, stages: usize) -> TrainConfig {
    let fit = |w: &[f64]| -> Vec<f64> {
        match w.last() {
            None => vec![],
            Some(&last) => (0..=stages).map(|s| w.get(s).copied().unwrap_or(last)).collect(),
        }
    };
    TrainConfig {
        msc,
        stages,
        parsing_weights: fit(&base.parsing_weights),
        pose_weights: fit(&base.pose_weights),
        ..base.clone()
    }
}

pub fn comparison_table(first: &str, rows: &[(String, &EvalSummary)]) -> Table {
    let mut header = vec![first];
    header.extend(&report::PARSING_COLUMNS[1..]);
    header.extend(&pose_columns()[1..]);
    let mut t = Table::new(&header);
    for (name, s) in rows {
        let mut r = parsing_row(name, &s.parsing);
        r.extend(pose_row(name, s.pose.as_ref()).into_iter().skip(1));
        t.push(r);
    }
    t
}

fn cmd_ablate(text: Option<&str>, seed: Option<u64>, data: &Path, out: &Path) -> Result<CommandResult, CliError> {
    let mut cfg: AblateConfig = match text {
        Some(t) => toml::from_str(t).map_err(|e| CliError::Config {
            key: toml_key(&e),
            reason: e.message().to_string(),
        })?,
        None => AblateConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    cfg.infer.validate()?;
    let ds = Dataset::open(data)?;
    ds.ids(&cfg.split)?;
    create_dir(out)?;
    echo_config(out, text, &toml::to_string(&cfg).expect("config serialises"))?;
    let mut results = Vec::new();
    for (name, slug, msc, stages) in VARIANTS {
        let dir = out.join("variants").join(slug);
        let tcfg = variant_config(&cfg.train, msc, stages);
        tcfg.validate()?;
        let ttext = tcfg.to_toml();
        let itext = toml::to_string(&cfg.infer).expect("flat config");
        let r = cmd_train(Some(&ttext), None, data, ModeArg::Joint, false, None, &dir)?;
        let ckpt = r.reports[1].clone();
        cmd_eval(Some(&itext), data, &cfg.split, Source::Checkpoint(&ckpt), false, &dir.join("eval"))?;
        let summary: EvalSummary = read_summary(&dir.join("eval").join(EVAL_REPORT))?;
        results.push((name.to_string(), summary));
    }
    let rows: Vec<(String, &EvalSummary)> = results.iter().map(|(n, s)| (n.clone(), s)).collect();
    let table = comparison_table("Variant", &rows);
    let csv = out.join("ablation.csv");
    table.write_csv(&csv)?;
    let json = out.join("ablation.json");
    let rows_json: Vec<serde_json::Value> = results
        .iter()
        .zip(VARIANTS)
        .map(|((name, s), (_, slug, msc, stages))| {
            serde_json::json!({
                "variant": name,
                "dir": format!("variants/{slug}"),
                "msc": msc,
                "stages": stages,
                "parsing": s.parsing,
                "pose": s.pose,
            })
        })
        .collect();
    report::write(&json, &to_json(&rows_json))?;
    let txt = out.join("ablation.txt");
    let text = table.to_text();
    report::write(&txt, &text)?;
    Ok(CommandResult::ok(vec![csv, json, txt], text))
}

pub fn read_summary(path: &Path) -> Result<EvalSummary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_report(inputs: &[PathBuf], out: Option<&Path>) -> Result<CommandResult, CliError> {
    let mut rows = Vec::new();
    for p in inputs {
        let file = if p.is_dir() { p.join(EVAL_REPORT) } else { p.clone() };
        let name = file
            .parent()
            .and_then(|d| d.file_name())
            .map_or_else(|| file.display().to_string(), |n| n.to_string_lossy().into_owned());
        rows.push((name, read_summary(&file)?));
    }
    let refs: Vec<(String, &EvalSummary)> = rows.iter().map(|(n, s)| (n.clone(), s)).collect();
    let table = comparison_table("Method", &refs);
    let text = table.to_text();
    let mut reports = vec![];
    if let Some(o) = out {
        let csv = o.join("report.csv");
        table.write_csv(&csv)?;
        report::write(&o.join("report.txt"), &text)?;
        reports = vec![csv, o.join("report.txt")];
    }
    Ok(CommandResult::ok(reports, text))
}
