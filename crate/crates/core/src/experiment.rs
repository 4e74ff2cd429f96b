//! One JSON experiment config plus flat `--key value` overrides, and the
//! commands of the `nem` binary built on top of it.
//!
//! Every random stream is derived from the top-level `seed`: the corpus uses
//! `derive(seed, "datagen")`, training `derive(seed, "train")`, and the sweep
//! re-corrupts its shared clean corpus with `derive(seed, "sweep")`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datagen::{self, corpus_stats, CorpusSpec, Corruption, Dataset};
use crate::em::{self, read_trace, TrainConfig, TrainMode, TrainOutcome};
use crate::encoder::{EncoderConfig, EncoderParams, Selector};
use crate::error::{Error, Result};
use crate::eval::{self, MetricsReport, Prf1};
use crate::noise_channel::{ChannelSpec, PhiPair};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Holds `train.jsonl`, `test.jsonl` and `stats.json`.
    pub data_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub trace: PathBuf,
    pub report_dir: PathBuf,
    pub predictions: PathBuf,
    pub sweep_csv: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        let out = PathBuf::from("out");
        Paths {
            data_dir: out.join("data"),
            checkpoint: out.join("model.json"),
            trace: out.join("trace.jsonl"),
            report_dir: out.join("report"),
            predictions: out.join("predictions.jsonl"),
            sweep_csv: out.join("sweep.csv"),
        }
    }
}

impl Paths {
    pub fn train_file(&self) -> PathBuf {
        self.data_dir.join("train.jsonl")
    }

    pub fn test_file(&self) -> PathBuf {
        self.data_dir.join("test.jsonl")
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.data_dir,
            &mut self.checkpoint,
            &mut self.trace,
            &mut self.report_dir,
            &mut self.predictions,
            &mut self.sweep_csv,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub threshold: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub pf_list: Vec<f64>,
    /// Independent training seeds per noise level; rows report the mean.
    pub seeds: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            pf_list: vec![0.02, 0.04, 0.06, 0.08, 0.10],
            seeds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub paths: Paths,
    pub corpus: CorpusSpec,
    pub train: TrainConfig,
    pub channel: ChannelSpec,
    pub encoder: EncoderConfig,
    pub eval: EvalOptions,
    pub sweep: SweepOptions,
}

/// Default corpus with 10% flip noise on the training labels.
pub fn default_corpus() -> CorpusSpec {
    CorpusSpec {
        corruption: Corruption::Flip { p_f: 0.1 },
        ..CorpusSpec::default()
    }
}

/// Training schedule sized for one core: a full five-level, three-seed
/// sweep of both trainers fits in well under half an hour.
pub fn default_train() -> TrainConfig {
    TrainConfig {
        delta: 100,
        ..TrainConfig::default()
    }
}

/// Symmetric 0.1 flip channel on every relation.
pub fn default_channel() -> ChannelSpec {
    let p = PhiPair { phi0: 0.1, phi1: 0.1 };
    ChannelSpec::Shorthand { na: p, other: p }
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            paths: Paths::default(),
            corpus: default_corpus(),
            train: default_train(),
            channel: default_channel(),
            encoder: EncoderConfig::desk_scale(),
            eval: EvalOptions::default(),
            sweep: SweepOptions::default(),
        }
    }

    /// Parses a config and applies overrides. Relative paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let mut cfg = Self::from_value(value, overrides)?;
        if let Some(dir) = path.parent() {
            cfg.paths.rebase(dir);
        }
        Ok(cfg)
    }

    /// Builds a config from JSON: each section's fields are laid over the
    /// defaults of [`ExperimentConfig::new`] (`channel` is replaced whole),
    /// then the overrides are applied.
    pub fn from_value(value: Value, overrides: &[(String, String)]) -> Result<Self> {
        let Value::Object(user) = value else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        if !user.contains_key("seed") {
            return Err(Error::Config("config must set `seed`".into()));
        }
        let mut merged = serde_json::to_value(ExperimentConfig::new(0))?;
        let base = merged.as_object_mut().expect("struct serializes to an object");
        for (k, v) in user {
            match (base.get_mut(&k), v) {
                (Some(Value::Object(section)), Value::Object(fields)) if k != "channel" => {
                    section.extend(fields);
                }
                (_, v) => {
                    base.insert(k, v);
                }
            }
        }
        for (k, v) in overrides {
            apply_override(&mut merged, k, v)?;
        }
        let mut cfg: ExperimentConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.corpus.seed = seed::derive(cfg.seed, "datagen");
        cfg.train.seed = seed::derive(cfg.seed, "train");
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.channel.resolve(&self.corpus.catalog)?;
        if !(self.eval.threshold > 0.0 && self.eval.threshold < 1.0) {
            return Err(Error::Config("eval.threshold must lie in (0, 1)".into()));
        }
        if self.sweep.seeds == 0 {
            return Err(Error::Config("sweep.seeds must be at least 1".into()));
        }
        for &p in &self.sweep.pf_list {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("sweep.pf_list entry {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Training config with the channel resolved against `ds`'s catalog.
    pub fn train_config(&self, ds: &Dataset) -> Result<TrainConfig> {
        let mut t = self.train.clone();
        t.channel = self.channel.resolve(&ds.catalog)?;
        Ok(t)
    }

    /// Encoder config sized for `ds`.
    pub fn encoder_config(&self, ds: &Dataset) -> EncoderConfig {
        let mut e = self.encoder;
        e.vocab_size = self.corpus.vocab_size.max(ds.max_token().map_or(0, |t| t + 1));
        e.max_len = e.max_len.max(ds.max_sentence_len());
        e.n_relations = ds.catalog.len();
        e
    }
}

/// Sets the dotted `key` (e.g. `train.delta`) in `root`. The value is parsed
/// as JSON when possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("bad override key `{key}`")));
        }
        let obj = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just set")
            }
            _ => return Err(Error::Config(format!("override `{key}`: `{part}` is not inside an object"))),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one part")
}

/// Parses `--key value` pairs (also `--key=value`).
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected `--key value`, got `{a}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it
                .next()
                .ok_or_else(|| Error::Config(format!("override `--{key}` has no value")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSummary {
    pub train: datagen::CorpusStats,
    pub test: datagen::CorpusStats,
}

/// Writes the train/test split and `stats.json` into `paths.data_dir`. Only
/// the training labels are corrupted; test labels stay clean.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateSummary> {
    let clean_spec = CorpusSpec {
        corruption: Corruption::None,
        ..cfg.corpus.clone()
    };
    let split = datagen::generate_split(&clean_spec)?;
    let train = datagen::corrupt_dataset(&split.train, &cfg.corpus.corruption, cfg.corpus.seed)?;
    let test = Dataset {
        spec: Some(serde_json::to_value(&cfg.corpus)?),
        ..split.test
    };
    let train = Dataset {
        spec: Some(serde_json::to_value(&cfg.corpus)?),
        ..train
    };
    std::fs::create_dir_all(&cfg.paths.data_dir).map_err(|e| Error::io(&cfg.paths.data_dir, e))?;
    datagen::save(&train, &cfg.paths.train_file())?;
    datagen::save(&test, &cfg.paths.test_file())?;
    let summary = GenerateSummary {
        train: corpus_stats(&train),
        test: corpus_stats(&test),
    };
    write_json(&cfg.paths.data_dir.join("stats.json"), &summary)?;
    Ok(summary)
}

pub fn train_on(cfg: &ExperimentConfig, ds: &Dataset, mode: TrainMode) -> Result<TrainOutcome> {
    em::train(ds, cfg.encoder_config(ds), &cfg.train_config(ds)?, mode)
}

/// Trains on `dataset` (default: the generated training split) and writes
/// the checkpoint and trace.
pub fn cmd_train(cfg: &ExperimentConfig, mode: TrainMode, dataset: Option<&Path>) -> Result<TrainOutcome> {
    let path = dataset.map_or_else(|| cfg.paths.train_file(), Path::to_path_buf);
    let ds = datagen::load(&path)?;
    let out = train_on(cfg, &ds, mode)?;
    if let Some(dir) = cfg.paths.checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    out.params.save(&cfg.paths.checkpoint, &ds.catalog)?;
    if let Some(dir) = cfg.paths.trace.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    em::write_trace(&cfg.paths.trace, &out.trace)?;
    Ok(out)
}

fn load_for_eval(cfg: &ExperimentConfig, dataset: Option<&Path>) -> Result<(Dataset, EncoderParams)> {
    let path = dataset.map_or_else(|| cfg.paths.test_file(), Path::to_path_buf);
    let ds = datagen::load(&path)?;
    let params = EncoderParams::load(&cfg.paths.checkpoint, &ds.catalog)?;
    Ok((ds, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    /// One score per catalog relation, in catalog order.
    pub scores: Vec<f64>,
    /// Relations scoring at least the threshold, NA excluded.
    pub predicted: Vec<String>,
}

/// Scores every bag and writes one JSON line per bag to `paths.predictions`.
pub fn cmd_predict(cfg: &ExperimentConfig, dataset: Option<&Path>) -> Result<Vec<PredictionRecord>> {
    let (ds, params) = load_for_eval(cfg, dataset)?;
    let scores = eval::score_dataset(&params, &ds, cfg.train.selector)?;
    let records: Vec<PredictionRecord> = ds
        .bags
        .iter()
        .zip(scores)
        .map(|(b, s)| PredictionRecord {
            id: b.id.clone(),
            predicted: ds
                .catalog
                .non_na()
                .filter(|&r| s[r] >= cfg.eval.threshold)
                .map(|r| ds.catalog.name(r).to_string())
                .collect(),
            scores: s,
        })
        .collect();
    let mut out = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    write_bytes(&cfg.paths.predictions, &out)?;
    Ok(records)
}

/// Evaluates the checkpoint on `dataset` (default: the test split) and
/// writes the report files into `paths.report_dir`.
pub fn cmd_eval(cfg: &ExperimentConfig, dataset: Option<&Path>) -> Result<MetricsReport> {
    let (ds, params) = load_for_eval(cfg, dataset)?;
    let report = eval::evaluate(&params, &ds, cfg.train.selector, cfg.eval.threshold)?;
    eval::write_report(&report, &cfg.paths.report_dir)?;
    Ok(report)
}

/// Human-readable table of a training trace plus the Q trajectory when the
/// trace carries it.
pub fn cmd_trace(path: &Path) -> Result<String> {
    let trace = read_trace(path)?;
    let mut s = String::from("iter  lower_bound        before_estep       train_loss   mean_q_noisy  mean_q_clean\n");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for t in &trace {
        let _ = writeln!(
            s,
            "{:>4}  {:<17.6} {:<17.6}  {:<11.6}  {:<12}  {}",
            t.iter,
            t.lower_bound,
            t.lower_bound_before_estep,
            t.train_loss,
            opt(t.mean_q_noisy),
            opt(t.mean_q_clean)
        );
    }
    if let Ok(q) = eval::q_trajectory(&trace) {
        let q: Vec<String> = q.iter().map(|x| format!("{x:.4}")).collect();
        let _ = writeln!(s, "q trajectory: {}", q.join(" "));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub pf: f64,
    pub mode: TrainMode,
    pub run: usize,
    pub metrics: Prf1,
    /// Mean test score on true labels.
    pub true_label_mean: Option<f64>,
    /// Mean training-set score on injected-noise labels.
    pub noisy_label_mean: Option<f64>,
    /// Mean training-set score on true labels, whether observed or not.
    pub original_label_mean: Option<f64>,
    /// Mean Q over injected-noise labels, initial value first.
    pub q_trajectory: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pf: f64,
    pub mode: TrainMode,
    pub metrics: Prf1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub runs: Vec<SweepRun>,
    /// Mean over runs, one row per `(pf, mode)`.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, pf: f64, mode: TrainMode) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.pf == pf && r.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pf,mode,P,R,F1\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(s, "{},{},{:.2},{:.2},{:.2}", r.pf, r.mode, m.precision, m.recall, m.f1);
        }
        s
    }
}

/// Mean score over the training positions picked by `select(z, y)`.
fn mean_train_score(
    ds: &Dataset,
    scores: &[Vec<f64>],
    select: impl Fn(bool, bool) -> bool,
) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (b, s) in ds.bags.iter().zip(scores) {
        let Some(y) = &b.truth else { continue };
        for r in ds.catalog.non_na() {
            if select(b.observed.get(r), y.get(r)) {
                sum += s[r];
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Trains both modes for every noise level on one shared clean corpus,
/// re-corrupting only the training labels. `progress` sees each finished run.
pub fn run_sweep(cfg: &ExperimentConfig, mut progress: impl FnMut(&SweepRun)) -> Result<SweepResult> {
    let clean_spec = CorpusSpec {
        corruption: Corruption::None,
        ..cfg.corpus.clone()
    };
    let split = datagen::generate_split(&clean_spec)?;
    let sweep_seed = seed::derive(cfg.seed, "sweep");
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for (li, &pf) in cfg.sweep.pf_list.iter().enumerate() {
        let corruption = Corruption::Flip { p_f: pf };
        let train = datagen::corrupt_dataset(&split.train, &corruption, seed::child(sweep_seed, li as u64))?;
        for mode in [TrainMode::Baseline, TrainMode::Nem] {
            let mut acc = [0.0; 3];
            for run in 0..cfg.sweep.seeds {
                let mut run_cfg = cfg.clone();
                run_cfg.train.seed = seed::child(cfg.train.seed, run as u64);
                let out = train_on(&run_cfg, &train, mode)?;
                let report = eval::evaluate(&out.params, &split.test, cfg.train.selector, cfg.eval.threshold)?;
                let train_scores = eval::score_dataset(&out.params, &train, cfg.train.selector)?;
                let r = SweepRun {
                    pf,
                    mode,
                    run,
                    metrics: report.metrics,
                    true_label_mean: report.label_probabilities.true_label_mean,
                    noisy_label_mean: mean_train_score(&train, &train_scores, |z, y| z && !y),
                    original_label_mean: mean_train_score(&train, &train_scores, |_, y| y),
                    q_trajectory: eval::q_trajectory(&out.trace).ok(),
                };
                progress(&r);
                acc[0] += r.metrics.precision;
                acc[1] += r.metrics.recall;
                acc[2] += r.metrics.f1;
                runs.push(r);
            }
            let n = cfg.sweep.seeds as f64;
            rows.push(SweepRow {
                pf,
                mode,
                metrics: Prf1 {
                    precision: acc[0] / n,
                    recall: acc[1] / n,
                    f1: acc[2] / n,
                },
            });
        }
    }
    Ok(SweepResult { runs, rows })
}

/// [`run_sweep`], writing the CSV to `paths.sweep_csv` and every run's
/// details next to it as `<stem>.runs.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, progress: impl FnMut(&SweepRun)) -> Result<SweepResult> {
    let result = run_sweep(cfg, progress)?;
    write_bytes(&cfg.paths.sweep_csv, result.to_csv().as_bytes())?;
    write_json(&cfg.paths.sweep_csv.with_extension("runs.json"), &result.runs)?;
    Ok(result)
}

/// Resolves `--selector` on top of the config.
pub fn with_selector(cfg: &ExperimentConfig, selector: Option<Selector>) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let Some(s) = selector {
        c.train.selector = s;
    }
    c
}
