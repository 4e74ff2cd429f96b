//! Ranking and thresholded metrics over `(bag, relation)` predictions. NA is
//! never ranked and never counts as a positive.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::em::{read_trace, TraceRecord};
use crate::encoder::{predict, EncoderParams, Selector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub bag: String,
    pub relation: usize,
    pub score: f64,
    pub is_correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision, recall and F1, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Score descending, then bag id, then relation index.
pub fn rank(preds: &mut [RankedPrediction]) {
    preds.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.bag.cmp(&b.bag))
            .then_with(|| a.relation.cmp(&b.relation))
    });
}

/// One point per prefix of the ranking: `(tp_k / positives, tp_k / k)`.
pub fn pr_curve(preds: &[RankedPrediction], total_positives: usize) -> Result<Vec<PrPoint>> {
    if total_positives == 0 {
        return Err(Error::Config("PR curve needs at least one positive".into()));
    }
    let mut ranked = preds.to_vec();
    rank(&mut ranked);
    let mut tp = 0usize;
    Ok(ranked
        .iter()
        .enumerate()
        .map(|(k, p)| {
            tp += usize::from(p.is_correct);
            PrPoint {
                recall: tp as f64 / total_positives as f64,
                precision: tp as f64 / (k + 1) as f64,
            }
        })
        .collect())
}

/// Predictions scoring at least `threshold` are positive.
pub fn prf1(preds: &[RankedPrediction], threshold: f64, total_positives: usize) -> Prf1 {
    let (mut tp, mut predicted) = (0usize, 0usize);
    for p in preds.iter().filter(|p| p.score >= threshold) {
        predicted += 1;
        tp += usize::from(p.is_correct);
    }
    let precision = if predicted == 0 { 0.0 } else { 100.0 * tp as f64 / predicted as f64 };
    let recall = if total_positives == 0 {
        0.0
    } else {
        100.0 * tp as f64 / total_positives as f64
    };
    Prf1 {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

/// Counts over `[0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1]`.
pub fn score_histogram(scores: &[f64]) -> [usize; 5] {
    let mut bins = [0usize; 5];
    for &s in scores {
        let b = ((s * 5.0).floor().max(0.0) as usize).min(4);
        bins[b] += 1;
    }
    bins
}

/// Eval-mode scores for every bag.
pub fn score_dataset(
    params: &EncoderParams,
    ds: &Dataset,
    selector: Selector,
) -> Result<Vec<Vec<f64>>> {
    ds.bags.iter().map(|b| predict(params, b, selector)).collect()
}

fn truth_of(ds: &Dataset) -> Result<Vec<&crate::LabelVector>> {
    ds.bags
        .iter()
        .map(|b| {
            b.truth.as_ref().ok_or_else(|| Error::Validation {
                bag: b.id.clone(),
                msg: "evaluation needs true labels".into(),
            })
        })
        .collect()
}

/// Every non-NA `(bag, relation)` pair with its score, and the number of
/// true non-NA labels.
pub fn ranked_predictions(
    ds: &Dataset,
    scores: &[Vec<f64>],
) -> Result<(Vec<RankedPrediction>, usize)> {
    let truth = truth_of(ds)?;
    let na = ds.catalog.na_index();
    let mut preds = Vec::new();
    let mut positives = 0;
    for ((bag, y), s) in ds.bags.iter().zip(truth).zip(scores) {
        for r in ds.catalog.non_na() {
            positives += usize::from(y.get(r));
            preds.push(RankedPrediction {
                bag: bag.id.clone(),
                relation: r,
                score: s[r],
                is_correct: y.get(r),
            });
        }
        debug_assert!(na < s.len());
    }
    Ok((preds, positives))
}

/// Mean score over injected-noise positions (`z=1, y=0`) and over true
/// labels (`y=1`). Either is `None` when no such position exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelProbabilities {
    pub noisy_label_mean: Option<f64>,
    pub true_label_mean: Option<f64>,
}

pub fn label_probability_curves(ds: &Dataset, scores: &[Vec<f64>]) -> Result<LabelProbabilities> {
    let truth = truth_of(ds)?;
    let (mut ns, mut nc, mut ts, mut tc) = (0.0, 0usize, 0.0, 0usize);
    for ((bag, y), s) in ds.bags.iter().zip(truth).zip(scores) {
        for (r, &p) in s.iter().enumerate() {
            if y.get(r) {
                ts += p;
                tc += 1;
            } else if bag.observed.get(r) {
                ns += p;
                nc += 1;
            }
        }
    }
    let mean = |s: f64, c: usize| (c > 0).then(|| s / c as f64);
    Ok(LabelProbabilities {
        noisy_label_mean: mean(ns, nc),
        true_label_mean: mean(ts, tc),
    })
}

/// Mean Q over injected-noise labels, starting from the initial posterior.
pub fn q_trajectory(trace: &[TraceRecord]) -> Result<Vec<f64>> {
    let missing = || Error::Config("trace lacks mean_q_noisy (no true labels?)".into());
    let first = trace.first().ok_or_else(|| Error::Config("empty trace".into()))?;
    let mut out = vec![first.mean_q_noisy_before.ok_or_else(missing)?];
    for t in trace {
        out.push(t.mean_q_noisy.ok_or_else(missing)?);
    }
    Ok(out)
}

pub fn q_trajectory_file(path: &Path) -> Result<Vec<f64>> {
    q_trajectory(&read_trace(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationScore {
    pub relation: String,
    /// Mean score on bags where the relation is true.
    pub mean_score: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub metrics: Prf1,
    pub total_positives: usize,
    pub pr_curve: Vec<PrPoint>,
    /// Histogram of scores on true non-NA labels.
    pub score_bins: [usize; 5],
    pub per_relation: Vec<RelationScore>,
    pub label_probabilities: LabelProbabilities,
}

pub fn evaluate(
    params: &EncoderParams,
    ds: &Dataset,
    selector: Selector,
    threshold: f64,
) -> Result<MetricsReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
    }
    let scores = score_dataset(params, ds, selector)?;
    report_from_scores(ds, &scores, threshold)
}

pub fn report_from_scores(ds: &Dataset, scores: &[Vec<f64>], threshold: f64) -> Result<MetricsReport> {
    let (preds, positives) = ranked_predictions(ds, scores)?;
    let pr = if positives > 0 { pr_curve(&preds, positives)? } else { Vec::new() };
    let true_scores: Vec<f64> = preds.iter().filter(|p| p.is_correct).map(|p| p.score).collect();
    let per_relation = ds
        .catalog
        .non_na()
        .map(|r| {
            let s: Vec<f64> = preds
                .iter()
                .filter(|p| p.relation == r && p.is_correct)
                .map(|p| p.score)
                .collect();
            RelationScore {
                relation: ds.catalog.name(r).to_string(),
                mean_score: (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64),
                support: s.len(),
            }
        })
        .collect();
    Ok(MetricsReport {
        threshold,
        metrics: prf1(&preds, threshold, positives),
        total_positives: positives,
        pr_curve: pr,
        score_bins: score_histogram(&true_scores),
        per_relation,
        label_probabilities: label_probability_curves(ds, scores)?,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// `pr_curve.csv`, `metrics.csv`, `bins.csv`, `relations.csv` and
/// `report.json` under `dir`.
pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut pr = String::from("recall,precision\n");
    for p in &report.pr_curve {
        pr.push_str(&format!("{},{}\n", p.recall, p.precision));
    }
    write_file(&dir.join("pr_curve.csv"), pr.as_bytes())?;
    let m = &report.metrics;
    write_file(
        &dir.join("metrics.csv"),
        format!(
            "threshold,precision,recall,f1,total_positives\n{},{},{},{},{}\n",
            report.threshold, m.precision, m.recall, m.f1, report.total_positives
        )
        .as_bytes(),
    )?;
    let mut bins = String::from("bin_low,bin_high,count\n");
    for (i, c) in report.score_bins.iter().enumerate() {
        bins.push_str(&format!("{:.1},{:.1},{c}\n", i as f64 * 0.2, (i + 1) as f64 * 0.2));
    }
    write_file(&dir.join("bins.csv"), bins.as_bytes())?;
    let mut rel = String::from("relation,mean_score,support\n");
    for r in &report.per_relation {
        let score = r.mean_score.map_or(String::new(), |s| s.to_string());
        rel.push_str(&format!("{},{score},{}\n", r.relation, r.support));
    }
    write_file(&dir.join("relations.csv"), rel.as_bytes())?;
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_file(&dir.join("report.json"), &json)
}
