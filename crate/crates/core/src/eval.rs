//! Node classification protocol: random train/test splits at several
//! training fractions, one-vs-rest linear SVMs on the embeddings, Micro and
//! Macro F1.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabelTable, NodeId};
use crate::rng::{derive_seed, seeded, stream_rng, tag_of};
use crate::skipgram::{dot, EmbeddingMatrix};

/// The nine training fractions 0.1, 0.2, .., 0.9.
pub const FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Uniform random partition of the labeled nodes with
/// `|train| = round(fraction * N)`. Both parts are sorted.
pub fn split(labels: &LabelTable, fraction: f64, seed: u64) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "training fraction {fraction} outside (0, 1)"
        )));
    }
    let mut nodes = labels.labeled_nodes();
    let n = nodes.len();
    let k = (fraction * n as f64).round() as usize;
    if k == 0 || k == n {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {n} labeled nodes leaves an empty train or test set"
        )));
    }
    nodes.sort_unstable();
    nodes.shuffle(&mut seeded(seed));
    let mut test = nodes.split_off(k);
    nodes.sort_unstable();
    test.sort_unstable();
    Ok((nodes, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    /// L2 strength.
    pub lambda: f64,
    pub epochs: usize,
    /// Initial step size; step `t` uses `eta0 / (1 + lambda * eta0 * t)`.
    pub eta0: f64,
    /// Standardize features with train-set mean and deviation.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            eta0: 0.1,
            standardize: true,
            seed: 0,
        }
    }
}

impl ClassifierParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            out.push("lambda must be >= 0".to_string());
        }
        if self.epochs == 0 {
            out.push("classifier epochs must be >= 1".to_string());
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            out.push("eta0 must be positive".to_string());
        }
        out
    }
}

/// One hinge-loss classifier per class; classes without training examples
/// have no model and are never predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    shift: Vec<f64>,
    scale: Vec<f64>,
    classes: Vec<Option<(Vec<f64>, f64)>>,
}

impl LinearModel {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Classes that had no training examples.
    pub fn absent_classes(&self) -> Vec<u32> {
        (0..self.classes.len() as u32)
            .filter(|&c| self.classes[c as usize].is_none())
            .collect()
    }

    pub fn weights(&self, class: u32) -> Option<(&[f64], f64)> {
        self.classes
            .get(class as usize)?
            .as_ref()
            .map(|(w, b)| (w.as_slice(), *b))
    }

    fn features(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Per-class margins; `-inf` for absent classes.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let z = self.features(x);
        self.classes
            .iter()
            .map(|m| m.as_ref().map_or(f64::NEG_INFINITY, |(w, b)| dot(w, &z) + b))
            .collect()
    }

    /// Arg-max margin, lowest class on ties.
    pub fn predict(&self, x: &[f64]) -> u32 {
        let scores = self.decision_values(x);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best as u32
    }
}

fn check_rows(emb: &EmbeddingMatrix, labels: &LabelTable, nodes: &[NodeId]) -> Result<()> {
    for &v in nodes {
        if v as usize >= emb.node_count() {
            return Err(Error::InvalidNode {
                id: v as usize,
                node_count: emb.node_count(),
            });
        }
        if labels.get(v).is_none() {
            return Err(Error::InvalidArgument(format!("node {v} has no label")));
        }
    }
    Ok(())
}

/// Trains one-vs-rest SGD hinge-loss classifiers with L2 regularization.
pub fn train_linear_ovr(
    emb: &EmbeddingMatrix,
    labels: &LabelTable,
    train: &[NodeId],
    params: &ClassifierParams,
) -> Result<LinearModel> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    check_rows(emb, labels, train)?;
    let problems = params.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidArgument(problems.join("; ")));
    }
    let d = emb.dim();
    let n = train.len() as f64;
    let (mut shift, mut scale) = (vec![0.0; d], vec![1.0; d]);
    if params.standardize {
        for &v in train {
            for (m, x) in shift.iter_mut().zip(emb.vector(v)) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for &v in train {
            for ((s, x), m) in var.iter_mut().zip(emb.vector(v)).zip(&shift) {
                *s += (x - m).powi(2) / n;
            }
        }
        for (s, v) in scale.iter_mut().zip(var) {
            *s = if v > 0.0 { v.sqrt() } else { 1.0 };
        }
    }
    let rows: Vec<Vec<f64>> = train
        .iter()
        .map(|&v| {
            emb.vector(v)
                .iter()
                .zip(shift.iter().zip(&scale))
                .map(|(x, (m, s))| (x - m) / s)
                .collect()
        })
        .collect();
    let truth: Vec<u32> = train.iter().map(|&v| labels.get(v).expect("checked")).collect();
    let class_seed = derive_seed(params.seed, tag_of("classifier"));
    let classes = (0..labels.class_count() as u32)
        .into_par_iter()
        .map(|c| {
            if !truth.contains(&c) {
                return None;
            }
            let mut rng = stream_rng(class_seed, c as u64);
            let mut w = vec![0.0; d];
            let mut b = 0.0;
            let mut order: Vec<usize> = (0..rows.len()).collect();
            let mut t = 0u64;
            for _ in 0..params.epochs {
                order.shuffle(&mut rng);
                for &i in &order {
                    let eta = params.eta0 / (1.0 + params.lambda * params.eta0 * t as f64);
                    let y = if truth[i] == c { 1.0 } else { -1.0 };
                    let margin = y * (dot(&w, &rows[i]) + b);
                    let decay = 1.0 - eta * params.lambda;
                    for x in w.iter_mut() {
                        *x *= decay;
                    }
                    if margin < 1.0 {
                        for (x, r) in w.iter_mut().zip(&rows[i]) {
                            *x += eta * y * r;
                        }
                        b += eta * y;
                    }
                    t += 1;
                }
            }
            Some((w, b))
        })
        .collect();
    Ok(LinearModel { shift, scale, classes })
}

/// Micro and Macro F1 of single-label predictions. Macro averages over the
/// classes occurring in either vector.
pub fn f1_scores(predictions: &[u32], truth: &[u32]) -> Result<(f64, f64)> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("F1 needs at least one sample".into()));
    }
    let k = predictions.iter().chain(truth).copied().max().unwrap_or(0) as usize + 1;
    let mut tp = vec![0u64; k];
    let mut fp = vec![0u64; k];
    let mut fneg = vec![0u64; k];
    let mut present = vec![false; k];
    for (&p, &t) in predictions.iter().zip(truth) {
        present[p as usize] = true;
        present[t as usize] = true;
        if p == t {
            tp[p as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fneg[t as usize] += 1;
        }
    }
    let f1 = |tp: u64, fp: u64, fneg: u64| {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / denom as f64
        }
    };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    let per_class: Vec<f64> = (0..k)
        .filter(|&c| present[c])
        .map(|c| f1(tp[c], fp[c], fneg[c]))
        .collect();
    let macro_f1 = per_class.iter().sum::<f64>() / per_class.len() as f64;
    Ok((micro, macro_f1))
}

/// Trains on `train`, predicts `test`, returns `(micro, macro, absent classes)`.
pub fn evaluate_split(
    emb: &EmbeddingMatrix,
    labels: &LabelTable,
    train: &[NodeId],
    test: &[NodeId],
    params: &ClassifierParams,
) -> Result<(f64, f64, Vec<u32>)> {
    check_rows(emb, labels, test)?;
    let model = train_linear_ovr(emb, labels, train, params)?;
    let pred: Vec<u32> = test.iter().map(|&v| model.predict(emb.vector(v))).collect();
    let truth: Vec<u32> = test.iter().map(|&v| labels.get(v).expect("checked")).collect();
    let (micro, macro_f1) = f1_scores(&pred, &truth)?;
    Ok((micro, macro_f1, model.absent_classes()))
}

/// Population mean and variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolParams {
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub classifier: ClassifierParams,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            fractions: FRACTIONS.to_vec(),
            repeats: 10,
            seed: 0,
            classifier: ClassifierParams::default(),
        }
    }
}

impl ProtocolParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.classifier.problems();
        if self.fractions.is_empty() {
            out.push("at least one training fraction is required".to_string());
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            out.push("training fractions must lie in (0, 1)".to_string());
        }
        if self.repeats == 0 {
            out.push("repeats must be >= 1".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub fraction: f64,
    pub repeat: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub absent_classes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSummary {
    pub fraction: f64,
    pub micro_mean: f64,
    pub micro_variance: f64,
    pub macro_mean: f64,
    pub macro_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Always `"population"`.
    pub variance: String,
    pub params: ProtocolParams,
    pub summary: Vec<FractionSummary>,
    pub runs: Vec<EvalRun>,
}

/// Seed of the split for repeat `r` at fraction index `f`.
pub fn split_seed(master: u64, f: usize, r: usize) -> u64 {
    derive_seed(derive_seed(master, tag_of("split")), ((f as u64) << 32) | r as u64)
}

/// Every (fraction, repeat) run in parallel; results are assembled in
/// fraction-major order.
pub fn run_protocol(emb: &EmbeddingMatrix, labels: &LabelTable, params: &ProtocolParams) -> Result<EvalReport> {
    let problems = params.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidArgument(problems.join("; ")));
    }
    let jobs: Vec<(usize, usize)> = (0..params.fractions.len())
        .flat_map(|f| (0..params.repeats).map(move |r| (f, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(f, r)| {
            let fraction = params.fractions[f];
            let seed = split_seed(params.seed, f, r);
            let (train, test) = split(labels, fraction, seed)?;
            let classifier = ClassifierParams {
                seed: derive_seed(params.classifier.seed, seed),
                ..params.classifier
            };
            let (micro_f1, macro_f1, absent_classes) = evaluate_split(emb, labels, &train, &test, &classifier)?;
            Ok(EvalRun {
                fraction,
                repeat: r,
                seed,
                train_size: train.len(),
                test_size: test.len(),
                micro_f1,
                macro_f1,
                absent_classes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = params
        .fractions
        .iter()
        .enumerate()
        .map(|(f, &fraction)| {
            let chunk = &runs[f * params.repeats..(f + 1) * params.repeats];
            let micro: Vec<f64> = chunk.iter().map(|r| r.micro_f1).collect();
            let macro_f1: Vec<f64> = chunk.iter().map(|r| r.macro_f1).collect();
            let (micro_mean, micro_variance) = mean_variance(&micro);
            let (macro_mean, macro_variance) = mean_variance(&macro_f1);
            FractionSummary {
                fraction,
                micro_mean,
                micro_variance,
                macro_mean,
                macro_variance,
            }
        })
        .collect();
    Ok(EvalReport {
        variance: "population".to_string(),
        params: params.clone(),
        summary,
        runs,
    })
}

impl EvalReport {
    pub fn summary_at(&self, fraction: f64) -> Option<&FractionSummary> {
        self.summary.iter().find(|s| (s.fraction - fraction).abs() < 1e-9)
    }

    /// Aligned text table: one column per training fraction, mean rows for
    /// Micro-F1 and Macro-F1 each followed by a variance row.
    pub fn to_table(&self, method: &str) -> String {
        let width = method.len().max(8);
        let mut out = String::new();
        let _ = write!(out, "{:<9} {:<width$}", "metric", "method");
        for s in &self.summary {
            let _ = write!(out, " {:>8}", format!("{}%", (s.fraction * 100.0).round()));
        }
        out.push('\n');
        type Pick = fn(&FractionSummary) -> (f64, f64);
        let rows: [(&str, Pick); 2] = [
            ("Micro-F1", |s| (s.micro_mean, s.micro_variance)),
            ("Macro-F1", |s| (s.macro_mean, s.macro_variance)),
        ];
        for (name, pick) in rows {
            let _ = write!(out, "{name:<9} {method:<width$}");
            for s in &self.summary {
                let _ = write!(out, " {:>8.4}", pick(s).0);
            }
            out.push('\n');
            let _ = write!(out, "{:<9} {:<width$}", "", "variance");
            for s in &self.summary {
                let _ = write!(out, " {:>8.1e}", pick(s).1);
            }
            out.push('\n');
        }
        out
    }

    /// One JSON object per (fraction, repeat) run, one per line.
    pub fn write_runs<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for run in &self.runs {
            serde_json::to_writer(&mut out, run)?;
            writeln!(out)?;
        }
        Ok(())
    }
}
