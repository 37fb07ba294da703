//! Skip-gram node embeddings trained on walk corpora.
//!
//! For a center node `u` and a context node `c` within `window` positions of
//! it in some walk, the model maximizes
//!
//! ```text
//! log Pr(c | u) = ctx(c) . f(u) - log sum_v exp(ctx(v) . f(u))
//! ```
//!
//! either exactly (`ExactSoftmax`, O(|V| d) per pair) or through the usual
//! negative-sampling surrogate with noise drawn from walk frequencies raised
//! to 0.75. Input vectors `f` and context vectors `ctx` are separate tables
//! unless `tied` is set, in which case `ctx = f`.
//!
//! With `threads == 1` training is deterministic for a given seed. Otherwise
//! workers update the shared tables without locks; individual `f64`s are
//! stored as atomics so races lose updates but never tear values.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{derive_seed, seeded, stream_rng, tag_of, WalkRng};
use crate::walker::WalkSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    ExactSoftmax,
    #[default]
    NegativeSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub mode: Objective,
    pub negatives: usize,
    pub seed: u64,
    /// 1 is deterministic; 0 uses every available core.
    pub threads: usize,
    pub tied: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 10,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            mode: Objective::NegativeSampling,
            negatives: 5,
            seed: 0,
            threads: 1,
            tied: false,
        }
    }
}

impl TrainConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push("dim must be >= 1".to_string());
        }
        if self.window == 0 {
            out.push("window must be >= 1".to_string());
        }
        if self.epochs == 0 {
            out.push("epochs must be >= 1".to_string());
        }
        if !(self.lr_start > 0.0 && self.lr_start.is_finite()) {
            out.push("lr_start must be positive".to_string());
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start) {
            out.push("lr_end must be positive and <= lr_start".to_string());
        }
        if self.mode == Objective::NegativeSampling && self.negatives == 0 {
            out.push("negatives must be >= 1 for negative sampling".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// Row-major `|V| x d` input vectors, plus context vectors unless tied.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    vectors: Vec<f64>,
    context: Option<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn zeros(node_count: usize, dim: usize, tied: bool) -> Self {
        let len = node_count * dim;
        Self {
            dim,
            vectors: vec![0.0; len],
            context: (!tied).then(|| vec![0.0; len]),
        }
    }

    /// Tied matrix over the given row-major input vectors.
    pub fn from_vectors(dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of dimension {dim}",
                vectors.len()
            )));
        }
        Ok(Self {
            dim,
            vectors,
            context: None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.vectors.len() / self.dim.max(1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_tied(&self) -> bool {
        self.context.is_none()
    }

    pub fn vector(&self, v: NodeId) -> &[f64] {
        let i = v as usize * self.dim;
        &self.vectors[i..i + self.dim]
    }

    pub fn vector_mut(&mut self, v: NodeId) -> &mut [f64] {
        let i = v as usize * self.dim;
        &mut self.vectors[i..i + self.dim]
    }

    pub fn context_vector(&self, v: NodeId) -> &[f64] {
        let i = v as usize * self.dim;
        &self.context.as_ref().unwrap_or(&self.vectors)[i..i + self.dim]
    }

    pub fn context_vector_mut(&mut self, v: NodeId) -> &mut [f64] {
        let i = v as usize * self.dim;
        let table = match &mut self.context {
            Some(c) => c,
            None => &mut self.vectors,
        };
        &mut table[i..i + self.dim]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn context_vectors(&self) -> &[f64] {
        self.context.as_ref().unwrap_or(&self.vectors)
    }

    /// `ctx(v) . f(u)`.
    pub fn score(&self, u: NodeId, v: NodeId) -> f64 {
        dot(self.vector(u), self.context_vector(v))
    }

    /// `log sum_v exp(ctx(v) . f(u))`, max-shifted.
    pub fn log_partition(&self, u: NodeId) -> f64 {
        let scores: Vec<f64> = (0..self.node_count() as NodeId).map(|v| self.score(u, v)).collect();
        log_sum_exp(&scores)
    }

    /// Full softmax row `Pr(. | u)`.
    pub fn softmax_row(&self, u: NodeId) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.node_count() as NodeId).map(|v| self.score(u, v)).collect();
        let lse = log_sum_exp(&scores);
        scores.into_iter().map(|s| (s - lse).exp()).collect()
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                id: v as usize,
                node_count: self.node_count(),
            })
        }
    }

    /// Writes `N d` followed by `label v1 .. vd` per node. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write<W: Write>(&self, labels: &[String], out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.node_count(), self.dim)?;
        for v in 0..self.node_count() {
            match labels.get(v) {
                Some(l) => write!(out, "{l}")?,
                None => write!(out, "{v}")?,
            }
            for x in self.vector(v as NodeId) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    pub fn save(&self, graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(graph.labels(), file).map_err(|e| Error::io(path, e))
    }

    /// Parses the embedding text format into external ids and a tied matrix
    /// in file order.
    pub fn read<R: BufRead>(reader: R, origin: &str) -> Result<(Vec<String>, EmbeddingMatrix)> {
        let mut lines = reader.lines().enumerate();
        let (n, dim) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::parse(origin, 1, "missing header"));
            };
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [n, d] => n.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((n, d)) if d > 0 => break (n, d),
                _ => return Err(Error::parse(origin, i + 1, "header must be \"N d\" with d >= 1")),
            }
        };
        let mut ids = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let mut fields = line.split_whitespace();
            let Some(id) = fields.next() else { continue };
            let start = vectors.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(origin, i + 1, format!("bad value {f:?}")))?;
                if !x.is_finite() {
                    return Err(Error::parse(origin, i + 1, "non-finite value"));
                }
                vectors.push(x);
            }
            if vectors.len() - start != dim {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected {dim} values, found {}", vectors.len() - start),
                ));
            }
            ids.push(id.to_string());
        }
        if ids.len() != n {
            return Err(Error::parse(
                origin,
                1,
                format!("header announces {n} rows, found {}", ids.len()),
            ));
        }
        Ok((ids, EmbeddingMatrix::from_vectors(dim, vectors)?))
    }

    /// Loads an embedding file and reorders its rows to `graph`'s dense ids.
    /// Every graph node must appear exactly once.
    pub fn load(path: impl AsRef<Path>, graph: &Graph) -> Result<EmbeddingMatrix> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let (ids, emb) = Self::read(BufReader::new(file), &path.display().to_string())?;
        emb.aligned_to(&ids, graph)
    }

    fn aligned_to(&self, ids: &[String], graph: &Graph) -> Result<EmbeddingMatrix> {
        let d = self.dim;
        let mut out = vec![f64::NAN; graph.node_count() * d];
        let mut seen = vec![false; graph.node_count()];
        for (row, id) in ids.iter().enumerate() {
            let v = graph.require_id(id)? as usize;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("node {id} appears twice in embeddings")));
            }
            out[v * d..(v + 1) * d].copy_from_slice(&self.vectors[row * d..(row + 1) * d]);
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "node {} has no embedding",
                graph.label(v as NodeId)
            )));
        }
        EmbeddingMatrix::from_vectors(d, out)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `(walk[i], walk[j])` for every `j != i` with `|i - j| <= r`.
pub fn context_pairs(walk: &[NodeId], r: usize) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    push_context_pairs(walk, r, &mut out);
    out
}

fn push_context_pairs(walk: &[NodeId], r: usize, out: &mut Vec<(NodeId, NodeId)>) {
    for (i, &u) in walk.iter().enumerate() {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(walk.len().saturating_sub(1));
        for (j, &c) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                out.push((u, c));
            }
        }
    }
}

fn context_pair_count(len: usize, r: usize) -> u64 {
    (0..len)
        .map(|i| ((i + r).min(len.saturating_sub(1)) - i.saturating_sub(r)) as u64)
        .sum()
}

/// `Pr(n | u)` under the exact softmax.
pub fn softmax_prob(emb: &EmbeddingMatrix, n: NodeId, u: NodeId) -> Result<f64> {
    emb.check(n)?;
    emb.check(u)?;
    Ok((emb.score(u, n) - emb.log_partition(u)).exp())
}

/// `sum log Pr(context | center)` over `pairs` under the exact softmax.
pub fn neighborhood_log_likelihood(emb: &EmbeddingMatrix, pairs: &[(NodeId, NodeId)]) -> Result<f64> {
    let mut partition = vec![None; emb.node_count()];
    let mut total = 0.0;
    for &(u, c) in pairs {
        emb.check(u)?;
        emb.check(c)?;
        let lse = *partition[u as usize].get_or_insert_with(|| emb.log_partition(u));
        total += emb.score(u, c) - lse;
    }
    Ok(total)
}

/// Analytic gradient of [`neighborhood_log_likelihood`], in the layout of
/// `emb` (tied matrices get one combined table).
pub fn log_likelihood_gradient(emb: &EmbeddingMatrix, pairs: &[(NodeId, NodeId)]) -> Result<EmbeddingMatrix> {
    let n = emb.node_count();
    let d = emb.dim();
    let mut g_in = vec![0.0; n * d];
    let mut g_ctx = vec![0.0; n * d];
    for &(u, c) in pairs {
        emb.check(u)?;
        emb.check(c)?;
        let p = emb.softmax_row(u);
        let fu = emb.vector(u);
        let gu = &mut g_in[u as usize * d..(u as usize + 1) * d];
        for (v, &pv) in p.iter().enumerate() {
            let coeff = if v == c as usize { 1.0 - pv } else { -pv };
            let cv = emb.context_vector(v as NodeId);
            for j in 0..d {
                gu[j] += coeff * cv[j];
                g_ctx[v * d + j] += coeff * fu[j];
            }
        }
    }
    if emb.is_tied() {
        for (a, b) in g_in.iter_mut().zip(&g_ctx) {
            *a += b;
        }
        EmbeddingMatrix::from_vectors(d, g_in)
    } else {
        Ok(EmbeddingMatrix {
            dim: d,
            vectors: g_in,
            context: Some(g_ctx),
        })
    }
}

fn load(x: &AtomicU64) -> f64 {
    f64::from_bits(x.load(Ordering::Relaxed))
}

fn store(x: &AtomicU64, v: f64) {
    x.store(v.to_bits(), Ordering::Relaxed);
}

fn atomic_table(values: Vec<f64>) -> Vec<AtomicU64> {
    values.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

struct Scratch {
    pairs: Vec<(NodeId, NodeId)>,
    fu: Vec<f64>,
    acc: Vec<f64>,
    scores: Vec<f64>,
}

impl Scratch {
    fn new(n: usize, d: usize) -> Self {
        Self {
            pairs: Vec::new(),
            fu: vec![0.0; d],
            acc: vec![0.0; d],
            scores: vec![0.0; n],
        }
    }
}

/// Epoch-at-a-time SGD over a fixed walk corpus.
pub struct Trainer<'w> {
    walks: &'w WalkSet,
    cfg: TrainConfig,
    n: usize,
    input: Vec<AtomicU64>,
    context: Option<Vec<AtomicU64>>,
    noise: Option<AliasTable>,
    epoch: usize,
    total_pairs: u64,
    done: AtomicU64,
}

impl<'w> Trainer<'w> {
    pub fn new(walks: &'w WalkSet, node_count: usize, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if walks.is_empty() || walks.total_steps() == 0 {
            return Err(Error::EmptyWalkSet);
        }
        let mut freq = vec![0u64; node_count];
        for &v in walks.walks.iter().flatten() {
            *freq.get_mut(v as usize).ok_or(Error::InvalidNode {
                id: v as usize,
                node_count,
            })? += 1;
        }
        let d = cfg.dim;
        let bound = 0.5 / d as f64;
        let mut rng = seeded(derive_seed(cfg.seed, tag_of("embedding-init")));
        let init: Vec<f64> = (0..node_count * d).map(|_| rng.random_range(-bound..=bound)).collect();
        let noise = match cfg.mode {
            Objective::NegativeSampling => {
                let masses: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(0.75)).collect();
                Some(AliasTable::new(&masses).ok_or(Error::EmptyDistribution(0))?)
            }
            Objective::ExactSoftmax => None,
        };
        let per_epoch: u64 = walks
            .walks
            .iter()
            .map(|w| context_pair_count(w.len(), cfg.window))
            .sum();
        Ok(Self {
            walks,
            cfg,
            n: node_count,
            input: atomic_table(init),
            context: (!cfg.tied).then(|| atomic_table(vec![0.0; node_count * d])),
            noise,
            epoch: 0,
            total_pairs: per_epoch * cfg.epochs as u64,
            done: AtomicU64::new(0),
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    fn ctx(&self) -> &[AtomicU64] {
        self.context.as_deref().unwrap_or(&self.input)
    }

    fn lr(&self, done: u64) -> f64 {
        let progress = (done as f64 / self.total_pairs.max(1) as f64).min(1.0);
        (self.cfg.lr_start - (self.cfg.lr_start - self.cfg.lr_end) * progress).max(self.cfg.lr_end)
    }

    /// Runs one pass over the corpus.
    pub fn run_epoch(&mut self) {
        let epoch = self.epoch as u64;
        let mut order: Vec<usize> = (0..self.walks.len()).collect();
        order.shuffle(&mut stream_rng(derive_seed(self.cfg.seed, tag_of("walk-order")), epoch));
        let pair_seed = derive_seed(self.cfg.seed, tag_of("pairs"));
        let stream_base = epoch * self.walks.len() as u64;
        let run = |scratch: &mut Scratch, w: usize| {
            let mut rng = stream_rng(pair_seed, stream_base + w as u64);
            self.train_walk(&self.walks.walks[w], &mut rng, scratch);
        };
        if self.cfg.threads == 1 {
            let mut scratch = Scratch::new(self.n, self.cfg.dim);
            for &w in &order {
                run(&mut scratch, w);
            }
        } else {
            let job = || {
                order
                    .par_iter()
                    .for_each_init(|| Scratch::new(self.n, self.cfg.dim), |s, &w| run(s, w))
            };
            match rayon::ThreadPoolBuilder::new().num_threads(self.cfg.threads).build() {
                Ok(pool) if self.cfg.threads > 1 => pool.install(job),
                _ => job(),
            }
        }
        self.epoch += 1;
    }

    fn train_walk(&self, walk: &[NodeId], rng: &mut WalkRng, s: &mut Scratch) {
        let mut pairs = std::mem::take(&mut s.pairs);
        pairs.clear();
        push_context_pairs(walk, self.cfg.window, &mut pairs);
        pairs.shuffle(rng);
        let start = self.done.fetch_add(pairs.len() as u64, Ordering::Relaxed);
        for (k, &(u, c)) in pairs.iter().enumerate() {
            let lr = self.lr(start + k as u64);
            match self.cfg.mode {
                Objective::NegativeSampling => self.negative_sampling_step(u, c, lr, rng, s),
                Objective::ExactSoftmax => self.softmax_step(u, c, lr, s),
            }
        }
        s.pairs = pairs;
    }

    fn negative_sampling_step(&self, u: NodeId, c: NodeId, lr: f64, rng: &mut WalkRng, s: &mut Scratch) {
        let d = self.cfg.dim;
        let (input, ctx) = (&self.input, self.ctx());
        let row_u = &input[u as usize * d..(u as usize + 1) * d];
        for (f, x) in s.fu.iter_mut().zip(row_u) {
            *f = load(x);
        }
        s.acc.fill(0.0);
        let noise = self
            .noise
            .as_ref()
            .expect("noise table present in negative-sampling mode");
        for k in 0..=self.cfg.negatives {
            let (t, label) = if k == 0 {
                (c, 1.0)
            } else {
                let t = noise.sample(rng) as NodeId;
                if t == c {
                    continue;
                }
                (t, 0.0)
            };
            let row_t = &ctx[t as usize * d..(t as usize + 1) * d];
            let score: f64 = row_t.iter().zip(&s.fu).map(|(x, f)| load(x) * f).sum();
            let g = lr * (label - sigmoid(score));
            for ((x, f), a) in row_t.iter().zip(&s.fu).zip(s.acc.iter_mut()) {
                let cv = load(x);
                *a += g * cv;
                store(x, cv + g * f);
            }
        }
        for (x, a) in row_u.iter().zip(&s.acc) {
            store(x, load(x) + a);
        }
    }

    fn softmax_step(&self, u: NodeId, c: NodeId, lr: f64, s: &mut Scratch) {
        let d = self.cfg.dim;
        let (input, ctx) = (&self.input, self.ctx());
        let row_u = &input[u as usize * d..(u as usize + 1) * d];
        for (f, x) in s.fu.iter_mut().zip(row_u) {
            *f = load(x);
        }
        for (v, score) in s.scores.iter_mut().enumerate() {
            *score = ctx[v * d..(v + 1) * d]
                .iter()
                .zip(&s.fu)
                .map(|(x, f)| load(x) * f)
                .sum();
        }
        let lse = log_sum_exp(&s.scores);
        // gradient wrt f(u) uses the context table before this step's update
        s.acc.fill(0.0);
        for v in 0..self.n {
            let coeff = if v == c as usize { 1.0 } else { 0.0 } - (s.scores[v] - lse).exp();
            s.scores[v] = coeff;
            for (a, x) in s.acc.iter_mut().zip(&ctx[v * d..(v + 1) * d]) {
                *a += coeff * load(x);
            }
        }
        for v in 0..self.n {
            let coeff = lr * s.scores[v];
            for (x, f) in ctx[v * d..(v + 1) * d].iter().zip(&s.fu) {
                store(x, load(x) + coeff * f);
            }
        }
        for (x, a) in row_u.iter().zip(&s.acc) {
            store(x, load(x) + lr * a);
        }
    }

    /// Current parameters.
    pub fn snapshot(&self) -> EmbeddingMatrix {
        let unpack = |t: &[AtomicU64]| t.iter().map(load).collect::<Vec<f64>>();
        EmbeddingMatrix {
            dim: self.cfg.dim,
            vectors: unpack(&self.input),
            context: self.context.as_deref().map(unpack),
        }
    }

    /// Runs the remaining epochs and returns the trained matrix.
    pub fn finish(mut self) -> EmbeddingMatrix {
        while self.epoch < self.cfg.epochs {
            self.run_epoch();
        }
        self.snapshot()
    }
}

/// Trains embeddings for nodes `0..node_count` from `walks`.
pub fn train(walks: &WalkSet, node_count: usize, cfg: &TrainConfig) -> Result<EmbeddingMatrix> {
    Ok(Trainer::new(walks, node_count, *cfg)?.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::walker::{WalkParams, Walker};
    use proptest::prelude::*;
    use rand::Rng;

    fn corpus(walks: Vec<Vec<NodeId>>) -> WalkSet {
        WalkSet {
            walks,
            ..WalkSet::default()
        }
    }

    fn random_matrix(n: usize, d: usize, tied: bool, seed: u64) -> EmbeddingMatrix {
        let mut rng = seeded(seed);
        let mut m = EmbeddingMatrix::zeros(n, d, tied);
        for v in 0..n as NodeId {
            for x in m.vector_mut(v) {
                *x = rng.random_range(-1.0..1.0);
            }
            if !tied {
                for x in m.context_vector_mut(v) {
                    *x = rng.random_range(-1.0..1.0);
                }
            }
        }
        m
    }

    #[test]
    fn context_pair_enumeration() {
        assert_eq!(context_pairs(&[0, 1, 2], 1), vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert!(context_pairs(&[5], 3).is_empty());
        let walk: Vec<NodeId> = (0..80).collect();
        let pairs = context_pairs(&walk, 10);
        assert_eq!(pairs.iter().filter(|p| p.0 == 40).count(), 20);
        assert_eq!(pairs.len() as u64, context_pair_count(80, 10));
    }

    #[test]
    fn softmax_examples() {
        let zero = EmbeddingMatrix::zeros(5, 3, false);
        assert!((softmax_prob(&zero, 2, 4).unwrap() - 0.2).abs() < 1e-15);
        let m = EmbeddingMatrix::from_vectors(1, vec![1.0, 2.0]).unwrap();
        let p = softmax_prob(&m, 1, 0).unwrap();
        let e = std::f64::consts::E;
        assert!((p - e * e / (e * e + e)).abs() < 1e-12);
        assert!((p - 0.7311).abs() < 1e-4);
        assert!(softmax_prob(&m, 2, 0).is_err());
        let big = EmbeddingMatrix::from_vectors(1, vec![1e3, 2e3]).unwrap();
        assert!(softmax_prob(&big, 1, 1).unwrap().is_finite());
    }

    #[test]
    fn likelihood_examples() {
        let zero = EmbeddingMatrix::zeros(4, 2, false);
        assert_eq!(neighborhood_log_likelihood(&zero, &[]).unwrap(), 0.0);
        let pairs = [(0, 1), (1, 2), (3, 0)];
        let ll = neighborhood_log_likelihood(&zero, &pairs).unwrap();
        assert!((ll - 3.0 * (0.25f64).ln()).abs() < 1e-12);
    }

    fn check_gradient(tied: bool) {
        let emb = random_matrix(10, 4, tied, 3);
        let walk: Vec<NodeId> = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 3, 1];
        let pairs = context_pairs(&walk, 2);
        let grad = log_likelihood_gradient(&emb, &pairs).unwrap();
        let h = 1e-5;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        let tables = if tied { 1 } else { 2 };
        for t in 0..tables {
            for i in 0..emb.vectors().len() {
                let (v, j) = ((i / 4) as NodeId, i % 4);
                let bump = |delta: f64| {
                    let mut e = emb.clone();
                    if t == 0 {
                        e.vector_mut(v)[j] += delta;
                    } else {
                        e.context_vector_mut(v)[j] += delta;
                    }
                    neighborhood_log_likelihood(&e, &pairs).unwrap()
                };
                numeric.push((bump(h) - bump(-h)) / (2.0 * h));
                analytic.push(if t == 0 {
                    grad.vector(v)[j]
                } else {
                    grad.context_vector(v)[j]
                });
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-4, "relative error {}", diff / norm);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        check_gradient(false);
        check_gradient(true);
    }

    fn toy_config(mode: Objective) -> TrainConfig {
        TrainConfig {
            dim: 4,
            window: 2,
            epochs: 1,
            lr_start: 0.05,
            lr_end: 0.05,
            mode,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_epoch_increases_likelihood() {
        let walks = corpus(vec![vec![0, 1, 0, 1, 2, 3, 2, 3], vec![3, 2, 3, 2, 1, 0, 1, 0]]);
        let pairs: Vec<_> = walks.walks.iter().flat_map(|w| context_pairs(w, 2)).collect();
        let mut t = Trainer::new(&walks, 4, toy_config(Objective::ExactSoftmax)).unwrap();
        let before = neighborhood_log_likelihood(&t.snapshot(), &pairs).unwrap();
        t.run_epoch();
        let after = neighborhood_log_likelihood(&t.snapshot(), &pairs).unwrap();
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn objective_non_decreasing_with_small_rate() {
        let g = synth::ring(8);
        let walks = Walker::new(
            &g,
            WalkParams {
                walk_length: 12,
                walks_per_node: 2,
                ..WalkParams::default()
            },
        )
        .unwrap()
        .walk_set();
        let pairs: Vec<_> = walks.walks.iter().flat_map(|w| context_pairs(w, 2)).collect();
        let cfg = TrainConfig {
            lr_start: 0.002,
            lr_end: 0.002,
            epochs: 15,
            ..toy_config(Objective::ExactSoftmax)
        };
        let mut t = Trainer::new(&walks, 8, cfg).unwrap();
        let mut last = neighborhood_log_likelihood(&t.snapshot(), &pairs).unwrap();
        for _ in 0..15 {
            t.run_epoch();
            let now = neighborhood_log_likelihood(&t.snapshot(), &pairs).unwrap();
            assert!(now - last >= -1e-6, "{last} -> {now}");
            last = now;
        }
    }

    #[test]
    fn serial_training_is_deterministic() {
        let g = synth::barabasi_albert(60, 2, 3);
        let walks = Walker::new(
            &g,
            WalkParams {
                walk_length: 20,
                walks_per_node: 2,
                ..WalkParams::default()
            },
        )
        .unwrap()
        .walk_set();
        let cfg = TrainConfig {
            dim: 8,
            epochs: 2,
            ..TrainConfig::default()
        };
        let a = train(&walks, 60, &cfg).unwrap();
        let b = train(&walks, 60, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&walks, 60, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
        let bound = 0.5 / 8.0;
        let fresh = Trainer::new(&walks, 60, cfg).unwrap().snapshot();
        assert!(fresh.vectors().iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn parallel_training_stays_finite() {
        let g = synth::barabasi_albert(200, 3, 3);
        let walks = Walker::new(
            &g,
            WalkParams {
                walk_length: 20,
                walks_per_node: 2,
                ..WalkParams::default()
            },
        )
        .unwrap()
        .walk_set();
        let cfg = TrainConfig {
            dim: 16,
            epochs: 2,
            threads: 4,
            ..TrainConfig::default()
        };
        let emb = train(&walks, 200, &cfg).unwrap();
        assert_eq!(emb.node_count(), 200);
        assert!(emb.vectors().iter().all(|x| x.is_finite()));
    }

    fn clique_separation(mode: Objective) -> (f64, f64) {
        let (g, labels) = synth::disjoint_cliques(2, 6);
        let walks = Walker::new(
            &g,
            WalkParams {
                walk_length: 20,
                walks_per_node: 10,
                ..WalkParams::default()
            },
        )
        .unwrap()
        .walk_set();
        let cfg = TrainConfig {
            dim: 2,
            window: 3,
            epochs: 5,
            mode,
            ..TrainConfig::default()
        };
        let emb = train(&walks, 12, &cfg).unwrap();
        let (mut intra, mut inter, mut ni, mut nx) = (0.0, 0.0, 0, 0);
        for u in 0..12 {
            for v in u + 1..12 {
                let c = cosine(emb.vector(u), emb.vector(v));
                if labels.get(u) == labels.get(v) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        (intra / ni as f64, inter / nx as f64)
    }

    #[test]
    fn cliques_separate() {
        for mode in [Objective::NegativeSampling, Objective::ExactSoftmax] {
            let (intra, inter) = clique_separation(mode);
            assert!(intra > inter, "{mode:?}: {intra} vs {inter}");
        }
    }

    #[test]
    fn errors() {
        let empty = WalkSet::default();
        assert!(matches!(
            train(&empty, 3, &TrainConfig::default()),
            Err(Error::EmptyWalkSet)
        ));
        let walks = corpus(vec![vec![0, 1]]);
        let zero_dim = TrainConfig {
            dim: 0,
            ..TrainConfig::default()
        };
        assert!(train(&walks, 2, &zero_dim).is_err());
        assert!(train(&walks, 1, &TrainConfig::default()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::from_pairs(2, false, &[(0, 1)]);
        let m = EmbeddingMatrix::from_vectors(2, vec![0.1, -1.0 / 3.0, 1e-300, 12345.678]).unwrap();
        let mut buf = Vec::new();
        m.write(g.labels(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next(), Some("2 2"));
        let (ids, back) = EmbeddingMatrix::read(&buf[..], "mem").unwrap();
        assert_eq!(ids, vec!["0", "1"]);
        assert_eq!(back.vectors(), m.vectors());
        let swapped = "2 1\n1 5\n0 4\n";
        let (ids, back) = EmbeddingMatrix::read(swapped.as_bytes(), "mem").unwrap();
        let aligned = back.aligned_to(&ids, &g).unwrap();
        assert_eq!(aligned.vectors(), &[4.0, 5.0]);
        assert!(EmbeddingMatrix::read("2 2\n0 1 2\n".as_bytes(), "mem").is_err());
        assert!(EmbeddingMatrix::read("1 2\n0 1\n".as_bytes(), "mem").is_err());
    }

    proptest! {
        #[test]
        fn softmax_rows_normalized(seed in 0u64..1000, n in 2usize..12, d in 1usize..6, tied: bool) {
            let emb = random_matrix(n, d, tied, seed);
            for u in 0..n as NodeId {
                let s: f64 = emb.softmax_row(u).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
