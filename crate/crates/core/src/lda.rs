//! LDA by collapsed Gibbs sampling, fold-in inference and perplexity.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{BowDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::inference::{self, FoldInConfig, FrozenTopics, Theta};
use crate::rng::{self, Label, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub burn_in: usize,
    /// Post-burn-in sweeps.
    pub samples: usize,
    /// Every `thin`-th post-burn-in sweep (and the last one) enters the φ average.
    pub thin: usize,
    pub seed: u64,
    /// 1 is the exact sequential sampler. More partitions run approximate
    /// distributed sweeps whose count deltas are merged at sweep barriers.
    pub partitions: usize,
}

impl LdaConfig {
    /// Conventional settings for `topics` topics: α = 50/K, β = 0.01.
    pub fn with_topics(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics as f64,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Config("topic count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if self.samples == 0 || self.thin == 0 || self.partitions == 0 {
            return Err(Error::Config("samples, thin and partitions must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 50,
            alpha: 1.0,
            beta: 0.01,
            burn_in: 800,
            samples: 200,
            thin: 10,
            seed: 0,
            partitions: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `K x V` row-major topic-word distributions.
    pub phi: Vec<f64>,
    /// `K x V` row-major topic-word counts of the final sweep.
    pub nkw: Vec<u32>,
    pub nk: Vec<u64>,
    pub vocab_hash: String,
}

impl LdaModel {
    pub fn topic(&self, k: usize) -> &[f64] {
        &self.phi[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn frozen(&self) -> FrozenTopics<'_> {
        FrozenTopics {
            topics: self.topics,
            vocab_size: self.vocab_size,
            probs: &self.phi,
        }
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let found = vocab.checksum();
        if found != self.vocab_hash || vocab.len() != self.vocab_size {
            return Err(Error::VocabularyMismatch {
                expected: self.vocab_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lda-model\t1");
        let _ = writeln!(out, "topics\t{}", self.topics);
        let _ = writeln!(out, "vocab_size\t{}", self.vocab_size);
        let _ = writeln!(out, "alpha\t{}", self.alpha);
        let _ = writeln!(out, "beta\t{}", self.beta);
        let _ = writeln!(out, "vocab_hash\t{}", self.vocab_hash);
        out.push_str("phi\n");
        for k in 0..self.topics {
            write_row(&mut out, self.topic(k));
        }
        out.push_str("nkw\n");
        for row in self.nkw.chunks(self.vocab_size) {
            write_row(&mut out, row);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut r = BundleReader::new(path, &text);
        r.expect_header("lda-model", "1")?;
        let topics: usize = r.field("topics")?;
        let vocab_size: usize = r.field("vocab_size")?;
        let alpha: f64 = r.field("alpha")?;
        let beta: f64 = r.field("beta")?;
        let vocab_hash: String = r.field("vocab_hash")?;
        r.expect_line("phi")?;
        let phi = r.matrix::<f64>(topics, vocab_size)?;
        r.expect_line("nkw")?;
        let nkw = r.matrix::<u32>(topics, vocab_size)?;
        let nk = nkw
            .chunks(vocab_size)
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect();
        Ok(LdaModel {
            topics,
            vocab_size,
            alpha,
            beta,
            phi,
            nkw,
            nk,
            vocab_hash,
        })
    }
}

pub(crate) fn write_row<T: std::fmt::Display>(out: &mut String, row: &[T]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Line reader for the tab-separated model bundles.
pub(crate) struct BundleReader<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> BundleReader<'a> {
    pub(crate) fn new(path: &'a Path, text: &'a str) -> Self {
        BundleReader {
            path,
            lines: text.lines().enumerate(),
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::parse(self.path, 0, "unexpected end of file"))
    }

    pub(crate) fn expect_header(&mut self, kind: &str, version: &str) -> Result<()> {
        let (no, line) = self.next()?;
        if line != format!("{kind}\t{version}") {
            return Err(Error::parse(self.path, no, format!("expected {kind} version {version}")));
        }
        Ok(())
    }

    pub(crate) fn expect_line(&mut self, expected: &str) -> Result<()> {
        let (no, line) = self.next()?;
        if line != expected {
            return Err(Error::parse(self.path, no, format!("expected {expected:?}")));
        }
        Ok(())
    }

    pub(crate) fn raw_field(&mut self, name: &str) -> Result<(usize, Vec<&'a str>)> {
        let (no, line) = self.next()?;
        let mut cols = line.split('\t');
        if cols.next() != Some(name) {
            return Err(Error::parse(self.path, no, format!("expected field {name}")));
        }
        Ok((no, cols.collect()))
    }

    pub(crate) fn field<T: std::str::FromStr>(&mut self, name: &str) -> Result<T> {
        let (no, cols) = self.raw_field(name)?;
        cols.first()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::parse(self.path, no, format!("bad value for {name}")))
    }

    pub(crate) fn matrix<T: std::str::FromStr>(&mut self, rows: usize, cols: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = self.next()?;
            let before = out.len();
            for c in line.split('\t') {
                out.push(c.parse().map_err(|_| Error::parse(self.path, no, "bad number"))?);
            }
            if out.len() - before != cols {
                return Err(Error::parse(self.path, no, format!("expected {cols} columns")));
            }
        }
        Ok(out)
    }
}

/// Collapsed Gibbs full conditional for one token, from counts that already
/// exclude that token: p(k) ∝ (n_dk + α)(n_kw + β)/(n_k + Vβ), normalized.
pub fn gibbs_conditional(
    word_topic: &[i64],
    topic_totals: &[i64],
    doc_topic: &[i64],
    vocab_size: usize,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let k_count = word_topic.len();
    if topic_totals.len() != k_count || doc_topic.len() != k_count {
        return Err(Error::Consistency("count vectors differ in length".into()));
    }
    if word_topic.iter().any(|&c| c < 0) {
        return Err(Error::NegativeCount { what: "topic-word" });
    }
    if topic_totals.iter().any(|&c| c < 0) {
        return Err(Error::NegativeCount { what: "topic total" });
    }
    if doc_topic.iter().any(|&c| c < 0) {
        return Err(Error::NegativeCount { what: "document-topic" });
    }
    let vbeta = vocab_size as f64 * beta;
    let mut p: Vec<f64> = (0..k_count)
        .map(|k| {
            (doc_topic[k] as f64 + alpha) * (word_topic[k] as f64 + beta) / (topic_totals[k] as f64 + vbeta)
        })
        .collect();
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

struct DocState {
    words: Vec<u32>,
    z: Vec<u32>,
    ndk: Vec<u32>,
}

/// Mutable sampler state. `train_lda` drives it; it is public so callers can
/// step sweeps and inspect the count invariants.
pub struct GibbsState {
    cfg: LdaConfig,
    vocab_size: usize,
    vocab_hash: String,
    docs: Vec<DocState>,
    /// Word-major counts: `nwk[w * K + k]`.
    nwk: Vec<u32>,
    nk: Vec<u64>,
    sweeps_done: usize,
}

impl GibbsState {
    pub fn new(corpus: &[BowDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<Self> {
        cfg.validate()?;
        if corpus.is_empty() {
            return Err(Error::Config("cannot train on an empty corpus".into()));
        }
        let v = vocab.len();
        let k_count = cfg.topics;
        let mut order: Vec<&BowDocument> = corpus.iter().collect();
        order.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.doc_id.cmp(&b.doc_id)));
        let mut nwk = vec![0u32; v * k_count];
        let mut nk = vec![0u64; k_count];
        let mut docs = Vec::with_capacity(order.len());
        for d in order {
            if d.is_empty() {
                return Err(Error::EmptyDocument {
                    doc_id: d.doc_id.clone(),
                });
            }
            let words: Vec<u32> = d.tokens().map(|w| w as u32).collect();
            if let Some(&w) = words.iter().find(|&&w| w as usize >= v) {
                return Err(Error::IndexOutOfRange {
                    what: "word",
                    index: w as usize,
                    len: v,
                });
            }
            let mut stream = rng::stream(cfg.seed, &[Label::Str("lda-init"), Label::Str(&d.doc_id)]);
            let mut ndk = vec![0u32; k_count];
            let z: Vec<u32> = words
                .iter()
                .map(|&w| {
                    let k = rand::Rng::random_range(&mut stream, 0..k_count);
                    ndk[k] += 1;
                    nwk[w as usize * k_count + k] += 1;
                    nk[k] += 1;
                    k as u32
                })
                .collect();
            docs.push(DocState { words, z, ndk });
        }
        Ok(GibbsState {
            cfg: *cfg,
            vocab_size: v,
            vocab_hash: vocab.checksum(),
            docs,
            nwk,
            nk,
            sweeps_done: 0,
        })
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn total_tokens(&self) -> u64 {
        self.docs.iter().map(|d| d.words.len() as u64).sum()
    }

    /// One full sweep over every token.
    pub fn sweep(&mut self) {
        let sweep = self.sweeps_done as i64;
        if self.cfg.partitions == 1 {
            let mut stream = rng::stream(self.cfg.seed, &[Label::Str("lda-sweep"), Label::Int(sweep)]);
            let (cfg, v) = (self.cfg, self.vocab_size);
            for doc in &mut self.docs {
                resample_doc(doc, &mut self.nwk, &mut self.nk, &cfg, v, &mut stream);
            }
        } else {
            self.parallel_sweep(sweep);
        }
        self.sweeps_done += 1;
    }

    fn parallel_sweep(&mut self, sweep: i64) {
        let (cfg, v) = (self.cfg, self.vocab_size);
        let chunk = self.docs.len().div_ceil(cfg.partitions);
        let (nwk, nk) = (&self.nwk, &self.nk);
        let deltas: Vec<(Vec<i64>, Vec<i64>)> = self
            .docs
            .par_chunks_mut(chunk)
            .enumerate()
            .map(|(part, docs)| {
                let mut local_nwk = nwk.clone();
                let mut local_nk = nk.clone();
                let mut stream = rng::stream(
                    cfg.seed,
                    &[Label::Str("lda-sweep"), Label::Int(sweep), Label::Int(part as i64)],
                );
                for doc in docs.iter_mut() {
                    resample_doc(doc, &mut local_nwk, &mut local_nk, &cfg, v, &mut stream);
                }
                let dw = local_nwk.iter().zip(nwk).map(|(&a, &b)| a as i64 - b as i64).collect();
                let dk = local_nk.iter().zip(nk).map(|(&a, &b)| a as i64 - b as i64).collect();
                (dw, dk)
            })
            .collect();
        for (dw, dk) in deltas {
            for (c, d) in self.nwk.iter_mut().zip(dw) {
                *c = (*c as i64 + d) as u32;
            }
            for (c, d) in self.nk.iter_mut().zip(dk) {
                *c = (*c as i64 + d) as u64;
            }
        }
    }

    /// Smoothed topic-word estimate from the current counts.
    pub fn current_phi(&self) -> Vec<f64> {
        let (k_count, v) = (self.cfg.topics, self.vocab_size);
        let vbeta = v as f64 * self.cfg.beta;
        let mut phi = vec![0.0; k_count * v];
        for k in 0..k_count {
            let denom = self.nk[k] as f64 + vbeta;
            for w in 0..v {
                phi[k * v + w] = (self.nwk[w * k_count + k] as f64 + self.cfg.beta) / denom;
            }
        }
        phi
    }

    /// Checks Σ_v n_kv = n_k, Σ_k n_k = total tokens and Σ_k n_dk = N_d.
    pub fn check_invariants(&self) -> Result<()> {
        let k_count = self.cfg.topics;
        for k in 0..k_count {
            let row: u64 = (0..self.vocab_size).map(|w| self.nwk[w * k_count + k] as u64).sum();
            if row != self.nk[k] {
                return Err(Error::Consistency(format!("topic {k}: row sum {row} != n_k {}", self.nk[k])));
            }
        }
        if self.nk.iter().sum::<u64>() != self.total_tokens() {
            return Err(Error::Consistency("topic totals do not add up to the token count".into()));
        }
        for d in &self.docs {
            if d.ndk.iter().map(|&c| c as usize).sum::<usize>() != d.words.len() {
                return Err(Error::Consistency("document-topic counts do not add up".into()));
            }
        }
        Ok(())
    }

    pub fn model_from_phi(&self, phi: Vec<f64>) -> LdaModel {
        let (k_count, v) = (self.cfg.topics, self.vocab_size);
        let mut nkw = vec![0u32; k_count * v];
        for k in 0..k_count {
            for w in 0..v {
                nkw[k * v + w] = self.nwk[w * k_count + k];
            }
        }
        LdaModel {
            topics: k_count,
            vocab_size: v,
            alpha: self.cfg.alpha,
            beta: self.cfg.beta,
            phi,
            nkw,
            nk: self.nk.clone(),
            vocab_hash: self.vocab_hash.clone(),
        }
    }
}

fn resample_doc(
    doc: &mut DocState,
    nwk: &mut [u32],
    nk: &mut [u64],
    cfg: &LdaConfig,
    vocab_size: usize,
    stream: &mut Stream,
) {
    let k_count = cfg.topics;
    let vbeta = vocab_size as f64 * cfg.beta;
    let mut p = vec![0.0; k_count];
    for i in 0..doc.words.len() {
        let w = doc.words[i] as usize;
        let old = doc.z[i] as usize;
        doc.ndk[old] -= 1;
        nwk[w * k_count + old] -= 1;
        nk[old] -= 1;
        let row = &nwk[w * k_count..(w + 1) * k_count];
        let mut total = 0.0;
        for k in 0..k_count {
            p[k] = (doc.ndk[k] as f64 + cfg.alpha) * (row[k] as f64 + cfg.beta) / (nk[k] as f64 + vbeta);
            total += p[k];
        }
        let k = inference::draw(&p, total, stream);
        doc.z[i] = k as u32;
        doc.ndk[k] += 1;
        nwk[w * k_count + k] += 1;
        nk[k] += 1;
    }
}

/// Runs `burn_in + samples` sweeps and averages the smoothed topic-word
/// estimate over the thinned post-burn-in sweeps.
pub fn train_lda(corpus: &[BowDocument], vocab: &Vocabulary, cfg: &LdaConfig) -> Result<LdaModel> {
    let mut state = GibbsState::new(corpus, vocab, cfg)?;
    for _ in 0..cfg.burn_in {
        state.sweep();
    }
    let mut acc = vec![0.0; cfg.topics * vocab.len()];
    let mut snapshots = 0usize;
    for i in 0..cfg.samples {
        state.sweep();
        if (i + 1) % cfg.thin == 0 || i + 1 == cfg.samples {
            for (a, p) in acc.iter_mut().zip(state.current_phi()) {
                *a += p;
            }
            snapshots += 1;
        }
    }
    let phi = acc.into_iter().map(|a| a / snapshots as f64).collect();
    Ok(state.model_from_phi(phi))
}

/// Fold-in inference of one document against the model's topics.
pub fn infer_theta(model: &LdaModel, doc: &BowDocument, cfg: &FoldInConfig) -> Result<Theta> {
    inference::fold_in(model.frozen(), model.alpha, doc, cfg)
}

/// Infers every document in parallel after checking the vocabulary binding.
/// Output order follows input order.
pub fn infer_all(
    model: &LdaModel,
    vocab: &Vocabulary,
    docs: &[BowDocument],
    cfg: &FoldInConfig,
) -> Result<Vec<Theta>> {
    model.check_vocabulary(vocab)?;
    docs.par_iter().map(|d| infer_theta(model, d, cfg)).collect()
}

/// exp(−Σ_d Σ_w c_dw log Σ_k θ_dk φ_kw / Σ_d N_d).
pub fn perplexity(model: &LdaModel, docs: &[BowDocument], thetas: &[Theta]) -> Result<f64> {
    if docs.len() != thetas.len() {
        return Err(Error::Consistency("one theta per document is required".into()));
    }
    let mut loglik = 0.0;
    let mut tokens = 0usize;
    for (d, t) in docs.iter().zip(thetas) {
        for &(w, c) in &d.counts {
            let p: f64 = (0..model.topics).map(|k| t.weights[k] * model.phi[k * model.vocab_size + w]).sum();
            if p <= 0.0 {
                return Err(Error::ZeroProbability {
                    doc_id: d.doc_id.clone(),
                    word: w,
                });
            }
            loglik += c as f64 * p.ln();
        }
        tokens += d.len();
    }
    if tokens == 0 {
        return Err(Error::Config("perplexity needs at least one token".into()));
    }
    Ok((-loglik / tokens as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        let n = words.len();
        Vocabulary::from_parts(words.iter().map(|s| s.to_string()).collect(), vec![1; n], vec![1; n]).unwrap()
    }

    #[test]
    fn single_topic_conditional_is_certain() {
        let p = gibbs_conditional(&[3], &[10], &[2], 5, 0.1, 0.01).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn symmetric_zero_counts_split_evenly() {
        let p = gibbs_conditional(&[0, 0], &[0, 0], &[0, 0], 4, 0.5, 0.1).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn conditional_matches_hand_evaluation() {
        // (1.1 * 2.1 / 4.3) and (0.1 * 0.1 / 1.3), normalized.
        let p = gibbs_conditional(&[2, 0], &[4, 1], &[1, 0], 3, 0.1, 0.1).unwrap();
        let a = 1.1 * 2.1 / (4.0 + 0.3);
        let b = 0.1 * 0.1 / (1.0 + 0.3);
        assert!((p[0] - a / (a + b)).abs() < 1e-15);
        assert!((p[1] - b / (a + b)).abs() < 1e-15);
        assert!((p[0] - 0.985_883_125_410_374_3).abs() < 1e-12);
    }

    #[test]
    fn negative_count_is_fatal() {
        let err = gibbs_conditional(&[-1, 0], &[0, 0], &[0, 0], 2, 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::NegativeCount { .. }));
    }

    #[test]
    fn empty_document_rejected() {
        let v = vocab(&["a"]);
        let docs = vec![BowDocument::new("x", 1860, vec![])];
        assert!(matches!(
            train_lda(&docs, &v, &LdaConfig::with_topics(2)),
            Err(Error::EmptyDocument { .. })
        ));
    }

    #[test]
    fn single_topic_closed_form() {
        let v = vocab(&["a", "b", "c"]);
        let docs = vec![
            BowDocument::new("1", 1860, vec![(0, 3), (1, 1)]),
            BowDocument::new("2", 1861, vec![(1, 2)]),
        ];
        let cfg = LdaConfig {
            topics: 1,
            alpha: 0.5,
            beta: 0.1,
            burn_in: 3,
            samples: 5,
            thin: 2,
            seed: 1,
            partitions: 1,
        };
        let m = train_lda(&docs, &v, &cfg).unwrap();
        let expected = [3.1 / 6.3, 3.1 / 6.3, 0.1 / 6.3];
        for (p, e) in m.phi.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn invariants_hold_each_sweep_in_both_modes() {
        let v = vocab(&["a", "b", "c", "d"]);
        let docs: Vec<_> = (0..12)
            .map(|i| BowDocument::new(format!("d{i}"), 1860, vec![(i % 4, 3), ((i + 1) % 4, 2)]))
            .collect();
        for partitions in [1, 3] {
            let cfg = LdaConfig {
                topics: 3,
                partitions,
                ..LdaConfig::with_topics(3)
            };
            let mut s = GibbsState::new(&docs, &v, &cfg).unwrap();
            for _ in 0..20 {
                s.sweep();
                s.check_invariants().unwrap();
            }
        }
    }

    #[test]
    fn model_bundle_round_trip() {
        let v = vocab(&["a", "b"]);
        let docs = vec![BowDocument::new("1", 1860, vec![(0, 3), (1, 1)])];
        let cfg = LdaConfig {
            burn_in: 2,
            samples: 2,
            ..LdaConfig::with_topics(2)
        };
        let m = train_lda(&docs, &v, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        m.save(&p).unwrap();
        assert_eq!(LdaModel::load(&p).unwrap(), m);
    }

    #[test]
    fn uniform_model_perplexity_is_vocab_size() {
        let m = LdaModel {
            topics: 2,
            vocab_size: 4,
            alpha: 1.0,
            beta: 0.1,
            phi: vec![0.25; 8],
            nkw: vec![0; 8],
            nk: vec![0; 2],
            vocab_hash: String::new(),
        };
        let docs = vec![BowDocument::new("1", 1860, vec![(0, 3), (2, 5)])];
        let thetas = vec![Theta {
            doc_id: "1".into(),
            year: 1860,
            weights: vec![0.5, 0.5],
            uninformed: false,
        }];
        assert!((perplexity(&m, &docs, &thetas).unwrap() - 4.0).abs() < 1e-12);
    }
}
