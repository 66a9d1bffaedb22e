//! Dynamic topic model: per-slice topics whose natural parameters follow a
//! Gaussian random walk with variance σ² (the chain variance), fitted by
//! variational EM with Kalman smoothing of each topic-word chain.

mod chain;
mod fit;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use chain::ChainPrior;
pub use fit::{train_dtm, train_dtm_from};

use crate::corpus::{slice_label, BowDocument, TimeSlicedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::inference::{self, FoldInConfig, FrozenTopics, Theta};
use crate::lda::{write_row, BundleReader, LdaConfig, LdaModel};
use crate::math;

/// Floor added to pooled-LDA probabilities before taking logs.
pub const INIT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtmConfig {
    pub topics: usize,
    /// Random-walk step variance σ² of the natural parameters.
    pub chain_variance: f64,
    /// Symmetric document-topic Dirichlet prior.
    pub alpha: f64,
    /// Outer variational EM iterations.
    pub iters: usize,
    pub seed: u64,
    /// Prior variance of the first slice's natural parameters.
    pub init_variance: f64,
    /// Pseudo-observation noise ν̂² of the variational chains.
    pub obs_variance: f64,
    pub estep_max_iters: usize,
    pub estep_tol: f64,
    /// Alternations between per-word Newton updates and the log-normalizer
    /// bound inside one M-step.
    pub mstep_rounds: usize,
    /// Pooled LDA run used for initialization.
    pub init_lda: LdaConfig,
}

impl DtmConfig {
    pub fn with_topics(topics: usize) -> Self {
        DtmConfig {
            topics,
            init_lda: LdaConfig {
                burn_in: 200,
                samples: 50,
                ..LdaConfig::with_topics(topics)
            },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Config("topic count must be at least 1".into()));
        }
        if self.chain_variance.is_nan() || self.chain_variance <= 0.0 {
            return Err(Error::Config("chain variance must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.init_variance > 0.0 && self.obs_variance > 0.0) {
            return Err(Error::Config("alpha and variances must be positive".into()));
        }
        if self.estep_max_iters == 0 || self.mstep_rounds == 0 {
            return Err(Error::Config("inner iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for DtmConfig {
    fn default() -> Self {
        DtmConfig {
            topics: 50,
            chain_variance: 0.005,
            alpha: 0.1,
            iters: 20,
            seed: 0,
            init_variance: 1e6,
            obs_variance: 0.5,
            estep_max_iters: 100,
            estep_tol: 1e-6,
            mstep_rounds: 5,
            init_lda: LdaConfig {
                burn_in: 200,
                samples: 50,
                ..LdaConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtmModel {
    pub topics: usize,
    pub vocab_size: usize,
    /// Inclusive year span of each slice.
    pub slices: Vec<(i32, i32)>,
    pub chain_variance: f64,
    pub alpha: f64,
    /// Natural parameters, `[(t * K + k) * V + w]`.
    pub beta_nat: Vec<f64>,
    pub vocab_hash: String,
    /// Variational objective after each outer iteration. Not persisted.
    pub elbo_trace: Vec<f64>,
}

impl DtmModel {
    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn slice_labels(&self) -> Vec<String> {
        self.slices.iter().map(|&(a, b)| slice_label(a, b)).collect()
    }

    pub fn slice_of_year(&self, year: i32) -> Option<usize> {
        self.slices.iter().position(|&(a, b)| a <= year && year <= b)
    }

    fn natural(&self, t: usize, k: usize) -> &[f64] {
        let start = (t * self.topics + k) * self.vocab_size;
        &self.beta_nat[start..start + self.vocab_size]
    }

    /// softmax(β_{t,k,·}).
    pub fn topic_at_slice(&self, k: usize, t: usize) -> Result<Vec<f64>> {
        if k >= self.topics {
            return Err(Error::IndexOutOfRange {
                what: "topic",
                index: k,
                len: self.topics,
            });
        }
        if t >= self.num_slices() {
            return Err(Error::IndexOutOfRange {
                what: "slice",
                index: t,
                len: self.num_slices(),
            });
        }
        Ok(math::softmax(self.natural(t, k)))
    }

    /// All topics of slice `t`, `K x V` row-major.
    pub fn slice_topics(&self, t: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.topics * self.vocab_size);
        for k in 0..self.topics {
            out.extend(self.topic_at_slice(k, t)?);
        }
        Ok(out)
    }

    /// Mean over slices of topic `k`.
    pub fn time_averaged_topic(&self, k: usize) -> Result<Vec<f64>> {
        let mut avg = vec![0.0; self.vocab_size];
        for t in 0..self.num_slices() {
            for (a, p) in avg.iter_mut().zip(self.topic_at_slice(k, t)?) {
                *a += p;
            }
        }
        let n = self.num_slices() as f64;
        Ok(avg.into_iter().map(|a| a / n).collect())
    }

    /// Constant chain with every slice at log(φ + ε). This is the
    /// initializer used by training.
    pub fn from_lda(lda: &LdaModel, slices: Vec<(i32, i32)>, chain_variance: f64, alpha: f64) -> Self {
        let per_slice: Vec<f64> = lda.phi.iter().map(|p| (p + INIT_EPSILON).ln()).collect();
        let mut beta_nat = Vec::with_capacity(per_slice.len() * slices.len());
        for _ in &slices {
            beta_nat.extend_from_slice(&per_slice);
        }
        DtmModel {
            topics: lda.topics,
            vocab_size: lda.vocab_size,
            slices,
            chain_variance,
            alpha,
            beta_nat,
            vocab_hash: lda.vocab_hash.clone(),
            elbo_trace: Vec::new(),
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
        let _ = writeln!(out, "dtm-model\t1");
        let _ = writeln!(out, "slices\t{}", self.num_slices());
        let _ = writeln!(out, "topics\t{}", self.topics);
        let _ = writeln!(out, "vocab_size\t{}", self.vocab_size);
        let _ = writeln!(out, "chain_variance\t{}", self.chain_variance);
        let _ = writeln!(out, "alpha\t{}", self.alpha);
        out.push_str("slice_labels");
        for l in self.slice_labels() {
            out.push('\t');
            out.push_str(&l);
        }
        out.push('\n');
        let _ = writeln!(out, "vocab_hash\t{}", self.vocab_hash);
        out.push_str("beta_nat\n");
        for row in self.beta_nat.chunks(self.vocab_size) {
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
        r.expect_header("dtm-model", "1")?;
        let n_slices: usize = r.field("slices")?;
        let topics: usize = r.field("topics")?;
        let vocab_size: usize = r.field("vocab_size")?;
        let chain_variance: f64 = r.field("chain_variance")?;
        let alpha: f64 = r.field("alpha")?;
        let (no, labels) = r.raw_field("slice_labels")?;
        let slices = labels
            .iter()
            .map(|l| parse_label(l))
            .collect::<Option<Vec<_>>>()
            .filter(|s| s.len() == n_slices)
            .ok_or_else(|| Error::parse(path, no, "bad slice labels"))?;
        let vocab_hash: String = r.field("vocab_hash")?;
        r.expect_line("beta_nat")?;
        let beta_nat = r.matrix::<f64>(n_slices * topics, vocab_size)?;
        Ok(DtmModel {
            topics,
            vocab_size,
            slices,
            chain_variance,
            alpha,
            beta_nat,
            vocab_hash,
            elbo_trace: Vec::new(),
        })
    }

    /// Long-format export: `slice, topic, word, probability`.
    pub fn topics_tsv(&self, vocab: &Vocabulary) -> Result<String> {
        self.check_vocabulary(vocab)?;
        let mut out = String::from("slice\ttopic\tword\tprobability\n");
        for (t, label) in self.slice_labels().iter().enumerate() {
            for k in 0..self.topics {
                for (w, p) in self.topic_at_slice(k, t)?.iter().enumerate() {
                    let _ = writeln!(out, "{label}\t{k}\t{}\t{p}", vocab.word(w));
                }
            }
        }
        Ok(out)
    }
}

fn parse_label(label: &str) -> Option<(i32, i32)> {
    match label.split_once('-') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => {
            let y = label.parse().ok()?;
            Some((y, y))
        }
    }
}

/// Slice spans of a sliced corpus.
pub fn corpus_spans(corpus: &TimeSlicedCorpus) -> Vec<(i32, i32)> {
    corpus.slices.iter().map(|s| (s.start_year, s.end_year)).collect()
}

/// Fold-in inference against the topics of slice `t`.
pub fn infer_theta_dtm(model: &DtmModel, doc: &BowDocument, t: usize, cfg: &FoldInConfig) -> Result<Theta> {
    let probs = model.slice_topics(t)?;
    let frozen = FrozenTopics {
        topics: model.topics,
        vocab_size: model.vocab_size,
        probs: &probs,
    };
    inference::fold_in(frozen, model.alpha, doc, cfg)
}

/// Infers every document against the slice its year falls in.
pub fn infer_all_dtm(
    model: &DtmModel,
    vocab: &Vocabulary,
    docs: &[BowDocument],
    cfg: &FoldInConfig,
) -> Result<Vec<Theta>> {
    model.check_vocabulary(vocab)?;
    let tables = (0..model.num_slices())
        .map(|t| model.slice_topics(t))
        .collect::<Result<Vec<_>>>()?;
    docs.par_iter()
        .map(|d| {
            let t = model.slice_of_year(d.year).ok_or_else(|| {
                Error::Config(format!("document {} (year {}) falls outside the model's slices", d.doc_id, d.year))
            })?;
            let frozen = FrozenTopics {
                topics: model.topics,
                vocab_size: model.vocab_size,
                probs: &tables[t],
            };
            inference::fold_in(frozen, model.alpha, d, cfg)
        })
        .collect()
}

/// Base-2 Jensen-Shannon divergence between consecutive slices of topic `k`.
pub fn chain_smoothness(model: &DtmModel, k: usize) -> Result<Vec<f64>> {
    let topics = (0..model.num_slices())
        .map(|t| model.topic_at_slice(k, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(topics.windows(2).map(|w| math::js_divergence(&w[0], &w[1])).collect())
}
