//! Document-topic proportions and fold-in inference against frozen topics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::corpus::BowDocument;
use crate::error::{Error, Result};
use crate::rng::{self, Label};

/// Topic proportions P(z_k | d) of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub doc_id: String,
    pub year: i32,
    pub weights: Vec<f64>,
    /// Set for documents with no in-vocabulary tokens; weights are uniform.
    pub uninformed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldInConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FoldInConfig {
    fn default() -> Self {
        FoldInConfig {
            burn_in: 50,
            samples: 50,
            seed: 0,
        }
    }
}

/// Frozen topic-word probabilities, `K x V` row-major.
#[derive(Debug, Clone, Copy)]
pub struct FrozenTopics<'a> {
    pub topics: usize,
    pub vocab_size: usize,
    pub probs: &'a [f64],
}

impl FrozenTopics<'_> {
    #[inline]
    pub fn prob(&self, k: usize, w: usize) -> f64 {
        self.probs[k * self.vocab_size + w]
    }
}

#[inline]
pub(crate) fn draw(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (k, &p) in weights.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return k;
        }
    }
    // Rounding left a sliver of mass: take the last topic with weight.
    weights.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Fold-in Gibbs sampling with topic-word probabilities frozen. Each token is
/// resampled from p(k) ∝ (n_dk^{-i} + α) φ_k[w]; θ is the average over the
/// sample sweeps of (n_dk + α) / (N_d + Kα). The random stream is derived from
/// `(seed, doc_id)`, so documents can be processed in any order.
pub fn fold_in(topics: FrozenTopics<'_>, alpha: f64, doc: &BowDocument, cfg: &FoldInConfig) -> Result<Theta> {
    let k_count = topics.topics;
    if let Some(&(w, _)) = doc.counts.last() {
        if w >= topics.vocab_size {
            return Err(Error::IndexOutOfRange {
                what: "word",
                index: w,
                len: topics.vocab_size,
            });
        }
    }
    if doc.is_empty() {
        return Ok(Theta {
            doc_id: doc.doc_id.clone(),
            year: doc.year,
            weights: vec![1.0 / k_count as f64; k_count],
            uninformed: false,
        }
        .into_uninformed());
    }
    let samples = cfg.samples.max(1);
    let mut stream = rng::stream(cfg.seed, &[Label::Str("fold-in"), Label::Str(&doc.doc_id)]);
    let words: Vec<usize> = doc.tokens().collect();
    let n = words.len() as f64;
    let mut ndk = vec![0u32; k_count];
    let mut z = vec![0usize; words.len()];
    let mut p = vec![0.0; k_count];
    for (i, &w) in words.iter().enumerate() {
        let mut total = 0.0;
        for k in 0..k_count {
            p[k] = (ndk[k] as f64 + alpha) * topics.prob(k, w);
            total += p[k];
        }
        let k = draw(&p, total, &mut stream);
        z[i] = k;
        ndk[k] += 1;
    }
    let mut acc = vec![0.0; k_count];
    let denom = n + k_count as f64 * alpha;
    for sweep in 0..cfg.burn_in + samples {
        for (i, &w) in words.iter().enumerate() {
            ndk[z[i]] -= 1;
            let mut total = 0.0;
            for k in 0..k_count {
                p[k] = (ndk[k] as f64 + alpha) * topics.prob(k, w);
                total += p[k];
            }
            let k = draw(&p, total, &mut stream);
            z[i] = k;
            ndk[k] += 1;
        }
        if sweep >= cfg.burn_in {
            for k in 0..k_count {
                acc[k] += (ndk[k] as f64 + alpha) / denom;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    Ok(Theta {
        doc_id: doc.doc_id.clone(),
        year: doc.year,
        weights: acc.iter().map(|a| a / total).collect(),
        uninformed: false,
    })
}

impl Theta {
    fn into_uninformed(mut self) -> Self {
        self.uninformed = true;
        self
    }
}

/// CSV: `doc_id, year, topic_0 .. topic_{K-1}`.
pub fn thetas_to_csv(thetas: &[Theta]) -> String {
    let k = thetas.first().map_or(0, |t| t.weights.len());
    let mut out = String::from("doc_id,year");
    for i in 0..k {
        let _ = write!(out, ",topic_{i}");
    }
    out.push('\n');
    for t in thetas {
        let _ = write!(out, "{},{}", t.doc_id, t.year);
        for w in &t.weights {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

pub fn write_thetas(path: &Path, thetas: &[Theta]) -> Result<()> {
    fs::write(path, thetas_to_csv(thetas)).map_err(|e| Error::io(path, e))
}

pub fn read_thetas(path: &Path) -> Result<Vec<Theta>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h).unwrap_or_default();
    let k = header.split(',').count().saturating_sub(2);
    let mut out = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != k + 2 {
            return Err(Error::parse(path, no + 1, format!("expected {} columns", k + 2)));
        }
        let year = cols[1].parse().map_err(|_| Error::parse(path, no + 1, "bad year"))?;
        let weights = cols[2..]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(path, no + 1, "bad weight"))?;
        out.push(Theta {
            doc_id: cols[0].to_string(),
            year,
            weights,
            uninformed: false,
        });
    }
    Ok(out)
}
