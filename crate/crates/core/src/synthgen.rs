//! Seeded synthetic corpora with planted topic dynamics.
//!
//! Topic k owns a contiguous block of the vocabulary; a `background` share of
//! every topic is spread uniformly over all words. Document mixtures are drawn
//! from a Dirichlet whose mean follows each topic's declared dynamics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::{slice_by_year, BowDocument, Document, Record, TimeSlicedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::inference::{draw, Theta};
use crate::prominence::{topic_prominence, ProminenceSeries};
use crate::rng::{stream, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamics {
    Constant,
    /// Unnormalized mixture weight `1 + slope * t`.
    LinearTrend { slope: f64 },
    /// Zero weight before `slice`, weight 1 from it on.
    Onset { slice: usize },
    /// Mass inside the topic's block tilts towards its last words at `rate` per slice.
    Drift { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub slices: usize,
    pub topics: usize,
    pub vocab: usize,
    pub docs_per_slice: usize,
    pub tokens_per_doc: usize,
    pub dynamics: Vec<Dynamics>,
    /// Per-topic Dirichlet concentration; the total is `alpha * topics`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_background")]
    pub background: f64,
    #[serde(default = "default_start_year")]
    pub start_year: i32,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_background() -> f64 {
    0.02
}

fn default_start_year() -> i32 {
    1860
}

impl ScenarioSpec {
    pub fn constant(slices: usize, topics: usize, vocab: usize, seed: u64) -> Self {
        ScenarioSpec {
            slices,
            topics,
            vocab,
            docs_per_slice: 100,
            tokens_per_doc: 100,
            dynamics: vec![Dynamics::Constant; topics],
            alpha: default_alpha(),
            background: default_background(),
            start_year: default_start_year(),
            seed,
        }
    }

    /// Topic 0 declines, topic 1 rises, the rest stay constant.
    pub fn linear_trend(slices: usize, topics: usize, vocab: usize, seed: u64) -> Self {
        let mut spec = Self::constant(slices, topics, vocab, seed);
        let span = slices.saturating_sub(1).max(1) as f64;
        spec.dynamics[0] = Dynamics::LinearTrend { slope: -0.8 / span };
        if topics > 1 {
            spec.dynamics[1] = Dynamics::LinearTrend { slope: 2.0 / span };
        }
        spec
    }

    /// The last topic appears only from `onset` on.
    pub fn onset(slices: usize, topics: usize, vocab: usize, onset: usize, seed: u64) -> Self {
        let mut spec = Self::constant(slices, topics, vocab, seed);
        spec.dynamics[topics - 1] = Dynamics::Onset { slice: onset };
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.slices == 0 || self.topics == 0 || self.docs_per_slice == 0 || self.tokens_per_doc == 0 {
            return bad("slices, topics, docs_per_slice and tokens_per_doc must be positive".into());
        }
        if self.vocab < self.topics {
            return bad(format!("vocabulary of {} words cannot hold {} topics", self.vocab, self.topics));
        }
        if self.dynamics.len() != self.topics {
            return bad(format!("{} dynamics given for {} topics", self.dynamics.len(), self.topics));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.background) {
            return bad(format!("background must be in [0, 1), got {}", self.background));
        }
        for (k, d) in self.dynamics.iter().enumerate() {
            match *d {
                Dynamics::Onset { slice } if slice == 0 || slice >= self.slices => {
                    return bad(format!("topic {k}: onset slice must be in [1, {}), got {slice}", self.slices));
                }
                Dynamics::LinearTrend { slope } if (0..self.slices).any(|t| 1.0 + slope * t as f64 <= 0.0) => {
                    return bad(format!("topic {k}: slope {slope} drives the mixture weight to zero"));
                }
                Dynamics::Drift { rate } if !rate.is_finite() => {
                    return bad(format!("topic {k}: drift rate must be finite"));
                }
                _ => {}
            }
        }
        if (0..self.slices).any(|t| self.weights(t).iter().all(|&w| w == 0.0)) {
            return bad("some slice has no active topic".into());
        }
        Ok(())
    }

    fn weights(&self, t: usize) -> Vec<f64> {
        self.dynamics
            .iter()
            .map(|d| match *d {
                Dynamics::LinearTrend { slope } => 1.0 + slope * t as f64,
                Dynamics::Onset { slice } if t < slice => 0.0,
                _ => 1.0,
            })
            .collect()
    }

    /// Planted mixture mean per slice.
    pub fn mixture_mean(&self, t: usize) -> Vec<f64> {
        let w = self.weights(t);
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    /// Word range owned by topic `k`.
    pub fn block(&self, k: usize) -> std::ops::Range<usize> {
        (k * self.vocab / self.topics)..((k + 1) * self.vocab / self.topics)
    }

    /// Planted topic-word distribution of topic `k` at slice `t`.
    pub fn topic(&self, k: usize, t: usize) -> Vec<f64> {
        let block = self.block(k);
        let len = block.len() as f64;
        let tilt = match self.dynamics[k] {
            Dynamics::Drift { rate } => rate * t as f64,
            _ => 0.0,
        };
        let raw: Vec<f64> = block
            .clone()
            .map(|w| (tilt * ((w - block.start) as f64 - (len - 1.0) / 2.0) / len).exp())
            .collect();
        let raw_total: f64 = raw.iter().sum();
        let mut p = vec![self.background / self.vocab as f64; self.vocab];
        for (w, r) in block.zip(raw) {
            p[w] += (1.0 - self.background) * r / raw_total;
        }
        p
    }

    pub fn word_name(&self, w: usize) -> String {
        let width = (self.vocab.saturating_sub(1)).to_string().len().max(3);
        format!("w{w:0width$}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `topics[t][k]` is the planted word distribution.
    pub topics: Vec<Vec<Vec<f64>>>,
    pub thetas: Vec<Theta>,
    /// `mixture_means[t]` is the Dirichlet mean of slice `t`.
    pub mixture_means: Vec<Vec<f64>>,
    /// Per-year prominence of the planted thetas.
    pub prominence: ProminenceSeries,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub documents: Vec<Document>,
    /// Word `i` of the vocabulary is word `i` of the planted topics.
    pub vocab: Vocabulary,
    pub bow: Vec<BowDocument>,
    pub corpus: TimeSlicedCorpus,
    pub truth: GroundTruth,
}

fn dirichlet(concentration: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let mut draws: Vec<f64> = concentration
        .iter()
        .map(|&a| {
            if a > 0.0 {
                Gamma::new(a, 1.0).expect("positive shape").sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    let mut total: f64 = draws.iter().sum();
    if total <= 0.0 {
        // Every gamma draw underflowed; fall back to the mean.
        draws = concentration.to_vec();
        total = draws.iter().sum();
    }
    draws.iter().map(|x| x / total).collect()
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let (t_count, k_count, v_count) = (spec.slices, spec.topics, spec.vocab);
    let topics: Vec<Vec<Vec<f64>>> = (0..t_count)
        .map(|t| (0..k_count).map(|k| spec.topic(k, t)).collect())
        .collect();
    let mixture_means: Vec<Vec<f64>> = (0..t_count).map(|t| spec.mixture_mean(t)).collect();
    let names: Vec<String> = (0..v_count).map(|w| spec.word_name(w)).collect();

    let mut documents = Vec::with_capacity(t_count * spec.docs_per_slice);
    let mut bow = Vec::with_capacity(documents.capacity());
    let mut thetas = Vec::with_capacity(documents.capacity());
    let mut doc_freq = vec![0u64; v_count];
    let mut term_freq = vec![0u64; v_count];
    for t in 0..t_count {
        let year = spec.start_year + t as i32;
        let concentration: Vec<f64> = mixture_means[t]
            .iter()
            .map(|m| m * spec.alpha * k_count as f64)
            .collect();
        for i in 0..spec.docs_per_slice {
            let mut rng = stream(spec.seed, &[Label::Str("synth-doc"), Label::Int(t as i64), Label::Int(i as i64)]);
            let theta = dirichlet(&concentration, &mut rng);
            let mut counts = vec![0u32; v_count];
            let mut tokens = Vec::with_capacity(spec.tokens_per_doc);
            for _ in 0..spec.tokens_per_doc {
                let z = draw(&theta, 1.0, &mut rng);
                let w = draw(&topics[t][z], 1.0, &mut rng);
                counts[w] += 1;
                tokens.push(names[w].clone());
            }
            let id = format!("{year}-{i:05}");
            for (w, &c) in counts.iter().enumerate() {
                if c > 0 {
                    doc_freq[w] += 1;
                    term_freq[w] += c as u64;
                }
            }
            let pairs = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(w, &c)| (w, c))
                .collect();
            bow.push(BowDocument::new(id.clone(), year, pairs));
            thetas.push(Theta {
                doc_id: id.clone(),
                year,
                weights: theta,
                uninformed: false,
            });
            documents.push(Document {
                id,
                date: format!("{year}-01-01"),
                year,
                tokens,
            });
        }
    }
    let vocab = Vocabulary::from_parts(names, doc_freq, term_freq)?;
    let corpus = slice_by_year(&bow, 1)?;
    let prominence = topic_prominence(&thetas)?;
    Ok(Scenario {
        spec: spec.clone(),
        documents,
        vocab,
        bow,
        corpus,
        truth: GroundTruth {
            topics,
            thetas,
            mixture_means,
            prominence,
        },
    })
}

impl Scenario {
    /// Records in the line-delimited format the ingester reads.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            let rec = Record {
                id: d.id.clone(),
                date: d.date.clone(),
                text: Some(d.tokens.join(" ")),
                tokens: None,
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn topics_tsv(&self) -> String {
        let mut out = String::from("slice\ttopic\tword\tprob\n");
        for (t, slice) in self.truth.topics.iter().enumerate() {
            for (k, p) in slice.iter().enumerate() {
                for (w, v) in p.iter().enumerate() {
                    let _ = writeln!(out, "{}\t{k}\t{}\t{v}", self.spec.start_year + t as i32, self.vocab.word(w));
                }
            }
        }
        out
    }

    pub fn thetas_tsv(&self) -> String {
        let mut out = String::from("doc_id\tyear");
        for k in 0..self.spec.topics {
            let _ = write!(out, "\ttopic_{k}");
        }
        out.push('\n');
        for th in &self.truth.thetas {
            let _ = write!(out, "{}\t{}", th.doc_id, th.year);
            for v in &th.weights {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn prominence_tsv(&self) -> String {
        self.truth.prominence.to_csv().replace(',', "\t")
    }

    pub fn mixture_tsv(&self) -> String {
        let mut out = String::from("year");
        for k in 0..self.spec.topics {
            let _ = write!(out, "\ttopic_{k}");
        }
        out.push('\n');
        for (t, row) in self.truth.mixture_means.iter().enumerate() {
            let _ = write!(out, "{}", self.spec.start_year + t as i32);
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Writes `corpus.jsonl` and the `truth_*.tsv` files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("corpus.jsonl", self.to_jsonl()),
            ("truth_topics.tsv", self.topics_tsv()),
            ("truth_theta.tsv", self.thetas_tsv()),
            ("truth_prominence.tsv", self.prominence_tsv()),
            ("truth_mixture.tsv", self.mixture_tsv()),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
