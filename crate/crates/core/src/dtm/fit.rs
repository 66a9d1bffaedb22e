//! Variational EM for the dynamic topic model.
//!
//! The E-step runs mean-field document inference (Dirichlet γ, multinomial φ)
//! against each slice's topics, warm-started from the previous iteration. The
//! M-step maximizes the topic part of the bound chain by chain: for every
//! topic-word chain a damped Newton step is taken on the pseudo-observations,
//! with the means recovered by Kalman smoothing. The log-normalizer
//! E[log Σ_w exp β] is bounded by log Σ_w exp(m_w + Ṽ/2) and handled with the
//! usual auxiliary ζ so that words decouple. Every update is a coordinate
//! ascent step on one bound, so the recorded objective never decreases.

use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use super::chain::ChainPrior;
use super::{corpus_spans, DtmConfig, DtmModel, INIT_EPSILON};
use crate::corpus::{BowDocument, TimeSlicedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::lda::{train_lda, LdaConfig, LdaModel};
use crate::math;

/// Trains the pooled LDA initializer on all slices, then fits the DTM.
pub fn train_dtm(corpus: &TimeSlicedCorpus, vocab: &Vocabulary, cfg: &DtmConfig) -> Result<DtmModel> {
    cfg.validate()?;
    check_slices(corpus)?;
    let docs: Vec<BowDocument> = corpus.documents().cloned().collect();
    let lda_cfg = LdaConfig {
        topics: cfg.topics,
        seed: cfg.seed,
        ..cfg.init_lda
    };
    let lda = train_lda(&docs, vocab, &lda_cfg)?;
    train_dtm_from(corpus, vocab, cfg, &lda)
}

fn check_slices(corpus: &TimeSlicedCorpus) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::Config("cannot train on an empty corpus".into()));
    }
    for s in &corpus.slices {
        if s.docs.is_empty() {
            return Err(Error::EmptySlice { label: s.label() });
        }
        if let Some(d) = s.docs.iter().find(|d| d.is_empty()) {
            return Err(Error::EmptyDocument {
                doc_id: d.doc_id.clone(),
            });
        }
    }
    Ok(())
}

/// Fits the DTM starting from the topics of `init`.
pub fn train_dtm_from(
    corpus: &TimeSlicedCorpus,
    vocab: &Vocabulary,
    cfg: &DtmConfig,
    init: &LdaModel,
) -> Result<DtmModel> {
    cfg.validate()?;
    check_slices(corpus)?;
    init.check_vocabulary(vocab)?;
    if init.topics != cfg.topics {
        return Err(Error::Config(format!(
            "initializer has {} topics, configuration asks for {}",
            init.topics, cfg.topics
        )));
    }
    let (n_slices, k_count, v) = (corpus.len(), cfg.topics, vocab.len());
    let prior = ChainPrior::new(n_slices, cfg.chain_variance, cfg.init_variance, cfg.obs_variance);
    let mut chains = Chains::init(init, &prior);
    let mut gammas: Vec<Vec<f64>> = corpus
        .slices
        .iter()
        .map(|s| {
            s.docs
                .iter()
                .flat_map(|d| std::iter::repeat_n(cfg.alpha + d.len() as f64 / k_count as f64, k_count))
                .collect()
        })
        .collect();
    let constant = prior.entropy_constant() * (k_count * v) as f64;
    let mut trace = Vec::with_capacity(cfg.iters);

    for iteration in 0..cfg.iters {
        let mut counts = vec![0.0; k_count * n_slices * v];
        let mut doc_terms = 0.0;
        for (t, slice) in corpus.slices.iter().enumerate() {
            let table = chains.log_topic_table(t, &prior);
            let results: Vec<(f64, Vec<f64>)> = slice
                .docs
                .par_iter()
                .zip(gammas[t].par_chunks_mut(k_count))
                .map(|(doc, gamma)| estep_doc(doc, gamma, &table, cfg))
                .collect();
            for (doc, (term, weighted)) in slice.docs.iter().zip(results) {
                doc_terms += term;
                for (i, &(w, _)) in doc.counts.iter().enumerate() {
                    for k in 0..k_count {
                        counts[(k * n_slices + t) * v + w] += weighted[i * k_count + k];
                    }
                }
            }
        }
        let (diag, off) = prior.precision();
        let updated: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..k_count)
            .into_par_iter()
            .map(|k| {
                let block = k * v * n_slices..(k + 1) * v * n_slices;
                let mut topic = TopicChains {
                    means: chains.means[block.clone()].to_vec(),
                    pseudo: chains.pseudo[block].to_vec(),
                };
                let stats = &counts[k * n_slices * v..(k + 1) * n_slices * v];
                let objective = topic.maximize(stats, &prior, &diag, &off, cfg.mstep_rounds);
                (topic.means, topic.pseudo, objective)
            })
            .collect();
        let mut elbo = doc_terms + constant;
        for (k, (means, pseudo, objective)) in updated.into_iter().enumerate() {
            let block = k * v * n_slices..(k + 1) * v * n_slices;
            chains.means[block.clone()].copy_from_slice(&means);
            chains.pseudo[block].copy_from_slice(&pseudo);
            elbo += objective;
        }
        if !elbo.is_finite() {
            return Err(Error::NonFiniteObjective { iteration });
        }
        trace.push(elbo);
    }

    let mut beta_nat = vec![0.0; n_slices * k_count * v];
    for k in 0..k_count {
        for w in 0..v {
            for t in 0..n_slices {
                beta_nat[(t * k_count + k) * v + w] = chains.mean(k, w, t);
            }
        }
    }
    Ok(DtmModel {
        topics: k_count,
        vocab_size: v,
        slices: corpus_spans(corpus),
        chain_variance: cfg.chain_variance,
        alpha: cfg.alpha,
        beta_nat,
        vocab_hash: vocab.checksum(),
        elbo_trace: trace,
    })
}

/// Variational chain state, `[(k * V + w) * T + t]`.
struct Chains {
    topics: usize,
    vocab_size: usize,
    slices: usize,
    means: Vec<f64>,
    pseudo: Vec<f64>,
}

impl Chains {
    fn init(lda: &LdaModel, prior: &ChainPrior) -> Self {
        let (k_count, v, n) = (lda.topics, lda.vocab_size, prior.slices());
        let mut means = Vec::with_capacity(k_count * v * n);
        let mut pseudo = Vec::with_capacity(k_count * v * n);
        for k in 0..k_count {
            for w in 0..v {
                let start = vec![(lda.phi[k * v + w] + INIT_EPSILON).ln(); n];
                let p = prior.pseudo_observations(&start);
                means.extend(prior.smooth(&p));
                pseudo.extend(p);
            }
        }
        Chains {
            topics: k_count,
            vocab_size: v,
            slices: n,
            means,
            pseudo,
        }
    }

    fn mean(&self, k: usize, w: usize, t: usize) -> f64 {
        self.means[(k * self.vocab_size + w) * self.slices + t]
    }

    /// Word-major table of m_{t,k,w} − log Σ_v exp(m_{t,k,v} + Ṽ_t/2).
    fn log_topic_table(&self, t: usize, prior: &ChainPrior) -> Vec<f64> {
        let (k_count, v) = (self.topics, self.vocab_size);
        let half_var = 0.5 * prior.smoothed_variances()[t];
        let mut table = vec![0.0; v * k_count];
        let mut row = vec![0.0; v];
        for k in 0..k_count {
            for (w, r) in row.iter_mut().enumerate() {
                *r = self.mean(k, w, t);
            }
            let norm = math::logsumexp(&row) + half_var;
            for w in 0..v {
                table[w * k_count + k] = row[w] - norm;
            }
        }
        table
    }
}

/// Mean-field inference for one document, warm-started from `gamma`.
/// Returns the document's share of the bound (without the log-topic term,
/// which the M-step accounts for) and the expected counts c_w φ_wk.
fn estep_doc(doc: &BowDocument, gamma: &mut [f64], table: &[f64], cfg: &DtmConfig) -> (f64, Vec<f64>) {
    let k_count = gamma.len();
    let alpha = cfg.alpha;
    let mut phi = vec![0.0; doc.counts.len() * k_count];
    let mut elog = vec![0.0; k_count];
    let mut next = vec![0.0; k_count];
    let mut scratch = vec![0.0; k_count];
    for _ in 0..cfg.estep_max_iters {
        dirichlet_expectation(gamma, &mut elog);
        next.fill(alpha);
        for (i, &(w, c)) in doc.counts.iter().enumerate() {
            let row = &table[w * k_count..(w + 1) * k_count];
            let mut max = f64::NEG_INFINITY;
            for k in 0..k_count {
                scratch[k] = elog[k] + row[k];
                max = max.max(scratch[k]);
            }
            let mut total = 0.0;
            for s in scratch.iter_mut() {
                *s = (*s - max).exp();
                total += *s;
            }
            for k in 0..k_count {
                let p = scratch[k] / total;
                phi[i * k_count + k] = p;
                next[k] += c as f64 * p;
            }
        }
        let delta = gamma.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / k_count as f64;
        gamma.copy_from_slice(&next);
        if delta < cfg.estep_tol {
            break;
        }
    }
    dirichlet_expectation(gamma, &mut elog);
    let gamma_sum: f64 = gamma.iter().sum();
    let mut term = ln_gamma(k_count as f64 * alpha) - k_count as f64 * ln_gamma(alpha) - ln_gamma(gamma_sum);
    for k in 0..k_count {
        term += (alpha - 1.0) * elog[k] + ln_gamma(gamma[k]) - (gamma[k] - 1.0) * elog[k];
    }
    for (i, &(_, c)) in doc.counts.iter().enumerate() {
        for k in 0..k_count {
            let p = phi[i * k_count + k];
            if p > 0.0 {
                term += c as f64 * p * (elog[k] - p.ln());
            }
            phi[i * k_count + k] = c as f64 * p;
        }
    }
    (term, phi)
}

fn dirichlet_expectation(gamma: &[f64], out: &mut [f64]) {
    let total = digamma(gamma.iter().sum());
    for (o, &g) in out.iter_mut().zip(gamma) {
        *o = digamma(g) - total;
    }
}

/// All chains of one topic, `[w * T + t]`.
struct TopicChains {
    means: Vec<f64>,
    pseudo: Vec<f64>,
}

impl TopicChains {
    /// Σ_t [Σ_w n_tw m_tw − n_t (log Σ_w exp(m_tw) + Ṽ_t/2)] − ½ Σ_w m_wᵀ Λ m_w.
    fn objective(&self, stats: &[f64], prior: &ChainPrior, diag: &[f64], off: &[f64]) -> f64 {
        let n = prior.slices();
        let v = stats.len() / n;
        let mut total = 0.0;
        let mut column = vec![0.0; v];
        for t in 0..n {
            let counts = &stats[t * v..(t + 1) * v];
            let mut slice_total = 0.0;
            for w in 0..v {
                column[w] = self.means[w * n + t];
                total += counts[w] * column[w];
                slice_total += counts[w];
            }
            total -= slice_total * (math::logsumexp(&column) + 0.5 * prior.smoothed_variances()[t]);
        }
        for w in 0..v {
            let m = &self.means[w * n..(w + 1) * n];
            let lm = ChainPrior::apply_precision(diag, off, m);
            total -= 0.5 * m.iter().zip(&lm).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// Block coordinate ascent on (chains, ζ). Returns the final objective;
    /// a round that fails to improve is rolled back.
    fn maximize(&mut self, stats: &[f64], prior: &ChainPrior, diag: &[f64], off: &[f64], rounds: usize) -> f64 {
        let n = prior.slices();
        let v = stats.len() / n;
        let mut best = self.objective(stats, prior, diag, off);
        let slice_totals: Vec<f64> = (0..n).map(|t| stats[t * v..(t + 1) * v].iter().sum()).collect();
        for _ in 0..rounds {
            // ζ_t at its optimum for the current means, folded into
            // per-slice scales: n_t exp(Ṽ_t/2) / ζ_t = scale_t · exp(−shift_t).
            let mut shift = vec![f64::NEG_INFINITY; n];
            for chain in self.means.chunks(n) {
                for (s, &m) in shift.iter_mut().zip(chain) {
                    *s = s.max(m);
                }
            }
            let mut scale = vec![0.0; n];
            for t in 0..n {
                let z: f64 = (0..v).map(|w| (self.means[w * n + t] - shift[t]).exp()).sum();
                scale[t] = slice_totals[t] / z;
            }
            let previous = (self.means.clone(), self.pseudo.clone());
            for w in 0..v {
                let counts: Vec<f64> = (0..n).map(|t| stats[t * v + w]).collect();
                let word = WordBound {
                    counts: &counts,
                    scale: &scale,
                    shift: &shift,
                    diag,
                    off,
                };
                let range = w * n..(w + 1) * n;
                let mut m = self.means[range.clone()].to_vec();
                let mut p = self.pseudo[range.clone()].to_vec();
                word.newton(&mut m, &mut p, prior);
                self.means[range.clone()].copy_from_slice(&m);
                self.pseudo[range].copy_from_slice(&p);
            }
            let value = self.objective(stats, prior, diag, off);
            if value.is_nan() || value < best {
                self.means = previous.0;
                self.pseudo = previous.1;
                break;
            }
            let gain = value - best;
            best = value;
            if gain <= 1e-10 * (1.0 + best.abs()) {
                break;
            }
        }
        best
    }
}

/// Per-word surrogate with ζ fixed:
/// h(m) = Σ_t [n_t m_t − scale_t exp(m_t − shift_t)] − ½ mᵀΛm.
struct WordBound<'a> {
    counts: &'a [f64],
    scale: &'a [f64],
    shift: &'a [f64],
    diag: &'a [f64],
    off: &'a [f64],
}

impl WordBound<'_> {
    fn value(&self, m: &[f64]) -> f64 {
        let lm = ChainPrior::apply_precision(self.diag, self.off, m);
        let mut h = 0.0;
        for t in 0..m.len() {
            h += self.counts[t] * m[t] - self.scale[t] * (m[t] - self.shift[t]).exp() - 0.5 * m[t] * lm[t];
        }
        h
    }

    /// Damped Newton ascent. The step is taken on the pseudo-observations and
    /// the means are re-derived by smoothing, so (means, pseudo) stay paired.
    fn newton(&self, m: &mut Vec<f64>, pseudo: &mut Vec<f64>, prior: &ChainPrior) {
        const MAX_STEPS: usize = 20;
        let n = m.len();
        let mut h = self.value(m);
        for _ in 0..MAX_STEPS {
            let lm = ChainPrior::apply_precision(self.diag, self.off, m);
            let mut grad = vec![0.0; n];
            let mut curvature = vec![0.0; n];
            for t in 0..n {
                let e = self.scale[t] * (m[t] - self.shift[t]).exp();
                grad[t] = self.counts[t] - e - lm[t];
                curvature[t] = e + self.diag[t];
            }
            let direction = math::solve_tridiagonal(&curvature, self.off, &grad);
            let decrement: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
            if decrement.is_nan() || decrement <= 1e-12 {
                break;
            }
            let ld = ChainPrior::apply_precision(self.diag, self.off, &direction);
            let pseudo_dir: Vec<f64> = direction
                .iter()
                .zip(&ld)
                .map(|(d, l)| d + prior.obs_variance() * l)
                .collect();
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand_p: Vec<f64> = pseudo.iter().zip(&pseudo_dir).map(|(p, d)| p + step * d).collect();
                let cand_m = prior.smooth(&cand_p);
                let cand_h = self.value(&cand_m);
                if cand_h >= h + 1e-4 * step * decrement {
                    *pseudo = cand_p;
                    *m = cand_m;
                    h = cand_h;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
}
