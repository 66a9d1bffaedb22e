//! Term-saliency heatmaps, stretching scores and LDA↔DTM match candidates.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::corpus::{TimeSlicedCorpus, Vocabulary};
use crate::dtm::DtmModel;
use crate::error::{Error, Result};
use crate::lda::{train_lda, LdaConfig, LdaModel};
use crate::math;

/// Header line written above every match table.
pub const MATCH_CAVEAT: &str = "# candidate pairs only: topics of separately trained models have no shared identity; \
every pairing must be confirmed by reading the topics";

/// Label attached to onset leakage in every export.
pub const LEAKAGE_NOTE: &str = "onset_leakage is a heuristic stretching measure: mean mass on the onset word set in slices before the onset";

fn rank_order(scores: &[f64], vocab: &Vocabulary) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| vocab.word(a).cmp(vocab.word(b)))
    });
    idx
}

/// Indices of the `n` most probable words, lexicographic tie-break.
pub fn top_word_ids(dist: &[f64], vocab: &Vocabulary, n: usize) -> Vec<usize> {
    let mut order = rank_order(dist, vocab);
    order.truncate(n);
    order
}

/// The `n` most probable words of a topic distribution.
pub fn top_words(dist: &[f64], vocab: &Vocabulary, n: usize) -> Result<Vec<String>> {
    if n > dist.len() || dist.len() != vocab.len() {
        return Err(Error::Config(format!(
            "cannot take {n} top words from a {}-word topic over a {}-word vocabulary",
            dist.len(),
            vocab.len()
        )));
    }
    Ok(top_word_ids(dist, vocab, n)
        .into_iter()
        .map(|i| vocab.word(i).to_string())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapMatrix {
    pub topic: usize,
    pub words: Vec<String>,
    pub slices: Vec<String>,
    /// `words.len() x slices.len()`; cell = p(w | k, t).
    pub values: Vec<Vec<f64>>,
}

impl HeatmapMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word");
        for s in &self.slices {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for (w, row) in self.words.iter().zip(&self.values) {
            out.push_str(w);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Static SVG grid, words by slices, white-to-blue sequential scale.
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 36;
        const CELL_H: usize = 18;
        const LEFT: usize = 150;
        const TOP: usize = 70;
        let width = LEFT + CELL_W * self.slices.len() + 20;
        let height = TOP + CELL_H * self.words.len() + 20;
        let max = self
            .values
            .iter()
            .flatten()
            .copied()
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<text x="4" y="14" font-size="13">topic {}</text>"#, self.topic);
        for (j, s) in self.slices.iter().enumerate() {
            let x = LEFT + j * CELL_W + CELL_W / 2;
            let _ = writeln!(
                out,
                r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})">{}</text>"#,
                TOP - 4,
                TOP - 4,
                escape(s)
            );
        }
        for (i, (w, row)) in self.words.iter().zip(&self.values).enumerate() {
            let y = TOP + i * CELL_H;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6,
                y + CELL_H - 5,
                escape(w)
            );
            for (j, v) in row.iter().enumerate() {
                let f = (v / max).clamp(0.0, 1.0);
                let r = (255.0 - f * (255.0 - 8.0)).round() as u8;
                let g = (255.0 - f * (255.0 - 48.0)).round() as u8;
                let b = (255.0 - f * (255.0 - 107.0)).round() as u8;
                let _ = writeln!(
                    out,
                    r##"<rect x="{}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="#{r:02x}{g:02x}{b:02x}"><title>{} {}: {v:.6}</title></rect>"##,
                    LEFT + j * CELL_W,
                    escape(w),
                    escape(&self.slices[j])
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Words are picked per slice by relevance
/// λ·log p(w|k,t) + (1−λ)·log(p(w|k,t)/p(w)); cells hold the raw p(w|k,t).
pub fn saliency_heatmap(
    model: &DtmModel,
    vocab: &Vocabulary,
    k: usize,
    top_n: usize,
    lambda: f64,
) -> Result<HeatmapMatrix> {
    model.check_vocabulary(vocab)?;
    if top_n > vocab.len() {
        return Err(Error::Config(format!("top_n {top_n} exceeds vocabulary size {}", vocab.len())));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let unigram = vocab.unigram();
    if let Some(w) = unigram.iter().position(|&p| p <= 0.0) {
        return Err(Error::Consistency(format!(
            "word {} has zero corpus frequency",
            vocab.word(w)
        )));
    }
    let topics = (0..model.num_slices())
        .map(|t| model.topic_at_slice(k, t))
        .collect::<Result<Vec<_>>>()?;
    let relevance: Vec<Vec<f64>> = topics
        .iter()
        .map(|p| {
            p.iter()
                .zip(&unigram)
                .map(|(&pw, &u)| lambda * pw.ln() + (1.0 - lambda) * (pw / u).ln())
                .collect()
        })
        .collect();
    let mut selected = vec![false; vocab.len()];
    for r in &relevance {
        for w in top_word_ids(r, vocab, top_n) {
            selected[w] = true;
        }
    }
    let best: Vec<f64> = (0..vocab.len())
        .map(|w| {
            if selected[w] {
                relevance.iter().map(|r| r[w]).fold(f64::NEG_INFINITY, f64::max)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let rows: Vec<usize> = rank_order(&best, vocab).into_iter().filter(|&w| selected[w]).collect();
    Ok(HeatmapMatrix {
        topic: k,
        words: rows.iter().map(|&w| vocab.word(w).to_string()).collect(),
        slices: model.slice_labels(),
        values: rows.iter().map(|&w| topics.iter().map(|p| p[w]).collect()).collect(),
    })
}

/// Word set that should be absent before `slice`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnsetSpec {
    pub words: Vec<usize>,
    pub slice: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StretchReport {
    pub topic: usize,
    pub adjacent_js: Vec<f64>,
    pub endpoint_js: f64,
    pub top_word_rank_corr: Vec<f64>,
    pub onset_leakage: Option<f64>,
}

impl StretchReport {
    pub fn to_csv(&self, slice_labels: &[String]) -> String {
        let mut out = String::new();
        if self.onset_leakage.is_some() {
            let _ = writeln!(out, "# {LEAKAGE_NOTE}");
        }
        out.push_str("from,to,adjacent_js,top_word_rank_corr\n");
        for (i, (js, tau)) in self.adjacent_js.iter().zip(&self.top_word_rank_corr).enumerate() {
            let _ = writeln!(out, "{},{},{js},{tau}", slice_labels[i], slice_labels[i + 1]);
        }
        let _ = writeln!(out, "# endpoint_js,{}", self.endpoint_js);
        if let Some(l) = self.onset_leakage {
            let _ = writeln!(out, "# onset_leakage,{l}");
        }
        out
    }
}

/// Kendall tau-b over the union of two top lists; absent words share the
/// last rank.
pub fn top_list_rank_corr(a: &[usize], b: &[usize]) -> f64 {
    let mut union: Vec<usize> = a.to_vec();
    for w in b {
        if !union.contains(w) {
            union.push(*w);
        }
    }
    let rank = |list: &[usize], w: usize| list.iter().position(|&x| x == w).unwrap_or(list.len()) as f64;
    let ra: Vec<f64> = union.iter().map(|&w| rank(a, w)).collect();
    let rb: Vec<f64> = union.iter().map(|&w| rank(b, w)).collect();
    math::kendall_tau_b(&ra, &rb).unwrap_or(if a == b { 1.0 } else { 0.0 })
}

/// Σ_{t<t₀} Σ_{w∈set} p(w|k,t) / t₀ over a topic's per-slice distributions.
pub fn onset_leakage(per_slice: &[Vec<f64>], onset: &OnsetSpec) -> Result<f64> {
    if onset.slice == 0 || onset.slice >= per_slice.len() {
        return Err(Error::Config(format!(
            "onset slice must be in [1, {}), got {}",
            per_slice.len(),
            onset.slice
        )));
    }
    let mut total = 0.0;
    for p in &per_slice[..onset.slice] {
        for &w in &onset.words {
            total += *p.get(w).ok_or(Error::IndexOutOfRange {
                what: "word",
                index: w,
                len: p.len(),
            })?;
        }
    }
    Ok(total / onset.slice as f64)
}

pub fn stretch_score(
    model: &DtmModel,
    vocab: &Vocabulary,
    k: usize,
    top_n: usize,
    onset: Option<&OnsetSpec>,
) -> Result<StretchReport> {
    model.check_vocabulary(vocab)?;
    if model.num_slices() < 2 {
        return Err(Error::Config("stretching needs at least two slices".into()));
    }
    let topics = (0..model.num_slices())
        .map(|t| model.topic_at_slice(k, t))
        .collect::<Result<Vec<_>>>()?;
    let n = top_n.min(vocab.len());
    let tops: Vec<Vec<usize>> = topics.iter().map(|p| top_word_ids(p, vocab, n)).collect();
    let onset_leakage = onset.map(|o| onset_leakage(&topics, o)).transpose()?;
    Ok(StretchReport {
        topic: k,
        adjacent_js: topics.windows(2).map(|w| math::js_divergence(&w[0], &w[1])).collect(),
        endpoint_js: math::js_divergence(&topics[0], topics.last().unwrap()),
        top_word_rank_corr: tops.windows(2).map(|w| top_list_rank_corr(&w[0], &w[1])).collect(),
        onset_leakage,
    })
}

/// Independent LDA per slice, each seeded from `(cfg.seed, slice index)`.
pub fn train_per_slice(corpus: &TimeSlicedCorpus, vocab: &Vocabulary, cfg: &LdaConfig) -> Result<Vec<LdaModel>> {
    corpus
        .slices
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let slice_cfg = LdaConfig {
                seed: cfg.seed.wrapping_add(t as u64),
                ..*cfg
            };
            train_lda(&s.docs, vocab, &slice_cfg)
        })
        .collect()
}

/// Leakage of independent per-slice models: for every slice before the onset,
/// the largest onset-set mass any of that slice's topics carries. Taking the
/// most leaky topic per slice makes this an upper bound for the baseline.
pub fn independent_leakage(models: &[LdaModel], onset: &OnsetSpec) -> Result<f64> {
    if onset.slice == 0 || onset.slice > models.len() {
        return Err(Error::Config(format!(
            "onset slice must be in [1, {}], got {}",
            models.len(),
            onset.slice
        )));
    }
    let mut total = 0.0;
    for m in &models[..onset.slice] {
        let worst = (0..m.topics)
            .map(|k| onset.words.iter().map(|&w| m.topic(k)[w]).sum::<f64>())
            .fold(0.0, f64::max);
        total += worst;
    }
    Ok(total / onset.slice as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicPair {
    pub lda: usize,
    pub dtm: usize,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    /// Every (lda, dtm) pair, ascending divergence.
    pub table: Vec<TopicPair>,
    /// Greedy one-to-one suggestion.
    pub greedy: Vec<TopicPair>,
}

impl MatchReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{MATCH_CAVEAT}\nlda_topic,dtm_topic,js_divergence,greedy\n");
        for p in &self.table {
            let chosen = self.greedy.iter().any(|g| g.lda == p.lda && g.dtm == p.dtm);
            let _ = writeln!(out, "{},{},{},{}", p.lda, p.dtm, p.divergence, chosen as u8);
        }
        out
    }
}

/// JS divergence between each LDA topic and each time-averaged DTM topic.
pub fn match_topics(lda: &LdaModel, dtm: &DtmModel) -> Result<MatchReport> {
    if lda.vocab_hash != dtm.vocab_hash || lda.vocab_size != dtm.vocab_size {
        return Err(Error::VocabularyMismatch {
            expected: lda.vocab_hash.clone(),
            found: dtm.vocab_hash.clone(),
        });
    }
    let averaged = (0..dtm.topics)
        .map(|k| dtm.time_averaged_topic(k))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Vec::with_capacity(lda.topics * dtm.topics);
    for i in 0..lda.topics {
        for (j, avg) in averaged.iter().enumerate() {
            table.push(TopicPair {
                lda: i,
                dtm: j,
                divergence: math::js_divergence(lda.topic(i), avg),
            });
        }
    }
    table.sort_by(|a, b| {
        a.divergence
            .total_cmp(&b.divergence)
            .then_with(|| (a.lda, a.dtm).cmp(&(b.lda, b.dtm)))
    });
    let mut used_lda = vec![false; lda.topics];
    let mut used_dtm = vec![false; dtm.topics];
    let mut greedy = Vec::new();
    for p in &table {
        if !used_lda[p.lda] && !used_dtm[p.dtm] {
            used_lda[p.lda] = true;
            used_dtm[p.dtm] = true;
            greedy.push(*p);
        }
    }
    greedy.sort_by_key(|p| p.lda);
    Ok(MatchReport { table, greedy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        let n = words.len();
        Vocabulary::from_parts(words.iter().map(|s| s.to_string()).collect(), vec![1; n], vec![1; n]).unwrap()
    }

    #[test]
    fn uniform_topic_uses_lexicographic_order() {
        let v = vocab(&["a", "b", "c", "d"]);
        assert_eq!(top_words(&[0.25; 4], &v, 2).unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn peaked_topic_leads_with_peak() {
        let v = vocab(&["a", "b", "c"]);
        assert_eq!(top_words(&[0.1, 0.1, 0.8], &v, 1).unwrap(), vec!["c"]);
        assert!(top_words(&[0.1, 0.1, 0.8], &v, 4).is_err());
    }

    #[test]
    fn rank_corr_extremes() {
        assert_eq!(top_list_rank_corr(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(top_list_rank_corr(&[3], &[3]), 1.0);
        assert!(top_list_rank_corr(&[1, 2, 3], &[3, 2, 1]) < 0.0);
    }

    #[test]
    fn onset_at_zero_is_an_error() {
        let p = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let spec = OnsetSpec { words: vec![0], slice: 0 };
        assert!(onset_leakage(&p, &spec).is_err());
        let spec = OnsetSpec { words: vec![0], slice: 1 };
        assert_eq!(onset_leakage(&p, &spec).unwrap(), 0.5);
    }

    #[test]
    fn svg_escapes_words() {
        let h = HeatmapMatrix {
            topic: 0,
            words: vec!["a<b".into()],
            slices: vec!["1860".into()],
            values: vec![vec![0.5]],
        };
        let svg = h.to_svg();
        assert!(svg.contains("a&lt;b") && svg.starts_with("<svg"));
    }
}
