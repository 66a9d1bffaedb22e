//! Ingestion, vocabulary pruning, bag-of-words vectorization and time slicing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// How strictly record dates are parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateMode {
    /// `YYYY`, `YYYY-MM`, `YYYY-MM-DD`, optionally followed by a `T...` time.
    #[default]
    StrictIso,
    /// Strict ISO plus `MM/YYYY`, `DD/MM/YYYY` and `DD.MM.YYYY`.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub min_token_len: usize,
    pub stopwords: HashSet<String>,
    pub date_mode: DateMode,
    /// Inclusive collection range; records outside it are skipped.
    pub year_range: Option<(i32, i32)>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_token_len: 2,
            stopwords: HashSet::new(),
            date_mode: DateMode::StrictIso,
            year_range: None,
        }
    }
}

impl PreprocessConfig {
    /// Reads a stopword file: one word per line, `#` starts a comment.
    pub fn load_stopwords(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for line in text.lines() {
            let word = line.split('#').next().unwrap_or("").trim();
            if !word.is_empty() {
                self.stopwords.insert(word.to_lowercase());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub date: String,
    pub year: i32,
    pub tokens: Vec<String>,
}

impl Document {
    /// An empty document is excluded from training and inference.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub documents: Vec<Document>,
    pub warnings: Vec<IngestWarning>,
}

/// One line of the record format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
}

/// Lowercases, splits on anything that is not alphanumeric, and drops short
/// tokens and stopwords.
pub fn tokenize(text: &str, cfg: &PreprocessConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= cfg.min_token_len && !cfg.stopwords.contains(t))
        .collect()
}

fn all_digits(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|b| b.is_ascii_digit())
}

/// Extracts the year of a record date, or `None` when the date does not
/// parse under `mode`.
pub fn parse_year(date: &str, mode: DateMode) -> Option<i32> {
    let date = date.trim();
    let day_part = date.split('T').next().unwrap_or("");
    let parts: Vec<&str> = day_part.split('-').collect();
    let iso = match parts.as_slice() {
        [y] if all_digits(y, 4) => y.parse().ok(),
        [y, m] if all_digits(y, 4) && all_digits(m, 2) => {
            let year: i32 = y.parse().ok()?;
            let month: u32 = m.parse().ok()?;
            (1..=12).contains(&month).then_some(year)
        }
        [_, _, _] => chrono::NaiveDate::parse_from_str(day_part, "%Y-%m-%d")
            .ok()
            .filter(|_| all_digits(parts[0], 4))
            .map(|d| chrono::Datelike::year(&d)),
        _ => None,
    };
    if iso.is_some() || mode == DateMode::StrictIso {
        return iso;
    }
    if let Some((m, y)) = date.split_once('/') {
        if all_digits(y, 4) && !m.contains('/') {
            let month: u32 = m.parse().ok()?;
            return (1..=12).contains(&month).then(|| y.parse().ok()).flatten();
        }
    }
    for fmt in ["%d/%m/%Y", "%d.%m.%Y"] {
        if let Ok(d) = chrono::NaiveDate::parse_from_str(date, fmt) {
            return Some(chrono::Datelike::year(&d));
        }
    }
    None
}

fn parse_record(line: &str, cfg: &PreprocessConfig) -> std::result::Result<Document, String> {
    let record: Record = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let year = parse_year(&record.date, cfg.date_mode)
        .ok_or_else(|| format!("unparseable date {:?} in record {}", record.date, record.id))?;
    if let Some((lo, hi)) = cfg.year_range {
        if year < lo || year > hi {
            return Err(format!(
                "date {} of record {} outside collection range {lo}-{hi}",
                record.date, record.id
            ));
        }
    }
    let tokens = match (&record.text, &record.tokens) {
        (_, Some(tokens)) => tokens.iter().flat_map(|t| tokenize(t, cfg)).collect(),
        (Some(text), None) => tokenize(text, cfg),
        (None, None) => return Err(format!("record {} has neither text nor tokens", record.id)),
    };
    Ok(Document {
        id: record.id,
        date: record.date,
        year,
        tokens,
    })
}

/// Parses line-delimited records. Malformed lines become warnings; blank
/// lines are ignored.
pub fn ingest_str(input: &str, cfg: &PreprocessConfig) -> IngestReport {
    let lines: Vec<(usize, &str)> = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let parsed: Vec<(usize, std::result::Result<Document, String>)> = lines
        .par_iter()
        .map(|&(no, line)| (no, parse_record(line, cfg)))
        .collect();
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (line, result) in parsed {
        match result {
            Ok(doc) if !seen.insert(doc.id.clone()) => report.warnings.push(IngestWarning {
                line,
                message: format!("duplicate id {}", doc.id),
            }),
            Ok(doc) => report.documents.push(doc),
            Err(message) => report.warnings.push(IngestWarning { line, message }),
        }
    }
    report
}

pub fn ingest(path: &Path, cfg: &PreprocessConfig) -> Result<IngestReport> {
    let mut input = String::new();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        input.push_str(&line.map_err(|e| Error::io(path, e))?);
        input.push('\n');
    }
    Ok(ingest_str(&input, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabConfig {
    pub min_df: u64,
    pub max_df_ratio: f64,
    pub max_size: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 5,
            max_df_ratio: 0.7,
            max_size: 50_000,
        }
    }
}

/// Word index. Words are stored in lexicographic order, so indices are dense
/// in `[0, V)` and identical inputs give identical vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<u64>,
    term_freq: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from parallel columns. Words must be unique.
    pub fn from_parts(words: Vec<String>, doc_freq: Vec<u64>, term_freq: Vec<u64>) -> Result<Self> {
        if words.len() != doc_freq.len() || words.len() != term_freq.len() {
            return Err(Error::Consistency("vocabulary columns differ in length".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Consistency(format!("duplicate vocabulary word {w}")));
            }
        }
        let total_tokens = term_freq.iter().sum();
        Ok(Vocabulary {
            words,
            index,
            doc_freq,
            term_freq,
            total_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn term_freq(&self) -> &[u64] {
        &self.term_freq
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Corpus-wide empirical unigram p(w).
    pub fn unigram(&self) -> Vec<f64> {
        let total = self.total_tokens as f64;
        self.term_freq.iter().map(|&c| c as f64 / total).collect()
    }

    /// Checksum binding models to this vocabulary.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// TSV: `index, word, doc_freq, term_freq`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("index\tword\tdoc_freq\tterm_freq\n");
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{w}\t{}\t{}", self.doc_freq[i], self.term_freq[i]);
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (mut words, mut df, mut tf) = (Vec::new(), Vec::new(), Vec::new());
        for (no, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                return Err(Error::parse(path, no + 1, "expected index, word, doc_freq[, term_freq]"));
            }
            let idx: usize = cols[0].parse().map_err(|_| Error::parse(path, no + 1, "bad index"))?;
            if idx != words.len() {
                return Err(Error::parse(path, no + 1, "indices must be dense and ascending"));
            }
            words.push(cols[1].to_string());
            df.push(cols[2].parse().map_err(|_| Error::parse(path, no + 1, "bad doc_freq"))?);
            // Files without term frequencies fall back to document frequency.
            let t = match cols.get(3) {
                Some(c) => c.parse().map_err(|_| Error::parse(path, no + 1, "bad term_freq"))?,
                None => *df.last().unwrap(),
            };
            tf.push(t);
        }
        Vocabulary::from_parts(words, df, tf)
    }
}

pub fn build_vocabulary(docs: &[Document], cfg: &VocabConfig) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Config("cannot build a vocabulary from zero documents".into()));
    }
    if !(cfg.max_df_ratio > 0.0 && cfg.max_df_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "max_df_ratio must be in (0, 1], got {}",
            cfg.max_df_ratio
        )));
    }
    let mut df: HashMap<&str, u64> = HashMap::new();
    let mut tf: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for t in &doc.tokens {
            *tf.entry(t.as_str()).or_default() += 1;
            if seen.insert(t.as_str()) {
                *df.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let n = docs.len() as f64;
    let min_df = cfg.min_df.max(1);
    let mut kept: Vec<(&str, u64)> = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df && d as f64 / n <= cfg.max_df_ratio)
        .collect();
    if kept.len() > cfg.max_size {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(cfg.max_size);
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_df: cfg.min_df,
            max_df_ratio: cfg.max_df_ratio,
            max_size: cfg.max_size,
        });
    }
    kept.sort_by(|a, b| a.0.cmp(b.0));
    let words = kept.iter().map(|(w, _)| w.to_string()).collect();
    let doc_freq = kept.iter().map(|&(_, d)| d).collect();
    let term_freq = kept.iter().map(|(w, _)| tf[w]).collect();
    Vocabulary::from_parts(words, doc_freq, term_freq)
}

/// Sparse count vector of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDocument {
    pub doc_id: String,
    pub year: i32,
    /// `(word index, count)` sorted by word index; counts are >= 1.
    pub counts: Vec<(usize, u32)>,
    /// Tokens dropped as out-of-vocabulary.
    pub oov: usize,
}

impl BowDocument {
    pub fn new(doc_id: impl Into<String>, year: i32, mut counts: Vec<(usize, u32)>) -> Self {
        counts.sort_unstable_by_key(|&(w, _)| w);
        counts.retain(|&(_, c)| c > 0);
        BowDocument {
            doc_id: doc_id.into(),
            year,
            counts,
            oov: 0,
        }
    }

    /// Retained token count.
    pub fn len(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c as usize).sum()
    }

    /// Flag for documents with no in-vocabulary tokens.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Word indices in ascending order, one entry per token.
    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
    }
}

pub fn vectorize(doc: &Document, vocab: &Vocabulary) -> BowDocument {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    let mut oov = 0;
    for t in &doc.tokens {
        match vocab.id(t) {
            Some(i) => *counts.entry(i).or_default() += 1,
            None => oov += 1,
        }
    }
    BowDocument {
        doc_id: doc.id.clone(),
        year: doc.year,
        counts: counts.into_iter().collect(),
        oov,
    }
}

/// Vectorizes in parallel, preserving input order.
pub fn vectorize_all(docs: &[Document], vocab: &Vocabulary) -> Vec<BowDocument> {
    docs.par_iter().map(|d| vectorize(d, vocab)).collect()
}

/// Bag-of-words file: `doc_id \t year \t oov \t w:c w:c ...`.
pub fn bow_to_string(docs: &[BowDocument]) -> String {
    let mut out = String::new();
    for d in docs {
        let _ = write!(out, "{}\t{}\t{}\t", d.doc_id, d.year, d.oov);
        for (i, (w, c)) in d.counts.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{w}:{c}");
        }
        out.push('\n');
    }
    out
}

pub fn write_bow(path: &Path, docs: &[BowDocument]) -> Result<()> {
    fs::write(path, bow_to_string(docs)).map_err(|e| Error::io(path, e))
}

pub fn read_bow(path: &Path) -> Result<Vec<BowDocument>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::parse(path, no + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err("expected doc_id, year, oov, counts"));
        }
        let year = cols[1].parse().map_err(|_| err("bad year"))?;
        let oov = cols[2].parse().map_err(|_| err("bad oov count"))?;
        let mut counts = Vec::new();
        for pair in cols[3].split_whitespace() {
            let (w, c) = pair.split_once(':').ok_or_else(|| err("bad count pair"))?;
            let w = w.parse().map_err(|_| err("bad word index"))?;
            let c = c.parse().map_err(|_| err("bad count"))?;
            counts.push((w, c));
        }
        let mut doc = BowDocument::new(cols[0], year, counts);
        doc.oov = oov;
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSlice {
    pub start_year: i32,
    pub end_year: i32,
    pub docs: Vec<BowDocument>,
}

impl TimeSlice {
    pub fn label(&self) -> String {
        slice_label(self.start_year, self.end_year)
    }
}

pub fn slice_label(start: i32, end: i32) -> String {
    if start == end {
        start.to_string()
    } else {
        format!("{start}-{end}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSlicedCorpus {
    pub granularity: u32,
    pub slices: Vec<TimeSlice>,
}

impl TimeSlicedCorpus {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.slices.iter().map(TimeSlice::label).collect()
    }

    pub fn slice_of(&self, year: i32) -> Option<usize> {
        self.slices
            .iter()
            .position(|s| s.start_year <= year && year <= s.end_year)
    }

    pub fn documents(&self) -> impl Iterator<Item = &BowDocument> {
        self.slices.iter().flat_map(|s| s.docs.iter())
    }

    pub fn num_documents(&self) -> usize {
        self.slices.iter().map(|s| s.docs.len()).sum()
    }
}

/// Partitions documents into consecutive slices of `granularity` years,
/// starting at the earliest year. Documents inside a slice are ordered by
/// `(year, doc_id)`.
pub fn slice_by_year(docs: &[BowDocument], granularity: u32) -> Result<TimeSlicedCorpus> {
    if granularity == 0 {
        return Err(Error::Config("granularity must be at least 1 year".into()));
    }
    let Some(start) = docs.iter().map(|d| d.year).min() else {
        return Err(Error::Config("cannot slice an empty corpus".into()));
    };
    let end = docs.iter().map(|d| d.year).max().unwrap();
    let g = granularity as i32;
    let count = ((end - start) / g + 1) as usize;
    let mut slices: Vec<TimeSlice> = (0..count)
        .map(|i| TimeSlice {
            start_year: start + i as i32 * g,
            end_year: start + (i as i32 + 1) * g - 1,
            docs: Vec::new(),
        })
        .collect();
    for d in docs {
        slices[((d.year - start) / g) as usize].docs.push(d.clone());
    }
    for s in &mut slices {
        if s.docs.is_empty() {
            return Err(Error::EmptySlice { label: s.label() });
        }
        s.docs
            .sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.doc_id.cmp(&b.doc_id)));
    }
    Ok(TimeSlicedCorpus {
        granularity,
        slices,
    })
}

/// Anything with a year and a token length.
pub trait YearLength {
    fn year(&self) -> i32;
    fn token_len(&self) -> usize;
}

impl YearLength for Document {
    fn year(&self) -> i32 {
        self.year
    }
    fn token_len(&self) -> usize {
        self.tokens.len()
    }
}

impl YearLength for BowDocument {
    fn year(&self) -> i32 {
        self.year
    }
    fn token_len(&self) -> usize {
        self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearStats {
    pub year: i32,
    pub tokens: u64,
    pub articles: u64,
}

impl YearStats {
    pub fn mean_length(&self) -> f64 {
        self.tokens as f64 / self.articles as f64
    }
}

/// Per-year token and article counts, ascending by year.
pub fn corpus_stats<D: YearLength>(docs: &[D]) -> Vec<YearStats> {
    let mut by_year: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
    for d in docs {
        let e = by_year.entry(d.year()).or_default();
        e.0 += d.token_len() as u64;
        e.1 += 1;
    }
    by_year
        .into_iter()
        .map(|(year, (tokens, articles))| YearStats {
            year,
            tokens,
            articles,
        })
        .collect()
}

pub fn stats_csv(stats: &[YearStats]) -> String {
    let mut out = String::from("year,tokens,articles,mean_length\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{:.2}", s.year, s.tokens, s.articles, s.mean_length());
    }
    out
}
