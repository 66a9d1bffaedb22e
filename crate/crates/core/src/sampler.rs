//! Per-year balanced sampling of a training subset.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::BowDocument;
use crate::error::{Error, Result};
use crate::rng::{self, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleUnit {
    Articles,
    #[default]
    Tokens,
}

impl FromStr for SampleUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "articles" => Ok(SampleUnit::Articles),
            "tokens" => Ok(SampleUnit::Tokens),
            other => Err(Error::Config(format!("unknown sample unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplePlan {
    pub unit: SampleUnit,
    pub per_year_budget: u64,
    pub seed: u64,
}

impl SamplePlan {
    fn mass(&self, doc: &BowDocument) -> u64 {
        match self.unit {
            SampleUnit::Articles => 1,
            SampleUnit::Tokens => doc.len() as u64,
        }
    }
}

/// Draws documents uniformly without replacement within each year until the
/// year's budget is reached. In token mode the document that crosses the
/// budget is kept, so the budget is a lower bound on over-budget years.
///
/// Each year uses its own stream derived from `(seed, year)`, and documents
/// are put in id order before shuffling, so the result does not depend on
/// input order or thread count. Output is ordered by `(year, doc_id)`.
pub fn balanced_sample(docs: &[BowDocument], plan: &SamplePlan) -> Result<Vec<BowDocument>> {
    if plan.per_year_budget == 0 {
        return Err(Error::Config("per-year budget must be positive".into()));
    }
    let mut by_year: BTreeMap<i32, Vec<&BowDocument>> = BTreeMap::new();
    for d in docs {
        by_year.entry(d.year).or_default().push(d);
    }
    let years: Vec<(i32, Vec<&BowDocument>)> = by_year.into_iter().collect();
    let picked: Vec<Vec<BowDocument>> = years
        .into_par_iter()
        .map(|(year, mut group)| {
            group.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
            let total: u64 = group.iter().map(|d| plan.mass(d)).sum();
            let mut chosen: Vec<&BowDocument> = if total <= plan.per_year_budget {
                group
            } else {
                let mut stream = rng::stream(plan.seed, &[Label::Str("sample"), Label::Int(year as i64)]);
                group.shuffle(&mut stream);
                let mut mass = 0;
                let mut chosen = Vec::new();
                for d in group {
                    if mass >= plan.per_year_budget {
                        break;
                    }
                    mass += plan.mass(d);
                    chosen.push(d);
                }
                chosen
            };
            chosen.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
            chosen.into_iter().cloned().collect()
        })
        .collect();
    Ok(picked.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearKept {
    pub year: i32,
    pub kept_articles: u64,
    pub kept_tokens: u64,
    /// Kept share of the year's tokens.
    pub kept_fraction: f64,
}

/// Per-year bookkeeping of a sample against its source. Fails when the
/// sample contains a document absent from the original.
pub fn sample_report(original: &[BowDocument], sampled: &[BowDocument]) -> Result<Vec<YearKept>> {
    let index: HashMap<&str, &BowDocument> = original.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut totals: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
    for d in original {
        totals.entry(d.year).or_default().1 += d.len() as u64;
    }
    for d in sampled {
        match index.get(d.doc_id.as_str()) {
            Some(o) if o.year == d.year && o.counts == d.counts => {}
            _ => {
                return Err(Error::Consistency(format!(
                    "sampled document {} is not part of the original collection",
                    d.doc_id
                )))
            }
        }
    }
    let mut kept: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
    for d in sampled {
        let e = kept.entry(d.year).or_default();
        e.0 += 1;
        e.1 += d.len() as u64;
    }
    Ok(totals
        .into_iter()
        .map(|(year, (_, total_tokens))| {
            let (articles, tokens) = kept.get(&year).copied().unwrap_or_default();
            let kept_fraction = if total_tokens == 0 {
                if articles > 0 { 1.0 } else { 0.0 }
            } else {
                tokens as f64 / total_tokens as f64
            };
            YearKept {
                year,
                kept_articles: articles,
                kept_tokens: tokens,
                kept_fraction,
            }
        })
        .collect())
}

pub fn report_csv(rows: &[YearKept]) -> String {
    let mut out = String::from("year,kept_articles,kept_tokens,kept_fraction\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6}",
            r.year, r.kept_articles, r.kept_tokens, r.kept_fraction
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn year_docs(year: i32, n: usize, len: u32) -> Vec<BowDocument> {
        (0..n)
            .map(|i| BowDocument::new(format!("{year}-{i:04}"), year, vec![(0, len)]))
            .collect()
    }

    fn plan(unit: SampleUnit, budget: u64) -> SamplePlan {
        SamplePlan {
            unit,
            per_year_budget: budget,
            seed: 42,
        }
    }

    #[test]
    fn under_budget_year_is_kept_whole() {
        let docs = year_docs(1860, 80, 3);
        let s = balanced_sample(&docs, &plan(SampleUnit::Articles, 100)).unwrap();
        assert_eq!(s.len(), 80);
    }

    #[test]
    fn article_budget_caps_large_year() {
        let mut docs = year_docs(1860, 1000, 3);
        docs.extend(year_docs(1861, 100, 3));
        let s = balanced_sample(&docs, &plan(SampleUnit::Articles, 100)).unwrap();
        assert_eq!(s.iter().filter(|d| d.year == 1860).count(), 100);
        assert_eq!(s.iter().filter(|d| d.year == 1861).count(), 100);
        assert!(s.windows(2).all(|w| (w[0].year, &w[0].doc_id) < (w[1].year, &w[1].doc_id)));
    }

    #[test]
    fn zero_budget_is_fatal() {
        assert!(balanced_sample(&year_docs(1860, 3, 1), &plan(SampleUnit::Tokens, 0)).is_err());
    }

    #[test]
    fn identical_inputs_report_full_fraction() {
        let docs = year_docs(1860, 5, 4);
        let r = sample_report(&docs, &docs).unwrap();
        assert_eq!(r[0].kept_fraction, 1.0);
        assert_eq!(r[0].kept_tokens, 20);
    }

    #[test]
    fn foreign_sample_is_rejected() {
        let a = year_docs(1860, 5, 4);
        let b = year_docs(1861, 5, 4);
        assert!(matches!(sample_report(&a, &b), Err(Error::Consistency(_))));
    }

    #[test]
    fn input_order_does_not_matter() {
        let mut docs = year_docs(1860, 300, 2);
        let p = plan(SampleUnit::Tokens, 50);
        let a = balanced_sample(&docs, &p).unwrap();
        docs.reverse();
        let b = balanced_sample(&docs, &p).unwrap();
        assert_eq!(a, b);
    }
}
