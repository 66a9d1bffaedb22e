//! Per-year topic prominence and topic clusters.
//!
//! Prominence of topic k in year y is the year's summed topic contribution,
//! normalized by the summed contribution of all topics:
//!
//! ```text
//! P(z_k | y) = Σ_{d ∈ D_y} P(z_k | d) / Σ_i Σ_{d ∈ D_y} P(z_i | d)
//! ```
//!
//! With normalized thetas the denominator equals |D_y|, so the result is the
//! mean theta of the year. Both are computed and required to agree.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::Theta;
use crate::math;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProminenceSeries {
    pub years: Vec<i32>,
    /// One length-K simplex vector per year.
    pub values: Vec<Vec<f64>>,
    pub doc_counts: Vec<usize>,
}

impl ProminenceSeries {
    pub fn topics(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Prominence of topic `k` over the years.
    pub fn topic(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year");
        for k in 0..self.topics() {
            let _ = write!(out, ",topic_{k}");
        }
        out.push('\n');
        for (y, row) in self.years.iter().zip(&self.values) {
            let _ = write!(out, "{y}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn topic_prominence(thetas: &[Theta]) -> Result<ProminenceSeries> {
    let mut by_year: BTreeMap<i32, Vec<&Theta>> = BTreeMap::new();
    let k_count = thetas.first().map_or(0, |t| t.weights.len());
    for t in thetas {
        let sum: f64 = t.weights.iter().sum();
        if t.weights.len() != k_count || !math::is_simplex(&t.weights, SIMPLEX_TOL) {
            return Err(Error::NonSimplexTheta {
                doc_id: t.doc_id.clone(),
                sum,
            });
        }
        by_year.entry(t.year).or_default().push(t);
    }
    let mut series = ProminenceSeries {
        years: Vec::with_capacity(by_year.len()),
        values: Vec::with_capacity(by_year.len()),
        doc_counts: Vec::with_capacity(by_year.len()),
    };
    for (year, mut docs) in by_year {
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let numerators: Vec<f64> = (0..k_count)
            .map(|k| docs.iter().map(|d| d.weights[k]).sum())
            .collect();
        let denominator: f64 = (0..k_count)
            .map(|i| docs.iter().map(|d| d.weights[i]).sum::<f64>())
            .sum();
        let n = docs.len() as f64;
        let mut row = Vec::with_capacity(k_count);
        for &num in &numerators {
            let p = num / denominator;
            if (p - num / n).abs() > SIMPLEX_TOL {
                return Err(Error::Consistency(format!(
                    "year {year}: normalized prominence {p} disagrees with mean theta {}",
                    num / n
                )));
            }
            row.push(p);
        }
        series.years.push(year);
        series.values.push(row);
        series.doc_counts.push(docs.len());
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicCluster {
    pub name: String,
    pub members: Vec<usize>,
}

/// Reads `name: i, j, k` lines; `#` starts a comment.
pub fn parse_clusters(text: &str) -> std::result::Result<Vec<TopicCluster>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, list) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected `name: indices`", no + 1))?;
        let mut members = Vec::new();
        for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            members.push(
                part.parse()
                    .map_err(|_| format!("line {}: bad topic index {part:?}", no + 1))?,
            );
        }
        if members.is_empty() {
            return Err(format!("line {}: cluster {} has no members", no + 1, name.trim()));
        }
        members.sort_unstable();
        members.dedup();
        out.push(TopicCluster {
            name: name.trim().to_string(),
            members,
        });
    }
    Ok(out)
}

pub fn read_clusters(path: &Path) -> Result<Vec<TopicCluster>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clusters(&text).map_err(|m| Error::parse(path, 0, m))
}

/// Per-year summed prominence of the cluster's members.
pub fn cluster_prominence(series: &ProminenceSeries, cluster: &TopicCluster) -> Result<Vec<f64>> {
    let k_count = series.topics();
    if let Some(&bad) = cluster.members.iter().find(|&&m| m >= k_count) {
        return Err(Error::IndexOutOfRange {
            what: "topic",
            index: bad,
            len: k_count,
        });
    }
    Ok(series
        .values
        .iter()
        .map(|row| cluster.members.iter().map(|&m| row[m]).sum::<f64>().min(1.0))
        .collect())
}

pub fn clusters_csv(series: &ProminenceSeries, clusters: &[TopicCluster]) -> Result<String> {
    let columns = clusters
        .iter()
        .map(|c| cluster_prominence(series, c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("year");
    for c in clusters {
        let _ = write!(out, ",{}", c.name);
    }
    out.push('\n');
    for (i, y) in series.years.iter().enumerate() {
        let _ = write!(out, "{y}");
        for col in &columns {
            let _ = write!(out, ",{}", col[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Declining,
    Flat,
    Rising,
}

impl Trend {
    pub fn label(self) -> &'static str {
        match self {
            Trend::Declining => "declining",
            Trend::Flat => "flat",
            Trend::Rising => "rising",
        }
    }
}

/// Slopes within this many units per year count as flat.
pub const TREND_TOLERANCE: f64 = 1e-5;

/// Ordinary least-squares slope per year and its direction.
pub fn trend_summary(years: &[i32], values: &[f64]) -> Result<(f64, Trend)> {
    if years.len() != values.len() {
        return Err(Error::Consistency("years and values differ in length".into()));
    }
    if years.len() < 3 {
        return Err(Error::Config(format!(
            "trend needs at least 3 points, got {}",
            years.len()
        )));
    }
    let x: Vec<f64> = years.iter().map(|&y| y as f64).collect();
    let slope = math::ols_slope(&x, values);
    let trend = if slope < -TREND_TOLERANCE {
        Trend::Declining
    } else if slope > TREND_TOLERANCE {
        Trend::Rising
    } else {
        Trend::Flat
    };
    Ok((slope, trend))
}
