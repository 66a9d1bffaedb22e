//! Acceptance criteria. Each test prints one PASS/FAIL line and fails on FAIL.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use diachron::cli::{run, RunManifest};
use diachron::corpus::BowDocument;
use diachron::diagnostics::{independent_leakage, stretch_score, train_per_slice, OnsetSpec};
use diachron::dtm::{chain_smoothness, train_dtm_from, DtmConfig, DtmModel};
use diachron::inference::{FoldInConfig, Theta};
use diachron::lda::{infer_all, train_lda, LdaConfig, LdaModel};
use diachron::math::{hungarian, ols_slope, pearson, total_variation};
use diachron::prominence::{cluster_prominence, topic_prominence, TopicCluster};
use diachron::rng::{stream, Label};
use diachron::sampler::{balanced_sample, SamplePlan, SampleUnit};
use diachron::synthgen::{generate, Dynamics, Scenario, ScenarioSpec};
use diachron::TimeSlicedCorpus;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

/// Hungarian matching of planted topics to learned topics by total variation.
fn match_planted(planted: &[Vec<f64>], learned: &[Vec<f64>]) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = planted
        .iter()
        .map(|p| learned.iter().map(|q| total_variation(p, q)).collect())
        .collect();
    hungarian(&cost)
}

fn lda_topics(m: &LdaModel) -> Vec<Vec<f64>> {
    (0..m.topics).map(|k| m.topic(k).to_vec()).collect()
}

fn quick_lda(topics: usize, alpha: f64, seed: u64) -> LdaConfig {
    LdaConfig {
        alpha,
        burn_in: 200,
        samples: 50,
        thin: 5,
        seed,
        ..LdaConfig::with_topics(topics)
    }
}

#[test]
fn criterion_1_prominence_fidelity() {
    let mut rng = stream(1, &[Label::Str("acceptance-1")]);
    let thetas: Vec<Theta> = (0..1000)
        .map(|i| {
            let raw: Vec<f64> = (0..8).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = raw.iter().sum();
            Theta {
                doc_id: format!("doc{i:04}"),
                year: 1900 + rng.random_range(0..10),
                weights: raw.iter().map(|x| x / total).collect(),
                uninformed: false,
            }
        })
        .collect();
    let start = Instant::now();
    let series = topic_prominence(&thetas).unwrap();
    let elapsed = start.elapsed();

    let mut worst_cell = 0.0f64;
    let mut worst_sum = 0.0f64;
    for (y, row) in series.years.iter().zip(&series.values) {
        let docs: Vec<&Theta> = thetas.iter().filter(|t| t.year == *y).collect();
        let mut denominator = 0.0;
        for i in 0..8 {
            for d in &docs {
                denominator += d.weights[i];
            }
        }
        for (k, cell) in row.iter().enumerate() {
            let mut numerator = 0.0;
            for d in &docs {
                numerator += d.weights[k];
            }
            worst_cell = worst_cell.max((cell - numerator / denominator).abs());
        }
        worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    let pass = series.years.len() == 10 && worst_cell <= 1e-12 && worst_sum <= 1e-9 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "prominence fidelity",
        pass,
        format!("max cell error {worst_cell:.2e}, max row-sum error {worst_sum:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_2_lda_recovery() {
    let mut spec = ScenarioSpec::constant(1, 5, 100, 2024);
    spec.docs_per_slice = 2000;
    spec.tokens_per_doc = 100;
    let scenario = generate(&spec).unwrap();
    let cfg = LdaConfig {
        seed: 2024,
        ..LdaConfig::with_topics(5)
    };
    let start = Instant::now();
    let model = single_threaded(|| train_lda(&scenario.bow, &scenario.vocab, &cfg).unwrap());
    let elapsed = start.elapsed();
    let planted = &scenario.truth.topics[0];
    let learned = lda_topics(&model);
    let assignment = match_planted(planted, &learned);
    let mean_tv = assignment
        .iter()
        .enumerate()
        .map(|(p, &k)| total_variation(&planted[p], &learned[k]))
        .sum::<f64>()
        / 5.0;
    let pass = mean_tv <= 0.15 && elapsed < Duration::from_secs(300);
    verdict(
        2,
        "LDA recovery",
        pass,
        format!("mean matched TV {mean_tv:.4} (limit 0.15), {elapsed:.1?} single-threaded"),
    );
}

#[test]
fn criterion_3_trend_recovery() {
    let mut spec = ScenarioSpec::linear_trend(20, 5, 100, 33);
    spec.docs_per_slice = 100;
    spec.tokens_per_doc = 80;
    let scenario = generate(&spec).unwrap();
    let model = train_lda(&scenario.bow, &scenario.vocab, &quick_lda(5, 0.5, 33)).unwrap();
    let thetas = infer_all(
        &model,
        &scenario.vocab,
        &scenario.bow,
        &FoldInConfig {
            seed: 33,
            ..Default::default()
        },
    )
    .unwrap();
    let series = topic_prominence(&thetas).unwrap();
    let assignment = match_planted(&scenario.truth.topics[0], &lda_topics(&model));
    let years: Vec<f64> = series.years.iter().map(|&y| y as f64).collect();

    let mut details = Vec::new();
    let mut pass = true;
    for (planted, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let cluster = TopicCluster {
            name: format!("planted_{planted}"),
            members: vec![assignment[planted]],
        };
        let recovered = cluster_prominence(&series, &cluster).unwrap();
        let truth = scenario.truth.prominence.topic(planted);
        let r = pearson(&recovered, &truth).unwrap_or(f64::NAN);
        let slope = ols_slope(&years, &recovered);
        pass &= r >= 0.9 && slope * sign > 0.0;
        details.push(format!("topic {planted}: r={r:.3} slope={slope:+.4}"));
    }
    verdict(3, "prominence trend recovery", pass, details.join("; "));
}

/// Static variational fit: the same document updates as the DTM, with a
/// maximum-likelihood topic update instead of the chain M-step.
fn static_fit(scenario: &Scenario, init: &LdaModel, cfg: &DtmConfig) -> Vec<Vec<f64>> {
    use statrs::function::gamma::digamma;
    let (k_count, v) = (init.topics, init.vocab_size);
    let docs: Vec<&BowDocument> = scenario.corpus.documents().collect();
    let mut topics: Vec<Vec<f64>> = (0..k_count)
        .map(|k| {
            let row: Vec<f64> = init.topic(k).iter().map(|p| p + 1e-10).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|p| p / s).collect()
        })
        .collect();
    let mut gammas: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| vec![cfg.alpha + d.len() as f64 / k_count as f64; k_count])
        .collect();
    for _ in 0..cfg.iters {
        let log_topics: Vec<Vec<f64>> = topics.iter().map(|t| t.iter().map(|p| p.max(1e-300).ln()).collect()).collect();
        let mut counts = vec![vec![0.0; v]; k_count];
        for (doc, gamma) in docs.iter().zip(gammas.iter_mut()) {
            let mut resp = vec![vec![0.0; k_count]; doc.counts.len()];
            for _ in 0..cfg.estep_max_iters {
                let total = digamma(gamma.iter().sum());
                let elog: Vec<f64> = gamma.iter().map(|&g| digamma(g) - total).collect();
                let mut next = vec![cfg.alpha; k_count];
                for (i, &(w, c)) in doc.counts.iter().enumerate() {
                    let scores: Vec<f64> = (0..k_count).map(|k| elog[k] + log_topics[k][w]).collect();
                    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                    let z: f64 = exps.iter().sum();
                    for k in 0..k_count {
                        resp[i][k] = exps[k] / z;
                        next[k] += c as f64 * resp[i][k];
                    }
                }
                let delta: f64 = gamma.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / k_count as f64;
                *gamma = next;
                if delta < cfg.estep_tol {
                    break;
                }
            }
            for (i, &(w, c)) in doc.counts.iter().enumerate() {
                for k in 0..k_count {
                    counts[k][w] += c as f64 * resp[i][k];
                }
            }
        }
        topics = counts
            .into_iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|c| c / s).collect()
            })
            .collect();
    }
    topics
}

fn dtm_topics_at(model: &DtmModel, t: usize) -> Vec<Vec<f64>> {
    (0..model.topics).map(|k| model.topic_at_slice(k, t).unwrap()).collect()
}

fn mean_adjacent_js(model: &DtmModel) -> f64 {
    let all: Vec<f64> = (0..model.topics).flat_map(|k| chain_smoothness(model, k).unwrap()).collect();
    all.iter().sum::<f64>() / all.len() as f64
}

fn replicate(docs: &[BowDocument], slices: usize) -> TimeSlicedCorpus {
    let mut out = Vec::new();
    for t in 0..slices {
        for d in docs {
            out.push(BowDocument::new(d.doc_id.clone(), 1900 + t as i32, d.counts.clone()));
        }
    }
    diachron::corpus::slice_by_year(&out, 1).unwrap()
}

#[test]
fn criterion_4_dtm_degenerate_cases() {
    // Single slice against the static fit.
    let mut spec = ScenarioSpec::constant(1, 3, 30, 4);
    spec.docs_per_slice = 200;
    spec.tokens_per_doc = 50;
    let single = generate(&spec).unwrap();
    let init = train_lda(&single.bow, &single.vocab, &quick_lda(3, 0.5, 4)).unwrap();
    let cfg = DtmConfig {
        iters: 30,
        ..DtmConfig::with_topics(3)
    };
    let dtm = train_dtm_from(&single.corpus, &single.vocab, &cfg, &init).unwrap();
    let fit = static_fit(&single, &init, &cfg);
    let static_tv = dtm_topics_at(&dtm, 0)
        .iter()
        .zip(&fit)
        .map(|(a, b)| total_variation(a, b))
        .fold(0.0, f64::max);

    // Near-zero chain variance on identical slices.
    let mut spec = ScenarioSpec::constant(1, 3, 30, 5);
    spec.docs_per_slice = 60;
    spec.tokens_per_doc = 40;
    let base = generate(&spec).unwrap();
    let replicated = replicate(&base.bow, 4);
    let init = train_lda(&base.bow, &base.vocab, &quick_lda(3, 0.5, 5)).unwrap();
    let stiff = train_dtm_from(
        &replicated,
        &base.vocab,
        &DtmConfig {
            chain_variance: 1e-6,
            iters: 10,
            ..DtmConfig::with_topics(3)
        },
        &init,
    )
    .unwrap();
    let stiff_js = (0..3)
        .flat_map(|k| chain_smoothness(&stiff, k).unwrap())
        .fold(0.0, f64::max);
    let mut stiff_tv = 0.0f64;
    for k in 0..3 {
        let first = stiff.topic_at_slice(k, 0).unwrap();
        for t in 1..stiff.num_slices() {
            stiff_tv = stiff_tv.max(total_variation(&stiff.topic_at_slice(k, t).unwrap(), &first));
        }
    }

    // Coupling strength on a drifting instance.
    let mut spec = ScenarioSpec::constant(5, 3, 30, 6);
    spec.docs_per_slice = 60;
    spec.tokens_per_doc = 40;
    spec.dynamics = vec![Dynamics::Drift { rate: 3.0 }, Dynamics::Constant, Dynamics::Drift { rate: -2.0 }];
    let drift = generate(&spec).unwrap();
    let init = train_lda(&drift.bow, &drift.vocab, &quick_lda(3, 0.5, 6)).unwrap();
    let js_at = |chain_variance: f64| {
        let cfg = DtmConfig {
            chain_variance,
            iters: 10,
            ..DtmConfig::with_topics(3)
        };
        mean_adjacent_js(&train_dtm_from(&drift.corpus, &drift.vocab, &cfg, &init).unwrap())
    };
    let (low, high) = (js_at(1e-4), js_at(1e-1));

    let pass = static_tv <= 1e-3 && stiff_js <= 0.02 && stiff_tv <= 0.02 && low <= high;
    verdict(
        4,
        "DTM degenerate checks",
        pass,
        format!(
            "T=1 vs static max TV {static_tv:.2e} (limit 1e-3); σ²=1e-6 replicated max adjacent JS {stiff_js:.2e}, max TV to first slice {stiff_tv:.2e} (limits 0.02); \
             mean adjacent JS σ²=1e-4 {low:.2e} <= σ²=1e-1 {high:.2e}"
        ),
    );
}

#[test]
fn criterion_5_stretching() {
    let start = Instant::now();
    let onset_slice = 4;
    let mut spec = ScenarioSpec::onset(8, 4, 60, onset_slice, 55);
    spec.docs_per_slice = 80;
    spec.tokens_per_doc = 60;
    let scenario = generate(&spec).unwrap();
    let onset_topic = 3;
    let onset = OnsetSpec {
        words: spec.block(onset_topic).collect(),
        slice: onset_slice,
    };
    let lda_cfg = quick_lda(4, 0.1, 55);

    let pooled = train_lda(&scenario.bow, &scenario.vocab, &lda_cfg).unwrap();
    let planted = &scenario.truth.topics[onset_slice];
    let lda_match = match_planted(planted, &lda_topics(&pooled))[onset_topic];
    let thetas = infer_all(
        &pooled,
        &scenario.vocab,
        &scenario.bow,
        &FoldInConfig {
            seed: 55,
            ..Default::default()
        },
    )
    .unwrap();
    let series = topic_prominence(&thetas).unwrap();
    let early_prominence = series.values[..onset_slice]
        .iter()
        .map(|row| row[lda_match])
        .fold(0.0, f64::max);

    let dtm = train_dtm_from(
        &scenario.corpus,
        &scenario.vocab,
        &DtmConfig {
            iters: 10,
            ..DtmConfig::with_topics(4)
        },
        &pooled,
    )
    .unwrap();
    let dtm_match = match_planted(planted, &dtm_topics_at(&dtm, onset_slice))[onset_topic];
    let report = stretch_score(&dtm, &scenario.vocab, dtm_match, 10, Some(&onset)).unwrap();
    let dtm_leak = report.onset_leakage.unwrap();
    let per_slice = train_per_slice(&scenario.corpus, &scenario.vocab, &lda_cfg).unwrap();
    let baseline = independent_leakage(&per_slice, &onset).unwrap();
    let elapsed = start.elapsed();

    let pass = dtm_leak > baseline && early_prominence <= 0.05 && elapsed < Duration::from_secs(600);
    verdict(
        5,
        "stretching reproduction",
        pass,
        format!(
            "DTM leakage {dtm_leak:.4} > per-slice LDA {baseline:.4}; LDA prominence before onset max {early_prominence:.4} (limit 0.05); {elapsed:.1?}"
        ),
    );
}

#[test]
fn criterion_6_balance_guarantee() {
    let mut failures = Vec::new();
    let mut checked_years = 0;
    for corpus_no in 0..10i64 {
        let mut rng = stream(6, &[Label::Str("acceptance-6"), Label::Int(corpus_no)]);
        let mut docs = Vec::new();
        for year in 1850..1860 {
            let count = (2.0f64.powf((year - 1850) as f64 * 0.7) as usize).max(1) + rng.random_range(0..5);
            for i in 0..count {
                let len = rng.random_range(1..120u32);
                docs.push(BowDocument::new(format!("c{corpus_no}-{year}-{i:04}"), year, vec![(0, len)]));
            }
        }
        let max_len = docs.iter().map(|d| d.len() as u64).max().unwrap();
        let budget = rng.random_range(200..2000u64);
        let plan = SamplePlan {
            unit: SampleUnit::Tokens,
            per_year_budget: budget,
            seed: corpus_no as u64,
        };
        let sample = balanced_sample(&docs, &plan).unwrap();
        let ids: std::collections::HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        if !sample.iter().all(|d| ids.contains(d.doc_id.as_str())) {
            failures.push(format!("corpus {corpus_no}: not a subset"));
        }
        if balanced_sample(&docs, &plan).unwrap() != sample {
            failures.push(format!("corpus {corpus_no}: not deterministic"));
        }
        let mut mass: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
        for d in &docs {
            mass.entry(d.year).or_default().1 += d.len() as u64;
        }
        for d in &sample {
            mass.entry(d.year).or_default().0 += d.len() as u64;
        }
        for (year, (kept, total)) in mass {
            if total > budget {
                checked_years += 1;
                if kept < budget || kept >= budget + max_len {
                    failures.push(format!("corpus {corpus_no} year {year}: kept {kept}, budget {budget}"));
                }
            } else if kept != total {
                failures.push(format!("corpus {corpus_no} year {year}: under-budget year not kept whole"));
            }
        }
    }
    let pass = failures.is_empty() && checked_years > 0;
    verdict(
        6,
        "balance guarantee",
        pass,
        if pass {
            format!("10 corpora, {checked_years} over-budget years within [budget, budget + max_doc_len)")
        } else {
            failures.join("; ")
        },
    );
}

fn run_pipeline(root: &Path, shared: &Path) {
    let p = |n: &str| root.join(n).to_str().unwrap().to_string();
    let sh = |n: &str| shared.join(n).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--preset".into(), "onset".into(), "--slices".into(), "4".into(), "--topics".into(),
            "3".into(), "--vocab-size".into(), "30".into(), "--docs-per-slice".into(), "30".into(),
            "--tokens-per-doc".into(), "30".into(), "--out".into(), p("synth")],
        vec!["ingest".into(), "--input".into(), p("synth/corpus.jsonl"), "--min-df".into(), "1".into(),
            "--max-df-ratio".into(), "1".into(), "--out".into(), p("ingest")],
        vec!["stats".into(), "--input".into(), p("synth/corpus.jsonl"), "--out".into(), p("stats")],
        vec!["sample".into(), "--bow".into(), p("ingest/bow.tsv"), "--budget".into(), "600".into(), "--out".into(),
            p("sample")],
        vec!["train-lda".into(), "--bow".into(), p("sample/sample.tsv"), "--vocab".into(), p("ingest/vocab.tsv"),
            "--topics".into(), "3".into(), "--burn-in".into(), "40".into(), "--samples".into(), "10".into(),
            "--thin".into(), "2".into(), "--out".into(), p("lda")],
        vec!["train-lda".into(), "--bow".into(), p("sample/sample.tsv"), "--vocab".into(), p("ingest/vocab.tsv"),
            "--topics".into(), "3".into(), "--burn-in".into(), "20".into(), "--samples".into(), "4".into(),
            "--partitions".into(), "3".into(), "--out".into(), p("lda-partitioned")],
        vec!["train-dtm".into(), "--bow".into(), p("ingest/bow.tsv"), "--vocab".into(), p("ingest/vocab.tsv"),
            "--topics".into(), "3".into(), "--iters".into(), "3".into(), "--init-burn-in".into(), "30".into(),
            "--init-samples".into(), "10".into(), "--out".into(), p("dtm")],
        vec!["infer".into(), "--model".into(), p("lda/lda.tsv"), "--bow".into(), p("ingest/bow.tsv"), "--vocab".into(),
            p("ingest/vocab.tsv"), "--out".into(), p("infer")],
        vec!["infer".into(), "--model".into(), p("dtm/dtm.tsv"), "--bow".into(), p("ingest/bow.tsv"), "--vocab".into(),
            p("ingest/vocab.tsv"), "--out".into(), p("infer-dtm")],
        vec!["prominence".into(), "--thetas".into(), p("infer/thetas.csv"), "--clusters".into(), sh("clusters.txt"),
            "--out".into(), p("prominence")],
        vec!["heatmap".into(), "--model".into(), p("dtm/dtm.tsv"), "--vocab".into(), p("ingest/vocab.tsv"),
            "--topic".into(), "1".into(), "--svg".into(), "--out".into(), p("heatmap")],
        vec!["stretch".into(), "--model".into(), p("dtm/dtm.tsv"), "--vocab".into(), p("ingest/vocab.tsv"),
            "--topic".into(), "2".into(), "--onset-words".into(), "w020,w025".into(), "--onset-slice".into(),
            "1862".into(), "--out".into(), p("stretch")],
        vec!["match".into(), "--lda".into(), p("lda/lda.tsv"), "--dtm".into(), p("dtm/dtm.tsv"), "--out".into(),
            p("match")],
    ];
    for step in steps {
        let mut args = vec!["diachron".to_string(), "--threads".into(), "1".into(), "--seed".into(), "77".into()];
        args.extend(step);
        assert_eq!(run(args.clone()), 0, "{args:?}");
    }
}

fn normalized_manifest(path: &Path) -> String {
    let mut m = RunManifest::read(path.parent().unwrap()).unwrap();
    m.started_unix = 0;
    m.wall_clock_secs = 0.0;
    let checksums: Vec<String> = m.inputs.values().cloned().collect();
    m.inputs = checksums.into_iter().enumerate().map(|(i, c)| (i.to_string(), c)).collect();
    serde_json::to_string(&m).unwrap()
}

fn artifacts(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for stage in fs::read_dir(root).unwrap() {
        let stage = stage.unwrap().path();
        for file in fs::read_dir(&stage).unwrap() {
            let file = file.unwrap().path();
            let key = file.strip_prefix(root).unwrap().display().to_string();
            let body = if file.file_name().unwrap() == RunManifest::FILE {
                normalized_manifest(&file)
            } else {
                fs::read_to_string(&file).unwrap()
            };
            out.insert(key, body);
        }
    }
    out
}

#[test]
fn criterion_7_determinism() {
    let shared = tempfile::tempdir().unwrap();
    fs::write(shared.path().join("clusters.txt"), "first: 0\nrest: 1, 2\n").unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path(), shared.path());
    run_pipeline(b.path(), shared.path());
    let (first, second) = (artifacts(a.path()), artifacts(b.path()));
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    let pass = differing.is_empty() && first.len() == second.len() && first.len() >= 30;
    verdict(
        7,
        "determinism suite",
        pass,
        if pass {
            format!("{} artifacts byte-identical across two --threads 1 runs (manifest wall-clock fields excluded)", first.len())
        } else {
            format!("differing artifacts: {differing:?}")
        },
    );
}

#[test]
fn criterion_8_elbo_monotone() {
    let mut scenarios = Vec::new();
    for (name, mut spec) in [
        ("constant", ScenarioSpec::constant(4, 3, 30, 81)),
        ("linear_trend", ScenarioSpec::linear_trend(6, 3, 30, 82)),
        ("onset", ScenarioSpec::onset(5, 3, 30, 2, 83)),
        ("drift", ScenarioSpec::constant(4, 3, 30, 84)),
        ("single_slice", ScenarioSpec::constant(1, 3, 30, 85)),
    ] {
        if name == "drift" {
            spec.dynamics[0] = Dynamics::Drift { rate: 3.0 };
        }
        spec.docs_per_slice = 50;
        spec.tokens_per_doc = 40;
        scenarios.push((name, spec));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut details = Vec::new();
    for (name, spec) in scenarios {
        let s = generate(&spec).unwrap();
        let init = train_lda(&s.bow, &s.vocab, &quick_lda(3, 0.5, spec.seed)).unwrap();
        for chain_variance in [1e-4, 5e-3, 1e-1] {
            let cfg = DtmConfig {
                chain_variance,
                iters: 12,
                ..DtmConfig::with_topics(3)
            };
            let model = train_dtm_from(&s.corpus, &s.vocab, &cfg, &init).unwrap();
            let drop = model
                .elbo_trace
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(drop);
            if drop > 1e-6 {
                details.push(format!("{name} σ²={chain_variance}: drop {drop:.3e}"));
            }
        }
    }
    let pass = details.is_empty();
    verdict(
        8,
        "variational objective monotonicity",
        pass,
        if pass {
            format!("5 scenarios x 3 chain variances, smallest per-iteration change {:+.3e} (slack 1e-6)", -worst)
        } else {
            details.join("; ")
        },
    );
}
