use std::fs;
use std::path::Path;
use std::process::Command;

use diachron::cli::{run, RunManifest};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diachron"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stats_on_two_document_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    fs::write(
        &input,
        "{\"id\":\"a\",\"date\":\"1860-03-01\",\"text\":\"aa bb cc\"}\n\
         {\"id\":\"b\",\"date\":\"1860-07-01\",\"text\":\"aa bb cc dd ee\"}\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(["diachron", "stats", "--input", s(&input), "--out", s(&out)]), 0);
    assert_eq!(
        fs::read_to_string(out.join("stats.csv")).unwrap(),
        "year,tokens,articles,mean_length\n1860,8,2,4.00\n"
    );
    let manifest = RunManifest::read(&out).unwrap();
    assert_eq!(manifest.command, "stats");
    assert_eq!(manifest.inputs.len(), 1);
}

#[test]
fn prominence_matches_double_sum() {
    let dir = tempfile::tempdir().unwrap();
    let thetas = dir.path().join("thetas.csv");
    let rows = [
        ("d1", 1860, [0.2, 0.3, 0.5]),
        ("d2", 1860, [0.6, 0.1, 0.3]),
        ("d3", 1861, [0.1, 0.1, 0.8]),
        ("d4", 1861, [0.25, 0.25, 0.5]),
        ("d5", 1861, [0.9, 0.05, 0.05]),
    ];
    let mut body = String::from("doc_id,year,topic_0,topic_1,topic_2\n");
    for (id, y, w) in &rows {
        body.push_str(&format!("{id},{y},{},{},{}\n", w[0], w[1], w[2]));
    }
    fs::write(&thetas, body).unwrap();
    let out = dir.path().join("p");
    assert_eq!(run(["diachron", "prominence", "--thetas", s(&thetas), "--out", s(&out)]), 0);
    let csv = fs::read_to_string(out.join("prominence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    for (line, year) in lines.iter().zip([1860, 1861]) {
        let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        let docs: Vec<&[f64; 3]> = rows.iter().filter(|r| r.1 == year).map(|r| &r.2).collect();
        let mut denom = 0.0;
        for i in 0..3 {
            for d in &docs {
                denom += d[i];
            }
        }
        for k in 0..3 {
            let num: f64 = docs.iter().map(|d| d[k]).sum();
            assert!((cells[k] - num / denom).abs() < 1e-12);
        }
    }
}

#[test]
fn usage_errors_exit_two() {
    let status = bin().args(["infer", "--bow", "b", "--vocab", "v", "--out", "o"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["train-lda", "--no-such-flag"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["prominence", "--thetas", "/nonexistent/thetas.csv", "--out"])
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn flags_override_config_and_environment_sets_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    fs::write(&config, "seed = 4\n[sample]\nbudget = 10\nunit = \"articles\"\n").unwrap();
    let synth = dir.path().join("synth");
    let status = bin()
        .args(["synth", "--preset", "trend", "--slices", "3", "--docs-per-slice", "30", "--tokens-per-doc", "5"])
        .arg("--out")
        .arg(&synth)
        .env("DIACHRON_SEED", "21")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(RunManifest::read(&synth).unwrap().seed, 21);

    let ingested = dir.path().join("ingest");
    assert_eq!(
        run([
            "diachron",
            "ingest",
            "--input",
            s(&synth.join("corpus.jsonl")),
            "--min-df",
            "1",
            "--max-df-ratio",
            "1.0",
            "--out",
            s(&ingested),
        ]),
        0
    );
    let sampled = dir.path().join("sample");
    let code = run([
        "diachron",
        "--config",
        s(&config),
        "sample",
        "--bow",
        s(&ingested.join("bow.tsv")),
        "--budget",
        "7",
        "--out",
        s(&sampled),
    ]);
    assert_eq!(code, 0);
    let manifest = RunManifest::read(&sampled).unwrap();
    assert_eq!(manifest.seed, 4);
    assert_eq!(manifest.config["budget"], 7);
    assert_eq!(manifest.config["unit"], "articles");
    let report = fs::read_to_string(sampled.join("sample_report.csv")).unwrap();
    for line in report.lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("7"));
    }
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.toml");
    fs::write(&config, "[lda]\ntopcs = 3\n").unwrap();
    let code = run(["diachron", "--config", s(&config), "synth", "--out", s(&dir.path().join("o"))]);
    assert_eq!(code, 2);
}

#[test]
fn full_pipeline_produces_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let ok = |args: &[&str]| {
        let mut full = vec!["diachron", "--threads", "2", "--seed", "3"];
        full.extend_from_slice(args);
        assert_eq!(run(full.clone()), 0, "{full:?}");
    };
    ok(&["synth", "--preset", "onset", "--slices", "4", "--topics", "3", "--vocab-size", "30",
        "--docs-per-slice", "25", "--tokens-per-doc", "30", "--out", s(&p("synth"))]);
    ok(&["ingest", "--input", s(&p("synth/corpus.jsonl")), "--min-df", "1", "--max-df-ratio", "1", "--out", s(&p("ing"))]);
    ok(&["sample", "--bow", s(&p("ing/bow.tsv")), "--budget", "500", "--out", s(&p("smp"))]);
    ok(&["train-lda", "--bow", s(&p("smp/sample.tsv")), "--vocab", s(&p("ing/vocab.tsv")), "--topics", "3",
        "--burn-in", "30", "--samples", "10", "--thin", "5", "--out", s(&p("lda"))]);
    ok(&["train-dtm", "--bow", s(&p("ing/bow.tsv")), "--vocab", s(&p("ing/vocab.tsv")), "--topics", "3",
        "--iters", "2", "--init-burn-in", "30", "--init-samples", "10", "--out", s(&p("dtm"))]);
    ok(&["infer", "--model", s(&p("lda/lda.tsv")), "--bow", s(&p("ing/bow.tsv")), "--vocab", s(&p("ing/vocab.tsv")),
        "--burn-in", "5", "--samples", "5", "--out", s(&p("inf"))]);
    ok(&["infer", "--model", s(&p("dtm/dtm.tsv")), "--bow", s(&p("ing/bow.tsv")), "--vocab", s(&p("ing/vocab.tsv")),
        "--burn-in", "5", "--samples", "5", "--out", s(&p("inf-dtm"))]);
    fs::write(p("clusters.txt"), "pair: 0, 1\n").unwrap();
    ok(&["prominence", "--thetas", s(&p("inf/thetas.csv")), "--clusters", s(&p("clusters.txt")), "--out", s(&p("prom"))]);
    ok(&["heatmap", "--model", s(&p("dtm/dtm.tsv")), "--vocab", s(&p("ing/vocab.tsv")), "--topic", "0", "--svg",
        "--out", s(&p("heat"))]);
    ok(&["stretch", "--model", s(&p("dtm/dtm.tsv")), "--vocab", s(&p("ing/vocab.tsv")), "--topic", "0",
        "--onset-words", "w020,w021", "--onset-slice", "1862", "--out", s(&p("str"))]);
    ok(&["match", "--lda", s(&p("lda/lda.tsv")), "--dtm", s(&p("dtm/dtm.tsv")), "--out", s(&p("match"))]);

    for d in ["synth", "ing", "smp", "lda", "dtm", "inf", "inf-dtm", "prom", "heat", "str", "match"] {
        let m = RunManifest::read(&p(d)).unwrap();
        assert_eq!(m.seed, 3);
        assert_eq!(m.threads, Some(2));
    }
    assert!(fs::read_to_string(p("heat/heatmap_topic0.svg")).unwrap().starts_with("<svg"));
    assert!(fs::read_to_string(p("match/match.csv")).unwrap().starts_with('#'));
    assert!(fs::read_to_string(p("prom/clusters.csv")).unwrap().starts_with("year,pair"));
    assert!(fs::read_to_string(p("str/stretch_topic0.csv")).unwrap().contains("onset_leakage"));
}
