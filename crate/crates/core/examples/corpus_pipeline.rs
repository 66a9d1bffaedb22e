// Ingests line-delimited records, builds a pruned vocabulary, vectorizes the
// documents and slices them by year.
//
// ```bash
// cargo run --example corpus_pipeline
// ```

use diachron::corpus::{
    build_vocabulary, corpus_stats, ingest_str, slice_by_year, stats_csv, vectorize_all, PreprocessConfig, VocabConfig,
};

const RECORDS: &str = r#"{"id":"a1","date":"1859-03-02","text":"Markka ja penni tulevat käyttöön."}
{"id":"a2","date":"1859-11-20","text":"Hopearuplan kurssi ja markka."}
{"id":"b1","date":"1860-04-01","text":"Uusi markka ja penni ovat rahaa."}
{"id":"b2","date":"1860","text":"Kirkko ja koulu."}
{"id":"b3","date":"1860-13-01","text":"broken date"}
{"id":"c1","date":"1861-02","text":"Koulu ja markka, koulu ja kirkko."}
"#;

pub fn run_example() -> diachron::Result<()> {
    let mut cfg = PreprocessConfig::default();
    cfg.stopwords.insert("ja".into());
    let report = ingest_str(RECORDS, &cfg);
    for w in &report.warnings {
        println!("skipped line {}: {}", w.line, w.message);
    }
    print!("{}", stats_csv(&corpus_stats(&report.documents)));

    let vocab = build_vocabulary(
        &report.documents,
        &VocabConfig {
            min_df: 2,
            max_df_ratio: 0.9,
            max_size: 100,
        },
    )?;
    println!("vocabulary ({} words, checksum {}): {:?}", vocab.len(), vocab.checksum(), vocab.words());

    let bow = vectorize_all(&report.documents, &vocab);
    let sliced = slice_by_year(&bow, 1)?;
    for slice in &sliced.slices {
        let tokens: usize = slice.docs.iter().map(|d| d.len()).sum();
        println!("slice {}: {} documents, {tokens} in-vocabulary tokens", slice.label(), slice.docs.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("corpus example");
}
