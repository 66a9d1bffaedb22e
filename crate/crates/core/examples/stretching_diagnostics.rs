// A topic that only appears from a given slice on: the smoothed DTM chain
// carries its words back into earlier slices, independent per-slice LDA
// models do not.
//
// ```bash
// cargo run --release --example stretching_diagnostics
// ```

use diachron::diagnostics::{
    independent_leakage, match_topics, saliency_heatmap, stretch_score, train_per_slice, OnsetSpec,
};
use diachron::dtm::{train_dtm_from, DtmConfig};
use diachron::lda::{train_lda, LdaConfig};
use diachron::synthgen::{generate, ScenarioSpec};

pub fn run_example() -> diachron::Result<()> {
    let mut spec = ScenarioSpec::onset(5, 3, 30, 3, 9);
    spec.docs_per_slice = 40;
    spec.tokens_per_doc = 40;
    let scenario = generate(&spec)?;
    let onset = OnsetSpec {
        words: spec.block(2).collect(),
        slice: 3,
    };
    let lda_cfg = LdaConfig {
        alpha: 0.1,
        burn_in: 100,
        samples: 20,
        thin: 5,
        seed: 9,
        ..LdaConfig::with_topics(3)
    };
    let pooled = train_lda(&scenario.bow, &scenario.vocab, &lda_cfg)?;
    let dtm = train_dtm_from(
        &scenario.corpus,
        &scenario.vocab,
        &DtmConfig {
            chain_variance: 0.005,
            iters: 5,
            ..DtmConfig::with_topics(3)
        },
        &pooled,
    )?;

    let matches = match_topics(&pooled, &dtm)?;
    println!("greedy LDA -> DTM candidates:");
    for p in &matches.greedy {
        println!("  {} -> {} (JS {:.4})", p.lda, p.dtm, p.divergence);
    }

    let (k, dtm_leak) = (0..dtm.topics)
        .map(|k| {
            let r = stretch_score(&dtm, &scenario.vocab, k, 5, Some(&onset)).unwrap();
            (k, r.onset_leakage.unwrap())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let per_slice = train_per_slice(&scenario.corpus, &scenario.vocab, &lda_cfg)?;
    let baseline = independent_leakage(&per_slice, &onset)?;
    println!("onset words mass before slice {}: DTM topic {k} {dtm_leak:.4}, per-slice LDA {baseline:.4}", onset.slice);

    let report = stretch_score(&dtm, &scenario.vocab, k, 5, Some(&onset))?;
    print!("{}", report.to_csv(&dtm.slice_labels()));
    let heat = saliency_heatmap(&dtm, &scenario.vocab, k, 4, 0.6)?;
    print!("{}", heat.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("stretching example");
}
