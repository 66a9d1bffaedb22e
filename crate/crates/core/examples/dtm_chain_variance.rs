// Fits a dynamic topic model at two chain variances and compares how much
// the topics move between adjacent slices.
//
// ```bash
// cargo run --release --example dtm_chain_variance
// ```

use diachron::dtm::{chain_smoothness, train_dtm_from, DtmConfig};
use diachron::lda::{train_lda, LdaConfig};
use diachron::synthgen::{generate, Dynamics, ScenarioSpec};

pub fn run_example() -> diachron::Result<()> {
    let mut spec = ScenarioSpec::constant(5, 3, 30, 11);
    spec.docs_per_slice = 40;
    spec.tokens_per_doc = 40;
    spec.dynamics[0] = Dynamics::Drift { rate: 3.0 };
    let scenario = generate(&spec)?;

    let docs: Vec<_> = scenario.corpus.documents().cloned().collect();
    let init = train_lda(
        &docs,
        &scenario.vocab,
        &LdaConfig {
            alpha: 0.5,
            burn_in: 100,
            samples: 20,
            thin: 5,
            seed: 11,
            ..LdaConfig::with_topics(3)
        },
    )?;

    for chain_variance in [1e-4, 1e-1] {
        let cfg = DtmConfig {
            chain_variance,
            iters: 5,
            ..DtmConfig::with_topics(3)
        };
        let model = train_dtm_from(&scenario.corpus, &scenario.vocab, &cfg, &init)?;
        let mean_js: f64 = (0..model.topics)
            .map(|k| {
                let js = chain_smoothness(&model, k).unwrap();
                js.iter().sum::<f64>() / js.len() as f64
            })
            .sum::<f64>()
            / model.topics as f64;
        println!("chain variance {chain_variance:>7}: mean adjacent JS {mean_js:.5}");
        let trace: Vec<String> = model.elbo_trace.iter().map(|v| format!("{v:.1}")).collect();
        println!("  ELBO per iteration: {}", trace.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("dtm example");
}
