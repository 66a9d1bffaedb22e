// Trains LDA on a synthetic corpus and measures how close the recovered
// topics are to the planted ones after optimal matching.
//
// ```bash
// cargo run --release --example lda_recovery
// ```

use diachron::diagnostics::top_words;
use diachron::lda::{train_lda, LdaConfig};
use diachron::math::{hungarian, total_variation};
use diachron::synthgen::{generate, ScenarioSpec};

pub fn run_example() -> diachron::Result<()> {
    let mut spec = ScenarioSpec::constant(1, 4, 40, 5);
    spec.docs_per_slice = 300;
    spec.tokens_per_doc = 50;
    let scenario = generate(&spec)?;
    let cfg = LdaConfig {
        alpha: 0.5,
        burn_in: 150,
        samples: 30,
        thin: 5,
        seed: 5,
        ..LdaConfig::with_topics(4)
    };
    let model = train_lda(&scenario.bow, &scenario.vocab, &cfg)?;

    let planted = &scenario.truth.topics[0];
    let cost: Vec<Vec<f64>> = planted
        .iter()
        .map(|p| (0..model.topics).map(|k| total_variation(p, model.topic(k))).collect())
        .collect();
    let assignment = hungarian(&cost);
    for (truth, &k) in assignment.iter().enumerate() {
        println!(
            "planted {truth} -> learned {k}: TV {:.3}, top words {:?}",
            cost[truth][k],
            top_words(model.topic(k), &scenario.vocab, 5)?
        );
    }
    let mean: f64 = assignment.iter().enumerate().map(|(t, &k)| cost[t][k]).sum::<f64>() / assignment.len() as f64;
    println!("mean matched total variation {mean:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("lda example");
}
