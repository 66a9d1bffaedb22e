// Trains one LDA model on a corpus with a declining and a rising topic,
// infers every document and tracks per-year prominence.
//
// ```bash
// cargo run --release --example topic_prominence
// ```

use diachron::inference::FoldInConfig;
use diachron::lda::{infer_all, train_lda, LdaConfig};
use diachron::math::{hungarian, total_variation};
use diachron::prominence::{cluster_prominence, topic_prominence, trend_summary, TopicCluster};
use diachron::synthgen::{generate, ScenarioSpec};

pub fn run_example() -> diachron::Result<()> {
    let mut spec = ScenarioSpec::linear_trend(8, 3, 30, 2);
    spec.docs_per_slice = 40;
    spec.tokens_per_doc = 40;
    let scenario = generate(&spec)?;
    let cfg = LdaConfig {
        alpha: 0.5,
        burn_in: 100,
        samples: 20,
        thin: 5,
        seed: 2,
        ..LdaConfig::with_topics(3)
    };
    let model = train_lda(&scenario.bow, &scenario.vocab, &cfg)?;
    let thetas = infer_all(&model, &scenario.vocab, &scenario.bow, &FoldInConfig { seed: 2, ..Default::default() })?;
    let series = topic_prominence(&thetas)?;

    let cost: Vec<Vec<f64>> = (0..spec.topics)
        .map(|t| (0..model.topics).map(|k| total_variation(&spec.topic(t, 0), model.topic(k))).collect())
        .collect();
    let matched = hungarian(&cost);
    for (planted, name) in [(0, "decliner"), (1, "riser")] {
        let k = matched[planted];
        let (slope, trend) = trend_summary(&series.years, &series.topic(k))?;
        let truth: Vec<String> = scenario.truth.prominence.topic(planted).iter().map(|v| format!("{v:.2}")).collect();
        let found: Vec<String> = series.topic(k).iter().map(|v| format!("{v:.2}")).collect();
        println!("{name}: learned topic {k}, slope {slope:+.4} per year ({})", trend.label());
        println!("  planted   {}", truth.join(" "));
        println!("  recovered {}", found.join(" "));
    }
    let everything = TopicCluster {
        name: "all".into(),
        members: (0..model.topics).collect(),
    };
    println!("cluster of all topics: {:?}", cluster_prominence(&series, &everything)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("prominence example");
}
