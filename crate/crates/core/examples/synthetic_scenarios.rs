// Generates a scenario with one topic of each kind of dynamics and writes
// the corpus plus its ground truth to a temporary directory.
//
// ```bash
// cargo run --example synthetic_scenarios
// ```

use diachron::synthgen::{generate, Dynamics, ScenarioSpec};

pub fn run_example() -> diachron::Result<()> {
    let spec = ScenarioSpec {
        slices: 6,
        topics: 4,
        vocab: 40,
        docs_per_slice: 20,
        tokens_per_doc: 30,
        dynamics: vec![
            Dynamics::Constant,
            Dynamics::LinearTrend { slope: 0.3 },
            Dynamics::Onset { slice: 3 },
            Dynamics::Drift { rate: 2.0 },
        ],
        alpha: 0.5,
        background: 0.02,
        start_year: 1854,
        seed: 1,
    };
    let scenario = generate(&spec)?;
    println!("planted mixture means:");
    for (t, row) in scenario.truth.mixture_means.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("  {} {}", spec.start_year + t as i32, cells.join(" "));
    }
    print!("prominence of the planted thetas:\n{}", scenario.truth.prominence.to_csv());

    let dir = std::env::temp_dir().join(format!("diachron-synth-{}", std::process::id()));
    scenario.write(&dir)?;
    println!("wrote corpus.jsonl and truth files to {}", dir.display());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("synth example");
}
