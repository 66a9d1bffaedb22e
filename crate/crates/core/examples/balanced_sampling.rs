// Draws a per-year balanced training subset from a corpus whose later years
// are far larger than its early years.
//
// ```bash
// cargo run --example balanced_sampling
// ```

use diachron::corpus::BowDocument;
use diachron::sampler::{balanced_sample, report_csv, sample_report, SamplePlan, SampleUnit};

pub fn run_example() -> diachron::Result<()> {
    let mut docs = Vec::new();
    for (year, count) in [(1854, 12), (1870, 80), (1890, 400), (1910, 1500)] {
        for i in 0..count {
            let len = 20 + (i * 7 + year as u32) % 60;
            docs.push(BowDocument::new(format!("{year}-{i:04}"), year, vec![(0, len)]));
        }
    }
    let plan = SamplePlan {
        unit: SampleUnit::Tokens,
        per_year_budget: 5_000,
        seed: 3,
    };
    let sample = balanced_sample(&docs, &plan)?;
    println!("kept {} of {} documents", sample.len(), docs.len());
    print!("{}", report_csv(&sample_report(&docs, &sample)?));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sampling example");
}
