//! Calibrates a probability threshold on one sample from a random HMM and
//! checks it on a second sample.
//!
//! cargo run --release -p seltag --example synthetic -- [target]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seltag::calibration::{build_cdfs, calibrate_threshold, collect_observations, AccuracyMode};
use seltag::confidence::{ConfidenceMeasure, ThresholdPolicy};
use seltag::evaluation::{evaluate, percent, report};
use seltag::synth::{random_model, sample_corpus, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target: f64 = std::env::args().nth(1).map_or(Ok(0.95), |a| a.parse())?;
    let config = GeneratorConfig {
        tags: 8,
        vocabulary: 2000,
        max_tags_per_word: 3,
        skew: 3.0,
    };
    let model = random_model(&mut ChaCha8Rng::seed_from_u64(1), &config);
    let held_out = sample_corpus(&mut ChaCha8Rng::seed_from_u64(2), &model, 5000, 3..=14);
    let fresh = sample_corpus(&mut ChaCha8Rng::seed_from_u64(3), &model, 5000, 3..=14);

    let measure = ConfidenceMeasure::Probability;
    let obs = collect_observations(&model, &held_out, measure)?;
    let cal = calibrate_threshold(&build_cdfs(&obs)?, obs.s(), target, AccuracyMode::Oracle, measure)?;
    print!("{}", cal.to_text());

    let policy = ThresholdPolicy::new(measure, cal.threshold)?;
    let rep = report(&evaluate(&model, &fresh, &policy)?, &policy)?;
    println!(
        "fresh sample: accuracy {}% efficiency {}%",
        percent(rep.accuracy_oracle, 2),
        percent(rep.efficiency, 1)
    );
    Ok(())
}
