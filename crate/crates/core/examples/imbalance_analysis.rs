// Class distribution and pairwise imbalance ratios of the official
// UNSW-NB15 train + test record counts.

use nids_ensemble::analysis::{
    imbalance_ratio_matrix, imbalance_report, ClassDistribution, IrMatrix, IrMode, IMBALANCE_THRESHOLD,
};
use nids_ensemble::classes::CLASS_NAMES;
use nids_ensemble::synthetic::{OFFICIAL_TEST_COUNTS, OFFICIAL_TRAIN_COUNTS};
use nids_ensemble::Result;

pub fn run_example() -> Result<IrMatrix> {
    let counts = std::array::from_fn(|c| OFFICIAL_TRAIN_COUNTS[c] + OFFICIAL_TEST_COUNTS[c]);
    let dist = ClassDistribution::from_counts(counts)?;
    println!("{:<10} {:>7} {:>8}", "class", "records", "share");
    for (c, name) in CLASS_NAMES.iter().enumerate() {
        println!("{name:<10} {:>7} {:>8.4}", dist.counts[c], dist.proportions[c]);
    }

    let ir = imbalance_ratio_matrix(&dist, IrMode::RoundedDistribution)?;
    let flagged = imbalance_report(&ir, IMBALANCE_THRESHOLD);
    println!("\n{} pairs exceed IR {IMBALANCE_THRESHOLD}; the five worst:", flagged.len());
    for p in flagged.iter().take(5) {
        println!("  {:>9} / {:<9} {:>8.2}", p.majority, p.minority, p.ratio);
    }
    Ok(ir)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
