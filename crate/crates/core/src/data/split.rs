use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::SampleMatrix;
use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};

/// Number of held-out records per class for a stratified split.
///
/// The held-out total is `n·(1 − train_fraction)` rounded half up, and it is
/// apportioned across classes by largest remainder (ties to the lower class
/// index). Every class therefore receives either the floor or the ceiling of
/// its exact share `n_c·(1 − train_fraction)`.
pub fn holdout_quota(class_counts: &[usize; NUM_CLASSES], train_fraction: f64) -> [usize; NUM_CLASSES] {
    let holdout = 1.0 - train_fraction;
    let n: usize = class_counts.iter().sum();
    let total = (n as f64 * holdout + 0.5).floor() as usize;

    let mut quota = [0usize; NUM_CLASSES];
    let mut remainders = Vec::with_capacity(NUM_CLASSES);
    for (c, &count) in class_counts.iter().enumerate() {
        let exact = count as f64 * holdout;
        let floor = exact.floor();
        quota[c] = (floor as usize).min(count);
        if quota[c] < count {
            remainders.push((exact - floor, c));
        }
    }
    let assigned: usize = quota.iter().sum();
    // stable sort keeps lower class index first among equal remainders
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0));
    for &(_, c) in remainders.iter().take(total.saturating_sub(assigned)) {
        quota[c] += 1;
    }
    quota
}

/// Stratified split into `(train, validation)`.
///
/// Held-out rows are drawn per class by seeded uniform sampling without
/// replacement; both parts keep the original row order.
pub fn stratified_split(
    m: &SampleMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<(SampleMatrix, SampleMatrix)> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} is outside (0, 1]"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, &l) in m.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let quota = holdout_quota(&m.class_counts(), train_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held_out = vec![false; m.n_samples()];
    for (rows, &q) in by_class.iter().zip(&quota) {
        if q == 0 {
            continue;
        }
        for k in sample(&mut rng, rows.len(), q) {
            held_out[rows[k]] = true;
        }
    }
    let (validation, train): (Vec<usize>, Vec<usize>) =
        (0..m.n_samples()).partition(|&i| held_out[i]);
    Ok((m.select_rows(&train), m.select_rows(&validation)))
}
