// Validation-error statistics, range resolution and test-time score
// modification on small hand-made inputs.

use ndarray::{array, Array2};
use nids_ensemble::classes::{ANALYSIS, BACKDOOR, CLASS_NAMES, FUZZERS, NORMAL, NUM_CLASSES, RECON};
use nids_ensemble::ensemble::ProbabilityScoreMatrix;
use nids_ensemble::overlap::{
    error_statistics, modify_membership_scores, resolve_range_overlaps, ConfusionMatrix, OverlapModel,
};
use nids_ensemble::Result;

pub fn run_example() -> Result<OverlapModel> {
    // Two Analysis records predicted as Backdoor. In the first, Analysis is
    // the runner-up; in the second, Fuzzers is.
    let ps = ProbabilityScoreMatrix::new(array![
        [0.78, 0.81, 0.02, 0.01, 0.24, 0.08, 0.11, 0.19, 0.08, 0.22],
        [0.09, 0.54, 0.01, 0.03, 0.41, 0.04, 0.01, 0.06, 0.12, 0.14],
    ])?;
    let stats = error_statistics(&ps, &[ANALYSIS, ANALYSIS], &[BACKDOOR, BACKDOOR])?;
    println!(
        "Analysis→Backdoor gap: mean {:.2}, sd {:.2}",
        stats.olm[[ANALYSIS, BACKDOOR]],
        stats.olsd[[ANALYSIS, BACKDOOR]]
    );

    // Four gap ranges for true Analysis; three of them chain together.
    let mut model = OverlapModel::disabled(NUM_CLASSES);
    model.resolved = false;
    let mut cm = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
    for (y, mean, sd, count) in [
        (BACKDOOR, 0.08, 0.02, 124),
        (FUZZERS, 0.09, 0.02, 46),
        (NORMAL, 0.04, 0.03, 3),
        (RECON, 0.60, 0.10, 3),
    ] {
        model.olm[[ANALYSIS, y]] = mean;
        model.olsd[[ANALYSIS, y]] = sd;
        cm[[ANALYSIS, y]] = count;
    }
    let resolved = resolve_range_overlaps(&model, &ConfusionMatrix::from_counts(cm)?)?;
    for y in [BACKDOOR, FUZZERS, NORMAL, RECON] {
        println!(
            "Analysis→{:<8} ({:.2}, {:.2}) → ({:.2}, {:.2})",
            CLASS_NAMES[y],
            model.olm[[ANALYSIS, y]],
            model.olsd[[ANALYSIS, y]],
            resolved.olm[[ANALYSIS, y]],
            resolved.olsd[[ANALYSIS, y]]
        );
    }

    // A test row that Backdoor narrowly wins over Analysis.
    let mut row = [0.0; NUM_CLASSES];
    row[ANALYSIS] = 0.36;
    row[BACKDOOR] = 0.44;
    row[FUZZERS] = 0.20;
    let test = ProbabilityScoreMatrix::new(Array2::from_shape_vec((1, NUM_CLASSES), row.to_vec()).unwrap())?;
    let (corrected, log) = modify_membership_scores(&test, &resolved)?;
    println!(
        "test row: predicted {} → {} ({} correction)",
        CLASS_NAMES[test.predicted_labels()[0]],
        CLASS_NAMES[corrected.predicted_labels()[0]],
        log.len()
    );
    Ok(resolved)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
