// Per-class metrics, the Normal/Attack collapse and the split of attack
// errors for a ten-class confusion matrix.

use ndarray::Array2;
use nids_ensemble::classes::{CLASS_NAMES, NORMAL, NUM_CLASSES};
use nids_ensemble::metrics::{attack_error_breakdown, collapse_confusion, compute_metrics, percent, View};
use nids_ensemble::overlap::ConfusionMatrix;
use nids_ensemble::Result;

pub fn run_example() -> Result<(ConfusionMatrix, ConfusionMatrix)> {
    // 100 records per class, mostly right; every attack leaks 3 rows to
    // Normal and 5 to its neighbour, Normal leaks 4 to Fuzzers.
    let mut counts = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
    for c in 0..NUM_CLASSES {
        if c == NORMAL {
            counts[[c, c]] = 96;
            counts[[c, 4]] = 4;
        } else {
            counts[[c, c]] = 92;
            counts[[c, NORMAL]] = 3;
            let neighbour = if c + 1 == NORMAL { c + 2 } else { (c + 1) % NUM_CLASSES };
            counts[[c, neighbour]] = 5;
        }
    }
    let cm = ConfusionMatrix::from_counts(counts)?;
    let report = compute_metrics(&cm, View::Multiclass)?;
    println!("{:<10} {:>8} {:>8} {:>8}", "class", "sens %", "prec %", "F %");
    for (m, name) in report.per_class.iter().zip(CLASS_NAMES) {
        println!("{name:<10} {:>8} {:>8} {:>8}", percent(m.sensitivity), percent(m.precision), percent(m.f_measure));
    }

    let binary = collapse_confusion(&cm)?;
    let b = compute_metrics(&binary, View::Binary)?;
    println!("\nbinary matrix {:?}", binary.counts().as_slice().unwrap());
    println!("false alarms {}%, missed alarms {}%", percent(b.false_alarm_rate), percent(b.missed_alarm_rate));
    let split = attack_error_breakdown(&cm)?;
    println!(
        "attack errors {}% = {}% to Normal + {}% to another attack",
        percent(split.total),
        percent(split.to_normal),
        percent(split.to_other_attack)
    );
    Ok((cm, binary))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
