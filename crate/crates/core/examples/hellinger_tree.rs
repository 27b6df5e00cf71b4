// Hellinger-distance trees on skewed data: the split score ignores class
// ratios, unlike entropy gain. Minority recall of both forests is printed
// for comparison.

use ndarray::Array2;
use nids_ensemble::data::SampleMatrix;
use nids_ensemble::ensemble::{fit_random_forest, predict_proba, RandomForestParams};
use nids_ensemble::tree::{hellinger_split_score, impurity_split_score, ImpurityKind, SplitCriterion};
use nids_ensemble::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two overlapping Gaussian blobs, 95:5.
fn blobs(n: usize, seed: u64) -> SampleMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut values = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let minority = rng.random::<f64>() < 0.05;
        let centre = if minority { 1.5 } else { 0.0 };
        values[[i, 0]] = centre + noise.sample(&mut rng);
        values[[i, 1]] = centre + noise.sample(&mut rng);
        labels.push(usize::from(minority));
    }
    SampleMatrix::new(values, labels, vec!["a".into(), "b".into()]).unwrap()
}

fn minority_recall(criterion: SplitCriterion, train: &SampleMatrix, test: &SampleMatrix) -> Result<f64> {
    let params = RandomForestParams {
        n_trees: 25,
        criterion,
        max_depth: Some(4),
        seed: 3,
        ..Default::default()
    };
    let pred = predict_proba(&fit_random_forest(train, &params)?, test)?.predicted_labels();
    let (hit, total) = test
        .labels()
        .iter()
        .zip(&pred)
        .filter(|(&y, _)| y == 1)
        .fold((0, 0), |(h, t), (_, &p)| (h + usize::from(p == 1), t + 1));
    Ok(hit as f64 / total as f64)
}

pub struct SkewDemo {
    /// Change in split score after repeating the minority class 7×.
    pub hellinger_shift: f64,
    pub entropy_shift: f64,
    pub hellinger_recall: f64,
    pub entropy_recall: f64,
}

pub fn run_example() -> Result<SkewDemo> {
    let (left, right) = ([40, 2], [10, 8]);
    let (left7, right7) = ([40, 14], [10, 56]);
    let (h0, h7) = (hellinger_split_score(&left, &right, None), hellinger_split_score(&left7, &right7, None));
    let (e0, e7) = (
        impurity_split_score(&left, &right, ImpurityKind::Entropy),
        impurity_split_score(&left7, &right7, ImpurityKind::Entropy),
    );
    println!("hellinger {h0:.6} → {h7:.6} after repeating the minority 7×");
    println!("entropy   {e0:.6} → {e7:.6}");

    let (train, test) = (blobs(4000, 1), blobs(4000, 2));
    let h = minority_recall(SplitCriterion::Hellinger, &train, &test)?;
    let e = minority_recall(SplitCriterion::EntropyGain, &train, &test)?;
    println!("minority recall: hellinger forest {h:.3}, entropy forest {e:.3}");
    Ok(SkewDemo {
        hellinger_shift: (h7 - h0).abs(),
        entropy_shift: (e7 - e0).abs(),
        hellinger_recall: h,
        entropy_recall: e,
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
