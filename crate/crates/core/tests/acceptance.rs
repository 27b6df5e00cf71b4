//! Acceptance checks, one line per criterion.
//!
//! Criteria 9 and 10 need the official UNSW-NB15 train/test CSVs
//! (`UNSW_NB15_training-set.csv`, `UNSW_NB15_testing-set.csv`) in the
//! directory named by `UNSW_NB15_DIR`, or in `<workspace>/data`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use ndarray::{array, Array2};
use nids_ensemble::analysis::{imbalance_ratio_matrix, ClassDistribution, IrMode};
use nids_ensemble::classes::*;
use nids_ensemble::data::{ingest_csv, preprocess, stratified_split, FeatureSchema, SampleMatrix};
use nids_ensemble::ensemble::{softmax_cross_entropy, softmax_gradient, ProbabilityScoreMatrix};
use nids_ensemble::metrics::{collapse_confusion, compute_metrics, View};
use nids_ensemble::overlap::{
    error_statistics, modify_membership_scores, resolve_range_overlaps, ConfusionMatrix, OverlapModel,
};
use nids_ensemble::pipeline::{
    artifact_to_json, evaluate_artifact, train_full_ensemble, EnsembleConfig, Evaluation, EvaluationOptions,
};
use nids_ensemble::synthetic::{OFFICIAL_TEST_COUNTS, OFFICIAL_TRAIN_COUNTS};
use nids_ensemble::tree::{hellinger_split_score, impurity_split_score, ImpurityKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn close(value: f64, expected: f64, tol: f64, what: &str) -> Result<(), String> {
    if (value - expected).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {value}, expected {expected} ± {tol}"))
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:.0?}"))
    }
}

/// Multi-class test confusion matrix of the corrected ensemble.
fn reference_multiclass() -> ConfusionMatrix {
    ConfusionMatrix::from_counts(array![
        [327, 193, 4, 1, 18, 0, 130, 0, 4, 0],
        [126, 405, 0, 0, 13, 0, 39, 0, 0, 0],
        [1604, 625, 1110, 228, 92, 0, 178, 59, 164, 29],
        [779, 830, 39, 8511, 57, 0, 338, 221, 213, 144],
        [482, 491, 4, 34, 4380, 0, 0, 10, 646, 15],
        [15, 30, 37, 390, 99, 18145, 63, 7, 72, 13],
        [200, 0, 0, 0, 668, 0, 35978, 0, 154, 0],
        [103, 207, 0, 35, 14, 0, 31, 2967, 126, 13],
        [0, 0, 0, 0, 7, 0, 9, 3, 358, 1],
        [0, 0, 0, 1, 0, 0, 2, 0, 5, 36],
    ])
    .unwrap()
}

fn reference_binary() -> ConfusionMatrix {
    ConfusionMatrix::from_counts(array![[35978, 1022], [790, 44542]]).unwrap()
}

fn ir_fixture() -> Outcome {
    let start = Instant::now();
    let counts = std::array::from_fn(|c| OFFICIAL_TRAIN_COUNTS[c] + OFFICIAL_TEST_COUNTS[c]);
    let dist = ClassDistribution::from_counts(counts).map_err(|e| e.to_string())?;
    let rounded = imbalance_ratio_matrix(&dist, IrMode::RoundedDistribution).map_err(|e| e.to_string())?;
    let raw = imbalance_ratio_matrix(&dist, IrMode::RawCount).map_err(|e| e.to_string())?;
    close(rounded.pair_ratio(NORMAL, WORMS), 514.29, 0.01, "Normal/Worms")?;
    close(rounded.pair_ratio(NORMAL, GENERIC), 1.57, 0.01, "Normal/Generic")?;
    close(rounded.pair_ratio(DOS, FUZZERS), 1.50, 0.01, "DoS/Fuzzers")?;
    close(raw.get(NORMAL, WORMS), 534.48, 0.01, "raw Normal/Worms")?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "Normal/Worms {:.2}, Normal/Generic {:.2}, DoS/Fuzzers {:.2}, raw {:.2}",
        rounded.pair_ratio(NORMAL, WORMS),
        rounded.pair_ratio(NORMAL, GENERIC),
        rounded.pair_ratio(DOS, FUZZERS),
        raw.get(NORMAL, WORMS)
    ))
}

fn metrics_fixture() -> Outcome {
    let start = Instant::now();
    let b = compute_metrics(&reference_binary(), View::Binary).map_err(|e| e.to_string())?;
    let atk = b.class("Attack").unwrap();
    // percentages: ± 0.005 pp; rates printed with three decimals: ± half a unit
    close(100.0 * atk.sensitivity, 98.26, 0.005, "attack sensitivity %")?;
    close(100.0 * atk.precision, 97.76, 0.005, "attack precision %")?;
    close(100.0 * atk.f_measure, 98.01, 0.005, "attack f-measure %")?;
    close(atk.fpr, 0.028, 0.0005, "attack fpr")?;
    close(atk.fnr, 0.017, 0.0005, "attack fnr")?;

    let m = compute_metrics(&reference_multiclass(), View::Multiclass).map_err(|e| e.to_string())?;
    let analysis = m.class("Analysis").unwrap().sensitivity;
    let normal = m.class("Normal").unwrap().sensitivity;
    close(100.0 * analysis, 48.30, 0.01, "Analysis sensitivity %")?;
    close(100.0 * normal, 97.24, 0.01, "Normal sensitivity %")?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "attack sens {:.4}% prec {:.4}% F {:.4}% fpr {:.4} fnr {:.4}; Analysis {:.4}%, Normal {:.4}%",
        100.0 * atk.sensitivity,
        100.0 * atk.precision,
        100.0 * atk.f_measure,
        atk.fpr,
        atk.fnr,
        100.0 * analysis,
        100.0 * normal
    ))
}

fn collapse_fixture() -> Outcome {
    let binary = collapse_confusion(&reference_multiclass()).map_err(|e| e.to_string())?;
    ensure!(binary == reference_binary(), "got {:?}", binary.counts());
    Ok(format!("{:?}", binary.counts().as_slice().unwrap()))
}

/// Literal transcription of the retention loop: per (x, y) pair, scan the
/// rows, compute D, reset the discard flag, test every third class with a
/// strict comparison, and accumulate mean and population deviation.
fn brute_force_statistics(ps: &Array2<f64>, actual: &[usize], predicted: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let k = ps.ncols();
    let mut olm = Array2::zeros((k, k));
    let mut olsd = Array2::zeros((k, k));
    for x in 0..k {
        for y in 0..k {
            if x == y {
                continue;
            }
            let mut kept = Vec::new();
            for i in 0..ps.nrows() {
                if actual[i] != x || predicted[i] != y {
                    continue;
                }
                let d = ps[[i, y]] - ps[[i, x]];
                let mut count = 0;
                for z in 0..k {
                    if z == x || z == y {
                        continue;
                    }
                    let dt = ps[[i, y]] - ps[[i, z]];
                    if dt < d {
                        count = 1;
                    }
                }
                if count == 0 {
                    kept.push(d);
                }
            }
            if kept.is_empty() {
                continue;
            }
            let n = kept.len() as f64;
            let mu = kept.iter().sum::<f64>() / n;
            let var = kept.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            olm[[x, y]] = mu;
            olsd[[x, y]] = var.sqrt();
        }
    }
    (olm, olsd)
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize, k: usize, quantise: bool) -> Array2<f64> {
    let mut ps = Array2::zeros((n, k));
    for mut row in ps.rows_mut() {
        for v in row.iter_mut() {
            *v = rng.random::<f64>();
            if quantise {
                *v = (*v * 20.0).round() / 20.0 + 1e-3;
            }
        }
        let s: f64 = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    ps
}

fn algorithm1_trace() -> Outcome {
    let start = Instant::now();
    let trace = ProbabilityScoreMatrix::new(array![
        [0.78, 0.81, 0.02, 0.01, 0.24, 0.08, 0.11, 0.19, 0.08, 0.22],
        [0.09, 0.54, 0.01, 0.03, 0.41, 0.04, 0.01, 0.06, 0.12, 0.14],
    ])
    .unwrap();
    let m = error_statistics(&trace, &[ANALYSIS; 2], &[BACKDOOR; 2]).map_err(|e| e.to_string())?;
    close(m.olm[[ANALYSIS, BACKDOOR]], 0.03, 1e-12, "retained D")?;
    ensure!(m.olsd[[ANALYSIS, BACKDOOR]] == 0.0, "second row was not discarded");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let instances = 150;
    for t in 0..instances {
        let k = rng.random_range(3..=10);
        let n = rng.random_range(1..=500);
        let ps = random_scores(&mut rng, n, k, t % 2 == 1);
        let actual: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let psm = ProbabilityScoreMatrix::new(ps.clone()).unwrap();
        let predicted = psm.predicted_labels();
        let fast = error_statistics(&psm, &actual, &predicted).map_err(|e| e.to_string())?;
        let (olm, olsd) = brute_force_statistics(&ps, &actual, &predicted);
        for (a, b) in fast.olm.iter().zip(&olm).chain(fast.olsd.iter().zip(&olsd)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-12, "max deviation from brute force {worst:e}");
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("trace D = 0.03 kept, row 2 dropped; {instances} random instances, max dev {worst:e}"))
}

fn range_resolution() -> Outcome {
    let mut model = OverlapModel::disabled(NUM_CLASSES);
    model.resolved = false;
    let mut counts = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
    for (y, m, s, fn_count) in [
        (BACKDOOR, 0.08, 0.02, 124),
        (FUZZERS, 0.09, 0.02, 46),
        (NORMAL, 0.04, 0.03, 3),
        (RECON, 1.30, 0.10, 3),
    ] {
        model.olm[[ANALYSIS, y]] = m;
        model.olsd[[ANALYSIS, y]] = s;
        counts[[ANALYSIS, y]] = fn_count;
    }
    let r = resolve_range_overlaps(&model, &ConfusionMatrix::from_counts(counts).unwrap())
        .map_err(|e| e.to_string())?;
    let pair = |y: usize| (r.olm[[ANALYSIS, y]], r.olsd[[ANALYSIS, y]]);
    ensure!(pair(BACKDOOR) == (0.08, 0.02), "Backdoor {:?}", pair(BACKDOOR));
    ensure!(pair(RECON) == (1.30, 0.10), "Recon {:?}", pair(RECON));
    ensure!(pair(FUZZERS) == (0.0, 0.0), "Fuzzers {:?}", pair(FUZZERS));
    ensure!(pair(NORMAL) == (0.0, 0.0), "Normal {:?}", pair(NORMAL));
    Ok("Backdoor and Recon kept, Fuzzers and Normal zeroed".into())
}

fn algorithm2_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut rows_seen, mut changed, mut flipped) = (0, 0, 0);
    for _ in 0..100 {
        let mut model = OverlapModel::disabled(NUM_CLASSES);
        for x in 0..NUM_CLASSES {
            for y in 0..NUM_CLASSES {
                if x != y && rng.random::<f64>() < 0.7 {
                    model.olm[[x, y]] = rng.random::<f64>() * 0.5;
                    model.olsd[[x, y]] = rng.random::<f64>() * 0.15;
                }
            }
        }
        // half the rows are built so the top-two gap lands near the stored range
        let mut ps = random_scores(&mut rng, 100, NUM_CLASSES, false);
        for mut row in ps.rows_mut().into_iter().step_by(2) {
            let w = rng.random_range(0..NUM_CLASSES);
            let r = (w + rng.random_range(1..NUM_CLASSES)) % NUM_CLASSES;
            let gap = (model.olm[[r, w]] + rng.random_range(-1.3..1.3) * model.olsd[[r, w]]).max(1e-6);
            let top = 0.6;
            row.fill(0.0);
            for v in row.iter_mut() {
                *v = rng.random::<f64>() * (top - gap) * 0.9;
            }
            row[w] = top;
            row[r] = top - gap;
        }
        let before = ProbabilityScoreMatrix::new(ps).unwrap();
        let (after, _) = modify_membership_scores(&before, &model).map_err(|e| e.to_string())?;
        let (pred0, pred1) = (before.predicted_labels(), after.predicted_labels());
        for i in 0..before.n_rows() {
            rows_seen += 1;
            let b = before.scores().row(i);
            let a = after.scores().row(i);
            let w = argmax(b.iter().copied());
            let mut r = usize::MAX;
            for j in 0..NUM_CLASSES {
                if j != w && (r == usize::MAX || b[w] - b[j] < b[w] - b[r]) {
                    r = j;
                }
            }
            let gap = b[w] - b[r];
            let (mu, sd) = (model.olm[[r, w]], model.olsd[[r, w]]);
            let fires = gap >= mu - sd && gap <= mu + sd;
            let diffs: Vec<usize> = (0..NUM_CLASSES).filter(|&j| a[j] != b[j]).collect();
            ensure!(diffs.len() <= 1, "row {i}: {} entries changed", diffs.len());
            if let Some(&j) = diffs.first() {
                changed += 1;
                ensure!(j == r && fires, "row {i}: entry {j} changed unexpectedly");
                ensure!(a[j] == b[j] + mu, "row {i}: increment {} != olm {mu}", a[j] - b[j]);
            }
            let did_flip = pred0[i] != pred1[i];
            flipped += usize::from(did_flip);
            ensure!(
                did_flip == (fires && mu > gap),
                "row {i}: flip {did_flip}, fires {fires}, olm {mu}, gap {gap}"
            );
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{rows_seen} rows, {changed} changed, {flipped} flipped"))
}

fn hellinger_skew() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut witness = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(2..=NUM_CLASSES);
        let left: Vec<usize> = (0..k).map(|_| rng.random_range(0..60)).collect();
        let right: Vec<usize> = (0..k).map(|_| rng.random_range(0..60)).collect();
        let c = rng.random_range(0..k);
        let mut left7 = left.clone();
        let mut right7 = right.clone();
        left7[c] *= 7;
        right7[c] *= 7;
        let h0 = hellinger_split_score(&left, &right, None);
        let h1 = hellinger_split_score(&left7, &right7, None);
        worst = worst.max((h0 - h1).abs());
        let e0 = impurity_split_score(&left, &right, ImpurityKind::Entropy);
        let e1 = impurity_split_score(&left7, &right7, ImpurityKind::Entropy);
        witness = witness.max((e0 - e1).abs());
    }
    ensure!(worst <= 1e-12, "Hellinger score moved by {worst:e}");
    ensure!(witness > 1e-3, "no entropy witness (max change {witness:e})");
    Ok(format!("max Hellinger change {worst:e}; entropy witness change {witness:.4}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let margins: Vec<f64> = (0..NUM_CLASSES).map(|_| rng.random_range(-3.0..3.0)).collect();
        let label = rng.random_range(0..NUM_CLASSES);
        let g = softmax_gradient(&margins, label);
        for j in 0..NUM_CLASSES {
            let mut up = margins.clone();
            let mut down = margins.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (softmax_cross_entropy(&up, label) - softmax_cross_entropy(&down, label)) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-8));
        }
    }
    ensure!(worst < 1e-5, "max relative error {worst:e}");
    Ok(format!("5 points, max relative error {worst:.2e}"))
}

fn dataset_dir() -> PathBuf {
    std::env::var_os("UNSW_NB15_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

struct DeskRun {
    artifact_json: String,
    reports: Vec<u8>,
    plain: Evaluation,
    corrected: Evaluation,
}

const DESK_SEED: u64 = 2024;

fn desk_scale_run() -> Result<DeskRun, String> {
    let dir = dataset_dir();
    let train_path = dir.join("UNSW_NB15_training-set.csv");
    let test_path = dir.join("UNSW_NB15_testing-set.csv");
    if !train_path.is_file() || !test_path.is_file() {
        return Err(format!(
            "BLOCKED: official CSVs not found in {} (set UNSW_NB15_DIR)",
            dir.display()
        ));
    }
    let run = || -> nids_ensemble::Result<DeskRun> {
        let mut schema = FeatureSchema::unsw_nb15();
        let raw_train = ingest_csv(&train_path, &schema)?;
        schema.fit_nominal_maps(&raw_train)?;
        let tenth = |m: &SampleMatrix, seed| stratified_split(m, 0.1, seed).map(|(part, _)| part);
        let train = tenth(&preprocess(&raw_train, &schema)?, DESK_SEED)?;
        let test = tenth(&preprocess(&ingest_csv(&test_path, &schema)?, &schema)?, DESK_SEED + 1)?;
        let config = EnsembleConfig {
            seed: DESK_SEED,
            ..Default::default()
        };
        let artifact = train_full_ensemble(&train, &schema, &config)?;
        let plain = evaluate_artifact(&artifact, &test, EvaluationOptions { correction: false, ..Default::default() })?;
        let corrected = evaluate_artifact(&artifact, &test, EvaluationOptions::default())?;
        let mut reports = Vec::new();
        for e in [&plain, &corrected] {
            e.multiclass_cm.write_csv(&mut reports, &View::Multiclass.class_names())?;
            reports.extend(serde_json::to_vec(&e.multiclass).unwrap());
            reports.extend(serde_json::to_vec(&e.binary).unwrap());
            e.scores.bb_corrected.write_csv(&mut reports, &View::Multiclass.class_names())?;
        }
        Ok(DeskRun {
            artifact_json: artifact_to_json(&artifact)?,
            reports,
            plain,
            corrected,
        })
    };
    run().map_err(|e| e.to_string())
}

fn attack_to_normal(cm: &ConfusionMatrix) -> u64 {
    (0..NUM_CLASSES).filter(|&c| c != NORMAL).map(|c| cm.get(c, NORMAL)).sum()
}

fn desk_scale(first: &Result<DeskRun, String>) -> Outcome {
    let run = first.as_ref().map_err(Clone::clone)?;
    let atk = run.corrected.binary.class("Attack").unwrap();
    let far = run.corrected.binary.false_alarm_rate;
    let (raw_missed, corr_missed) = (
        attack_to_normal(&run.plain.multiclass_cm),
        attack_to_normal(&run.corrected.multiclass_cm),
    );
    let detail = format!(
        "attack sensitivity {:.4}, false-alarm {:.4}, attack→Normal {raw_missed} → {corr_missed}",
        atk.sensitivity, far
    );
    ensure!(atk.sensitivity >= 0.90, "{detail}");
    ensure!(far <= 0.10, "{detail}");
    ensure!(corr_missed <= raw_missed, "{detail}");
    Ok(detail)
}

fn determinism(first: &Result<DeskRun, String>) -> Outcome {
    let a = first.as_ref().map_err(Clone::clone)?;
    let b = desk_scale_run()?;
    ensure!(a.artifact_json == b.artifact_json, "artifacts differ");
    ensure!(a.reports == b.reports, "reports differ");
    Ok(format!("artifact {} bytes identical, reports identical", a.artifact_json.len()))
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("criterion {n:>2} PASS  {name:<32} {secs:>7.2}s  {detail}"),
        Err(why) => println!("criterion {n:>2} FAIL  {name:<32} {secs:>7.2}s  {why}"),
    }
    outcome.is_ok()
}

fn main() {
    // `cargo test` passes harness flags; a name filter skips the whole suite
    // unless it matches.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter.is_some_and(|f| !"acceptance".contains(f.as_str())) {
        return;
    }
    let mut passed = vec![run(1, "imbalance-ratio fixture", ir_fixture)];
    passed.push(run(2, "metrics fixture", metrics_fixture));
    passed.push(run(3, "binary collapse fixture", collapse_fixture));
    passed.push(run(4, "validation-error statistics", algorithm1_trace));
    passed.push(run(5, "range resolution fixture", range_resolution));
    passed.push(run(6, "score modification properties", algorithm2_properties));
    passed.push(run(7, "Hellinger skew insensitivity", hellinger_skew));
    passed.push(run(8, "booster gradient check", gradient_check));
    let mut first = Err("desk-scale run did not happen".to_string());
    passed.push(run(9, "desk-scale end-to-end", || {
        first = desk_scale_run();
        desk_scale(&first)
    }));
    passed.push(run(10, "determinism", || determinism(&first)));
    let ok = passed.iter().filter(|&&p| p).count();
    println!("acceptance: {ok}/{} criteria passed", passed.len());
    if ok != passed.len() {
        std::process::exit(1);
    }
}
