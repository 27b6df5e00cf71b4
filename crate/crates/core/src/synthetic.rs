//! Seeded generator of CSV files laid out like the UNSW-NB15 train/test
//! split. Useful for demos and tests when the real dataset is not at hand.
//!
//! Every class gets its own centre per numeric feature; records are the
//! centre plus Gaussian noise, folded to be non-negative. Nominal columns
//! draw from a small vocabulary with a class-specific preferred value.
//! `separation` is the spread of centres in units of the noise standard
//! deviation, so small values produce heavily overlapping classes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classes::{CLASS_NAMES, NORMAL, NUM_CLASSES};
use crate::data::{ColumnKind, FeatureSchema};
use crate::error::{Error, Result};

/// Per-class record counts of the official training split.
pub const OFFICIAL_TRAIN_COUNTS: [usize; NUM_CLASSES] =
    [2000, 1746, 12264, 33393, 18184, 40000, 56000, 10491, 1133, 130];
/// Per-class record counts of the official test split.
pub const OFFICIAL_TEST_COUNTS: [usize; NUM_CLASSES] =
    [677, 583, 4089, 11132, 6062, 18871, 37000, 3496, 378, 44];

const VOCAB: &[&str] = &["tcp", "udp", "arp", "ospf", "-", "dns", "http", "FIN", "INT", "CON"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub class_counts: [usize; NUM_CLASSES],
    pub separation: f64,
    /// Drives the class centres. Two configs with the same `layout_seed`
    /// describe the same distribution (e.g. a train and a test file).
    pub layout_seed: u64,
    /// Drives the individual records.
    pub sample_seed: u64,
}

impl SyntheticConfig {
    /// Official class proportions shrunk to about `total` records, keeping at
    /// least `floor` records per class.
    pub fn scaled(counts: [usize; NUM_CLASSES], total: usize, floor: usize) -> [usize; NUM_CLASSES] {
        let n: usize = counts.iter().sum();
        counts.map(|c| ((c * total) as f64 / n as f64).round().max(floor as f64) as usize)
    }
}

pub fn write_synthetic_unsw<W: Write>(cfg: &SyntheticConfig, out: W) -> Result<()> {
    if cfg.separation.is_nan() || cfg.separation < 0.0 {
        return Err(Error::InvalidParameter("separation must be ≥ 0".into()));
    }
    let schema = FeatureSchema::unsw_nb15();
    let columns = schema.columns();
    let mut layout = ChaCha8Rng::seed_from_u64(cfg.layout_seed);
    let centres: Vec<[f64; NUM_CLASSES]> = columns
        .iter()
        .map(|_| std::array::from_fn(|_| layout.random::<f64>() * cfg.separation))
        .collect();
    let preferred: Vec<[usize; NUM_CLASSES]> = columns
        .iter()
        .map(|_| std::array::from_fn(|_| layout.random_range(0..VOCAB.len())))
        .collect();

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns.iter().map(|c| c.name.as_str()))?;

    let mut order: Vec<usize> = cfg
        .class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    // interleave classes the way a capture file would
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }

    let mut record = Vec::with_capacity(columns.len());
    for (row, &class) in order.iter().enumerate() {
        record.clear();
        for (j, col) in columns.iter().enumerate() {
            record.push(match col.kind {
                ColumnKind::Identifier => (row + 1).to_string(),
                ColumnKind::TargetCategory => CLASS_NAMES[class].to_string(),
                ColumnKind::TargetLabel => u8::from(class != NORMAL).to_string(),
                ColumnKind::Nominal => {
                    let k = if rng.random::<f64>() < 0.7 {
                        preferred[j][class]
                    } else {
                        rng.random_range(0..VOCAB.len())
                    };
                    VOCAB[k].to_string()
                }
                ColumnKind::Numeric => {
                    let v: f64 = centres[j][class] + noise.sample(&mut rng);
                    format!("{:.6}", v.abs())
                }
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn synthetic_unsw_csv(cfg: &SyntheticConfig) -> Result<String> {
    let mut buf = Vec::new();
    write_synthetic_unsw(cfg, &mut buf)?;
    Ok(String::from_utf8(buf).expect("generator writes ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ingest_reader, preprocess};

    #[test]
    fn official_totals() {
        assert_eq!(OFFICIAL_TRAIN_COUNTS.iter().sum::<usize>(), 175_341);
        assert_eq!(OFFICIAL_TEST_COUNTS.iter().sum::<usize>(), 82_332);
    }

    #[test]
    fn output_ingests_with_requested_counts() {
        let cfg = SyntheticConfig {
            class_counts: SyntheticConfig::scaled(OFFICIAL_TRAIN_COUNTS, 500, 3),
            separation: 4.0,
            layout_seed: 1,
            sample_seed: 2,
        };
        let text = synthetic_unsw_csv(&cfg).unwrap();
        assert_eq!(text, synthetic_unsw_csv(&cfg).unwrap());
        let mut schema = FeatureSchema::unsw_nb15();
        let raw = ingest_reader(text.as_bytes(), &schema).unwrap();
        schema.fit_nominal_maps(&raw).unwrap();
        let m = preprocess(&raw, &schema).unwrap();
        assert_eq!(m.n_features(), 42);
        assert_eq!(m.class_counts(), cfg.class_counts);
    }
}
