//! Canonical class list.
//!
//! Every `n × 10` score matrix and every `10 × 10` confusion or overlap array
//! in this crate indexes classes in the order of [`CLASS_NAMES`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 10;

pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "Analysis",
    "Backdoor",
    "DoS",
    "Exploits",
    "Fuzzers",
    "Generic",
    "Normal",
    "Recon",
    "Shellcode",
    "Worms",
];

pub const ANALYSIS: usize = 0;
pub const BACKDOOR: usize = 1;
pub const DOS: usize = 2;
pub const EXPLOITS: usize = 3;
pub const FUZZERS: usize = 4;
pub const GENERIC: usize = 5;
pub const NORMAL: usize = 6;
pub const RECON: usize = 7;
pub const SHELLCODE: usize = 8;
pub const WORMS: usize = 9;

/// The ordered list of traffic classes. Only the canonical order is
/// constructible; the type exists so the order travels with serialized
/// artifacts and can be checked on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassList {
    names: Vec<String>,
}

impl Default for ClassList {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ClassList {
    pub fn canonical() -> Self {
        Self {
            names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.names.iter().map(String::as_str).eq(CLASS_NAMES)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    /// Resolves a category label as it appears in UNSW-NB15 CSVs.
    ///
    /// Matching ignores surrounding whitespace and case and accepts the
    /// dataset's spelling variants (`Backdoors`, `Reconnaissance`). An empty
    /// category is treated as `Normal`, which is how the raw dumps encode
    /// benign traffic.
    pub fn index_of(&self, raw: &str) -> Result<usize> {
        let name = raw.trim();
        if name.is_empty() {
            return Ok(NORMAL);
        }
        let lower = name.to_ascii_lowercase();
        let canonical = match lower.as_str() {
            "backdoors" => "backdoor",
            "reconnaissance" => "recon",
            other => other,
        };
        self.names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(canonical))
            .ok_or_else(|| Error::UnknownClassName(name.to_string()))
    }
}

pub fn is_attack(class: usize) -> bool {
    class != NORMAL
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (j, v) in row.into_iter().enumerate() {
        if v > best_value {
            best_value = v;
            best = j;
        }
    }
    best
}
