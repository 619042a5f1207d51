//! Flat key=value config file. Flags override file values; defaults fill the
//! rest. Keys are validated eagerly against the full knob table so a typo
//! fails any command with a usage error, not just the command that would
//! have read it.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{AlgChoice, CliError, CliResult};

#[derive(Clone, Copy)]
enum Kind {
    Usize,
    U64,
    F64,
    Alg,
}

/// Every config-settable knob and its value type. File paths are flags-only:
/// a config file holds run parameters, not run inputs.
const KNOBS: &[(&str, Kind)] = &[
    ("alg", Kind::Alg),
    ("count", Kind::Usize),
    ("epochs", Kind::Usize),
    ("epsilon", Kind::F64),
    ("k1", Kind::Usize),
    ("metrics-every", Kind::Usize),
    ("n", Kind::U64),
    ("patch-width", Kind::Usize),
    ("seed", Kind::U64),
    ("t0", Kind::Usize),
    ("tau", Kind::F64),
    ("threads", Kind::Usize),
    ("v1", Kind::F64),
];

fn parse_alg(v: &str) -> Option<AlgChoice> {
    match v {
        "auto" => Some(AlgChoice::Auto),
        "alg1" => Some(AlgChoice::Alg1),
        "alg2" => Some(AlgChoice::Alg2),
        "exact" => Some(AlgChoice::Exact),
        _ => None,
    }
}

/// Parsed config file; values are kept as validated strings and re-parsed by
/// the typed getters.
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self { values: BTreeMap::new() }
    }

    /// Reads and validates a config file. Unreadable file → data error;
    /// unknown key, duplicate key or malformed value → usage error.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::App(infomax::Error::Io(std::io::Error::new(
                e.kind(),
                format!("config {}: {}", path.display(), e),
            )))
        })?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {}:{}: expected key=value, got {:?}",
                    path.display(),
                    lineno + 1,
                    raw
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some((_, kind)) = KNOBS.iter().find(|(k, _)| *k == key) else {
                return Err(CliError::Usage(format!(
                    "config {}:{}: unknown key {:?}",
                    path.display(),
                    lineno + 1,
                    key
                )));
            };
            let ok = match kind {
                Kind::Usize => value.parse::<usize>().is_ok(),
                Kind::U64 => value.parse::<u64>().is_ok(),
                Kind::F64 => value.parse::<f64>().is_ok_and(f64::is_finite),
                Kind::Alg => parse_alg(value).is_some(),
            };
            if !ok {
                return Err(CliError::Usage(format!(
                    "config {}:{}: bad value {:?} for key {:?}",
                    path.display(),
                    lineno + 1,
                    value,
                    key
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "config {}:{}: duplicate key {:?}",
                    path.display(),
                    lineno + 1,
                    key
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn usize(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|v| v.parse().expect("validated on load"))
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        self.values.get(key).map(|v| v.parse().expect("validated on load"))
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|v| v.parse().expect("validated on load"))
    }

    pub fn alg(&self, key: &str) -> Option<AlgChoice> {
        self.values.get(key).map(|v| parse_alg(v).expect("validated on load"))
    }
}
