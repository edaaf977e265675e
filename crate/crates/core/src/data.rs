//! LIBSVM-format parsing, label binarization, feature scaling and streams.
//!
//! Everything is materialized dense: feature dimensions in the target
//! datasets are at most 60, and the covariance path needs dense vectors
//! anyway.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Vector;
use crate::{Error, Result};

/// One (feature vector, binary label) pair from a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub x: Vector,
    /// Always +1.0 or -1.0.
    pub y: f64,
}

impl LabeledInstance {
    pub fn new(x: Vector, y: f64) -> Result<Self> {
        if y != 1.0 && y != -1.0 {
            return Err(Error::InvalidLabel(y));
        }
        Ok(Self { x, y })
    }
}

/// Instances as parsed, before binarization: labels carried verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub labels: Vec<f64>,
    pub features: Vec<Vector>,
    pub dim: usize,
}

/// A binarized dataset with the minority class mapped to +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub instances: Vec<LabeledInstance>,
    pub dim: usize,
    /// Negative-to-positive count ratio; >= 1 under the auto-minority rule.
    pub imbalance_ratio: f64,
}

impl Dataset {
    pub fn from_instances(instances: Vec<LabeledInstance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let dim = instances[0].x.dim();
        for inst in &instances {
            if inst.x.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: inst.x.dim() });
            }
        }
        let pos = instances.iter().filter(|i| i.y > 0.0).count();
        let neg = instances.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::SingleClass);
        }
        let imbalance_ratio = neg as f64 / pos as f64;
        Ok(Self { instances, dim, imbalance_ratio })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// How raw labels map to the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveRule {
    /// The less frequent of exactly two distinct raw labels becomes +1.
    AutoMinority,
    /// Raw labels in this set become +1, everything else -1. Required for
    /// multi-class sources, where the grouping is dataset configuration.
    Explicit(Vec<f64>),
}

/// Declarative description of one dataset on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: String,
    pub positive: PositiveRule,
    #[serde(default)]
    pub dimension_hint: Option<usize>,
}

/// Parses LIBSVM text: per line `<label> <index>:<value> ...` with 1-based,
/// strictly increasing indices; `#` starts a comment; blank lines skipped.
/// Vectors are densified to the max index seen (or `dimension_hint` if larger).
pub fn parse_libsvm(text: &str, dimension_hint: Option<usize>) -> Result<RawDataset> {
    let mut labels = Vec::new();
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut parts = line.split_whitespace();
        let label_tok = match parts.next() {
            Some(tok) => tok,
            None => continue, // blank line
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_number,
            message: format!("non-numeric label '{label_tok}'"),
        })?;
        let mut row = Vec::new();
        let mut prev_index = 0usize;
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_number,
                message: format!("expected index:value, got '{tok}'"),
            })?;
            let index: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: line_number,
                message: format!("non-numeric index '{idx_s}'"),
            })?;
            let value: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: line_number,
                message: format!("non-numeric value '{val_s}'"),
            })?;
            if index < 1 {
                return Err(Error::Parse {
                    line: line_number,
                    message: "feature indices are 1-based".into(),
                });
            }
            if index <= prev_index {
                return Err(Error::Parse {
                    line: line_number,
                    message: format!("indices must be strictly increasing (saw {index} after {prev_index})"),
                });
            }
            prev_index = index;
            max_index = max_index.max(index);
            row.push((index, value));
        }
        labels.push(label);
        sparse_rows.push(row);
    }

    let dim = max_index.max(dimension_hint.unwrap_or(0));
    let features = sparse_rows
        .into_iter()
        .map(|row| {
            let mut dense = vec![0.0; dim];
            for (index, value) in row {
                dense[index - 1] = value;
            }
            Vector::new(dense)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawDataset { labels, features, dim })
}

/// Writes a raw dataset back to LIBSVM text (zeros omitted).
pub fn to_libsvm_string(raw: &RawDataset) -> String {
    let mut out = String::new();
    for (label, x) in raw.labels.iter().zip(&raw.features) {
        out.push_str(&format!("{label}"));
        for (i, v) in x.as_slice().iter().enumerate() {
            if *v != 0.0 {
                out.push_str(&format!(" {}:{}", i + 1, v));
            }
        }
        out.push('\n');
    }
    out
}

/// Maps raw labels onto {-1, +1} and computes the imbalance ratio.
pub fn binarize(raw: &RawDataset, rule: &PositiveRule) -> Result<Dataset> {
    let positive_set: Vec<f64> = match rule {
        PositiveRule::Explicit(set) => set.clone(),
        PositiveRule::AutoMinority => {
            let mut distinct: Vec<f64> = Vec::new();
            for l in &raw.labels {
                if !distinct.contains(l) {
                    distinct.push(*l);
                }
            }
            if distinct.len() != 2 {
                return Err(Error::InvalidConfig(format!(
                    "auto_minority needs exactly 2 distinct labels, found {}; configure an explicit positive set",
                    distinct.len()
                )));
            }
            let count = |target: f64| raw.labels.iter().filter(|l| **l == target).count();
            let minority = if count(distinct[0]) <= count(distinct[1]) {
                distinct[0]
            } else {
                distinct[1]
            };
            vec![minority]
        }
    };
    let instances = raw
        .labels
        .iter()
        .zip(&raw.features)
        .map(|(label, x)| {
            let y = if positive_set.contains(label) { 1.0 } else { -1.0 };
            LabeledInstance::new(x.clone(), y)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_instances(instances)
}

/// Per-column affine map `x' = 2 (x - min) / (max - min) - 1` onto [-1, 1];
/// constant columns map to 0. Returns the per-column (min, max) so test folds
/// can be scaled with training-fold parameters.
pub fn scale_features(d: &Dataset) -> Result<(Dataset, Vec<(f64, f64)>)> {
    if d.is_empty() {
        return Err(Error::EmptyInput("scale_features dataset"));
    }
    let mut params = vec![(f64::INFINITY, f64::NEG_INFINITY); d.dim];
    for inst in &d.instances {
        for (j, v) in inst.x.as_slice().iter().enumerate() {
            params[j].0 = params[j].0.min(*v);
            params[j].1 = params[j].1.max(*v);
        }
    }
    let scaled = apply_scaling(d, &params)?;
    Ok((scaled, params))
}

/// Applies previously fitted (min, max) parameters; values outside the fitted
/// range land outside [-1, 1], which the learners tolerate.
pub fn apply_scaling(d: &Dataset, params: &[(f64, f64)]) -> Result<Dataset> {
    if params.len() != d.dim {
        return Err(Error::DimensionMismatch { expected: d.dim, got: params.len() });
    }
    let instances = d
        .instances
        .iter()
        .map(|inst| {
            let scaled: Vec<f64> = inst
                .x
                .as_slice()
                .iter()
                .zip(params)
                .map(|(v, (min, max))| {
                    if max > min {
                        2.0 * (v - min) / (max - min) - 1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(LabeledInstance { x: Vector::new(scaled)?, y: inst.y })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_instances(instances)
}

/// Deterministic shuffled copy of the instances under the given seed.
pub fn shuffled_stream(d: &Dataset, rng_seed: u64) -> Vec<LabeledInstance> {
    let mut stream = d.instances.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    stream.shuffle(&mut rng);
    stream
}
