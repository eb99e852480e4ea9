//! Label-path extraction and MAP gesture spotting.
//!
//! The network's outputs are collapsed to a path `A = (a_1..a_T)` by taking
//! the most probable class at each timestep. Each class `i` is then "spotted"
//! as the set `I_i` of timesteps carrying its label. An ordered outcome
//! `R = (r_1..r_k)` of distinct classes is scored by
//!
//! ```text
//! Pr(R | A) = ∏_j |I_{r_j}| / T
//! ```
//!
//! which is maximized by the `k` classes with the largest `|I_i|`. They are
//! reported in order of first appearance in the path.
//!
//! Classes are 1-based throughout this module.

use std::ops::Deref;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("empty output sequence")]
    Empty,
    #[error("label {label} at timestep {t} is outside 1..={classes}")]
    LabelOutOfRange {
        t: usize,
        label: usize,
        classes: usize,
    },
    #[error("output at timestep {t} has {actual} classes, expected {expected}")]
    Width {
        t: usize,
        expected: usize,
        actual: usize,
    },
    #[error(
        "cannot decode {k} distinct gestures: the path contains only {distinct} distinct labels"
    )]
    TooFewLabels { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

/// Per-timestep class labels `a_1..a_T` (1-based classes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct LabelPath(Vec<usize>);

impl LabelPath {
    /// Validates `T ≥ 1` and every label in `1..=classes`.
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self, DecodeError> {
        if labels.is_empty() {
            return Err(DecodeError::Empty);
        }
        if let Some(t) = labels.iter().position(|&l| l == 0 || l > classes) {
            return Err(DecodeError::LabelOutOfRange {
                t: t + 1,
                label: labels[t],
                classes,
            });
        }
        Ok(Self(labels))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for LabelPath {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// `a_t = argmax_j y_{t,j}`, ties going to the smallest class index.
pub fn argmax_path<Y: AsRef<[f64]>>(outputs: &[Y]) -> Result<LabelPath, DecodeError> {
    let classes = outputs.first().ok_or(DecodeError::Empty)?.as_ref().len();
    if classes == 0 {
        return Err(DecodeError::Width {
            t: 1,
            expected: 1,
            actual: 0,
        });
    }
    let mut labels = Vec::with_capacity(outputs.len());
    for (t, y) in outputs.iter().enumerate() {
        let y = y.as_ref();
        if y.len() != classes {
            return Err(DecodeError::Width {
                t: t + 1,
                expected: classes,
                actual: y.len(),
            });
        }
        let mut best = 0;
        for (j, &p) in y.iter().enumerate().skip(1) {
            if p > y[best] {
                best = j;
            }
        }
        labels.push(best + 1);
    }
    Ok(LabelPath(labels))
}

/// Timestep sets `I_i` for every class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpottingTable {
    len: usize,
    /// 1-based timesteps per class; `sets[i - 1]` is `I_i`.
    sets: Vec<Vec<usize>>,
}

impl SpottingTable {
    pub fn classes(&self) -> usize {
        self.sets.len()
    }

    /// Path length `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `I_class` as 1-based timesteps.
    pub fn timesteps(&self, class: usize) -> &[usize] {
        &self.sets[class - 1]
    }

    /// `|I_class|`; zero for classes outside the table.
    pub fn cardinality(&self, class: usize) -> usize {
        class
            .checked_sub(1)
            .and_then(|i| self.sets.get(i))
            .map_or(0, Vec::len)
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    /// 1-based timestep where `class` first appears.
    pub fn first_occurrence(&self, class: usize) -> Option<usize> {
        self.sets[class - 1].first().copied()
    }

    /// Number of classes with `|I_i| > 0`.
    pub fn distinct(&self) -> usize {
        self.sets.iter().filter(|s| !s.is_empty()).count()
    }
}

/// Partitions the path's timesteps by label. Labels above `classes` widen the table.
pub fn spot(path: &LabelPath, classes: usize) -> SpottingTable {
    let width = path.iter().copied().max().unwrap_or(0).max(classes);
    let mut sets = vec![Vec::new(); width];
    for (t, &label) in path.iter().enumerate() {
        sets[label - 1].push(t + 1);
    }
    SpottingTable {
        len: path.len(),
        sets,
    }
}

/// `∏_j |I_{r_j}| / T`. Classes absent from the path contribute a factor of 0.
pub fn posterior(outcome: &[usize], table: &SpottingTable) -> f64 {
    let t = table.len() as f64;
    outcome
        .iter()
        .map(|&r| table.cardinality(r) as f64 / t)
        .product()
}

/// The posterior as an exact ratio `(∏ |I_{r_j}|, T^k)`. `None` on `u128` overflow.
pub fn posterior_ratio(outcome: &[usize], table: &SpottingTable) -> Option<(u128, u128)> {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for &r in outcome {
        num = num.checked_mul(table.cardinality(r) as u128)?;
        den = den.checked_mul(table.len() as u128)?;
    }
    Some((num, den))
}

/// A decoded ordered outcome with its score and the spotting that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recognition {
    /// `r_1..r_k`, distinct 1-based classes.
    pub outcome: Vec<usize>,
    pub posterior: f64,
    pub spotting: SpottingTable,
    /// The member set 𝒦, ascending.
    pub top_k: Vec<usize>,
}

impl Recognition {
    fn new(outcome: Vec<usize>, spotting: SpottingTable) -> Self {
        let posterior = posterior(&outcome, &spotting);
        let mut top_k = outcome.clone();
        top_k.sort_unstable();
        Self {
            outcome,
            posterior,
            spotting,
            top_k,
        }
    }

    pub fn k(&self) -> usize {
        self.outcome.len()
    }

    pub fn posterior_ratio(&self) -> Option<(u128, u128)> {
        posterior_ratio(&self.outcome, &self.spotting)
    }
}

fn check_k(k: usize, table: &SpottingTable) -> Result<(), DecodeError> {
    if k == 0 {
        return Err(DecodeError::ZeroK);
    }
    let distinct = table.distinct();
    if k > distinct {
        return Err(DecodeError::TooFewLabels { k, distinct });
    }
    Ok(())
}

/// MAP outcome: the `k` largest-cardinality classes, ordered by first occurrence.
///
/// Cardinality ties at the boundary of the member set favour the class that
/// appears earlier in the path, then the smaller index.
pub fn map_decode(path: &LabelPath, k: usize) -> Result<Recognition, DecodeError> {
    let table = spot(path, 0);
    check_k(k, &table)?;
    let mut present: Vec<usize> = (1..=table.classes())
        .filter(|&c| table.cardinality(c) > 0)
        .collect();
    present.sort_by_key(|&c| {
        (
            std::cmp::Reverse(table.cardinality(c)),
            table.first_occurrence(c),
            c,
        )
    });
    let mut members = present[..k].to_vec();
    members.sort_by_key(|&c| table.first_occurrence(c));
    Ok(Recognition::new(members, table))
}

/// Exhaustive search over ordered `k`-tuples of distinct classes in `1..=classes`.
///
/// Verification oracle for [`map_decode`]; exponential in `k`. Scores are
/// compared as exact integer products, and the first maximizer in
/// lexicographic order is returned.
pub fn brute_force_decode(
    path: &LabelPath,
    classes: usize,
    k: usize,
) -> Result<Recognition, DecodeError> {
    let table = spot(path, classes);
    check_k(k, &table)?;
    let q = table.classes();
    let mut best: Option<(u128, Vec<usize>)> = None;
    let mut tuple = Vec::with_capacity(k);
    let mut used = vec![false; q + 1];

    fn visit(
        q: usize,
        k: usize,
        table: &SpottingTable,
        tuple: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(u128, Vec<usize>)>,
    ) {
        if tuple.len() == k {
            let score: u128 = tuple
                .iter()
                .map(|&r| table.cardinality(r) as u128)
                .product();
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                *best = Some((score, tuple.clone()));
            }
            return;
        }
        for c in 1..=q {
            if !used[c] {
                used[c] = true;
                tuple.push(c);
                visit(q, k, table, tuple, used, best);
                tuple.pop();
                used[c] = false;
            }
        }
    }

    visit(q, k, &table, &mut tuple, &mut used, &mut best);
    let (_, outcome) = best.expect("k <= distinct labels <= classes, so a tuple exists");
    Ok(Recognition::new(outcome, table))
}
