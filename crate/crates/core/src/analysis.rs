//! Observed false-positive rates, the Bloom Test, and benchmark sweeps.
//!
//! The observed rate of a single-label lookup `l` compares the returned
//! set against the exact index:
//!
//! ```text
//! FP  = |lookup(l)| - |f(l)|
//! TN  = N - |lookup(l)|
//! FPR = FP / (TN + FP)        (0 when TN + FP = 0)
//! ```

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ExactIndex};
use crate::error::{Error, Result};
use crate::filter::size_for;
use crate::hashing::HashFamily;
use crate::matrix::{average_labels_per_item, sparse_ordering, BloomMatrix, MatrixLayout};
use crate::vector::BloomVector;
use crate::{LookupMode, MultiFilter};

#[derive(Clone, Debug, PartialEq)]
pub struct FprMeasurement {
    pub per_label: IndexMap<String, f64>,
    pub average: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
}

/// Scores single-label lookups of `labels` against `oracle`. A lookup that
/// misses a true item is reported as [`Error::FalseNegative`].
pub fn measure_fpr(structure: &dyn MultiFilter, oracle: &ExactIndex, labels: &[&str]) -> Result<FprMeasurement> {
    if labels.is_empty() {
        return Err(Error::EmptyLabelSet);
    }
    let ordering = structure.ordering();
    let big_n = ordering.len() as u64;
    if oracle.item_count() != ordering.len() {
        return Err(Error::LengthMismatch {
            expected: oracle.item_count(),
            actual: ordering.len(),
        });
    }
    // Oracle positions follow the dataset; the structure may be reordered.
    let to_structure: Vec<usize> = oracle
        .items()
        .iter()
        .map(|item| {
            ordering
                .index_of(item)
                .ok_or_else(|| Error::UnknownItem(item.clone()))
        })
        .collect::<Result<_>>()?;

    let mut per_label = IndexMap::with_capacity(labels.len());
    let (mut tp, mut fp, mut tn) = (0u64, 0u64, 0u64);
    for &label in labels {
        let bits = structure.lookup_bits(label);
        let truth = oracle.inverted_positions(label);
        for &p in truth {
            let pos = to_structure[p];
            if !bits.bit(pos) {
                return Err(Error::FalseNegative {
                    label: label.to_string(),
                    item: oracle.items()[p].clone(),
                });
            }
        }
        let returned = bits.count_ones() as u64;
        let true_hits = truth.len() as u64;
        let false_hits = returned - true_hits;
        let negatives = big_n - returned;
        let rate = if negatives + false_hits == 0 {
            0.0
        } else {
            false_hits as f64 / (negatives + false_hits) as f64
        };
        tp += true_hits;
        fp += false_hits;
        tn += negatives;
        per_label.insert(label.to_string(), rate);
    }
    let average = per_label.values().sum::<f64>() / per_label.len() as f64;
    Ok(FprMeasurement {
        per_label,
        average,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
    })
}

/// `count` distinct labels drawn uniformly from the oracle's label universe
/// (all of them when there are fewer).
pub fn sample_labels(oracle: &ExactIndex, count: usize, seed: u64) -> Vec<&str> {
    let universe: Vec<&str> = oracle.labels().collect();
    if count >= universe.len() {
        return universe;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, universe.len(), count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| universe[i]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Uniform,
    NonUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    /// Dense Bloom Matrix.
    Bm,
    /// Sparse Bloom Matrix.
    Sbm,
    /// Bloom Vector.
    Bv,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Bm => "bm",
            StructureKind::Sbm => "sbm",
            StructureKind::Bv => "bv",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm" => Ok(StructureKind::Bm),
            "sbm" => Ok(StructureKind::Sbm),
            "bv" => Ok(StructureKind::Bv),
            other => Err(Error::InvalidParameter(format!("unknown structure `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BloomTestVerdict {
    pub expected_fpr: f64,
    pub observed_fpr: f64,
    pub ratio: f64,
    pub classification: Classification,
    pub recommendation: StructureKind,
}

impl fmt::Display for BloomTestVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "classification={:?} recommendation={} observed={} expected={}",
            self.classification, self.recommendation, self.observed_fpr, self.expected_fpr
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BloomTestConfig {
    pub expected_fpr: f64,
    pub probe_labels: usize,
    /// Observed/expected ratio above which the data is non-uniform.
    pub ratio_threshold: f64,
    /// Observed rate that must also be exceeded.
    pub observed_floor: f64,
    pub seed: u64,
}

impl Default for BloomTestConfig {
    fn default() -> Self {
        BloomTestConfig {
            expected_fpr: 1e-3,
            probe_labels: 1000,
            ratio_threshold: 10.0,
            observed_floor: 1e-2,
            seed: 0,
        }
    }
}

/// Builds a dense Bloom Matrix sized for the average item, probes it with
/// sampled labels, and classifies the label distribution.
pub fn bloom_test(dataset: &Dataset, config: &BloomTestConfig) -> Result<BloomTestVerdict> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let matrix = BloomMatrix::build(dataset, config.expected_fpr, MatrixLayout::Dense)?;
    let oracle = dataset.exact_index();
    let probes = sample_labels(&oracle, config.probe_labels, config.seed);
    if probes.is_empty() {
        return Err(Error::InvalidParameter("dataset has no labels to probe".into()));
    }
    let observed = measure_fpr(&matrix, &oracle, &probes)?.average;
    let ratio = observed / config.expected_fpr;
    let non_uniform = ratio > config.ratio_threshold && observed > config.observed_floor;
    let (classification, recommendation) = if non_uniform {
        (Classification::NonUniform, StructureKind::Bv)
    } else {
        (Classification::Uniform, StructureKind::Bm)
    };
    Ok(BloomTestVerdict {
        expected_fpr: config.expected_fpr,
        observed_fpr: observed,
        ratio,
        classification,
        recommendation,
    })
}

/// One benchmark measurement. Serialized field order is the wire format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub structure: StructureKind,
    pub target_fpr: f64,
    /// Rows for matrices; mean filter width for vectors.
    pub m: u64,
    /// Mean function count for vectors.
    pub k: u64,
    pub stored_bits: u64,
    pub avg_add_ns: f64,
    pub avg_lookup_ns: f64,
    pub observed_fpr: f64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(skip)]
    pub dataset: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub structures: Vec<StructureKind>,
    pub target_fprs: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub probe_labels: usize,
    /// Timing repetitions; the median is reported.
    pub repetitions: usize,
    pub seed: u64,
    /// Free-form identity of the dataset, carried on each record.
    pub dataset: String,
}

/// Target rates used throughout the evaluation.
pub const FPR_GRID: [f64; 8] = [0.9, 0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            structures: vec![StructureKind::Bm, StructureKind::Sbm, StructureKind::Bv],
            target_fprs: FPR_GRID.to_vec(),
            batch_sizes: vec![1],
            probe_labels: 1000,
            repetitions: 5,
            seed: 0,
            dataset: String::new(),
        }
    }
}

/// Structure with items in place and no labels yet.
fn empty_structure(dataset: &Dataset, kind: StructureKind, p: f64) -> Result<Box<dyn MultiFilter>> {
    Ok(match kind {
        StructureKind::Bm | StructureKind::Sbm => {
            let params = size_for(average_labels_per_item(dataset), p)?;
            let (ordering, layout) = if kind == StructureKind::Bm {
                (dataset.input_ordering(), MatrixLayout::Dense)
            } else {
                (sparse_ordering(dataset), MatrixLayout::Sparse)
            };
            Box::new(BloomMatrix::new(params.m, ordering, HashFamily::murmur(params.k)?, layout)?)
        }
        StructureKind::Bv => {
            let mut v = BloomVector::new(HashFamily::murmur(1)?);
            for row in dataset.rows() {
                v.add_item(&row.item, row.labels.len() as u64, p)?;
            }
            Box::new(v)
        }
    })
}

/// Builds `kind` at target rate `p`, returning it with the add-phase time.
fn timed_build(
    dataset: &Dataset,
    inverted: &[(&str, Vec<&str>)],
    kind: StructureKind,
    p: f64,
) -> Result<(Box<dyn MultiFilter>, u128)> {
    let mut s = empty_structure(dataset, kind, p)?;
    let start = Instant::now();
    for (label, items) in inverted {
        s.add_label(label, items)?;
    }
    Ok((s, start.elapsed().as_nanos()))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn dimensions(s: &dyn MultiFilter, kind: StructureKind, dataset: &Dataset, p: f64) -> Result<(u64, u64)> {
    match kind {
        StructureKind::Bm | StructureKind::Sbm => {
            let params = size_for(average_labels_per_item(dataset), p)?;
            Ok((params.m as u64, params.k as u64))
        }
        StructureKind::Bv => {
            let n = dataset.len().max(1) as f64;
            let mut m_sum = 0.0;
            let mut k_sum = 0.0;
            for row in dataset.rows() {
                let params = size_for(row.labels.len() as u64, p)?;
                m_sum += params.m as f64;
                k_sum += params.k as f64;
            }
            debug_assert_eq!(s.stored_bits() as f64, m_sum);
            Ok(((m_sum / n).round() as u64, (k_sum / n).round() as u64))
        }
    }
}

/// Builds every `(structure, target rate)` pair, measuring storage, add and
/// lookup latency (median of the repetitions) and observed single-label
/// false-positive rate. One record per batch size.
pub fn bench_sweep(dataset: &Dataset, config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_sizes.iter().any(|&b| b == 0) {
        return Err(Error::InvalidParameter("batch sizes must be at least 1".into()));
    }
    let oracle = dataset.exact_index();
    let inverted: Vec<(&str, Vec<&str>)> = oracle.inverted_items().collect();
    let label_count = inverted.len().max(1) as f64;
    let probes = sample_labels(&oracle, config.probe_labels, config.seed);
    if probes.is_empty() {
        return Err(Error::InvalidParameter("dataset has no labels to probe".into()));
    }
    let reps = config.repetitions.max(1);

    let mut records = Vec::new();
    for &kind in &config.structures {
        for &p in &config.target_fprs {
            let mut add_ns = Vec::with_capacity(reps);
            let mut built = None;
            for _ in 0..reps {
                let (s, ns) = timed_build(dataset, &inverted, kind, p)?;
                add_ns.push(ns as f64 / label_count);
                built = Some(s);
            }
            let s = built.expect("at least one repetition");
            let observed = measure_fpr(s.as_ref(), &oracle, &probes)?.average;
            let (m, k) = dimensions(s.as_ref(), kind, dataset, p)?;

            for &batch in &config.batch_sizes {
                let batches: Vec<Vec<&str>> = lookup_batches(&probes, batch);
                let mut lookup_ns = Vec::with_capacity(reps);
                for _ in 0..reps {
                    let start = Instant::now();
                    for b in &batches {
                        black_box(s.lookup_labels(b, LookupMode::And)?);
                    }
                    lookup_ns.push(start.elapsed().as_nanos() as f64 / batches.len() as f64);
                }
                records.push(BenchRecord {
                    structure: kind,
                    target_fpr: p,
                    m,
                    k,
                    stored_bits: s.stored_bits(),
                    avg_add_ns: median(add_ns.clone()),
                    avg_lookup_ns: median(lookup_ns),
                    observed_fpr: observed,
                    batch_size: batch,
                    seed: config.seed,
                    dataset: config.dataset.clone(),
                });
            }
        }
    }
    Ok(records)
}

/// Consecutive windows of `size` probe labels, wrapping around so that
/// every batch is full.
fn lookup_batches<'a>(probes: &[&'a str], size: usize) -> Vec<Vec<&'a str>> {
    let count = probes.len().div_ceil(size).max(1);
    (0..count)
        .map(|b| {
            (0..size)
                .map(|j| probes[(b * size + j) % probes.len()])
                .collect()
        })
        .collect()
}

/// Header row then one line per record.
pub fn write_csv<W: Write, T: Serialize>(records: &[T], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer
            .serialize(r)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer.flush()?;
    Ok(())
}

/// A JSON array of objects.
pub fn write_json<W: Write, T: Serialize>(records: &[T], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, records).map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::FixedTable;
    use crate::Ordering;

    fn example_matrix() -> (BloomMatrix, ExactIndex) {
        let table = FixedTable::new()
            .with("l1", 8, &[0, 7])
            .with("l2", 8, &[2, 4])
            .with("l3", 8, &[2, 7]);
        let ordering = Ordering::new(["e1", "e2", "e3", "e4", "e5"]).unwrap();
        let mut bm = BloomMatrix::new(
            8,
            ordering,
            HashFamily::fixed_table(2, table).unwrap(),
            MatrixLayout::Dense,
        )
        .unwrap();
        bm.add_label("l1", &["e2", "e4"]).unwrap();
        bm.add_label("l2", &["e1", "e2", "e5"]).unwrap();
        bm.add_label("l3", &["e3", "e5"]).unwrap();
        let ds = Dataset::from_pairs([
            ("e1", vec!["l2"]),
            ("e2", vec!["l1", "l2"]),
            ("e3", vec!["l3"]),
            ("e4", vec!["l1"]),
            ("e5", vec!["l2", "l3"]),
        ])
        .unwrap();
        (bm, ds.exact_index())
    }

    #[test]
    fn observed_rate_of_worked_example() {
        let (bm, oracle) = example_matrix();
        let m = measure_fpr(&bm, &oracle, &["l3"]).unwrap();
        assert!((m.per_label["l3"] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((m.true_positives, m.false_positives, m.true_negatives), (2, 1, 2));

        let exact = measure_fpr(&bm, &oracle, &["l1"]).unwrap();
        assert_eq!(exact.average, 0.0);
    }

    #[test]
    fn saturated_lookup_has_zero_rate() {
        let ds = Dataset::from_pairs([("a", vec!["x"]), ("b", vec!["x"])]).unwrap();
        let bm = BloomMatrix::build(&ds, 0.5, MatrixLayout::Dense).unwrap();
        let m = measure_fpr(&bm, &ds.exact_index(), &["x"]).unwrap();
        assert_eq!(m.average, 0.0);
    }

    #[test]
    fn false_negative_is_error() {
        let (bm, _) = example_matrix();
        // An oracle claiming e1 carries l1 contradicts the matrix.
        let wrong = Dataset::from_pairs([
            ("e1", vec!["l1"]),
            ("e2", vec!["l1"]),
            ("e3", vec![]),
            ("e4", vec!["l1"]),
            ("e5", vec![]),
        ])
        .unwrap()
        .exact_index();
        assert!(matches!(
            measure_fpr(&bm, &wrong, &["l1"]),
            Err(Error::FalseNegative { .. })
        ));
    }

    #[test]
    fn verdict_line() {
        let v = BloomTestVerdict {
            expected_fpr: 0.001,
            observed_fpr: 0.05,
            ratio: 50.0,
            classification: Classification::NonUniform,
            recommendation: StructureKind::Bv,
        };
        assert_eq!(
            v.to_string(),
            "classification=NonUniform recommendation=bv observed=0.05 expected=0.001"
        );
    }

    #[test]
    fn csv_header_names() {
        let r = BenchRecord {
            structure: StructureKind::Sbm,
            target_fpr: 0.1,
            m: 10,
            k: 3,
            stored_bits: 99,
            avg_add_ns: 1.5,
            avg_lookup_ns: 2.5,
            observed_fpr: 0.09,
            batch_size: 1,
            seed: 7,
            dataset: "x".into(),
        };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "structure,target_fpr,m,k,stored_bits,avg_add_ns,avg_lookup_ns,observed_fpr,batch_size,seed"
        );
        assert_eq!(lines.next().unwrap(), "sbm,0.1,10,3,99,1.5,2.5,0.09,1,7");
    }

    #[test]
    fn batches_wrap_and_fill() {
        let probes = ["a", "b", "c"];
        assert_eq!(lookup_batches(&probes, 2), vec![vec!["a", "b"], vec!["c", "a"]]);
        assert_eq!(lookup_batches(&probes, 5).len(), 1);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
