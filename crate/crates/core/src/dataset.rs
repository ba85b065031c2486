//! Ground-truth item → label relation, CSV corpora, synthetic generators
//! and the exact inverted index used as the false-positive oracle.
//!
//! CSV format: one item per line, the item id first and its labels after
//! it, comma separated. Lines starting with `#` are comments; generated
//! files carry one recording the generator parameters.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::Ordering;
use crate::error::{Error, Result};

/// Identifier of the generator PRNG, recorded in CSV headers.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub item: String,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    rows: Vec<Row>,
    total_pairs: u64,
}

/// Anomalies tolerated while parsing a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsvWarnings {
    pub duplicate_labels: usize,
    pub empty_fields: usize,
}

impl Dataset {
    /// Rejects duplicate item ids and drops repeated labels within a row.
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            if !seen.insert(row.item.clone()) {
                return Err(Error::DuplicateItem(row.item));
            }
            let mut labels_seen = HashSet::with_capacity(row.labels.len());
            let labels = row
                .labels
                .into_iter()
                .filter(|l| labels_seen.insert(l.clone()))
                .collect();
            out.push(Row {
                item: row.item,
                labels,
            });
        }
        Ok(Self::from_valid_rows(out))
    }

    fn from_valid_rows(rows: Vec<Row>) -> Self {
        let total_pairs = rows.iter().map(|r| r.labels.len() as u64).sum();
        Dataset { rows, total_pairs }
    }

    /// Convenience constructor from `(item, [labels])` pairs.
    pub fn from_pairs<I, L, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L)>,
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(item, labels)| Row {
                    item: item.into(),
                    labels: labels.into_iter().map(Into::into).collect(),
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Number of items `N`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sum of per-item label counts.
    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    /// Items in input order.
    pub fn input_ordering(&self) -> Ordering {
        Ordering::new(self.rows.iter().map(|r| r.item.clone())).expect("item ids are distinct")
    }

    /// Distinct labels in order of first appearance.
    pub fn label_universe(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .flat_map(|r| r.labels.iter())
            .filter(|l| seen.insert(l.as_str()))
            .map(String::as_str)
            .collect()
    }

    pub fn exact_index(&self) -> ExactIndex {
        ExactIndex::build(self)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let (dataset, warnings) = Self::parse_csv(File::open(path)?)?;
        if warnings.duplicate_labels > 0 {
            warn!("dropped {} duplicate labels", warnings.duplicate_labels);
        }
        if warnings.empty_fields > 0 {
            warn!("skipped {} empty label fields", warnings.empty_fields);
        }
        Ok(dataset)
    }

    pub fn parse_csv<R: Read>(reader: R) -> Result<(Self, CsvWarnings)> {
        let mut warnings = CsvWarnings::default();
        let mut rows = Vec::new();
        let mut seen_items = HashSet::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',');
            let item = fields.next().unwrap_or_default().to_string();
            if !seen_items.insert(item.clone()) {
                return Err(Error::DuplicateItemAtLine {
                    line: idx + 1,
                    item,
                });
            }
            let mut labels_seen = HashSet::new();
            let mut labels = Vec::new();
            for field in fields {
                if field.is_empty() {
                    warnings.empty_fields += 1;
                } else if labels_seen.insert(field) {
                    labels.push(field.to_string());
                } else {
                    warnings.duplicate_labels += 1;
                }
            }
            rows.push(Row { item, labels });
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok((Self::from_valid_rows(rows), warnings))
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: Option<&str>) -> Result<()> {
        if let Some(h) = header {
            writeln!(w, "# {h}")?;
        }
        for row in &self.rows {
            w.write_all(row.item.as_bytes())?;
            for label in &row.labels {
                w.write_all(b",")?;
                w.write_all(label.as_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Exact forward (item → labels) and inverted (label → items) maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactIndex {
    items: Vec<String>,
    forward: IndexMap<String, Vec<String>>,
    inverted: IndexMap<String, Vec<usize>>,
}

impl ExactIndex {
    pub fn build(dataset: &Dataset) -> Self {
        let items: Vec<String> = dataset.rows().iter().map(|r| r.item.clone()).collect();
        let mut forward = IndexMap::with_capacity(items.len());
        let mut inverted: IndexMap<String, Vec<usize>> = IndexMap::new();
        for (pos, row) in dataset.rows().iter().enumerate() {
            forward.insert(row.item.clone(), row.labels.clone());
            for label in &row.labels {
                inverted.entry(label.clone()).or_default().push(pos);
            }
        }
        ExactIndex {
            items,
            forward,
            inverted,
        }
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Labels in order of first appearance.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.inverted.keys().map(String::as_str)
    }

    pub fn label_count(&self) -> usize {
        self.inverted.len()
    }

    pub fn forward(&self, item: &str) -> Option<&[String]> {
        self.forward.get(item).map(Vec::as_slice)
    }

    /// Dataset positions of the items carrying `label`.
    pub fn inverted_positions(&self, label: &str) -> &[usize] {
        self.inverted.get(label).map_or(&[], Vec::as_slice)
    }

    /// Item ids carrying `label`; empty for unknown labels.
    pub fn inverted(&self, label: &str) -> Vec<&str> {
        self.inverted_positions(label)
            .iter()
            .map(|&p| self.items[p].as_str())
            .collect()
    }

    /// Every `(label, items)` pair in label order.
    pub fn inverted_items(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        self.inverted.iter().map(|(label, positions)| {
            (
                label.as_str(),
                positions.iter().map(|&p| self.items[p].as_str()).collect(),
            )
        })
    }

    /// Rebuilds item → labels from the inverted map alone.
    pub fn transpose(&self) -> IndexMap<String, Vec<String>> {
        let mut forward: IndexMap<String, Vec<String>> = self
            .items
            .iter()
            .map(|i| (i.clone(), Vec::new()))
            .collect();
        for (label, positions) in &self.inverted {
            for &p in positions {
                forward[p].push(label.clone());
            }
        }
        forward
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    /// Each (item, label) pair is assigned independently with probability `p`.
    Uniform { p: f64 },
    /// The item at rank `r` receives each label with probability
    /// `min(1, scale · f(r; s, N))`.
    Zipf { s: f64, scale: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub items: usize,
    pub label_universe: usize,
    pub distribution: Distribution,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        match self.distribution {
            Distribution::Uniform { p } if !(0.0..=1.0).contains(&p) => Err(Error::InvalidParameter(
                format!("uniform probability {p} is not in [0, 1]"),
            )),
            Distribution::Zipf { s, .. } if !(s > 0.0) => {
                Err(Error::InvalidParameter(format!("zipf exponent {s} must be > 0")))
            }
            Distribution::Zipf { scale, .. } if !(scale > 0.0) => {
                Err(Error::InvalidParameter(format!("zipf scale {scale} must be > 0")))
            }
            _ => Ok(()),
        }
    }

    /// The comment line written at the top of generated CSV files.
    pub fn header(&self) -> String {
        let dist = match self.distribution {
            Distribution::Uniform { p } => format!("dist=uniform p={p}"),
            Distribution::Zipf { s, scale } => format!("dist=zipf s={s} scale={scale}"),
        };
        format!(
            "seed={} {dist} items={} labels={} rng={RNG_ALGORITHM}",
            self.seed, self.items, self.label_universe
        )
    }
}

/// Normalized Zipf weights `f(r; s, N) = r^-s / H(N, s)` for ranks `1..=N`.
pub fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
    let harmonic: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / harmonic).collect()
}

/// Item ids are `e1..eN` and labels `l1..lL`; item `e{r}` has Zipf rank `r`.
pub fn generate(config: &GenConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let probs: Vec<f64> = match config.distribution {
        Distribution::Uniform { p } => vec![p; config.items],
        Distribution::Zipf { s, scale } => zipf_weights(config.items, s)
            .into_iter()
            .map(|w| (scale * w).min(1.0))
            .collect(),
    };
    let rows = probs
        .iter()
        .enumerate()
        .map(|(i, &q)| Row {
            item: format!("e{}", i + 1),
            labels: (1..=config.label_universe)
                .filter(|_| rng.gen::<f64>() < q)
                .map(|l| format!("l{l}"))
                .collect(),
        })
        .collect();
    Ok(Dataset::from_valid_rows(rows))
}

pub fn generate_uniform(items: usize, label_universe: usize, p: f64, seed: u64) -> Result<Dataset> {
    generate(&GenConfig {
        items,
        label_universe,
        distribution: Distribution::Uniform { p },
        seed,
    })
}

pub fn generate_zipf(items: usize, label_universe: usize, s: f64, scale: f64, seed: u64) -> Result<Dataset> {
    generate(&GenConfig {
        items,
        label_universe,
        distribution: Distribution::Zipf { s, scale },
        seed,
    })
}
