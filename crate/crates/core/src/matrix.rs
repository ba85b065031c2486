//! Bloom Matrix and its sparse layout.
//!
//! Rows are the atomic storage unit: adding a label ORs the encoded item set
//! into each row of the label's neighborhood, and lookup ANDs those rows.

use indexmap::IndexMap;

use crate::bitset::{Bitset, Ordering, SparseRow};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::{exact_fp, size_for};
use crate::hashing::HashFamily;
use crate::{FpReport, MultiFilter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatrixLayout {
    /// Full `m × N` rows, dataset input order.
    Dense,
    /// Trailing zeros trimmed; items ordered by decreasing label count.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Rows {
    Dense(Vec<Bitset>),
    Sparse(Vec<SparseRow>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomMatrix {
    rows: Rows,
    ordering: Ordering,
    family: HashFamily,
    insertions: Option<IndexMap<String, u64>>,
}

impl BloomMatrix {
    /// Empty matrix with `m` rows over `ordering`.
    pub fn new(m: usize, ordering: Ordering, family: HashFamily, layout: MatrixLayout) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let n = ordering.len();
        let rows = match layout {
            MatrixLayout::Dense => Rows::Dense(vec![Bitset::new(n); m]),
            MatrixLayout::Sparse => Rows::Sparse(vec![SparseRow::empty(n); m]),
        };
        Ok(BloomMatrix {
            rows,
            ordering,
            family,
            insertions: None,
        })
    }

    /// Keeps a per-label tally of inserted item counts for
    /// [`theoretical_fpr`](Self::theoretical_fpr).
    pub fn track_insertions(mut self) -> Self {
        self.insertions.get_or_insert_with(IndexMap::new);
        self
    }

    /// Sizes the matrix for the average label count per item at target
    /// rate `p` and adds every label of `dataset`.
    pub fn build(dataset: &Dataset, p: f64, layout: MatrixLayout) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let params = size_for(average_labels_per_item(dataset), p)?;
        Self::build_with(dataset, params.m, HashFamily::murmur(params.k)?, layout, false)
    }

    /// Builds with explicit `m` and hash family.
    pub fn build_with(
        dataset: &Dataset,
        m: usize,
        family: HashFamily,
        layout: MatrixLayout,
        track: bool,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let ordering = match layout {
            MatrixLayout::Dense => dataset.input_ordering(),
            MatrixLayout::Sparse => sparse_ordering(dataset),
        };
        let mut matrix = Self::new(m, ordering, family, layout)?;
        if track {
            matrix = matrix.track_insertions();
        }
        for (label, items) in dataset.exact_index().inverted_items() {
            matrix.add_label(label, &items)?;
        }
        Ok(matrix)
    }

    pub fn m(&self) -> usize {
        match &self.rows {
            Rows::Dense(r) => r.len(),
            Rows::Sparse(r) => r.len(),
        }
    }

    pub fn k(&self) -> usize {
        self.family.k()
    }

    pub fn item_count(&self) -> usize {
        self.ordering.len()
    }

    pub fn layout(&self) -> MatrixLayout {
        match self.rows {
            Rows::Dense(_) => MatrixLayout::Dense,
            Rows::Sparse(_) => MatrixLayout::Sparse,
        }
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    /// Row `r` as a dense bitset.
    pub fn row(&self, r: usize) -> Option<Bitset> {
        match &self.rows {
            Rows::Dense(rows) => rows.get(r).cloned(),
            Rows::Sparse(rows) => rows.get(r).map(crate::bitset::densify),
        }
    }

    pub fn get(&self, row: usize, column: usize) -> Result<bool> {
        match &self.rows {
            Rows::Dense(rows) => rows
                .get(row)
                .ok_or(Error::OutOfRange {
                    position: row,
                    length: rows.len(),
                })?
                .get(column),
            Rows::Sparse(rows) => rows
                .get(row)
                .ok_or(Error::OutOfRange {
                    position: row,
                    length: rows.len(),
                })?
                .get(column),
        }
    }

    /// Per-label expected false positives: for each queried label `l` with
    /// `n = |f(l)|` inserted items, `(N - n) · (1 - (1 - 1/m)^(nk))^k`.
    /// Labels never added contribute 0. Requires insertion tracking.
    pub fn theoretical_fpr(&self, labels: &[&str]) -> Result<FpReport> {
        let tally = self.insertions.as_ref().ok_or_else(|| {
            Error::InvalidParameter("matrix was built without insertion tracking".into())
        })?;
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let (m, k, big_n) = (self.m(), self.k(), self.item_count() as u64);
        let mut per_label = IndexMap::with_capacity(labels.len());
        for &label in labels {
            let n = tally.get(label).copied().unwrap_or(0);
            let candidates = big_n.saturating_sub(n);
            let value = if n == 0 {
                0.0
            } else {
                candidates as f64 * exact_fp(m, k, n)
            };
            per_label.insert(label.to_string(), value);
        }
        let average = per_label.values().sum::<f64>() / per_label.len() as f64;
        Ok(FpReport { per_label, average })
    }

    pub(crate) fn dense_rows(&self) -> Option<&[Bitset]> {
        match &self.rows {
            Rows::Dense(r) => Some(r),
            Rows::Sparse(_) => None,
        }
    }

    pub(crate) fn sparse_rows(&self) -> Option<&[SparseRow]> {
        match &self.rows {
            Rows::Sparse(r) => Some(r),
            Rows::Dense(_) => None,
        }
    }

    pub(crate) fn ordering_ref(&self) -> &Ordering {
        &self.ordering
    }

    pub(crate) fn from_dense_rows(rows: Vec<Bitset>, ordering: Ordering, family: HashFamily) -> Self {
        BloomMatrix {
            rows: Rows::Dense(rows),
            ordering,
            family,
            insertions: None,
        }
    }

    pub(crate) fn from_sparse_rows(rows: Vec<SparseRow>, ordering: Ordering, family: HashFamily) -> Self {
        BloomMatrix {
            rows: Rows::Sparse(rows),
            ordering,
            family,
            insertions: None,
        }
    }

    fn and_rows_into(&self, label: &str, acc: &mut Bitset) {
        let probe = self.family.probe(label);
        let m = self.m();
        match &self.rows {
            Rows::Dense(rows) => {
                for r in probe.indices(m) {
                    acc.and_assign(&rows[r]).expect("rows share the ordering width");
                }
            }
            Rows::Sparse(rows) => {
                for r in probe.indices(m) {
                    rows[r].and_into(acc).expect("rows share the ordering width");
                }
            }
        }
    }
}

impl MultiFilter for BloomMatrix {
    fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    /// Existing items only; columns cannot be added after construction.
    fn add_label(&mut self, label: &str, items: &[&str]) -> Result<()> {
        let encoded = self.ordering.encode(items).map_err(|e| match e {
            Error::UnknownItem(item) => Error::MatrixReconstructionRequired(item),
            other => other,
        })?;
        if let Some(tally) = self.insertions.as_mut() {
            *tally.entry(label.to_string()).or_insert(0) += items.len() as u64;
        }
        if encoded.is_all_zero() {
            return Ok(());
        }
        let m = self.m();
        let probe = self.family.probe(label);
        match &mut self.rows {
            Rows::Dense(rows) => {
                for r in probe.indices(m) {
                    rows[r].or_assign(&encoded)?;
                }
            }
            Rows::Sparse(rows) => {
                for r in probe.indices(m) {
                    rows[r].or_assign(&encoded)?;
                }
            }
        }
        Ok(())
    }

    fn lookup_bits(&self, label: &str) -> Bitset {
        let mut acc = Bitset::ones(self.item_count());
        self.and_rows_into(label, &mut acc);
        acc
    }

    /// ANDs the rows of the union of all labels' neighborhoods.
    fn lookup_all_bits(&self, labels: &[&str]) -> Result<Bitset> {
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let mut acc = Bitset::ones(self.item_count());
        for label in labels {
            self.and_rows_into(label, &mut acc);
        }
        Ok(acc)
    }

    /// Dense: `m × N`. Sparse: sum of stored row prefixes.
    fn stored_bits(&self) -> u64 {
        match &self.rows {
            Rows::Dense(rows) => (rows.len() * self.ordering.len()) as u64,
            Rows::Sparse(rows) => rows.iter().map(|r| r.stored_len() as u64).sum(),
        }
    }
}

/// `ceil(total label-item pairs / N)`.
pub fn average_labels_per_item(dataset: &Dataset) -> u64 {
    let n = dataset.len() as u64;
    if n == 0 {
        return 0;
    }
    dataset.total_pairs().div_ceil(n)
}

/// Items by decreasing label count; ties keep input order.
pub fn sparse_ordering(dataset: &Dataset) -> Ordering {
    let mut rows: Vec<_> = dataset.rows().iter().collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.labels.len()));
    Ordering::new(rows.into_iter().map(|r| r.item.clone()))
        .expect("dataset item ids are distinct")
}
