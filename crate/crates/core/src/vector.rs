//! Bloom Vector: one individually sized Bloom filter per item.
//!
//! All filters share the seeded hash functions and differ only in width
//! and function count; the ranged mapping lets a label be hashed once per
//! operation and then reduced into each filter's own range.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::bitset::{Bitset, Ordering};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::{exact_fp, size_for, BloomFilter};
use crate::hashing::HashFamily;
use crate::{FpReport, MultiFilter};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomVector {
    filters: Vec<BloomFilter>,
    ordering: Ordering,
    family: HashFamily,
    max_k: usize,
    touched: Option<IndexMap<String, BTreeSet<usize>>>,
}

impl BloomVector {
    /// Empty vector whose filters will use `family`'s functions.
    pub fn new(family: HashFamily) -> Self {
        BloomVector {
            filters: Vec::new(),
            ordering: Ordering::default(),
            max_k: family.k(),
            family,
            touched: None,
        }
    }

    /// Records which filters each label touched, for
    /// [`theoretical_fpr`](Self::theoretical_fpr).
    pub fn track_touched(mut self) -> Self {
        self.touched.get_or_insert_with(IndexMap::new);
        self
    }

    /// Each item's filter sized for its own label count at target rate `p`.
    pub fn build(dataset: &Dataset, p: f64) -> Result<Self> {
        Self::build_with(dataset, p, HashFamily::murmur(1)?, false)
    }

    pub fn build_with(dataset: &Dataset, p: f64, family: HashFamily, track: bool) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut vector = Self::new(family);
        if track {
            vector = vector.track_touched();
        }
        for row in dataset.rows() {
            vector.add_item(&row.item, row.labels.len() as u64, p)?;
        }
        for (label, items) in dataset.exact_index().inverted_items() {
            vector.add_label(label, &items)?;
        }
        Ok(vector)
    }

    /// Appends an item with a fresh filter sized by `size_for(n, p)`.
    pub fn add_item(&mut self, item: &str, expected_labels: u64, p: f64) -> Result<()> {
        let params = size_for(expected_labels, p)?;
        self.add_item_sized(item, params.m, params.k)
    }

    /// Appends an item with an explicitly sized filter.
    pub fn add_item_sized(&mut self, item: &str, m: usize, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.ordering.index_of(item).is_some() {
            return Err(Error::DuplicateItem(item.to_string()));
        }
        let filter = BloomFilter::with_family(m, self.family.with_k(k))?;
        self.ordering.push(item)?;
        self.filters.push(filter);
        self.max_k = self.max_k.max(k);
        Ok(())
    }

    pub(crate) fn from_parts(filters: Vec<BloomFilter>, ordering: Ordering, family: HashFamily) -> Result<Self> {
        if filters.len() != ordering.len() {
            return Err(Error::Corrupt(format!(
                "{} filters for {} items",
                filters.len(),
                ordering.len()
            )));
        }
        let max_k = filters.iter().map(BloomFilter::k).fold(family.k(), usize::max);
        Ok(BloomVector {
            filters,
            ordering,
            family,
            max_k,
            touched: None,
        })
    }

    pub fn filters(&self) -> &[BloomFilter] {
        &self.filters
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Filters touched by adding `label`, if tracking is on.
    pub fn touched_rows(&self, label: &str) -> Option<&BTreeSet<usize>> {
        self.touched.as_ref()?.get(label)
    }

    /// Per label, the sum over touched filters `i` of
    /// `(1 - (1 - 1/m_i)^(k_i n_i))^k_i`. Labels never added contribute 0.
    pub fn theoretical_fpr(&self, labels: &[&str]) -> Result<FpReport> {
        let touched = self.touched.as_ref().ok_or_else(|| {
            Error::InvalidParameter("vector was built without touch tracking".into())
        })?;
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let mut per_label = IndexMap::with_capacity(labels.len());
        for &label in labels {
            let value = touched.get(label).map_or(0.0, |rows| {
                rows.iter()
                    .map(|&i| {
                        let f = &self.filters[i];
                        exact_fp(f.m(), f.k(), f.inserted())
                    })
                    .sum()
            });
            per_label.insert(label.to_string(), value);
        }
        let average = per_label.values().sum::<f64>() / per_label.len() as f64;
        Ok(FpReport { per_label, average })
    }

    /// Same result as [`lookup_bits`](MultiFilter::lookup_bits), with the
    /// filters split into `threads` contiguous ranges probed concurrently.
    pub fn lookup_bits_parallel(&self, label: &str, threads: usize) -> Bitset {
        let threads = threads.max(1);
        let chunk = self.filters.len().div_ceil(threads).max(1);
        let probe = self.family.probe_k(label, self.max_k);
        let hits: Vec<Vec<bool>> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .filters
                .chunks(chunk)
                .map(|filters| {
                    let probe = &probe;
                    scope.spawn(move || filters.iter().map(|f| f.lookup_probe(probe)).collect())
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("lookup worker panicked"))
                .collect()
        });
        let mut bits = Bitset::new(self.filters.len());
        for (i, hit) in hits.into_iter().flatten().enumerate() {
            if hit {
                bits.insert(i);
            }
        }
        bits
    }
}

impl MultiFilter for BloomVector {
    fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    /// Adds `label` to the filters of `items`; new items need
    /// [`add_item`](BloomVector::add_item) first.
    fn add_label(&mut self, label: &str, items: &[&str]) -> Result<()> {
        let encoded = self.ordering.encode(items)?;
        let probe = self.family.probe_k(label, self.max_k);
        let mut touched = Vec::new();
        for i in encoded.iter_ones() {
            self.filters[i].add_probe(&probe);
            touched.push(i);
        }
        if let Some(map) = self.touched.as_mut() {
            map.entry(label.to_string()).or_default().extend(touched);
        }
        Ok(())
    }

    fn lookup_bits(&self, label: &str) -> Bitset {
        let probe = self.family.probe_k(label, self.max_k);
        let mut bits = Bitset::new(self.filters.len());
        for (i, f) in self.filters.iter().enumerate() {
            if f.lookup_probe(&probe) {
                bits.insert(i);
            }
        }
        bits
    }

    /// Item `i` matches iff its filter holds every label.
    fn lookup_all_bits(&self, labels: &[&str]) -> Result<Bitset> {
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let probes: Vec<_> = labels
            .iter()
            .map(|l| self.family.probe_k(l, self.max_k))
            .collect();
        let mut bits = Bitset::new(self.filters.len());
        for (i, f) in self.filters.iter().enumerate() {
            if probes.iter().all(|p| f.lookup_probe(p)) {
                bits.insert(i);
            }
        }
        Ok(bits)
    }

    /// Sum of filter widths.
    fn stored_bits(&self) -> u64 {
        self.filters.iter().map(|f| f.m() as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::FixedTable;
    use crate::LookupMode;
    use std::collections::HashSet;

    fn set<'a>(items: &[&'a str]) -> HashSet<&'a str> {
        items.iter().copied().collect()
    }

    /// Five items, the first with a 6-bit filter and the rest with 8 bits.
    fn example() -> BloomVector {
        let table = FixedTable::new()
            .with("l1", 6, &[2, 5])
            .with("l1", 8, &[2, 6])
            .with("l2", 6, &[2, 5])
            .with("l2", 8, &[2, 7]);
        let mut bv = BloomVector::new(HashFamily::fixed_table(2, table).unwrap()).track_touched();
        bv.add_item_sized("e1", 6, 2).unwrap();
        for item in ["e2", "e3", "e4", "e5"] {
            bv.add_item_sized(item, 8, 2).unwrap();
        }
        bv
    }

    #[test]
    fn first_label_sets_six_bits() {
        let mut bv = example();
        bv.add_label("l1", &["e1", "e2", "e5"]).unwrap();
        let set_bits: Vec<(usize, usize)> = bv
            .filters()
            .iter()
            .enumerate()
            .flat_map(|(r, f)| f.bits().iter_ones().map(move |c| (r, c)))
            .collect();
        assert_eq!(set_bits, vec![(0, 2), (0, 5), (1, 2), (1, 6), (4, 2), (4, 6)]);
    }

    #[test]
    fn worked_example_lookups() {
        let mut bv = example();
        bv.add_label("l1", &["e1", "e2", "e5"]).unwrap();
        bv.add_label("l2", &["e3", "e5"]).unwrap();
        assert_eq!(bv.lookup_label("l2"), set(&["e1", "e3", "e5"]));
        assert_eq!(bv.lookup_label("l1"), set(&["e1", "e2", "e5"]));
        assert!(bv
            .lookup_labels(&["l1", "l2"], LookupMode::And)
            .unwrap()
            .contains("e5"));
        assert_eq!(bv.stored_bits(), 38);
        assert_eq!(bv.lookup_bits_parallel("l2", 3), bv.lookup_bits("l2"));
    }

    #[test]
    fn empty_and_repeated_adds() {
        let mut bv = example();
        let fresh = bv.clone();
        assert!(bv.lookup_label("l1").is_empty());
        bv.add_label("l1", &[]).unwrap();
        assert_eq!(bv.filters, fresh.filters);

        bv.add_label("l1", &["e2"]).unwrap();
        let once = bv.filters()[1].bits().clone();
        bv.add_label("l1", &["e2"]).unwrap();
        assert_eq!(bv.filters()[1].bits(), &once);
        assert_eq!(bv.filters()[1].inserted(), 2);
    }

    #[test]
    fn incremental_items() {
        let mut bv = BloomVector::new(HashFamily::murmur(1).unwrap());
        assert_eq!(bv.stored_bits(), 0);
        bv.add_item("doc", 100, 0.01).unwrap();
        assert_eq!(bv.len(), 1);
        assert_eq!((bv.filters()[0].m(), bv.filters()[0].k()), (959, 7));
        bv.add_label("x", &["doc"]).unwrap();
        assert!(bv.lookup_label("x").contains("doc"));
        assert!(matches!(
            bv.add_item("doc", 1, 0.1),
            Err(Error::DuplicateItem(_))
        ));
        assert!(matches!(
            bv.add_label("x", &["missing"]),
            Err(Error::UnknownItem(_))
        ));
    }

    #[test]
    fn single_item_without_labels() {
        let ds = Dataset::from_pairs([("only", Vec::<&str>::new())]).unwrap();
        let bv = BloomVector::build(&ds, 0.01).unwrap();
        assert_eq!(bv.filters()[0].m(), 1);
        assert_eq!(bv.stored_bits(), 1);
    }

    #[test]
    fn theoretical_fpr_values() {
        let mut bv = BloomVector::new(HashFamily::murmur(2).unwrap()).track_touched();
        bv.add_item_sized("a", 8, 2).unwrap();
        bv.add_item_sized("b", 8, 2).unwrap();
        let zero = bv.theoretical_fpr(&["l"]).unwrap();
        assert_eq!(zero.average, 0.0);

        bv.add_label("l", &["a"]).unwrap();
        bv.add_label("other", &["a"]).unwrap();
        let single = (1.0 - 0.875f64.powi(4)).powi(2);
        assert!((single - 0.1713).abs() < 1e-4);
        let r = bv.theoretical_fpr(&["l"]).unwrap();
        assert!((r.per_label["l"] - single).abs() < 1e-12);

        bv.add_label("l", &["b"]).unwrap();
        bv.add_label("other", &["b"]).unwrap();
        let r = bv.theoretical_fpr(&["l"]).unwrap();
        assert!((r.per_label["l"] - 2.0 * single).abs() < 1e-12);
        assert_eq!(bv.touched_rows("l").unwrap(), &BTreeSet::from([0, 1]));
    }

    #[test]
    fn and_within_or() {
        let ds = crate::dataset::generate_uniform(30, 40, 0.3, 8).unwrap();
        let bv = BloomVector::build(&ds, 0.1).unwrap();
        let labels = ["l1", "l2", "l3"];
        let and = bv.lookup_labels(&labels, LookupMode::And).unwrap();
        let or = bv.lookup_labels(&labels, LookupMode::Or).unwrap();
        assert!(and.is_subset(&or));
    }
}
