//! Probabilistic structures mapping labels to the multiple sets (items)
//! that contain them.
//!
//! * [`BloomMatrix`]: an `m × N` bit matrix. A label's hash neighborhood
//!   selects rows; items occupy columns. Lookup ANDs the selected rows and
//!   decodes the surviving columns. The sparse layout orders items by
//!   decreasing label count and drops trailing zeros from each row.
//! * [`BloomVector`]: one individually sized [`BloomFilter`] per item.
//!   Lookup probes every filter and decodes the hit pattern.
//!
//! [`analysis`] measures observed false-positive rates against an exact
//! index, runs the Bloom Test that picks between the two, and produces
//! benchmark sweeps.

pub mod analysis;
pub mod bitset;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod hashing;
pub mod matrix;
pub mod persist;
pub mod vector;

use std::collections::HashSet;

pub use bitset::{densify, sparsify, Bitset, Ordering, SparseRow};
pub use dataset::{Dataset, Distribution, ExactIndex, GenConfig};
pub use error::{Error, Result};
pub use filter::{size_for, theoretical_fp, BloomFilter, FilterParams};
pub use hashing::{FixedTable, HashFamily, HashKind, HashNeighborhood};
pub use matrix::{BloomMatrix, MatrixLayout};
pub use vector::BloomVector;

/// How a multi-label lookup combines labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LookupMode {
    /// Items that carry every label.
    And,
    /// Items that carry at least one label: the union of single-label lookups.
    Or,
}

/// Per-label and averaged false-positive estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct FpReport {
    pub per_label: indexmap::IndexMap<String, f64>,
    pub average: f64,
}

/// Common surface of the label → item-set structures.
pub trait MultiFilter {
    fn ordering(&self) -> &Ordering;

    /// Adds `label` to every item in `items`.
    fn add_label(&mut self, label: &str, items: &[&str]) -> Result<()>;

    /// Hit pattern for one label, indexed by ordering position.
    fn lookup_bits(&self, label: &str) -> Bitset;

    /// Hit pattern of items that match every label.
    fn lookup_all_bits(&self, labels: &[&str]) -> Result<Bitset>;

    /// Bits of filter payload held by the structure.
    fn stored_bits(&self) -> u64;

    fn lookup_label(&self, label: &str) -> HashSet<&str> {
        let bits = self.lookup_bits(label);
        self.ordering()
            .decode(&bits)
            .expect("lookup pattern width equals ordering size")
    }

    fn lookup_labels(&self, labels: &[&str], mode: LookupMode) -> Result<HashSet<&str>> {
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        let bits = match mode {
            LookupMode::And => self.lookup_all_bits(labels)?,
            LookupMode::Or => {
                let mut acc = Bitset::new(self.ordering().len());
                for label in labels {
                    acc.or_assign(&self.lookup_bits(label))?;
                }
                acc
            }
        };
        self.ordering().decode(&bits)
    }
}
