//! Seeded hash family and hash neighborhoods.
//!
//! Function `i` (for `i` in `1..=k`) is 32-bit MurmurHash3 of the label's
//! UTF-8 bytes with seed `i`, mapped into `[0, range)` as
//! `floor(h / 2^32 * range)`. The same family therefore serves rows of any
//! width, which is what lets every Bloom Vector filter share it.
//!
//! A fixed-table family pins explicit neighborhoods for chosen
//! `(label, range)` pairs so worked examples can be reproduced; pairs not
//! in the table fall back to the seeded functions.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// MurmurHash3, x86 32-bit variant.
pub fn murmur3_32(data: &[u8], seed: u32) -> u32 {
    const C1: u32 = 0xcc9e_2d51;
    const C2: u32 = 0x1b87_3593;

    let mut h = seed;
    let mut blocks = data.chunks_exact(4);
    for block in &mut blocks {
        let mut k = u32::from_le_bytes([block[0], block[1], block[2], block[3]]);
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
        h = h.rotate_left(13).wrapping_mul(5).wrapping_add(0xe654_6b64);
    }

    let tail = blocks.remainder();
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, &b) in tail.iter().enumerate() {
            k |= (b as u32) << (8 * i);
        }
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
    }

    h ^= data.len() as u32;
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^= h >> 16;
    h
}

/// Maps a 32-bit hash into `[0, range)`.
#[inline]
pub fn ranged(hash: u32, range: usize) -> usize {
    ((hash as u128 * range as u128) >> 32) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HashKind {
    SeededMurmur32,
    FixedTable,
}

/// Explicit `(label, range) -> [h_1, .., h_k]` assignments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixedTable {
    entries: HashMap<(String, usize), Vec<usize>>,
}

impl FixedTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: &str, range: usize, indices: &[usize]) -> Self {
        self.entries
            .insert((label.to_string(), range), indices.to_vec());
        self
    }

    pub fn insert(&mut self, label: &str, range: usize, indices: Vec<usize>) {
        self.entries.insert((label.to_string(), range), indices);
    }

    pub fn get(&self, label: &str, range: usize) -> Option<&[usize]> {
        // Borrowed-key lookup on a tuple key needs an owned probe.
        self.entries
            .get(&(label.to_string(), range))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by `(label, range)`, for stable serialization.
    pub fn sorted_entries(&self) -> Vec<(&str, usize, &[usize])> {
        let mut v: Vec<_> = self
            .entries
            .iter()
            .map(|((l, r), idx)| (l.as_str(), *r, idx.as_slice()))
            .collect();
        v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        v
    }
}

/// `k` hash functions, either seeded MurmurHash3 or a pinned table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashFamily {
    k: usize,
    table: Option<FixedTable>,
}

impl HashFamily {
    pub fn murmur(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(HashFamily { k, table: None })
    }

    pub fn fixed_table(k: usize, table: FixedTable) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        for (label, range, indices) in table.sorted_entries() {
            if indices.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "table entry ({label}, {range}) has {} indices, expected {k}",
                    indices.len()
                )));
            }
            if let Some(&bad) = indices.iter().find(|&&i| i >= range) {
                return Err(Error::InvalidParameter(format!(
                    "table entry ({label}, {range}) index {bad} out of range"
                )));
            }
        }
        Ok(HashFamily {
            k,
            table: Some(table),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> HashKind {
        match self.table {
            None => HashKind::SeededMurmur32,
            Some(_) => HashKind::FixedTable,
        }
    }

    pub fn table(&self) -> Option<&FixedTable> {
        self.table.as_ref()
    }

    /// Same functions (and table, if any) with a different count.
    pub(crate) fn with_k(&self, k: usize) -> Self {
        HashFamily {
            k,
            table: self.table.clone(),
        }
    }

    /// Hashes the label once; the result can be mapped to any range.
    pub fn probe<'a>(&'a self, label: &'a str) -> LabelProbe<'a> {
        self.probe_k(label, self.k)
    }

    /// Like [`probe`](Self::probe) but with seeds `1..=k` for a caller-chosen `k`.
    pub fn probe_k<'a>(&'a self, label: &'a str, k: usize) -> LabelProbe<'a> {
        let bytes = label.as_bytes();
        LabelProbe {
            family: self,
            label,
            hashes: (1..=k as u32).map(|seed| murmur3_32(bytes, seed)).collect(),
        }
    }

    /// The distinct values of `h_1..h_k` for `label` in `[0, range)`.
    pub fn neighborhood(&self, label: &str, range: usize) -> Result<HashNeighborhood> {
        if range == 0 {
            return Err(Error::ZeroRange);
        }
        let mut indices: Vec<usize> = self.probe(label).indices(range).collect();
        indices.sort_unstable();
        indices.dedup();
        Ok(HashNeighborhood { indices })
    }
}

/// Precomputed hashes of one label.
#[derive(Clone, Debug)]
pub struct LabelProbe<'a> {
    family: &'a HashFamily,
    label: &'a str,
    hashes: Vec<u32>,
}

impl<'a> LabelProbe<'a> {
    pub fn label(&self) -> &'a str {
        self.label
    }

    /// `h_1..h_k` in `[0, range)`, possibly repeating. `range` must be ≥ 1.
    pub fn indices(&self, range: usize) -> impl Iterator<Item = usize> + '_ {
        self.first_indices(range, self.hashes.len())
    }

    /// `h_1..h_k` for a `k` no larger than the probe's own.
    pub fn first_indices(&self, range: usize, k: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(range > 0);
        debug_assert!(k <= self.hashes.len());
        let pinned = self
            .family
            .table
            .as_ref()
            .and_then(|t| t.get(self.label, range));
        let (pinned, seeded) = match pinned {
            Some(p) => (Some(p.iter().take(k).copied()), None),
            None => (
                None,
                Some(self.hashes[..k].iter().map(move |&h| ranged(h, range))),
            ),
        };
        pinned
            .into_iter()
            .flatten()
            .chain(seeded.into_iter().flatten())
    }
}

/// Distinct hash indices of one label at one range, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashNeighborhood {
    indices: Vec<usize>,
}

impl HashNeighborhood {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn murmur_reference_vectors() {
        assert_eq!(murmur3_32(b"", 0), 0);
        assert_eq!(murmur3_32(b"", 1), 0x514e_28b7);
        assert_eq!(murmur3_32(b"", 0xffff_ffff), 0x81f1_6f39);
        assert_eq!(murmur3_32(b"\0\0\0\0", 0), 0x2362_f9de);
        assert_eq!(murmur3_32(b"test", 0), 0xba6b_d213);
        assert_eq!(murmur3_32(b"Hello, world!", 1234), 0xfaf6_cdb3);
        assert_eq!(
            murmur3_32(b"The quick brown fox jumps over the lazy dog", 0),
            0x2e4f_f723
        );
        assert_eq!(murmur3_32(b"1", 0), 2_484_513_939);
        assert_eq!(murmur3_32(b"12", 0), 4_191_350_549);
        assert_eq!(murmur3_32(b"123", 0), 2_662_625_771);
        assert_eq!(murmur3_32(b"1234", 0), 1_914_461_635);
    }

    #[test]
    fn ranged_mapping_bounds() {
        assert_eq!(ranged(0, 10), 0);
        assert_eq!(ranged(u32::MAX, 10), 9);
        assert_eq!(ranged(1 << 31, 8), 4);
        assert_eq!(ranged(u32::MAX, 1), 0);
    }

    #[test]
    fn fixed_table_pins_worked_examples() {
        let example2 = HashFamily::fixed_table(2, FixedTable::new().with("l1", 8, &[0, 7])).unwrap();
        assert_eq!(example2.neighborhood("l1", 8).unwrap().indices(), &[0, 7]);

        let example3 = HashFamily::fixed_table(
            2,
            FixedTable::new()
                .with("l1", 6, &[2, 5])
                .with("l1", 8, &[2, 6]),
        )
        .unwrap();
        assert_eq!(example3.neighborhood("l1", 6).unwrap().indices(), &[2, 5]);
        assert_eq!(example3.neighborhood("l1", 8).unwrap().indices(), &[2, 6]);
    }

    #[test]
    fn fixed_table_rejects_bad_entries() {
        assert!(HashFamily::fixed_table(2, FixedTable::new().with("l", 8, &[8, 1])).is_err());
        assert!(HashFamily::fixed_table(2, FixedTable::new().with("l", 8, &[1])).is_err());
    }

    #[test]
    fn unit_range_collapses() {
        let f = HashFamily::murmur(4).unwrap();
        assert_eq!(f.neighborhood("anything", 1).unwrap().indices(), &[0]);
    }

    #[test]
    fn zero_range_is_error() {
        let f = HashFamily::murmur(3).unwrap();
        assert!(matches!(f.neighborhood("x", 0), Err(Error::ZeroRange)));
        assert!(HashFamily::murmur(0).is_err());
    }

    #[test]
    fn deterministic_and_in_range() {
        let f = HashFamily::murmur(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let label = format!("label-{}", rng.gen::<u64>());
            let range = rng.gen_range(1..=100_000usize);
            let n = f.neighborhood(&label, range).unwrap();
            assert!(!n.is_empty() && n.len() <= 7);
            assert!(*n.indices().last().unwrap() < range);
            assert_eq!(n, f.neighborhood(&label, range).unwrap());
        }
    }

    #[test]
    fn seeded_family_is_close_to_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};

        const BINS: usize = 1024;
        const SAMPLES: usize = 100_000;
        let f = HashFamily::murmur(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u64; BINS];
        for _ in 0..SAMPLES {
            let label: String = (0..12).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
            counts[f.neighborhood(&label, BINS).unwrap().indices()[0]] += 1;
        }
        let expected = SAMPLES as f64 / BINS as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let critical = ChiSquared::new((BINS - 1) as f64)
            .unwrap()
            .inverse_cdf(1.0 - 0.001);
        assert!(stat < critical, "chi-square {stat} >= {critical}");
    }
}
