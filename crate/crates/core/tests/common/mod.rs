#![allow(dead_code)]

use std::collections::HashSet;

use bmf_core::{BloomMatrix, BloomVector, FixedTable, HashFamily, MatrixLayout, MultiFilter, Ordering};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ITEMS: [&str; 5] = ["e1", "e2", "e3", "e4", "e5"];

pub fn set<'a>(items: &[&'a str]) -> HashSet<&'a str> {
    items.iter().copied().collect()
}

/// Three labels over five items, `m = 8`, two pinned hash functions.
pub fn matrix_example(layout: MatrixLayout) -> BloomMatrix {
    let table = FixedTable::new()
        .with("l1", 8, &[0, 7])
        .with("l2", 8, &[2, 4])
        .with("l3", 8, &[2, 7]);
    let ordering = Ordering::new(ITEMS).unwrap();
    let mut bm = BloomMatrix::new(8, ordering, HashFamily::fixed_table(2, table).unwrap(), layout).unwrap();
    bm.add_label("l1", &["e2", "e4"]).unwrap();
    bm.add_label("l2", &["e1", "e2", "e5"]).unwrap();
    bm.add_label("l3", &["e3", "e5"]).unwrap();
    bm
}

/// Two labels over five items; the first filter has 6 bits, the rest 8.
pub fn vector_example() -> BloomVector {
    let table = FixedTable::new()
        .with("l1", 6, &[2, 5])
        .with("l1", 8, &[2, 6])
        .with("l2", 6, &[2, 5])
        .with("l2", 8, &[2, 7]);
    let mut bv = BloomVector::new(HashFamily::fixed_table(2, table).unwrap());
    bv.add_item_sized("e1", 6, 2).unwrap();
    for item in &ITEMS[1..] {
        bv.add_item_sized(item, 8, 2).unwrap();
    }
    bv.add_label("l1", &["e1", "e2", "e5"]).unwrap();
    bv.add_label("l2", &["e3", "e5"]).unwrap();
    bv
}

/// A random relation: `(items, [(label, subset)])`.
pub struct RandomFixture {
    pub items: Vec<String>,
    pub labels: Vec<(String, Vec<String>)>,
}

impl RandomFixture {
    pub fn generate<R: Rng>(rng: &mut R, max_items: usize, max_labels: usize) -> Self {
        let n = rng.gen_range(1..=max_items);
        let items: Vec<String> = (0..n).map(|i| format!("item{i}")).collect();
        let label_count = rng.gen_range(1..=max_labels);
        let labels = (0..label_count)
            .map(|l| {
                let size = rng.gen_range(0..=n);
                let subset = items.choose_multiple(rng, size).cloned().collect();
                (format!("label{l}-{}", rng.gen::<u32>()), subset)
            })
            .collect();
        RandomFixture { items, labels }
    }

    pub fn ordering(&self) -> Ordering {
        Ordering::new(self.items.iter().cloned()).unwrap()
    }

    pub fn subset(&self, l: usize) -> Vec<&str> {
        self.labels[l].1.iter().map(String::as_str).collect()
    }

    pub fn matrix<R: Rng>(&self, rng: &mut R, layout: MatrixLayout) -> BloomMatrix {
        let m = rng.gen_range(1..=32);
        let k = rng.gen_range(1..=4);
        BloomMatrix::new(m, self.ordering(), HashFamily::murmur(k).unwrap(), layout).unwrap()
    }

    pub fn vector<R: Rng>(&self, rng: &mut R) -> BloomVector {
        let mut bv = BloomVector::new(HashFamily::murmur(1).unwrap());
        for item in &self.items {
            bv.add_item_sized(item, rng.gen_range(1..=32), rng.gen_range(1..=4)).unwrap();
        }
        bv
    }
}

/// Single-label lookups intersected.
pub fn intersect_lookups<'a>(s: &'a dyn MultiFilter, labels: &[&str]) -> HashSet<&'a str> {
    let mut acc = s.lookup_label(labels[0]);
    for l in &labels[1..] {
        let next = s.lookup_label(l);
        acc.retain(|i| next.contains(i));
    }
    acc
}
