mod common;

use std::collections::HashSet;

use bmf_core::{
    densify, sparsify, Bitset, BloomFilter, BloomMatrix, BloomVector, HashFamily, LookupMode, MatrixLayout,
    MultiFilter, Ordering,
};
use common::*;
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn items(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("i{i}")).collect()
}

/// `(item count, [(label, subset as positions)])`.
fn relation(max_items: usize, max_labels: usize) -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1..=max_items).prop_flat_map(move |n| (Just(n), vec(btree_set(0..n, 0..=n), 1..=max_labels)))
        .prop_map(|(n, subsets)| (n, subsets.into_iter().map(|s| s.into_iter().collect()).collect()))
}

fn names<'a>(all: &'a [String], positions: &[usize]) -> Vec<&'a str> {
    positions.iter().map(|&p| all[p].as_str()).collect()
}

fn label(i: usize) -> String {
    format!("lab{i}")
}

#[test]
fn encode_decode_exhaustive_up_to_twelve_items() {
    for n in 0..=12 {
        let all = items(n);
        let pi = Ordering::new(all.iter().cloned()).unwrap();
        for mask in 0u32..(1 << n) {
            let subset: HashSet<&str> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| all[i].as_str()).collect();
            let bits = pi.encode(subset.iter().copied()).unwrap();
            assert_eq!(pi.decode(&bits).unwrap(), subset);
        }
    }
}

proptest! {
    #[test]
    fn encode_is_monotone(n in 1usize..40, a in vec(any::<prop::sample::Index>(), 0..20), extra in vec(any::<prop::sample::Index>(), 0..20)) {
        let all = items(n);
        let pi = Ordering::new(all.iter().cloned()).unwrap();
        let small: Vec<&str> = a.iter().map(|i| all[i.index(n)].as_str()).collect();
        let mut large = small.clone();
        large.extend(extra.iter().map(|i| all[i.index(n)].as_str()));
        let s = pi.encode(&small).unwrap();
        let l = pi.encode(&large).unwrap();
        prop_assert!(s.is_subset_of(&l));
    }

    #[test]
    fn sparsify_densify_round_trip(len in 0usize..300, positions in vec(any::<prop::sample::Index>(), 0..40)) {
        let bits = if len == 0 {
            Bitset::new(0)
        } else {
            Bitset::from_positions(len, positions.iter().map(|i| i.index(len))).unwrap()
        };
        let row = sparsify(&bits);
        prop_assert_eq!(densify(&row), bits.clone());
        prop_assert_eq!(row.stored_len(), bits.last_one().map_or(0, |p| p + 1));
        prop_assert_eq!(sparsify(&densify(&row)), row);
    }

    #[test]
    fn filter_has_no_false_negatives_and_is_monotone(m in 1usize..200, k in 1usize..8, labels in vec("[a-z0-9]{0,12}", 1..40), probes in vec("[a-z0-9]{0,12}", 0..40)) {
        let mut bf = BloomFilter::new(m, k).unwrap();
        let mut positive: Vec<bool> = probes.iter().map(|p| bf.lookup(p)).collect();
        for (i, l) in labels.iter().enumerate() {
            bf.add(l);
            for prior in &labels[..=i] {
                prop_assert!(bf.lookup(prior));
            }
            for (j, p) in probes.iter().enumerate() {
                let now = bf.lookup(p);
                prop_assert!(now || !positive[j], "probe {p} flipped to negative");
                positive[j] = now;
            }
        }
    }

    #[test]
    fn matrix_lookup_is_a_superset((n, subsets) in relation(64, 12), m in 1usize..48, k in 1usize..5, sparse in any::<bool>()) {
        let all = items(n);
        let layout = if sparse { MatrixLayout::Sparse } else { MatrixLayout::Dense };
        let mut bm = BloomMatrix::new(m, Ordering::new(all.iter().cloned()).unwrap(), HashFamily::murmur(k).unwrap(), layout).unwrap();
        for (i, s) in subsets.iter().enumerate() {
            bm.add_label(&label(i), &names(&all, s)).unwrap();
        }
        for (i, s) in subsets.iter().enumerate() {
            let got = bm.lookup_label(&label(i));
            for item in names(&all, s) {
                prop_assert!(got.contains(item));
            }
        }
    }

    #[test]
    fn dense_and_sparse_agree_under_same_ordering((n, subsets) in relation(40, 10), m in 1usize..40, k in 1usize..5, probes in vec(0usize..14, 1..4)) {
        let all = items(n);
        let make = |layout| {
            let mut bm = BloomMatrix::new(m, Ordering::new(all.iter().cloned()).unwrap(), HashFamily::murmur(k).unwrap(), layout).unwrap();
            for (i, s) in subsets.iter().enumerate() {
                bm.add_label(&label(i), &names(&all, s)).unwrap();
            }
            bm
        };
        let dense = make(MatrixLayout::Dense);
        let sparse = make(MatrixLayout::Sparse);
        for r in 0..m {
            prop_assert_eq!(dense.row(r), sparse.row(r));
        }
        prop_assert!(sparse.stored_bits() <= dense.stored_bits());
        let query: Vec<String> = probes.iter().map(|&i| label(i)).collect();
        let query: Vec<&str> = query.iter().map(String::as_str).collect();
        for mode in [LookupMode::And, LookupMode::Or] {
            prop_assert_eq!(dense.lookup_labels(&query, mode).unwrap(), sparse.lookup_labels(&query, mode).unwrap());
        }
    }

    #[test]
    fn and_lookup_factorizes(seed in any::<u64>(), probes in vec(0usize..10, 1..5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = RandomFixture::generate(&mut rng, 30, 8);
        let mut bm = fx.matrix(&mut rng, MatrixLayout::Dense);
        let mut bv = fx.vector(&mut rng);
        for l in 0..fx.labels.len() {
            bm.add_label(&fx.labels[l].0, &fx.subset(l)).unwrap();
            bv.add_label(&fx.labels[l].0, &fx.subset(l)).unwrap();
        }
        let query: Vec<&str> = probes
            .iter()
            .map(|&i| fx.labels.get(i).map_or("absent", |(l, _)| l.as_str()))
            .collect();
        for s in [&bm as &dyn MultiFilter, &bv] {
            prop_assert_eq!(s.lookup_labels(&query, LookupMode::And).unwrap(), intersect_lookups(s, &query));
        }
    }

    #[test]
    fn vector_has_no_false_negatives_and_decodes_its_bits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = RandomFixture::generate(&mut rng, 30, 8);
        let mut bv = fx.vector(&mut rng);
        for l in 0..fx.labels.len() {
            bv.add_label(&fx.labels[l].0, &fx.subset(l)).unwrap();
        }
        let pi = fx.ordering();
        for l in 0..fx.labels.len() {
            let got = bv.lookup_label(&fx.labels[l].0);
            for item in fx.subset(l) {
                prop_assert!(got.contains(item));
            }
            let bits = bv.lookup_bits(&fx.labels[l].0);
            prop_assert_eq!(pi.encode(got.iter().copied()).unwrap(), bits);
        }
    }

    #[test]
    fn vector_parallel_lookup_matches_serial(seed in any::<u64>(), threads in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = RandomFixture::generate(&mut rng, 40, 4);
        let mut bv: BloomVector = fx.vector(&mut rng);
        for l in 0..fx.labels.len() {
            bv.add_label(&fx.labels[l].0, &fx.subset(l)).unwrap();
        }
        for (l, _) in &fx.labels {
            prop_assert_eq!(bv.lookup_bits_parallel(l, threads), bv.lookup_bits(l));
        }
    }
}
