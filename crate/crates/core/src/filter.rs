//! The standard Bloom filter: one bitset, `k` hash functions.

use std::io::{Read, Write};

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::hashing::{HashFamily, LabelProbe};

/// Sizing of a filter for an expected load and target false-positive rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub m: usize,
    pub k: usize,
    pub target_fp: f64,
    pub capacity: u64,
}

/// `m = ceil(-n ln p / ln²2)` (at least 1) and `k = max(1, round(-log2 p))`.
pub fn size_for(n: u64, p: f64) -> Result<FilterParams> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target false-positive rate {p} is not in (0, 1)"
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let m = (-(n as f64) * p.ln() / (ln2 * ln2)).ceil().max(1.0) as usize;
    let k = (-p.log2()).round().max(1.0) as usize;
    Ok(FilterParams {
        m,
        k,
        target_fp: p,
        capacity: n,
    })
}

/// `(1 - e^(-kn/m))^k`.
pub fn theoretical_fp(m: usize, k: usize, n: u64) -> f64 {
    (1.0 - (-(k as f64) * n as f64 / m as f64).exp()).powi(k as i32)
}

/// `(1 - (1 - 1/m)^(nk))^k`, the non-asymptotic form used by the
/// multifilter rate estimates.
pub fn exact_fp(m: usize, k: usize, n: u64) -> f64 {
    let zero_prob = (1.0 - 1.0 / m as f64).powf(n as f64 * k as f64);
    (1.0 - zero_prob).powi(k as i32)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Bitset,
    family: HashFamily,
    inserted: u64,
}

impl BloomFilter {
    /// Seeded MurmurHash3 filter with `m` bits and `k` functions.
    pub fn new(m: usize, k: usize) -> Result<Self> {
        Self::with_family(m, HashFamily::murmur(k)?)
    }

    pub fn with_params(params: &FilterParams) -> Result<Self> {
        Self::new(params.m, params.k)
    }

    pub fn with_family(m: usize, family: HashFamily) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        Ok(BloomFilter {
            bits: Bitset::new(m),
            family,
            inserted: 0,
        })
    }

    pub(crate) fn from_parts(bits: Bitset, family: HashFamily, inserted: u64) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Corrupt("filter with zero bits".into()));
        }
        Ok(BloomFilter {
            bits,
            family,
            inserted,
        })
    }

    pub fn m(&self) -> usize {
        self.bits.len()
    }

    pub fn k(&self) -> usize {
        self.family.k()
    }

    /// Number of `add` calls so far (not distinct labels).
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn add(&mut self, label: &str) {
        let probe = self.family.probe(label);
        add_probe(&mut self.bits, &probe, self.family.k());
        self.inserted += 1;
    }

    /// Adds with hashes computed elsewhere; `probe` must carry at least `k` hashes
    /// from a family with the same functions.
    pub(crate) fn add_probe(&mut self, probe: &LabelProbe<'_>) {
        add_probe(&mut self.bits, probe, self.family.k());
        self.inserted += 1;
    }

    pub fn lookup(&self, label: &str) -> bool {
        self.lookup_probe(&self.family.probe(label))
    }

    pub(crate) fn lookup_probe(&self, probe: &LabelProbe<'_>) -> bool {
        let m = self.bits.len();
        probe
            .first_indices(m, self.family.k())
            .all(|i| self.bits.bit(i))
    }

    /// True iff every label looks up true.
    pub fn lookup_all<S: AsRef<str>>(&self, labels: &[S]) -> Result<bool> {
        if labels.is_empty() {
            return Err(Error::EmptyLabelSet);
        }
        Ok(labels.iter().all(|l| self.lookup(l.as_ref())))
    }

    /// Equation-1 estimate at the current load.
    pub fn theoretical_fp(&self) -> f64 {
        theoretical_fp(self.m(), self.k(), self.inserted)
    }

    /// `(m, k, n)` header followed by the bitset payload. The hash family is
    /// written by the container.
    pub(crate) fn write_body<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.m() as u64).to_le_bytes())?;
        w.write_all(&(self.k() as u64).to_le_bytes())?;
        w.write_all(&self.inserted.to_le_bytes())?;
        self.bits.write_to(w)
    }

    pub(crate) fn read_body<R: Read>(r: &mut R, family: &HashFamily) -> Result<Self> {
        let m = crate::persist::read_len(r)?;
        let k = crate::persist::read_len(r)?;
        let inserted = crate::persist::read_u64(r)?;
        if k == 0 {
            return Err(Error::Corrupt("filter with k = 0".into()));
        }
        let bits = Bitset::read_from(r)?;
        if bits.len() != m {
            return Err(Error::Corrupt(format!(
                "filter header says {m} bits, payload has {}",
                bits.len()
            )));
        }
        Self::from_parts(bits, family.with_k(k), inserted)
    }
}

fn add_probe(bits: &mut Bitset, probe: &LabelProbe<'_>, k: usize) {
    let m = bits.len();
    for i in probe.first_indices(m, k) {
        bits.insert(i);
    }
}
