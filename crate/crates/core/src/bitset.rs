//! Position-indexed bitsets, trailing-zero-trimmed rows, and the item
//! ordering that translates item sets to and from bit rows.
//!
//! Storage packs 64 positions per word. The only external contract is the
//! position index and the byte serialization (`write_to` / `read_from`):
//! a little-endian `u64` length followed by the payload packed 8 bits per
//! byte with the lowest position in the least significant bit.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn bytes_for(len: usize) -> usize {
    len.div_ceil(8)
}

/// A fixed-length bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for Bitset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitset({})", self)
    }
}

impl std::fmt::Display for Bitset {
    /// Positions left to right, `0..len`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Bitset {
    /// All-zero bitset of `len` positions.
    pub fn new(len: usize) -> Self {
        Bitset {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// All-one bitset of `len` positions.
    pub fn ones(len: usize) -> Self {
        let mut b = Bitset {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        b.clear_tail();
        b
    }

    /// Parses a string of `0`/`1` characters, position 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let mut b = Bitset::new(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => b.insert(i),
                '0' => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "bit string contains `{other}`"
                    )))
                }
            }
        }
        Ok(b)
    }

    pub fn from_positions<I: IntoIterator<Item = usize>>(len: usize, positions: I) -> Result<Self> {
        let mut b = Bitset::new(len);
        for p in positions {
            b.set(p)?;
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, position: usize) -> Result<bool> {
        self.check(position)?;
        Ok(self.bit(position))
    }

    pub fn set(&mut self, position: usize) -> Result<()> {
        self.check(position)?;
        self.insert(position);
        Ok(())
    }

    pub fn unset(&mut self, position: usize) -> Result<()> {
        self.check(position)?;
        self.words[position / WORD_BITS] &= !(1u64 << (position % WORD_BITS));
        Ok(())
    }

    #[inline]
    pub(crate) fn bit(&self, position: usize) -> bool {
        debug_assert!(position < self.len);
        self.words[position / WORD_BITS] >> (position % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub(crate) fn insert(&mut self, position: usize) {
        debug_assert!(position < self.len);
        self.words[position / WORD_BITS] |= 1u64 << (position % WORD_BITS);
    }

    fn check(&self, position: usize) -> Result<()> {
        if position >= self.len {
            return Err(Error::OutOfRange {
                position,
                length: self.len,
            });
        }
        Ok(())
    }

    fn check_len(&self, other: &Bitset) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(())
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn or_assign(&mut self, other: &Bitset) -> Result<()> {
        self.check_len(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn and_assign(&mut self, other: &Bitset) -> Result<()> {
        self.check_len(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
        Ok(())
    }

    pub fn fill(&mut self) {
        self.words.fill(u64::MAX);
        self.clear_tail();
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `self ⊆ other` as position sets.
    pub fn is_subset_of(&self, other: &Bitset) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Index of the highest set position, if any.
    pub fn last_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * WORD_BITS + (WORD_BITS - 1 - w.leading_zeros() as usize))
    }

    /// Set positions in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * WORD_BITS + tz)
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Payload bytes, lowest position in the least significant bit.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(bytes_for(self.len));
        out
    }

    fn from_payload(len: usize, bytes: &[u8]) -> Self {
        let mut words = vec![0u64; words_for(len)];
        for (wi, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[wi] = u64::from_le_bytes(buf);
        }
        let mut b = Bitset { len, words };
        b.clear_tail();
        b
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.len as u64).to_le_bytes())?;
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let len = crate::persist::read_len(r)?;
        let mut payload = vec![0u8; bytes_for(len)];
        r.read_exact(&mut payload)?;
        Ok(Bitset::from_payload(len, &payload))
    }
}

/// A row of logical width `N` whose trailing zeros are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseRow {
    logical_len: usize,
    stored_len: usize,
    words: Vec<u64>,
}

impl SparseRow {
    /// All-zero row; stores nothing.
    pub fn empty(logical_len: usize) -> Self {
        SparseRow {
            logical_len,
            stored_len: 0,
            words: Vec::new(),
        }
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    pub fn stored_len(&self) -> usize {
        self.stored_len
    }

    /// Reads past `stored_len` return 0.
    pub fn get(&self, position: usize) -> Result<bool> {
        if position >= self.logical_len {
            return Err(Error::OutOfRange {
                position,
                length: self.logical_len,
            });
        }
        if position >= self.stored_len {
            return Ok(false);
        }
        Ok(self.words[position / WORD_BITS] >> (position % WORD_BITS) & 1 == 1)
    }

    /// Stored payload as a bitset of `stored_len` positions.
    pub fn payload(&self) -> Bitset {
        Bitset {
            len: self.stored_len,
            words: self.words.clone(),
        }
    }

    /// ORs a dense row of the same logical width into this row, extending
    /// the stored prefix as needed.
    pub fn or_assign(&mut self, other: &Bitset) -> Result<()> {
        if other.len() != self.logical_len {
            return Err(Error::LengthMismatch {
                expected: self.logical_len,
                actual: other.len(),
            });
        }
        let Some(last) = other.last_one() else {
            return Ok(());
        };
        if last + 1 > self.stored_len {
            self.stored_len = last + 1;
            self.words.resize(words_for(self.stored_len), 0);
        }
        for (a, b) in self.words.iter_mut().zip(other.words()) {
            *a |= *b;
        }
        Ok(())
    }

    /// ANDs this row into a dense accumulator of the same logical width.
    pub fn and_into(&self, acc: &mut Bitset) -> Result<()> {
        if acc.len() != self.logical_len {
            return Err(Error::LengthMismatch {
                expected: self.logical_len,
                actual: acc.len(),
            });
        }
        let stored_words = self.words.len();
        let acc_words = acc.words_mut();
        for (a, b) in acc_words.iter_mut().zip(&self.words) {
            *a &= *b;
        }
        for a in acc_words.iter_mut().skip(stored_words) {
            *a = 0;
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        self.payload().write_to(w)
    }

    pub fn read_from<R: Read>(r: &mut R, logical_len: usize) -> Result<Self> {
        let payload = Bitset::read_from(r)?;
        if payload.len() > logical_len {
            return Err(Error::Corrupt(format!(
                "sparse row stores {} bits, wider than {logical_len}",
                payload.len()
            )));
        }
        if payload.len() > 0 && !payload.bit(payload.len() - 1) {
            return Err(Error::Corrupt("sparse row stores trailing zeros".into()));
        }
        Ok(SparseRow {
            logical_len,
            stored_len: payload.len,
            words: payload.words,
        })
    }
}

/// Drops the maximal trailing run of zeros.
pub fn sparsify(bits: &Bitset) -> SparseRow {
    let stored_len = bits.last_one().map_or(0, |i| i + 1);
    let mut words = bits.words()[..words_for(stored_len)].to_vec();
    let rem = stored_len % WORD_BITS;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
    SparseRow {
        logical_len: bits.len(),
        stored_len,
        words,
    }
}

pub fn densify(row: &SparseRow) -> Bitset {
    let mut words = row.words.clone();
    words.resize(words_for(row.logical_len), 0);
    Bitset {
        len: row.logical_len,
        words,
    }
}

/// A bijection between item ids and positions `0..N`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ordering {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Ordering {
    pub fn new<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ordering = Ordering::default();
        for item in items {
            ordering.push(item)?;
        }
        Ok(ordering)
    }

    /// Appends an item at position `N`.
    pub fn push<S: Into<String>>(&mut self, item: S) -> Result<usize> {
        let item = item.into();
        if self.index.contains_key(&item) {
            return Err(Error::DuplicateItem(item));
        }
        let position = self.items.len();
        self.index.insert(item.clone(), position);
        self.items.push(item);
        Ok(position)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn item(&self, position: usize) -> Option<&str> {
        self.items.get(position).map(String::as_str)
    }

    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    /// Bit `i` is 1 iff `items[i]` is in `item_set`.
    pub fn encode<I, S>(&self, item_set: I) -> Result<Bitset>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut bits = Bitset::new(self.len());
        for item in item_set {
            let item = item.as_ref();
            let position = self
                .index_of(item)
                .ok_or_else(|| Error::UnknownItem(item.to_string()))?;
            bits.insert(position);
        }
        Ok(bits)
    }

    /// Items at the set positions of `bits`, unordered.
    pub fn decode(&self, bits: &Bitset) -> Result<HashSet<&str>> {
        if bits.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: bits.len(),
            });
        }
        Ok(bits.iter_ones().map(|i| self.items[i].as_str()).collect())
    }
}
