use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QsrError, Result};

/// Largest ground-set size a mask can describe.
pub const MAX_SUBSET_SIZE: usize = 63;

/// A subset of `{0, .., m-1}` stored as a bitmask.
///
/// Used both for user subsets (P, P^c, S_k members) and for subsets of the
/// parts of a layout. Indices are 0-based; `Display` and JSON use 1-based
/// indices to match the usual user numbering.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SubsetMask {
    m: usize,
    bits: u64,
}

impl SubsetMask {
    pub fn new(m: usize, bits: u64) -> Result<Self> {
        if m > MAX_SUBSET_SIZE {
            return Err(QsrError::InvalidSubset(format!(
                "ground set of size {m} exceeds {MAX_SUBSET_SIZE}"
            )));
        }
        if bits & !Self::full_bits(m) != 0 {
            return Err(QsrError::InvalidSubset(format!(
                "bits {bits:#b} outside ground set of size {m}"
            )));
        }
        Ok(SubsetMask { m, bits })
    }

    fn full_bits(m: usize) -> u64 {
        if m == 64 {
            u64::MAX
        } else {
            (1u64 << m) - 1
        }
    }

    pub fn empty(m: usize) -> Self {
        SubsetMask { m, bits: 0 }
    }

    pub fn full(m: usize) -> Self {
        SubsetMask {
            m,
            bits: Self::full_bits(m),
        }
    }

    pub fn singleton(m: usize, i: usize) -> Result<Self> {
        Self::from_indices(m, &[i])
    }

    pub fn from_indices(m: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= m {
                return Err(QsrError::InvalidSubset(format!(
                    "index {i} out of range for ground set of size {m}"
                )));
            }
            bits |= 1 << i;
        }
        Self::new(m, bits)
    }

    /// Builds a mask from 1-based indices.
    pub fn from_one_based(m: usize, indices: &[usize]) -> Result<Self> {
        let zero: Vec<usize> = indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| QsrError::InvalidSubset("1-based index 0".into()))
            })
            .collect::<Result<_>>()?;
        Self::from_indices(m, &zero)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == Self::full_bits(self.m)
    }

    /// Non-empty and not the whole ground set.
    pub fn is_proper(&self) -> bool {
        !self.is_empty() && !self.is_full()
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.m && self.bits >> i & 1 == 1
    }

    pub fn complement(&self) -> Self {
        SubsetMask {
            m: self.m,
            bits: !self.bits & Self::full_bits(self.m),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.m, other.m);
        SubsetMask {
            m: self.m,
            bits: self.bits | other.bits,
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits & other.bits == 0
    }

    /// `{i - 1 mod m : i in self}`, the set of cyclic predecessors.
    pub fn predecessors(&self) -> Self {
        if self.m == 0 {
            return *self;
        }
        let low = self.bits & 1;
        let bits = (self.bits >> 1) | (low << (self.m - 1));
        SubsetMask { m: self.m, bits }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.m).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }

    /// The lexicographically smaller of `self` and its complement, i.e. the one
    /// containing index 0. Used as the storage key for cut quantities.
    pub fn canonical(&self) -> Self {
        if self.contains(0) {
            *self
        } else {
            self.complement()
        }
    }

    /// All subsets of `{0..m-1}` with exactly `k` elements, in increasing bit order.
    pub fn all_of_size(m: usize, k: usize) -> SizedSubsets {
        let first = if k > m {
            None
        } else if k == 0 {
            Some(0)
        } else {
            Some((1u64 << k) - 1)
        };
        SizedSubsets { m, next: first }
    }

    /// Every subset of `{0..m-1}`, empty set first.
    pub fn all(m: usize) -> impl Iterator<Item = SubsetMask> {
        (0..=Self::full_bits(m)).map(move |bits| SubsetMask { m, bits })
    }
}

/// Iterator over fixed-size subsets (Gosper's hack).
pub struct SizedSubsets {
    m: usize,
    next: Option<u64>,
}

impl Iterator for SizedSubsets {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let cur = self.next?;
        if cur > SubsetMask::full_bits(self.m) {
            self.next = None;
            return None;
        }
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            if n > SubsetMask::full_bits(self.m) || n <= cur {
                None
            } else {
                Some(n)
            }
        };
        Some(SubsetMask {
            m: self.m,
            bits: cur,
        })
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct SubsetRepr {
    m: usize,
    members: Vec<usize>,
}

impl Serialize for SubsetMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubsetRepr {
            m: self.m,
            members: self.indices().map(|i| i + 1).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubsetMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SubsetRepr::deserialize(d)?;
        SubsetMask::from_one_based(repr.m, &repr.members).map_err(serde::de::Error::custom)
    }
}

/// Binomial coefficient as f64 (exact for the small arguments used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
