//! Fixed-capacity vertex sets backed by `u64` words.

use alloc::vec::Vec;

const WORD_BITS: usize = 64;

/// A set of vertex indices in `0..capacity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
    capacity: usize,
}

impl VertexSet {
    pub fn empty(capacity: usize) -> Self {
        Self {
            words: alloc::vec![0; capacity.div_ceil(WORD_BITS)],
            capacity,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut set = Self::empty(capacity);
        for v in 0..capacity {
            set.insert(v);
        }
        set
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.capacity && self.words[v / WORD_BITS] & (1 << (v % WORD_BITS)) != 0
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        debug_assert!(v < self.capacity);
        self.words[v / WORD_BITS] |= 1 << (v % WORD_BITS);
    }

    #[inline]
    pub fn remove(&mut self, v: usize) {
        debug_assert!(v < self.capacity);
        self.words[v / WORD_BITS] &= !(1 << (v % WORD_BITS));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.capacity, other.capacity);
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            capacity: self.capacity,
        }
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
            capacity: self.capacity,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            capacity: self.capacity,
        }
    }

    /// Ascending iteration over members.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * WORD_BITS + bit)
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let mut a = VertexSet::empty(130);
        let mut b = VertexSet::empty(130);
        for v in [0, 5, 64, 129] {
            a.insert(v);
        }
        for v in [5, 64, 100] {
            b.insert(v);
        }
        assert_eq!(a.intersection(&b).iter().collect::<Vec<_>>(), [5, 64]);
        assert_eq!(a.difference(&b).iter().collect::<Vec<_>>(), [0, 129]);
        assert_eq!(a.union(&b).len(), 5);
        assert_eq!(a.intersection_len(&b), 2);
        a.remove(129);
        assert!(!a.contains(129));
        assert!(!a.contains(1000));
        assert_eq!(VertexSet::full(70).len(), 70);
        assert!(VertexSet::empty(3).is_empty());
    }
}
