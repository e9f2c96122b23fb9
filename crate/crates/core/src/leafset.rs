//! Fixed-width bitsets over vertex ids, used as canonical clade
//! representations.

use std::cmp::Ordering;

/// A set of leaf (vertex) ids drawn from `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeafSet {
    n: usize,
    words: Vec<u64>,
}

impl LeafSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        let mut s = Self::empty(n);
        s.insert(i);
        s
    }

    /// Universe size, not the cardinality.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.n
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Ids of set members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// Two clades are compatible iff they nest or are disjoint.
    pub fn compatible_with(&self, other: &Self) -> bool {
        !self.intersects(other) || self.is_subset_of(other) || other.is_subset_of(self)
    }

}

impl Ord for LeafSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .cmp(&other.words)
            .then(self.n.cmp(&other.n))
    }
}

impl PartialOrd for LeafSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut a = LeafSet::empty(70);
        a.insert(0);
        a.insert(65);
        assert!(a.contains(0) && a.contains(65) && !a.contains(1));
        assert_eq!(a.count(), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 65]);
        let b = LeafSet::singleton(70, 65);
        assert!(b.is_subset_of(&a));
        assert!(a.intersects(&b));
        assert_eq!(a.union(&b).count(), 2);
        assert!(LeafSet::full(70).is_full());
    }

    #[test]
    fn compatibility() {
        let n = 8;
        let mut ab = LeafSet::empty(n);
        ab.insert(0);
        ab.insert(1);
        let mut abc = ab.clone();
        abc.insert(2);
        let mut cd = LeafSet::empty(n);
        cd.insert(2);
        cd.insert(3);
        assert!(ab.compatible_with(&abc));
        assert!(ab.compatible_with(&cd));
        assert!(!abc.compatible_with(&cd));
    }
}
