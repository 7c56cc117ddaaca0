//! Canonical finite sets.
//!
//! A [`FinSet`] is a sorted, duplicate-free vector. Keeping every set in
//! this normal form makes the join-semilattice laws (unit, associativity,
//! commutativity, idempotence) hold as plain `==` on the representation,
//! so set-valued data can be compared, hashed and ordered structurally.

use std::fmt;

/// A finite set over `T`, stored sorted and without duplicates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinSet<T> {
    elems: Vec<T>,
}

impl<T: Ord> FinSet<T> {
    /// The empty set.
    pub fn empty() -> Self {
        FinSet { elems: Vec::new() }
    }

    /// The one-element set `{a}`.
    pub fn singleton(a: T) -> Self {
        FinSet { elems: vec![a] }
    }

    /// Set union. Both inputs are already sorted, so this is a merge.
    pub fn union(&self, other: &Self) -> Self
    where
        T: Clone,
    {
        let mut out = Vec::with_capacity(self.elems.len() + other.elems.len());
        let (mut i, mut j) = (0, 0);
        while i < self.elems.len() && j < other.elems.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.elems[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.elems[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.elems[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.elems[i..].iter().cloned());
        out.extend(other.elems[j..].iter().cloned());
        FinSet { elems: out }
    }

    /// Membership test.
    pub fn member(&self, a: &T) -> bool {
        self.elems.binary_search(a).is_ok()
    }

    /// `self ⊆ other`.
    pub fn subset(&self, other: &Self) -> bool {
        self.elems.iter().all(|a| other.member(a))
    }

    /// Direct image under `f`. The result is re-canonicalized, so
    /// non-injective maps shrink the set.
    pub fn map<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> FinSet<U> {
        self.elems.iter().map(|a| f(a)).collect()
    }

    /// Elements satisfying `keep`, as a set.
    pub fn filter(&self, mut keep: impl FnMut(&T) -> bool) -> Self
    where
        T: Clone,
    {
        FinSet {
            elems: self.elems.iter().filter(|a| keep(a)).cloned().collect(),
        }
    }

    /// The order-least element of `f⁻¹(b)` within this set, if any.
    pub fn preimage_witness<U: PartialEq>(&self, mut f: impl FnMut(&T) -> U, b: &U) -> Option<&T> {
        self.elems.iter().find(|a| f(a) == *b)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.elems.iter()
    }

    /// The elements in canonical (sorted) order.
    pub fn as_slice(&self) -> &[T] {
        &self.elems
    }

    /// `self` with `a` added.
    pub fn inserted(&self, a: T) -> Self
    where
        T: Clone,
    {
        self.union(&FinSet::singleton(a))
    }
}

impl<T: Ord> FromIterator<T> for FinSet<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut elems: Vec<T> = iter.into_iter().collect();
        elems.sort();
        elems.dedup();
        FinSet { elems }
    }
}

impl<T: Ord> Default for FinSet<T> {
    fn default() -> Self {
        FinSet::empty()
    }
}

impl<'a, T> IntoIterator for &'a FinSet<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

impl<T> IntoIterator for FinSet<T> {
    type Item = T;
    type IntoIter = std::vec::IntoIter<T>;
    fn into_iter(self) -> Self::IntoIter {
        self.elems.into_iter()
    }
}

impl<T: fmt::Display> fmt::Display for FinSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl<T: fmt::Debug> fmt::Debug for FinSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter()).finish()
    }
}
