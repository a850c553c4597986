//! Min-heap entry with an `f64` key and a deterministic tie-break.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy)]
pub(crate) struct MinEntry<T> {
    pub key: f64,
    pub tie: T,
}

impl<T: Ord> PartialEq for MinEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Ord> Eq for MinEntry<T> {}

impl<T: Ord> PartialOrd for MinEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Ord> Ord for MinEntry<T> {
    // reversed so that std's max-heap pops the smallest (key, tie) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.tie.cmp(&self.tie))
    }
}
