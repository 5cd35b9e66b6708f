//! Order-statistic multiset.
//!
//! An AVL tree stored in a flat arena. Equal keys share a node with a
//! multiplicity counter, and every node caches the total multiplicity of its
//! subtree so that the k-th smallest element can be found in one descent.
//! The stream only grows, so there is no deletion.

use std::cell::Cell;
use std::cmp::Ordering;

use crate::error::{Error, Result};

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    count: usize,
    /// Sum of `count` over the subtree rooted here.
    size: usize,
    height: u8,
    left: usize,
    right: usize,
}

/// Sorted multiset of finite reals with `O(log n)` insert and select.
///
/// Keys are ordered by [`f64::total_cmp`], so `-0.0` sorts before `0.0` and
/// [`select`](Self::select) agrees bit-for-bit with a full sort that uses the
/// same ordering.
#[derive(Debug, Clone)]
pub struct OrderStatMultiset {
    nodes: Vec<Node>,
    root: usize,
    // Key comparisons performed so far; interior mutability lets `select`
    // stay `&self`.
    comparisons: Cell<u64>,
}

impl Default for OrderStatMultiset {
    fn default() -> Self {
        Self::new()
    }
}

impl OrderStatMultiset {
    pub fn new() -> Self {
        OrderStatMultiset {
            nodes: Vec::new(),
            root: NIL,
            comparisons: Cell::new(0),
        }
    }

    /// Number of stored elements, counting multiplicity.
    pub fn len(&self) -> usize {
        self.size_of(self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    /// Number of distinct keys.
    pub fn distinct(&self) -> usize {
        self.nodes.len()
    }

    /// Height of the tree (0 when empty).
    pub fn depth(&self) -> usize {
        self.height_of(self.root) as usize
    }

    /// Total key comparisons performed by `insert` and `select` since
    /// construction or the last [`reset_comparisons`](Self::reset_comparisons).
    pub fn comparisons(&self) -> u64 {
        self.comparisons.get()
    }

    pub fn reset_comparisons(&self) {
        self.comparisons.set(0);
    }

    pub fn insert(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::domain(format!("cannot insert non-finite value {x}")));
        }
        self.root = self.insert_at(self.root, x);
        Ok(())
    }

    /// Returns the `k`-th smallest element (1-based), counting multiplicity.
    pub fn select(&self, k: usize) -> Result<f64> {
        let size = self.len();
        if k == 0 || k > size {
            return Err(Error::Index { index: k, size });
        }
        let mut node = self.root;
        let mut k = k;
        loop {
            let n = &self.nodes[node];
            self.bump();
            let left = self.size_of(n.left);
            if k <= left {
                node = n.left;
            } else if k <= left + n.count {
                return Ok(n.key);
            } else {
                k -= left + n.count;
                node = n.right;
            }
        }
    }

    /// Elements in non-decreasing order, repeated by multiplicity.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        let mut node = self.root;
        while node != NIL || !stack.is_empty() {
            while node != NIL {
                stack.push(node);
                node = self.nodes[node].left;
            }
            let top = stack.pop().expect("stack is non-empty");
            out.push(top);
            node = self.nodes[top].right;
        }
        out.into_iter()
            .flat_map(move |i| std::iter::repeat_n(self.nodes[i].key, self.nodes[i].count))
    }

    fn bump(&self) {
        self.comparisons.set(self.comparisons.get() + 1);
    }

    fn size_of(&self, node: usize) -> usize {
        if node == NIL {
            0
        } else {
            self.nodes[node].size
        }
    }

    fn height_of(&self, node: usize) -> u8 {
        if node == NIL {
            0
        } else {
            self.nodes[node].height
        }
    }

    fn update(&mut self, node: usize) {
        let (l, r) = (self.nodes[node].left, self.nodes[node].right);
        let size = self.size_of(l) + self.size_of(r) + self.nodes[node].count;
        let height = 1 + self.height_of(l).max(self.height_of(r));
        let n = &mut self.nodes[node];
        n.size = size;
        n.height = height;
    }

    fn balance_factor(&self, node: usize) -> i16 {
        let n = &self.nodes[node];
        self.height_of(n.left) as i16 - self.height_of(n.right) as i16
    }

    fn rotate_right(&mut self, node: usize) -> usize {
        let pivot = self.nodes[node].left;
        self.nodes[node].left = self.nodes[pivot].right;
        self.nodes[pivot].right = node;
        self.update(node);
        self.update(pivot);
        pivot
    }

    fn rotate_left(&mut self, node: usize) -> usize {
        let pivot = self.nodes[node].right;
        self.nodes[node].right = self.nodes[pivot].left;
        self.nodes[pivot].left = node;
        self.update(node);
        self.update(pivot);
        pivot
    }

    fn rebalance(&mut self, node: usize) -> usize {
        self.update(node);
        let bf = self.balance_factor(node);
        if bf > 1 {
            if self.balance_factor(self.nodes[node].left) < 0 {
                let l = self.nodes[node].left;
                self.nodes[node].left = self.rotate_left(l);
            }
            return self.rotate_right(node);
        }
        if bf < -1 {
            if self.balance_factor(self.nodes[node].right) > 0 {
                let r = self.nodes[node].right;
                self.nodes[node].right = self.rotate_right(r);
            }
            return self.rotate_left(node);
        }
        node
    }

    fn insert_at(&mut self, node: usize, x: f64) -> usize {
        if node == NIL {
            self.nodes.push(Node {
                key: x,
                count: 1,
                size: 1,
                height: 1,
                left: NIL,
                right: NIL,
            });
            return self.nodes.len() - 1;
        }
        self.bump();
        match x.total_cmp(&self.nodes[node].key) {
            Ordering::Equal => {
                let n = &mut self.nodes[node];
                n.count += 1;
                n.size += 1;
                // shape unchanged, no rebalancing needed
                node
            }
            Ordering::Less => {
                let l = self.insert_at(self.nodes[node].left, x);
                self.nodes[node].left = l;
                self.rebalance(node)
            }
            Ordering::Greater => {
                let r = self.insert_at(self.nodes[node].right, x);
                self.nodes[node].right = r;
                self.rebalance(node)
            }
        }
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        fn walk(s: &OrderStatMultiset, node: usize) -> (usize, u8) {
            if node == NIL {
                return (0, 0);
            }
            let n = &s.nodes[node];
            let (ls, lh) = walk(s, n.left);
            let (rs, rh) = walk(s, n.right);
            assert_eq!(n.size, ls + rs + n.count);
            assert_eq!(n.height, 1 + lh.max(rh));
            assert!((lh as i16 - rh as i16).abs() <= 1);
            (n.size, n.height)
        }
        walk(self, self.root);
    }
}

impl FromIterator<f64> for OrderStatMultiset {
    /// Collects finite values.
    ///
    /// # Panics
    ///
    /// Panics on a non-finite value; use [`OrderStatMultiset::insert`] to
    /// handle that case.
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = OrderStatMultiset::new();
        for x in iter {
            s.insert(x).expect("finite value");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::rng::stream_rng;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn singleton() {
        let mut s = OrderStatMultiset::new();
        s.insert(5.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.select(1).unwrap(), 5.0);
    }

    #[test]
    fn duplicates_are_retained() {
        let mut s: OrderStatMultiset = [2.0, 2.0].into_iter().collect();
        s.insert(2.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.distinct(), 1);
        assert_eq!(s.select(3).unwrap(), 2.0);
    }

    #[test]
    fn small_selects() {
        let s: OrderStatMultiset = [5.0, 1.0, 3.0].into_iter().collect();
        assert_eq!(s.select(2).unwrap(), 3.0);
        let s: OrderStatMultiset = (1..=10).map(f64::from).collect();
        assert_eq!(s.select(8).unwrap(), 8.0);
    }

    #[test]
    fn out_of_range_select() {
        let s: OrderStatMultiset = [1.0, 2.0].into_iter().collect();
        assert!(matches!(
            s.select(0),
            Err(Error::Index { index: 0, size: 2 })
        ));
        assert!(matches!(
            s.select(3),
            Err(Error::Index { index: 3, size: 2 })
        ));
        assert!(OrderStatMultiset::new().select(1).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = OrderStatMultiset::new();
        assert!(matches!(s.insert(f64::NAN), Err(Error::Domain(_))));
        assert!(s.insert(f64::INFINITY).is_err());
        assert!(s.is_empty());
    }

    #[test]
    fn signed_zeros_follow_total_order() {
        let s: OrderStatMultiset = [0.0, -0.0, 0.0].into_iter().collect();
        assert_eq!(s.select(1).unwrap().to_bits(), (-0.0f64).to_bits());
        assert_eq!(s.select(2).unwrap().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn ten_thousand_random_inserts_match_sort() {
        let mut rng = stream_rng(11);
        let values: Vec<f64> = (0..10_000)
            .map(|_| rng.random::<f64>() * 200.0 - 100.0)
            .collect();
        let s: OrderStatMultiset = values.iter().copied().collect();
        s.check_invariants();
        let oracle = sorted(values);
        for (k, want) in oracle.iter().enumerate() {
            assert_eq!(s.select(k + 1).unwrap().to_bits(), want.to_bits());
        }
    }

    #[test]
    fn sorted_insertion_stays_logarithmic() {
        for &n in &[1usize << 10, 1 << 12, 1 << 14] {
            let mut s = OrderStatMultiset::new();
            for i in 0..n {
                s.insert(i as f64).unwrap();
            }
            s.check_invariants();
            // AVL height bound: 1.4405 log2(n + 2)
            let bound = 1.4405 * ((n + 2) as f64).log2();
            assert!((s.depth() as f64) <= bound, "n={n} depth={}", s.depth());
        }
    }

    #[test]
    fn iter_is_sorted_with_multiplicity() {
        let s: OrderStatMultiset = [3.0, 1.0, 3.0, 2.0].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 3.0]);
    }

    proptest! {
        #[test]
        fn select_enumerates_sorted_order(values in prop::collection::vec(-50i32..50, 1..300)) {
            let values: Vec<f64> = values.into_iter().map(|v| v as f64 * 0.5).collect();
            let s: OrderStatMultiset = values.iter().copied().collect();
            let oracle = sorted(values);
            let got: Vec<f64> = (1..=s.len()).map(|k| s.select(k).unwrap()).collect();
            prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(got, oracle);
        }
    }
}
