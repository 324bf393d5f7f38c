//! Indexed binary min-heap over mesh points.

/// Binary min-heap of point indices keyed by value, with a position map for
/// O(log n) decrease-key. Ties are broken by the lower index.
#[derive(Debug, Clone)]
pub struct ConsideredHeap {
    heap: Vec<(f64, usize)>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

#[inline]
fn less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl ConsideredHeap {
    /// An empty heap for indices `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        ConsideredHeap { heap: Vec::new(), pos: vec![ABSENT; capacity] }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.pos[idx] != ABSENT
    }

    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&(v, i)| (i, v))
    }

    pub fn push(&mut self, idx: usize, value: f64) {
        assert!(!self.contains(idx), "point {idx} already in heap");
        self.heap.push((value, idx));
        let k = self.heap.len() - 1;
        self.pos[idx] = k;
        self.sift_up(k);
    }

    /// Lowers the key of `idx`. Larger values are ignored.
    pub fn decrease(&mut self, idx: usize, value: f64) {
        let k = self.pos[idx];
        assert!(k != ABSENT, "point {idx} not in heap");
        if value < self.heap[k].0 {
            self.heap[k].0 = value;
            self.sift_up(k);
        }
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        let last = self.heap.len().checked_sub(1)?;
        self.swap(0, last);
        let (v, i) = self.heap.pop().unwrap();
        self.pos[i] = ABSENT;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((i, v))
    }

    /// Remaining entries in heap order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.heap.iter().map(|&(v, i)| (i, v))
    }

    /// Checks the heap property and the position map.
    pub fn check_integrity(&self) -> bool {
        let ordered = (1..self.heap.len()).all(|k| !less(self.heap[k], self.heap[(k - 1) / 2]));
        let mapped = self.heap.iter().enumerate().all(|(k, &(_, i))| self.pos[i] == k);
        let count = self.pos.iter().filter(|&&p| p != ABSENT).count() == self.heap.len();
        ordered && mapped && count
    }

    /// Heap property between `idx` and its parent and children, plus its
    /// position-map entry.
    pub fn check_local(&self, idx: usize) -> bool {
        let k = self.pos[idx];
        if k == ABSENT || self.heap.get(k).map(|e| e.1) != Some(idx) {
            return false;
        }
        let parent_ok = k == 0 || !less(self.heap[k], self.heap[(k - 1) / 2]);
        let children_ok = [2 * k + 1, 2 * k + 2]
            .iter()
            .all(|&c| c >= self.heap.len() || !less(self.heap[c], self.heap[k]));
        parent_ok && children_ok
    }

    #[inline]
    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a].1] = a;
        self.pos[self.heap[b].1] = b;
    }

    fn sift_up(&mut self, mut k: usize) {
        while k > 0 {
            let p = (k - 1) / 2;
            if !less(self.heap[k], self.heap[p]) {
                break;
            }
            self.swap(k, p);
            k = p;
        }
    }

    fn sift_down(&mut self, mut k: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * k + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && less(self.heap[r], self.heap[l]) { r } else { l };
            if !less(self.heap[c], self.heap[k]) {
                break;
            }
            self.swap(k, c);
            k = c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_pop_lowest_index() {
        let mut h = ConsideredHeap::new(10);
        h.push(7, 1.0);
        h.push(3, 1.0);
        h.push(5, 0.5);
        h.push(1, 1.0);
        assert_eq!(h.pop(), Some((5, 0.5)));
        assert_eq!(h.pop(), Some((1, 1.0)));
        assert_eq!(h.pop(), Some((3, 1.0)));
        assert_eq!(h.pop(), Some((7, 1.0)));
        assert_eq!(h.pop(), None);
    }

    #[test]
    fn decrease_key_reorders() {
        let mut h = ConsideredHeap::new(4);
        h.push(0, 3.0);
        h.push(1, 2.0);
        h.push(2, 1.0);
        h.decrease(0, 0.5);
        h.decrease(1, 5.0);
        assert!(h.check_integrity());
        assert_eq!(h.pop(), Some((0, 0.5)));
        assert_eq!(h.pop(), Some((2, 1.0)));
        assert!(!h.contains(2));
    }

    proptest! {
        #[test]
        fn pops_sorted(ops in prop::collection::vec((0usize..64, 0.0f64..10.0, any::<bool>()), 0..300)) {
            let mut h = ConsideredHeap::new(64);
            let mut reference = vec![None; 64];
            for (i, v, pop) in ops {
                if pop {
                    let expect = reference.iter().enumerate()
                        .filter_map(|(k, x): (usize, &Option<f64>)| x.map(|x| (x, k)))
                        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    let got = h.pop();
                    prop_assert_eq!(got, expect.map(|(x, k)| (k, x)));
                    if let Some((k, _)) = got { reference[k] = None; }
                } else if let Some(old) = reference[i] {
                    h.decrease(i, v);
                    reference[i] = Some(if v < old { v } else { old });
                } else {
                    h.push(i, v);
                    reference[i] = Some(v);
                }
                prop_assert!(h.check_integrity());
            }
        }
    }
}
