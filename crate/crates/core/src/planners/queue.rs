use crate::error::{Error, Result};

/// Pushes at or below this priority are ignored.
pub const PRIORITY_THRESHOLD: f64 = 1e-9;

const ABSENT: usize = usize::MAX;

/// Indexed binary max-heap over feature indices `0..n`.
///
/// Each index is present at most once. Pushing a present index keeps the
/// larger of the two priorities. Equal priorities pop the lower index first.
#[derive(Clone, Debug)]
pub struct SweepQueue {
    heap: Vec<usize>,
    position: Vec<usize>,
    priority: Vec<f64>,
}

impl SweepQueue {
    pub fn new(n: usize) -> Self {
        SweepQueue {
            heap: Vec::new(),
            position: vec![ABSENT; n],
            priority: vec![0.0; n],
        }
    }

    pub fn capacity(&self) -> usize {
        self.position.len()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.position.get(i).is_some_and(|&p| p != ABSENT)
    }

    pub fn priority(&self, i: usize) -> Option<f64> {
        self.contains(i).then(|| self.priority[i])
    }

    /// Returns whether the queue changed.
    pub fn push(&mut self, i: usize, priority: f64) -> Result<bool> {
        if i >= self.capacity() {
            return Err(Error::contract(format!(
                "queue index {i} out of range for capacity {}",
                self.capacity()
            )));
        }
        if priority.is_nan() {
            return Err(Error::contract("NaN queue priority"));
        }
        if priority <= PRIORITY_THRESHOLD {
            return Ok(false);
        }
        let at = self.position[i];
        if at == ABSENT {
            self.priority[i] = priority;
            self.position[i] = self.heap.len();
            self.heap.push(i);
            self.sift_up(self.heap.len() - 1);
            Ok(true)
        } else if priority > self.priority[i] {
            self.priority[i] = priority;
            self.sift_up(at);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        let top = *self.heap.first()?;
        let last = self.heap.pop()?;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last] = 0;
            self.sift_down(0);
        }
        self.position[top] = ABSENT;
        Some((top, self.priority[top]))
    }

    pub fn clear(&mut self) {
        for &i in &self.heap {
            self.position[i] = ABSENT;
        }
        self.heap.clear();
    }

    /// Queue contents sorted by index.
    pub fn entries(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<_> = self.heap.iter().map(|&i| (i, self.priority[i])).collect();
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    fn before(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.priority[a], self.priority[b]);
        pa > pb || (pa == pb && a < b)
    }

    fn swap(&mut self, x: usize, y: usize) {
        self.heap.swap(x, y);
        self.position[self.heap[x]] = x;
        self.position[self.heap[y]] = y;
    }

    fn sift_up(&mut self, mut at: usize) {
        while at > 0 {
            let parent = (at - 1) / 2;
            if !self.before(self.heap[at], self.heap[parent]) {
                break;
            }
            self.swap(at, parent);
            at = parent;
        }
    }

    fn sift_down(&mut self, mut at: usize) {
        loop {
            let (l, r) = (2 * at + 1, 2 * at + 2);
            let mut best = at;
            if l < self.heap.len() && self.before(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && self.before(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == at {
                return;
            }
            self.swap(at, best);
            at = best;
        }
    }
}
