/// Binary sum tree over event rates: O(log n) update and selection, with
/// sums recomputed from the leaves upward so no drift accumulates.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let size = n.next_power_of_two();
        SumTree {
            size,
            nodes: vec![0.0; 2 * size],
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let mut k = i + self.size;
        self.nodes[k] = v;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[i + self.size]
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative interval contains `u ∈ [0, total)`.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let l = self.nodes[2 * k];
            if u < l || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= l;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}
