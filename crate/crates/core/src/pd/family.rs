//! Horizon families in the reference configuration.

use crate::error::{Error, Result};

/// Bond lists in compressed-row form: the bonds of node `p` are
/// `offsets[p]..offsets[p + 1]`.
#[derive(Debug, Clone)]
pub struct Families {
    pub offsets: Vec<usize>,
    pub neighbor: Vec<usize>,
    /// Index of the opposite bond `Q → P` for each bond `P → Q`.
    pub reverse: Vec<usize>,
}

impl Families {
    /// Neighbors within `delta` of each point (self excluded), found with a cell list.
    pub fn build(points: &[[f64; 2]], delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {delta}")));
        }
        let n = points.len();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let dims = [0, 1].map(|k| (((hi[k] - lo[k]) / delta).floor() as usize + 1).max(1));
        let cell_of = |p: &[f64; 2]| {
            let c = [0, 1].map(|k| (((p[k] - lo[k]) / delta).floor() as usize).min(dims[k] - 1));
            c[1] * dims[0] + c[0]
        };
        let mut cell_start = vec![0usize; dims[0] * dims[1] + 1];
        for p in points {
            cell_start[cell_of(p) + 1] += 1;
        }
        for c in 0..dims[0] * dims[1] {
            cell_start[c + 1] += cell_start[c];
        }
        let mut fill = cell_start.clone();
        let mut sorted = vec![0usize; n];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            sorted[fill[c]] = i;
            fill[c] += 1;
        }
        let r2 = delta * delta * (1.0 + 1e-12);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbor = Vec::new();
        offsets.push(0);
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            let (cx, cy) = (c % dims[0], c / dims[0]);
            let start = neighbor.len();
            for dy in cy.saturating_sub(1)..=(cy + 1).min(dims[1] - 1) {
                for dx in cx.saturating_sub(1)..=(cx + 1).min(dims[0] - 1) {
                    let cell = dy * dims[0] + dx;
                    for &j in &sorted[cell_start[cell]..cell_start[cell + 1]] {
                        let q = &points[j];
                        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                        if j != i && d2 <= r2 {
                            neighbor.push(j);
                        }
                    }
                }
            }
            if neighbor.len() == start {
                return Err(Error::EmptyFamily { node: i });
            }
            neighbor[start..].sort_unstable();
            offsets.push(neighbor.len());
        }
        let mut reverse = vec![usize::MAX; neighbor.len()];
        for p in 0..n {
            for b in offsets[p]..offsets[p + 1] {
                let q = neighbor[b];
                let slice = &neighbor[offsets[q]..offsets[q + 1]];
                let k = slice
                    .binary_search(&p)
                    .map_err(|_| Error::InvalidInput(format!("asymmetric family between {p} and {q}")))?;
                reverse[b] = offsets[q] + k;
            }
        }
        Ok(Self { offsets, neighbor, reverse })
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_bonds(&self) -> usize {
        self.neighbor.len()
    }

    pub fn bonds(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn neighbors(&self, p: usize) -> &[usize] {
        &self.neighbor[self.bonds(p)]
    }

    /// Bond index of `p → q`, if they are family members.
    pub fn find(&self, p: usize, q: usize) -> Option<usize> {
        self.neighbors(p).binary_search(&q).ok().map(|k| self.offsets[p] + k)
    }
}
