//! Uniform tensor grids on the unit box, boundary included.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Grid {
    pub dim: usize,
    pub nodes: usize,
}

impl Grid {
    pub fn new(dim: usize, nodes: usize) -> Self {
        Self { dim, nodes }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.nodes - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for slot in m.iter_mut().take(self.dim) {
            *slot = idx % self.nodes;
            idx /= self.nodes;
        }
        m
    }

    pub fn linear(&self, m: [usize; 3]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            idx = idx * self.nodes + m[a];
        }
        idx
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let h = self.h();
        let mut c = [0.0; 3];
        for a in 0..self.dim {
            c[a] = m[a] as f64 * h;
        }
        c
    }

    /// Number of axes along which the node sits on the boundary.
    pub fn boundary_count(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        (0..self.dim).filter(|&a| m[a] == 0 || m[a] == self.nodes - 1).count()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary_count(idx) > 0
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Nearest-neighbour edges `(i, j)` with `i < j`, together with the
    /// number of boundary axes the edge lies in (an edge lies in the face
    /// `x_a = const` when both endpoints are on it).
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let m = self.multi_index(i);
            for a in 0..self.dim {
                if m[a] + 1 < self.nodes {
                    let mut mj = m;
                    mj[a] += 1;
                    let j = self.linear(mj);
                    let faces = (0..self.dim)
                        .filter(|&b| b != a && (m[b] == 0 || m[b] == self.nodes - 1))
                        .count();
                    out.push((i, j, faces));
                }
            }
        }
        out
    }

    /// Lumped (trapezoid) cell volume of a node: `h^dim / 2^(boundary axes)`.
    pub fn lumped_volume(&self, idx: usize) -> f64 {
        self.h().powi(self.dim as i32) / f64::powi(2.0, self.boundary_count(idx) as i32)
    }
}
