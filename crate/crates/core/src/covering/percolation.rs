//! Site percolation on `x0 + αℓZ^d` with the seed `𝔾 ∩ Λ_{L′+ℓ}(x0)` forced
//! bad, restricted to a finite window of lattice indices.

use std::collections::VecDeque;

use super::{alpha_box, q_to_f64, Q};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PercolationGraph {
    pub origin: Vec<f64>,
    pub ell: f64,
    pub alpha: Q,
    /// Seed vertices are the indices `k` with `|k_j| ≤ seed_radius`.
    pub seed_radius: i64,
    /// The window holds the indices `k` with `|k_j| ≤ window_radius`.
    pub window_radius: i64,
    /// `true` for bad; seed vertices are always bad.
    labels: Vec<bool>,
}

impl PercolationGraph {
    /// Graph for `Λ_{L′}(x0)` at scale `ℓ`; all labels start good.
    pub fn new(origin: Vec<f64>, l_prime: f64, ell: f64, window_radius: i64) -> Result<Self> {
        let l2 = l_prime + ell;
        let alpha = alpha_box(l2, ell)?;
        let step = alpha * super::rational(ell)?;
        let seed = ((super::rational(l2)? - super::rational(ell)?) / (step * Q::from(2))).to_integer();
        Self::from_parts(origin, ell, alpha, seed, window_radius)
    }

    pub fn from_parts(origin: Vec<f64>, ell: f64, alpha: Q, seed_radius: i64, window_radius: i64) -> Result<Self> {
        if origin.is_empty() || window_radius < seed_radius || seed_radius < 0 {
            return Err(Error::InvalidArgument(format!(
                "window radius {window_radius} must be at least the seed radius {seed_radius}"
            )));
        }
        let side = (2 * window_radius + 1) as usize;
        let n = side
            .checked_pow(origin.len() as u32)
            .filter(|&n| n <= 50_000_000)
            .ok_or_else(|| Error::InvalidArgument("percolation window too large".into()))?;
        let mut g = Self {
            origin,
            ell,
            alpha,
            seed_radius,
            window_radius,
            labels: vec![false; n],
        };
        for i in 0..n {
            if g.is_seed(i) {
                g.labels[i] = true;
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn step(&self) -> f64 {
        q_to_f64(self.alpha) * self.ell
    }

    fn side(&self) -> i64 {
        2 * self.window_radius + 1
    }

    /// Lattice index `k` of vertex `i` (lexicographic, last axis fastest).
    pub fn index(&self, mut i: usize) -> Vec<i64> {
        let side = self.side() as usize;
        let mut k = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            k[j] = (i % side) as i64 - self.window_radius;
            i /= side;
        }
        k
    }

    pub fn vertex(&self, k: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut i = 0i64;
        for &kj in k {
            if kj.abs() > self.window_radius {
                return None;
            }
            i = i * side + kj + self.window_radius;
        }
        Some(i as usize)
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let step = self.step();
        self.index(i).iter().zip(&self.origin).map(|(&k, &x)| x + k as f64 * step).collect()
    }

    pub fn is_seed(&self, i: usize) -> bool {
        self.index(i).iter().all(|k| k.abs() <= self.seed_radius)
    }

    pub fn is_bad(&self, i: usize) -> bool {
        self.labels[i]
    }

    /// Sets a label; seed vertices stay bad.
    pub fn set_bad(&mut self, i: usize, bad: bool) {
        self.labels[i] = bad || self.is_seed(i);
    }

    /// Labels every vertex from its lattice index.
    pub fn label_with<F: FnMut(&[i64]) -> bool>(&mut self, mut bad: F) {
        for i in 0..self.len() {
            let k = self.index(i);
            self.labels[i] = self.is_seed(i) || bad(&k);
        }
    }

    /// Neighbors at sup-distance exactly αℓ that lie in the window.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let k = self.index(i);
        let d = k.len();
        let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
        let mut off = vec![-1i64; d];
        loop {
            if off.iter().any(|&o| o != 0) {
                let nk: Vec<i64> = k.iter().zip(&off).map(|(a, b)| a + b).collect();
                if let Some(v) = self.vertex(&nk) {
                    out.push(v);
                }
            }
            let mut a = 0;
            while a < d && off[a] == 1 {
                off[a] = -1;
                a += 1;
            }
            if a == d {
                return out;
            }
            off[a] += 1;
        }
    }

    /// Vertices outside `cluster` adjacent to it.
    pub fn external_boundary(&self, cluster: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.len()];
        for &i in cluster {
            member[i] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut out = vec![];
        for &i in cluster {
            for v in self.neighbors(i) {
                if !member[v] && !seen[v] {
                    seen[v] = true;
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Largest sup-norm lattice index in the set.
    pub fn radius_of(&self, set: &[usize]) -> i64 {
        set.iter()
            .map(|&i| self.index(i).iter().map(|k| k.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// The bad cluster containing the seed, as sorted vertex indices.
pub fn bad_cluster(g: &PercolationGraph) -> Vec<usize> {
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::new();
    for i in 0..g.len() {
        if g.is_seed(i) {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    let mut out = vec![];
    while let Some(i) = queue.pop_front() {
        out.push(i);
        for v in g.neighbors(i) {
            if !seen[v] && g.is_bad(v) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Union-find over all bad edges; independent of the breadth-first search.
pub fn bad_cluster_union_find(g: &PercolationGraph) -> Vec<usize> {
    let n = g.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if !g.is_bad(i) {
            continue;
        }
        for v in g.neighbors(i) {
            if v > i && g.is_bad(v) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, v));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let roots: std::collections::HashSet<usize> =
        (0..n).filter(|&i| g.is_seed(i)).map(|i| find(&mut parent, i)).collect();
    (0..n).filter(|&i| g.is_bad(i) && roots.contains(&find(&mut parent, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_and_degree() {
        let g = PercolationGraph::new(vec![0.0, 0.0], 25.0, 5.0, 6).unwrap();
        // L″ = 30, ℓ = 5: α = 5/8, n = 4
        assert_eq!(g.seed_radius, 4);
        assert_eq!(g.len(), 169);
        let center = g.vertex(&[0, 0]).unwrap();
        assert_eq!(g.neighbors(center).len(), 8);
        assert_eq!(g.neighbors(g.vertex(&[6, 6]).unwrap()).len(), 3);
        assert!((g.step() - 3.125).abs() < 1e-15);
    }

    #[test]
    fn trivial_labelings() {
        let mut g = PercolationGraph::new(vec![0.0; 2], 25.0, 5.0, 7).unwrap();
        let seed: Vec<usize> = (0..g.len()).filter(|&i| g.is_seed(i)).collect();
        assert_eq!(bad_cluster(&g), seed);
        g.label_with(|_| true);
        assert_eq!(bad_cluster(&g).len(), g.len());
    }

    #[test]
    fn ring_detached_from_seed() {
        let mut g = PercolationGraph::from_parts(vec![0.0], 1.0, Q::new(3, 5), 1, 10).unwrap();
        g.label_with(|k| k[0] == 3 || k[0] == 4 || k[0] == 2 || k[0] == -7);
        let c = bad_cluster(&g);
        let idx: Vec<i64> = c.iter().map(|&i| g.index(i)[0]).collect();
        assert_eq!(idx, vec![-1, 0, 1, 2, 3, 4]);
        assert_eq!(c, bad_cluster_union_find(&g));
        let b: Vec<i64> = g.external_boundary(&c).iter().map(|&i| g.index(i)[0]).collect();
        assert_eq!(b, vec![-2, 5]);
    }
}
