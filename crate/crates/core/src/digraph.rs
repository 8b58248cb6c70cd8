//! Directed communication graphs and the two graph constants used by every
//! flocking threshold: the smallest spanning-tree depth and the largest
//! in-neighbourhood size.
//!
//! Convention: `chi(i, j)` is true when agent `j` transmits to agent `i`
//! (row = receiver, column = sender). Vertices are 0-based.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{FlockError, Result};

/// A hop count that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Hops {
    Finite(usize),
    Infinite,
}

impl Hops {
    pub fn finite(self) -> Option<usize> {
        match self {
            Hops::Finite(n) => Some(n),
            Hops::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Hops::Finite(_))
    }
}

impl fmt::Display for Hops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hops::Finite(n) => write!(f, "{n}"),
            Hops::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    // row-major, chi[i * n + j]
    chi: Vec<bool>,
}

impl Digraph {
    /// Digraph with `n` vertices and no arcs.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FlockError::InvalidParameter(
                "digraph needs at least one vertex".into(),
            ));
        }
        Ok(Self {
            n,
            chi: vec![false; n * n],
        })
    }

    /// All-to-all digraph without self-loops.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.chi[i * n + j] = true;
                }
            }
        }
        Ok(g)
    }

    /// Builds a digraph from 0-based `(sender, receiver)` arcs.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(sender, receiver) in arcs {
            g.add_arc(sender, receiver)?;
        }
        Ok(g)
    }

    /// Builds a digraph from 1-based `(sender, receiver)` labels, the way
    /// scenario files number agents.
    pub fn from_labeled_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(arcs.len());
        for &(s, r) in arcs {
            if s == 0 || r == 0 {
                return Err(FlockError::InvalidParameter(format!(
                    "agent labels are 1-based, got arc {s}->{r}"
                )));
            }
            zero_based.push((s - 1, r - 1));
        }
        Self::from_arcs(n, &zero_based)
    }

    /// Builds a digraph from a square boolean connection matrix
    /// (`matrix[i][j]` true when `j` transmits to `i`).
    pub fn from_matrix(matrix: &[Vec<bool>]) -> Result<Self> {
        let n = matrix.len();
        let mut g = Self::empty(n)?;
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(FlockError::InvalidParameter(format!(
                    "connection matrix row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            for (j, &on) in row.iter().enumerate() {
                if on {
                    g.add_arc(j, i)?;
                }
            }
        }
        Ok(g)
    }

    pub fn add_arc(&mut self, sender: usize, receiver: usize) -> Result<()> {
        self.check(sender)?;
        self.check(receiver)?;
        if sender == receiver {
            return Err(FlockError::SelfLoop(sender));
        }
        self.chi[receiver * self.n + sender] = true;
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// `chi_ij`: true when `j` transmits to `i`.
    #[inline]
    pub fn chi(&self, i: usize, j: usize) -> bool {
        self.chi[i * self.n + j]
    }

    /// All arcs as 0-based `(sender, receiver)` pairs, ordered by receiver.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.chi(i, j) {
                    out.push((j, i));
                }
            }
        }
        out
    }

    pub fn arc_count(&self) -> usize {
        self.chi.iter().filter(|&&b| b).count()
    }

    /// Senders that agent `i` listens to.
    pub fn neighbor_set(&self, i: usize) -> Result<Vec<usize>> {
        self.check(i)?;
        Ok((0..self.n).filter(|&j| self.chi(i, j)).collect())
    }

    /// Shortest path length from `i` to `j` following the direction of
    /// information flow.
    pub fn distance(&self, i: usize, j: usize) -> Result<Hops> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.bfs_from(i)[j])
    }

    /// BFS hop counts from `source` to every vertex.
    pub fn bfs_from(&self, source: usize) -> Vec<Hops> {
        let mut dist = vec![Hops::Infinite; self.n];
        dist[source] = Hops::Finite(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let Hops::Finite(du) = dist[u] else {
                unreachable!()
            };
            // u -> k is an arc when u transmits to k
            for k in 0..self.n {
                if self.chi(k, u) && dist[k] == Hops::Infinite {
                    dist[k] = Hops::Finite(du + 1);
                    queue.push_back(k);
                }
            }
        }
        dist
    }

    pub fn compute_metrics(&self) -> GraphMetrics {
        let mut roots = Vec::new();
        let mut gamma_g = Hops::Infinite;
        for r in 0..self.n {
            let depth = self.bfs_from(r).into_iter().max().unwrap_or(Hops::Finite(0));
            if depth.is_finite() {
                roots.push(r);
                gamma_g = gamma_g.min(depth);
            }
        }
        let n_infinity = (0..self.n)
            .map(|i| (0..self.n).filter(|&j| self.chi(i, j)).count())
            .max()
            .unwrap_or(0);
        GraphMetrics {
            roots,
            gamma_g,
            n_infinity,
        }
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(FlockError::InvalidParameter(
                "permutation length does not match vertex count".into(),
            ));
        }
        let mut g = Self::empty(self.n)?;
        for (s, r) in self.arcs() {
            g.add_arc(perm[s], perm[r])?;
        }
        Ok(g)
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(FlockError::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMetrics {
    pub roots: Vec<usize>,
    /// Smallest depth of a spanning tree over all roots.
    pub gamma_g: Hops,
    /// Largest in-neighbourhood size.
    pub n_infinity: usize,
}

impl GraphMetrics {
    pub fn has_spanning_tree(&self) -> bool {
        !self.roots.is_empty()
    }
}
