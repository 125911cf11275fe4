//! Metric navigation graphs and their query operations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One entry of the per-node action space: move to a neighbor, or stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    Move(u32),
    Stop,
}

/// A connected metric graph with per-node feature vectors and landmark
/// token ids. Node ids are dense indices `0..num_nodes`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Scene<S: Scalar> {
    pub scene_id: u32,
    /// Node positions in meters.
    pub positions: Vec<[S; 2]>,
    /// Per-node observation vectors, all of the same dimension.
    pub features: Vec<Vec<S>>,
    /// Per-node landmark token id.
    pub landmarks: Vec<u32>,
    /// Undirected adjacency: for each node, `(neighbor, edge length)`
    /// sorted ascending by neighbor id.
    pub adjacency: Vec<Vec<(u32, S)>>,
}

impl<S: Scalar> Scene<S> {
    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn check_node(&self, node: u32) -> Result<()> {
        if (node as usize) < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::UnknownNode {
                scene: self.scene_id,
                node,
            })
        }
    }

    /// Ordered action space at `node`: neighbors ascending by id, then STOP.
    /// The ordering is canonical — stored logits index into it.
    pub fn candidate_actions(&self, node: u32) -> Result<Vec<Candidate>> {
        self.check_node(node)?;
        let mut out: Vec<Candidate> = self.adjacency[node as usize]
            .iter()
            .map(|&(n, _)| Candidate::Move(n))
            .collect();
        out.push(Candidate::Stop);
        Ok(out)
    }

    /// Number of candidates at `node` (neighbors + STOP).
    pub fn candidate_count(&self, node: u32) -> Result<usize> {
        self.check_node(node)?;
        Ok(self.adjacency[node as usize].len() + 1)
    }

    /// Length of the edge `from -> to`, if adjacent.
    pub fn edge_length(&self, from: u32, to: u32) -> Option<S> {
        self.adjacency
            .get(from as usize)?
            .iter()
            .find(|&&(n, _)| n == to)
            .map(|&(_, len)| len)
    }

    /// Metric shortest path from `a` to `b`; ties broken by
    /// lexicographically smallest node sequence.
    pub fn shortest_path(&self, a: u32, b: u32) -> Result<(Vec<u32>, S)> {
        self.check_node(a)?;
        self.check_node(b)?;
        if a == b {
            return Ok((vec![a], S::zero()));
        }

        // Entries pop in increasing (dist, path) order. Edge weights are
        // strictly positive, so the first pop of a node carries its
        // optimal distance and the lexicographically smallest such path.
        struct Entry<S> {
            dist: S,
            path: Vec<u32>,
        }
        impl<S: Scalar> PartialEq for Entry<S> {
            fn eq(&self, other: &Self) -> bool {
                self.dist == other.dist && self.path == other.path
            }
        }
        impl<S: Scalar> Eq for Entry<S> {}
        impl<S: Scalar> Ord for Entry<S> {
            fn cmp(&self, other: &Self) -> Ordering {
                // Reversed: BinaryHeap is a max-heap, we want min-first.
                other
                    .dist
                    .partial_cmp(&self.dist)
                    .expect("finite distance")
                    .then_with(|| other.path.cmp(&self.path))
            }
        }
        impl<S: Scalar> PartialOrd for Entry<S> {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut done = vec![false; self.num_nodes()];
        let mut heap = BinaryHeap::new();
        heap.push(Entry {
            dist: S::zero(),
            path: vec![a],
        });
        while let Some(Entry { dist, path }) = heap.pop() {
            let node = *path.last().expect("nonempty path");
            if done[node as usize] {
                continue;
            }
            done[node as usize] = true;
            if node == b {
                return Ok((path, dist));
            }
            for &(next, len) in &self.adjacency[node as usize] {
                if !done[next as usize] {
                    let mut p = path.clone();
                    p.push(next);
                    heap.push(Entry {
                        dist: dist + len,
                        path: p,
                    });
                }
            }
        }
        // Scenes are connected by construction; reaching here means the
        // invariant was violated upstream.
        Err(Error::Generation(format!(
            "scene {} is not connected ({} unreachable from {})",
            self.scene_id, b, a
        )))
    }

    /// Metric distances from `source` to every node (plain Dijkstra).
    pub fn distances_from(&self, source: u32) -> Result<Vec<S>> {
        self.check_node(source)?;
        let n = self.num_nodes();
        let mut dist = vec![S::infinity(); n];
        let mut done = vec![false; n];
        dist[source as usize] = S::zero();
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for i in 0..n {
                if !done[i] && best.is_none_or(|b| dist[i] < dist[b]) {
                    best = Some(i);
                }
            }
            let Some(u) = best else { break };
            if dist[u].is_infinite() {
                break;
            }
            done[u] = true;
            for &(v, len) in &self.adjacency[u] {
                let cand = dist[u] + len;
                if cand < dist[v as usize] {
                    dist[v as usize] = cand;
                }
            }
        }
        Ok(dist)
    }

    /// Structural invariants: symmetric sorted adjacency, exact edge
    /// lengths, degree bounds, connectivity.
    pub fn validate(&self, max_degree: usize) -> Result<()> {
        let n = self.num_nodes();
        if self.features.len() != n || self.landmarks.len() != n || self.adjacency.len() != n {
            return Err(Error::Generation(format!(
                "scene {}: inconsistent table lengths",
                self.scene_id
            )));
        }
        let tol = S::of(1e-9);
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.is_empty() || nbrs.len() > max_degree {
                return Err(Error::Generation(format!(
                    "scene {}: node {} has degree {}",
                    self.scene_id,
                    u,
                    nbrs.len()
                )));
            }
            for w in nbrs.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(Error::Generation(format!(
                        "scene {}: adjacency of {} not strictly sorted",
                        self.scene_id, u
                    )));
                }
            }
            for &(v, len) in nbrs {
                let expect = euclidean(&self.positions[u], &self.positions[v as usize]);
                if (len - expect).abs() > tol {
                    return Err(Error::Generation(format!(
                        "scene {}: edge {}-{} length mismatch",
                        self.scene_id, u, v
                    )));
                }
                if self.edge_length(v, u as u32) != Some(len) {
                    return Err(Error::Generation(format!(
                        "scene {}: edge {}-{} not symmetric",
                        self.scene_id, u, v
                    )));
                }
            }
        }
        // BFS connectivity.
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        if count != n {
            return Err(Error::Generation(format!(
                "scene {}: graph not connected",
                self.scene_id
            )));
        }
        Ok(())
    }
}

/// Euclidean distance between two positions.
pub fn euclidean<S: Scalar>(a: &[S; 2], b: &[S; 2]) -> S {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}
