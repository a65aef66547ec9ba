//! Undirected friendship graph in compressed neighbor-list (CSR) form.

use std::collections::VecDeque;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Simple undirected graph over dense agent ids `0..n`.
///
/// Neighbor lists are sorted and duplicate-free, the adjacency is
/// symmetric and there are no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// What [`SocialGraph::build`] discarded from its input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeStats {
    pub input_edges: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

impl SocialGraph {
    /// Builds a graph from an undirected edge list. Either orientation is
    /// accepted; repeated edges and self-loops are dropped.
    pub fn build<I>(n: usize, edges: I) -> Result<(Self, EdgeStats)>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} agents exceeds u32 ids")));
        }
        let mut stats = EdgeStats::default();
        let mut arcs: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            stats.input_edges += 1;
            for v in [a, b] {
                if v as usize >= n {
                    return Err(Error::AgentOutOfRange { agent: v as u64, n });
                }
            }
            if a == b {
                stats.self_loops += 1;
                continue;
            }
            arcs.push((a, b));
            arcs.push((b, a));
        }
        arcs.sort_unstable();
        let before = arcs.len();
        arcs.dedup();
        stats.duplicates = (before - arcs.len()) / 2;

        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &arcs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = arcs.into_iter().map(|(_, b)| b).collect();
        Ok((SocialGraph { offsets, targets }, stats))
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        Self::build(n, edges).map(|(g, _)| g)
    }

    /// Wraps explicit neighbor lists, checking every structural invariant.
    pub fn from_neighbor_lists(lists: Vec<Vec<u32>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for list in lists {
            targets.extend(list);
            offsets.push(targets.len());
        }
        let graph = SocialGraph { offsets, targets };
        graph.validate()?;
        Ok(graph)
    }

    /// Complete graph on `n` agents, used for well-mixed pairwise models.
    pub fn complete(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(n * n.saturating_sub(1));
        offsets.push(0);
        for i in 0..n as u32 {
            targets.extend((0..n as u32).filter(|&j| j != i));
            offsets.push(targets.len());
        }
        SocialGraph { offsets, targets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn neighbors(&self, agent: u32) -> &[u32] {
        let a = agent as usize;
        &self.targets[self.offsets[a]..self.offsets[a + 1]]
    }

    #[inline]
    pub fn degree(&self, agent: u32) -> usize {
        let a = agent as usize;
        self.offsets[a + 1] - self.offsets[a]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn min_degree(&self) -> usize {
        (0..self.len() as u32).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.len() as u32).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .copied()
                .filter(move |&b| a < b)
                .map(move |b| (a, b))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n as u32 {
            let nbrs = self.neighbors(a);
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidGraph(format!(
                        "neighbor list of {a} is not sorted and distinct"
                    )));
                }
            }
            for &b in nbrs {
                if b as usize >= n {
                    return Err(Error::AgentOutOfRange { agent: b as u64, n });
                }
                if b == a {
                    return Err(Error::InvalidGraph(format!("self-loop at {a}")));
                }
                if !self.has_edge(b, a) {
                    return Err(Error::InvalidGraph(format!("edge {a}-{b} is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Connected-component label per agent; labels are assigned in order of
    /// each component's smallest agent id.
    pub fn component_labels(&self) -> Vec<u32> {
        let n = self.len();
        let mut label = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        let mut next = 0u32;
        for start in 0..n {
            if label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start as u32);
            while let Some(a) = queue.pop_front() {
                for &b in self.neighbors(a) {
                    if label[b as usize] == u32::MAX {
                        label[b as usize] = next;
                        queue.push_back(b);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Membership mask of the largest connected component. Ties go to the
    /// component containing the smallest agent id.
    pub fn largest_component(&self) -> Vec<bool> {
        let labels = self.component_labels();
        let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        let best = sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i as u32);
        labels.iter().map(|&l| Some(l) == best).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.component_labels().iter().all(|&l| l == 0)
    }

    /// Subgraph induced by the agents with `keep[i] == true`, relabelled
    /// densely in increasing id order. Returns the graph and the original
    /// id of every retained agent.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (SocialGraph, Vec<u32>) {
        assert_eq!(keep.len(), self.len(), "mask length must match agent count");
        let mut new_id = vec![u32::MAX; self.len()];
        let mut old_ids = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_id[i] = old_ids.len() as u32;
                old_ids.push(i as u32);
            }
        }
        let mut offsets = Vec::with_capacity(old_ids.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for &old in &old_ids {
            // relabelling is monotone, so lists stay sorted
            targets.extend(
                self.neighbors(old)
                    .iter()
                    .filter(|&&b| keep[b as usize])
                    .map(|&b| new_id[b as usize]),
            );
            offsets.push(targets.len());
        }
        (SocialGraph { offsets, targets }, old_ids)
    }

    /// SHA-256 over the CSR arrays, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        for &o in &self.offsets {
            hasher.update((o as u64).to_le_bytes());
        }
        for &t in &self.targets {
            hasher.update(t.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
