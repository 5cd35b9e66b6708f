use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Undirected, connected communication graph on agents `0..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<bool>>,
}

impl Graph {
    /// Builds a graph from an edge list. Each pair is taken in both
    /// directions; duplicates are harmless. Self-loops, out-of-range
    /// endpoints and disconnected results are rejected.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Graph("graph needs at least one agent".into()));
        }
        let mut adjacency = vec![vec![false; m]; m];
        for &(i, j) in edges {
            if i >= m || j >= m {
                return Err(Error::Graph(format!(
                    "edge ({i}, {j}) out of range for m = {m}"
                )));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop at {i}")));
            }
            adjacency[i][j] = true;
            adjacency[j][i] = true;
        }
        let g = Graph { adjacency };
        if !g.is_connected() {
            return Err(Error::Graph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn complete(m: usize) -> Result<Self> {
        let edges: Vec<_> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        Graph::from_edges(m, &edges)
    }

    pub fn path(m: usize) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Graph::from_edges(m, &edges)
    }

    pub fn cycle(m: usize) -> Result<Self> {
        if m < 3 {
            return Graph::path(m);
        }
        let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        Graph::from_edges(m, &edges)
    }

    pub fn star(m: usize) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|i| (0, i)).collect();
        Graph::from_edges(m, &edges)
    }

    /// Random spanning tree (each new node attaches to a uniformly chosen
    /// earlier node of a random ordering) plus every remaining pair with
    /// probability `extra_edge_prob`.
    pub fn random_connected<R: Rng + ?Sized>(
        m: usize,
        extra_edge_prob: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(Error::Graph(format!(
                "edge probability must lie in [0, 1], got {extra_edge_prob}"
            )));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let mut edges = Vec::new();
        for k in 1..m {
            let parent = order[rng.random_range(0..k)];
            edges.push((parent, order[k]));
        }
        for i in 0..m {
            for j in i + 1..m {
                if rng.random::<f64>() < extra_edge_prob {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(m, &edges)
    }

    /// Parses the edge-list format: a header `m <count>`, then one `i j`
    /// pair per line (0-indexed). Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Graph("missing `m <count>` header".into()))?;
        let mut parts = header.split_whitespace();
        let m = match (parts.next(), parts.next(), parts.next()) {
            (Some("m"), Some(n), None) => n
                .parse::<usize>()
                .map_err(|_| Error::Graph(format!("bad agent count `{n}`")))?,
            _ => {
                return Err(Error::Graph(format!(
                    "bad header `{header}`, expected `m <count>`"
                )))
            }
        };
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Graph(format!("line {}: bad vertex `{s}`", lineno + 1)))
            };
            match nums.as_slice() {
                [a, b] => edges.push((parse(a)?, parse(b)?)),
                _ => {
                    return Err(Error::Graph(format!(
                        "line {}: expected `i j`, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Graph::from_edges(m, &edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::parse_edge_list(&text)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("m {}\n", self.m());
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    pub fn m(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.m();
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[i][j])
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&a| a).count()
    }

    /// Inclusive neighbourhood of `i`, in increasing order.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        (0..self.m())
            .filter(|&j| j == i || self.adjacency[i][j])
            .collect()
    }

    pub fn is_regular(&self) -> bool {
        let d0 = self.degree(0);
        (1..self.m()).all(|i| self.degree(i) == d0)
    }

    /// Hop distances from `source` (BFS).
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let m = self.m();
        let mut dist = vec![None; m];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for v in 0..m {
                if self.adjacency[u][v] && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn diameter(&self) -> usize {
        (0..self.m())
            .flat_map(|s| self.distances_from(s))
            .map(|d| d.expect("graph is connected"))
            .max()
            .unwrap_or(0)
    }

    fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
    }
}
