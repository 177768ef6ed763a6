//! Undirected, connected network topologies.
//!
//! Nodes are dense indices `0..n`. Generators use a canonical ordering:
//! row-major for grids and tori, binary labels for hypercubes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default node cap for the brute-force isoperimetric number.
pub const ISOPERIMETRIC_CAP: usize = 14;

/// Graph families with their size parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Complete { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    /// Wrap-around grid.
    Torus2d { rows: usize, cols: usize },
    /// Grid without wrap-around ("mesh").
    Grid2d { rows: usize, cols: usize },
    Hypercube { dim: u32 },
}

impl Family {
    pub fn node_count(&self) -> usize {
        match *self {
            Family::Complete { n } | Family::Cycle { n } | Family::Path { n } => n,
            Family::Torus2d { rows, cols } | Family::Grid2d { rows, cols } => rows * cols,
            Family::Hypercube { dim } => 1usize << dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Complete { .. } => "complete",
            Family::Cycle { .. } => "cycle",
            Family::Path { .. } => "path",
            Family::Torus2d { .. } => "torus2d",
            Family::Grid2d { .. } => "grid2d",
            Family::Hypercube { .. } => "hypercube",
        }
    }

    /// Builds the family member with (approximately) `n` nodes. Tori and grids
    /// use the most square factorization of `n`; hypercubes need a power of two.
    pub fn with_size(name: &str, n: usize) -> Result<Family> {
        let family = match name {
            "complete" => Family::Complete { n },
            "cycle" | "ring" => Family::Cycle { n },
            "path" => Family::Path { n },
            "torus2d" | "torus" | "grid2d" | "mesh" => {
                let mut rows = (n as f64).sqrt() as usize;
                while rows > 1 && !n.is_multiple_of(rows) {
                    rows -= 1;
                }
                let cols = n.checked_div(rows).unwrap_or(0);
                if name == "torus2d" || name == "torus" {
                    Family::Torus2d { rows, cols }
                } else {
                    Family::Grid2d { rows, cols }
                }
            }
            "hypercube" => {
                if !n.is_power_of_two() {
                    return Err(Error::InvalidGraph(format!(
                        "hypercube needs a power-of-two node count, got {n}"
                    )));
                }
                Family::Hypercube {
                    dim: n.trailing_zeros(),
                }
            }
            other => return Err(Error::InvalidGraph(format!("unknown family '{other}'"))),
        };
        Ok(family)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Complete { n } => write!(f, "K{n}"),
            Family::Cycle { n } => write!(f, "C{n}"),
            Family::Path { n } => write!(f, "P{n}"),
            Family::Torus2d { rows, cols } => write!(f, "T{rows}x{cols}"),
            Family::Grid2d { rows, cols } => write!(f, "G{rows}x{cols}"),
            Family::Hypercube { dim } => write!(f, "Q{dim}"),
        }
    }
}

/// An immutable, connected, simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    /// Each edge stored once as `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    max_degree: usize,
    diameter: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges are merged; self-loops
    /// and out-of-range endpoints are rejected, as is a disconnected result.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if node_count < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 nodes, got {node_count}"
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        normalized.dedup();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut graph = Graph {
            node_count,
            edges: normalized,
            max_degree: adjacency.iter().map(Vec::len).max().unwrap_or(0),
            adjacency,
            diameter: 0,
        };
        let mut diameter = 0;
        for source in 0..node_count {
            let dist = graph.bfs(source);
            if let Some(unreachable) = dist.iter().position(Option::is_none) {
                return Err(Error::Disconnected { unreachable });
            }
            diameter = diameter.max(dist.iter().flatten().copied().max().unwrap_or(0));
        }
        graph.diameter = diameter;
        Ok(graph)
    }

    /// Builds the canonical member of a graph family.
    pub fn build(family: Family) -> Result<Graph> {
        let too_small = |what: &str| Err(Error::InvalidGraph(format!("{family}: {what}")));
        let mut edges = Vec::new();
        match family {
            Family::Complete { n } => {
                if n < 2 {
                    return too_small("complete graph needs n >= 2");
                }
                for u in 0..n {
                    for v in u + 1..n {
                        edges.push((u, v));
                    }
                }
            }
            Family::Cycle { n } => {
                if n < 3 {
                    return too_small("cycle needs n >= 3");
                }
                edges.extend((0..n).map(|u| (u, (u + 1) % n)));
            }
            Family::Path { n } => {
                if n < 2 {
                    return too_small("path needs n >= 2");
                }
                edges.extend((0..n - 1).map(|u| (u, u + 1)));
            }
            Family::Torus2d { rows, cols } | Family::Grid2d { rows, cols } => {
                if rows < 2 || cols < 2 {
                    return too_small("grid dimensions must be >= 2");
                }
                let wrap = matches!(family, Family::Torus2d { .. });
                let id = |r: usize, c: usize| r * cols + c;
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            edges.push((id(r, c), id(r, c + 1)));
                        } else if wrap {
                            edges.push((id(r, c), id(r, 0)));
                        }
                        if r + 1 < rows {
                            edges.push((id(r, c), id(r + 1, c)));
                        } else if wrap {
                            edges.push((id(r, c), id(0, c)));
                        }
                    }
                }
            }
            Family::Hypercube { dim } => {
                if !(1..=20).contains(&dim) {
                    return too_small("hypercube dimension must be in 1..=20");
                }
                let n = 1usize << dim;
                for u in 0..n {
                    for bit in 0..dim {
                        let v = u ^ (1 << bit);
                        if u < v {
                            edges.push((u, v));
                        }
                    }
                }
            }
        }
        Graph::from_edges(family.node_count(), &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges, each once with the smaller endpoint first.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Both orientations of every edge.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .flat_map(|&(u, v)| [(u, v), (v, u)].into_iter())
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Maximum degree Δ.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// `max(deg(i), deg(j))` for an edge `(i, j)`.
    pub fn pair_degree(&self, i: usize, j: usize) -> Result<usize> {
        if !self.has_edge(i, j) {
            return Err(Error::NotAnEdge(i, j));
        }
        Ok(self.degree(i).max(self.degree(j)))
    }

    /// Breadth-first hop distances from `source`; `None` marks unreachable nodes.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Isoperimetric number with the default node cap.
    pub fn isoperimetric_number(&self) -> Result<Ratio<u64>> {
        self.isoperimetric_number_with_cap(ISOPERIMETRIC_CAP)
    }

    /// `min |δS| / |S|` over nonempty `S` with `|S| <= n/2`, by enumerating
    /// every subset.
    pub fn isoperimetric_number_with_cap(&self, cap: usize) -> Result<Ratio<u64>> {
        let n = self.node_count;
        if n > cap || n > 30 {
            return Err(Error::TooLargeForBruteForce { n, cap });
        }
        let edge_masks: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&(u, v)| (1u32 << u, 1u32 << v))
            .collect();
        let mut best: Option<(u64, u64)> = None;
        for subset in 1u32..(1u32 << n) {
            let size = u64::from(subset.count_ones());
            if 2 * size > n as u64 {
                continue;
            }
            let boundary = edge_masks
                .iter()
                .filter(|&&(a, b)| (subset & a != 0) != (subset & b != 0))
                .count() as u64;
            // boundary/size < best_b/best_s
            if best.is_none_or(|(bb, bs)| boundary * bs < bb * size) {
                best = Some((boundary, size));
            }
        }
        let (boundary, size) = best.expect("n >= 2 gives at least one subset");
        Ok(Ratio::new(boundary, size))
    }

    /// Writes the plain-text edge-list format: `n` on the first line, then
    /// one `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

impl FromStr for Graph {
    type Err = Error;

    /// Parses the edge-list format. Blank lines and `#` comments are ignored.
    fn from_str(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidGraph("empty edge list".into()))?;
        let node_count: usize = header
            .parse()
            .map_err(|_| Error::InvalidGraph(format!("bad node count '{header}'")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidGraph(format!("line {}: bad node id '{s}'", lineno + 1))
                })
            };
            match parts.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "line {}: expected 'u v', got '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Graph::from_edges(node_count, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(f: Family) -> Graph {
        Graph::build(f).unwrap()
    }

    #[test]
    fn complete_four() {
        let g = family(Family::Complete { n: 4 });
        assert_eq!(g.edge_count(), 6);
        assert!((0..4).all(|v| g.degree(v) == 3));
        assert_eq!(g.diameter(), 1);
    }

    #[test]
    fn hypercube_three() {
        let g = family(Family::Hypercube { dim: 3 });
        assert_eq!(g.node_count(), 8);
        assert_eq!(g.edge_count(), 12);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert_eq!(g.diameter(), 3);
    }

    #[test]
    fn torus_three_by_three() {
        let g = family(Family::Torus2d { rows: 3, cols: 3 });
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edge_count(), 18);
        assert!((0..9).all(|v| g.degree(v) == 4));
        assert_eq!(g.diameter(), 2);
    }

    #[test]
    fn torus_with_side_two_merges_wrap_edges() {
        let g = family(Family::Torus2d { rows: 2, cols: 2 });
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g, family(Family::Cycle { n: 4 }).relabel(&[0, 1, 3, 2]));
    }

    #[test]
    fn cycle_five() {
        let g = family(Family::Cycle { n: 5 });
        assert_eq!(g.edge_count(), 5);
        assert!((0..5).all(|v| g.degree(v) == 2));
        assert_eq!(g.diameter(), 2);
    }

    #[test]
    fn grid_has_boundary_degrees() {
        let g = family(Family::Grid2d { rows: 3, cols: 4 });
        assert_eq!(g.edge_count(), 3 * 3 + 2 * 4);
        assert_eq!(g.min_degree(), 2);
        assert_eq!(g.max_degree(), 4);
        assert_eq!(g.diameter(), 5);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(Graph::build(Family::Cycle { n: 2 }).is_err());
        assert!(Graph::build(Family::Torus2d { rows: 1, cols: 5 }).is_err());
        assert!(Graph::build(Family::Hypercube { dim: 0 }).is_err());
        assert!(Graph::build(Family::Complete { n: 1 }).is_err());
    }

    #[test]
    fn disconnected_edge_list_is_rejected() {
        let err = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap_err();
        assert_eq!(err, Error::Disconnected { unreachable: 2 });
        assert!(Graph::from_edges(3, &[(0, 0), (0, 1), (1, 2)]).is_err());
    }

    #[test]
    fn pair_degree_examples() {
        let k4 = family(Family::Complete { n: 4 });
        assert_eq!(k4.pair_degree(0, 3).unwrap(), 3);
        let p3 = family(Family::Path { n: 3 });
        assert_eq!(p3.pair_degree(0, 1).unwrap(), 2);
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.pair_degree(0, 2).unwrap(), 3);
        assert_eq!(star.pair_degree(2, 0).unwrap(), 3);
        assert_eq!(star.pair_degree(1, 2), Err(Error::NotAnEdge(1, 2)));
    }

    #[test]
    fn isoperimetric_examples() {
        let k2 = family(Family::Complete { n: 2 });
        assert_eq!(k2.isoperimetric_number().unwrap(), Ratio::from_integer(1));
        let k4 = family(Family::Complete { n: 4 });
        assert_eq!(k4.isoperimetric_number().unwrap(), Ratio::from_integer(2));
        let c4 = family(Family::Cycle { n: 4 });
        assert_eq!(c4.isoperimetric_number().unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn isoperimetric_respects_cap() {
        let g = family(Family::Cycle { n: 16 });
        assert_eq!(
            g.isoperimetric_number(),
            Err(Error::TooLargeForBruteForce { n: 16, cap: 14 })
        );
        assert!(g.isoperimetric_number_with_cap(16).is_ok());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = family(Family::Hypercube { dim: 3 });
        let parsed: Graph = g.to_edge_list().parse().unwrap();
        assert_eq!(parsed, g);
        let text = "# star\n4\n0 1\n0 2\n\n0 3\n";
        let star: Graph = text.parse().unwrap();
        assert_eq!(star.max_degree(), 3);
        assert!("3\n0 1\n1 x\n".parse::<Graph>().is_err());
        assert!("".parse::<Graph>().is_err());
    }

    impl Graph {
        fn relabel(&self, perm: &[usize]) -> Graph {
            let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            Graph::from_edges(self.node_count, &edges).unwrap()
        }
    }
}
