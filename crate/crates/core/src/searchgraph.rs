//! Induced graph of an edit matrix and its shortest source-to-sink paths.
//!
//! Vertices are the source, every present matrix cell and the sink. An edge
//! into cell `(i, j)` from `(i-k, j-1)` deletes the `k` bits before `x_{i+j}`
//! and matches `x_{i+j}` with `y_j`; source edges carry the leading deletions
//! and sink edges the trailing ones. Each shortest path decodes to one
//! optimal alignment: a keep-mask over `X` (1 = kept) plus the kept
//! positions where a substitution was needed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corebits::Bits;
use crate::editmatrix::EditMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Source,
    Cell { i: usize, j: usize },
    Sink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cost: u32,
    pub deletions: usize,
    pub substitution: bool,
}

/// One optimal alignment of `Y` inside `X`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AlignmentSolution {
    pub keep_mask: Bits,
    /// 1-based positions in `X` that were kept but differ from `Y`.
    pub noise_positions: Vec<usize>,
    pub cost: u32,
}

impl AlignmentSolution {
    /// Applies the alignment to `x`: keep masked bits, flip noisy ones.
    pub fn reconstruct(&self, x: &Bits) -> Bits {
        x.iter()
            .zip(self.keep_mask.iter())
            .enumerate()
            .filter(|(_, (_, keep))| *keep == 1)
            .map(|(p, (b, _))| if self.noise_positions.contains(&(p + 1)) { b ^ 1 } else { b })
            .collect()
    }
}

/// A source-to-sink path as a list of edge ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path(pub Vec<usize>);

#[derive(Clone, Debug)]
pub struct InducedGraph {
    x: Bits,
    y: Bits,
    kmax: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    from_source: Vec<u32>,
    to_sink: Vec<u32>,
}

const UNREACHED: u32 = u32::MAX;

impl InducedGraph {
    pub fn build(x: &Bits, y: &Bits, kmax: usize) -> Result<Self> {
        // Reuse the matrix validation and reachability rule.
        let shape = EditMatrix::compute(x, y, kmax, None)?;
        let (n, m) = (x.len(), y.len());
        let gap = n - m;

        let mut vertices = vec![Vertex::Source];
        let mut cell_index = vec![vec![usize::MAX; m + 1]; gap + 1];
        for j in 1..=m {
            for i in shape.row_range(j) {
                cell_index[i][j] = vertices.len();
                vertices.push(Vertex::Cell { i, j });
            }
        }
        let sink = vertices.len();
        vertices.push(Vertex::Sink);

        let (xs, ys) = (x.as_slice(), y.as_slice());
        let mut edges = Vec::new();
        for i in shape.row_range(1) {
            let sub = xs[i] != ys[0];
            edges.push(Edge {
                from: 0,
                to: cell_index[i][1],
                cost: i as u32 + sub as u32,
                deletions: i,
                substitution: sub,
            });
        }
        for j in 2..=m {
            for i in shape.row_range(j) {
                let sub = xs[i + j - 1] != ys[j - 1];
                for k in 0..=i.min(kmax) {
                    let from = cell_index[i - k][j - 1];
                    if from != usize::MAX {
                        edges.push(Edge {
                            from,
                            to: cell_index[i][j],
                            cost: k as u32 + sub as u32,
                            deletions: k,
                            substitution: sub,
                        });
                    }
                }
            }
        }
        for i in shape.row_range(m) {
            edges.push(Edge {
                from: cell_index[i][m],
                to: sink,
                cost: (gap - i) as u32,
                deletions: gap - i,
                substitution: false,
            });
        }

        let mut out_edges = vec![Vec::new(); vertices.len()];
        let mut in_edges = vec![Vec::new(); vertices.len()];
        for (id, e) in edges.iter().enumerate() {
            out_edges[e.from].push(id);
            in_edges[e.to].push(id);
        }

        // Vertex order is topological: source, columns left to right, sink.
        let mut from_source = vec![UNREACHED; vertices.len()];
        from_source[0] = 0;
        for v in 1..vertices.len() {
            from_source[v] = in_edges[v]
                .iter()
                .map(|&id| from_source[edges[id].from].saturating_add(edges[id].cost))
                .min()
                .unwrap_or(UNREACHED);
        }
        let mut to_sink = vec![UNREACHED; vertices.len()];
        to_sink[sink] = 0;
        for v in (0..sink).rev() {
            to_sink[v] = out_edges[v]
                .iter()
                .map(|&id| to_sink[edges[id].to].saturating_add(edges[id].cost))
                .min()
                .unwrap_or(UNREACHED);
        }

        Ok(InducedGraph {
            x: x.clone(),
            y: y.clone(),
            kmax,
            vertices,
            edges,
            out_edges,
            in_edges,
            from_source,
            to_sink,
        })
    }

    pub fn x(&self) -> &Bits {
        &self.x
    }

    pub fn y(&self) -> &Bits {
        &self.y
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    /// Cost of the cheapest source-to-sink path.
    pub fn shortest_cost(&self) -> u32 {
        self.to_sink[0]
    }

    /// Whether the edge lies on at least one shortest path.
    pub fn is_tight(&self, id: usize) -> bool {
        let e = &self.edges[id];
        let (a, b) = (self.from_source[e.from], self.to_sink[e.to]);
        a != UNREACHED && b != UNREACHED && a + e.cost + b == self.shortest_cost()
    }

    /// Number of shortest paths, saturating at `u128::MAX`.
    pub fn count_shortest_paths(&self) -> u128 {
        let mut ways = vec![0u128; self.vertices.len()];
        ways[0] = 1;
        for v in 1..self.vertices.len() {
            ways[v] = self.in_edges[v]
                .iter()
                .filter(|&&id| self.is_tight(id))
                .fold(0u128, |acc, &id| acc.saturating_add(ways[self.edges[id].from]));
        }
        ways[self.sink()]
    }

    /// Bit range `x_a..=x_b` (1-based) an edge is associated with; `None` for
    /// a sink edge with no trailing deletions.
    pub fn edge_bits(&self, id: usize) -> Option<(usize, usize)> {
        let e = &self.edges[id];
        match (self.vertices[e.from], self.vertices[e.to]) {
            (Vertex::Source, Vertex::Cell { i, .. }) => Some((1, i + 1)),
            (Vertex::Cell { .. }, Vertex::Cell { i, j }) => Some((i + j - e.deletions, i + j)),
            (Vertex::Cell { i, j }, Vertex::Sink) => {
                (e.deletions > 0).then_some((i + j + 1, i + j + e.deletions))
            }
            _ => unreachable!("edge kinds are fixed by construction"),
        }
    }

    /// Every shortest path, as edge lists, in lexicographic edge order.
    pub fn shortest_paths(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.walk_paths(0, &mut stack, &mut out);
        out
    }

    fn walk_paths(&self, v: usize, stack: &mut Vec<usize>, out: &mut Vec<Path>) {
        if v == self.sink() {
            out.push(Path(stack.clone()));
            return;
        }
        for &id in &self.out_edges[v] {
            if self.is_tight(id) {
                stack.push(id);
                self.walk_paths(self.edges[id].to, stack, out);
                stack.pop();
            }
        }
    }

    /// Decodes a source-to-sink path into its alignment.
    pub fn path_to_alignment(&self, path: &Path) -> Result<AlignmentSolution> {
        let n = self.x.len();
        let ids = &path.0;
        let first = ids.first().ok_or_else(|| Error::MalformedPath("empty path".into()))?;
        if self.edges.get(*first).map(|e| e.from) != Some(0) {
            return Err(Error::MalformedPath("does not start at the source".into()));
        }
        let mut mask = Vec::with_capacity(n);
        let mut noise = Vec::new();
        let mut cost = 0;
        let mut at = 0;
        for &id in ids {
            let e = self
                .edges
                .get(id)
                .ok_or_else(|| Error::MalformedPath(format!("unknown edge {id}")))?;
            if e.from != at {
                return Err(Error::MalformedPath(format!("edge {id} does not continue the path")));
            }
            mask.extend(std::iter::repeat_n(0, e.deletions));
            if let Vertex::Cell { .. } = self.vertices[e.to] {
                mask.push(1);
                if e.substitution {
                    noise.push(mask.len());
                }
            }
            cost += e.cost;
            at = e.to;
        }
        if at != self.sink() {
            return Err(Error::MalformedPath("does not end at the sink".into()));
        }
        debug_assert_eq!(mask.len(), n);
        Ok(AlignmentSolution {
            keep_mask: Bits::from_slice(&mask),
            noise_positions: noise,
            cost,
        })
    }

    /// All optimal alignments, deduplicated and sorted.
    pub fn enumerate_shortest_paths(&self) -> Vec<AlignmentSolution> {
        self.enumerate_filtered(|_| true, false, None).solutions
    }

    /// Depth-first enumeration of optimal alignments over tight edges.
    /// `keep` sees every growing keep-mask prefix (including the final full
    /// mask) and may cut the branch; `noise_free` skips substitution edges;
    /// `limit` caps the number of returned solutions.
    pub fn enumerate_filtered<F>(&self, mut keep: F, noise_free: bool, limit: Option<usize>) -> Enumeration
    where
        F: FnMut(&[u8]) -> bool,
    {
        let mut found = BTreeSet::new();
        let mut mask = Vec::with_capacity(self.x.len());
        let mut noise = Vec::new();
        let mut truncated = false;
        self.dfs(0, &mut mask, &mut noise, &mut keep, noise_free, limit, &mut found, &mut truncated);
        Enumeration {
            solutions: found.into_iter().collect(),
            truncated,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<F: FnMut(&[u8]) -> bool>(
        &self,
        v: usize,
        mask: &mut Vec<u8>,
        noise: &mut Vec<usize>,
        keep: &mut F,
        noise_free: bool,
        limit: Option<usize>,
        found: &mut BTreeSet<AlignmentSolution>,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if v == self.sink() {
            if limit.is_some_and(|l| found.len() >= l) {
                *truncated = true;
                return;
            }
            found.insert(AlignmentSolution {
                keep_mask: Bits::from_slice(mask),
                noise_positions: noise.clone(),
                cost: self.shortest_cost(),
            });
            return;
        }
        for &id in &self.out_edges[v] {
            let e = self.edges[id];
            if !self.is_tight(id) || (noise_free && e.substitution) {
                continue;
            }
            let before = mask.len();
            mask.extend(std::iter::repeat_n(0, e.deletions));
            let is_cell = e.to != self.sink();
            if is_cell {
                mask.push(1);
                if e.substitution {
                    noise.push(mask.len());
                }
            }
            if keep(mask) {
                self.dfs(e.to, mask, noise, keep, noise_free, limit, found, truncated);
            }
            if is_cell && e.substitution {
                noise.pop();
            }
            mask.truncate(before);
        }
    }

    /// Cut set for bit `x_t`: every edge whose bit range contains `t`, plus
    /// edges covering only bits beyond `t` that leave a vertex from which one
    /// of the former edges also leaves.
    pub fn cut_set(&self, t: usize) -> Result<Vec<usize>> {
        let n = self.x.len();
        if n < 3 || t < 2 || t > n - 1 {
            return Err(Error::CutOutOfRange {
                t,
                max: n.saturating_sub(1),
            });
        }
        let covering: Vec<usize> = (0..self.edges.len())
            .filter(|&id| self.edge_bits(id).is_some_and(|(a, b)| a <= t && t <= b))
            .collect();
        let origins: BTreeSet<usize> = covering.iter().map(|&id| self.edges[id].from).collect();
        let mut cut: BTreeSet<usize> = covering.into_iter().collect();
        for id in 0..self.edges.len() {
            if origins.contains(&self.edges[id].from) && self.edge_bits(id).is_some_and(|(a, _)| a > t) {
                cut.insert(id);
            }
        }
        Ok(cut.into_iter().collect())
    }

    /// Cell label `(i+j, j)`, or `source`/`sink`.
    pub fn label(&self, v: usize) -> String {
        match self.vertices[v] {
            Vertex::Source => "source".into(),
            Vertex::Sink => "sink".into(),
            Vertex::Cell { i, j } => format!("({},{})", i + j, j),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub solutions: Vec<AlignmentSolution>,
    pub truncated: bool,
}

pub fn build_induced_graph(x: &Bits, y: &Bits, kmax: usize) -> Result<InducedGraph> {
    InducedGraph::build(x, y, kmax)
}

pub fn enumerate_shortest_paths(graph: &InducedGraph) -> Vec<AlignmentSolution> {
    graph.enumerate_shortest_paths()
}

pub fn path_to_alignment(graph: &InducedGraph, path: &Path) -> Result<AlignmentSolution> {
    graph.path_to_alignment(path)
}

pub fn cut_set(graph: &InducedGraph, t: usize) -> Result<Vec<usize>> {
    graph.cut_set(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corebits::bits;
    use crate::editmatrix::EditMatrix;

    fn b(s: &str) -> Bits {
        bits(s).unwrap()
    }

    /// Reachability after removing `removed` edges.
    fn connected_without(g: &InducedGraph, removed: &[usize]) -> bool {
        let mut seen = vec![false; g.vertices().len()];
        let mut stack = vec![g.source()];
        seen[g.source()] = true;
        while let Some(v) = stack.pop() {
            for &id in g.out_edges(v) {
                let to = g.edges()[id].to;
                if !removed.contains(&id) && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen[g.sink()]
    }

    const LISTED: [&str; 18] = [
        "0111011011", "0111011101", "0111011110", "0111101011", "0111101101", "0111101110",
        "1011011011", "1011011101", "1011011110", "1011101011", "1011101101", "1011101110",
        "1101011011", "1101011101", "1101011110", "1101101011", "1101101101", "1101101110",
    ];

    #[test]
    fn small_example_graph() {
        let g = InducedGraph::build(&b("1110110111"), &b("1101011"), 1).unwrap();
        assert_eq!(g.vertices().len(), 24);
        assert_eq!(g.edges().len(), 38);
        // (N-M+1)(2M-N+2) and 2(N-M+1)(2M-N+2) - M - 3
        assert_eq!(4 * 6, 24);
        assert_eq!(2 * 24 - 7 - 3, 38);
        assert_eq!(g.shortest_cost(), 3);
        assert_eq!(g.count_shortest_paths(), 18);

        let sols = g.enumerate_shortest_paths();
        let masks: Vec<String> = sols.iter().map(|s| s.keep_mask.to_string()).collect();
        assert_eq!(masks, LISTED);
        for s in &sols {
            assert_eq!(s.reconstruct(g.x()), *g.y());
        }
    }

    #[test]
    fn decodes_paths() {
        let g = InducedGraph::build(&b("1110110111"), &b("1101011"), 1).unwrap();
        let paths = g.shortest_paths();
        assert_eq!(paths.len(), 18);
        let decoded: BTreeSet<String> = paths
            .iter()
            .map(|p| g.path_to_alignment(p).unwrap().keep_mask.to_string())
            .collect();
        assert!(decoded.contains("1101101110"));
        assert!(decoded.contains("0111011011"));

        let last = paths
            .iter()
            .map(|p| g.path_to_alignment(p).unwrap())
            .find(|a| a.keep_mask.to_string() == "1101101110")
            .unwrap();
        let deleted: Vec<usize> = last.keep_mask.iter().enumerate().filter(|(_, k)| *k == 0).map(|(p, _)| p + 1).collect();
        assert_eq!(deleted, [3, 6, 10]);
        assert_eq!(last.reconstruct(g.x()).to_string(), "1101011");

        assert!(g.path_to_alignment(&Path(vec![])).is_err());
        assert!(g.path_to_alignment(&Path(vec![paths[0].0[1]])).is_err());
        let mut truncated = paths[0].clone();
        truncated.0.pop();
        assert!(g.path_to_alignment(&truncated).is_err());
    }

    #[test]
    fn identity_chain() {
        let x = b("10110");
        let g = InducedGraph::build(&x, &x, 2).unwrap();
        assert_eq!(g.vertices().len(), 7);
        assert_eq!(g.edges().len(), 6);
        let sols = g.enumerate_shortest_paths();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].keep_mask, Bits::ones(5));
        assert!(sols[0].noise_positions.is_empty());
        for t in 2..=4 {
            let cut = g.cut_set(t).unwrap();
            assert_eq!(cut.len(), 1);
            assert!(!connected_without(&g, &cut));
        }
    }

    #[test]
    fn shrinking_candidate_path_count() {
        // exhaustive mask enumeration gives 59 optimal alignments here
        let g = InducedGraph::build(&b("1111111010"), &b("11110"), 2).unwrap();
        assert_eq!(g.shortest_cost(), 5);
        assert_eq!(g.count_shortest_paths(), 59);
        assert_eq!(g.enumerate_shortest_paths().len(), 59);
    }

    #[test]
    fn filtered_enumeration_prunes() {
        let g = InducedGraph::build(&b("1111111010"), &b("11110"), 2).unwrap();
        let ps: crate::corebits::FeedbackPolynomial = "1+x+x^3".parse().unwrap();
        let e = g.enumerate_filtered(|mask| ps.is_consistent(&Bits::from_slice(mask)), true, None);
        let masks: Vec<String> = e.solutions.iter().map(|s| s.keep_mask.to_string()).collect();
        assert_eq!(masks, ["0011101001", "1001110100"]);
        let capped = g.enumerate_filtered(|_| true, false, Some(3));
        assert!(capped.truncated);
        assert_eq!(capped.solutions.len(), 3);
    }

    #[test]
    fn cut_sets_disconnect() {
        for (x, y, k) in [("10110", "101", 1), ("1111110101", "11110", 2), ("1110110111", "1101011", 1)] {
            let g = InducedGraph::build(&b(x), &b(y), k).unwrap();
            assert!(connected_without(&g, &[]));
            for t in 2..x.len() {
                let cut = g.cut_set(t).unwrap();
                assert!(!connected_without(&g, &cut), "{x} {y} t={t}");
            }
            assert!(g.cut_set(1).is_err());
            assert!(g.cut_set(x.len()).is_err());
        }
    }

    #[test]
    fn shortest_cost_matches_matrix() {
        let x = b("0110100110111");
        let y = b("01101011");
        for k in 1..=3 {
            if let Ok(g) = InducedGraph::build(&x, &y, k) {
                let d = EditMatrix::compute(&x, &y, k, None).unwrap().edit_distance().unwrap();
                assert_eq!(g.shortest_cost(), d);
            }
        }
    }
}
