//! Directed graphs, the coarse strong component decomposition and transitive
//! closures.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

/// A simple digraph on vertices `0..num_vertices`: no self-loops, no
/// duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    num_vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new(num_vertices: usize) -> Self {
        Digraph {
            num_vertices,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a graph from 0-based edges. Duplicates are merged.
    pub fn from_edges<I>(num_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Digraph::new(num_vertices);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j || i >= self.num_vertices || j >= self.num_vertices {
            return Err(Error::InvalidIndices {
                i,
                j,
                size: self.num_vertices,
            });
        }
        Ok(self.edges.insert((i, j)))
    }

    pub fn complete(num_vertices: usize) -> Self {
        let edges = (0..num_vertices)
            .flat_map(|i| {
                (0..num_vertices)
                    .filter(move |&j| j != i)
                    .map(move |j| (i, j))
            })
            .collect();
        Digraph {
            num_vertices,
            edges,
        }
    }

    /// Directed cycle `0 → 1 → … → N−1 → 0`. For `N = 2` this is the 2-cycle.
    pub fn cycle(num_vertices: usize) -> Self {
        let mut g = Digraph::new(num_vertices);
        if num_vertices >= 2 {
            for i in 0..num_vertices {
                g.edges.insert((i, (i + 1) % num_vertices));
            }
        }
        g
    }

    /// Directed path `0 → 1 → … → N−1`.
    pub fn path(num_vertices: usize) -> Self {
        let mut g = Digraph::new(num_vertices);
        for i in 1..num_vertices {
            g.edges.insert((i - 1, i));
        }
        g
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j)
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &(i, j) in &self.edges {
            adj[i].push(j);
        }
        adj
    }

    /// Subgraph induced by `vertices`, relabeled to `0..vertices.len()` in the
    /// given order.
    pub fn induced(&self, vertices: &[usize]) -> Digraph {
        let mut pos = vec![usize::MAX; self.num_vertices];
        for (k, &v) in vertices.iter().enumerate() {
            pos[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(i, j)| pos[i] != usize::MAX && pos[j] != usize::MAX)
            .map(|&(i, j)| (pos[i], pos[j]))
            .collect();
        Digraph {
            num_vertices: vertices.len(),
            edges,
        }
    }

    /// Applies the vertex relabeling `v ↦ perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Digraph {
        assert_eq!(perm.len(), self.num_vertices);
        Digraph {
            num_vertices: self.num_vertices,
            edges: self
                .edges
                .iter()
                .map(|&(i, j)| (perm[i], perm[j]))
                .collect(),
        }
    }

    /// Connectivity of the undirected shadow. Graphs with at most one vertex
    /// are connected.
    pub fn is_weakly_connected(&self) -> bool {
        if self.num_vertices <= 1 {
            return true;
        }
        let mut undirected = vec![Vec::new(); self.num_vertices];
        for &(i, j) in &self.edges {
            undirected[i].push(j);
            undirected[j].push(i);
        }
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &undirected[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.num_vertices
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.num_vertices <= 1 || strong_components(self).len() == 1
    }

    /// Coarse strong component decomposition together with its skeleton and
    /// maximal set.
    pub fn coarse_scd(&self) -> Result<ScdReport> {
        if !self.is_weakly_connected() {
            return Err(Error::NotWeaklyConnected);
        }
        Ok(ScdReport::from_components(self, strong_components(self)))
    }

    /// Edge `i → j` for every `i ≠ j` such that `j` is reachable from `i`.
    ///
    /// Computed on the condensation: reachability sets are propagated over the
    /// skeleton in reverse topological order, then expanded to vertices.
    pub fn transitive_closure(&self) -> Digraph {
        let comps = strong_components(self);
        let q = comps.len();
        let mut comp_of = vec![0; self.num_vertices];
        for (c, members) in comps.iter().enumerate() {
            for &v in members {
                comp_of[v] = c;
            }
        }
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); q];
        for &(i, j) in &self.edges {
            if comp_of[i] != comp_of[j] {
                succ[comp_of[i]].insert(comp_of[j]);
            }
        }
        // reach[c] holds components reachable from c by at least one skeleton edge.
        let order = topological_order(q, &succ).expect("condensation is acyclic");
        let mut reach: Vec<Vec<bool>> = vec![vec![false; q]; q];
        for &c in order.iter().rev() {
            let mut row = vec![false; q];
            for &d in &succ[c] {
                row[d] = true;
                for (e, &r) in reach[d].iter().enumerate() {
                    if r {
                        row[e] = true;
                    }
                }
            }
            reach[c] = row;
        }
        let mut closure = Digraph::new(self.num_vertices);
        for i in 0..self.num_vertices {
            let ci = comp_of[i];
            for j in 0..self.num_vertices {
                if i == j {
                    continue;
                }
                let cj = comp_of[j];
                if (ci == cj && comps[ci].len() > 1) || reach[ci][cj] {
                    closure.edges.insert((i, j));
                }
            }
        }
        closure
    }

    /// Checks that closure and decomposition commute: the closure has the same
    /// vertex partition, each closed component is complete, and the skeleton of
    /// the closure is the closure of the skeleton.
    pub fn verify_scd_closure_commutation(&self) -> Result<bool> {
        let scd = self.coarse_scd()?;
        let closure = self.transitive_closure();
        let closed_scd = closure.coarse_scd()?;
        if closed_scd.components != scd.components {
            return Ok(false);
        }
        for comp in &closed_scd.components {
            let sub = closure.induced(comp);
            if sub.num_edges() != comp.len() * (comp.len() - 1) {
                return Ok(false);
            }
        }
        Ok(closed_scd.skeleton == scd.skeleton.transitive_closure())
    }

    /// Structural controllability verdict for agents in `ℝⁿ`.
    pub fn structural_verdict(&self, dim: usize) -> Result<StructuralVerdict> {
        Ok(self.coarse_scd()?.verdict(dim))
    }

    /// Random weakly connected digraph: a random spanning tree with random
    /// orientations, plus each remaining ordered pair with probability
    /// `density`.
    pub fn random_weakly_connected<R: Rng + ?Sized>(
        num_vertices: usize,
        density: f64,
        rng: &mut R,
    ) -> Digraph {
        let mut g = Digraph::new(num_vertices);
        for v in 1..num_vertices {
            let u = rng.random_range(0..v);
            if rng.random_bool(0.5) {
                g.edges.insert((u, v));
            } else {
                g.edges.insert((v, u));
            }
        }
        for i in 0..num_vertices {
            for j in 0..num_vertices {
                if i != j && rng.random_bool(density) {
                    g.edges.insert((i, j));
                }
            }
        }
        g
    }

    /// Parses the line-based text format: `N <count>` followed by one
    /// 1-based `i j` pair per line. Lines starting with `#` are comments and
    /// `;` acts as a line break, so inline lists like `N 3; 1 2; 2 3` work.
    pub fn parse_text(text: &str) -> Result<Digraph> {
        let mut graph: Option<Digraph> = None;
        for (lineno, raw) in text.split(['\n', ';']).enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match (&mut graph, fields.as_slice()) {
                (None, ["N", count]) => {
                    let n: usize = count
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad vertex count {count:?}")))?;
                    if n == 0 {
                        return Err(Error::Parse("graph needs at least one vertex".into()));
                    }
                    graph = Some(Digraph::new(n));
                }
                (None, _) => {
                    return Err(Error::Parse(format!(
                        "expected `N <count>` header, found {line:?}"
                    )))
                }
                (Some(g), [a, b]) => {
                    let parse = |s: &str| {
                        s.parse::<usize>().map_err(|_| {
                            Error::Parse(format!("line {}: bad vertex {s:?}", lineno + 1))
                        })
                    };
                    let (i, j) = (parse(a)?, parse(b)?);
                    if i == 0 || j == 0 || i > g.num_vertices || j > g.num_vertices {
                        return Err(Error::Parse(format!(
                            "line {}: vertex out of range 1..={}",
                            lineno + 1,
                            g.num_vertices
                        )));
                    }
                    if i == j {
                        return Err(Error::Parse(format!(
                            "line {}: self-loop {i} {j}",
                            lineno + 1
                        )));
                    }
                    g.edges.insert((i - 1, j - 1));
                }
                (Some(_), _) => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `i j`, found {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        graph.ok_or_else(|| Error::Parse("missing `N <count>` header".into()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("N {}\n", self.num_vertices);
        for &(i, j) in &self.edges {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }
}

impl FromStr for Digraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Digraph::parse_text(s)
    }
}

impl fmt::Display for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Strongly connected components (Tarjan, iterative), each sorted ascending,
/// listed by smallest member vertex.
pub(crate) fn strong_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.num_vertices;
    let adj = g.adjacency();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut comps = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // (vertex, next neighbor position)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Kahn's algorithm with a min-heap for a deterministic order. `None` if the
/// graph has a cycle.
fn topological_order(n: usize, succ: &[BTreeSet<usize>]) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut indeg = vec![0usize; n];
    for s in succ {
        for &d in s {
            indeg[d] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &d in &succ[v] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                heap.push(Reverse(d));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Topological order of an arbitrary digraph, if it is acyclic.
pub fn topological_sort(g: &Digraph) -> Option<Vec<usize>> {
    let mut succ = vec![BTreeSet::new(); g.num_vertices()];
    for (i, j) in g.edges() {
        succ[i].insert(j);
    }
    topological_order(g.num_vertices(), &succ)
}

/// The coarse strong component decomposition of a weakly connected digraph.
///
/// Components are indexed by their smallest member vertex; `skeleton` is the
/// acyclic digraph on component indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScdReport {
    pub components: Vec<Vec<usize>>,
    #[serde(skip)]
    pub skeleton: Digraph,
    pub maximal_set: Vec<usize>,
    pub component_sizes: Vec<usize>,
    #[serde(skip)]
    component_of: Vec<usize>,
}

impl ScdReport {
    fn from_components(g: &Digraph, components: Vec<Vec<usize>>) -> Self {
        let q = components.len();
        let mut component_of = vec![0; g.num_vertices()];
        for (c, members) in components.iter().enumerate() {
            for &v in members {
                component_of[v] = c;
            }
        }
        let mut skeleton = Digraph::new(q);
        for (i, j) in g.edges() {
            let (ci, cj) = (component_of[i], component_of[j]);
            if ci != cj {
                skeleton.edges.insert((ci, cj));
            }
        }
        let maximal_set = (0..q)
            .filter(|&c| skeleton.out_neighbors(c).next().is_none())
            .collect();
        let component_sizes = components.iter().map(Vec::len).collect();
        ScdReport {
            components,
            skeleton,
            maximal_set,
            component_sizes,
            component_of,
        }
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.component_of.len()
    }

    pub fn component_of(&self, vertex: usize) -> usize {
        self.component_of[vertex]
    }

    pub fn is_maximal(&self, component: usize) -> bool {
        self.maximal_set.binary_search(&component).is_ok()
    }

    /// Maximal components reachable from `component` in the skeleton,
    /// including itself when it is maximal. Ascending.
    pub fn reachable_maximal(&self, component: usize) -> Vec<usize> {
        let mut seen = vec![false; self.num_components()];
        let mut stack = vec![component];
        seen[component] = true;
        while let Some(c) = stack.pop() {
            for d in self.skeleton.out_neighbors(c) {
                if !seen[d] {
                    seen[d] = true;
                    stack.push(d);
                }
            }
        }
        self.maximal_set
            .iter()
            .copied()
            .filter(|&c| seen[c])
            .collect()
    }

    pub fn verdict(&self, dim: usize) -> StructuralVerdict {
        let offending: Vec<usize> = self
            .maximal_set
            .iter()
            .copied()
            .filter(|&c| self.component_sizes[c] <= dim + 1)
            .collect();
        let kind = if offending.is_empty() {
            VerdictKind::GenericallyControllable
        } else if offending.iter().any(|&c| self.component_sizes[c] <= dim) {
            VerdictKind::QEmpty
        } else {
            VerdictKind::QDisconnected
        };
        StructuralVerdict {
            kind,
            offending_components: offending,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    /// Every maximal component has more than `n + 1` vertices.
    GenericallyControllable,
    /// Some maximal component has at most `n` vertices, so `Q` is empty.
    QEmpty,
    /// No maximal component is that small, but some has exactly `n + 1`
    /// vertices, so `Q` has two connected components.
    QDisconnected,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictKind::GenericallyControllable => "GenericallyControllable",
            VerdictKind::QEmpty => "QEmpty",
            VerdictKind::QDisconnected => "QDisconnected",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralVerdict {
    pub kind: VerdictKind,
    /// Maximal components with at most `n + 1` vertices, ascending.
    pub offending_components: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, one_based: &[(usize, usize)]) -> Digraph {
        Digraph::from_edges(n, one_based.iter().map(|&(i, j)| (i - 1, j - 1))).unwrap()
    }

    /// Minimum partition into parts that induce strongly connected
    /// subgraphs, by enumerating all set partitions. Returns the partition and
    /// whether the minimum is attained uniquely.
    fn brute_force_scd(g: &Digraph) -> (Vec<Vec<usize>>, bool) {
        let n = g.num_vertices();
        let strongly = |mask: u32| -> bool {
            let members: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
            g.induced(&members).is_strongly_connected()
        };
        let ok: Vec<bool> = (0..1u32 << n).map(|m| m != 0 && strongly(m)).collect();
        let mut best: Option<Vec<u32>> = None;
        let mut unique = true;
        fn rec(
            remaining: u32,
            parts: &mut Vec<u32>,
            ok: &[bool],
            best: &mut Option<Vec<u32>>,
            unique: &mut bool,
        ) {
            if remaining == 0 {
                match best {
                    Some(b) if b.len() < parts.len() => {}
                    Some(b) if b.len() == parts.len() => *unique = false,
                    _ => {
                        *best = Some(parts.clone());
                        *unique = true;
                    }
                }
                return;
            }
            let low = remaining & remaining.wrapping_neg();
            let rest = remaining & !low;
            let mut sub = rest;
            loop {
                let part = sub | low;
                if ok[part as usize] {
                    parts.push(part);
                    rec(remaining & !part, parts, ok, best, unique);
                    parts.pop();
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        rec(
            (1u32 << n) - 1,
            &mut Vec::new(),
            &ok,
            &mut best,
            &mut unique,
        );
        let mut parts: Vec<Vec<usize>> = best
            .unwrap()
            .into_iter()
            .map(|m| (0..n).filter(|v| m >> v & 1 == 1).collect())
            .collect();
        parts.sort_by_key(|p| p[0]);
        (parts, unique)
    }

    fn bfs_weakly_connected(g: &Digraph) -> bool {
        let n = g.num_vertices();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if !seen[w] && (g.has_edge(v, w) || g.has_edge(w, v)) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn weak_connectivity_examples() {
        assert!(graph(3, &[(1, 2), (3, 2)]).is_weakly_connected());
        assert!(!graph(3, &[(1, 2)]).is_weakly_connected());
        let p4 = graph(4, &[(1, 2), (2, 3), (3, 4)]);
        assert_eq!(p4.is_weakly_connected(), bfs_weakly_connected(&p4));
        assert!(p4.is_weakly_connected());
        assert!(Digraph::new(1).is_weakly_connected());
    }

    #[test]
    fn scd_single_cycle() {
        let scd = graph(3, &[(1, 2), (2, 3), (3, 1)]).coarse_scd().unwrap();
        assert_eq!(scd.components, vec![vec![0, 1, 2]]);
        assert_eq!(scd.skeleton.num_vertices(), 1);
        assert_eq!(scd.maximal_set, vec![0]);
    }

    #[test]
    fn scd_path() {
        let g = graph(3, &[(1, 2), (2, 3)]);
        let scd = g.coarse_scd().unwrap();
        assert_eq!(scd.components, brute_force_scd(&g).0);
        assert_eq!(scd.components, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(scd.skeleton, Digraph::path(3));
        assert_eq!(scd.maximal_set, vec![2]);
    }

    #[test]
    fn scd_two_maximal_components() {
        let g = graph(
            6,
            &[
                (1, 2),
                (2, 1),
                (3, 4),
                (4, 3),
                (2, 3),
                (5, 6),
                (6, 5),
                (2, 5),
            ],
        );
        let scd = g.coarse_scd().unwrap();
        assert_eq!(scd.components, brute_force_scd(&g).0);
        assert_eq!(scd.components, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(scd.maximal_set, vec![1, 2]);
        assert_eq!(scd.reachable_maximal(0), vec![1, 2]);
    }

    #[test]
    fn scd_rejects_disconnected() {
        assert_eq!(
            graph(3, &[(1, 2)]).coarse_scd(),
            Err(Error::NotWeaklyConnected)
        );
    }

    #[test]
    fn closure_examples() {
        let c = Digraph::path(4).transitive_closure();
        let expected = graph(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(c, expected);
        assert_eq!(Digraph::cycle(3).transitive_closure(), Digraph::complete(3));
        let single = graph(2, &[(1, 2)]);
        assert_eq!(single.transitive_closure(), single);
    }

    #[test]
    fn commutation_examples() {
        assert!(Digraph::cycle(3).verify_scd_closure_commutation().unwrap());
        assert!(Digraph::path(3).verify_scd_closure_commutation().unwrap());
    }

    #[test]
    fn verdict_examples() {
        let v = Digraph::complete(4).structural_verdict(2).unwrap();
        assert_eq!(v.kind, VerdictKind::GenericallyControllable);
        assert!(v.offending_components.is_empty());

        let v = Digraph::cycle(3).structural_verdict(2).unwrap();
        assert_eq!(v.kind, VerdictKind::QDisconnected);
        assert_eq!(v.offending_components, vec![0]);

        let v = Digraph::cycle(2).structural_verdict(2).unwrap();
        assert_eq!(v.kind, VerdictKind::QEmpty);
        assert_eq!(v.offending_components, vec![0]);

        for n in 1..4 {
            let v = Digraph::new(1).structural_verdict(n).unwrap();
            assert_eq!(v.kind, VerdictKind::QEmpty);
        }
    }

    #[test]
    fn verdict_ignores_non_maximal_components() {
        // {1} → {2..6}: the source is tiny but not maximal.
        let mut g = Digraph::complete(6).induced(&[1, 2, 3, 4, 5]);
        let mut big = Digraph::new(6);
        for (i, j) in g.edges() {
            big.add_edge(i + 1, j + 1).unwrap();
        }
        big.add_edge(0, 1).unwrap();
        g = big;
        let v = g.structural_verdict(2).unwrap();
        assert_eq!(v.kind, VerdictKind::GenericallyControllable);
    }

    #[test]
    fn text_format_round_trip() {
        let text = "# a comment\nN 4\n3 4\n1 2\n\n2 3\n";
        let g: Digraph = text.parse().unwrap();
        assert_eq!(g, Digraph::path(4));
        assert_eq!(g.to_text(), "N 4\n1 2\n2 3\n3 4\n");
        assert_eq!(
            Digraph::parse_text("N 3; 1 2; 2 3").unwrap(),
            Digraph::path(3)
        );
    }

    #[test]
    fn text_format_rejects_bad_input() {
        assert!(matches!(
            Digraph::parse_text("N 3\n1 1\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Digraph::parse_text("N 3\n1 4\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(Digraph::parse_text("1 2\n"), Err(Error::Parse(_))));
        assert!(matches!(
            Digraph::parse_text("N 3\n1 x\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(Digraph::parse_text(""), Err(Error::Parse(_))));
    }

    #[test]
    fn self_loops_rejected() {
        assert!(matches!(
            Digraph::from_edges(3, [(1, 1)]),
            Err(Error::InvalidIndices { .. })
        ));
    }

    fn arb_weakly_connected(max_n: usize) -> impl Strategy<Value = Digraph> {
        (1..=max_n, any::<u64>(), 0.0..0.5f64).prop_map(|(n, seed, density)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Digraph::random_weakly_connected(n, density, &mut rng)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn scd_matches_exhaustive_oracle(g in arb_weakly_connected(6)) {
            let (oracle, unique) = brute_force_scd(&g);
            prop_assert!(unique);
            prop_assert_eq!(g.coarse_scd().unwrap().components, oracle);
        }

        #[test]
        fn scd_is_relabeling_invariant(g in arb_weakly_connected(8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..g.num_vertices()).collect();
            perm.shuffle(&mut rng);
            let scd = g.coarse_scd().unwrap();
            let relabeled = g.relabel(&perm).coarse_scd().unwrap();
            let image = |c: &[usize]| {
                let mut m: Vec<usize> = c.iter().map(|&v| perm[v]).collect();
                m.sort_unstable();
                m
            };
            let mapped: BTreeSet<Vec<usize>> = scd.components.iter().map(|c| image(c)).collect();
            let other: BTreeSet<Vec<usize>> = relabeled.components.iter().cloned().collect();
            prop_assert_eq!(mapped, other);
            let mapped_max: BTreeSet<Vec<usize>> =
                scd.maximal_set.iter().map(|&c| image(&scd.components[c])).collect();
            let other_max: BTreeSet<Vec<usize>> = relabeled
                .maximal_set
                .iter()
                .map(|&c| relabeled.components[c].clone())
                .collect();
            prop_assert_eq!(mapped_max, other_max);
        }

        #[test]
        fn skeleton_is_acyclic_and_drains_to_maximal(g in arb_weakly_connected(8)) {
            let scd = g.coarse_scd().unwrap();
            prop_assert!(topological_sort(&scd.skeleton).is_some());
            for c in 0..scd.num_components() {
                prop_assert!(!scd.reachable_maximal(c).is_empty());
                prop_assert_eq!(
                    scd.is_maximal(c),
                    scd.skeleton.out_neighbors(c).next().is_none()
                );
            }
        }

        #[test]
        fn closure_is_idempotent(g in arb_weakly_connected(8)) {
            let c = g.transitive_closure();
            prop_assert_eq!(c.transitive_closure(), c);
        }

        #[test]
        fn closure_matches_pairwise_reachability(g in arb_weakly_connected(7)) {
            let c = g.transitive_closure();
            let n = g.num_vertices();
            for i in 0..n {
                // DFS from i over at least one edge
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = g.out_neighbors(i).collect();
                while let Some(v) = stack.pop() {
                    if !seen[v] {
                        seen[v] = true;
                        stack.extend(g.out_neighbors(v));
                    }
                }
                for j in 0..n {
                    prop_assert_eq!(c.has_edge(i, j), i != j && seen[j]);
                }
            }
        }

        #[test]
        fn commutation_holds(g in arb_weakly_connected(8)) {
            prop_assert!(g.verify_scd_closure_commutation().unwrap());
        }

        #[test]
        fn text_round_trip(g in arb_weakly_connected(8)) {
            prop_assert_eq!(Digraph::parse_text(&g.to_text()).unwrap(), g);
        }
    }
}
