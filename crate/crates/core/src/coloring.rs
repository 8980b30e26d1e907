//! Vertex colorings and proper directed-edge colorings.
//!
//! A directed-edge coloring must give different colors to edges leaving a
//! common vertex and to edges entering a common vertex. Splitting every
//! vertex `q` into an out-copy (keeping the out-edges) and an in-copy
//! (keeping the in-edges) turns this into ordinary edge coloring, which
//! Misra–Gries solves with at most `δ + 1` colors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::network::NodeId;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexColoring {
    /// Colors start at 1.
    pub colors: BTreeMap<NodeId, u32>,
}

impl VertexColoring {
    pub fn color(&self, q: NodeId) -> Option<u32> {
        self.colors.get(&q).copied()
    }

    /// Number of distinct colors in use.
    pub fn num_colors(&self) -> u32 {
        self.colors.values().copied().collect::<BTreeSet<_>>().len() as u32
    }

    /// Largest color label; the round count of the constant-depth schedule.
    pub fn max_color(&self) -> u32 {
        self.colors.values().copied().max().unwrap_or(0)
    }
}

/// Serialized as a list of `{from, to, color}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<EdgeColorEntry>", into = "Vec<EdgeColorEntry>")]
pub struct DirectedEdgeColoring {
    /// Colors start at 1.
    pub colors: BTreeMap<(NodeId, NodeId), u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeColorEntry {
    pub from: NodeId,
    pub to: NodeId,
    pub color: u32,
}

impl From<Vec<EdgeColorEntry>> for DirectedEdgeColoring {
    fn from(v: Vec<EdgeColorEntry>) -> Self {
        DirectedEdgeColoring { colors: v.into_iter().map(|e| ((e.from, e.to), e.color)).collect() }
    }
}

impl From<DirectedEdgeColoring> for Vec<EdgeColorEntry> {
    fn from(c: DirectedEdgeColoring) -> Self {
        c.colors.into_iter().map(|((from, to), color)| EdgeColorEntry { from, to, color }).collect()
    }
}

impl DirectedEdgeColoring {
    pub fn color(&self, e: (NodeId, NodeId)) -> Option<u32> {
        self.colors.get(&e).copied()
    }

    pub fn max_color(&self) -> u32 {
        self.colors.values().copied().max().unwrap_or(0)
    }
}

fn max_degree(nodes: &[NodeId], edges: &[(NodeId, NodeId)]) -> usize {
    let mut deg: HashMap<NodeId, BTreeSet<NodeId>> = nodes.iter().map(|&n| (n, BTreeSet::new())).collect();
    for &(a, b) in edges {
        deg.entry(a).or_default().insert(b);
        deg.entry(b).or_default().insert(a);
    }
    deg.values().map(BTreeSet::len).max().unwrap_or(0)
}

/// Greedy coloring in ascending node id order: each node takes the smallest
/// color not used by an already-colored neighbour. Uses at most `Δ + 1` colors.
pub fn greedy_vertex_coloring(nodes: &[NodeId], edges: &[(NodeId, NodeId)]) -> VertexColoring {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = nodes.iter().map(|&n| (n, BTreeSet::new())).collect();
    for &(a, b) in edges {
        if a != b {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
    }
    let mut colors = BTreeMap::new();
    for (&q, nbrs) in &adj {
        let used: BTreeSet<u32> = nbrs.iter().filter_map(|n| colors.get(n).copied()).collect();
        let c = (1..).find(|c| !used.contains(c)).unwrap();
        colors.insert(q, c);
    }
    VertexColoring { colors }
}

/// Check properness over `edges` and that every node is colored. With
/// `bound` set, also check the `Δ + 1` certificate.
pub fn check_vertex_coloring(
    nodes: &[NodeId],
    edges: &[(NodeId, NodeId)],
    vc: &VertexColoring,
    bound: bool,
) -> Result<(), String> {
    for &n in nodes {
        match vc.color(n) {
            None => return Err(format!("node {n} has no color")),
            Some(0) => return Err(format!("node {n} has color 0; colors start at 1")),
            Some(_) => {}
        }
    }
    for &(a, b) in edges {
        if a != b && vc.color(a) == vc.color(b) {
            return Err(format!("adjacent nodes {a} and {b} share color {}", vc.color(a).unwrap_or(0)));
        }
    }
    if bound && vc.num_colors() as usize > max_degree(nodes, edges) + 1 {
        return Err(format!("{} colors exceeds max degree + 1", vc.num_colors()));
    }
    Ok(())
}

/// The split graph: node `q` becomes an out-copy and an in-copy; each
/// directed edge `(u, v)` joins `u`'s out-copy to `v`'s in-copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitGraph {
    /// Vertex `2i` is the out-copy and `2i + 1` the in-copy of `nodes[i]`.
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(usize, usize)>,
}

impl SplitGraph {
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; 2 * self.nodes.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

pub fn split_graph(edges: &[(NodeId, NodeId)]) -> SplitGraph {
    let nodes: Vec<NodeId> =
        edges.iter().flat_map(|&(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
    let pos: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let edges = edges.iter().map(|&(a, b)| (2 * pos[&a], 2 * pos[&b] + 1)).collect();
    SplitGraph { nodes, edges }
}

/// Largest in- or out-degree of any vertex.
pub fn delta(edges: &[(NodeId, NodeId)]) -> usize {
    split_graph(edges).max_degree()
}

/// Misra–Gries edge coloring of a simple graph on vertices `0..n`.
struct MisraGries {
    color: HashMap<(usize, usize), u32>,
    at: Vec<HashMap<u32, usize>>,
    adj: Vec<Vec<usize>>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl MisraGries {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        MisraGries { color: HashMap::new(), at: vec![HashMap::new(); n], adj }
    }

    fn is_free(&self, v: usize, c: u32) -> bool {
        !self.at[v].contains_key(&c)
    }

    fn first_free(&self, v: usize) -> u32 {
        (1..).find(|&c| self.is_free(v, c)).unwrap()
    }

    fn set(&mut self, a: usize, b: usize, c: Option<u32>) {
        if let Some(old) = self.color.remove(&key(a, b)) {
            self.at[a].remove(&old);
            self.at[b].remove(&old);
        }
        if let Some(c) = c {
            self.color.insert(key(a, b), c);
            self.at[a].insert(c, b);
            self.at[b].insert(c, a);
        }
    }

    fn get(&self, a: usize, b: usize) -> Option<u32> {
        self.color.get(&key(a, b)).copied()
    }

    fn is_fan(&self, u: usize, fan: &[usize]) -> bool {
        fan.windows(2).all(|w| matches!(self.get(u, w[1]), Some(c) if self.is_free(w[0], c)))
    }

    fn color_edge(&mut self, u: usize, v: usize) {
        let mut fan = vec![v];
        loop {
            let last = *fan.last().unwrap();
            let next = self.adj[u].iter().copied().find(|&w| {
                !fan.contains(&w) && matches!(self.get(u, w), Some(c) if self.is_free(last, c))
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = self.first_free(u);
        let d = self.first_free(*fan.last().unwrap());

        // invert the cd-path that starts at u (u misses c, so it starts with d)
        let mut path = Vec::new();
        let (mut x, mut cur) = (u, d);
        while let Some(&y) = self.at[x].get(&cur) {
            path.push((x, y));
            x = y;
            cur = if cur == c { d } else { c };
            if path.len() > self.color.len() {
                break;
            }
        }
        let recolored: Vec<(usize, usize, u32)> = path
            .iter()
            .map(|&(a, b)| {
                let old = self.get(a, b).unwrap();
                (a, b, if old == c { d } else { c })
            })
            .collect();
        for &(a, b, _) in &recolored {
            self.set(a, b, None);
        }
        for (a, b, col) in recolored {
            self.set(a, b, Some(col));
        }

        let w = (0..fan.len())
            .find(|&i| self.is_free(fan[i], d) && self.is_fan(u, &fan[..=i]))
            .expect("Misra–Gries always finds a rotation point");
        for j in 0..w {
            let next = self.get(u, fan[j + 1]);
            self.set(u, fan[j + 1], None);
            self.set(u, fan[j], next);
        }
        self.set(u, fan[w], Some(d));
    }
}

/// Proper directed-edge coloring with at most `δ + 1` colors.
pub fn directed_edge_coloring(edges: &[(NodeId, NodeId)]) -> DirectedEdgeColoring {
    let split = split_graph(edges);
    let mut mg = MisraGries::new(2 * split.nodes.len(), &split.edges);
    for &(a, b) in &split.edges {
        if mg.get(a, b).is_none() {
            mg.color_edge(a, b);
        }
    }
    let colors = edges
        .iter()
        .zip(&split.edges)
        .map(|(&e, &(a, b))| (e, mg.get(a, b).expect("every edge colored")))
        .collect();
    DirectedEdgeColoring { colors }
}

/// Check that no two same-colored edges share a tail or a head and that
/// every edge is colored. With `bound` set, also check `B ≤ δ + 1`.
pub fn check_directed_edge_coloring(
    edges: &[(NodeId, NodeId)],
    ec: &DirectedEdgeColoring,
    bound: bool,
) -> Result<(), String> {
    let mut tails: HashMap<(NodeId, u32), (NodeId, NodeId)> = HashMap::new();
    let mut heads: HashMap<(NodeId, u32), (NodeId, NodeId)> = HashMap::new();
    for &e in edges {
        let c = ec.color(e).ok_or_else(|| format!("edge {}->{} has no color", e.0, e.1))?;
        if c == 0 {
            return Err(format!("edge {}->{} has color 0; colors start at 1", e.0, e.1));
        }
        if let Some(other) = tails.insert((e.0, c), e) {
            return Err(format!("edges {other:?} and {e:?} leave {} with color {c}", e.0));
        }
        if let Some(other) = heads.insert((e.1, c), e) {
            return Err(format!("edges {other:?} and {e:?} enter {} with color {c}", e.1));
        }
    }
    if bound && ec.max_color() as usize > delta(edges) + 1 {
        return Err(format!("{} colors exceeds δ + 1 = {}", ec.max_color(), delta(edges) + 1));
    }
    Ok(())
}
