//! Networks, node roles, linear network codes and the classical side of
//! code validation.
//!
//! A [`LinearCode`] attaches a `Z_d` weight to every directed edge. A node's
//! value is its input symbol (transmitters) or the sum of its weighted
//! in-edge messages (relays and receivers); each edge `u → v` carries
//! `weight(u, v) · value(u)`. Receivers must decode their transmitter's symbol.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::GraphRef;
use crate::field::Modulus;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Transmitter,
    Relay,
    Receiver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub role: Role,
}

fn yes() -> bool {
    true
}

/// An edge of the capability graph. Directed edges are the ones a code may
/// use; undirected edges only widen the graph CNOTs may act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(default = "yes")]
    pub directed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multicast {
    pub tx: NodeId,
    pub rx: Vec<NodeId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("directed edges contain a cycle through node {0}")]
    Cyclic(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} listed twice")]
    DuplicateNode(NodeId),
    #[error("edge {0}->{1} listed twice")]
    DuplicateEdge(NodeId, NodeId),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("role violation: {0}")]
    Role(String),
    #[error("code does not match network: {0}")]
    CodeShape(String),
    #[error("generated code failed validation for {0}")]
    InvalidCode(String),
    #[error("missing input for transmitter {0}")]
    MissingInput(NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    #[serde(default)]
    pub name: String,
    pub d: Modulus,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub multicast: Vec<Multicast>,
    /// Classical messages may travel between any two nodes.
    #[serde(default)]
    pub classical_complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct WeightEntry {
    from: NodeId,
    to: NodeId,
    weight: u32,
}

/// Per-edge `Z_d` coefficients. Directed edges without an entry carry weight
/// 1; weight 0 means the edge is unused.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<WeightEntry>", into = "Vec<WeightEntry>")]
pub struct LinearCode {
    pub weights: BTreeMap<(NodeId, NodeId), u32>,
}

impl From<Vec<WeightEntry>> for LinearCode {
    fn from(v: Vec<WeightEntry>) -> Self {
        LinearCode { weights: v.into_iter().map(|e| ((e.from, e.to), e.weight)).collect() }
    }
}

impl From<LinearCode> for Vec<WeightEntry> {
    fn from(c: LinearCode) -> Self {
        c.weights.into_iter().map(|((from, to), weight)| WeightEntry { from, to, weight }).collect()
    }
}

impl LinearCode {
    /// Every directed edge forwards with weight 1.
    pub fn broadcast() -> Self {
        LinearCode::default()
    }

    pub fn with(mut self, from: NodeId, to: NodeId, weight: u32) -> Self {
        self.weights.insert((from, to), weight);
        self
    }

    pub fn weight(&self, d: Modulus, e: (NodeId, NodeId)) -> u32 {
        d.reduce(self.weights.get(&e).copied().unwrap_or(1) as u64)
    }
}

impl Network {
    pub fn new(name: &str, d: Modulus) -> Self {
        Network { name: name.to_string(), d, nodes: Vec::new(), edges: Vec::new(), multicast: Vec::new(), classical_complete: false }
    }

    pub fn node(&mut self, id: NodeId, role: Role) -> &mut Self {
        self.nodes.push(Node { id, role });
        self
    }

    pub fn arc(&mut self, from: NodeId, to: NodeId) -> &mut Self {
        self.edges.push(Edge { from, to, directed: true });
        self
    }

    pub fn link(&mut self, a: NodeId, b: NodeId) -> &mut Self {
        self.edges.push(Edge { from: a, to: b, directed: false });
        self
    }

    pub fn group(&mut self, tx: NodeId, rx: &[NodeId]) -> &mut Self {
        self.multicast.push(Multicast { tx, rx: rx.to_vec() });
        self
    }

    pub fn role(&self, id: NodeId) -> Option<Role> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.role)
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        v.sort_unstable();
        v
    }

    pub fn with_role(&self, role: Role) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.nodes.iter().filter(|n| n.role == role).map(|n| n.id).collect();
        v.sort_unstable();
        v
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.edges.iter().filter(|e| e.directed).map(|e| (e.from, e.to)).collect()
    }

    /// Directed edges whose code weight is non-zero.
    pub fn active_edges(&self, code: &LinearCode) -> Vec<(NodeId, NodeId)> {
        self.directed_edges().into_iter().filter(|&e| code.weight(self.d, e) != 0).collect()
    }

    /// The undirected capability graph `G`: every edge, deduplicated, as
    /// `(min, max)` pairs.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        let set: BTreeSet<(NodeId, NodeId)> =
            self.edges.iter().map(|e| (e.from.min(e.to), e.from.max(e.to))).collect();
        set.into_iter().collect()
    }

    pub fn graph_ref(&self) -> GraphRef {
        GraphRef { name: self.name.clone(), edges: self.undirected_edges() }
    }

    /// Declared target grouping: `[tx, rx...]` per multicast entry.
    pub fn groups(&self) -> Vec<Vec<NodeId>> {
        self.multicast.iter().map(|m| std::iter::once(m.tx).chain(m.rx.iter().copied()).collect()).collect()
    }

    pub fn in_neighbours(&self, edges: &[(NodeId, NodeId)], q: NodeId) -> Vec<NodeId> {
        edges.iter().filter(|e| e.1 == q).map(|e| e.0).collect()
    }

    pub fn out_neighbours(&self, edges: &[(NodeId, NodeId)], q: NodeId) -> Vec<NodeId> {
        edges.iter().filter(|e| e.0 == q).map(|e| e.1).collect()
    }

    /// Node ids unique, edge endpoints known, no duplicate or self edges.
    pub fn check_structure(&self) -> Result<(), NetworkError> {
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(NetworkError::DuplicateNode(n.id));
            }
        }
        let mut edges = BTreeSet::new();
        for e in &self.edges {
            for q in [e.from, e.to] {
                if !seen.contains(&q) {
                    return Err(NetworkError::UnknownNode(q));
                }
            }
            if e.from == e.to {
                return Err(NetworkError::BadParameter(format!("self loop at {}", e.from)));
            }
            if !edges.insert((e.from.min(e.to), e.from.max(e.to))) {
                return Err(NetworkError::DuplicateEdge(e.from, e.to));
            }
        }
        for m in &self.multicast {
            for q in std::iter::once(m.tx).chain(m.rx.iter().copied()) {
                if !seen.contains(&q) {
                    return Err(NetworkError::UnknownNode(q));
                }
            }
        }
        Ok(())
    }

    /// Role preconditions for compiling a code: transmitters have no active
    /// in-edges, receivers no active out-edges, every relay has both, and the
    /// multicast groups pair transmitters with disjoint receiver sets.
    pub fn role_violations(&self, code: &LinearCode) -> Vec<String> {
        let edges = self.active_edges(code);
        let mut out = Vec::new();
        for n in &self.nodes {
            let ins = self.in_neighbours(&edges, n.id).len();
            let outs = self.out_neighbours(&edges, n.id).len();
            match n.role {
                Role::Transmitter if ins > 0 => out.push(format!("transmitter {} has in-degree {ins}", n.id)),
                Role::Receiver if outs > 0 => out.push(format!("receiver {} has out-degree {outs}", n.id)),
                Role::Relay if ins == 0 || outs == 0 => {
                    out.push(format!("relay {} needs in- and out-edges (in {ins}, out {outs})", n.id))
                }
                _ => {}
            }
        }
        let mut claimed = BTreeSet::new();
        for m in &self.multicast {
            if self.role(m.tx) != Some(Role::Transmitter) {
                out.push(format!("multicast source {} is not a transmitter", m.tx));
            }
            if m.rx.is_empty() {
                out.push(format!("transmitter {} has no receivers", m.tx));
            }
            for &r in &m.rx {
                if self.role(r) != Some(Role::Receiver) {
                    out.push(format!("multicast target {r} is not a receiver"));
                }
                if !claimed.insert(r) {
                    out.push(format!("receiver {r} appears in two groups"));
                }
            }
        }
        out
    }

    /// Topological order of the nodes over `edges`, smallest id first among
    /// ready nodes.
    pub fn topological_order(&self, edges: &[(NodeId, NodeId)]) -> Result<Vec<NodeId>, NetworkError> {
        let mut indeg: BTreeMap<NodeId, usize> = self.node_ids().into_iter().map(|n| (n, 0)).collect();
        let mut succ: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for &(a, b) in edges {
            *indeg.get_mut(&b).ok_or(NetworkError::UnknownNode(b))? += 1;
            if !indeg.contains_key(&a) {
                return Err(NetworkError::UnknownNode(a));
            }
            succ.entry(a).or_default().push(b);
        }
        let mut ready: BTreeSet<NodeId> = indeg.iter().filter(|(_, &k)| k == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::with_capacity(indeg.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for &s in succ.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                let k = indeg.get_mut(&s).unwrap();
                *k -= 1;
                if *k == 0 {
                    ready.insert(s);
                }
            }
        }
        if order.len() < indeg.len() {
            let stuck = indeg.iter().find(|(n, &k)| k > 0 && !order.contains(n)).map(|(&n, _)| n).unwrap();
            return Err(NetworkError::Cyclic(stuck));
        }
        Ok(order)
    }

    fn check_code_shape(&self, code: &LinearCode) -> Result<(), NetworkError> {
        let directed: BTreeSet<(NodeId, NodeId)> = self.directed_edges().into_iter().collect();
        for &e in code.weights.keys() {
            if !directed.contains(&e) {
                return Err(NetworkError::CodeShape(format!("weight on {}->{}, which is not a directed edge", e.0, e.1)));
            }
        }
        Ok(())
    }

    /// Propagate transmitter symbols along the code and return every
    /// receiver's decode.
    pub fn classical_simulate(
        &self,
        code: &LinearCode,
        inputs: &BTreeMap<NodeId, u32>,
    ) -> Result<BTreeMap<NodeId, u32>, NetworkError> {
        self.check_code_shape(code)?;
        let d = self.d;
        let edges = self.active_edges(code);
        let order = self.topological_order(&edges)?;
        let mut value: HashMap<NodeId, u32> = HashMap::new();
        for q in order {
            let v = match self.role(q).unwrap() {
                Role::Transmitter => d.reduce(*inputs.get(&q).ok_or(NetworkError::MissingInput(q))? as u64),
                _ => edges
                    .iter()
                    .filter(|e| e.1 == q)
                    .fold(0, |acc, &e| d.mul_add(acc, code.weight(d, e), value[&e.0])),
            };
            value.insert(q, v);
        }
        Ok(self.with_role(Role::Receiver).into_iter().map(|r| (r, value[&r])).collect())
    }

    fn decodes_correctly(&self, code: &LinearCode, inputs: &BTreeMap<NodeId, u32>) -> Result<bool, NetworkError> {
        let out = self.classical_simulate(code, inputs)?;
        Ok(self.multicast.iter().all(|m| m.rx.iter().all(|r| out.get(r) == inputs.get(&m.tx))))
    }

    /// Whether every receiver decodes its transmitter's symbol. By linearity
    /// the zero input and the unit inputs suffice.
    pub fn validate_code(&self, code: &LinearCode) -> bool {
        if self.check_structure().is_err() || !self.role_violations_basic().is_empty() {
            return false;
        }
        let tx = self.with_role(Role::Transmitter);
        let zero: BTreeMap<NodeId, u32> = tx.iter().map(|&t| (t, 0)).collect();
        let mut probes = vec![zero.clone()];
        for &t in &tx {
            let mut unit = zero.clone();
            unit.insert(t, 1);
            probes.push(unit);
        }
        probes.iter().all(|p| self.decodes_correctly(code, p).unwrap_or(false))
    }

    /// Same question as [`Network::validate_code`], answered by enumerating
    /// all `d^N` inputs.
    pub fn validate_code_exhaustive(&self, code: &LinearCode) -> Result<bool, NetworkError> {
        let tx = self.with_role(Role::Transmitter);
        let d = self.d.get() as u64;
        let total = d.checked_pow(tx.len() as u32).filter(|&t| t <= 1 << 20).ok_or_else(|| {
            NetworkError::BadParameter(format!("{}^{} inputs is too many to enumerate", d, tx.len()))
        })?;
        if self.check_structure().is_err() || !self.role_violations_basic().is_empty() {
            return Ok(false);
        }
        for idx in 0..total {
            let mut rest = idx;
            let inputs: BTreeMap<NodeId, u32> = tx
                .iter()
                .map(|&t| {
                    let v = (rest % d) as u32;
                    rest /= d;
                    (t, v)
                })
                .collect();
            if !self.decodes_correctly(code, &inputs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn role_violations_basic(&self) -> Vec<String> {
        let mut out = Vec::new();
        for m in &self.multicast {
            if self.role(m.tx) != Some(Role::Transmitter) {
                out.push(format!("{} is not a transmitter", m.tx));
            }
            for &r in &m.rx {
                if self.role(r) != Some(Role::Receiver) {
                    out.push(format!("{r} is not a receiver"));
                }
            }
        }
        out
    }

    /// Brute-force search over 0/1 weights for a binary code. Only for tiny
    /// instances.
    pub fn search_binary_code(&self) -> Result<Option<LinearCode>, NetworkError> {
        let edges = self.directed_edges();
        if self.d != Modulus::QUBIT || edges.len() > 10 {
            return Err(NetworkError::BadParameter("code search needs d = 2 and at most 10 directed edges".into()));
        }
        for mask in (0u32..1 << edges.len()).rev() {
            let code = LinearCode {
                weights: edges.iter().enumerate().map(|(i, &e)| (e, (mask >> i) & 1)).collect(),
            };
            if self.validate_code(&code) {
                return Ok(Some(code));
            }
        }
        Ok(None)
    }

    /// DOT rendering: transmitters as boxes, receivers as double circles,
    /// relays as circles; undirected links dashed. Non-unit weights label
    /// their edges.
    pub fn to_dot(&self, code: Option<&LinearCode>) -> String {
        let mut s = format!("digraph \"{}\" {{\n", self.name);
        for n in {
            let mut v = self.nodes.clone();
            v.sort_by_key(|n| n.id);
            v
        } {
            let shape = match n.role {
                Role::Transmitter => "box",
                Role::Relay => "circle",
                Role::Receiver => "doublecircle",
            };
            let _ = writeln!(s, "  {} [shape={shape}];", n.id);
        }
        for e in &self.edges {
            if e.directed {
                let w = code.map(|c| c.weight(self.d, (e.from, e.to))).unwrap_or(1);
                if w == 1 {
                    let _ = writeln!(s, "  {} -> {};", e.from, e.to);
                } else {
                    let _ = writeln!(s, "  {} -> {} [label=\"{w}\"];", e.from, e.to);
                }
            } else {
                let _ = writeln!(s, "  {} -> {} [dir=none, style=dashed];", e.from, e.to);
            }
        }
        s.push_str("}\n");
        s
    }
}

fn checked(net: Network, code: LinearCode) -> Result<(Network, LinearCode), NetworkError> {
    net.check_structure()?;
    if !net.validate_code(&code) {
        return Err(NetworkError::InvalidCode(net.name.clone()));
    }
    Ok((net, code))
}

/// The butterfly on a 2×3 grid: transmitters 1 and 3 on top, receivers 4
/// and 6 below, relay 2 encodes and relay 5 fans out. Pairs (1,6), (3,4).
pub fn butterfly(d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    let mut net = Network::new("butterfly", d);
    net.node(1, Role::Transmitter).node(2, Role::Relay).node(3, Role::Transmitter);
    net.node(4, Role::Receiver).node(5, Role::Relay).node(6, Role::Receiver);
    net.arc(1, 2).arc(3, 2).arc(2, 5).arc(5, 4).arc(5, 6).arc(1, 4).arc(3, 6);
    net.group(1, &[6]).group(3, &[4]);
    let m = d.neg(1);
    let code = LinearCode::broadcast().with(1, 4, m).with(3, 6, m);
    checked(net, code)
}

/// Butterfly tiles in 2×3 blocks over a `w × h` lattice (ids row-major from
/// 1), plus an L-shaped stream down the last column and back along the last
/// row when both `w ≡ 1 (mod 3)` and `h` is odd. Every lattice edge is in
/// `G`.
pub fn grid(w: u32, h: u32, d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    let hook = match (w % 3, h % 2) {
        (0, 0) => false,
        (1, 1) => true,
        _ => {
            return Err(NetworkError::BadParameter(format!(
                "grid {w}x{h}: need w ≡ 0 (mod 3) with h even, or w ≡ 1 (mod 3) with h odd"
            )))
        }
    };
    let (bx, by) = (w / 3, h / 2);
    if bx == 0 || by == 0 {
        return Err(NetworkError::BadParameter(format!("grid {w}x{h} holds no butterfly block")));
    }
    let id = |r: u32, c: u32| r * w + c + 1;
    let mut net = Network::new(&format!("grid{w}x{h}"), d);
    let mut code = LinearCode::broadcast();
    let m = d.neg(1);
    let mut roles: BTreeMap<NodeId, Role> = BTreeMap::new();
    let mut arcs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for i in 0..by {
        for j in 0..bx {
            let (r, c) = (2 * i, 3 * j);
            let (ta, top, tb) = (id(r, c), id(r, c + 1), id(r, c + 2));
            let (rb, mid, ra) = (id(r + 1, c), id(r + 1, c + 1), id(r + 1, c + 2));
            roles.extend([
                (ta, Role::Transmitter),
                (tb, Role::Transmitter),
                (top, Role::Relay),
                (mid, Role::Relay),
                (rb, Role::Receiver),
                (ra, Role::Receiver),
            ]);
            arcs.extend([(ta, top), (tb, top), (top, mid), (mid, rb), (mid, ra), (ta, rb), (tb, ra)]);
            code = code.with(ta, rb, m).with(tb, ra, m);
            net.group(ta, &[ra]).group(tb, &[rb]);
        }
    }
    if hook {
        let mut path: Vec<NodeId> = (0..h).map(|r| id(r, w - 1)).collect();
        path.extend((0..w - 1).rev().map(|c| id(h - 1, c)));
        for (k, &q) in path.iter().enumerate() {
            let role = match k {
                0 => Role::Transmitter,
                k if k + 1 == path.len() => Role::Receiver,
                _ => Role::Relay,
            };
            roles.insert(q, role);
        }
        arcs.extend(path.windows(2).map(|p| (p[0], p[1])));
        net.group(path[0], &[*path.last().unwrap()]);
    }
    for (&q, &role) in &roles {
        net.node(q, role);
    }
    for r in 0..h {
        for c in 0..w {
            for (nr, nc) in [(r, c + 1), (r + 1, c)] {
                if nr < h && nc < w {
                    let (a, b) = (id(r, c), id(nr, nc));
                    if arcs.contains(&(a, b)) {
                        net.arc(a, b);
                    } else if arcs.contains(&(b, a)) {
                        net.arc(b, a);
                    } else {
                        net.link(a, b);
                    }
                }
            }
        }
    }
    net.multicast.sort_by_key(|m| m.tx);
    checked(net, code)
}

/// The `k`-pairs network where every transmitter reaches every receiver but
/// its own, plus one shared path `u → v` through the middle.
pub fn directed_speedup(k: u32, d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    if k < 2 {
        return Err(NetworkError::BadParameter("directed speedup needs k >= 2".into()));
    }
    let (u, v) = (2 * k + 1, 2 * k + 2);
    let mut net = Network::new(&format!("speedup{k}"), d);
    let mut code = LinearCode::broadcast();
    for i in 1..=k {
        net.node(i, Role::Transmitter);
    }
    for i in 1..=k {
        net.node(k + i, Role::Receiver);
    }
    net.node(u, Role::Relay).node(v, Role::Relay);
    for i in 1..=k {
        net.arc(i, u);
        for j in 1..=k {
            if i != j {
                net.arc(i, k + j);
                code = code.with(i, k + j, d.neg(1));
            }
        }
    }
    net.arc(u, v);
    for j in 1..=k {
        net.arc(v, k + j);
    }
    for i in 1..=k {
        net.group(i, &[k + i]);
    }
    checked(net, code)
}

/// A path `1 → 2 → … → length + 1` carrying one stream.
pub fn chain(length: u32, d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    if length == 0 {
        return Err(NetworkError::BadParameter("chain length must be positive".into()));
    }
    let mut net = Network::new(&format!("chain{length}"), d);
    for q in 1..=length + 1 {
        let role = match q {
            1 => Role::Transmitter,
            q if q == length + 1 => Role::Receiver,
            _ => Role::Relay,
        };
        net.node(q, role);
    }
    for q in 1..=length {
        net.arc(q, q + 1);
    }
    net.group(1, &[length + 1]);
    checked(net, LinearCode::broadcast())
}

/// One transmitter fanning out through two relays to three receivers, so the
/// group {1, 4, 5, 6} ends in a four-party GHZ state.
pub fn multicast_tree(d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    let mut net = Network::new("multicast", d);
    net.node(1, Role::Transmitter).node(2, Role::Relay).node(3, Role::Relay);
    net.node(4, Role::Receiver).node(5, Role::Receiver).node(6, Role::Receiver);
    net.arc(1, 2).arc(1, 3).arc(2, 4).arc(2, 5).arc(3, 6);
    net.group(1, &[4, 5, 6]);
    checked(net, LinearCode::broadcast())
}

/// A network that is just one directed edge.
pub fn single_edge(d: Modulus) -> Result<(Network, LinearCode), NetworkError> {
    let mut net = Network::new("edge", d);
    net.node(1, Role::Transmitter).node(2, Role::Receiver).arc(1, 2).group(1, &[2]);
    checked(net, LinearCode::broadcast())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q() -> Modulus {
        Modulus::QUBIT
    }

    fn inputs(pairs: &[(NodeId, u32)]) -> BTreeMap<NodeId, u32> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn butterfly_decodes_partner() {
        let (net, code) = butterfly(q()).unwrap();
        let out = net.classical_simulate(&code, &inputs(&[(1, 1), (3, 0)])).unwrap();
        assert_eq!(out[&6], 1);
        assert_eq!(out[&4], 0);
        assert!(net.validate_code(&code));
        assert_eq!(net.groups(), vec![vec![1, 6], vec![3, 4]]);
    }

    #[test]
    fn zero_inputs_decode_zero() {
        let (net, code) = butterfly(q()).unwrap();
        let out = net.classical_simulate(&code, &inputs(&[(1, 0), (3, 0)])).unwrap();
        assert!(out.values().all(|&v| v == 0));
    }

    #[test]
    fn bottleneck_forwarding_fails() {
        let (net, code) = butterfly(q()).unwrap();
        // relay 2 forwards only transmitter 1
        let broken = code.with(3, 2, 0);
        assert!(!net.validate_code(&broken));
    }

    #[test]
    fn speedup_receiver_one_recovers_a() {
        let (net, code) = directed_speedup(4, q()).unwrap();
        let out = net.classical_simulate(&code, &inputs(&[(1, 1), (2, 1), (3, 0), (4, 1)])).unwrap();
        assert_eq!(out[&5], 1);
        assert_eq!(out[&6], 1);
        assert_eq!(out[&7], 0);
        assert_eq!(out[&8], 1);
    }

    #[test]
    fn grid_4x3_carries_three_streams() {
        let (net, code) = grid(4, 3, q()).unwrap();
        assert_eq!(net.multicast.len(), 3);
        assert!(net.validate_code_exhaustive(&code).unwrap());
        assert_eq!(net.undirected_edges().len(), 17);
        // stream C runs 4 → 8 → 12 → 11 → 10 → 9
        assert!(net.multicast.iter().any(|m| m.tx == 4 && m.rx == vec![9]));
        assert!(net.role_violations(&code).is_empty());
    }

    #[test]
    fn qudit_generators_validate() {
        for d in [3, 5, 7] {
            let d = Modulus::new(d).unwrap();
            assert!(butterfly(d).is_ok());
            assert!(directed_speedup(3, d).is_ok());
            assert!(grid(6, 4, d).is_ok());
            assert!(grid(7, 5, d).is_ok());
            assert!(multicast_tree(d).is_ok());
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(grid(5, 2, q()), Err(NetworkError::BadParameter(_))));
        assert!(matches!(directed_speedup(1, q()), Err(NetworkError::BadParameter(_))));
        assert!(matches!(chain(0, q()), Err(NetworkError::BadParameter(_))));
    }

    #[test]
    fn cycles_are_reported() {
        let mut net = Network::new("cycle", q());
        net.node(1, Role::Transmitter).node(2, Role::Relay).node(3, Role::Relay).node(4, Role::Receiver);
        net.arc(1, 2).arc(2, 3).arc(3, 2).arc(3, 4);
        net.group(1, &[4]);
        let err = net.classical_simulate(&LinearCode::broadcast(), &inputs(&[(1, 1)])).unwrap_err();
        assert!(matches!(err, NetworkError::Cyclic(_)));
    }

    #[test]
    fn search_finds_butterfly_code() {
        let (net, _) = butterfly(q()).unwrap();
        let code = net.search_binary_code().unwrap().expect("butterfly has a code");
        assert!(net.validate_code(&code));
    }

    #[test]
    fn json_round_trip() {
        let (net, code) = butterfly(Modulus::new(3).unwrap()).unwrap();
        let s = serde_json::to_string(&net).unwrap();
        assert_eq!(serde_json::from_str::<Network>(&s).unwrap(), net);
        let s = serde_json::to_string(&code).unwrap();
        assert_eq!(serde_json::from_str::<LinearCode>(&s).unwrap(), code);
        let parsed: Network = serde_json::from_str(
            r#"{"d":2,"nodes":[{"id":1,"role":"transmitter"},{"id":2,"role":"receiver"}],
                "edges":[{"from":1,"to":2}],"multicast":[{"tx":1,"rx":[2]}]}"#,
        )
        .unwrap();
        assert!(parsed.edges[0].directed);
    }

    #[test]
    fn dot_shows_roles() {
        let (net, code) = butterfly(Modulus::new(3).unwrap()).unwrap();
        let dot = net.to_dot(Some(&code));
        assert!(dot.contains("1 [shape=box]"));
        assert!(dot.contains("4 [shape=doublecircle]"));
        assert!(dot.contains("1 -> 4 [label=\"2\"]"));
    }

    proptest! {
        // unit-vector validation agrees with full enumeration on perturbed codes
        #[test]
        fn unit_validation_matches_exhaustive(mask in 0u32..(1 << 10), which in 0usize..3) {
            let (net, _) = match which {
                0 => butterfly(q()).unwrap(),
                1 => directed_speedup(3, q()).unwrap(),
                _ => grid(4, 3, q()).unwrap(),
            };
            let edges = net.directed_edges();
            let code = LinearCode {
                weights: edges.iter().enumerate().map(|(i, &e)| (e, if i < 10 { (mask >> i) & 1 } else { 1 })).collect(),
            };
            prop_assert_eq!(net.validate_code(&code), net.validate_code_exhaustive(&code).unwrap());
        }
    }
}
