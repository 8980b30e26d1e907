use std::collections::{BTreeMap, HashMap};

use crate::network::{LinearCode, Network, NodeId, Role};
use crate::tableau::Prep;

use super::builder::{Basis, Builder};
use super::{check_code, CompileError, Compiled, Mode};

/// Evaluate the code in topological order: transmitters start in `|+⟩`,
/// everything else in `|0⟩`, every edge becomes one CNOT placed at the
/// earliest free step after its tail is complete, and relays are terminated
/// at the end.
pub fn compile_inorder(net: &Network, code: &LinearCode) -> Result<Compiled, CompileError> {
    check_code(net, code)?;
    let d = net.d;
    let edges = net.active_edges(code);
    let order = net.topological_order(&edges)?;
    let mut b = Builder::new(d, net.graph_ref());
    for q in net.node_ids() {
        let prep = if net.role(q) == Some(Role::Transmitter) { Prep::Plus } else { Prep::Zero };
        b.prep(0, q, prep)?;
    }

    let mut last = 0;
    for (t, u, v) in list_schedule(&edges, &order) {
        b.cnot(t, u, v, code.weight(d, (u, v)))?;
        last = last.max(t);
    }

    let relays: Vec<(NodeId, Basis)> = net.with_role(Role::Relay).into_iter().map(|q| (q, Basis::X)).collect();
    if !relays.is_empty() {
        let (_, corr) = b.measure_batch(last + 1, &relays, true)?;
        b.corrections(last + 2, corr)?;
    }
    Ok(Compiled {
        mode: Mode::Inorder,
        circuit: b.finish(),
        groups: net.groups(),
        vertex_coloring: None,
        edge_coloring: None,
        plan: None,
        batches: None,
    })
}

/// Place each edge at the earliest step after every edge into its tail,
/// avoiding qubit clashes. Edges are taken in topological order of tails.
pub(crate) fn list_schedule(edges: &[(NodeId, NodeId)], order: &[NodeId]) -> Vec<(u32, NodeId, NodeId)> {
    let pos: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut sorted = edges.to_vec();
    sorted.sort_by_key(|&(u, v)| (pos[&u], pos[&v]));
    // step after which a node holds its final value
    let mut complete: HashMap<NodeId, u32> = HashMap::new();
    let mut busy: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    let mut out = Vec::with_capacity(sorted.len());
    for (u, v) in sorted {
        let mut t = complete.get(&u).copied().unwrap_or(0) + 1;
        while busy.get(&t).is_some_and(|qs| qs.contains(&u) || qs.contains(&v)) {
            t += 1;
        }
        busy.entry(t).or_default().extend([u, v]);
        let c = complete.entry(v).or_insert(0);
        *c = (*c).max(t);
        out.push((t, u, v));
    }
    out
}
