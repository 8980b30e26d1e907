use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::circuit::{ClassicalParity, GraphRef};
use crate::field::Modulus;
use crate::network::NodeId;
use crate::tableau::Prep;

use super::builder::{Basis, Builder, Corrections};
use super::{CompileError, Compiled, Mode};

/// Shortest path in the undirected graph, avoiding `blocked` interior nodes.
/// Ties go to the smallest neighbour id.
pub fn shortest_path(
    edges: &[(NodeId, NodeId)],
    from: NodeId,
    to: NodeId,
    blocked: &BTreeSet<NodeId>,
) -> Option<Vec<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut path = vec![to];
            while let Some(&p) = prev.get(path.last().unwrap()) {
                path.push(p);
            }
            path.reverse();
            return Some(path);
        }
        for &y in adj.get(&x).into_iter().flatten() {
            if (y == to || !blocked.contains(&y)) && seen.insert(y) {
                prev.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    None
}

/// One Bell pair per `(q_0, q_ℓ)` over a shortest path. Chains that share no
/// node run in the same batch; each batch takes four steps (prepare, two
/// CNOT layers, measure) and all corrections land in one final step.
pub fn compile_chain_sequential(
    d: Modulus,
    graph: &GraphRef,
    pairs: &[(NodeId, NodeId)],
) -> Result<Compiled, CompileError> {
    let endpoints: BTreeSet<NodeId> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    if endpoints.len() != 2 * pairs.len() {
        return Err(CompileError::Preconditions(vec!["pairs must not share endpoints".into()]));
    }
    let mut paths = Vec::new();
    for &(a, b) in pairs {
        let p = shortest_path(&graph.edges, a, b, &endpoints).ok_or(CompileError::Disconnected(a, b))?;
        paths.push(p);
    }

    // first-fit batching of vertex-disjoint chains
    let mut batches: Vec<(BTreeSet<NodeId>, Vec<usize>)> = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let nodes: BTreeSet<NodeId> = p.iter().copied().collect();
        match batches.iter_mut().find(|(used, _)| used.is_disjoint(&nodes)) {
            Some((used, members)) => {
                used.extend(nodes);
                members.push(i);
            }
            None => batches.push((nodes, vec![i])),
        }
    }

    let mut b = Builder::new(d, graph.clone());
    let mut pending: Vec<(NodeId, ClassicalParity, Corrections)> = Vec::new();
    let k = batches.len() as u32;
    for (bi, (_, members)) in batches.iter().enumerate() {
        let t0 = 4 * bi as u32;
        let mut items = Vec::new();
        let mut odd_interior: Vec<Vec<usize>> = Vec::new();
        for &m in members {
            let p = &paths[m];
            let l = p.len() - 1;
            for (j, &q) in p.iter().enumerate() {
                b.prep(t0, q, if j % 2 == 0 { Prep::Plus } else { Prep::Zero })?;
            }
            for j in (2..=l).step_by(2) {
                b.cnot(t0 + 1, p[j], p[j - 1], d.neg(1))?;
            }
            for j in (0..l).step_by(2) {
                b.cnot(t0 + 2, p[j], p[j + 1], 1)?;
            }
            let mut odd = Vec::new();
            for j in 1..l {
                if j % 2 == 0 {
                    items.push((p[j], Basis::X));
                } else {
                    odd.push(items.len());
                    items.push((p[j], Basis::Z));
                }
            }
            odd_interior.push(odd);
        }
        if items.is_empty() {
            continue;
        }
        let (records, corr) = b.measure_batch(t0 + 3, &items, false)?;
        for (&m, odd) in members.iter().zip(&odd_interior) {
            let mut x = ClassicalParity::default();
            for &i in odd {
                x.add_assign(&ClassicalParity::of(records[i], 1), d);
            }
            pending.push((*paths[m].last().unwrap(), x, Corrections::new()));
        }
        pending.push((0, ClassicalParity::default(), corr));
    }
    let t_fix = 4 * k;
    for (q, x, corr) in pending {
        b.corrections(t_fix, corr)?;
        if !x.terms.is_empty() {
            b.ctrl_x(t_fix, q, x)?;
        }
    }
    Ok(Compiled {
        mode: Mode::Chain,
        circuit: b.finish(),
        groups: pairs.iter().map(|&(a, b)| vec![a, b]).collect(),
        vertex_coloring: None,
        edge_coloring: None,
        plan: None,
        batches: Some(batches.len()),
    })
}
