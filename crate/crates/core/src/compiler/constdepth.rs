use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{ClassicalParity, RecordId};
use crate::coloring::{
    check_directed_edge_coloring, check_vertex_coloring, directed_edge_coloring, greedy_vertex_coloring,
    DirectedEdgeColoring, VertexColoring,
};
use crate::network::{LinearCode, Network, NodeId, Role};
use crate::tableau::Prep;

use super::builder::{Basis, Builder};
use super::{check_code, CompileError, Compiled, DelayedCorrectionPlan, Mode};

/// How a relay ends up carrying its stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RelayKind {
    /// Started in `|+⟩`, broadcast `-a_q`, Z-measured at the end.
    Plus,
    /// Started in `|0⟩`, broadcast its early inputs, terminated, then
    /// re-broadcast a fresh `-b_q` to absorb late inputs.
    Reforwarded,
    /// Started in `|0⟩`, broadcast all of its inputs, terminated.
    Complete,
}

/// Constant-depth compilation with greedy vertex coloring on `G` and
/// Misra–Gries directed-edge coloring of the code's edges.
pub fn compile_constant_depth_auto(net: &Network, code: &LinearCode) -> Result<Compiled, CompileError> {
    let vc = greedy_vertex_coloring(&net.node_ids(), &net.undirected_edges());
    let ec = directed_edge_coloring(&net.active_edges(code));
    compile_constant_depth(net, code, &vc, &ec)
}

/// Round-by-color schedule: nodes of color `h` send along their out-edges
/// one edge color at a time; relays that already received early inputs are
/// terminated mid-protocol so late inputs land on a fresh symbol; at the end
/// relays are Z-measured (or terminated, for the last color) and receivers
/// get delayed X corrections.
///
/// The vertex coloring only has to be proper on the code's edges.
pub fn compile_constant_depth(
    net: &Network,
    code: &LinearCode,
    vc: &VertexColoring,
    ec: &DirectedEdgeColoring,
) -> Result<Compiled, CompileError> {
    check_code(net, code)?;
    let d = net.d;
    let edges = net.active_edges(code);
    check_vertex_coloring(&net.node_ids(), &edges, vc, false).map_err(CompileError::Coloring)?;
    check_directed_edge_coloring(&edges, ec, false).map_err(CompileError::Coloring)?;
    let color = |q: NodeId| vc.color(q).unwrap();
    let a_max = net.node_ids().into_iter().map(color).max().unwrap_or(1);

    let ins = |q: NodeId| net.in_neighbours(&edges, q);
    let outs = |q: NodeId| net.out_neighbours(&edges, q);
    let plus = |q: NodeId| !outs(q).is_empty() && ins(q).iter().all(|&p| color(p) >= color(q));
    let role = |q: NodeId| net.role(q).unwrap();

    let mut b = Builder::new(d, net.graph_ref());
    for q in net.node_ids() {
        b.prep(0, q, if plus(q) { Prep::Plus } else { Prep::Zero })?;
    }
    let mut t = 1;

    // send along every listed edge, one edge color per step
    let sweep = |b: &mut Builder, t: &mut u32, sends: &[((NodeId, NodeId), u32)]| -> Result<(), CompileError> {
        let by_color: BTreeMap<u32, Vec<&((NodeId, NodeId), u32)>> =
            sends.iter().fold(BTreeMap::new(), |mut m, s| {
                m.entry(ec.color(s.0).unwrap()).or_insert_with(Vec::new).push(s);
                m
            });
        for group in by_color.values() {
            for &&((u, v), w) in group {
                b.cnot(*t, u, v, w)?;
            }
            *t += 1;
        }
        Ok(())
    };

    let mut kinds: BTreeMap<NodeId, RelayKind> = BTreeMap::new();
    for h in 1..=a_max {
        let senders: Vec<NodeId> =
            net.node_ids().into_iter().filter(|&q| color(q) == h && role(q) != Role::Receiver).collect();
        let mut sends = Vec::new();
        for &q in &senders {
            let sign_flip = role(q) == Role::Relay && plus(q);
            for v in outs(q) {
                let w = code.weight(d, (q, v));
                sends.push(((q, v), if sign_flip { d.neg(w) } else { w }));
            }
        }
        sweep(&mut b, &mut t, &sends)?;

        let relays: Vec<NodeId> = senders.iter().copied().filter(|&q| role(q) == Role::Relay).collect();
        for &q in &relays {
            if plus(q) {
                kinds.insert(q, RelayKind::Plus);
            }
        }
        if h == 1 || h == a_max {
            continue;
        }
        let early: Vec<NodeId> = relays.iter().copied().filter(|&q| !plus(q)).collect();
        if early.is_empty() {
            continue;
        }
        let items: Vec<(NodeId, Basis)> = early.iter().map(|&q| (q, Basis::X)).collect();
        let (_, corr) = b.measure_batch(t, &items, true)?;
        t += 1;
        if !corr.is_empty() {
            b.corrections(t, corr)?;
            t += 1;
        }
        let mut resend = Vec::new();
        for &q in &early {
            let late = ins(q).iter().any(|&p| color(p) > h);
            kinds.insert(q, if late { RelayKind::Reforwarded } else { RelayKind::Complete });
            if late {
                for v in outs(q) {
                    resend.push(((q, v), d.neg(code.weight(d, (q, v)))));
                }
            }
        }
        sweep(&mut b, &mut t, &resend)?;
    }

    // final measurements: Z on early-colored relays, termination on color A
    let relays = net.with_role(Role::Relay);
    let items: Vec<(NodeId, Basis)> =
        relays.iter().map(|&q| (q, if color(q) < a_max { Basis::Z } else { Basis::X })).collect();
    let mut z_record: BTreeMap<NodeId, RecordId> = BTreeMap::new();
    let mut corr = BTreeMap::new();
    if !items.is_empty() {
        let (records, c) = b.measure_batch(t, &items, true)?;
        for (&(q, basis), r) in items.iter().zip(records) {
            if basis == Basis::Z {
                z_record.insert(q, r);
            }
        }
        corr = c;
        t += 1;
    }

    // delayed corrections in topological order
    let order = net.topological_order(&edges)?;
    let mut plan = DelayedCorrectionPlan::default();
    for &q in &order {
        if role(q) == Role::Transmitter {
            continue;
        }
        let mut w = ClassicalParity::default();
        for p in ins(q) {
            if let Some(o) = plan.offset.get(&p) {
                let wt = code.weight(d, (p, q));
                let scaled = ClassicalParity {
                    constant: d.mul(wt, o.constant),
                    terms: o.terms.iter().map(|&(r, m)| (r, d.mul(wt, m))).collect(),
                };
                w.add_assign(&scaled, d);
            }
        }
        if role(q) == Role::Relay {
            let mut o = w.clone();
            let kind = if color(q) == a_max { RelayKind::Complete } else { kinds[&q] };
            if kind != RelayKind::Complete {
                o.add_assign(&ClassicalParity::of(z_record[&q], d.neg(1)), d);
            }
            plan.offset.insert(q, o);
        }
        plan.order.push(q);
        plan.correction.insert(q, w);
    }
    let receivers: BTreeSet<NodeId> = net.with_role(Role::Receiver).into_iter().collect();
    let mut fixes = Vec::new();
    for (&q, w) in &plan.correction {
        if receivers.contains(&q) && (w.constant != 0 || !w.terms.is_empty()) {
            let neg = ClassicalParity {
                constant: d.neg(w.constant),
                terms: w.terms.iter().map(|&(r, m)| (r, d.neg(m))).collect(),
            };
            fixes.push((q, neg));
        }
    }
    if !corr.is_empty() || !fixes.is_empty() {
        b.corrections(t, corr)?;
        for (q, p) in fixes {
            b.ctrl_x(t, q, p)?;
        }
    }

    Ok(Compiled {
        mode: Mode::Constdepth,
        circuit: b.finish(),
        groups: net.groups(),
        vertex_coloring: Some(vc.clone()),
        edge_coloring: Some(ec.clone()),
        plan: Some(plan),
        batches: None,
    })
}
