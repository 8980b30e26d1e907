//! Hand-built circuits that no `LinearCode` describes directly.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::circuit::{ClassicalParity, GraphRef, OpKind, QlncCircuit};
use crate::compiler::builder::{Basis, Builder};
use crate::compiler::inorder::list_schedule;
use crate::compiler::CompileError;
use crate::field::Modulus;
use crate::network::{Network, NodeId, Role};
use crate::tableau::{Prep, QubitId};

/// A circuit with its intended final grouping.
#[derive(Clone, Debug, Serialize)]
pub struct Example {
    pub name: String,
    pub circuit: QlncCircuit,
    pub groups: Vec<Vec<QubitId>>,
}

fn grid_2x3() -> GraphRef {
    GraphRef { name: "grid2x3".into(), edges: vec![(1, 2), (2, 3), (4, 5), (5, 6), (1, 4), (2, 5), (3, 6)] }
}

/// Butterfly with relay 5 starting in `|+⟩` and sending before it receives.
/// Relay 2 collects all three symbols and is Z-measured; its outcome fixes
/// receivers 4 and 6 through classically controlled X, and 5 is then
/// X-measured with phase corrections.
pub fn out_of_order_butterfly(d: Modulus) -> Result<Example, CompileError> {
    let m = d.neg(1);
    let mut b = Builder::new(d, grid_2x3());
    for q in [1, 3, 5] {
        b.prep(0, q, Prep::Plus)?;
    }
    for q in [2, 4, 6] {
        b.prep(0, q, Prep::Zero)?;
    }
    b.cnot(1, 1, 2, 1)?;
    b.cnot(1, 5, 4, m)?;
    b.cnot(1, 3, 6, m)?;
    b.cnot(2, 3, 2, 1)?;
    b.cnot(2, 1, 4, m)?;
    b.cnot(2, 5, 6, m)?;
    b.cnot(3, 5, 2, 1)?;
    let (records, _) = b.measure_batch(4, &[(2, Basis::Z)], true)?;
    b.ctrl_x(5, 4, ClassicalParity::of(records[0], 1))?;
    b.ctrl_x(5, 6, ClassicalParity::of(records[0], 1))?;
    let (_, corr) = b.measure_batch(5, &[(5, Basis::X)], true)?;
    b.corrections(6, corr)?;
    Ok(Example { name: "butterfly-out-of-order".into(), circuit: b.finish(), groups: vec![vec![1, 6], vec![3, 4]] })
}

/// The H-shaped six-qubit network 1-2-3-4 with leaves 5 (on 2) and 6 (on
/// 3). Terminating 2 and Z-measuring 3 leaves a GHZ state on 1, 4, 5, 6.
pub fn separation(d: Modulus) -> Example {
    let graph = GraphRef { name: "h-tree".into(), edges: vec![(1, 2), (2, 3), (3, 4), (2, 5), (3, 6)] };
    let mut c = QlncCircuit::new(d).with_graph(graph);
    for q in 1..=6 {
        c.prep(q, if q == 2 || q == 3 { Prep::Plus } else { Prep::Zero });
    }
    c.cnot(1, 2, 1, 1).cnot(1, 3, 4, 1);
    c.cnot(2, 2, 5, 1).cnot(2, 3, 6, 1);
    c.cnot(3, 2, 3, d.neg(1));
    c.push(4, OpKind::Terminate { qubit: 2, record: 0 });
    c.push(5, OpKind::MeasureZ { qubit: 3, record: 1 });
    for q in [4, 6] {
        c.push(6, OpKind::CtrlX { target: q, parity: ClassicalParity::of(1, d.neg(1)) });
    }
    Example { name: "separation".into(), circuit: c, groups: vec![vec![1, 4, 5, 6]] }
}

/// Three chained copies of the four-pair speedup network, linked by two
/// forwarding nodes, with a shared sink `K` where the two halves of one pair
/// meet. The pair ending at `K` is completed by entanglement swapping: `K`
/// is Z-measured and one end gets a classically controlled X.
#[derive(Clone, Debug, Serialize)]
pub struct CompositeSwap {
    pub net: Network,
    pub example: Example,
}

/// Node ids: copy `j ∈ {0,1,2}` uses `10j + 1..=10j + 4` for its left
/// column, `10j + 5..=10j + 8` for its right column, `10j + 9` and
/// `10j + 10` for the shared middle path; 31 and 32 link the copies and 33
/// is the sink `K`.
pub fn composite_swap() -> Result<CompositeSwap, CompileError> {
    let d = Modulus::QUBIT;
    const K: NodeId = 33;
    let mut arcs: Vec<(NodeId, NodeId, u32)> = Vec::new();
    for j in 0..3 {
        let o = 10 * j;
        for i in 1..=4 {
            arcs.push((o + i, o + 9, 1));
            for l in 1..=4 {
                if i != l {
                    arcs.push((o + i, o + 4 + l, d.neg(1)));
                }
            }
            arcs.push((o + 10, o + 4 + i, 1));
        }
        arcs.push((o + 9, o + 10, 1));
    }
    // a: 1 → 5 → 31 → 11 → 15; e: 12 → 16 → 32 → 21 → 25; b: 2 → 6 → K ← 26 ← 22
    arcs.extend([(5, 31, 1), (31, 11, 1), (16, 32, 1), (32, 21, 1), (6, K, 1), (26, K, d.neg(1))]);

    let transmitters = [1, 2, 3, 4, 12, 13, 14, 22, 23, 24];
    let relays = [5, 6, 9, 10, 11, 16, 19, 20, 21, 26, 29, 30, 31, 32];
    let receivers = [7, 8, 15, 17, 18, 25, 27, 28, K];
    let groups: Vec<Vec<QubitId>> = vec![
        vec![1, 15],
        vec![2, 22],
        vec![3, 7],
        vec![4, 8],
        vec![12, 25],
        vec![13, 17],
        vec![14, 18],
        vec![23, 27],
        vec![24, 28],
    ];

    let mut net = Network::new("composite-swap", d);
    for &q in &transmitters {
        net.node(q, Role::Transmitter);
    }
    for &q in &relays {
        net.node(q, Role::Relay);
    }
    for &q in &receivers {
        net.node(q, Role::Receiver);
    }
    for &(u, v, _) in &arcs {
        net.arc(u, v);
    }
    for g in &groups {
        net.group(g[0], &g[1..]);
    }
    net.classical_complete = true;
    net.check_structure()?;

    let plain: Vec<(NodeId, NodeId)> = arcs.iter().map(|&(u, v, _)| (u, v)).collect();
    let order = net.topological_order(&plain)?;
    let weight = |u: NodeId, v: NodeId| arcs.iter().find(|a| a.0 == u && a.1 == v).unwrap().2;

    let mut b = Builder::new(d, net.graph_ref());
    let tx: BTreeSet<NodeId> = transmitters.into_iter().collect();
    for q in net.node_ids() {
        b.prep(0, q, if tx.contains(&q) { Prep::Plus } else { Prep::Zero })?;
    }
    let mut last = 0;
    for (t, u, v) in list_schedule(&plain, &order) {
        b.cnot(t, u, v, weight(u, v))?;
        last = last.max(t);
    }
    let mut items: Vec<(QubitId, Basis)> = relays.iter().map(|&q| (q, Basis::X)).collect();
    items.push((K, Basis::Z));
    let (records, corr) = b.measure_batch(last + 1, &items, true)?;
    b.corrections(last + 2, corr)?;
    b.ctrl_x(last + 2, 22, ClassicalParity::of(*records.last().unwrap(), 1))?;

    Ok(CompositeSwap {
        net,
        example: Example { name: "composite-swap".into(), circuit: b.finish(), groups },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{verify_circuit, BranchMode, OracleChoice};

    #[test]
    fn out_of_order_butterfly_is_valid_and_shallow() {
        let ex = out_of_order_butterfly(Modulus::QUBIT).unwrap();
        assert!(ex.circuit.validate().is_empty());
        assert_eq!(ex.circuit.quantum_depth(), 7);
        assert_eq!(ex.circuit.random_measurement_count().unwrap(), 2);
    }

    #[test]
    fn separation_gives_ghz4() {
        for d in [2, 3] {
            let ex = separation(Modulus::new(d).unwrap());
            let rep = verify_circuit(&ex.circuit, &ex.groups, BranchMode::Exhaustive, OracleChoice::Auto).unwrap();
            assert!(rep.pass, "{:?}", rep.first_failure);
        }
    }

    #[test]
    fn composite_swap_has_no_linear_code_shape() {
        let cs = composite_swap().unwrap();
        // the b pair starts and ends at transmitters
        assert_eq!(cs.net.role(22), Some(Role::Transmitter));
        assert!(!cs.net.role_violations(&crate::network::LinearCode::broadcast()).is_empty());
        assert_eq!(cs.example.circuit.qubits().len(), 33);
        assert!(cs.example.circuit.validate().is_empty());
    }

    #[test]
    fn composite_swap_sampled_branches() {
        let cs = composite_swap().unwrap();
        let ex = &cs.example;
        let rep = verify_circuit(&ex.circuit, &ex.groups, BranchMode::Sample { count: 32, seed: 5 }, OracleChoice::Auto)
            .unwrap();
        assert!(rep.pass, "{:?}", rep.branches.iter().find(|b| !b.pass));
        assert_eq!(rep.random_measurements, 15);
    }

    #[test]
    fn hand_built_examples_are_collapse_free() {
        let d = Modulus::QUBIT;
        let cs = composite_swap().unwrap();
        for ex in [out_of_order_butterfly(d).unwrap(), separation(d), cs.example] {
            let w = crate::compiler::check_independence(&ex.circuit, &ex.groups).unwrap();
            assert!(w.verdict, "{}: {w:?}", ex.name);
        }
    }
}
