use super::*;
use crate::coloring::{directed_edge_coloring, greedy_vertex_coloring};
use crate::field::Modulus;
use crate::network::{butterfly, chain, directed_speedup, grid, multicast_tree, single_edge, LinearCode, Role};
use crate::verify::{verify_circuit, BranchMode, OracleChoice};

fn q() -> Modulus {
    Modulus::QUBIT
}

fn assert_exact(c: &Compiled) {
    let rep = verify_circuit(&c.circuit, &c.groups, BranchMode::Exhaustive, OracleChoice::Auto).unwrap();
    assert!(rep.pass, "failing branch {:?}: {:?}", rep.first_failure, rep.branches.iter().find(|b| !b.pass));
    assert!(rep.canonical_agree);
    let w = check_independence(&c.circuit, &c.groups).unwrap();
    assert!(w.verdict, "{w:?}");
}

#[test]
fn depth_bound_formula() {
    assert_eq!(depth_bound(2, 3), 9);
    assert_eq!(depth_bound(2, 4), 11);
    for delta in 1..6 {
        assert!(depth_bound(4, delta + 1) <= 2 * 3 * (delta as usize + 2) + 1);
    }
}

#[test]
fn inorder_butterfly() {
    let (net, code) = butterfly(q()).unwrap();
    let c = compile_inorder(&net, &code).unwrap();
    assert!(c.circuit.validate().is_empty());
    assert_eq!(c.circuit.random_measurement_count().unwrap(), 2);
    assert_exact(&c);
}

#[test]
fn inorder_chain_and_speedup() {
    for l in 1..5 {
        let (net, code) = chain(l, q()).unwrap();
        assert_exact(&compile_inorder(&net, &code).unwrap());
    }
    let (net, code) = directed_speedup(3, q()).unwrap();
    assert_exact(&compile_inorder(&net, &code).unwrap());
}

#[test]
fn inorder_grid_three_streams() {
    let (net, code) = grid(4, 3, q()).unwrap();
    let c = compile_inorder(&net, &code).unwrap();
    assert_eq!(c.groups.len(), 3);
    assert_exact(&c);
}

#[test]
fn constdepth_butterfly_two_colors() {
    let (net, code) = butterfly(q()).unwrap();
    let vc = greedy_vertex_coloring(&net.node_ids(), &net.undirected_edges());
    assert_eq!(vc.max_color(), 2);
    let ec = directed_edge_coloring(&net.active_edges(&code));
    assert!(ec.max_color() <= 3);
    let c = compile_constant_depth(&net, &code, &vc, &ec).unwrap();
    assert!(c.depth() <= 9, "depth {}", c.depth());
    assert!(c.depth() <= c.bound().unwrap());
    assert_exact(&c);
}

#[test]
fn constdepth_single_edge() {
    let (net, code) = single_edge(q()).unwrap();
    let c = compile_constant_depth_auto(&net, &code).unwrap();
    assert!(c.depth() <= 3);
    assert_exact(&c);
}

#[test]
fn constdepth_three_and_four_colors() {
    let (net, code) = directed_speedup(4, q()).unwrap();
    let ec = directed_edge_coloring(&net.active_edges(&code));
    // transmitters 1, receivers 2, relay 9 gets 3 and relay 10 gets 1 or 4
    for ten in [1, 4] {
        let colors = (1..=10).map(|n| (n, match n {
            1..=4 => 1,
            5..=8 => 2,
            9 => 3,
            _ => ten,
        }));
        let vc = crate::coloring::VertexColoring { colors: colors.collect() };
        let c = compile_constant_depth(&net, &code, &vc, &ec).unwrap();
        assert_eq!(c.a(), Some(ten.max(3)));
        assert!(c.depth() <= c.bound().unwrap(), "depth {} bound {:?}", c.depth(), c.bound());
        assert_exact(&c);
    }
}

#[test]
fn constdepth_chains_with_every_coloring() {
    // all 2- and 3-colorings of a 5-node path exercise every relay kind
    let (net, code) = chain(4, q()).unwrap();
    let ec = directed_edge_coloring(&net.active_edges(&code));
    for mask in 0..243u32 {
        let colors: Vec<u32> = (0..5).map(|i| (mask / 3u32.pow(i)) % 3 + 1).collect();
        if colors.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let vc = crate::coloring::VertexColoring { colors: (1..=5).zip(colors.iter().copied()).collect() };
        let c = compile_constant_depth(&net, &code, &vc, &ec).unwrap();
        assert!(c.depth() <= c.bound().unwrap(), "{colors:?}");
        assert_exact(&c);
    }
}

#[test]
fn constdepth_qudits() {
    for d in [3, 5] {
        let d = Modulus::new(d).unwrap();
        let (net, code) = butterfly(d).unwrap();
        assert_exact(&compile_constant_depth_auto(&net, &code).unwrap());
        let (net, code) = multicast_tree(d).unwrap();
        assert_exact(&compile_constant_depth_auto(&net, &code).unwrap());
        assert_exact(&compile_inorder(&net, &code).unwrap());
        let (net, code) = directed_speedup(3, d).unwrap();
        assert_exact(&compile_constant_depth_auto(&net, &code).unwrap());
    }
}

#[test]
fn constdepth_grid_family() {
    for (w, h) in [(3, 2), (6, 2), (3, 4), (4, 3), (7, 3)] {
        let (net, code) = grid(w, h, q()).unwrap();
        let c = compile_constant_depth_auto(&net, &code).unwrap();
        assert_eq!(c.a(), Some(2));
        assert!(c.depth() <= 9, "{w}x{h}: depth {}", c.depth());
        let rep = verify_circuit(&c.circuit, &c.groups, BranchMode::Sample { count: 64, seed: 3 }, OracleChoice::Tableau)
            .unwrap();
        assert!(rep.pass, "{w}x{h}");
        assert!(check_independence(&c.circuit, &c.groups).unwrap().verdict);
    }
}

#[test]
fn constdepth_rejects_improper_coloring() {
    let (net, code) = butterfly(q()).unwrap();
    let vc = crate::coloring::VertexColoring { colors: net.node_ids().into_iter().map(|n| (n, 1)).collect() };
    let ec = directed_edge_coloring(&net.active_edges(&code));
    assert!(matches!(compile_constant_depth(&net, &code, &vc, &ec), Err(CompileError::Coloring(_))));
}

#[test]
fn preconditions_are_listed() {
    let (mut net, code) = butterfly(q()).unwrap();
    net.nodes.iter_mut().find(|n| n.id == 4).unwrap().role = Role::Relay;
    match compile_inorder(&net, &code) {
        Err(CompileError::Preconditions(v)) => assert!(!v.is_empty()),
        other => panic!("expected precondition failure, got {other:?}"),
    }
    // all-ones weights only decode over Z_2
    let (net, _) = butterfly(Modulus::new(3).unwrap()).unwrap();
    let broken = LinearCode::broadcast();
    assert!(matches!(compile_inorder(&net, &broken), Err(CompileError::InvalidCode)));
}

#[test]
fn chain_single_pair() {
    let (net, _) = chain(4, q()).unwrap();
    let c = compile_chain_sequential(q(), &net.graph_ref(), &[(1, 5)]).unwrap();
    assert!(c.depth() <= 5, "depth {}", c.depth());
    assert_exact(&c);
}

#[test]
fn chain_crossing_pairs() {
    // plus shape: centre 5 with arms 1-2-5-3-4 and 6-7-5-8-9
    let graph = GraphRef {
        name: "plus".into(),
        edges: vec![(1, 2), (2, 5), (5, 3), (3, 4), (6, 7), (7, 5), (5, 8), (8, 9)],
    };
    let c = compile_chain_sequential(q(), &graph, &[(1, 4), (6, 9)]).unwrap();
    assert_eq!(c.batches, Some(2));
    assert!(c.depth() <= 9, "depth {}", c.depth());
    assert_exact(&c);
    let c3 = compile_chain_sequential(Modulus::new(3).unwrap(), &graph, &[(1, 4), (6, 9)]).unwrap();
    assert_exact(&c3);
}

#[test]
fn chain_lengths_and_parities() {
    for l in 1..7 {
        for d in [2, 3] {
            let d = Modulus::new(d).unwrap();
            let (net, _) = chain(l, d).unwrap();
            let c = compile_chain_sequential(d, &net.graph_ref(), &[(1, l + 1)]).unwrap();
            assert!(c.depth() <= 5);
            assert_exact(&c);
        }
    }
}

#[test]
fn chain_disconnected() {
    let graph = GraphRef { name: "two".into(), edges: vec![(1, 2), (3, 4)] };
    assert!(matches!(
        compile_chain_sequential(q(), &graph, &[(1, 4)]),
        Err(CompileError::Disconnected(1, 4))
    ));
}

use crate::circuit::GraphRef;
