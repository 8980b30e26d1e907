//! Built-in networks and hand-built circuits, addressable by name.

use anyhow::{bail, Result};
use qlnc::examples::{composite_swap, out_of_order_butterfly, separation, Example};
use qlnc::network::{butterfly, chain, directed_speedup, grid, multicast_tree, single_edge, LinearCode, Network};
use qlnc::Modulus;

pub const NAMES: &[&str] = &[
    "butterfly",
    "butterfly-out-of-order",
    "separation",
    "grid",
    "speedup",
    "chain",
    "multicast",
    "single-edge",
    "composite-swap",
];

/// Size parameters for the parameterised families.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub width: u32,
    pub height: u32,
    pub k: u32,
    pub length: u32,
}

pub enum Entry {
    /// A network with a linear code, compiled by one of the schedules.
    Coded(Network, LinearCode),
    /// A fixed circuit; `net` is set when the example has a network view.
    Circuit { example: Example, net: Option<Network> },
}

pub fn lookup(name: &str, d: Modulus, p: Params) -> Result<Entry> {
    let coded = |r: Result<(Network, LinearCode), qlnc::network::NetworkError>| -> Result<Entry> {
        let (n, c) = r?;
        Ok(Entry::Coded(n, c))
    };
    match name {
        "butterfly" => coded(butterfly(d)),
        "grid" => coded(grid(p.width, p.height, d)),
        "speedup" => coded(directed_speedup(p.k, d)),
        "chain" => coded(chain(p.length, d)),
        "multicast" => coded(multicast_tree(d)),
        "single-edge" => coded(single_edge(d)),
        "butterfly-out-of-order" => Ok(Entry::Circuit { example: out_of_order_butterfly(d)?, net: None }),
        "separation" => Ok(Entry::Circuit { example: separation(d), net: None }),
        "composite-swap" => {
            if d != Modulus::QUBIT {
                bail!("composite-swap is defined for d = 2 only");
            }
            let cs = composite_swap()?;
            Ok(Entry::Circuit { example: cs.example, net: Some(cs.net) })
        }
        other => bail!("unknown example {other:?}; known: {}", NAMES.join(", ")),
    }
}
