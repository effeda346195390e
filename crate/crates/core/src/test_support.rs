use crate::netmodel::{Edge, LineParams, NetworkDocument, Node, NodeRole, PowerNetwork};

pub(crate) const OMEGA_50HZ: f64 = 2.0 * std::f64::consts::PI * 50.0;

fn network(n: u32, edges: Vec<Edge>, r: f64, l: f64, r_out: f64, l_out: f64) -> PowerNetwork {
    PowerNetwork::new(NetworkDocument {
        frequency_rad_s: OMEGA_50HZ,
        line: LineParams {
            r_per_len: r,
            l_per_len: l,
            length_unit: "pu".into(),
        },
        nodes: (1..=n)
            .map(|id| Node {
                id,
                role: NodeRole::Source,
                r_out,
                l_out,
            })
            .collect(),
        edges,
    })
    .unwrap()
}

/// Path 1–2–…–(k+1) with the given segment lengths, all nodes sources.
pub(crate) fn path_graph(lengths: &[f64], r: f64, l: f64, r_out: f64, l_out: f64) -> PowerNetwork {
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(k, &length)| Edge {
            a: k as u32 + 1,
            b: k as u32 + 2,
            length,
        })
        .collect();
    network(lengths.len() as u32 + 1, edges, r, l, r_out, l_out)
}

pub(crate) fn complete_graph(
    n: u32,
    tau: f64,
    r: f64,
    l: f64,
    r_out: f64,
    l_out: f64,
) -> PowerNetwork {
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            edges.push(Edge { a, b, length: tau });
        }
    }
    network(n, edges, r, l, r_out, l_out)
}

/// Leaves 1..=k joined to a center node k+1.
pub(crate) fn star_graph(lengths: &[f64], r: f64, l: f64) -> PowerNetwork {
    let center = lengths.len() as u32 + 1;
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(k, &length)| Edge {
            a: k as u32 + 1,
            b: center,
            length,
        })
        .collect();
    network(center, edges, r, l, 0.0, 0.0)
}
