#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use impedance_diffusion::netmodel::{
    build_laplacian, Edge, LineParams, NetworkDocument, Node, NodeRole, PowerNetwork,
};

pub const OMEGA: f64 = 2.0 * std::f64::consts::PI * 50.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus extra edges with probability `p`, lengths in
/// [1, 10], every node a source with the given outputs.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: f64,
    r: f64,
    l: f64,
    r_out: f64,
    l_out: f64,
) -> PowerNetwork {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    PowerNetwork::new(NetworkDocument {
        frequency_rad_s: OMEGA,
        line: LineParams {
            r_per_len: r,
            l_per_len: l,
            length_unit: "pu".into(),
        },
        nodes: (1..=n as u32)
            .map(|id| Node {
                id,
                role: NodeRole::Source,
                r_out,
                l_out,
            })
            .collect(),
        edges: edges
            .into_iter()
            .map(|(a, b)| Edge {
                a: a as u32 + 1,
                b: b as u32 + 1,
                length: rng.gen_range(1.0..10.0),
            })
            .collect(),
    })
    .expect("generated network is valid")
}

pub fn random_laplacian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    build_laplacian(&random_network(rng, n, 0.3, 1.0, 1e-3, 0.0, 0.0)).into_matrix()
}

/// Complete graph on `n` nodes, all lengths `tau`.
pub fn complete(n: u32, tau: f64, r: f64, l: f64, r_out: f64, l_out: f64) -> PowerNetwork {
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            edges.push(Edge { a, b, length: tau });
        }
    }
    PowerNetwork::new(NetworkDocument {
        frequency_rad_s: OMEGA,
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

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
