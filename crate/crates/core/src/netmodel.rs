//! Power network model: nodes with output impedances, lines with physical
//! lengths, and the incidence / weighted Laplacian matrices built from them.
//!
//! Line parameters are given per unit length in whatever length unit the
//! document declares. Edge weights are inverse lengths, so the Laplacian (and
//! every eigenvalue derived from it) is expressed in `1 / length_unit`. The
//! products that enter the measures (`r / λ`, `ℓ / λ`) do not depend on the
//! unit choice.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Source,
    Load,
}

/// A network node. `r_out` (ohm) and `l_out` (henry) are the output
/// impedance in series between the inverter and its grid connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub role: NodeRole,
    pub r_out: f64,
    pub l_out: f64,
}

/// An undirected line between nodes `a` and `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub length: f64,
}

/// Per-length line parameters shared by every line of a homogeneous network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    /// ohm per length unit
    pub r_per_len: f64,
    /// henry per length unit
    pub l_per_len: f64,
    pub length_unit: String,
}

/// Raw on-disk form of a network. No invariants are enforced here; convert
/// into a [`PowerNetwork`] to validate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub frequency_rad_s: f64,
    pub line: LineParams,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// A validated, immutable power network.
///
/// Node `i` of every matrix built from the network is `nodes()[i]`, i.e. the
/// order of the source document is preserved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct PowerNetwork {
    doc: NetworkDocument,
    index: HashMap<u32, usize>,
}

impl TryFrom<NetworkDocument> for PowerNetwork {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        PowerNetwork::new(doc)
    }
}

impl From<PowerNetwork> for NetworkDocument {
    fn from(net: PowerNetwork) -> Self {
        net.doc
    }
}

fn positive_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be positive and finite, got {value}"),
        ))
    }
}

fn nonnegative_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be nonnegative and finite, got {value}"),
        ))
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl PowerNetwork {
    /// Validates a document and wraps it.
    pub fn new(doc: NetworkDocument) -> Result<Self> {
        positive_finite("frequency_rad_s", doc.frequency_rad_s)?;
        positive_finite("line.r_per_len", doc.line.r_per_len)?;
        positive_finite("line.l_per_len", doc.line.l_per_len)?;
        if doc.line.length_unit.trim().is_empty() {
            return Err(Error::validation("line.length_unit", "must not be empty"));
        }
        if doc.nodes.len() < 2 {
            return Err(Error::validation(
                "nodes",
                format!("a network needs at least 2 nodes, got {}", doc.nodes.len()),
            ));
        }

        let mut index = HashMap::with_capacity(doc.nodes.len());
        for (i, node) in doc.nodes.iter().enumerate() {
            if index.insert(node.id, i).is_some() {
                return Err(Error::validation(
                    format!("nodes[{i}].id"),
                    format!("duplicate node id {}", node.id),
                ));
            }
            nonnegative_finite(&format!("nodes[id={}].r_out", node.id), node.r_out)?;
            nonnegative_finite(&format!("nodes[id={}].l_out", node.id), node.l_out)?;
        }

        let mut seen = HashMap::with_capacity(doc.edges.len());
        let mut components = DisjointSet::new(doc.nodes.len());
        for (k, edge) in doc.edges.iter().enumerate() {
            positive_finite(&format!("edges[{k}].length"), edge.length)?;
            if edge.a == edge.b {
                return Err(Error::validation(
                    format!("edges[{k}]"),
                    format!("self-loop on node {}", edge.a),
                ));
            }
            let ia = *index.get(&edge.a).ok_or_else(|| {
                Error::validation(
                    format!("edges[{k}].a"),
                    format!("unknown node id {}", edge.a),
                )
            })?;
            let ib = *index.get(&edge.b).ok_or_else(|| {
                Error::validation(
                    format!("edges[{k}].b"),
                    format!("unknown node id {}", edge.b),
                )
            })?;
            let key = (edge.a.min(edge.b), edge.a.max(edge.b));
            if let Some(first) = seen.insert(key, k) {
                return Err(Error::validation(
                    format!("edges[{k}]"),
                    format!(
                        "duplicates edges[{first}] between nodes {} and {}",
                        key.0, key.1
                    ),
                ));
            }
            components.union(ia, ib);
        }

        let root = components.find(0);
        for (i, node) in doc.nodes.iter().enumerate() {
            if components.find(i) != root {
                return Err(Error::validation(
                    format!("nodes[id={}]", node.id),
                    format!("not connected to node {}", doc.nodes[0].id),
                ));
            }
        }

        Ok(PowerNetwork { doc, index })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        PowerNetwork::new(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        PowerNetwork::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("network document always serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn document(&self) -> &NetworkDocument {
        &self.doc
    }

    pub fn n(&self) -> usize {
        self.doc.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.doc.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.doc.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.doc.edges
    }

    pub fn line(&self) -> &LineParams {
        &self.doc.line
    }

    pub fn r(&self) -> f64 {
        self.doc.line.r_per_len
    }

    pub fn l(&self) -> f64 {
        self.doc.line.l_per_len
    }

    pub fn omega(&self) -> f64 {
        self.doc.frequency_rad_s
    }

    pub fn node_ids(&self) -> Vec<u32> {
        self.doc.nodes.iter().map(|n| n.id).collect()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Maps node ids to matrix indices, failing on the first unknown id.
    pub fn indices_of(&self, ids: &[u32]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.index_of(id)
                    .ok_or_else(|| Error::validation("sources", format!("unknown node id {id}")))
            })
            .collect()
    }

    /// Indices of nodes whose role is [`NodeRole::Source`].
    pub fn source_indices(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.doc.nodes[i].role == NodeRole::Source)
            .collect()
    }

    pub fn output_resistances(&self) -> Vec<f64> {
        self.doc.nodes.iter().map(|n| n.r_out).collect()
    }

    pub fn output_inductances(&self) -> Vec<f64> {
        self.doc.nodes.iter().map(|n| n.l_out).collect()
    }

    /// True if the undirected edge {a, b} (node ids) exists.
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.doc
            .edges
            .iter()
            .any(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    fn modified(&self, f: impl FnOnce(&mut NetworkDocument)) -> Result<Self> {
        let mut doc = self.doc.clone();
        f(&mut doc);
        PowerNetwork::new(doc)
    }

    pub fn with_frequency(&self, omega: f64) -> Result<Self> {
        self.modified(|d| d.frequency_rad_s = omega)
    }

    /// Overrides output resistance and/or inductance on every node.
    pub fn with_uniform_outputs(&self, r_out: Option<f64>, l_out: Option<f64>) -> Result<Self> {
        self.modified(|d| {
            for node in &mut d.nodes {
                if let Some(r) = r_out {
                    node.r_out = r;
                }
                if let Some(l) = l_out {
                    node.l_out = l;
                }
            }
        })
    }

    pub fn with_output_inductances(&self, l_out: &[f64]) -> Result<Self> {
        self.check_len(l_out.len())?;
        self.modified(|d| {
            d.nodes
                .iter_mut()
                .zip(l_out)
                .for_each(|(n, &l)| n.l_out = l)
        })
    }

    pub fn with_output_resistances(&self, r_out: &[f64]) -> Result<Self> {
        self.check_len(r_out.len())?;
        self.modified(|d| {
            d.nodes
                .iter_mut()
                .zip(r_out)
                .for_each(|(n, &r)| n.r_out = r)
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} node values", self.n()),
                got: len.to_string(),
            });
        }
        Ok(())
    }

    /// Re-expresses lengths and per-length parameters in another known unit
    /// (`m`, `km`, `ft`, `kft`, `mile`). Per-unit (`pu`) networks cannot be
    /// converted.
    pub fn convert_length_unit(&self, target: &str) -> Result<Self> {
        let from = meters_per_unit(&self.doc.line.length_unit).ok_or_else(|| {
            Error::validation(
                "line.length_unit",
                format!("cannot convert from unit '{}'", self.doc.line.length_unit),
            )
        })?;
        let to = meters_per_unit(target)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown length unit '{target}'")))?;
        let factor = from / to;
        self.modified(|d| {
            d.line.length_unit = target.to_string();
            d.line.r_per_len /= factor;
            d.line.l_per_len /= factor;
            for e in &mut d.edges {
                e.length *= factor;
            }
        })
    }
}

/// Meters per length unit for the unit labels the library knows about.
pub fn meters_per_unit(label: &str) -> Option<f64> {
    match label.trim().to_ascii_lowercase().as_str() {
        "m" | "meter" | "metre" => Some(1.0),
        "km" => Some(1000.0),
        "ft" | "foot" | "feet" => Some(0.3048),
        "kft" => Some(304.8),
        "mi" | "mile" | "miles" => Some(1609.344),
        _ => None,
    }
}

/// Parses and validates a JSON network document.
pub fn load_network(document: &str) -> Result<PowerNetwork> {
    PowerNetwork::from_json_str(document)
}

/// Node-by-edge incidence matrix with entries in {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrix {
    matrix: DMatrix<f64>,
    orientation: Vec<(usize, usize)>,
}

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `(tail, head)` node indices for every edge, in edge order.
    pub fn orientation(&self) -> &[(usize, usize)] {
        &self.orientation
    }
}

/// Builds the incidence matrix. Each edge is oriented from the endpoint with
/// the smaller node id (tail, +1) to the larger one (head, -1).
pub fn build_incidence(net: &PowerNetwork) -> IncidenceMatrix {
    let mut matrix = DMatrix::zeros(net.n(), net.m());
    let mut orientation = Vec::with_capacity(net.m());
    for (k, e) in net.edges().iter().enumerate() {
        let (tail_id, head_id) = (e.a.min(e.b), e.a.max(e.b));
        let tail = net.index[&tail_id];
        let head = net.index[&head_id];
        matrix[(tail, k)] = 1.0;
        matrix[(head, k)] = -1.0;
        orientation.push((tail, head));
    }
    IncidenceMatrix {
        matrix,
        orientation,
    }
}

/// `L = B Γ Bᵀ` together with the weights `γ_k = 1 / τ_k` and the incidence
/// matrix it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedLaplacian {
    matrix: DMatrix<f64>,
    weights: DVector<f64>,
    incidence: IncidenceMatrix,
}

impl WeightedLaplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

pub fn build_laplacian(net: &PowerNetwork) -> WeightedLaplacian {
    let incidence = build_incidence(net);
    let weights = DVector::from_iterator(net.m(), net.edges().iter().map(|e| 1.0 / e.length));
    let b = incidence.matrix();
    let mut matrix = b * DMatrix::from_diagonal(&weights) * b.transpose();
    // B Γ Bᵀ is symmetric in exact arithmetic; make it so bitwise.
    for i in 0..matrix.nrows() {
        for j in 0..i {
            let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    WeightedLaplacian {
        matrix,
        weights,
        incidence,
    }
}

/// Checks the Laplacian invariants on an arbitrary dense matrix: square,
/// symmetric, zero row sums and nonpositive off-diagonal entries, each up to
/// `tol` relative to the largest diagonal entry.
pub fn check_laplacian(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: "nonempty square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = (0..m.nrows())
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        let row_sum: f64 = m.row(i).iter().sum();
        if row_sum.abs() > tol * scale {
            return Err(Error::validation(
                "laplacian",
                format!("row {i} sums to {row_sum:e}"),
            ));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return Err(Error::NotSymmetric {
                    asymmetry: (m[(i, j)] - m[(j, i)]).abs(),
                });
            }
            if m[(i, j)] > tol * scale {
                return Err(Error::validation(
                    "laplacian",
                    format!("positive off-diagonal entry {:e} at ({i}, {j})", m[(i, j)]),
                ));
            }
        }
    }
    Ok(())
}
