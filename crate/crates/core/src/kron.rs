//! Kron reduction onto source nodes.
//!
//! The real reduction eliminates constant-current load nodes from the
//! Laplacian. The phasor reduction folds uniform output inductors and the
//! lines into a complex admittance matrix between the internal terminals of
//! the sources, whose off-diagonal entries define equivalent (possibly
//! virtual) lines.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{build_laplacian, PowerNetwork};

/// Result of eliminating every node outside `sources`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedLaplacian {
    matrix: DMatrix<f64>,
    sources: Vec<usize>,
    eliminated: Vec<usize>,
    offset: Option<DVector<f64>>,
}

impl ReducedLaplacian {
    /// `L_red = L_SS − L_SL L_LL⁻¹ L_LS`, indexed like [`Self::sources`].
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Original indices of the kept nodes, in reduced order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Original indices of the eliminated nodes.
    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    /// Reduced index of an original node, if it was kept.
    pub fn reduced_index(&self, original: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == original)
    }

    /// `−r·L_SL L_LL⁻¹ I_L*`, present when load currents were supplied.
    pub fn offset(&self) -> Option<&DVector<f64>> {
        self.offset.as_ref()
    }

    /// True when every node was a source, so the reduction is the identity.
    pub fn is_identity(&self) -> bool {
        self.eliminated.is_empty()
    }
}

fn check_subset(n: usize, sources: &[usize]) -> Result<Vec<bool>> {
    if sources.is_empty() {
        return Err(Error::validation("sources", "source set is empty"));
    }
    let mut keep = vec![false; n];
    for &s in sources {
        if s >= n {
            return Err(Error::validation(
                "sources",
                format!("index {s} out of range for {n} nodes"),
            ));
        }
        if keep[s] {
            return Err(Error::validation(
                "sources",
                format!("index {s} listed twice"),
            ));
        }
        keep[s] = true;
    }
    Ok(keep)
}

/// Fails when some eliminated node has no path to a kept node, which makes
/// `L_LL` singular.
fn check_no_islands(
    adjacent: impl Fn(usize, usize) -> bool,
    n: usize,
    keep: &[bool],
) -> Result<()> {
    let mut seen = keep.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| keep[i]).collect();
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && adjacent(i, j) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    let island: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
    if island.is_empty() {
        Ok(())
    } else {
        Err(Error::Singular(format!(
            "eliminated nodes {island:?} form an island without a source"
        )))
    }
}

fn submatrix<T: nalgebra::Scalar + Copy>(
    m: &DMatrix<T>,
    rows: &[usize],
    cols: &[usize],
) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Kron-reduces a Laplacian onto the node indices in `sources`.
///
/// `load` optionally supplies the constant currents `I_L*` drawn at the
/// eliminated nodes (in [`ReducedLaplacian::eliminated`] order) together with
/// the line resistance per length `r`; the offset `−r·L_SL L_LL⁻¹ I_L*` is
/// then returned as well. Keeping every node returns `L` unchanged.
pub fn kron_reduce_real(
    laplacian: &DMatrix<f64>,
    sources: &[usize],
    load: Option<(&[f64], f64)>,
) -> Result<ReducedLaplacian> {
    let n = laplacian.nrows();
    let keep = check_subset(n, sources)?;
    let eliminated: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    if let Some((currents, _)) = load {
        if currents.len() != eliminated.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} load currents", eliminated.len()),
                got: currents.len().to_string(),
            });
        }
    }

    let l_ss = submatrix(laplacian, sources, sources);
    if eliminated.is_empty() {
        return Ok(ReducedLaplacian {
            matrix: l_ss,
            sources: sources.to_vec(),
            eliminated,
            offset: load.map(|_| DVector::zeros(sources.len())),
        });
    }
    check_no_islands(|i, j| i != j && laplacian[(i, j)] != 0.0, n, &keep)?;

    let l_sl = submatrix(laplacian, sources, &eliminated);
    let l_ll = submatrix(laplacian, &eliminated, &eliminated);
    let lu = l_ll.lu();
    let singular = || Error::Singular("load block L_LL".into());
    let x = lu.solve(&l_sl.transpose()).ok_or_else(singular)?;
    let mut matrix = l_ss - &l_sl * x;
    crate::spectral::symmetrize(&mut matrix);
    // zero row sums hold exactly in exact arithmetic; restore them bitwise
    for i in 0..matrix.nrows() {
        let off: f64 = (0..matrix.ncols())
            .filter(|&j| j != i)
            .map(|j| matrix[(i, j)])
            .sum();
        matrix[(i, i)] = -off;
    }

    let offset = match load {
        Some((currents, r)) => {
            let y = lu
                .solve(&DVector::from_column_slice(currents))
                .ok_or_else(singular)?;
            Some(&l_sl * y * (-r))
        }
        None => None,
    };
    Ok(ReducedLaplacian {
        matrix,
        sources: sources.to_vec(),
        eliminated,
        offset,
    })
}

/// Complex admittance matrix between the internal terminals of the sources.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedAdmittance {
    matrix: DMatrix<Complex<f64>>,
    sources: Vec<usize>,
    omega: f64,
    y_out: Complex<f64>,
    y_line: Complex<f64>,
}

impl ReducedAdmittance {
    pub fn matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.matrix
    }

    /// Original indices of the source nodes, in reduced order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `y_o = 1/(jωℓ_o)`.
    pub fn y_out(&self) -> Complex<f64> {
        self.y_out
    }

    /// `y_ℓ = 1/(r + jωℓ)` per unit length.
    pub fn y_line(&self) -> Complex<f64> {
        self.y_line
    }
}

/// Phasor reduction for a bare Laplacian.
///
/// Every node in `sources` connects to its internal voltage through `ℓ_o`;
/// the other nodes carry no injection and are eliminated. With
/// `K = y_o·diag(s) + y_ℓ·L` this gives `Y_red = y_o·I − y_o²·K⁻¹[S, S]`,
/// which for `sources` = all nodes is `y_o[I − (I + (y_ℓ/y_o)L)⁻¹]`.
pub fn phasor_reduce_laplacian(
    laplacian: &DMatrix<f64>,
    r: f64,
    l: f64,
    l_out: f64,
    omega: f64,
    sources: &[usize],
) -> Result<ReducedAdmittance> {
    let n = laplacian.nrows();
    let keep = check_subset(n, sources)?;
    if !(l_out > 0.0 && l_out.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "phasor reduction needs a positive uniform output inductance, got {l_out}"
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    check_no_islands(|i, j| i != j && laplacian[(i, j)] != 0.0, n, &keep)?;

    let j = Complex::new(0.0, 1.0);
    let y_out = Complex::new(1.0, 0.0) / (j * omega * l_out);
    let y_line = Complex::new(1.0, 0.0) / (r + j * omega * l);
    let mut k = laplacian.map(|v| y_line * v);
    for &s in sources {
        k[(s, s)] += y_out;
    }
    let mut rhs = DMatrix::<Complex<f64>>::zeros(n, sources.len());
    for (col, &s) in sources.iter().enumerate() {
        rhs[(s, col)] = Complex::new(1.0, 0.0);
    }
    let solved = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("phasor system at ω = {omega} rad/s")))?;
    let y_o2 = y_out * y_out;
    let mut matrix = DMatrix::from_fn(sources.len(), sources.len(), |a, b| {
        -y_o2 * solved[(sources[a], b)]
    });
    for a in 0..sources.len() {
        matrix[(a, a)] += y_out;
    }
    // K is complex symmetric, so is Y_red
    for a in 0..sources.len() {
        for b in 0..a {
            let v = (matrix[(a, b)] + matrix[(b, a)]) * 0.5;
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
        }
    }
    Ok(ReducedAdmittance {
        matrix,
        sources: sources.to_vec(),
        omega,
        y_out,
        y_line,
    })
}

/// Phasor reduction of a network onto `sources` (node indices), or onto every
/// node when `None`. The sources must share one positive output inductance
/// and have no output resistance.
pub fn phasor_reduce(net: &PowerNetwork, sources: Option<&[usize]>) -> Result<ReducedAdmittance> {
    let all: Vec<usize> = (0..net.n()).collect();
    let sources = sources.unwrap_or(&all);
    check_subset(net.n(), sources)?;
    let r_out = net.output_resistances();
    let l_out = net.output_inductances();
    let l0 = l_out[sources[0]];
    for &s in sources {
        let id = net.nodes()[s].id;
        if r_out[s] != 0.0 {
            return Err(Error::validation(
                format!("nodes[id={id}].r_out"),
                "phasor reduction supports inductive outputs only",
            ));
        }
        if (l_out[s] - l0).abs() > crate::measures::UNIFORM_TOL * l0.abs() {
            return Err(Error::validation(
                format!("nodes[id={id}].l_out"),
                "phasor reduction needs the same output inductance on every source",
            ));
        }
    }
    phasor_reduce_laplacian(
        build_laplacian(net).matrix(),
        net.r(),
        net.l(),
        l0,
        net.omega(),
        sources,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineClass {
    /// The pair is joined by a line of the original network.
    Physical,
    /// A line created by the reduction.
    Virtual,
    /// Branch admittance below `1e-9·max|Y_red|`.
    Absent,
}

/// One equivalent line of a reduced admittance matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineAngle {
    /// Node ids.
    pub i: u32,
    pub j: u32,
    pub class: LineClass,
    /// `−[Y_red]_ij`
    pub admittance: Complex<f64>,
    /// `1 / admittance`
    pub impedance: Complex<f64>,
    /// `atan2(X, R)` of the branch impedance, in `(−π, π]`.
    pub theta: f64,
    /// `arctan(X / R)`, in `(−π/2, π/2)`. Equal for both sign conventions.
    pub theta_principal: f64,
    /// `atan2` of `1/[Y_red]_ij`, i.e. without negating the entry.
    pub theta_entry: f64,
    /// Negative branch resistance or reactance.
    pub non_physical: bool,
}

fn angle(z: Complex<f64>) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Relative threshold for [`LineClass::Absent`].
pub const ABSENT_EDGE_TOL: f64 = 1e-9;

/// Angles and classes of every pair `i < j` of reduced nodes.
pub fn line_angles(red: &ReducedAdmittance, net: &PowerNetwork) -> Vec<LineAngle> {
    let y = red.matrix();
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for a in 0..y.nrows() {
        for b in a + 1..y.ncols() {
            let i = net.nodes()[red.sources()[a]].id;
            let j = net.nodes()[red.sources()[b]].id;
            let admittance = -y[(a, b)];
            let impedance = Complex::new(1.0, 0.0) / admittance;
            let class = if admittance.norm() < ABSENT_EDGE_TOL * scale {
                LineClass::Absent
            } else if net.has_edge(i, j) {
                LineClass::Physical
            } else {
                LineClass::Virtual
            };
            let (theta, theta_principal, theta_entry, non_physical) = if class == LineClass::Absent
            {
                (f64::NAN, f64::NAN, f64::NAN, false)
            } else {
                (
                    angle(impedance),
                    (impedance.im / impedance.re).atan(),
                    angle(-impedance),
                    impedance.re < 0.0 || impedance.im < 0.0,
                )
            };
            rows.push(LineAngle {
                i,
                j,
                class,
                admittance,
                impedance,
                theta,
                theta_principal,
                theta_entry,
                non_physical,
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct AngleRow {
    i: u32,
    j: u32,
    class: LineClass,
    #[serde(rename = "R_branch")]
    r_branch: f64,
    #[serde(rename = "X_branch")]
    x_branch: f64,
    theta_rad: f64,
}

/// Writes `i,j,class,R_branch,X_branch,theta_rad` rows.
pub fn write_angle_csv<W: Write>(rows: &[LineAngle], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(AngleRow {
                i: row.i,
                j: row.j,
                class: row.class,
                r_branch: row.impedance.re,
                x_branch: row.impedance.im,
                theta_rad: row.theta,
            })
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}
