//! Network inductivity and resistivity ratios.
//!
//! With output impedances attached, the nodal currents obey
//! `R·I + L_m·İ = L·V_o`. The homogeneous solution decays with the
//! eigenvalues of `L_m⁻¹ R` restricted to the zero-sum subspace `1⊥`. The
//! inductivity ratio `Ψ_NIR` is the reciprocal of the fastest guaranteed
//! decay rate, the resistivity ratio `Ψ_NRR` is the slowest one.
//!
//! For uniform outputs (`r_o`, `ℓ_o` on every node) the restricted decay
//! rates are `(r_o·λ_i + r) / (ℓ_o·λ_i + ℓ)` over the Laplacian eigenvalues
//! `λ_2 … λ_n`. This function of `λ` is monotone, so only `λ_2` and `λ_max`
//! matter; which one gives the fastest rate depends on the sign of
//! `r_o/ℓ_o − r/ℓ`.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kron::kron_reduce_real;
use crate::netmodel::{build_laplacian, PowerNetwork};
use crate::spectral::{algebraic_connectivity, eig_general, eig_product, eig_symmetric};

/// Relative spread below which per-node output values count as equal.
pub const UNIFORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Uniform,
    Nonuniform,
}

/// `R` and `L_m` of `R·I + L_m·İ = L·V_o`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDynamics {
    resistance: DMatrix<f64>,
    inductance: DMatrix<f64>,
    mode: OutputMode,
    laplacian: DMatrix<f64>,
    r: f64,
    l: f64,
    r_out: Vec<f64>,
    l_out: Vec<f64>,
}

/// True when all values agree to within [`UNIFORM_TOL`] relative spread.
pub fn is_uniform(values: &[f64]) -> bool {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.is_empty() || max - min <= UNIFORM_TOL * max.abs().max(min.abs())
}

impl AugmentedDynamics {
    /// Assembles the dynamics for an arbitrary Laplacian (e.g. a Kron-reduced
    /// one) with line parameters `r`, `l` and per-node output values.
    ///
    /// Uniform outputs give `R = r_o·L + r·I`, `L_m = ℓ_o·L + ℓ·I`; otherwise
    /// `R = r·I + L·D_r`, `L_m = ℓ·I + L·D_ℓ`.
    pub fn from_laplacian(
        laplacian: &DMatrix<f64>,
        r: f64,
        l: f64,
        r_out: &[f64],
        l_out: &[f64],
    ) -> Result<Self> {
        let n = laplacian.nrows();
        if laplacian.ncols() != n || r_out.len() != n || l_out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n} Laplacian with {n} output values"),
                got: format!(
                    "{}x{} with {} / {}",
                    laplacian.nrows(),
                    laplacian.ncols(),
                    r_out.len(),
                    l_out.len()
                ),
            });
        }
        let identity = DMatrix::<f64>::identity(n, n);
        let (mode, resistance, inductance) = if is_uniform(r_out) && is_uniform(l_out) {
            let (ro, lo) = (r_out[0], l_out[0]);
            (
                OutputMode::Uniform,
                laplacian * ro + &identity * r,
                laplacian * lo + &identity * l,
            )
        } else {
            (
                OutputMode::Nonuniform,
                &identity * r + times_diagonal(laplacian, r_out),
                &identity * l + times_diagonal(laplacian, l_out),
            )
        };
        Ok(AugmentedDynamics {
            resistance,
            inductance,
            mode,
            laplacian: laplacian.clone(),
            r,
            l,
            r_out: r_out.to_vec(),
            l_out: l_out.to_vec(),
        })
    }

    pub fn resistance(&self) -> &DMatrix<f64> {
        &self.resistance
    }

    pub fn inductance(&self) -> &DMatrix<f64> {
        &self.inductance
    }

    pub fn mode(&self) -> OutputMode {
        self.mode
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn output_resistances(&self) -> &[f64] {
        &self.r_out
    }

    pub fn output_inductances(&self) -> &[f64] {
        &self.l_out
    }

    pub fn dim(&self) -> usize {
        self.laplacian.nrows()
    }

    /// `L_m⁻¹ R`.
    pub fn decay_matrix(&self) -> Result<DMatrix<f64>> {
        self.inductance
            .clone()
            .lu()
            .solve(&self.resistance)
            .ok_or_else(|| Error::Singular("inductance matrix L_m".into()))
    }

    /// `Qᵀ (L_m⁻¹ R) Q` for an orthonormal basis `Q` of `1⊥`.
    ///
    /// `1ᵀ L_m = ℓ·1ᵀ` and `1ᵀ R = r·1ᵀ`, so `1⊥` is invariant under
    /// `L_m⁻¹ R` and this matrix carries exactly the decay rates of
    /// Kirchhoff-consistent currents.
    pub fn restricted_decay_matrix(&self) -> Result<DMatrix<f64>> {
        let q = zero_sum_basis(self.dim());
        Ok(q.transpose() * self.decay_matrix()? * q)
    }
}

/// `M·diag(d)`.
fn times_diagonal(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(dj);
    }
    out
}

/// Orthonormal (Helmert) basis of the zero-sum subspace, `n × (n−1)`.
pub fn zero_sum_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n.saturating_sub(1), |i, k| {
        let k1 = (k + 1) as f64;
        let scale = 1.0 / (k1 * (k1 + 1.0)).sqrt();
        if i <= k {
            scale
        } else if i == k + 1 {
            -k1 * scale
        } else {
            0.0
        }
    })
}

pub fn assemble_dynamics(net: &PowerNetwork) -> AugmentedDynamics {
    AugmentedDynamics::from_laplacian(
        build_laplacian(net).matrix(),
        net.r(),
        net.l(),
        &net.output_resistances(),
        &net.output_inductances(),
    )
    .expect("network dimensions are consistent")
}

/// Verdict on "all eigenvalues of `L_m⁻¹ R` are real and positive".
#[derive(Clone, Debug, PartialEq)]
pub struct Assumption1Check {
    pub holds: bool,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl Assumption1Check {
    /// The first eigenvalue that breaks the assumption, if any.
    pub fn offender(&self) -> Option<Complex<f64>> {
        let radius = self
            .eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        self.eigenvalues
            .iter()
            .copied()
            .find(|z| z.im.abs() > 1e-8 * radius || z.re <= 0.0)
    }
}

pub fn check_assumption1(dynamics: &AugmentedDynamics) -> Result<Assumption1Check> {
    let mut eigenvalues = eig_general(&dynamics.decay_matrix()?)?;
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut check = Assumption1Check {
        holds: false,
        eigenvalues,
    };
    check.holds = check.offender().is_none();
    Ok(check)
}

/// Which eigenvalue determines `Ψ_NIR`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r_o/ℓ_o < r/ℓ`, or inductive-only non-uniform outputs.
    Lambda2,
    /// `r_o/ℓ_o > r/ℓ` (including purely resistive outputs).
    LambdaMax,
    /// `r_o/ℓ_o = r/ℓ` or no outputs at all: every mode decays at `r/ℓ`.
    Degenerate,
    /// Non-uniform resistors and inductors where the minimizing pair is
    /// neither the second nor the last eigenvalue.
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    /// seconds
    pub psi_nir: f64,
    /// 1/seconds
    pub psi_nrr: f64,
    /// radians, `arctan(ω·Ψ_NIR)`
    pub theta_nir: f64,
    pub omega: f64,
    pub regime: Regime,
    pub mode: OutputMode,
    /// Envelope constant of the lower bound `‖I(t)‖ ≥ μ·e^{−t/Ψ_NIR}·‖I₀‖`.
    pub mu: f64,
    /// Set when some output inductance is zero, so `μ = 0` carries no
    /// information.
    pub mu_degenerate: bool,
    pub assumption1_ok: bool,
    /// The eigenvalue (of `L`, `D·L` or a paired value) that enters `Ψ_NIR`.
    pub lambda_used: f64,
    /// Algebraic connectivity of the (possibly reduced) network Laplacian.
    pub lambda2: f64,
    pub lambda_max: f64,
    /// True when load nodes were Kron-reduced away before the analysis.
    pub kron_reduced: bool,
}

pub fn theta_nir(psi_nir: f64, omega: f64) -> f64 {
    (omega * psi_nir).atan()
}

fn laplacian_extremes(laplacian: &DMatrix<f64>) -> Result<(f64, f64)> {
    let spectrum = eig_symmetric(laplacian)?;
    let lambda2 = algebraic_connectivity(&spectrum)?.value;
    Ok((lambda2, spectrum.max()))
}

/// Decay measures for uniform outputs on an arbitrary Laplacian.
pub fn psi_nir_uniform_from(
    laplacian: &DMatrix<f64>,
    r: f64,
    l: f64,
    r_out: f64,
    l_out: f64,
    omega: f64,
) -> Result<MeasureReport> {
    let (lambda2, lambda_max) = laplacian_extremes(laplacian)?;
    let rate = |lambda: f64| (r_out * lambda + r) / (l_out * lambda + l);

    // compare r_o/ℓ_o with r/ℓ without dividing by a possibly zero ℓ_o
    let lhs = r_out * l;
    let rhs = r * l_out;
    let (regime, psi_nir, psi_nrr, lambda_used) = if (r_out == 0.0 && l_out == 0.0)
        || (lhs - rhs).abs() <= UNIFORM_TOL * lhs.abs().max(rhs.abs())
    {
        (Regime::Degenerate, l / r, r / l, lambda2)
    } else if lhs < rhs {
        (
            Regime::Lambda2,
            1.0 / rate(lambda2),
            rate(lambda_max),
            lambda2,
        )
    } else {
        (
            Regime::LambdaMax,
            1.0 / rate(lambda_max),
            rate(lambda2),
            lambda_max,
        )
    };

    Ok(MeasureReport {
        psi_nir,
        psi_nrr,
        theta_nir: theta_nir(psi_nir, omega),
        omega,
        regime,
        mode: OutputMode::Uniform,
        mu: 1.0,
        mu_degenerate: false,
        // both R and L_m are symmetric positive definite here
        assumption1_ok: true,
        lambda_used,
        lambda2,
        lambda_max,
        kron_reduced: false,
    })
}

/// Measures for per-node outputs `D_r = diag(r_out)`, `D_ℓ = diag(l_out)`.
///
/// Inductive-only outputs use `Ψ_NIR = (λ₂(D_ℓ·L) + ℓ)/r`. With resistors
/// present the eigenvalues of `L·D_ℓ` and `L·D_r` are each sorted ascending,
/// paired by index and `Ψ_NIR = min_i (λ_ℓi + ℓ)/(λ_ri + r)` over `i ≥ 2`.
pub fn psi_nir_nonuniform_from(
    laplacian: &DMatrix<f64>,
    r: f64,
    l: f64,
    r_out: &[f64],
    l_out: &[f64],
    omega: f64,
) -> Result<MeasureReport> {
    let (lambda2, lambda_max) = laplacian_extremes(laplacian)?;
    let dynamics = AugmentedDynamics::from_laplacian(laplacian, r, l, r_out, l_out)?;
    let assumption = check_assumption1(&dynamics)?;
    if let Some(z) = assumption.offender() {
        return Err(Error::Assumption1 { re: z.re, im: z.im });
    }

    let inductive = eig_product(l_out, laplacian)?.spectrum.eigenvalues;
    let n = inductive.len();
    let (regime, psi_nir, psi_nrr, lambda_used) = if r_out.iter().all(|&v| v == 0.0) {
        (
            Regime::Lambda2,
            (inductive[1] + l) / r,
            r / (inductive[n - 1] + l),
            inductive[1],
        )
    } else {
        let resistive = eig_product(r_out, laplacian)?.spectrum.eigenvalues;
        let ratios: Vec<f64> = (1..n)
            .map(|i| (inductive[i] + l) / (resistive[i] + r))
            .collect();
        let (argmin, &psi) = ratios
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("n >= 2");
        let psi_nrr = ratios.iter().map(|v| 1.0 / v).fold(f64::INFINITY, f64::min);
        let index = argmin + 1;
        let regime = if index == 1 {
            Regime::Lambda2
        } else if index == n - 1 {
            Regime::LambdaMax
        } else {
            Regime::Interior
        };
        (regime, psi, psi_nrr, inductive[index])
    };

    let (min_l, max_l) = l_out.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mu = if max_l > 0.0 {
        (min_l / max_l).sqrt()
    } else {
        0.0
    };

    Ok(MeasureReport {
        psi_nir,
        psi_nrr,
        theta_nir: theta_nir(psi_nir, omega),
        omega,
        regime,
        mode: dynamics.mode(),
        mu,
        mu_degenerate: mu == 0.0,
        assumption1_ok: assumption.holds,
        lambda_used,
        lambda2,
        lambda_max,
        kron_reduced: false,
    })
}

/// Dispatches on [`is_uniform`] for an arbitrary Laplacian.
pub fn analyze_laplacian(
    laplacian: &DMatrix<f64>,
    r: f64,
    l: f64,
    r_out: &[f64],
    l_out: &[f64],
    omega: f64,
) -> Result<MeasureReport> {
    if r_out.is_empty() {
        return Err(Error::InvalidArgument("empty network".into()));
    }
    if is_uniform(r_out) && is_uniform(l_out) {
        psi_nir_uniform_from(laplacian, r, l, r_out[0], l_out[0], omega)
    } else {
        psi_nir_nonuniform_from(laplacian, r, l, r_out, l_out, omega)
    }
}

pub fn psi_nir_uniform(net: &PowerNetwork) -> Result<MeasureReport> {
    let (r_out, l_out) = (net.output_resistances(), net.output_inductances());
    if !(is_uniform(&r_out) && is_uniform(&l_out)) {
        return Err(Error::InvalidArgument(
            "output impedances are not uniform across nodes".into(),
        ));
    }
    psi_nir_uniform_from(
        build_laplacian(net).matrix(),
        net.r(),
        net.l(),
        r_out[0],
        l_out[0],
        net.omega(),
    )
}

pub fn psi_nir_nonuniform(net: &PowerNetwork) -> Result<MeasureReport> {
    psi_nir_nonuniform_from(
        build_laplacian(net).matrix(),
        net.r(),
        net.l(),
        &net.output_resistances(),
        &net.output_inductances(),
        net.omega(),
    )
}

/// The network as seen from its source nodes: load nodes are treated as
/// constant-current sinks and Kron-reduced away.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    pub laplacian: DMatrix<f64>,
    /// Original indices of the kept nodes.
    pub sources: Vec<usize>,
    pub r_out: Vec<f64>,
    pub l_out: Vec<f64>,
    pub r: f64,
    pub l: f64,
    pub omega: f64,
    pub kron_reduced: bool,
}

impl SourceModel {
    pub fn dynamics(&self) -> Result<AugmentedDynamics> {
        AugmentedDynamics::from_laplacian(&self.laplacian, self.r, self.l, &self.r_out, &self.l_out)
    }

    pub fn analyze(&self) -> Result<MeasureReport> {
        let mut report = analyze_laplacian(
            &self.laplacian,
            self.r,
            self.l,
            &self.r_out,
            &self.l_out,
            self.omega,
        )?;
        report.kron_reduced = self.kron_reduced;
        Ok(report)
    }
}

pub fn source_model(net: &PowerNetwork) -> Result<SourceModel> {
    let sources = net.source_indices();
    if sources.is_empty() {
        return Err(Error::validation("nodes", "no node has role \"source\""));
    }
    let laplacian = build_laplacian(net).into_matrix();
    let kron_reduced = sources.len() < net.n();
    let laplacian = if kron_reduced {
        kron_reduce_real(&laplacian, &sources, None)?.into_matrix()
    } else {
        laplacian
    };
    let pick = |v: Vec<f64>| sources.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(SourceModel {
        laplacian,
        r_out: pick(net.output_resistances()),
        l_out: pick(net.output_inductances()),
        sources,
        r: net.r(),
        l: net.l(),
        omega: net.omega(),
        kron_reduced,
    })
}

/// Full analysis of a network on its [`source_model`].
pub fn analyze(net: &PowerNetwork) -> Result<MeasureReport> {
    source_model(net)?.analyze()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{complete_graph, path_graph};

    const OMEGA: f64 = 314.159_265_358_979_3;

    #[test]
    fn bare_network_is_homogeneous() {
        let net = path_graph(&[1.0, 2.0, 3.0], 0.5, 2e-3, 0.0, 0.0);
        let dynamics = assemble_dynamics(&net);
        assert_eq!(dynamics.resistance(), &(DMatrix::identity(4, 4) * 0.5));
        assert_eq!(dynamics.inductance(), &(DMatrix::identity(4, 4) * 2e-3));
        let report = analyze(&net).unwrap();
        assert_eq!(report.regime, Regime::Degenerate);
        assert!((report.psi_nir - 2e-3 / 0.5).abs() < 1e-18);
        assert!((report.psi_nrr - 0.5 / 2e-3).abs() < 1e-12);
        let check = check_assumption1(&dynamics).unwrap();
        assert!(check.holds);
        for z in &check.eigenvalues {
            assert!((z.re - 250.0).abs() < 1e-9 && z.im == 0.0);
        }
    }

    #[test]
    fn uniform_assembly_on_complete_four() {
        let net = complete_graph(4, 1.0, 0.3, 1e-3, 0.05, 2e-3);
        let d = assemble_dynamics(&net);
        assert_eq!(d.mode(), OutputMode::Uniform);
        for i in 0..4 {
            for j in 0..4 {
                let (er, el) = if i == j {
                    (0.05 * 3.0 + 0.3, 2e-3 * 3.0 + 1e-3)
                } else {
                    (-0.05, -2e-3)
                };
                assert!((d.resistance()[(i, j)] - er).abs() < 1e-15);
                assert!((d.inductance()[(i, j)] - el).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonuniform_assembly_is_entrywise() {
        let net = path_graph(&[1.0, 1.0, 1.0], 0.5, 1e-3, 0.0, 0.0)
            .with_output_inductances(&[1e-3, 2e-3, 3e-3, 4e-3])
            .unwrap();
        let d = assemble_dynamics(&net);
        assert_eq!(d.mode(), OutputMode::Nonuniform);
        let lap = build_laplacian(&net).into_matrix();
        let dl = [1e-3, 2e-3, 3e-3, 4e-3];
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1e-3 } else { 0.0 } + lap[(i, j)] * dl[j];
                assert_eq!(d.inductance()[(i, j)], expected);
            }
        }
        assert!(d.inductance()[(0, 1)] != d.inductance()[(1, 0)]);
        assert!(check_assumption1(&d).unwrap().holds);
    }

    #[test]
    fn inductive_outputs_use_lambda2() {
        let net = path_graph(&[2.0, 3.0, 1.5], 0.4, 1e-3, 0.0, 5e-3);
        let report = psi_nir_uniform(&net).unwrap();
        assert_eq!(report.regime, Regime::Lambda2);
        let expected = (5e-3 * report.lambda2 + 1e-3) / 0.4;
        assert!((report.psi_nir - expected).abs() < 1e-15);
    }

    #[test]
    fn resistive_outputs_use_lambda_max() {
        let net = path_graph(&[2.0, 3.0, 1.5], 0.4, 1e-3, 0.2, 0.0);
        let report = psi_nir_uniform(&net).unwrap();
        assert_eq!(report.regime, Regime::LambdaMax);
        let expected = 1e-3 / (0.2 * report.lambda_max + 0.4);
        assert!((report.psi_nir - expected).abs() < 1e-15);
        // resistive outputs: slowest decay (r_o λ₂ + r)/ℓ
        assert!((report.psi_nrr - (0.2 * report.lambda2 + 0.4) / 1e-3).abs() < 1e-9);
    }

    #[test]
    fn equal_ratio_is_degenerate() {
        // r_o/ℓ_o = r/ℓ = 400
        let net = path_graph(&[2.0, 3.0, 1.5], 0.4, 1e-3, 0.8, 2e-3);
        let report = psi_nir_uniform(&net).unwrap();
        assert_eq!(report.regime, Regime::Degenerate);
        assert!((report.psi_nir - 1e-3 / 0.4).abs() < 1e-18);
    }

    #[test]
    fn complete_graph_matches_synthesized_lines() {
        for n in [3, 4, 6] {
            let tau = 2.5;
            let (r, l, ro, lo) = (0.3, 1e-3, 0.01, 4e-3);
            let report = psi_nir_uniform(&complete_graph(n, tau, r, l, ro, lo)).unwrap();
            let lc = n as f64 * lo + l * tau;
            let rc = n as f64 * ro + r * tau;
            assert!((report.psi_nir * rc - lc).abs() < 1e-12 * lc);
        }
    }

    #[test]
    fn uniform_and_nonuniform_paths_agree() {
        let lap =
            build_laplacian(&path_graph(&[1.0, 4.0, 2.0, 3.0], 0.5, 1e-3, 0.0, 0.0)).into_matrix();
        let u = psi_nir_uniform_from(&lap, 0.5, 1e-3, 0.0, 3e-3, OMEGA).unwrap();
        let nu = psi_nir_nonuniform_from(&lap, 0.5, 1e-3, &[0.0; 5], &[3e-3; 5], OMEGA).unwrap();
        assert!((u.psi_nir - nu.psi_nir).abs() < 1e-12 * u.psi_nir);
        assert_eq!(nu.mu, 1.0);

        // paired formula with D_r = r_o I, D_ℓ = ℓ_o I reproduces the uniform one
        let u = psi_nir_uniform_from(&lap, 0.5, 1e-3, 0.02, 3e-3, OMEGA).unwrap();
        let nu = psi_nir_nonuniform_from(&lap, 0.5, 1e-3, &[0.02; 5], &[3e-3; 5], OMEGA).unwrap();
        assert_eq!(u.regime, Regime::Lambda2);
        assert!((u.psi_nir - nu.psi_nir).abs() < 1e-9 * u.psi_nir);
    }

    #[test]
    fn two_node_nonuniform_closed_form() {
        let lap = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let (a, b, r, l) = (2e-3, 5e-3, 0.6, 1e-3);
        let report = psi_nir_nonuniform_from(&lap, r, l, &[0.0, 0.0], &[a, b], OMEGA).unwrap();
        assert!((report.psi_nir - (a + b + l) / r).abs() < 1e-15);
        assert!((report.mu - (a / b).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_output_inductance_flags_mu() {
        let lap = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let report =
            psi_nir_nonuniform_from(&lap, 0.6, 1e-3, &[0.0, 0.0], &[0.0, 2e-3], OMEGA).unwrap();
        assert!(report.mu_degenerate);
        assert_eq!(report.mu, 0.0);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_nir(0.0, OMEGA), 0.0);
        assert!((theta_nir(1.0 / OMEGA, OMEGA) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        // ωℓ = 1.2, r = 0.7 per unit length, no outputs
        let omega = 2.0 * std::f64::consts::PI * 60.0;
        assert!((theta_nir(1.2 / omega / 0.7, omega) - 1.042_721_878_368_2).abs() < 1e-12);
    }

    #[test]
    fn zero_sum_basis_is_orthonormal() {
        for n in 2..7 {
            let q = zero_sum_basis(n);
            assert!((q.transpose() * &q - DMatrix::identity(n - 1, n - 1)).amax() < 1e-15);
            for col in q.column_iter() {
                assert!(col.sum().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn monotone_in_uniform_inductance() {
        let lap = build_laplacian(&path_graph(&[1.0, 4.0, 2.0], 0.5, 1e-3, 0.0, 0.0)).into_matrix();
        let mut last = 0.0;
        for k in 0..20 {
            let lo = 1e-4 * (k as f64 + 1.0);
            let psi = psi_nir_uniform_from(&lap, 0.5, 1e-3, 0.01, lo, OMEGA)
                .unwrap()
                .psi_nir;
            assert!(psi > last);
            last = psi;
        }
    }
}
