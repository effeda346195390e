//! Homogeneous current dynamics `I(t) = exp(−L_m⁻¹R·t)·I₀` and empirical
//! checks of the decay envelopes.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kron::csv_error;
use crate::measures::{zero_sum_basis, AugmentedDynamics, MeasureReport};
use crate::spectral::eig_general;

/// `‖A·t‖₁` threshold below which the order-13 Padé approximant is used
/// without scaling.
pub const PADE13_THETA: f64 = 5.4;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a `[13/13]` Padé
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let identity = DMatrix::<f64>::identity(n, n);
    let norm = norm1(a);
    if !norm.is_finite() {
        return Err(Error::InvalidArgument(
            "matrix exponential of a non-finite matrix".into(),
        ));
    }
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &identity * b[1]);
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &identity * b[0];

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Singular("Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Sampled solution of the homogeneous dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    currents: DMatrix<f64>,
    initial: DVector<f64>,
    norms: Vec<f64>,
    projected: bool,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `n × T`, column `k` is `I(times[k])`.
    pub fn currents(&self) -> &DMatrix<f64> {
        &self.currents
    }

    /// The initial condition actually used (after projection onto `1⊥`).
    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// True when the supplied `I₀` had a nonzero sum and was projected.
    pub fn projected(&self) -> bool {
        self.projected
    }

    /// Writes `t,I1,…,In,norm` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let n = self.currents.nrows();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("I{i}")));
        header.push("norm".into());
        writer.write_record(&header).map_err(csv_error)?;
        for (k, &t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.currents.column(k).iter().map(|v| v.to_string()));
            row.push(self.norms[k].to_string());
            writer.write_record(&row).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidArgument(
            "time grid must start at t = 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "time grid must be finite and strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Removes the mean of `i0` when `|1ᵀI₀|` exceeds `1e−12·‖I₀‖`.
fn project_zero_sum(i0: &DVector<f64>) -> (DVector<f64>, bool) {
    let sum = i0.sum();
    if sum.abs() > 1e-12 * i0.norm() {
        let mean = sum / i0.len() as f64;
        (i0.map(|v| v - mean), true)
    } else {
        (i0.clone(), false)
    }
}

/// Trajectories for several initial conditions sharing one time grid; the
/// propagator `exp(−A·t)` is computed once per sample.
pub fn homogeneous_solutions(
    dynamics: &AugmentedDynamics,
    initial: &[DVector<f64>],
    t_grid: &[f64],
) -> Result<Vec<Trajectory>> {
    check_grid(t_grid)?;
    let n = dynamics.dim();
    if let Some(bad) = initial.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: format!("initial condition of length {n}"),
            got: bad.len().to_string(),
        });
    }
    let a = dynamics.decay_matrix()?;
    let starts: Vec<(DVector<f64>, bool)> = initial.iter().map(project_zero_sum).collect();
    let mut currents: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, t_grid.len()); initial.len()];
    for (k, &t) in t_grid.iter().enumerate() {
        let propagator = if t == 0.0 {
            DMatrix::identity(n, n)
        } else {
            expm(&(&a * (-t)))?
        };
        for (c, (i0, _)) in currents.iter_mut().zip(&starts) {
            c.set_column(k, &(&propagator * i0));
        }
    }
    Ok(currents
        .into_iter()
        .zip(starts)
        .map(|(currents, (initial, projected))| Trajectory {
            times: t_grid.to_vec(),
            norms: currents.column_iter().map(|c| c.norm()).collect(),
            currents,
            initial,
            projected,
        })
        .collect())
}

pub fn homogeneous_solution(
    dynamics: &AugmentedDynamics,
    i0: &DVector<f64>,
    t_grid: &[f64],
) -> Result<Trajectory> {
    Ok(homogeneous_solutions(dynamics, std::slice::from_ref(i0), t_grid)?.remove(0))
}

/// `points` samples evenly spaced on `[0, 8·Ψ_NIR]`.
pub fn default_grid(report: &MeasureReport, points: usize) -> Vec<f64> {
    let t_max = 8.0 * report.psi_nir;
    let last = points.max(2) - 1;
    (0..=last).map(|k| t_max * k as f64 / last as f64).collect()
}

pub const DEFAULT_POINTS: usize = 400;

/// Unit vector in `1⊥` along the fastest decaying mode of `L_m⁻¹R`, which
/// attains the lower envelope with equality.
pub fn worst_case_initial_condition(dynamics: &AugmentedDynamics) -> Result<DVector<f64>> {
    mode_initial_condition(dynamics, true)
}

/// Unit vector in `1⊥` along the slowest decaying mode.
pub fn slowest_initial_condition(dynamics: &AugmentedDynamics) -> Result<DVector<f64>> {
    mode_initial_condition(dynamics, false)
}

fn mode_initial_condition(dynamics: &AugmentedDynamics, fastest: bool) -> Result<DVector<f64>> {
    let q = zero_sum_basis(dynamics.dim());
    let b = dynamics.restricted_decay_matrix()?;
    let m = b.nrows();
    let eigenvalues = eig_general(&b)?;
    let pick = |a: f64, b: f64| if fastest { a.max(b) } else { a.min(b) };
    let init = if fastest {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let sigma = eigenvalues.iter().map(|z| z.re).fold(init, pick);

    // inverse iteration with a shift just beside the target eigenvalue
    let scale = b.amax().max(f64::MIN_POSITIVE);
    let shift = sigma + if fastest { 1e-10 } else { -1e-10 } * scale;
    let shifted = &b - DMatrix::<f64>::identity(m, m) * shift;
    let lu = shifted.lu();
    let mut v = DVector::from_fn(m, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    for _ in 0..8 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::Singular("shifted decay matrix".into()))?;
        v = &w / w.norm();
    }
    let out = &q * v;
    Ok(&out / out.norm())
}

/// Outcome of comparing a trajectory against both decay envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeVerdict {
    /// `‖I(t)‖ / (μ·e^{−t/Ψ_NIR}·‖I₀‖) − 1` per sample.
    pub lower_slack: Vec<f64>,
    /// `(μ'·e^{−Ψ_NRR·t}·‖I₀‖) / ‖I(t)‖ − 1` per sample, `μ' = 1/μ`.
    pub upper_slack: Vec<f64>,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub min_lower_slack: f64,
    pub min_upper_slack: f64,
}

/// Multiplicative round-off allowance on both envelopes.
pub const ENVELOPE_SLACK: f64 = 1e-9;

pub fn verify_envelopes(traj: &Trajectory, report: &MeasureReport) -> EnvelopeVerdict {
    let i0 = traj.initial().norm();
    let mu = report.mu;
    let mut lower_slack = Vec::with_capacity(traj.times.len());
    let mut upper_slack = Vec::with_capacity(traj.times.len());
    for (&t, &norm) in traj.times.iter().zip(&traj.norms) {
        let lower = mu * (-t / report.psi_nir).exp() * i0;
        let upper = (-report.psi_nrr * t).exp() * i0 / mu;
        lower_slack.push(ratio_minus_one(norm, lower));
        upper_slack.push(ratio_minus_one(upper, norm));
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let min_lower_slack = min(&lower_slack);
    let min_upper_slack = min(&upper_slack);
    EnvelopeVerdict {
        lower_ok: min_lower_slack >= -ENVELOPE_SLACK,
        upper_ok: min_upper_slack >= -ENVELOPE_SLACK,
        lower_slack,
        upper_slack,
        min_lower_slack,
        min_upper_slack,
    }
}

fn ratio_minus_one(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den - 1.0
    }
}

/// Decay rates from log-linear least-squares fits of `‖I(t)‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Rate over the first 10% of the grid.
    pub fastest: f64,
    /// Rate over the last 10% of the grid.
    pub slowest: f64,
    /// True when samples below `1e−300` were dropped from the late window.
    pub truncated: bool,
}

fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    sxy / sxx
}

pub fn fit_decay_rates(traj: &Trajectory) -> Result<DecayFit> {
    const FLOOR: f64 = 1e-300;
    let usable = traj.norms.iter().take_while(|&&v| v >= FLOOR).count();
    if usable < 4 {
        return Err(Error::InvalidArgument(
            "trajectory is zero or underflows before four samples".into(),
        ));
    }
    let truncated = usable < traj.norms.len();
    let total = traj.times.len();
    let window = (total / 10).max(2);
    let logs: Vec<f64> = traj.norms[..usable].iter().map(|v| v.ln()).collect();
    let times = &traj.times[..usable];
    let early = window.min(usable);
    let late_start = usable.saturating_sub(window);
    Ok(DecayFit {
        fastest: -log_slope(&times[..early], &logs[..early]),
        slowest: -log_slope(&times[late_start..], &logs[late_start..]),
        truncated,
    })
}

/// Compares the fastest decay rate found by simulation with the rate
/// `1/Ψ_NIR` predicted by the measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateCrossCheck {
    pub predicted: f64,
    pub observed: f64,
    pub relative_error: f64,
    /// The observed rate exceeds the prediction by more than `1e−3`, i.e. the
    /// predicted lower envelope is violated.
    pub envelope_violated: bool,
}

pub fn cross_check_rate(
    dynamics: &AugmentedDynamics,
    report: &MeasureReport,
) -> Result<RateCrossCheck> {
    let i0 = worst_case_initial_condition(dynamics)?;
    let predicted = 1.0 / report.psi_nir;
    // two time constants of the fastest mode keep the fit well above underflow
    let t_max = 2.0 * report.psi_nir;
    let grid: Vec<f64> = (0..=40).map(|k| t_max * k as f64 / 40.0).collect();
    let traj = homogeneous_solution(dynamics, &i0, &grid)?;
    let observed = fit_decay_rates(&traj)?.slowest;
    let relative_error = (observed - predicted).abs() / predicted;
    Ok(RateCrossCheck {
        predicted,
        observed,
        relative_error,
        envelope_violated: observed > predicted * (1.0 + 1e-3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{analyze, assemble_dynamics, psi_nir_nonuniform};
    use crate::test_support::{complete_graph, path_graph};

    fn eigen_expm_oracle(a: &DMatrix<f64>) -> DMatrix<f64> {
        // symmetric input: U diag(e^λ) Uᵀ
        let s = crate::spectral::eig_symmetric(a).unwrap();
        let u = s.eigenvectors.unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            s.eigenvalues.len(),
            s.eigenvalues.iter().map(|v| v.exp()),
        ));
        &u * d * u.transpose()
    }

    #[test]
    fn expm_small_cases() {
        assert_eq!(
            expm(&DMatrix::zeros(3, 3)).unwrap(),
            DMatrix::identity(3, 3)
        );
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-30.0, 0.5, 2.0]));
        let e = expm(&d).unwrap();
        for (i, v) in [-30.0f64, 0.5, 2.0].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() < 1e-14 * v.exp().max(1.0));
        }
        // nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = expm(&n).unwrap();
        assert!((e - DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).amax() < 1e-15);
        // rotation
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]) * 7.0;
        let e = expm(&rot).unwrap();
        assert!((e[(0, 0)] - 7f64.cos()).abs() < 1e-13 && (e[(1, 0)] - 7f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn expm_matches_eigen_route() {
        let lap = crate::netmodel::build_laplacian(&path_graph(
            &[0.3, 1.0, 0.2, 2.0],
            1.0,
            1.0,
            0.0,
            0.0,
        ))
        .into_matrix();
        for t in [0.01, 1.0, 25.0] {
            let a = &lap * (-t);
            let diff = (expm(&a).unwrap() - eigen_expm_oracle(&a)).amax();
            assert!(diff < 1e-12, "t = {t}: {diff}");
        }
    }

    #[test]
    fn zero_initial_condition() {
        let d = assemble_dynamics(&path_graph(&[1.0, 2.0], 0.5, 1e-3, 0.0, 1e-3));
        let traj = homogeneous_solution(&d, &DVector::zeros(3), &[0.0, 1e-3, 2e-3]).unwrap();
        assert!(traj.currents().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bare_network_decays_at_r_over_l() {
        let (r, l) = (0.5, 1e-3);
        let net = path_graph(&[1.0, 2.0, 1.5], r, l, 0.0, 0.0);
        let d = assemble_dynamics(&net);
        let i0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.5]);
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 2e-4).collect();
        let traj = homogeneous_solution(&d, &i0, &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let expected = &i0 * (-(r / l) * t).exp();
            assert!((traj.currents().column(k) - expected).amax() < 1e-12);
        }
        let fit = fit_decay_rates(&traj).unwrap();
        assert!((fit.fastest - r / l).abs() < 1e-9 * r / l);
        assert!((fit.slowest - r / l).abs() < 1e-9 * r / l);
    }

    #[test]
    fn nonzero_sum_is_projected() {
        let d = assemble_dynamics(&path_graph(&[1.0], 0.5, 1e-3, 0.0, 1e-3));
        let traj =
            homogeneous_solution(&d, &DVector::from_vec(vec![1.0, 0.0]), &[0.0, 1e-4]).unwrap();
        assert!(traj.projected());
        assert_eq!(traj.initial().as_slice(), &[0.5, -0.5]);
    }

    #[test]
    fn worst_case_mode_is_tight() {
        let net = complete_graph(4, 1.0, 0.3, 1e-3, 0.0, 2e-3);
        let d = assemble_dynamics(&net);
        let report = analyze(&net).unwrap();
        let i0 = worst_case_initial_condition(&d).unwrap();
        let traj = homogeneous_solution(&d, &i0, &default_grid(&report, 100)).unwrap();
        let verdict = verify_envelopes(&traj, &report);
        assert!(verdict.lower_ok && verdict.upper_ok);
        assert!(verdict.min_lower_slack.abs() < 1e-6);
        let fit = fit_decay_rates(&traj).unwrap();
        assert!((fit.slowest * report.psi_nir - 1.0).abs() < 1e-6);
    }

    #[test]
    fn semigroup() {
        let net = path_graph(&[1.0, 3.0, 2.0], 0.4, 1e-3, 0.01, 2e-3)
            .with_output_inductances(&[1e-3, 3e-3, 2e-3, 4e-3])
            .unwrap();
        let d = assemble_dynamics(&net);
        let a = d.decay_matrix().unwrap();
        let (t1, t2) = (3e-3, 7e-3);
        let lhs = expm(&(&a * -(t1 + t2))).unwrap();
        let rhs = expm(&(&a * -t2)).unwrap() * expm(&(&a * -t1)).unwrap();
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn nonuniform_star_lower_envelope() {
        let lap = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0 / 9.0,
                0.0,
                0.0,
                -1.0 / 9.0,
                0.0,
                1.0 / 5.0,
                0.0,
                -1.0 / 5.0,
                0.0,
                0.0,
                1.0 / 7.0,
                -1.0 / 7.0,
                -1.0 / 9.0,
                -1.0 / 5.0,
                -1.0 / 7.0,
                1.0 / 9.0 + 1.0 / 5.0 + 1.0 / 7.0,
            ],
        );
        let dl = [1e-3, 2e-3, 3e-3, 4e-3];
        let d = AugmentedDynamics::from_laplacian(&lap, 0.1, 1e-4, &[0.0; 4], &dl).unwrap();
        let report =
            crate::measures::psi_nir_nonuniform_from(&lap, 0.1, 1e-4, &[0.0; 4], &dl, 314.0)
                .unwrap();
        assert!((report.mu - 0.5).abs() < 1e-15);
        let grid = default_grid(&report, 200);
        let starts: Vec<DVector<f64>> = (0..6)
            .map(|s| DVector::from_fn(4, |i, _| ((i * 7 + s * 3) % 5) as f64 - 2.0))
            .chain([worst_case_initial_condition(&d).unwrap()])
            .collect();
        for traj in homogeneous_solutions(&d, &starts, &grid).unwrap() {
            assert!(verify_envelopes(&traj, &report).lower_ok);
        }
        let check = cross_check_rate(&d, &report).unwrap();
        assert!(check.relative_error < 1e-6, "{check:?}");
    }

    #[test]
    fn path_cross_check_inductive() {
        let net = path_graph(&[1.0, 2.0, 3.0, 1.0], 0.2, 1e-3, 0.0, 0.0)
            .with_output_inductances(&[2e-3, 1e-3, 4e-3, 3e-3, 1e-3])
            .unwrap();
        let report = psi_nir_nonuniform(&net).unwrap();
        let check = cross_check_rate(&assemble_dynamics(&net), &report).unwrap();
        assert!(check.relative_error < 1e-6 && !check.envelope_violated);
    }

    #[test]
    fn trajectory_csv() {
        let d = assemble_dynamics(&path_graph(&[1.0], 0.5, 1e-3, 0.0, 1e-3));
        let traj =
            homogeneous_solution(&d, &DVector::from_vec(vec![1.0, -1.0]), &[0.0, 1e-4]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,I1,I2,norm\n0,1,-1,1.4142135623730951\n"));
    }
}
