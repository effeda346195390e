//! Output inductor design.
//!
//! A uniform inductor is found in closed form from a target `θ_NIR`. For
//! per-node inductors the algebraic connectivity `λ₂(D_ℓ·L)` is maximized
//! over the budget simplex `{ℓ_o ≥ lower, Σℓ_o = c}`. The objective equals
//! `λ_min` of `L^{1/2} D_ℓ L^{1/2}` on the complement of its kernel, so it is
//! concave in `D_ℓ` but not smooth where eigenvalues cross. A derivative-free
//! pattern search from several deterministic starts handles the kinks.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kron::{csv_error, kron_reduce_real};
use crate::measures::{is_uniform, psi_nir_uniform_from, theta_nir};
use crate::netmodel::{build_laplacian, PowerNetwork};
use crate::spectral::{congruence, eig_product, eigenvalues_symmetric, sqrt_psd};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Low-discrepancy starts in addition to the uniform point and vertices.
    pub starts: usize,
    /// Relative objective improvement below which a step counts as failed.
    pub tolerance: f64,
    /// Iteration cap per start.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            starts: 8,
            tolerance: 1e-10,
            max_iterations: 4000,
        }
    }
}

/// Maximize `λ₂(D_ℓ·L)` subject to `ℓ_o ≥ lower_bounds`, `Σℓ_o = budget`.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationProblem {
    pub laplacian: DMatrix<f64>,
    /// henry
    pub budget: f64,
    pub lower_bounds: Vec<f64>,
    pub options: SolverOptions,
    /// Line resistance and inductance per length and frequency, used to
    /// report `Ψ_NIR` and `θ_NIR`.
    pub r: f64,
    pub l: f64,
    pub omega: f64,
    /// Column labels, normally node ids.
    pub labels: Vec<String>,
}

impl AllocationProblem {
    pub fn new(laplacian: DMatrix<f64>, budget: f64, r: f64, l: f64, omega: f64) -> Self {
        let n = laplacian.nrows();
        AllocationProblem {
            laplacian,
            budget,
            lower_bounds: vec![0.0; n],
            options: SolverOptions::default(),
            r,
            l,
            omega,
            labels: (1..=n).map(|i| i.to_string()).collect(),
        }
    }

    /// Problem on a network's sources (node indices, default: all nodes with
    /// role source). Load nodes are Kron-reduced away first.
    pub fn for_network(net: &PowerNetwork, sources: Option<&[usize]>, budget: f64) -> Result<Self> {
        let sources = match sources {
            Some(s) => s.to_vec(),
            None => net.source_indices(),
        };
        let laplacian =
            kron_reduce_real(build_laplacian(net).matrix(), &sources, None)?.into_matrix();
        let mut problem = AllocationProblem::new(laplacian, budget, net.r(), net.l(), net.omega());
        problem.labels = sources
            .iter()
            .map(|&i| net.nodes()[i].id.to_string())
            .collect();
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n < 2 || self.laplacian.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: "square Laplacian with at least 2 nodes".into(),
                got: format!("{}x{}", self.laplacian.nrows(), self.laplacian.ncols()),
            });
        }
        if self.lower_bounds.len() != n || self.labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} lower bounds and labels"),
                got: format!("{} / {}", self.lower_bounds.len(), self.labels.len()),
            });
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(Error::validation(
                "budget",
                format!("must be positive, got {}", self.budget),
            ));
        }
        if let Some(b) = self
            .lower_bounds
            .iter()
            .find(|b| !(b.is_finite() && **b >= 0.0))
        {
            return Err(Error::validation(
                "lower_bounds",
                format!("must be nonnegative, got {b}"),
            ));
        }
        let lower_sum: f64 = self.lower_bounds.iter().sum();
        if lower_sum > self.budget * (1.0 + 1e-12) {
            return Err(Error::InfeasibleBounds {
                lower_sum,
                budget: self.budget,
            });
        }
        for (name, v) in [("r", self.r), ("l", self.l), ("omega", self.omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub starts: usize,
    pub iterations: usize,
    pub objective_evaluations: usize,
    pub best: f64,
    pub median: f64,
    /// `best − median` over the local optima of all starts.
    pub best_vs_median_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllocationResult {
    pub labels: Vec<String>,
    /// henry
    pub allocation: Vec<f64>,
    pub budget: f64,
    /// `λ₂(D_ℓ·L)` from [`eig_product`] on the returned allocation.
    pub lambda2: f64,
    /// `(λ₂ + ℓ)/r`, seconds
    pub psi_nir: f64,
    pub theta_nir: f64,
    /// `λ₂` at the uniform split `c/n`.
    pub uniform_lambda2: f64,
    pub diagnostics: SolverDiagnostics,
}

/// `λ₂(S·diag(x)·S)` with `S = L^{1/2}` precomputed.
struct Objective {
    root: DMatrix<f64>,
    evaluations: usize,
}

impl Objective {
    fn new(laplacian: &DMatrix<f64>) -> Result<Self> {
        Ok(Objective {
            root: sqrt_psd(laplacian)?,
            evaluations: 0,
        })
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        Ok(eigenvalues_symmetric(&congruence(&self.root, x))?[1])
    }
}

/// Radical inverse of `k` in `base`.
fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut out = 0.0;
    let mut f = 1.0 / base as f64;
    while k > 0 {
        out += (k % base) as f64 * f;
        k /= base;
        f /= base as f64;
    }
    out
}

const PRIMES: [usize; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Point `k` of an `n`-dimensional Halton sequence (dimensions beyond the
/// prime table reuse it with an offset index).
fn halton(k: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|d| radical_inverse(k + 1 + 7 * (d / PRIMES.len()), PRIMES[d % PRIMES.len()]))
        .collect()
}

/// Euclidean projection onto `{y ≥ 0, Σy = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - total) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

struct LocalOptimum {
    y: Vec<f64>,
    value: f64,
    iterations: usize,
}

/// Pattern search over `y ≥ 0`, `Σy = free` with `x = lower + y`.
fn local_search(
    objective: &mut Objective,
    lower: &[f64],
    free: f64,
    start: Vec<f64>,
    options: &SolverOptions,
) -> Result<LocalOptimum> {
    let n = lower.len();
    let to_x = |y: &[f64]| {
        lower
            .iter()
            .zip(y)
            .map(|(a, b)| a + b)
            .collect::<Vec<f64>>()
    };
    let mut y = start;
    let mut value = objective.eval(&to_x(&y))?;
    let mut step = 0.25 * free;
    let min_step = 1e-13 * free;
    let mut iterations = 0;
    while step > min_step && iterations < options.max_iterations {
        iterations += 1;
        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n * (n + 1));
        for i in 0..n {
            for j in 0..n {
                if i != j && y[j] > 0.0 {
                    let delta = step.min(y[j]);
                    let mut c = y.clone();
                    c[i] += delta;
                    c[j] -= delta;
                    candidates.push(c);
                }
            }
        }
        for k in 0..n {
            let h = halton(iterations * n + k, n);
            let mean = h.iter().sum::<f64>() / n as f64;
            let d: Vec<f64> = h.iter().map(|v| v - mean).collect();
            let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let moved: Vec<f64> = y
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| a + sign * step * b / scale)
                    .collect();
                candidates.push(project_simplex(&moved, free));
            }
        }

        let threshold = value + options.tolerance * value.abs().max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for c in candidates {
            let v = objective.eval(&to_x(&c))?;
            if v > threshold && best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, c));
            }
        }
        match best {
            Some((v, c)) => {
                value = v;
                y = c;
                step *= 1.5;
                step = step.min(0.5 * free);
            }
            None => step *= 0.5,
        }
    }
    Ok(LocalOptimum {
        y,
        value,
        iterations,
    })
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Deterministic multi-start maximization of `λ₂(D_ℓ·L)` on the budget
/// simplex.
pub fn optimize_allocation(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let n = problem.dim();
    let lower = &problem.lower_bounds;
    let free = (problem.budget - lower.iter().sum::<f64>()).max(0.0);
    let mut objective = Objective::new(&problem.laplacian)?;

    let uniform_x = vec![problem.budget / n as f64; n];
    let uniform_lambda2 = objective.eval(&uniform_x)?;

    let mut starts: Vec<Vec<f64>> = vec![vec![free / n as f64; n]];
    for v in 0..n {
        let mut y = vec![0.0; n];
        y[v] = free;
        starts.push(y);
    }
    for k in 0..problem.options.starts {
        let e: Vec<f64> = halton(k + 1000, n)
            .iter()
            .map(|u| -(1.0 - u).ln())
            .collect();
        let total: f64 = e.iter().sum();
        starts.push(e.iter().map(|v| free * v / total).collect());
    }

    let mut optima = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    for start in starts {
        let found = if free > 0.0 {
            local_search(&mut objective, lower, free, start, &problem.options)?
        } else {
            let value = objective.eval(lower)?;
            LocalOptimum {
                y: start,
                value,
                iterations: 0,
            }
        };
        iterations += found.iterations;
        optima.push(found);
    }

    let mut best_index = 0;
    for (k, o) in optima.iter().enumerate().skip(1) {
        let b = &optima[best_index];
        let tie = (o.value - b.value).abs() <= 1e-12 * b.value.abs();
        if (!tie && o.value > b.value) || (tie && lexicographic_less(&o.y, &b.y)) {
            best_index = k;
        }
    }
    let mut values: Vec<f64> = optima.iter().map(|o| o.value).collect();
    values.sort_by(f64::total_cmp);
    let median = if values.len() % 2 == 1 {
        values[values.len() / 2]
    } else {
        0.5 * (values[values.len() / 2 - 1] + values[values.len() / 2])
    };

    let mut allocation: Vec<f64> = lower
        .iter()
        .zip(&optima[best_index].y)
        .map(|(a, b)| a + b)
        .collect();
    // push the rounding residual of Σℓ_o into the largest entry
    let residual = problem.budget - allocation.iter().sum::<f64>();
    let largest = (0..n)
        .max_by(|&a, &b| allocation[a].total_cmp(&allocation[b]))
        .unwrap_or(0);
    allocation[largest] += residual;

    let lambda2 = eig_product(&allocation, &problem.laplacian)?.lambda2_symmetric();
    let psi_nir = (lambda2 + problem.l) / problem.r;
    Ok(AllocationResult {
        labels: problem.labels.clone(),
        allocation,
        budget: problem.budget,
        lambda2,
        psi_nir,
        theta_nir: theta_nir(psi_nir, problem.omega),
        uniform_lambda2,
        diagnostics: SolverDiagnostics {
            starts: optima.len(),
            iterations,
            objective_evaluations: objective.evaluations,
            best: optima[best_index].value,
            median,
            best_vs_median_gap: optima[best_index].value - median,
        },
    })
}

/// Uniform output inductance reaching a target `θ_NIR`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformDesign {
    /// henry
    pub l_out: f64,
    pub lambda2: f64,
    /// `θ_NIR` with the same `r_o` and no output inductance.
    pub theta_before: f64,
    pub theta_target: f64,
    /// `θ_NIR` recomputed from the designed inductance.
    pub theta_achieved: f64,
}

/// `ℓ_o = (tan θ/ω·(r_o λ₂ + r) − ℓ)/λ₂` on a (reduced) Laplacian.
pub fn design_uniform_laplacian(
    laplacian: &DMatrix<f64>,
    r: f64,
    l: f64,
    r_out: f64,
    omega: f64,
    target_theta: f64,
) -> Result<UniformDesign> {
    use std::f64::consts::FRAC_PI_2;
    let before = psi_nir_uniform_from(laplacian, r, l, r_out, 0.0, omega)?;
    if !(target_theta < FRAC_PI_2) {
        return Err(Error::UnreachableTarget(format!(
            "θ_NIR must stay below π/2, requested {target_theta}"
        )));
    }
    let lambda2 = before.lambda2;
    let psi_target = target_theta.tan() / omega;
    let mut l_out = (psi_target * (r_out * lambda2 + r) - l) / lambda2;
    if l_out < 0.0 {
        if l_out.abs() <= 1e-12 * l / lambda2 {
            l_out = 0.0;
        } else {
            return Err(Error::UnreachableTarget(format!(
                "target θ_NIR {target_theta} is below the value {} without output inductors",
                before.theta_nir
            )));
        }
    }
    let after = psi_nir_uniform_from(laplacian, r, l, r_out, l_out, omega)?;
    Ok(UniformDesign {
        l_out,
        lambda2,
        theta_before: before.theta_nir,
        theta_target: target_theta,
        theta_achieved: after.theta_nir,
    })
}

/// Uniform design on a network's sources; loads are Kron-reduced away and
/// the sources' common output resistance is kept.
pub fn design_uniform(net: &PowerNetwork, target_theta: f64) -> Result<UniformDesign> {
    let sources = net.source_indices();
    let r_out: Vec<f64> = sources
        .iter()
        .map(|&i| net.output_resistances()[i])
        .collect();
    if !is_uniform(&r_out) {
        return Err(Error::InvalidArgument(
            "uniform design needs the same output resistance on every source".into(),
        ));
    }
    let laplacian = kron_reduce_real(build_laplacian(net).matrix(), &sources, None)?.into_matrix();
    design_uniform_laplacian(
        &laplacian,
        net.r(),
        net.l(),
        r_out[0],
        net.omega(),
        target_theta,
    )
}

/// Smallest budget whose optimal allocation reaches `θ_NIR = target_theta`
/// with inductive outputs, `Ψ_NIR = (λ₂(D_ℓ·L) + ℓ)/r`.
///
/// The optimal `λ₂` scales linearly with the budget when all lower bounds
/// are zero; otherwise the budget is found by bisection. `problem.budget`
/// is ignored.
pub fn design_nonuniform(
    problem: &AllocationProblem,
    target_theta: f64,
) -> Result<AllocationResult> {
    use std::f64::consts::FRAC_PI_2;
    if !(target_theta < FRAC_PI_2) {
        return Err(Error::UnreachableTarget(format!(
            "θ_NIR must stay below π/2, requested {target_theta}"
        )));
    }
    let needed = target_theta.tan() / problem.omega * problem.r - problem.l;
    let floor = theta_nir(problem.l / problem.r, problem.omega);
    if needed < 0.0 {
        return Err(Error::UnreachableTarget(format!(
            "target θ_NIR {target_theta} is below the value {floor} without output inductors"
        )));
    }
    let lower_sum: f64 = problem.lower_bounds.iter().sum();
    let with_budget = |c: f64| {
        let mut p = problem.clone();
        p.budget = c;
        optimize_allocation(&p)
    };

    if lower_sum == 0.0 {
        let unit = with_budget(1.0)?;
        let c = needed / unit.lambda2;
        let mut p = problem.clone();
        p.budget = c;
        let allocation: Vec<f64> = unit.allocation.iter().map(|v| v * c).collect();
        let lambda2 = eig_product(&allocation, &p.laplacian)?.lambda2_symmetric();
        let psi_nir = (lambda2 + p.l) / p.r;
        return Ok(AllocationResult {
            allocation,
            budget: c,
            lambda2,
            psi_nir,
            theta_nir: theta_nir(psi_nir, p.omega),
            uniform_lambda2: unit.uniform_lambda2 * c,
            diagnostics: SolverDiagnostics {
                best: unit.diagnostics.best * c,
                median: unit.diagnostics.median * c,
                best_vs_median_gap: unit.diagnostics.best_vs_median_gap * c,
                ..unit.diagnostics
            },
            labels: unit.labels,
        });
    }

    let at_lower = eig_product(&problem.lower_bounds, &problem.laplacian)?.lambda2_symmetric();
    if at_lower >= needed {
        let mut p = problem.clone();
        p.budget = lower_sum;
        return optimize_allocation(&p);
    }
    let mut lo = lower_sum;
    let mut hi = lower_sum.max(f64::MIN_POSITIVE) * 2.0;
    let mut grown = 0;
    while with_budget(hi)?.lambda2 < needed {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 200 {
            return Err(Error::UnreachableTarget(
                "no finite budget reaches the target".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-13 * hi {
            break;
        }
        if with_budget(mid)?.lambda2 < needed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    with_budget(hi)
}

/// `λ₂` sampled on a regular barycentric grid of the budget simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub labels: Vec<String>,
    /// Barycentric coordinates of each grid point, summing to 1.
    pub points: Vec<Vec<f64>>,
    pub lambda2: Vec<f64>,
}

impl Landscape {
    pub fn max(&self) -> Option<(&[f64], f64)> {
        let k =
            (0..self.lambda2.len()).max_by(|&a, &b| self.lambda2[a].total_cmp(&self.lambda2[b]))?;
        Some((&self.points[k], self.lambda2[k]))
    }

    /// Writes `b_<label>…,lambda2` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.labels.iter().map(|l| format!("b_{l}")).collect();
        header.push("lambda2".into());
        writer.write_record(&header).map_err(csv_error)?;
        for (p, v) in self.points.iter().zip(&self.lambda2) {
            let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            row.push(v.to_string());
            writer.write_record(&row).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Largest dimension accepted by [`allocation_landscape`].
pub const LANDSCAPE_MAX_NODES: usize = 6;

/// Evaluates `λ₂` at `ℓ_o = lower + (c − Σlower)·b` for every barycentric
/// `b` with denominator `resolution`.
pub fn allocation_landscape(problem: &AllocationProblem, resolution: usize) -> Result<Landscape> {
    problem.validate()?;
    let n = problem.dim();
    if n > LANDSCAPE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "landscape supports at most {LANDSCAPE_MAX_NODES} nodes, problem has {n}"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument(
            "resolution must be at least 1".into(),
        ));
    }
    let free = problem.budget - problem.lower_bounds.iter().sum::<f64>();
    let mut objective = Objective::new(&problem.laplacian)?;
    let mut points = Vec::new();
    let mut lambda2 = Vec::new();
    let mut counts = vec![0usize; n];
    loop {
        let used: usize = counts[..n - 1].iter().sum();
        if used <= resolution {
            counts[n - 1] = resolution - used;
            let b: Vec<f64> = counts
                .iter()
                .map(|&k| k as f64 / resolution as f64)
                .collect();
            let x: Vec<f64> = problem
                .lower_bounds
                .iter()
                .zip(&b)
                .map(|(lo, bi)| lo + free * bi)
                .collect();
            lambda2.push(objective.eval(&x)?);
            points.push(b);
        }
        // odometer over the first n−1 counts
        let mut d = 0;
        loop {
            if d == n - 1 {
                return Ok(Landscape {
                    labels: problem.labels.clone(),
                    points,
                    lambda2,
                });
            }
            counts[d] += 1;
            if counts[..n - 1].iter().sum::<usize>() <= resolution {
                break;
            }
            counts[d] = 0;
            d += 1;
        }
    }
}
