use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use impedance_diffusion::allocate::{
    allocation_landscape, design_nonuniform, design_uniform, optimize_allocation, AllocationProblem,
};
use impedance_diffusion::kron::{
    kron_reduce_real, line_angles, phasor_reduce, write_angle_csv, LineClass,
};
use impedance_diffusion::measures::{source_model, theta_nir};
use impedance_diffusion::netmodel::{build_laplacian, PowerNetwork};
use impedance_diffusion::simulate::{
    default_grid, fit_decay_rates, homogeneous_solution, verify_envelopes,
    worst_case_initial_condition, DEFAULT_POINTS,
};
use impedance_diffusion::spectral::{algebraic_connectivity, eig_symmetric};
use impedance_diffusion::{Error, Result};

/// Inductivity and resistivity ratios of RL power networks.
#[derive(Parser)]
#[command(name = "impdiff", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Override the network frequency (rad/s).
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Override every node's output inductance (H).
    #[arg(long, global = true)]
    lo: Option<f64>,
    /// Override every node's output resistance (ohm).
    #[arg(long, global = true)]
    ro: Option<f64>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Ψ_NIR, Ψ_NRR, θ_NIR, regime, λ₂, μ and the real-spectrum check.
    Analyze { network: PathBuf },
    /// Kron reduction onto source nodes; `--phasor` emits the line angle table.
    Kron {
        network: PathBuf,
        /// Comma-separated node ids, or `all`. Defaults to nodes with role source.
        #[arg(long)]
        sources: Option<String>,
        #[arg(long)]
        phasor: bool,
        /// Constant currents drawn at the eliminated nodes, in node order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        load_currents: Option<Vec<f64>>,
    },
    /// Simulate the homogeneous currents and check both decay envelopes.
    Simulate {
        network: PathBuf,
        /// Start from the fastest decaying mode instead of a random current.
        #[arg(long)]
        worst_case: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        /// Also write the trajectory CSV to this path.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Allocate output inductors.
    Optimize {
        network: PathBuf,
        /// Total inductance (H) to distribute.
        #[arg(long)]
        budget: Option<f64>,
        /// Comma-separated node ids. Defaults to nodes with role source.
        #[arg(long)]
        sources: Option<String>,
        /// Low-discrepancy starts in addition to the uniform point and vertices.
        #[arg(long)]
        starts: Option<usize>,
        /// Design for this θ_NIR (rad) instead of spending a fixed budget.
        #[arg(long, conflicts_with = "theta_scale")]
        target_theta: Option<f64>,
        /// Design for this multiple of θ_NIR without output inductors, e.g. 1.1.
        #[arg(long)]
        theta_scale: Option<f64>,
        /// With a target, also report the uniform inductor reaching it.
        #[arg(long)]
        uniform: bool,
    },
    /// λ₂ on a barycentric grid of the budget simplex (CSV).
    Landscape {
        network: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 40)]
        resolution: usize,
        #[arg(long)]
        sources: Option<String>,
    },
    /// θ_NIR and every reduced line angle over a geometric range of uniform ℓ_o (CSV).
    Sweep {
        network: PathBuf,
        #[arg(long)]
        lo_min: f64,
        #[arg(long)]
        lo_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        sources: Option<String>,
    },
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn load(path: &PathBuf, global: &Global) -> Result<PowerNetwork> {
    let mut net = PowerNetwork::load(path)?;
    if let Some(omega) = global.omega {
        net = net.with_frequency(omega)?;
    }
    if global.lo.is_some() || global.ro.is_some() {
        net = net.with_uniform_outputs(global.ro, global.lo)?;
    }
    Ok(net)
}

/// `None` → role-source nodes; `all` → every node; otherwise a list of ids.
fn parse_sources(net: &PowerNetwork, spec: Option<&str>) -> Result<Vec<usize>> {
    match spec.map(str::trim) {
        None => Ok(net.source_indices()),
        Some("all") => Ok((0..net.n()).collect()),
        Some(list) => {
            let ids = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::validation("sources", format!("not a node id: {s:?}")))
                })
                .collect::<Result<Vec<u32>>>()?;
            net.indices_of(&ids)
        }
    }
}

fn ids(net: &PowerNetwork, indices: &[usize]) -> Vec<u32> {
    indices.iter().map(|&i| net.nodes()[i].id).collect()
}

enum Output {
    Json(serde_json::Value),
    Text(Vec<u8>),
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("plain data serializes")
}

fn emit(output: Output, path: Option<&PathBuf>) -> Result<()> {
    let bytes = match output {
        Output::Json(v) => {
            let mut text = serde_json::to_string_pretty(&v)?;
            text.push('\n');
            text.into_bytes()
        }
        Output::Text(bytes) => bytes,
    };
    match path {
        Some(p) => File::create(p)?.write_all(&bytes)?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn analyze(net: &PowerNetwork) -> Result<Output> {
    let model = source_model(net)?;
    let report = model.analyze()?;
    let mut value = to_json(&report);
    value["sources"] = json!(ids(net, &model.sources));
    Ok(Output::Json(value))
}

fn kron(
    net: &PowerNetwork,
    sources: Option<&str>,
    phasor: bool,
    load_currents: Option<&[f64]>,
) -> Result<Output> {
    let sources = parse_sources(net, sources)?;
    if phasor {
        let red = phasor_reduce(net, Some(&sources))?;
        let rows = line_angles(&red, net);
        let mut buf = Vec::new();
        write_angle_csv(&rows, &mut buf)?;
        return Ok(Output::Text(buf));
    }
    let red = kron_reduce_real(
        build_laplacian(net).matrix(),
        &sources,
        load_currents.map(|c| (c, net.r())),
    )?;
    if red.is_identity() {
        warn("every node is a source; nothing to eliminate, the reduction is the identity");
    }
    let lambda2 = algebraic_connectivity(&eig_symmetric(red.matrix())?)?.value;
    let rows: Vec<Vec<f64>> = red
        .matrix()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    Ok(Output::Json(json!({
        "sources": ids(net, red.sources()),
        "eliminated": ids(net, red.eliminated()),
        "laplacian": rows,
        "lambda2": lambda2,
        "length_unit": net.line().length_unit,
        "offset": red.offset().map(|o| o.iter().copied().collect::<Vec<f64>>()),
    })))
}

fn simulate(
    net: &PowerNetwork,
    worst_case: bool,
    seed: u64,
    points: usize,
    trajectory: Option<&PathBuf>,
) -> Result<Output> {
    let model = source_model(net)?;
    let report = model.analyze()?;
    let dynamics = model.dynamics()?;
    let i0 = if worst_case {
        worst_case_initial_condition(&dynamics)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(dynamics.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let mean = v.mean();
        v.map(|x| x - mean)
    };
    if points < 2 {
        return Err(Error::InvalidArgument("--points must be at least 2".into()));
    }
    let traj = homogeneous_solution(&dynamics, &i0, &default_grid(&report, points))?;
    if traj.projected() {
        warn("initial current did not sum to zero and was projected");
    }
    if let Some(path) = trajectory {
        traj.write_csv(File::create(path)?)?;
    }
    let verdict = verify_envelopes(&traj, &report);
    let fit = fit_decay_rates(&traj)?;
    Ok(Output::Json(json!({
        "sources": ids(net, &model.sources),
        "psi_nir": report.psi_nir,
        "psi_nrr": report.psi_nrr,
        "mu": report.mu,
        "initial": traj.initial().iter().copied().collect::<Vec<f64>>(),
        "worst_case": worst_case,
        "lower_envelope_ok": verdict.lower_ok,
        "upper_envelope_ok": verdict.upper_ok,
        "min_lower_slack": verdict.min_lower_slack,
        "min_upper_slack": verdict.min_upper_slack,
        "fitted_fastest_rate": fit.fastest,
        "fitted_slowest_rate": fit.slowest,
        "predicted_fastest_rate": 1.0 / report.psi_nir,
    })))
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    net: &PowerNetwork,
    budget: Option<f64>,
    sources: Option<&str>,
    starts: Option<usize>,
    target_theta: Option<f64>,
    theta_scale: Option<f64>,
    uniform: bool,
) -> Result<Output> {
    let sources = parse_sources(net, sources)?;
    let mut problem = AllocationProblem::for_network(net, Some(&sources), budget.unwrap_or(1.0))?;
    if let Some(k) = starts {
        problem.options.starts = k;
    }
    let baseline = theta_nir(net.l() / net.r(), net.omega());
    let target = target_theta.or(theta_scale.map(|k| k * baseline));
    match target {
        None => {
            if budget.is_none() {
                return Err(Error::InvalidArgument(
                    "--budget or a target θ_NIR is required".into(),
                ));
            }
            if uniform {
                return Err(Error::InvalidArgument(
                    "--uniform needs --target-theta or --theta-scale".into(),
                ));
            }
            Ok(Output::Json(to_json(&optimize_allocation(&problem)?)))
        }
        Some(theta) => {
            let nonuniform = design_nonuniform(&problem, theta)?;
            let mut value = json!({
                "theta_without_outputs": baseline,
                "target_theta": theta,
                "nonuniform": to_json(&nonuniform),
            });
            if uniform {
                value["uniform"] = to_json(&design_uniform(net, theta)?);
            }
            Ok(Output::Json(value))
        }
    }
}

fn landscape(
    net: &PowerNetwork,
    budget: f64,
    resolution: usize,
    sources: Option<&str>,
) -> Result<Output> {
    let sources = parse_sources(net, sources)?;
    let problem = AllocationProblem::for_network(net, Some(&sources), budget)?;
    let mut buf = Vec::new();
    allocation_landscape(&problem, resolution)?.write_csv(&mut buf)?;
    Ok(Output::Text(buf))
}

fn sweep(
    net: &PowerNetwork,
    lo_min: f64,
    lo_max: f64,
    steps: usize,
    sources: Option<&str>,
) -> Result<Output> {
    if !(lo_min > 0.0 && lo_max >= lo_min && lo_max.is_finite()) || steps < 2 {
        return Err(Error::InvalidArgument(
            "sweep needs 0 < --lo-min <= --lo-max and --steps >= 2".into(),
        ));
    }
    let sources = parse_sources(net, sources)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for k in 0..steps {
        let lo = lo_min * (lo_max / lo_min).powf(k as f64 / (steps - 1) as f64);
        let at = net.with_uniform_outputs(Some(0.0), Some(lo))?;
        let theta = source_model(&at)?.analyze()?.theta_nir;
        let rows = line_angles(&phasor_reduce(&at, Some(&sources))?, &at);
        if k == 0 {
            let mut header = vec!["l_out".to_string(), "theta_nir".to_string()];
            for r in &rows {
                let class = match r.class {
                    LineClass::Physical => "physical",
                    LineClass::Virtual => "virtual",
                    LineClass::Absent => "absent",
                };
                header.push(format!("theta_{}_{}_{class}", r.i, r.j));
            }
            writer.write_record(&header).map_err(csv_err)?;
        }
        let mut record = vec![lo.to_string(), theta.to_string()];
        record.extend(rows.iter().map(|r| r.theta.to_string()));
        writer.write_record(&record).map_err(csv_err)?;
    }
    let buf = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(Output::Text(buf))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let output = match &cli.command {
        Command::Analyze { network } => analyze(&load(network, g)?)?,
        Command::Kron {
            network,
            sources,
            phasor,
            load_currents,
        } => kron(
            &load(network, g)?,
            sources.as_deref(),
            *phasor,
            load_currents.as_deref(),
        )?,
        Command::Simulate {
            network,
            worst_case,
            seed,
            points,
            trajectory,
        } => simulate(
            &load(network, g)?,
            *worst_case,
            *seed,
            *points,
            trajectory.as_ref(),
        )?,
        Command::Optimize {
            network,
            budget,
            sources,
            starts,
            target_theta,
            theta_scale,
            uniform,
        } => optimize(
            &load(network, g)?,
            *budget,
            sources.as_deref(),
            *starts,
            *target_theta,
            *theta_scale,
            *uniform,
        )?,
        Command::Landscape {
            network,
            budget,
            resolution,
            sources,
        } => landscape(&load(network, g)?, *budget, *resolution, sources.as_deref())?,
        Command::Sweep {
            network,
            lo_min,
            lo_max,
            steps,
            sources,
        } => sweep(
            &load(network, g)?,
            *lo_min,
            *lo_max,
            *steps,
            sources.as_deref(),
        )?,
    };
    emit(output, g.output.as_ref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
