use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use aeqsim_core::blockade::{
    blockade_gate_outcome, default_rk4_step, evolve, evolve_rk4, loss_curve, BlockadeParams, TwoLevelAmplitudes,
};
use aeqsim_core::budget::gate_fidelity_estimate;
use aeqsim_core::compiler::{compile_with_species, Circuit, Device, Schedule};
use aeqsim_core::register::RegisterDocument;
use aeqsim_core::{NoiseModel, Polarizability, ProtocolOp, SpeciesModel};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "aeqsim", version, about = "Dual-lattice alkaline-earth qubit simulator")]
struct Cli {
    /// Species document; the bundled ⁸⁷Sr data when absent.
    #[arg(long, global = true, env = "AEQSIM_SPECIES_PATH")]
    species: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Polarizability of one level over a wavelength range.
    PolarizabilityScan {
        #[arg(long)]
        level: String,
        /// Wavelength range in nm, as `lo,hi`.
        #[arg(long = "range-nm", alias = "range", value_parser = parse_range)]
        range_nm: (f64, f64),
        #[arg(long = "step-nm", default_value_t = 0.1)]
        step_nm: f64,
        #[arg(long = "resonance-window-nm")]
        resonance_window_nm: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Tune-out wavelengths of one level.
    PolarizabilityZeros {
        #[arg(long)]
        level: String,
        #[arg(long = "range-nm", alias = "range", value_parser = parse_range)]
        range_nm: (f64, f64),
        #[arg(long = "step-nm", default_value_t = 0.05)]
        step_nm: f64,
        #[arg(long = "resonance-window-nm")]
        resonance_window_nm: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Blocked-branch amplitudes over Ωt ∈ [0, t_max], starting in |g⟩.
    BlockadeEvolve {
        #[arg(long = "gamma-over-omega", default_value_t = 0.0)]
        gamma_over_omega: f64,
        #[arg(long = "delta-over-omega", default_value_t = 0.0)]
        delta_over_omega: f64,
        #[arg(long = "t-max", default_value_t = std::f64::consts::TAU)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Integrate with RK4 instead of the closed form.
        #[arg(long)]
        rk4: bool,
        /// Emit the phase and loss of the 2π step instead of a trajectory.
        #[arg(long)]
        report: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Loss curves for every (Γ/Ω, Δ/Ω) pair.
    BlockadeCurves {
        #[arg(long = "gamma-over-omega", value_delimiter = ',', required = true)]
        gamma_over_omega: Vec<f64>,
        #[arg(long = "delta-over-omega", value_delimiter = ',', default_value = "0")]
        delta_over_omega: Vec<f64>,
        #[arg(long = "t-max", default_value_t = std::f64::consts::TAU)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
    /// Executes a protocol (op list or compiled schedule) on a register.
    RegisterRun {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        register: PathBuf,
        /// Seed for Monte Carlo sampling; overrides the register's own.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the op log here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Compiles a circuit into a timed schedule.
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        /// Device document; a default device with `--n-sites` sites otherwise.
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long = "n-sites")]
        n_sites: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Itemized fidelity budget of a schedule.
    Budget {
        #[arg(long)]
        schedule: PathBuf,
        /// Noise model document; reference values otherwise.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Replaces the blockade loss attached by the compiler.
        #[arg(long = "blockade-loss")]
        blockade_loss: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `lo,hi`, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("{}: {e}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("{}: {e}", parts[1]))?;
    Ok((lo, hi))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to `path` through a temporary file in the same directory, or to stdout.
fn emit(out: &Output, bytes: &[u8]) -> Result<()> {
    match &out.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

fn species(path: &Option<PathBuf>) -> Result<SpeciesModel> {
    match path {
        Some(p) => SpeciesModel::from_path(p).with_context(|| format!("loading species {}", p.display())),
        None => Ok(SpeciesModel::sr87()),
    }
}

fn polarizability<'a>(sp: &'a SpeciesModel, window: Option<f64>) -> Polarizability<'a> {
    let pol = Polarizability::new(sp);
    match window {
        Some(w) => pol.with_resonance_window(w),
        None => pol,
    }
}

/// Op list, `{"ops": [...]}` or a compiled schedule with `layers`.
fn protocol_ops(text: &str) -> Result<Vec<ProtocolOp>> {
    let value: serde_json::Value = serde_json::from_str(text).context("protocol is not JSON")?;
    if value.is_array() {
        return Ok(serde_json::from_value(value)?);
    }
    if value.get("layers").is_some() {
        let schedule: Schedule = serde_json::from_value(value)?;
        return Ok(schedule.ops());
    }
    match value.get("ops") {
        Some(ops) => Ok(serde_json::from_value(ops.clone())?),
        None => bail!("protocol must be an op list, an object with `ops`, or a schedule with `layers`"),
    }
}

#[derive(Serialize)]
struct Curve {
    gamma_over_omega: f64,
    delta_over_omega: f64,
    omega_t: Vec<f64>,
    loss: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PolarizabilityScan { level, range_nm, step_nm, resonance_window_nm, format, out } => {
            let sp = species(&cli.species)?;
            let samples = polarizability(&sp, resonance_window_nm).scan(&level, range_nm, step_nm)?;
            let bytes = match format {
                Format::Json => json(&samples)?,
                Format::Csv => csv_bytes(
                    &["wavelength_nm".into(), "alpha_au".into()],
                    samples.iter().map(|s| vec![s.wavelength_nm.to_string(), s.alpha_au.to_string()]),
                )?,
            };
            emit(&out, &bytes)
        }
        Command::PolarizabilityZeros { level, range_nm, step_nm, resonance_window_nm, format, out } => {
            let sp = species(&cli.species)?;
            let zeros = polarizability(&sp, resonance_window_nm).find_zero_crossings(&level, range_nm, step_nm)?;
            let bytes = match format {
                Format::Json => json(&zeros)?,
                Format::Csv => csv_bytes(&["wavelength_nm".into()], zeros.iter().map(|z| vec![z.to_string()]))?,
            };
            emit(&out, &bytes)
        }
        Command::BlockadeEvolve { gamma_over_omega, delta_over_omega, t_max, points, rk4, report, format, out } => {
            let p = BlockadeParams::from_ratios(gamma_over_omega, delta_over_omega)?;
            if report {
                let r = blockade_gate_outcome(&p)?;
                let bytes = match format {
                    Format::Json => json(&r)?,
                    Format::Csv => csv_bytes(
                        &["phase_01".into(), "loss_01".into(), "residual_phase".into()],
                        [vec![r.phase_01.to_string(), r.loss_01.to_string(), r.residual_phase.to_string()]],
                    )?,
                };
                return emit(&out, &bytes);
            }
            if points < 2 {
                bail!("need at least 2 points, got {points}");
            }
            let mut rows = Vec::with_capacity(points);
            for k in 0..points {
                let wt = t_max * k as f64 / (points - 1) as f64;
                let t = p.time_for_area(wt);
                let psi = if rk4 {
                    evolve_rk4(&p, TwoLevelAmplitudes::ground(), t, default_rk4_step(&p))?
                } else {
                    evolve(&p, TwoLevelAmplitudes::ground(), t)?
                };
                rows.push((wt, psi));
            }
            let bytes = match format {
                Format::Json => json(&rows.iter().map(|(wt, psi)| serde_json::json!({
                    "omega_t": wt, "c_g": psi.c_g, "c_e": psi.c_e, "norm_sqr": psi.norm_sqr(),
                })).collect::<Vec<_>>())?,
                Format::Csv => csv_bytes(
                    &["omega_t", "re_g", "im_g", "re_e", "im_e", "norm_sqr"].map(String::from),
                    rows.iter().map(|(wt, psi)| {
                        [*wt, psi.c_g.re, psi.c_g.im, psi.c_e.re, psi.c_e.im, psi.norm_sqr()]
                            .iter()
                            .map(f64::to_string)
                            .collect()
                    }),
                )?,
            };
            emit(&out, &bytes)
        }
        Command::BlockadeCurves { gamma_over_omega, delta_over_omega, t_max, points, format, out } => {
            let mut curves = Vec::new();
            for &g in &gamma_over_omega {
                for &d in &delta_over_omega {
                    let p = BlockadeParams::from_ratios(g, d)?;
                    let c = loss_curve(&p, t_max, points)?;
                    curves.push(Curve { gamma_over_omega: g, delta_over_omega: d, omega_t: c.times, loss: c.loss });
                }
            }
            let bytes = match format {
                Format::Json => json(&curves)?,
                Format::Csv => {
                    let mut header = vec!["omega_t".to_string()];
                    if curves.len() == 1 {
                        header.push("loss".into());
                    } else {
                        header.extend(
                            curves.iter().map(|c| format!("loss_g{}_d{}", c.gamma_over_omega, c.delta_over_omega)),
                        );
                    }
                    let rows = (0..points).map(|k| {
                        let mut row = vec![curves[0].omega_t[k].to_string()];
                        row.extend(curves.iter().map(|c| c.loss[k].to_string()));
                        row
                    });
                    csv_bytes(&header, rows)?
                }
            };
            emit(&out, &bytes)
        }
        Command::RegisterRun { protocol, register, seed, log, out } => {
            let sp = Arc::new(species(&cli.species)?);
            let ops = protocol_ops(&read(&protocol)?)?;
            let mut doc = RegisterDocument::from_json(&read(&register)?)?;
            if seed.is_some() {
                doc.config.seed = seed;
            }
            let mut reg = doc.into_register(sp)?;
            let result = reg.run(&ops);
            if let Some(path) = log {
                emit(&Output { output: Some(path) }, &json(reg.log())?)?;
            }
            result?;
            emit(&out, &json(&reg.to_document())?)
        }
        Command::Compile { circuit, device, n_sites, out } => {
            let sp = Arc::new(species(&cli.species)?);
            let circuit = Circuit::from_json(&read(&circuit)?)?;
            let device = match (device, n_sites) {
                (Some(p), _) => Device::from_json(&read(&p)?)?,
                (None, Some(n)) => Device::new(n),
                (None, None) => bail!("give --device or --n-sites"),
            };
            let schedule = compile_with_species(sp, &circuit, &device)?;
            emit(&out, &json(&schedule)?)
        }
        Command::Budget { schedule, noise, blockade_loss, format, out } => {
            let sp = species(&cli.species)?;
            let schedule = Schedule::from_json(&read(&schedule)?)?;
            let noise = match noise {
                Some(p) => serde_json::from_str(&read(&p)?).context("malformed noise model")?,
                None => NoiseModel::reference(&sp),
            };
            let b = gate_fidelity_estimate(&sp, &schedule, &noise, blockade_loss)?;
            let bytes = match format {
                Format::Json => json(&b)?,
                Format::Csv => csv_bytes(
                    &["source".into(), "infidelity".into()],
                    b.items
                        .iter()
                        .map(|i| vec![i.source.clone(), i.infidelity.to_string()])
                        .chain([vec!["total_fidelity".into(), b.total_fidelity.to_string()]]),
                )?,
            };
            emit(&out, &bytes)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aeqsim: {e:#}");
            ExitCode::FAILURE
        }
    }
}
