use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prodec_cli::experiments::{
    distillation_csv, ghz_csv, lattice_surgery_estimate, measure_volume_runtime, run_distillation,
    run_ghz_comparison, run_threshold, threshold_csv, volume_csv, CircuitSpec, ExperimentConfig,
    ModeSpec, NoiseKind, SurgeryKind,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "prodec", about = "Correlated decoding workbench for transversal surface-code circuits", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated odd code distances.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3usize, 5, 7])]
    distances: Vec<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Logical error rates over a (distance, p) grid with crossing estimate.
    Threshold {
        #[command(flatten)]
        common: CommonArgs,
        /// Circuit family.
        #[arg(long, default_value = "memory")]
        circuit: String,
        /// Comma-separated physical error rates.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.5e-3, 4e-3, 5.5e-3, 7e-3, 8.5e-3, 1.1e-2])]
        ps: Vec<f64>,
        /// Logical qubits for the random Clifford family.
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        /// Gate layers for the random Clifford family.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Circuit-sampling seed for the random Clifford family.
        #[arg(long, default_value_t = 2024)]
        circuit_seed: u64,
        #[arg(long, default_value = "parallel")]
        mode: String,
        #[arg(long, default_value = "circuit")]
        noise: String,
        /// Reference p for the slope-exponent readout.
        #[arg(long, default_value_t = 2.5e-3)]
        slope_at: f64,
    },
    /// Subgraph versus iterative-copy decoding of the GHZ pair product.
    GhzCompare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 3e-3)]
        p: f64,
    },
    /// Staged commitment decoding of the 15-to-1 factory.
    Distill {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![3e-3, 4.5e-3, 6e-3, 7.5e-3, 9e-3, 1.1e-2])]
        ps: Vec<f64>,
    },
    /// Decode wall time versus decoding volume.
    VolumeRuntime {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1e-3)]
        p: f64,
    },
    /// Closed-form lattice-surgery decoding work and latency (units of T0).
    SurgeryEstimate {
        #[arg(long, default_value = "distillation")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        qubits: usize,
        #[arg(long, default_value_t = 14)]
        depth: usize,
    },
    /// Generic run from a JSON experiment config.
    Run {
        /// Path to the JSON config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<ModeSpec> {
    Ok(match s {
        "parallel" => ModeSpec::Parallel,
        "commit" => ModeSpec::Commit,
        "iterative" => ModeSpec::Iterative,
        other => bail!("unknown mode `{other}` (parallel|commit|iterative)"),
    })
}

fn parse_noise(s: &str) -> Result<NoiseKind> {
    Ok(match s {
        "circuit" => NoiseKind::Circuit,
        "pheno" | "phenomenological" => NoiseKind::Phenomenological,
        other => bail!("unknown noise model `{other}` (circuit|pheno)"),
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().ok();
    }
    match cli.command {
        Command::Threshold {
            common,
            circuit,
            ps,
            qubits,
            depth,
            circuit_seed,
            mode,
            noise,
            slope_at,
        } => {
            let spec = match circuit.as_str() {
                "memory" => CircuitSpec::Memory { rounds: None },
                "clifford" => {
                    CircuitSpec::RandomClifford { n_qubits: qubits, depth, circuit_seed }
                }
                "ghz" => CircuitSpec::Ghz,
                other => bail!("unknown circuit `{other}` (memory|clifford|ghz)"),
            };
            let config = ExperimentConfig {
                circuit: spec,
                layout: None,
                distances: common.distances,
                ps,
                shots: common.shots,
                seed: common.seed,
                mode: parse_mode(&mode)?,
                noise: parse_noise(&noise)?,
            };
            let scan = run_threshold(&config, slope_at)?;
            emit(common.out.as_ref(), &threshold_csv(&config, &scan))?;
        }
        Command::GhzCompare { common, p } => {
            let rows = run_ghz_comparison(&common.distances, p, common.shots, common.seed)?;
            emit(common.out.as_ref(), &ghz_csv(p, common.seed, &rows))?;
        }
        Command::Distill { common, ps } => {
            let scan = run_distillation(&common.distances, &ps, common.shots, common.seed)?;
            let csv = distillation_csv(&scan, common.seed);
            emit(common.out.as_ref(), &csv)?;
            if scan.stages.probe_factory_checks != 0 {
                bail!(
                    "invariant violated: probe re-decodes {} factory checks",
                    scan.stages.probe_factory_checks
                );
            }
        }
        Command::VolumeRuntime { common, p } => {
            let vr = measure_volume_runtime(&common.distances, common.shots, p, common.seed)?;
            emit(common.out.as_ref(), &volume_csv(&vr))?;
        }
        Command::SurgeryEstimate { kind, qubits, depth } => {
            let kind = match kind.as_str() {
                "distillation" => SurgeryKind::Distillation,
                "clifford" => SurgeryKind::Clifford { n_qubits: qubits, depth },
                other => bail!("unknown kind `{other}` (distillation|clifford)"),
            };
            let (work, latency) = lattice_surgery_estimate(&kind);
            println!("work_T0={work} latency_T0={latency}");
        }
        Command::Run { config, seed, shots, mode, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(shots) = shots {
                cfg.shots = shots;
            }
            if let Some(mode) = mode {
                cfg.mode = parse_mode(&mode)?;
            }
            let scan = run_threshold(&cfg, 2.5e-3)?;
            emit(out.as_ref(), &threshold_csv(&cfg, &scan))?;
        }
    }
    Ok(())
}
