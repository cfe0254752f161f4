//! Experiment harness: threshold scans, the iterative-copy comparison,
//! staged distillation decoding, volume/runtime measurement and the
//! lattice-surgery estimator.

use crate::stats::{estimate_threshold, linear_fit, per_layer_rate, wilson_interval, RatePoint, ThresholdResult};
use anyhow::{bail, ensure, Context, Result};
use prodec_core::circuit::{
    build_distillation, build_ghz_comparison, build_memory, build_random_clifford,
    LogicalCircuit, ValidateConfig,
};
use prodec_core::layout::LayoutKind;
use prodec_core::noise::NoiseModel;
use prodec_core::pauli::PauliKind;
use prodec_core::matcher::MatchConfig;
use prodec_core::pipeline::{DecodePlan, Pipeline};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircuitSpec {
    /// Single-qubit memory; rounds default to the code distance.
    Memory { rounds: Option<usize> },
    Ghz,
    RandomClifford { n_qubits: usize, depth: usize, circuit_seed: u64 },
    Distillation,
}

impl CircuitSpec {
    pub fn build(&self, distance: usize) -> LogicalCircuit {
        let c = match self {
            CircuitSpec::Memory { rounds } => build_memory(rounds.unwrap_or(distance)),
            CircuitSpec::Ghz => build_ghz_comparison(),
            CircuitSpec::RandomClifford { n_qubits, depth, circuit_seed } => {
                build_random_clifford(*circuit_seed, *n_qubits, *depth)
            }
            CircuitSpec::Distillation => build_distillation(),
        };
        debug_assert!(c.validate(ValidateConfig::default()).is_ok());
        c
    }

    /// Default layout: unrotated wherever fold gates appear.
    pub fn default_layout(&self) -> LayoutKind {
        match self {
            CircuitSpec::RandomClifford { .. } => LayoutKind::Unrotated,
            _ => LayoutKind::Rotated,
        }
    }

    /// Layer count for per-layer rate normalization.
    pub fn depth_for_normalization(&self, distance: usize) -> usize {
        match self {
            CircuitSpec::Memory { rounds } => rounds.unwrap_or(distance),
            CircuitSpec::Ghz => 2,
            CircuitSpec::RandomClifford { depth, .. } => *depth,
            CircuitSpec::Distillation => 1,
        }
    }

    pub fn logical_qubits(&self) -> usize {
        match self {
            CircuitSpec::Memory { .. } => 1,
            CircuitSpec::Ghz => 3,
            CircuitSpec::RandomClifford { n_qubits, .. } => *n_qubits,
            CircuitSpec::Distillation => 21,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Parallel,
    Commit,
    Iterative,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Circuit,
    Phenomenological,
}

impl NoiseKind {
    pub fn model(&self, p: f64) -> NoiseModel {
        match self {
            NoiseKind::Circuit => NoiseModel::CircuitLevel { p },
            NoiseKind::Phenomenological => NoiseModel::Phenomenological { p },
        }
    }
}

/// Fully determines a run together with the code version.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub layout: Option<LayoutKind>,
    pub distances: Vec<usize>,
    pub ps: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
    pub mode: ModeSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
}

fn default_noise() -> NoiseKind {
    NoiseKind::Circuit
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.distances.is_empty(), "need at least one distance");
        ensure!(self.distances.iter().all(|d| d % 2 == 1 && *d >= 3), "distances must be odd ≥ 3");
        ensure!(!self.ps.is_empty(), "need at least one physical error rate");
        ensure!(self.ps.iter().all(|p| (0.0..0.5).contains(p)), "p outside [0, 0.5)");
        ensure!(self.shots > 0, "need shots");
        Ok(())
    }

    pub fn layout(&self) -> LayoutKind {
        self.layout.unwrap_or_else(|| self.circuit.default_layout())
    }
}

/// Experiment pipelines use the early-exit defect search: each defect's
/// Dijkstra stops once its nearest neighbors and the boundary are settled
/// (with automatic fallback to the full search on infeasibility).
fn experiment_pipeline(
    circuit: &LogicalCircuit,
    layout: LayoutKind,
    d: usize,
    noise: NoiseModel,
) -> Pipeline {
    let mut pipeline = Pipeline::new(circuit, layout, d, noise);
    pipeline.match_config = MatchConfig { dijkstra_cutoff: Some(12) };
    pipeline
}

/// Counts shots with at least one wrongly decoded reliable product.
fn count_errors(pipeline: &Pipeline, plan: &DecodePlan, shots: u64, seed: u64) -> u64 {
    (0..shots)
        .into_par_iter()
        .map(|shot| {
            let record = pipeline.sample(seed, shot);
            let decode = plan.decode_shot(pipeline, &record, false);
            u64::from(decode.any_error())
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct ThresholdRow {
    pub distance: usize,
    pub p: f64,
    pub shots: u64,
    pub errors: u64,
    pub rate_total: f64,
    pub rate_layer: f64,
    pub ci: (f64, f64),
}

pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    pub result: ThresholdResult,
}

/// Monte Carlo threshold scan over (distance, p).
pub fn run_threshold(config: &ExperimentConfig, slope_at: f64) -> Result<ThresholdScan> {
    config.validate()?;
    let mut rows = Vec::new();
    for &d in &config.distances {
        let circuit = config.circuit.build(d);
        for &p in &config.ps {
            let pipeline = experiment_pipeline(&circuit, config.layout(), d, config.noise.model(p));
            let plan = match config.mode {
                ModeSpec::Parallel => pipeline.parallel_plan(),
                ModeSpec::Commit => pipeline.commit_plan(None),
                ModeSpec::Iterative => bail!("iterative mode is exposed via ghz-compare"),
            };
            let errors = count_errors(&pipeline, &plan, config.shots, config.seed);
            let rate_total = errors as f64 / config.shots as f64;
            let depth = config.circuit.depth_for_normalization(d);
            let rate_layer =
                per_layer_rate(rate_total, depth, config.circuit.logical_qubits());
            let ci = wilson_interval(errors, config.shots, 1.96);
            rows.push(ThresholdRow {
                distance: d,
                p,
                shots: config.shots,
                errors,
                rate_total,
                rate_layer,
                ci,
            });
        }
    }
    let points: Vec<RatePoint> = rows
        .iter()
        .map(|r| RatePoint {
            distance: r.distance,
            p: r.p,
            errors: r.errors,
            shots: r.shots,
            rate: r.rate_layer,
        })
        .collect();
    let result = estimate_threshold(&points, slope_at, config.seed ^ 0xb00);
    Ok(ThresholdScan { rows, result })
}

pub fn threshold_csv(config: &ExperimentConfig, scan: &ThresholdScan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema=threshold-v1");
    let _ = writeln!(out, "# config={}", serde_json::to_string(config).unwrap());
    match scan.result.p_th {
        Some(p_th) => {
            let (lo, hi) = scan.result.ci.unwrap_or((f64::NAN, f64::NAN));
            let _ = writeln!(out, "# p_th={p_th:.6e} ci_lo={lo:.6e} ci_hi={hi:.6e}");
        }
        None => {
            let _ = writeln!(out, "# p_th=unbounded");
        }
    }
    for (d, slope) in &scan.result.slopes {
        let _ = writeln!(out, "# slope d={d} exponent={slope:.4}");
    }
    let _ = writeln!(out, "distance,p,shots,errors,rate_total,rate_layer,ci_lo,ci_hi");
    for r in &scan.rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.distance, r.p, r.shots, r.errors, r.rate_total, r.rate_layer, r.ci.0, r.ci.1
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct GhzRow {
    pub mode: &'static str,
    pub distance: usize,
    pub errors: u64,
    pub shots: u64,
    pub rate: f64,
    pub ci: (f64, f64),
}

/// Subgraph decoding of the GHZ pair product versus the iterative
/// per-qubit copy-over strategy, at fixed circuit-level p.
pub fn run_ghz_comparison(
    distances: &[usize],
    p: f64,
    shots: u64,
    seed: u64,
) -> Result<Vec<GhzRow>> {
    let circuit = build_ghz_comparison();
    // The deterministic pair product (measurements 1 and 2).
    let members = [1usize, 2usize];
    let mut rows = Vec::new();
    for &d in distances {
        let pipeline =
            experiment_pipeline(&circuit, LayoutKind::Rotated, d, NoiseModel::CircuitLevel { p });
        let product_plan = pipeline.product_plan(&members);
        let errors: u64 = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let record = pipeline.sample(seed, shot);
                let decode = product_plan.decode_shot(&pipeline, &record, false);
                u64::from(decode.any_error())
            })
            .sum();
        let rate = errors as f64 / shots as f64;
        rows.push(GhzRow {
            mode: "subgraph",
            distance: d,
            errors,
            shots,
            rate,
            ci: wilson_interval(errors, shots, 1.96),
        });

        let iterative = pipeline.iterative_plan(PauliKind::Z);
        let errors: u64 = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let record = pipeline.sample(seed, shot);
                let (predicted, actual) =
                    iterative.decode_shot_iterative(&pipeline, &record, &members);
                u64::from(predicted != actual)
            })
            .sum();
        let rate = errors as f64 / shots as f64;
        rows.push(GhzRow {
            mode: "iterative",
            distance: d,
            errors,
            shots,
            rate,
            ci: wilson_interval(errors, shots, 1.96),
        });
    }
    Ok(rows)
}

pub fn ghz_csv(p: f64, seed: u64, rows: &[GhzRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema=ghz-compare-v1 p={p:.6e} seed={seed}");
    let _ = writeln!(out, "mode,distance,shots,errors,rate,ci_lo,ci_hi");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6e},{:.6e},{:.6e}",
            r.mode, r.distance, r.shots, r.errors, r.rate, r.ci.0, r.ci.1
        );
    }
    out
}

/// Which decoding stage a distillation basis column belongs to.
///
/// Stage 1: first gadget group. Stage 2: second group plus the check-qubit
/// readouts. Stage 3: the output-qubit probe.
pub fn distillation_stage(column: usize) -> usize {
    use prodec_core::circuit::DISTILL_STAGE_SPLIT;
    if column < DISTILL_STAGE_SPLIT {
        1
    } else if column < 19 {
        2
    } else {
        3
    }
}

#[derive(Clone, Debug)]
pub struct DistillationStageStats {
    pub volume: [usize; 3],
    pub nanos: [u64; 3],
    /// Checks of stage-3 subgraphs lying on factory patches (must be zero).
    pub probe_factory_checks: usize,
}

pub struct DistillationScan {
    pub rows: Vec<ThresholdRow>,
    pub result: ThresholdResult,
    pub stages: DistillationStageStats,
}

/// Staged commitment decoding of the distillation factory.
pub fn run_distillation(
    distances: &[usize],
    ps: &[f64],
    shots: u64,
    seed: u64,
) -> Result<DistillationScan> {
    let circuit = build_distillation();
    let mut rows = Vec::new();
    let mut stages = None;
    for &d in distances {
        for &p in ps {
            let pipeline =
                experiment_pipeline(&circuit, LayoutKind::Rotated, d, NoiseModel::CircuitLevel { p });
            let plan = pipeline.commit_plan(None);
            if stages.is_none() {
                stages = Some(stage_stats(&pipeline, &plan, seed)?);
            }
            let errors = count_errors(&pipeline, &plan, shots, seed);
            let rate_total = errors as f64 / shots as f64;
            rows.push(ThresholdRow {
                distance: d,
                p,
                shots,
                errors,
                rate_total,
                rate_layer: rate_total,
                ci: wilson_interval(errors, shots, 1.96),
            });
        }
    }
    let points: Vec<RatePoint> = rows
        .iter()
        .map(|r| RatePoint {
            distance: r.distance,
            p: r.p,
            errors: r.errors,
            shots: r.shots,
            rate: r.rate_layer,
        })
        .collect();
    let result = estimate_threshold(&points, 0.0025, seed ^ 0xd15);
    Ok(DistillationScan { rows, result, stages: stages.context("at least one point")? })
}

fn stage_stats(
    pipeline: &Pipeline,
    plan: &DecodePlan,
    seed: u64,
) -> Result<DistillationStageStats> {
    let mut volume = [0usize; 3];
    let mut probe_factory_checks = 0usize;
    for step in &plan.steps {
        let stage = distillation_stage(step.column);
        volume[stage - 1] += step.subgraph.volume();
        if stage == 3 {
            for &check in &step.subgraph.check_ids {
                let logical = pipeline.checks.checks[check as usize].primary.logical as usize;
                // Factory patches are everything but the output qubit (0)
                // and the noiseless probe ancilla (20).
                if logical != 0 && logical != 20 {
                    probe_factory_checks += 1;
                }
            }
        }
    }
    // Wall time per stage, single-threaded, over a handful of timed shots.
    let mut nanos = [0u64; 3];
    for shot in 0..50 {
        let record = pipeline.sample(seed ^ 0x7137ed, shot);
        let decode = plan.decode_shot(pipeline, &record, true);
        for (step, &ns) in plan.steps.iter().zip(&decode.step_nanos) {
            nanos[distillation_stage(step.column) - 1] += ns;
        }
    }
    Ok(DistillationStageStats { volume, nanos, probe_factory_checks })
}

pub fn distillation_csv(scan: &DistillationScan, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema=distillation-v1 seed={seed}");
    match scan.result.p_th {
        Some(p_th) => {
            let (lo, hi) = scan.result.ci.unwrap_or((f64::NAN, f64::NAN));
            let _ = writeln!(out, "# p_th={p_th:.6e} ci_lo={lo:.6e} ci_hi={hi:.6e}");
        }
        None => {
            let _ = writeln!(out, "# p_th=unbounded");
        }
    }
    let s = &scan.stages;
    let _ = writeln!(
        out,
        "# stage_volume s1={} s2={} s3={} stage_ns s1={} s2={} s3={} probe_factory_checks={}",
        s.volume[0], s.volume[1], s.volume[2], s.nanos[0], s.nanos[1], s.nanos[2],
        s.probe_factory_checks
    );
    let _ = writeln!(out, "distance,p,shots,errors,rate,ci_lo,ci_hi");
    for r in &scan.rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{},{},{:.6e},{:.6e},{:.6e}",
            r.distance, r.p, r.shots, r.errors, r.rate_total, r.ci.0, r.ci.1
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct VolumePoint {
    pub kind: &'static str,
    pub distance: usize,
    pub product: usize,
    pub volume: usize,
    pub mean_decode_ns: f64,
}

pub struct VolumeRuntime {
    pub points: Vec<VolumePoint>,
    pub slope_ns_per_check: f64,
    pub r2: f64,
}

/// Wall time versus decoding volume across memory and random-Clifford
/// products at fixed p. Timing is single-threaded.
pub fn measure_volume_runtime(
    distances: &[usize],
    shots_per_product: u64,
    p: f64,
    seed: u64,
) -> Result<VolumeRuntime> {
    let mut points = Vec::new();
    for &d in distances {
        let memory = build_memory(d);
        let pipeline =
            experiment_pipeline(&memory, LayoutKind::Rotated, d, NoiseModel::CircuitLevel { p });
        let plan = pipeline.parallel_plan();
        points.extend(time_products(&pipeline, &plan, "memory", d, shots_per_product, seed));

        let clifford = build_random_clifford(17, 4, 4);
        let pipeline =
            experiment_pipeline(&clifford, LayoutKind::Unrotated, d, NoiseModel::CircuitLevel { p });
        let plan = pipeline.parallel_plan();
        points.extend(time_products(&pipeline, &plan, "clifford", d, shots_per_product, seed));
    }
    let fit_pts: Vec<(f64, f64)> =
        points.iter().map(|p| (p.volume as f64, p.mean_decode_ns)).collect();
    let (slope, _, r2) = linear_fit(&fit_pts);
    Ok(VolumeRuntime { points, slope_ns_per_check: slope, r2 })
}

fn time_products(
    pipeline: &Pipeline,
    plan: &DecodePlan,
    kind: &'static str,
    distance: usize,
    shots: u64,
    seed: u64,
) -> Vec<VolumePoint> {
    let mut totals = vec![0u64; plan.steps.len()];
    for shot in 0..shots {
        let record = pipeline.sample(seed, shot);
        let decode = plan.decode_shot(pipeline, &record, true);
        for (t, &ns) in totals.iter_mut().zip(&decode.step_nanos) {
            *t += ns;
        }
    }
    plan.steps
        .iter()
        .enumerate()
        .map(|(i, step)| VolumePoint {
            kind,
            distance,
            product: i,
            volume: step.subgraph.volume(),
            mean_decode_ns: totals[i] as f64 / shots as f64,
        })
        .collect()
}

pub fn volume_csv(vr: &VolumeRuntime) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema=volume-runtime-v1");
    let _ = writeln!(out, "# fit slope_ns_per_check={:.4} r2={:.4}", vr.slope_ns_per_check, vr.r2);
    let _ = writeln!(out, "kind,distance,product,volume,mean_decode_ns");
    for p in &vr.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.1}",
            p.kind, p.distance, p.product, p.volume, p.mean_decode_ns
        );
    }
    out
}

/// Decoding work and latency of conventional lattice-surgery execution, in
/// units of T₀ (the time to decode one d³ block).
///
/// The distillation factory has 46 surgery edges each covered twice (92 T₀)
/// with a two-stage latency of T₀ + 7T₀/2. A depth-D circuit on n logical
/// qubits costs twice its n·D syndrome volume with three-stage latency.
pub fn lattice_surgery_estimate(kind: &SurgeryKind) -> (f64, f64) {
    match kind {
        SurgeryKind::Distillation => (92.0, 4.5),
        SurgeryKind::Clifford { n_qubits, depth } => {
            if *depth == 0 {
                (0.0, 0.0)
            } else {
                (2.0 * (*n_qubits as f64) * (*depth as f64), 3.0)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurgeryKind {
    Distillation,
    Clifford { n_qubits: usize, depth: usize },
}
