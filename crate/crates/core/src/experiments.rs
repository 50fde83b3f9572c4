//! Experiment drivers and CSV output.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::channel::{build_channel_state, build_channel_state_with, pairwise_weight_vector};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::link::sensing_accuracy;
use crate::structure::{baselines, optimize_structure, StructureReport};
use crate::waveform::{
    constrained_allocation, uniform_reference_distance, PowerAllocation, SolveStatus,
};

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "variable",
    "value",
    "capacity_bps",
    "distance",
    "accuracy",
    "accuracy_half_width",
    "status",
    "seed",
];

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub variable: String,
    pub value: f64,
    pub capacity: Option<f64>,
    pub distance: Option<f64>,
    pub accuracy: Option<f64>,
    pub half_width: Option<f64>,
    pub status: String,
    pub seed: u64,
}

/// 17 significant digits in scientific notation.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

impl ResultRow {
    fn fields(&self) -> [String; 9] {
        [
            self.experiment.clone(),
            self.variable.clone(),
            format_real(self.value),
            opt_real(self.capacity),
            opt_real(self.distance),
            opt_real(self.accuracy),
            opt_real(self.half_width),
            self.status.clone(),
            self.seed.to_string(),
        ]
    }
}

/// Sensing reference of the scenario's own sensor: uniform-allocation distance.
pub fn reference_distance(cfg: &ScenarioConfig) -> Result<f64> {
    let cs = build_channel_state(cfg)?;
    Ok(uniform_reference_distance(
        &pairwise_weight_vector(&cs),
        cfg.power_budget,
    ))
}

/// Allocation, capacity and detection accuracy of the configured scenario at
/// each `δ = alpha * D_uniform`, in input order.
pub fn run_delta_sweep(cfg: &ScenarioConfig, alphas: &[f64]) -> Result<Vec<ResultRow>> {
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::invalid(
            "alpha",
            format!("{a} is not a non-negative number"),
        ));
    }
    let cs = build_channel_state(cfg)?;
    let w = pairwise_weight_vector(&cs);
    let d_uniform = uniform_reference_distance(&w, cfg.power_budget);

    alphas
        .par_iter()
        .map(|&alpha| {
            let report = constrained_allocation(&cs, &w, cfg.power_budget, alpha * d_uniform)?;
            let row = |capacity, accuracy: Option<(f64, f64)>| ResultRow {
                experiment: "sweep-delta".into(),
                variable: "alpha".into(),
                value: alpha,
                capacity,
                distance: Some(report.distance),
                accuracy: accuracy.map(|a| a.0),
                half_width: accuracy.map(|a| a.1),
                status: report.status.as_str().into(),
                seed: cfg.link.seed,
            };
            if report.status == SolveStatus::Infeasible {
                return Ok(row(None, None));
            }
            let acc = sensing_accuracy(&report.allocation.powers, &cs, &cfg.link)?;
            Ok(row(
                Some(report.capacity),
                Some((acc.accuracy, acc.half_width)),
            ))
        })
        .collect()
}

/// Single-scenario report at the configured `alpha`.
pub fn run_simulate(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    let mut rows = run_delta_sweep(cfg, &[cfg.alpha])?;
    rows.iter_mut()
        .for_each(|r| r.experiment = "simulate".into());
    Ok(rows)
}

/// Threshold used by the size sweep at array size `units`: `alpha` times the
/// uniform-allocation distance of the configured structure resized to `units`.
pub fn size_threshold(cfg: &ScenarioConfig, units: u32) -> Result<f64> {
    let structure = cfg.sensor.structure.with_units(units);
    let cs = build_channel_state_with(cfg, Some(&structure))?;
    Ok(cfg.alpha * uniform_reference_distance(&pairwise_weight_vector(&cs), cfg.power_budget))
}

fn feasibility(report: &StructureReport) -> &'static str {
    if report.feasible {
        "optimal"
    } else {
        "infeasible"
    }
}

/// Proposed structure plus the three baselines at every array size.
pub fn run_size_sweep(cfg: &ScenarioConfig, sizes: &[u32]) -> Result<Vec<ResultRow>> {
    if sizes.iter().any(|&n| n < 1) {
        return Err(Error::invalid("sizes", "array sizes must be at least 1"));
    }
    let per_size: Vec<Vec<ResultRow>> = sizes
        .iter()
        .map(|&n| {
            let delta = size_threshold(cfg, n)?;
            let space = cfg.search.with_units(vec![n]);
            let (proposed, base) = baselines(cfg, &space, delta, cfg.link.seed)?;
            let row = |series: &str, capacity: f64, distance: f64, status: &str| ResultRow {
                experiment: format!("sweep-size/{series}"),
                variable: "units_per_side".into(),
                value: n as f64,
                capacity: Some(capacity),
                distance: Some(distance),
                accuracy: None,
                half_width: None,
                status: status.into(),
                seed: cfg.link.seed,
            };
            Ok(vec![
                row(
                    "proposed",
                    proposed.capacity,
                    proposed.distance,
                    feasibility(&proposed),
                ),
                row(
                    "no_threshold",
                    base.no_threshold.capacity,
                    base.no_threshold.distance,
                    feasibility(&base.no_threshold),
                ),
                row(
                    "random_structure",
                    base.random_structure_capacity,
                    base.random_structure_distance,
                    if base.random_structures.is_empty() {
                        "infeasible"
                    } else {
                        "optimal"
                    },
                ),
                row("no_sensor", base.no_sensor_capacity, 0.0, "optimal"),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per_size.into_iter().flatten().collect())
}

/// Every grid point of the configured search space followed by the winner.
pub fn run_optimize_structure(cfg: &ScenarioConfig) -> Result<(StructureReport, Vec<ResultRow>)> {
    let delta = cfg.alpha * reference_distance(cfg)?;
    let report = optimize_structure(&cfg.search, cfg, delta)?;
    let describe = |s: &crate::sensor::SensorStructure| {
        format!(
            "side_length={};gap_width={};units_per_side={}",
            format_real(s.side_length),
            format_real(s.gap_width),
            s.units_per_side
        )
    };
    let mut rows: Vec<ResultRow> = report
        .evaluations
        .iter()
        .enumerate()
        .map(|(i, e)| ResultRow {
            experiment: "optimize-structure/point".into(),
            variable: describe(&e.structure),
            value: i as f64,
            capacity: e.feasible.then_some(e.capacity),
            distance: Some(e.distance),
            accuracy: None,
            half_width: None,
            status: e.status.as_str().into(),
            seed: cfg.link.seed,
        })
        .collect();
    rows.push(ResultRow {
        experiment: "optimize-structure/best".into(),
        variable: describe(&report.best),
        value: delta,
        capacity: report.feasible.then_some(report.capacity),
        distance: Some(report.distance),
        accuracy: None,
        half_width: None,
        status: feasibility(&report).into(),
        seed: cfg.link.seed,
    });
    Ok((report, rows))
}

/// Detector-only Monte Carlo at the uniform allocation for several frame counts.
pub fn run_accuracy(cfg: &ScenarioConfig, frames: &[usize]) -> Result<Vec<ResultRow>> {
    let cs = build_channel_state(cfg)?;
    let w = pairwise_weight_vector(&cs);
    let p = PowerAllocation::uniform(cs.n_subcarriers(), cfg.power_budget);
    let capacity = crate::waveform::avg_capacity(&p.powers, &cs);
    let distance = crate::waveform::sensing_distance(&p.powers, &w);
    frames
        .iter()
        .map(|&m| {
            let mut link = cfg.link;
            link.n_frames = m;
            let acc = sensing_accuracy(&p.powers, &cs, &link)?;
            Ok(ResultRow {
                experiment: "accuracy".into(),
                variable: "frames".into(),
                value: m as f64,
                capacity: Some(capacity),
                distance: Some(distance),
                accuracy: Some(acc.accuracy),
                half_width: Some(acc.half_width),
                status: "optimal".into(),
                seed: cfg.link.seed,
            })
        })
        .collect()
}

/// Writes header and rows as RFC 4180 CSV.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], destination: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("rows", "nothing to write"));
    }
    let file = std::fs::File::create(destination).map_err(|source| Error::Io {
        path: destination.to_path_buf(),
        source,
    })?;
    write_csv(rows, file).map_err(|source| Error::Csv {
        path: destination.to_path_buf(),
        source,
    })
}
