//! Exhaustive search over sensor geometries, and the comparison baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{build_channel_state_with, pairwise_weight_vector};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::sensor::SensorStructure;
use crate::waveform::{
    constrained_allocation, uniform_reference_distance, PowerAllocation, SolveStatus,
};

/// Inclusive arithmetic range `min, min + step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn single(v: f64) -> Self {
        Self {
            min: v,
            max: v,
            step: v,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.min > 0.0) {
            return Err(Error::invalid(format!("{name}_min"), "must be positive"));
        }
        if !(self.max.is_finite() && self.max >= self.min) {
            return Err(Error::invalid(
                format!("{name}_max"),
                "must be >= the minimum",
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(format!("{name}_step"), "must be positive"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.min + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSearchSpace {
    pub side_length: ParamRange,
    pub gap_width: ParamRange,
    pub units_per_side: Vec<u32>,
}

impl StructureSearchSpace {
    pub fn validate(&self) -> Result<()> {
        self.side_length.validate("side_length")?;
        self.gap_width.validate("gap_width")?;
        if self.units_per_side.is_empty() || self.units_per_side.contains(&0) {
            return Err(Error::invalid(
                "units_per_side",
                "need at least one value, all >= 1",
            ));
        }
        Ok(())
    }

    /// Valid structures in lexicographic `(side_length, gap_width, units)` order.
    pub fn points(&self, permittivity: f64) -> Vec<SensorStructure> {
        let mut units = self.units_per_side.clone();
        units.sort_unstable();
        units.dedup();
        let mut out = Vec::new();
        for &l in &self.side_length.values() {
            for &g in &self.gap_width.values() {
                for &n in &units {
                    if let Ok(s) = SensorStructure::new(l, g, n, permittivity) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    pub fn with_units(&self, units_per_side: Vec<u32>) -> Self {
        Self {
            units_per_side,
            ..self.clone()
        }
    }
}

impl Default for StructureSearchSpace {
    fn default() -> Self {
        Self {
            side_length: ParamRange {
                min: 4.5e-3,
                max: 5.5e-3,
                step: 0.5e-3,
            },
            gap_width: ParamRange {
                min: 0.2e-3,
                max: 0.3e-3,
                step: 0.05e-3,
            },
            units_per_side: vec![5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureEvaluation {
    pub structure: SensorStructure,
    /// Capacity at the sensing-constrained allocation, bits/s (0 when infeasible).
    pub capacity: f64,
    /// Sensing distance at the optimized allocation.
    pub distance: f64,
    /// Sensing distance at the uniform allocation.
    pub uniform_distance: f64,
    pub feasible: bool,
    pub status: SolveStatus,
    pub allocation: PowerAllocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    /// Highest-capacity feasible point, or the largest-distance point when none is feasible.
    pub best: SensorStructure,
    pub capacity: f64,
    pub distance: f64,
    pub uniform_distance: f64,
    pub feasible: bool,
    pub evaluated: usize,
    pub evaluations: Vec<StructureEvaluation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    /// Best structure with the sensing constraint dropped.
    pub no_threshold: StructureReport,
    /// Average capacity over random feasible structures.
    pub random_structure_capacity: f64,
    pub random_structure_distance: f64,
    pub random_structures: Vec<SensorStructure>,
    /// Water-filling capacity of the line-of-sight channel alone.
    pub no_sensor_capacity: f64,
}

/// Capacity of `structure` under the scenario with the sensing threshold `delta`.
pub fn evaluate_structure(
    structure: &SensorStructure,
    scenario: &ScenarioConfig,
    delta: f64,
) -> Result<StructureEvaluation> {
    structure.validate()?;
    let cs = build_channel_state_with(scenario, Some(structure))?;
    let w = pairwise_weight_vector(&cs);
    let report = constrained_allocation(&cs, &w, scenario.power_budget, delta)?;
    let feasible = report.status != SolveStatus::Infeasible;
    Ok(StructureEvaluation {
        structure: *structure,
        capacity: if feasible { report.capacity } else { 0.0 },
        distance: report.distance,
        uniform_distance: uniform_reference_distance(&w, scenario.power_budget),
        feasible,
        status: report.status,
        allocation: report.allocation,
    })
}

fn evaluate_all(
    points: &[SensorStructure],
    scenario: &ScenarioConfig,
    delta: f64,
) -> Result<Vec<StructureEvaluation>> {
    points
        .par_iter()
        .map(|s| evaluate_structure(s, scenario, delta))
        .collect()
}

/// Picks the winner from evaluations listed in lexicographic order; the
/// earliest point wins ties.
fn select(evaluations: Vec<StructureEvaluation>) -> Result<StructureReport> {
    let mut best: Option<usize> = None;
    for (i, e) in evaluations.iter().enumerate() {
        if e.feasible && best.is_none_or(|b| e.capacity > evaluations[b].capacity) {
            best = Some(i);
        }
    }
    let feasible = best.is_some();
    let best = match best {
        Some(b) => b,
        None => {
            let mut b = 0;
            for (i, e) in evaluations.iter().enumerate() {
                if e.distance > evaluations[b].distance {
                    b = i;
                }
            }
            b
        }
    };
    let winner = evaluations
        .get(best)
        .ok_or_else(|| Error::invalid("space", "no valid structure in the search space"))?
        .clone();
    Ok(StructureReport {
        best: winner.structure,
        capacity: winner.capacity,
        distance: winner.distance,
        uniform_distance: winner.uniform_distance,
        feasible,
        evaluated: evaluations.len(),
        evaluations,
    })
}

/// Grid search for the highest-capacity structure meeting `D >= delta`.
pub fn optimize_structure(
    space: &StructureSearchSpace,
    scenario: &ScenarioConfig,
    delta: f64,
) -> Result<StructureReport> {
    space.validate()?;
    let points = space.points(scenario.sensor.structure.substrate_permittivity);
    if points.is_empty() {
        return Err(Error::invalid(
            "space",
            "no valid structure in the search space",
        ));
    }
    select(evaluate_all(&points, scenario, delta)?)
}

/// Capacity of the line-of-sight channel with plain water-filling.
pub fn no_sensor_capacity(scenario: &ScenarioConfig) -> Result<f64> {
    let cs = build_channel_state_with(scenario, None)?;
    let w = vec![0.0; cs.n_subcarriers()];
    Ok(constrained_allocation(&cs, &w, scenario.power_budget, 0.0)?.capacity)
}

/// Draws `draws` structures uniformly from the feasible points of `proposed`.
fn random_feasible(
    evaluations: &[StructureEvaluation],
    draws: usize,
    seed: u64,
) -> Vec<&StructureEvaluation> {
    let feasible: Vec<&StructureEvaluation> = evaluations.iter().filter(|e| e.feasible).collect();
    if feasible.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| feasible[rng.random_range(0..feasible.len())])
        .collect()
}

/// The proposed optimum at `delta` together with the three comparison baselines.
pub fn baselines(
    scenario: &ScenarioConfig,
    space: &StructureSearchSpace,
    delta: f64,
    seed: u64,
) -> Result<(StructureReport, Baselines)> {
    let proposed = optimize_structure(space, scenario, delta)?;
    let no_threshold = optimize_structure(space, scenario, 0.0)?;
    let draws = random_feasible(&proposed.evaluations, scenario.random_draws, seed);
    let random_structures: Vec<SensorStructure> = draws.iter().map(|e| e.structure).collect();
    let (random_structure_capacity, random_structure_distance) = if draws.is_empty() {
        (0.0, 0.0)
    } else {
        let n = draws.len() as f64;
        (
            draws.iter().map(|e| e.capacity).sum::<f64>() / n,
            draws.iter().map(|e| e.distance).sum::<f64>() / n,
        )
    };
    Ok((
        proposed,
        Baselines {
            no_threshold,
            random_structure_capacity,
            random_structure_distance,
            random_structures,
            no_sensor_capacity: no_sensor_capacity(scenario)?,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.band.n_subcarriers = 128;
        cfg
    }

    fn reference_delta(cfg: &ScenarioConfig) -> f64 {
        let e = evaluate_structure(&cfg.sensor.structure, cfg, 0.0).unwrap();
        e.uniform_distance
    }

    #[test]
    fn range_values_are_inclusive() {
        let r = ParamRange {
            min: 4.5e-3,
            max: 5.5e-3,
            step: 0.5e-3,
        };
        assert_eq!(r.values().len(), 3);
        assert_eq!(ParamRange::single(2.0).values(), vec![2.0]);
    }

    #[test]
    fn zero_threshold_always_feasible() {
        let cfg = scenario();
        let e = evaluate_structure(&cfg.sensor.structure, &cfg, 0.0).unwrap();
        assert!(e.feasible);
        let cs = build_channel_state_with(&cfg, Some(&cfg.sensor.structure)).unwrap();
        let wf = crate::waveform::classic_waterfilling(&cs.snr_gains(), cfg.power_budget).unwrap();
        let direct = crate::waveform::avg_capacity(&wf.powers, &cs);
        assert!((e.capacity - direct).abs() <= 1e-9 * direct);
    }

    #[test]
    fn detuned_sensor_cannot_sense() {
        let cfg = scenario();
        let base = crate::sensor::structure_to_circuit(
            &cfg.sensor.structure,
            &cfg.states[0],
            &cfg.sensor.material,
            &cfg.sensor.calibration,
        )
        .unwrap();
        // f0 ∝ 1/ℓ; push the dip `bandwidths` dip-widths above the band.
        let detuned = |bandwidths: f64| {
            let target = 6.1e9 + bandwidths * base.f0 / base.q_factor;
            SensorStructure {
                side_length: cfg.sensor.structure.side_length * base.f0 / target,
                ..cfg.sensor.structure
            }
        };
        let delta = reference_delta(&cfg);
        let near = evaluate_structure(&detuned(10.0), &cfg, delta).unwrap();
        let far = evaluate_structure(&detuned(100.0), &cfg, delta).unwrap();
        assert!(!near.feasible && !far.feasible);
        // Lorentzian tails fall off as 1/detuning, so the distance shrinks but never vanishes.
        assert!(near.uniform_distance < 0.2 * delta);
        assert!(far.uniform_distance < 0.3 * near.uniform_distance);
    }

    #[test]
    fn bigger_array_helps_unconstrained_capacity() {
        let cfg = scenario();
        let small = evaluate_structure(&cfg.sensor.structure.with_units(4), &cfg, 0.0).unwrap();
        let big = evaluate_structure(&cfg.sensor.structure.with_units(8), &cfg, 0.0).unwrap();
        assert!(big.capacity >= small.capacity);
    }

    #[test]
    fn singleton_space_returns_its_point() {
        let cfg = scenario();
        let s = cfg.sensor.structure;
        let space = StructureSearchSpace {
            side_length: ParamRange::single(s.side_length),
            gap_width: ParamRange::single(s.gap_width),
            units_per_side: vec![s.units_per_side],
        };
        let r = optimize_structure(&space, &cfg, 0.0).unwrap();
        assert_eq!(r.best, s);
        assert_eq!(r.evaluated, 1);
    }

    #[test]
    fn forced_winner() {
        // Only the in-band structure can meet the threshold.
        let cfg = scenario();
        let delta = reference_delta(&cfg);
        let space = StructureSearchSpace {
            side_length: ParamRange {
                min: 3.0e-3,
                max: 5.0e-3,
                step: 2.0e-3,
            },
            gap_width: ParamRange::single(0.25e-3),
            units_per_side: vec![5],
        };
        let r = optimize_structure(&space, &cfg, delta).unwrap();
        assert!(r.feasible);
        assert_eq!(r.best, cfg.sensor.structure);
        assert_eq!(r.evaluations.iter().filter(|e| e.feasible).count(), 1);
    }

    #[test]
    fn grid_search_matches_independent_loop() {
        let cfg = scenario();
        let delta = 0.8 * reference_delta(&cfg);
        let space = StructureSearchSpace {
            side_length: ParamRange {
                min: 4.8e-3,
                max: 5.2e-3,
                step: 0.2e-3,
            },
            gap_width: ParamRange {
                min: 0.22e-3,
                max: 0.28e-3,
                step: 0.03e-3,
            },
            units_per_side: vec![4, 6],
        };
        let r = optimize_structure(&space, &cfg, delta).unwrap();
        assert_eq!(r.evaluated, 18);

        let mut best: Option<(f64, SensorStructure)> = None;
        for i in 0..3 {
            for j in 0..3 {
                for n in [4u32, 6] {
                    let s = SensorStructure::new(
                        4.8e-3 + 0.2e-3 * i as f64,
                        0.22e-3 + 0.03e-3 * j as f64,
                        n,
                        cfg.sensor.structure.substrate_permittivity,
                    )
                    .unwrap();
                    let cs = build_channel_state_with(&cfg, Some(&s)).unwrap();
                    let w = pairwise_weight_vector(&cs);
                    let rep = constrained_allocation(&cs, &w, cfg.power_budget, delta).unwrap();
                    if rep.status == SolveStatus::Infeasible {
                        continue;
                    }
                    if best.is_none_or(|(c, _)| rep.capacity > c) {
                        best = Some((rep.capacity, s));
                    }
                }
            }
        }
        let (cap, s) = best.unwrap();
        assert_eq!(r.best, s);
        assert_eq!(r.capacity, cap);
    }

    #[test]
    fn baselines_are_ordered() {
        let cfg = scenario();
        let delta = reference_delta(&cfg);
        let (proposed, b) = baselines(&cfg, &cfg.search, delta, 7).unwrap();
        assert!(b.no_threshold.capacity >= proposed.capacity);
        assert!(proposed.capacity >= b.random_structure_capacity);
        assert_eq!(b.random_structures.len(), cfg.random_draws);

        let mut other = cfg.search.clone();
        other.side_length = ParamRange::single(5.0e-3);
        let (_, b2) = baselines(&cfg, &other, delta, 7).unwrap();
        assert_eq!(b.no_sensor_capacity, b2.no_sensor_capacity);
    }

    #[test]
    fn deterministic_reports() {
        let cfg = scenario();
        let delta = reference_delta(&cfg);
        let a = baselines(&cfg, &cfg.search, delta, 3).unwrap();
        let b = baselines(&cfg, &cfg.search, delta, 3).unwrap();
        assert_eq!(a, b);
    }
}
