//! Two-path free-space channel: line of sight plus the sensor reflection.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::sensor::{
    frequency_response, CalibrationConstants, MaterialParams, SensingState, SensorStructure,
};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum separation between any two nodes, meters.
pub const MIN_SEPARATION: f64 = 0.1;

pub type Position = [f64; 3];

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Positions of the transmitter, receiver and sensor, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub tx: Position,
    pub rx: Position,
    pub sensor: Position,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tx, self.rx, self.sensor];
        if all.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("geometry", "coordinates must be finite"));
        }
        for (name, a, b) in [
            ("tx-rx", self.tx, self.rx),
            ("tx-sensor", self.tx, self.sensor),
            ("sensor-rx", self.sensor, self.rx),
        ] {
            if distance(&a, &b) <= MIN_SEPARATION {
                return Err(Error::invalid(
                    format!("geometry.{name}"),
                    format!("separation must exceed {MIN_SEPARATION} m"),
                ));
            }
        }
        Ok(())
    }

    pub fn los_distance(&self) -> f64 {
        distance(&self.tx, &self.rx)
    }

    /// Transmitter-to-sensor and sensor-to-receiver distances.
    pub fn reflected_distances(&self) -> (f64, f64) {
        (
            distance(&self.tx, &self.sensor),
            distance(&self.sensor, &self.rx),
        )
    }
}

impl Default for Geometry {
    /// Short indoor link; the detour via the sensor is one wavelength at 5.85 GHz.
    fn default() -> Self {
        Self {
            tx: [0.0, 0.0, 0.0],
            rx: [2.0, 0.0, 0.0],
            sensor: [1.0, 0.2278, 0.0],
        }
    }
}

/// OFDM band split into `n_subcarriers` equal subcarriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f_low: f64,
    pub f_high: f64,
    pub n_subcarriers: usize,
}

impl Band {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_low.is_finite() && self.f_low > 0.0) {
            return Err(Error::invalid("band.f_low", "must be positive"));
        }
        if !(self.f_high.is_finite() && self.f_low < self.f_high) {
            return Err(Error::invalid("band.f_low", "must be below band.f_high"));
        }
        if self.n_subcarriers < 2 {
            return Err(Error::invalid("band.subcarriers", "need at least 2"));
        }
        Ok(())
    }

    pub fn subcarrier_bandwidth(&self) -> f64 {
        (self.f_high - self.f_low) / self.n_subcarriers as f64
    }

    /// Subcarrier centre frequencies.
    pub fn grid(&self) -> Vec<f64> {
        let b = self.subcarrier_bandwidth();
        (0..self.n_subcarriers)
            .map(|k| self.f_low + (k as f64 + 0.5) * b)
            .collect()
    }
}

impl Default for Band {
    fn default() -> Self {
        Self {
            f_low: 5.6e9,
            f_high: 6.1e9,
            n_subcarriers: 512,
        }
    }
}

/// Channel gains of one sensing state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateChannel {
    pub label: usize,
    pub gains: Vec<Complex64>,
}

/// Per-subcarrier gains for every sensing state, sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub grid: Vec<f64>,
    pub subcarrier_bandwidth: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    pub states: Vec<StateChannel>,
}

impl ChannelState {
    /// Assembles a channel state, rejecting duplicate labels and ragged gain vectors.
    pub fn new(
        grid: Vec<f64>,
        subcarrier_bandwidth: f64,
        noise_psd: f64,
        mut states: Vec<StateChannel>,
    ) -> Result<Self> {
        if !(noise_psd.is_finite() && noise_psd >= 0.0) {
            return Err(Error::invalid("noise_psd", "must be non-negative"));
        }
        if !(subcarrier_bandwidth.is_finite() && subcarrier_bandwidth > 0.0) {
            return Err(Error::invalid("subcarrier_bandwidth", "must be positive"));
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.label) {
                return Err(Error::DuplicateState(s.label));
            }
            if s.gains.len() != grid.len() {
                return Err(Error::ShapeMismatch(format!(
                    "state {} has {} gains for {} subcarriers",
                    s.label,
                    s.gains.len(),
                    grid.len()
                )));
            }
        }
        states.sort_by_key(|s| s.label);
        Ok(Self {
            grid,
            subcarrier_bandwidth,
            noise_psd,
            states,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.grid.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.label).collect()
    }

    /// Per-state SNR slopes `|H_k|^2 / (N0 * B_sc)`, one row per state.
    pub fn snr_gains(&self) -> Vec<Vec<f64>> {
        let scale = self.noise_psd * self.subcarrier_bandwidth;
        self.states
            .iter()
            .map(|s| s.gains.iter().map(|h| h.norm_sqr() / scale).collect())
            .collect()
    }
}

/// Free-space amplitude and phase over distance `d` at frequency `f`.
pub fn freespace_segment(d: f64, f: f64) -> Complex64 {
    let amplitude = SPEED_OF_LIGHT / (4.0 * PI * d * f);
    Complex64::from_polar(amplitude, -2.0 * PI * f * d / SPEED_OF_LIGHT)
}

/// Line-of-sight gains on the band grid.
pub fn los_channel(geom: &Geometry, band: &Band) -> Vec<Complex64> {
    let d = geom.los_distance();
    band.grid()
        .into_iter()
        .map(|f| freespace_segment(d, f))
        .collect()
}

/// Array re-radiation gain `aperture_gain * N^2`.
pub fn aperture_gain(structure: &SensorStructure, cal: &CalibrationConstants) -> f64 {
    let n = structure.units_per_side as f64;
    cal.aperture_gain * n * n
}

/// LoS plus sensor-reflected gains for one sensing state.
pub fn composite_channel(
    geom: &Geometry,
    structure: &SensorStructure,
    state: &SensingState,
    mat: &MaterialParams,
    cal: &CalibrationConstants,
    band: &Band,
) -> Result<Vec<Complex64>> {
    band.validate()?;
    geom.validate()?;
    let grid = band.grid();
    let response = frequency_response(structure, state, mat, cal, &grid)?;
    let d_los = geom.los_distance();
    let (d1, d2) = geom.reflected_distances();
    let g = aperture_gain(structure, cal);
    Ok(grid
        .iter()
        .zip(&response.gamma)
        .map(|(&f, &gamma)| {
            freespace_segment(d_los, f)
                + g * gamma * freespace_segment(d1, f) * freespace_segment(d2, f)
        })
        .collect())
}

/// Channel state of the configured scenario with its default sensor.
pub fn build_channel_state(scenario: &ScenarioConfig) -> Result<ChannelState> {
    let structure = scenario
        .sensor
        .enabled
        .then_some(&scenario.sensor.structure);
    build_channel_state_with(scenario, structure)
}

/// Channel state of the scenario with `structure` in place of the configured
/// sensor; `None` removes the sensor so every state sees line of sight only.
pub fn build_channel_state_with(
    scenario: &ScenarioConfig,
    structure: Option<&SensorStructure>,
) -> Result<ChannelState> {
    if scenario.states.len() < 2 {
        return Err(Error::invalid("states", "need at least two sensing states"));
    }
    let mut seen = BTreeSet::new();
    for s in &scenario.states {
        if !seen.insert(s.label) {
            return Err(Error::DuplicateState(s.label));
        }
    }
    let band = &scenario.band;
    let states = scenario
        .states
        .iter()
        .map(|state| {
            let gains = match structure {
                Some(structure) => composite_channel(
                    &scenario.geometry,
                    structure,
                    state,
                    &scenario.sensor.material,
                    &scenario.sensor.calibration,
                    band,
                )?,
                None => los_channel(&scenario.geometry, band),
            };
            Ok(StateChannel {
                label: state.label,
                gains,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelState::new(
        band.grid(),
        band.subcarrier_bandwidth(),
        scenario.noise_psd,
        states,
    )
}

/// Mean over state pairs of the squared per-subcarrier gain separation.
pub fn pairwise_weight_vector(cs: &ChannelState) -> Vec<f64> {
    let k = cs.n_subcarriers();
    let s = cs.n_states();
    let mut w = vec![0.0; k];
    if s < 2 {
        return w;
    }
    for i in 0..s {
        for j in i + 1..s {
            for (wk, (a, b)) in w
                .iter_mut()
                .zip(cs.states[i].gains.iter().zip(&cs.states[j].gains))
            {
                *wk += (a - b).norm_sqr();
            }
        }
    }
    let pairs = (s * (s - 1) / 2) as f64;
    w.iter_mut().for_each(|v| *v /= pairs);
    w
}
