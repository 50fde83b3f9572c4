//! Split-ring-resonator humidity sensor model.
//!
//! The sensor is an `N x N` array of split rings whose gaps are filled with a
//! humidity-sensitive resistive film. Each ring is reduced to a series RLC
//! surrogate:
//!
//! * `L = K_L * side_length`
//! * `C = K_C * permittivity * side_length / gap_width`
//! * `R = r_max * exp(-decay_rate * humidity)`
//!
//! from which the resonance frequency, Q-factor and absorption depth follow.
//! The reflection coefficient is a complex Lorentzian dip centred on the
//! resonance, `Γ(f) = 1 - A / (1 + 2jQ(f - f0)/f0)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Geometry and substrate of the SRR array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorStructure {
    /// Side length of one ring, meters.
    pub side_length: f64,
    /// Gap width of one ring, meters.
    pub gap_width: f64,
    /// Number of units along one side of the (square) array.
    pub units_per_side: u32,
    /// Relative permittivity of the substrate.
    pub substrate_permittivity: f64,
}

impl SensorStructure {
    pub fn new(
        side_length: f64,
        gap_width: f64,
        units_per_side: u32,
        substrate_permittivity: f64,
    ) -> Result<Self> {
        let s = Self {
            side_length,
            gap_width,
            units_per_side,
            substrate_permittivity,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_length.is_finite() && self.side_length > 0.0) {
            return Err(Error::invalid("side_length", "must be positive"));
        }
        if !(self.gap_width.is_finite()
            && self.gap_width > 0.0
            && self.gap_width < self.side_length)
        {
            return Err(Error::invalid(
                "gap_width",
                "must satisfy 0 < gap_width < side_length",
            ));
        }
        if self.units_per_side < 1 {
            return Err(Error::invalid("units_per_side", "must be at least 1"));
        }
        if !(self.substrate_permittivity.is_finite() && self.substrate_permittivity >= 1.0) {
            return Err(Error::invalid("substrate_permittivity", "must be >= 1"));
        }
        Ok(())
    }

    /// Returns a copy with a different array size.
    pub fn with_units(&self, units_per_side: u32) -> Self {
        Self {
            units_per_side,
            ..*self
        }
    }
}

impl Default for SensorStructure {
    fn default() -> Self {
        Self {
            side_length: 5.0e-3,
            gap_width: 0.25e-3,
            units_per_side: 5,
            substrate_permittivity: 3.5,
        }
    }
}

/// Humidity response of the gap-filling film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Resistance of the dry film, ohms.
    pub r_max: f64,
    /// Exponential decay rate of resistance with humidity.
    pub decay_rate: f64,
    /// Radiation/matching resistance the film is compared against, ohms.
    pub r_rad: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_max", self.r_max),
            ("decay_rate", self.decay_rate),
            ("r_rad", self.r_rad),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            r_max: 2.5,
            decay_rate: 2.0,
            r_rad: 1.5,
        }
    }
}

/// Fixed constants tying geometry to circuit values and array size to aperture gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConstants {
    /// Inductance per meter of side length, H/m.
    pub inductance_per_length: f64,
    /// Capacitance per unit `permittivity * side_length / gap_width`, F.
    pub capacitance_scale: f64,
    /// Re-radiation gain of a single unit; the array gain is `aperture_gain * N^2`.
    pub aperture_gain: f64,
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inductance_per_length", self.inductance_per_length),
            ("capacitance_scale", self.capacitance_scale),
            ("aperture_gain", self.aperture_gain),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }
}

impl Default for CalibrationConstants {
    /// Places the default structure (5 mm / 0.25 mm / eps 3.5) at 5.85 GHz and
    /// the N = 5 reflected path about 20 dB under line of sight in the default geometry.
    fn default() -> Self {
        Self {
            inductance_per_length: 1.0e-6,
            capacitance_scale: 2.114757075907408e-15,
            aperture_gain: 0.5157,
        }
    }
}

/// One humidity condition the receiver has to tell apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingState {
    /// Relative humidity as a fraction in `[0, 1]`.
    pub humidity: f64,
    pub label: usize,
}

impl SensingState {
    pub fn new(humidity: f64, label: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&humidity) {
            return Err(Error::invalid("humidity", "must lie in [0, 1]"));
        }
        Ok(Self { humidity, label })
    }
}

/// Resonance description of one sensor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    /// Resonance frequency, Hz.
    pub f0: f64,
    pub q_factor: f64,
    /// Absorption depth in `[0, 1]`; `|Γ(f0)| = 1 - depth`.
    pub depth: f64,
}

/// Reflection coefficient sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub grid: Vec<f64>,
    pub gamma: Vec<Complex64>,
}

/// Spread of a set of responses across sensing states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityMetrics {
    /// Spread (max - min) of the frequency of the deepest sample, Hz.
    pub resonance_shift: f64,
    /// Mean over unordered state pairs of the Euclidean distance between responses.
    pub mean_pairwise_distance: f64,
}

/// Film resistance at the given humidity: `r_max * exp(-decay_rate * h)`.
pub fn material_resistance(state: &SensingState, mat: &MaterialParams) -> f64 {
    mat.r_max * (-mat.decay_rate * state.humidity).exp()
}

/// Maps structure and humidity to resonance frequency, Q and absorption depth.
pub fn structure_to_circuit(
    structure: &SensorStructure,
    state: &SensingState,
    mat: &MaterialParams,
    cal: &CalibrationConstants,
) -> Result<ResonatorParams> {
    let inductance = cal.inductance_per_length * structure.side_length;
    let capacitance =
        cal.capacitance_scale * structure.substrate_permittivity * structure.side_length
            / structure.gap_width;
    let r = material_resistance(state, mat);

    let f0 = 1.0 / (2.0 * PI * (inductance * capacitance).sqrt());
    let q_factor = (inductance / capacitance).sqrt() / r;
    let depth = 4.0 * r * mat.r_rad / ((r + mat.r_rad) * (r + mat.r_rad));

    if !(f0.is_finite() && f0 > 0.0 && q_factor.is_finite() && q_factor > 0.0 && depth.is_finite())
    {
        return Err(Error::DegenerateStructure(format!(
            "f0={f0}, Q={q_factor}, depth={depth} for {structure:?}"
        )));
    }
    Ok(ResonatorParams {
        f0,
        q_factor,
        depth: depth.clamp(0.0, 1.0),
    })
}

/// Lorentzian absorption dip evaluated at `f`.
pub fn reflection_coefficient(res: &ResonatorParams, f: f64) -> Complex64 {
    let detuning = 2.0 * res.q_factor * (f - res.f0) / res.f0;
    Complex64::new(1.0, 0.0) - res.depth / Complex64::new(1.0, detuning)
}

pub fn frequency_response(
    structure: &SensorStructure,
    state: &SensingState,
    mat: &MaterialParams,
    cal: &CalibrationConstants,
    grid: &[f64],
) -> Result<FrequencyResponse> {
    if grid.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::invalid("grid", "frequencies must be positive"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    let res = structure_to_circuit(structure, state, mat, cal)?;
    Ok(FrequencyResponse {
        grid: grid.to_vec(),
        gamma: grid
            .iter()
            .map(|&f| reflection_coefficient(&res, f))
            .collect(),
    })
}

pub fn sensitivity_metrics(responses: &[FrequencyResponse]) -> Result<SensitivityMetrics> {
    if responses.len() < 2 {
        return Err(Error::invalid(
            "responses",
            "at least two responses are required",
        ));
    }
    let grid = &responses[0].grid;
    for (i, r) in responses.iter().enumerate() {
        if r.grid != *grid || r.gamma.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "response {i} is not sampled on the grid of response 0"
            )));
        }
    }

    let dips: Vec<f64> = responses
        .iter()
        .map(|r| {
            let k = r
                .gamma
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .map(|(k, _)| k)
                .unwrap_or(0);
            r.grid.get(k).copied().unwrap_or(0.0)
        })
        .collect();
    let hi = dips.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = dips.iter().copied().fold(f64::INFINITY, f64::min);

    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..responses.len() {
        for j in i + 1..responses.len() {
            let sq: f64 = responses[i]
                .gamma
                .iter()
                .zip(&responses[j].gamma)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            total += sq.sqrt();
            pairs += 1;
        }
    }

    Ok(SensitivityMetrics {
        resonance_shift: hi - lo,
        mean_pairwise_distance: total / pairs as f64,
    })
}
