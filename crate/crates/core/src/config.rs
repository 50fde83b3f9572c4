//! Scenario configuration: a flat, sectioned key-value file (TOML syntax).
//!
//! Every key is optional and falls back to the default listed in the README.
//! Unknown sections and keys are rejected, and every error names the dotted
//! key path it refers to.

use std::collections::BTreeSet;

use toml::{Table, Value};

use crate::channel::{Band, Geometry, Position};
use crate::error::{Error, Result};
use crate::link::{Constellation, LinkParams};
use crate::sensor::{CalibrationConstants, MaterialParams, SensingState, SensorStructure};
use crate::structure::{ParamRange, StructureSearchSpace};

/// Upper bound on the number of subcarriers.
pub const MAX_SUBCARRIERS: usize = 4096;
/// Upper bound on Monte-Carlo trials per accuracy estimate.
pub const MAX_TRIALS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    /// When false the sensor is absent and only line of sight remains.
    pub enabled: bool,
    pub structure: SensorStructure,
    pub material: MaterialParams,
    pub calibration: CalibrationConstants,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            structure: SensorStructure::default(),
            material: MaterialParams::default(),
            calibration: CalibrationConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: Geometry,
    pub band: Band,
    pub sensor: SensorConfig,
    /// Sensing states; labels are the positions in the humidity list.
    pub states: Vec<SensingState>,
    /// Total transmit power, W.
    pub power_budget: f64,
    /// Noise PSD, W/Hz.
    pub noise_psd: f64,
    pub link: LinkParams,
    /// Threshold factor: `δ = alpha * D_uniform`.
    pub alpha: f64,
    pub search: StructureSearchSpace,
    /// Draws averaged by the random-structure baseline.
    pub random_draws: usize,
}

pub const DEFAULT_HUMIDITY: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            band: Band::default(),
            sensor: SensorConfig::default(),
            states: states_from_humidity(&DEFAULT_HUMIDITY),
            power_budget: 0.1,
            noise_psd: 1e-15,
            link: LinkParams::default(),
            alpha: 1.0,
            search: StructureSearchSpace::default(),
            random_draws: 20,
        }
    }
}

fn states_from_humidity(hs: &[f64]) -> Vec<SensingState> {
    hs.iter()
        .enumerate()
        .map(|(label, &humidity)| SensingState { humidity, label })
        .collect()
}

const SECTIONS: [&str; 6] = ["geometry", "band", "sensor", "states", "link", "opt"];

/// Typed reader over one section that remembers which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    known: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::config(name, "expected a [section]")),
        };
        Ok(Self {
            name,
            table,
            known: BTreeSet::new(),
        })
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| Error::config(self.path(key), "expected a number")),
        }
    }

    fn int(&mut self, key: &'static str, default: i64) -> Result<i64> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) => Ok(*i),
            Some(_) => Err(Error::config(self.path(key), "expected an integer")),
        }
    }

    fn count(&mut self, key: &'static str, default: usize) -> Result<usize> {
        let v = self.int(key, default as i64)?;
        usize::try_from(v).map_err(|_| Error::config(self.path(key), "must be non-negative"))
    }

    fn bool(&mut self, key: &'static str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Error::config(self.path(key), "expected true or false")),
        }
    }

    fn string(&mut self, key: &'static str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::config(self.path(key), "expected a string")),
        }
    }

    fn f64_list(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    as_f64(v).ok_or_else(|| {
                        Error::config(format!("{}[{i}]", self.path(key)), "expected a number")
                    })
                })
                .collect(),
            Some(_) => Err(Error::config(
                self.path(key),
                "expected an array of numbers",
            )),
        }
    }

    fn position(&mut self, key: &'static str, default: Position) -> Result<Position> {
        let v = self.f64_list(key, &default)?;
        v.try_into()
            .map_err(|_| Error::config(self.path(key), "expected three coordinates [x, y, z]"))
    }

    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.known.contains(k.as_str())) {
                return Err(Error::config(self.path(k), "unknown key"));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, reason))
    }
}

fn positive(v: f64, key: &str) -> Result<()> {
    check(v.is_finite() && v > 0.0, key, "must be positive")
}

/// Parses and validates a scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let root: Table = toml::from_str(text)
        .map_err(|e| Error::config("<document>", e.to_string().trim_end().replace('\n', " ")))?;
    if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(Error::config(k, "unknown section"));
    }
    let d = ScenarioConfig::default();

    let mut s = Section::new(&root, "geometry")?;
    let geometry = Geometry {
        tx: s.position("tx", d.geometry.tx)?,
        rx: s.position("rx", d.geometry.rx)?,
        sensor: s.position("sensor", d.geometry.sensor)?,
    };
    s.finish()?;

    let mut s = Section::new(&root, "band")?;
    let band = Band {
        f_low: s.f64("f_low", d.band.f_low)?,
        f_high: s.f64("f_high", d.band.f_high)?,
        n_subcarriers: s.count("subcarriers", d.band.n_subcarriers)?,
    };
    s.finish()?;

    let mut s = Section::new(&root, "sensor")?;
    let ds = &d.sensor;
    let units = s.int("units_per_side", ds.structure.units_per_side as i64)?;
    let sensor = SensorConfig {
        enabled: s.bool("enabled", ds.enabled)?,
        structure: SensorStructure {
            side_length: s.f64("side_length", ds.structure.side_length)?,
            gap_width: s.f64("gap_width", ds.structure.gap_width)?,
            units_per_side: u32::try_from(units)
                .map_err(|_| Error::config("sensor.units_per_side", "out of range"))?,
            substrate_permittivity: s.f64("permittivity", ds.structure.substrate_permittivity)?,
        },
        material: MaterialParams {
            r_max: s.f64("r_max", ds.material.r_max)?,
            decay_rate: s.f64("decay_rate", ds.material.decay_rate)?,
            r_rad: s.f64("r_rad", ds.material.r_rad)?,
        },
        calibration: CalibrationConstants {
            inductance_per_length: s.f64("k_l", ds.calibration.inductance_per_length)?,
            capacitance_scale: s.f64("k_c", ds.calibration.capacitance_scale)?,
            aperture_gain: s.f64("g_unit", ds.calibration.aperture_gain)?,
        },
    };
    s.finish()?;

    let mut s = Section::new(&root, "states")?;
    let humidity = s.f64_list("humidity", &DEFAULT_HUMIDITY)?;
    s.finish()?;

    let mut s = Section::new(&root, "link")?;
    let noise_psd = s.f64("noise_psd", d.noise_psd)?;
    let n_frames = s.count("frames", d.link.n_frames)?;
    let n_trials = s.count("trials", d.link.n_trials)?;
    let constellation_name = s.string("constellation", d.link.constellation.as_str())?;
    let seed = s.int("seed", d.link.seed as i64)?;
    s.finish()?;
    let constellation = Constellation::parse(&constellation_name)
        .ok_or_else(|| Error::config("link.constellation", "expected \"qpsk\" or \"16qam\""))?;
    let seed =
        u64::try_from(seed).map_err(|_| Error::config("link.seed", "must be non-negative"))?;

    let mut s = Section::new(&root, "opt")?;
    let power_budget = s.f64("power_budget", d.power_budget)?;
    let alpha = s.f64("alpha", d.alpha)?;
    let ds = &d.search;
    let search = StructureSearchSpace {
        side_length: ParamRange {
            min: s.f64("side_length_min", ds.side_length.min)?,
            max: s.f64("side_length_max", ds.side_length.max)?,
            step: s.f64("side_length_step", ds.side_length.step)?,
        },
        gap_width: ParamRange {
            min: s.f64("gap_width_min", ds.gap_width.min)?,
            max: s.f64("gap_width_max", ds.gap_width.max)?,
            step: s.f64("gap_width_step", ds.gap_width.step)?,
        },
        units_per_side: {
            let defaults: Vec<f64> = ds.units_per_side.iter().map(|&n| n as f64).collect();
            s.f64_list("units_per_side", &defaults)?
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 {
                        Ok(v as u32)
                    } else {
                        Err(Error::config(
                            format!("opt.units_per_side[{i}]"),
                            "expected a positive integer",
                        ))
                    }
                })
                .collect::<Result<Vec<u32>>>()?
        },
    };
    let random_draws = s.count("random_draws", d.random_draws)?;
    s.finish()?;

    let cfg = ScenarioConfig {
        geometry,
        band,
        sensor,
        states: states_from_humidity(&humidity),
        power_budget,
        noise_psd,
        link: LinkParams {
            n_frames,
            n_trials,
            constellation,
            seed,
        },
        alpha,
        search,
        random_draws,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Range checks with dotted key paths in the messages.
    pub fn validate(&self) -> Result<()> {
        for (key, p) in [
            ("geometry.tx", self.geometry.tx),
            ("geometry.rx", self.geometry.rx),
            ("geometry.sensor", self.geometry.sensor),
        ] {
            check(
                p.iter().all(|v| v.is_finite()),
                key,
                "coordinates must be finite",
            )?;
        }
        self.geometry
            .validate()
            .map_err(|e| Error::config("geometry", e.to_string()))?;

        positive(self.band.f_low, "band.f_low")?;
        check(
            self.band.f_high.is_finite() && self.band.f_low < self.band.f_high,
            "band.f_low",
            "must be below band.f_high",
        )?;
        check(
            (2..=MAX_SUBCARRIERS).contains(&self.band.n_subcarriers),
            "band.subcarriers",
            &format!("must lie in 2..={MAX_SUBCARRIERS}"),
        )?;

        let st = &self.sensor.structure;
        positive(st.side_length, "sensor.side_length")?;
        check(
            st.gap_width.is_finite() && st.gap_width > 0.0 && st.gap_width < st.side_length,
            "sensor.gap_width",
            "must satisfy 0 < gap_width < side_length",
        )?;
        check(
            st.units_per_side >= 1,
            "sensor.units_per_side",
            "must be at least 1",
        )?;
        check(
            st.substrate_permittivity.is_finite() && st.substrate_permittivity >= 1.0,
            "sensor.permittivity",
            "must be >= 1",
        )?;
        positive(self.sensor.material.r_max, "sensor.r_max")?;
        positive(self.sensor.material.decay_rate, "sensor.decay_rate")?;
        positive(self.sensor.material.r_rad, "sensor.r_rad")?;
        positive(self.sensor.calibration.inductance_per_length, "sensor.k_l")?;
        positive(self.sensor.calibration.capacitance_scale, "sensor.k_c")?;
        positive(self.sensor.calibration.aperture_gain, "sensor.g_unit")?;

        check(
            self.states.len() >= 2,
            "states.humidity",
            "missing value: at least two sensing states are required",
        )?;
        let mut seen = Vec::<f64>::new();
        for (i, s) in self.states.iter().enumerate() {
            check(
                (0.0..=1.0).contains(&s.humidity),
                &format!("states.humidity[{i}]"),
                "must lie in [0, 1]",
            )?;
            check(
                !seen.contains(&s.humidity),
                &format!("states.humidity[{i}]"),
                &format!("duplicate state {}", s.humidity),
            )?;
            seen.push(s.humidity);
        }

        positive(self.noise_psd, "link.noise_psd")?;
        check(self.link.n_frames >= 1, "link.frames", "must be at least 1")?;
        check(
            (1..=MAX_TRIALS).contains(&self.link.n_trials),
            "link.trials",
            &format!("must lie in 1..={MAX_TRIALS}"),
        )?;
        check(
            i64::try_from(self.link.seed).is_ok(),
            "link.seed",
            "must fit in a signed 64-bit integer",
        )?;

        positive(self.power_budget, "opt.power_budget")?;
        check(
            self.alpha.is_finite() && self.alpha >= 0.0,
            "opt.alpha",
            "must be >= 0",
        )?;
        self.search.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(format!("opt.{name}"), reason)
            }
            other => other,
        })?;
        check(
            self.random_draws >= 1,
            "opt.random_draws",
            "must be at least 1",
        )?;
        Ok(())
    }

    /// Writes the configuration back in the same sectioned format.
    pub fn to_config_string(&self) -> Result<String> {
        self.validate()?;
        let pos = |p: Position| Value::Array(p.iter().map(|&v| Value::Float(v)).collect());
        let float = Value::Float;
        let int = |v: usize| Value::Integer(v as i64);

        let mut root = Table::new();
        let mut t = Table::new();
        t.insert("tx".into(), pos(self.geometry.tx));
        t.insert("rx".into(), pos(self.geometry.rx));
        t.insert("sensor".into(), pos(self.geometry.sensor));
        root.insert("geometry".into(), Value::Table(t));

        let mut t = Table::new();
        t.insert("f_low".into(), float(self.band.f_low));
        t.insert("f_high".into(), float(self.band.f_high));
        t.insert("subcarriers".into(), int(self.band.n_subcarriers));
        root.insert("band".into(), Value::Table(t));

        let s = &self.sensor;
        let mut t = Table::new();
        t.insert("enabled".into(), Value::Boolean(s.enabled));
        t.insert("side_length".into(), float(s.structure.side_length));
        t.insert("gap_width".into(), float(s.structure.gap_width));
        t.insert(
            "units_per_side".into(),
            Value::Integer(s.structure.units_per_side as i64),
        );
        t.insert(
            "permittivity".into(),
            float(s.structure.substrate_permittivity),
        );
        t.insert("r_max".into(), float(s.material.r_max));
        t.insert("decay_rate".into(), float(s.material.decay_rate));
        t.insert("r_rad".into(), float(s.material.r_rad));
        t.insert("k_l".into(), float(s.calibration.inductance_per_length));
        t.insert("k_c".into(), float(s.calibration.capacitance_scale));
        t.insert("g_unit".into(), float(s.calibration.aperture_gain));
        root.insert("sensor".into(), Value::Table(t));

        let mut t = Table::new();
        t.insert(
            "humidity".into(),
            Value::Array(self.states.iter().map(|s| float(s.humidity)).collect()),
        );
        root.insert("states".into(), Value::Table(t));

        let mut t = Table::new();
        t.insert("noise_psd".into(), float(self.noise_psd));
        t.insert("frames".into(), int(self.link.n_frames));
        t.insert("trials".into(), int(self.link.n_trials));
        t.insert(
            "constellation".into(),
            Value::String(self.link.constellation.as_str().into()),
        );
        t.insert("seed".into(), Value::Integer(self.link.seed as i64));
        root.insert("link".into(), Value::Table(t));

        let sp = &self.search;
        let mut t = Table::new();
        t.insert("power_budget".into(), float(self.power_budget));
        t.insert("alpha".into(), float(self.alpha));
        t.insert("side_length_min".into(), float(sp.side_length.min));
        t.insert("side_length_max".into(), float(sp.side_length.max));
        t.insert("side_length_step".into(), float(sp.side_length.step));
        t.insert("gap_width_min".into(), float(sp.gap_width.min));
        t.insert("gap_width_max".into(), float(sp.gap_width.max));
        t.insert("gap_width_step".into(), float(sp.gap_width.step));
        t.insert(
            "units_per_side".into(),
            Value::Array(
                sp.units_per_side
                    .iter()
                    .map(|&n| Value::Integer(n as i64))
                    .collect(),
            ),
        );
        t.insert("random_draws".into(), int(self.random_draws));
        root.insert("opt".into(), Value::Table(t));

        toml::to_string(&root).map_err(|e| Error::config("<document>", e.to_string()))
    }
}
