//! Symbol-level OFDM link with frame-averaged PSD sensing.
//!
//! The receiver averages `|y|^2 / B` over `M` frames on every subcarrier and
//! picks the sensing state whose expected PSD template is nearest in
//! Euclidean distance. Data symbols are unknown to the sensing path; the
//! templates only use `E|x|^2 = 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Unit-average-power constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl Constellation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "16qam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Some(Constellation::Qpsk),
            "16qam" | "qam16" => Some(Constellation::Qam16),
            _ => None,
        }
    }

    /// Per-axis amplitude levels (before unit-power scaling).
    fn levels(&self) -> &'static [f64] {
        match self {
            Constellation::Qpsk => &[-1.0, 1.0],
            Constellation::Qam16 => &[-3.0, -1.0, 1.0, 3.0],
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Constellation::Qpsk => FRAC_1_SQRT_2,
            // Mean energy of 16-QAM on the ±1, ±3 lattice is 10.
            Constellation::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    pub fn order(&self) -> usize {
        let m = self.levels().len();
        m * m
    }

    /// Symbol index `i` as a constellation point.
    pub fn point(&self, i: usize) -> Complex64 {
        let levels = self.levels();
        let m = levels.len();
        Complex64::new(levels[i % m], levels[i / m % m]) * self.scale()
    }

    fn slice_axis(&self, v: f64) -> usize {
        let levels = self.levels();
        let x = v / self.scale();
        levels
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map_or(0, |(i, _)| i)
    }

    /// Nearest-point hard decision.
    pub fn decide(&self, y: Complex64) -> usize {
        self.slice_axis(y.re) + self.levels().len() * self.slice_axis(y.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Frames averaged per sensing decision.
    pub n_frames: usize,
    /// Monte-Carlo decisions.
    pub n_trials: usize,
    pub constellation: Constellation,
    pub seed: u64,
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames < 1 {
            return Err(Error::invalid("link.frames", "must be at least 1"));
        }
        if self.n_trials < 1 {
            return Err(Error::invalid("link.trials", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            n_frames: 16,
            n_trials: 10_000,
            constellation: Constellation::Qpsk,
            seed: 1,
        }
    }
}

/// Frame-averaged received PSD, W/Hz per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub values: Vec<f64>,
}

/// Expected received PSD of every state, in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTemplates {
    pub labels: Vec<usize>,
    pub psd: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub accuracy: f64,
    /// Normal-approximation 95% half-width of the binomial proportion.
    pub half_width: f64,
    pub trials: usize,
    /// `confusion[true][decided]` counts, indexed by state position.
    pub confusion: Vec<Vec<u64>>,
}

/// Complex Gaussian sample with total variance `variance`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sigma = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// Independent per-trial stream derived from the experiment seed.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Simulates `link.n_frames` frames from state index `true_state` and averages their PSD.
pub fn simulate_received_psd<R: Rng + ?Sized>(
    p: &[f64],
    cs: &ChannelState,
    true_state: usize,
    link: &LinkParams,
    rng: &mut R,
) -> PsdEstimate {
    let h = &cs.states[true_state].gains;
    let b = cs.subcarrier_bandwidth;
    let noise_var = cs.noise_psd * b;
    let order = link.constellation.order();
    let amplitude: Vec<Complex64> = p.iter().zip(h).map(|(pk, hk)| pk.sqrt() * hk).collect();

    let mut acc = vec![0.0; p.len()];
    for _ in 0..link.n_frames {
        for (a, s) in acc.iter_mut().zip(&amplitude) {
            let x = link.constellation.point(rng.random_range(0..order));
            let y = s * x + complex_gaussian(rng, noise_var);
            *a += y.norm_sqr();
        }
    }
    let norm = 1.0 / (link.n_frames as f64 * b);
    PsdEstimate {
        values: acc.into_iter().map(|v| v * norm).collect(),
    }
}

/// `T_k(s) = p_k |H_k(s)|^2 / B + N0`.
pub fn state_templates(p: &[f64], cs: &ChannelState) -> StateTemplates {
    let b = cs.subcarrier_bandwidth;
    StateTemplates {
        labels: cs.labels(),
        psd: cs
            .states
            .iter()
            .map(|s| {
                s.gains
                    .iter()
                    .zip(p)
                    .map(|(h, pk)| pk * h.norm_sqr() / b + cs.noise_psd)
                    .collect()
            })
            .collect(),
    }
}

/// Position of the nearest template; ties go to the earliest (lowest label).
fn nearest_template(est: &[f64], templates: &StateTemplates) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, t) in templates.psd.iter().enumerate() {
        let d: f64 = est.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Maximum-likelihood (nearest template) state label.
pub fn classify_state(est: &PsdEstimate, templates: &StateTemplates) -> usize {
    templates.labels[nearest_template(&est.values, templates)]
}

/// Monte-Carlo sensing accuracy with uniformly drawn true states.
///
/// Trial `i` draws from its own ChaCha stream `i` under `link.seed`, so the
/// result is independent of scheduling.
pub fn sensing_accuracy(p: &[f64], cs: &ChannelState, link: &LinkParams) -> Result<AccuracyReport> {
    link.validate()?;
    let s = cs.n_states();
    if s < 2 {
        return Err(Error::invalid("states", "need at least two sensing states"));
    }
    if p.len() != cs.n_subcarriers() {
        return Err(Error::ShapeMismatch(format!(
            "{} powers for {} subcarriers",
            p.len(),
            cs.n_subcarriers()
        )));
    }
    let templates = state_templates(p, cs);
    let confusion = (0..link.n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(link.seed, trial);
            let truth = rng.random_range(0..s);
            let est = simulate_received_psd(p, cs, truth, link, &mut rng);
            (truth, nearest_template(&est.values, &templates))
        })
        .fold(
            || vec![vec![0u64; s]; s],
            |mut m, (t, d)| {
                m[t][d] += 1;
                m
            },
        )
        .reduce(
            || vec![vec![0u64; s]; s],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );
    let correct: u64 = (0..s).map(|i| confusion[i][i]).sum();
    let n = link.n_trials as f64;
    let accuracy = correct as f64 / n;
    Ok(AccuracyReport {
        accuracy,
        half_width: 1.96 * (accuracy * (1.0 - accuracy) / n).sqrt(),
        trials: link.n_trials,
        confusion,
    })
}

/// Symbol error rate with ideal one-tap equalization on every subcarrier
/// carrying power, over `link.n_trials * link.n_frames` OFDM symbols.
pub fn genie_symbol_error_rate(
    p: &[f64],
    cs: &ChannelState,
    state: usize,
    link: &LinkParams,
) -> Result<f64> {
    link.validate()?;
    let h = &cs.states[state].gains;
    let active: Vec<usize> = (0..p.len())
        .filter(|&k| p[k] > 0.0 && h[k].norm_sqr() > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::invalid("powers", "no subcarrier carries power"));
    }
    let noise_var = cs.noise_psd * cs.subcarrier_bandwidth;
    let order = link.constellation.order();
    let symbols = link.n_trials * link.n_frames;

    let errors: u64 = (0..symbols as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(link.seed, i);
            let mut errors = 0u64;
            for &k in &active {
                let tap = p[k].sqrt() * h[k];
                let sent = rng.random_range(0..order);
                let y =
                    tap * link.constellation.point(sent) + complex_gaussian(&mut rng, noise_var);
                if link.constellation.decide(y / tap) != sent {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    Ok(errors as f64 / (symbols * active.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::StateChannel;

    fn channel(rows: &[Vec<f64>], noise_psd: f64) -> ChannelState {
        let k = rows[0].len();
        let states = rows
            .iter()
            .enumerate()
            .map(|(label, row)| StateChannel {
                label,
                gains: row.iter().map(|&a| Complex64::new(0.0, a)).collect(),
            })
            .collect();
        ChannelState::new(
            (0..k).map(|i| 1e9 + i as f64).collect(),
            2.0,
            noise_psd,
            states,
        )
        .unwrap()
    }

    #[test]
    fn constellations_have_unit_power() {
        for c in [Constellation::Qpsk, Constellation::Qam16] {
            let e: f64 =
                (0..c.order()).map(|i| c.point(i).norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((e - 1.0).abs() < 1e-12);
            for i in 0..c.order() {
                assert_eq!(c.decide(c.point(i)), i);
            }
        }
    }

    #[test]
    fn noiseless_qpsk_psd_is_exact() {
        let cs = channel(&[vec![0.5, 2.0, 1.0]], 0.0);
        let p = [1.0, 0.25, 3.0];
        let link = LinkParams {
            n_frames: 1,
            ..LinkParams::default()
        };
        let est = simulate_received_psd(&p, &cs, 0, &link, &mut trial_rng(3, 0));
        for k in 0..3 {
            let expected = p[k] * cs.states[0].gains[k].norm_sqr() / 2.0;
            assert!((est.values[k] - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn silent_transmitter_sees_noise_floor() {
        let n0 = 3e-3;
        let cs = channel(&[vec![1.0; 4]], n0);
        let link = LinkParams {
            n_frames: 1,
            ..LinkParams::default()
        };
        let mut rng = trial_rng(11, 0);
        let trials = 10_000;
        let mut mean = 0.0;
        for _ in 0..trials {
            mean += simulate_received_psd(&[0.0; 4], &cs, 0, &link, &mut rng).values[0];
        }
        mean /= trials as f64;
        assert!((mean - n0).abs() < 0.05 * n0, "mean {mean}");
    }

    #[test]
    fn same_seed_same_estimate() {
        let cs = channel(&[vec![1.0, 0.3]], 0.1);
        let link = LinkParams::default();
        let a = simulate_received_psd(&[1.0, 1.0], &cs, 0, &link, &mut trial_rng(9, 4));
        let b = simulate_received_psd(&[1.0, 1.0], &cs, 0, &link, &mut trial_rng(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn silent_templates_collapse_to_noise() {
        let cs = channel(&[vec![1.0, 2.0], vec![0.5, 2.0]], 0.7);
        let t = state_templates(&[0.0, 0.0], &cs);
        assert!(t.psd.iter().flatten().all(|&v| v == 0.7));
    }

    #[test]
    fn templates_differ_where_gains_differ() {
        let cs = channel(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.5, 3.0]], 0.1);
        let t = state_templates(&[1.0, 1.0, 1.0], &cs);
        assert_eq!(t.psd[0][0], t.psd[1][0]);
        assert_ne!(t.psd[0][1], t.psd[1][1]);
        assert_eq!(t.psd[0][2], t.psd[1][2]);
    }

    #[test]
    fn true_template_is_closest_on_average() {
        let cs = channel(&[vec![1.0, 1.2, 0.8], vec![1.1, 1.0, 0.9]], 0.2);
        let p = [1.0, 1.0, 1.0];
        let t = state_templates(&p, &cs);
        let link = LinkParams {
            n_frames: 4,
            ..LinkParams::default()
        };
        let mut rng = trial_rng(5, 0);
        let mut dist = [0.0, 0.0];
        for _ in 0..10_000 {
            let est = simulate_received_psd(&p, &cs, 0, &link, &mut rng);
            for s in 0..2 {
                dist[s] += est
                    .values
                    .iter()
                    .zip(&t.psd[s])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
        }
        assert!(dist[0] < dist[1]);
    }

    #[test]
    fn classify_exact_and_ties() {
        let t = StateTemplates {
            labels: vec![0, 1],
            psd: vec![vec![1.0, 1.0], vec![3.0, 1.0]],
        };
        assert_eq!(
            classify_state(
                &PsdEstimate {
                    values: vec![3.0, 1.0]
                },
                &t
            ),
            1
        );
        assert_eq!(
            classify_state(
                &PsdEstimate {
                    values: vec![2.0, 1.0]
                },
                &t
            ),
            0
        );
    }

    #[test]
    fn noiseless_estimates_classify_correctly() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|s| (0..6).map(|k| 1.0 + 0.1 * (s * k) as f64).collect())
            .collect();
        let cs = channel(&rows, 0.0);
        let p = [1.0; 6];
        let t = state_templates(&p, &cs);
        let link = LinkParams {
            n_frames: 1,
            ..LinkParams::default()
        };
        for s in 0..4 {
            let est = simulate_received_psd(&p, &cs, s, &link, &mut trial_rng(1, s as u64));
            assert_eq!(classify_state(&est, &t), s);
        }
    }

    #[test]
    fn classifier_is_scale_invariant() {
        let t = StateTemplates {
            labels: vec![0, 1, 2],
            psd: vec![vec![1.0, 2.0], vec![2.0, 2.5], vec![0.5, 3.0]],
        };
        let est = PsdEstimate {
            values: vec![1.7, 2.2],
        };
        let c = 7.5;
        let scaled = StateTemplates {
            labels: t.labels.clone(),
            psd: t
                .psd
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
        };
        let est_scaled = PsdEstimate {
            values: est.values.iter().map(|v| v * c).collect(),
        };
        assert_eq!(
            classify_state(&est, &t),
            classify_state(&est_scaled, &scaled)
        );
    }

    #[test]
    fn accuracy_is_reproducible() {
        let cs = channel(&[vec![1.0, 1.2, 0.8], vec![1.1, 1.0, 0.9]], 0.5);
        let link = LinkParams {
            n_frames: 2,
            n_trials: 500,
            ..LinkParams::default()
        };
        let a = sensing_accuracy(&[1.0; 3], &cs, &link).unwrap();
        let b = sensing_accuracy(&[1.0; 3], &cs, &link).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.confusion.iter().flatten().sum::<u64>(), 500);
    }

    #[test]
    fn noiseless_symbols_are_error_free() {
        let cs = channel(&[vec![0.3, 1.0, 2.0]], 0.0);
        let link = LinkParams {
            n_trials: 100,
            n_frames: 1,
            constellation: Constellation::Qam16,
            seed: 2,
        };
        assert_eq!(
            genie_symbol_error_rate(&[1.0, 2.0, 0.5], &cs, 0, &link).unwrap(),
            0.0
        );
    }

    #[test]
    fn more_power_never_more_errors() {
        let cs = channel(&[vec![1.0; 8]], 1.0);
        let link = LinkParams {
            n_trials: 5_000,
            n_frames: 1,
            ..LinkParams::default()
        };
        let n = (link.n_trials * 8) as f64;
        let mut prev = 1.0;
        for p in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let ser = genie_symbol_error_rate(&[p; 8], &cs, 0, &link).unwrap();
            let sigma = (prev * (1.0 - prev) / n).sqrt();
            assert!(ser <= prev + 2.0 * sigma + 1e-12, "{ser} after {prev}");
            prev = ser;
        }
    }
}
