//! Subcarrier power allocation.
//!
//! Maximizes the state-averaged Shannon capacity
//!
//! ```text
//! C(p) = (1/S) Σ_s Σ_k B log2(1 + p_k g_{s,k})
//! ```
//!
//! under a total power budget `Σ p_k ≤ P` and, optionally, a sensing
//! constraint `D(p) = sqrt(Σ p_k w_k) ≥ δ`. Both constraints are linear in
//! `p` (the sensing one after squaring), so the problem is concave and is
//! solved through its Lagrangian: for fixed multipliers `(λ, μ)` every
//! subcarrier decouples into a monotone scalar equation
//!
//! ```text
//! (1/S) Σ_s g_{s,k} / (1 + p_k g_{s,k}) + μ w_k = λ
//! ```
//!
//! `λ` is bisected to exhaust the budget and `μ` is found by doubling and
//! bisection on the achieved distance. Multipliers are reported in capacity
//! units (bits/s per watt).

use std::f64::consts::LN_2;

use crate::channel::ChannelState;
use crate::error::{Error, Result};

/// Relative tolerance on the power budget.
pub const POWER_TOLERANCE: f64 = 1e-10;
/// Relative tolerance on the achieved sensing distance when the constraint is active.
pub const DISTANCE_TOLERANCE: f64 = 1e-6;
/// Cap on doubling/bisection steps of the sensing multiplier.
pub const MAX_OUTER_ITERATIONS: usize = 200;
/// KKT residual (relative to λ) required for an `Optimal` status.
pub const KKT_TOLERANCE: f64 = 1e-6;

const MAX_POWER_BISECTIONS: usize = 400;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Per-subcarrier transmit power, W.
    pub powers: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    pub fn uniform(n: usize, budget: f64) -> Self {
        Self {
            powers: vec![budget / n as f64; n],
            budget,
        }
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Bisection on the sensing multiplier broke down; the result comes from dual ascent.
    Fallback,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationReport {
    pub allocation: PowerAllocation,
    /// Average capacity, bits/s.
    pub capacity: f64,
    /// Achieved sensing distance `D(p)`.
    pub distance: f64,
    /// Root mean squared pairwise separation of the expected received PSDs, W/Hz.
    pub psd_distance: f64,
    /// Power-budget multiplier λ, bits/s/W.
    pub power_multiplier: f64,
    /// Sensing multiplier μ, bits/s per unit of `D^2`.
    pub sensing_multiplier: f64,
    /// Largest KKT residual relative to λ.
    pub kkt_residual: f64,
    /// Largest distance any allocation within the budget can reach, `sqrt(P max_k w_k)`.
    pub max_distance: f64,
    pub status: SolveStatus,
}

/// State-averaged capacity in bits/s.
pub fn avg_capacity(p: &[f64], cs: &ChannelState) -> f64 {
    let b = cs.subcarrier_bandwidth;
    let gains = cs.snr_gains();
    let s = gains.len().max(1) as f64;
    gains
        .iter()
        .map(|row| {
            row.iter()
                .zip(p)
                .map(|(g, pk)| b * (pk * g).ln_1p() / LN_2)
                .sum::<f64>()
        })
        .sum::<f64>()
        / s
}

/// Gradient of [`avg_capacity`] with respect to the powers, bits/s/W.
pub fn capacity_gradient(p: &[f64], cs: &ChannelState) -> Vec<f64> {
    let b = cs.subcarrier_bandwidth;
    let gains = cs.snr_gains();
    let s = gains.len().max(1) as f64;
    (0..p.len())
        .map(|k| {
            let sum: f64 = gains.iter().map(|row| row[k] / (1.0 + p[k] * row[k])).sum();
            b / LN_2 * sum / s
        })
        .collect()
}

/// `sqrt(Σ p_k w_k)`.
pub fn sensing_distance(p: &[f64], w: &[f64]) -> f64 {
    p.iter()
        .zip(w)
        .map(|(pk, wk)| pk * wk)
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Root of the pair-averaged squared distance between expected received PSDs.
pub fn psd_distance(p: &[f64], cs: &ChannelState) -> f64 {
    let s = cs.n_states();
    if s < 2 {
        return 0.0;
    }
    let b = cs.subcarrier_bandwidth;
    let mut total = 0.0;
    for i in 0..s {
        for j in i + 1..s {
            total += cs.states[i]
                .gains
                .iter()
                .zip(&cs.states[j].gains)
                .zip(p)
                .map(|((hi, hj), pk)| {
                    let d = pk * (hi.norm_sqr() - hj.norm_sqr()) / b;
                    d * d
                })
                .sum::<f64>();
        }
    }
    (total / (s * (s - 1) / 2) as f64).sqrt()
}

/// Sensing distance of the uniform allocation `p_k = P / K`.
pub fn uniform_reference_distance(w: &[f64], budget: f64) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    sensing_distance(&PowerAllocation::uniform(w.len(), budget).powers, w)
}

/// Per-subcarrier stationarity system with the capacity scale factor
/// `B / ln 2` divided out.
struct DualProblem<'a> {
    /// SNR slopes, one row per state.
    gains: &'a [Vec<f64>],
    weights: &'a [f64],
    n: usize,
}

struct PowerSolution {
    powers: Vec<f64>,
    lambda: f64,
}

impl<'a> DualProblem<'a> {
    fn new(gains: &'a [Vec<f64>], weights: &'a [f64]) -> Self {
        let n = gains.first().map_or(0, Vec::len);
        Self { gains, weights, n }
    }

    fn marginal(&self, k: usize, p: f64) -> f64 {
        let s = self.gains.len() as f64;
        self.gains
            .iter()
            .map(|row| row[k] / (1.0 + p * row[k]))
            .sum::<f64>()
            / s
    }

    fn marginal_slope(&self, k: usize, p: f64) -> f64 {
        let s = self.gains.len() as f64;
        -self
            .gains
            .iter()
            .map(|row| {
                let d = 1.0 + p * row[k];
                row[k] * row[k] / (d * d)
            })
            .sum::<f64>()
            / s
    }

    /// Solves `marginal(k, p) = target` for `p >= 0`.
    fn power_at(&self, k: usize, target: f64) -> f64 {
        if target <= 0.0 {
            return f64::INFINITY;
        }
        if self.marginal(k, 0.0) <= target {
            return 0.0;
        }
        if self.gains.len() == 1 {
            let g = self.gains[0][k];
            return (1.0 / target - 1.0 / g).max(0.0);
        }

        // marginal is convex and decreasing, so Newton from the left of the
        // root increases monotonically towards it.
        let (mut g_mean, mut g_max) = (0.0, 0.0f64);
        for row in self.gains {
            g_mean += row[k];
            g_max = g_max.max(row[k]);
        }
        g_mean /= self.gains.len() as f64;
        let mut p = ((g_mean / target - 1.0) / g_max).max(0.0);
        for _ in 0..MAX_NEWTON_STEPS {
            let f = self.marginal(k, p) - target;
            if f <= 0.0 {
                break;
            }
            let next = p - f / self.marginal_slope(k, p);
            if !(next > p) {
                break;
            }
            let done = next - p <= 1e-15 * next;
            p = next;
            if done {
                break;
            }
        }
        p
    }

    fn allocate(&self, lambda: f64, mu: f64, out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (k, pk) in out.iter_mut().enumerate() {
            *pk = self.power_at(k, lambda - mu * self.weights[k]);
            total += *pk;
        }
        total
    }

    /// Finds λ such that the stationary powers exhaust the budget.
    fn solve_power(&self, mu: f64, budget: f64) -> PowerSolution {
        let max_w = self.weights.iter().copied().fold(0.0, f64::max);
        let floor = mu * max_w;
        let ceiling = (0..self.n)
            .map(|k| self.marginal(k, 0.0) + mu * self.weights[k])
            .fold(0.0, f64::max);

        let mut buf = vec![0.0; self.n];
        // Search over t = λ - floor. At t = hi the allocation is within budget;
        // halve t until it overshoots, then bisect geometrically.
        let mut hi = ceiling - floor;
        let mut hi_powers = vec![0.0; self.n];
        let mut lo: Option<f64> = None;
        let tol = POWER_TOLERANCE * budget;

        for _ in 0..MAX_POWER_BISECTIONS {
            let t = match lo {
                None => 0.5 * hi,
                Some(l) => (l * hi).sqrt(),
            };
            if !(t > 0.0) || t >= hi || lo.is_some_and(|l| t <= l) {
                break;
            }
            let total = self.allocate(floor + t, mu, &mut buf);
            if (total - budget).abs() <= tol {
                return PowerSolution {
                    powers: buf,
                    lambda: floor + t,
                };
            }
            if total > budget {
                lo = Some(t);
            } else {
                hi = t;
                hi_powers.copy_from_slice(&buf);
            }
        }
        // Float resolution exhausted before the tolerance: stay within budget.
        PowerSolution {
            powers: hi_powers,
            lambda: floor + hi,
        }
    }

    fn kkt_residual(&self, sol: &PowerSolution, mu: f64) -> f64 {
        let lambda = sol.lambda;
        (0..self.n)
            .map(|k| {
                let p = sol.powers[k];
                let lhs = self.marginal(k, p) + mu * self.weights[k];
                if p > 0.0 {
                    (lhs - lambda).abs() / lambda
                } else {
                    (lhs - lambda).max(0.0) / lambda
                }
            })
            .fold(0.0, f64::max)
    }
}

fn validate_gains(gains: &[Vec<f64>]) -> Result<usize> {
    let n = gains
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("gains", "need at least one state"))?;
    if n == 0 {
        return Err(Error::invalid("gains", "need at least one subcarrier"));
    }
    for row in gains {
        if row.len() != n {
            return Err(Error::ShapeMismatch("ragged gain rows".into()));
        }
        if row.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gains", "must be finite and non-negative"));
        }
    }
    if gains.iter().flatten().all(|&g| g == 0.0) {
        return Err(Error::ZeroGains);
    }
    Ok(n)
}

fn validate_budget(budget: f64) -> Result<()> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid("budget", "must be positive"));
    }
    Ok(())
}

/// Capacity-only water-filling over per-state SNR slopes (one row per state).
///
/// With a single state this is the textbook `p_k = max(0, 1/λ - 1/g_k)`;
/// with several states each level is found from the averaged stationarity
/// equation.
pub fn classic_waterfilling(gains: &[Vec<f64>], budget: f64) -> Result<PowerAllocation> {
    validate_budget(budget)?;
    let n = validate_gains(gains)?;
    let zeros = vec![0.0; n];
    let sol = DualProblem::new(gains, &zeros).solve_power(0.0, budget);
    Ok(PowerAllocation {
        powers: sol.powers,
        budget,
    })
}

/// Capacity-maximizing allocation subject to the budget and `D(p) >= delta`.
pub fn constrained_allocation(
    cs: &ChannelState,
    w: &[f64],
    budget: f64,
    delta: f64,
) -> Result<AllocationReport> {
    validate_budget(budget)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid("delta", "must be non-negative"));
    }
    if w.len() != cs.n_subcarriers() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} subcarriers",
            w.len(),
            cs.n_subcarriers()
        )));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("weights", "must be finite and non-negative"));
    }
    let gains = cs.snr_gains();
    validate_gains(&gains)?;

    let problem = DualProblem::new(&gains, w);
    let scale = cs.subcarrier_bandwidth / LN_2;
    let max_w = w.iter().copied().fold(0.0, f64::max);
    let max_distance = (budget * max_w).sqrt();

    let report = |sol: PowerSolution, mu: f64, status: SolveStatus| {
        let kkt_residual = problem.kkt_residual(&sol, mu);
        let status = match status {
            SolveStatus::Optimal if kkt_residual > KKT_TOLERANCE => SolveStatus::Fallback,
            s => s,
        };
        AllocationReport {
            capacity: avg_capacity(&sol.powers, cs),
            distance: sensing_distance(&sol.powers, w),
            psd_distance: psd_distance(&sol.powers, cs),
            power_multiplier: scale * sol.lambda,
            sensing_multiplier: scale * mu,
            kkt_residual,
            max_distance,
            status,
            allocation: PowerAllocation {
                powers: sol.powers,
                budget,
            },
        }
    };

    let unconstrained = problem.solve_power(0.0, budget);
    let d0 = sensing_distance(&unconstrained.powers, w);
    if d0 >= delta {
        return Ok(report(unconstrained, 0.0, SolveStatus::Optimal));
    }

    if delta * delta >= budget * max_w {
        // Certificate: even the whole budget on the best sensing subcarrier falls short.
        let best = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(k, _)| k);
        let mut powers = vec![0.0; w.len()];
        powers[best] = budget;
        let mut r = report(
            PowerSolution {
                powers,
                lambda: f64::NAN,
            },
            f64::NAN,
            SolveStatus::Infeasible,
        );
        r.kkt_residual = f64::NAN;
        return Ok(r);
    }

    match bisect_sensing_multiplier(&problem, budget, delta, unconstrained.lambda / max_w, d0) {
        Some((sol, mu)) => Ok(report(sol, mu, SolveStatus::Optimal)),
        None => {
            let (sol, mu) = dual_ascent(&problem, budget, delta, unconstrained.lambda / max_w);
            Ok(report(sol, mu, SolveStatus::Fallback))
        }
    }
}

/// Doubling then bisection on μ. Returns `None` when the achieved distance is
/// not monotone in μ or the iteration cap is hit.
fn bisect_sensing_multiplier(
    problem: &DualProblem<'_>,
    budget: f64,
    delta: f64,
    mu_scale: f64,
    d0: f64,
) -> Option<(PowerSolution, f64)> {
    let distance = |sol: &PowerSolution| sensing_distance(&sol.powers, problem.weights);
    let slack = 1e-9 * delta;

    let (mut mu_lo, mut d_lo) = (0.0, d0);
    let mut mu_hi = 1e-3 * mu_scale;
    let mut iterations = 0;
    let mut upper = loop {
        iterations += 1;
        if iterations > MAX_OUTER_ITERATIONS {
            return None;
        }
        let sol = problem.solve_power(mu_hi, budget);
        let d = distance(&sol);
        if d + slack < d_lo {
            return None;
        }
        if d >= delta {
            break (sol, d);
        }
        mu_lo = mu_hi;
        d_lo = d;
        mu_hi *= 2.0;
    };

    while (upper.1 - delta) > DISTANCE_TOLERANCE * delta {
        iterations += 1;
        if iterations > MAX_OUTER_ITERATIONS {
            return None;
        }
        let mu = 0.5 * (mu_lo + mu_hi);
        if mu <= mu_lo || mu >= mu_hi {
            return None;
        }
        let sol = problem.solve_power(mu, budget);
        let d = distance(&sol);
        if d + slack < d_lo || d > upper.1 + slack {
            return None;
        }
        if d >= delta {
            mu_hi = mu;
            upper = (sol, d);
        } else {
            mu_lo = mu;
            d_lo = d;
        }
    }
    Some((upper.0, mu_hi))
}

/// Projected subgradient descent on the dual in μ. Keeps the feasible iterate
/// with the highest capacity proxy (the stationarity objective), falling back
/// to the largest distance seen when none is feasible.
fn dual_ascent(
    problem: &DualProblem<'_>,
    budget: f64,
    delta: f64,
    mu_scale: f64,
) -> (PowerSolution, f64) {
    let target = delta * delta;
    let objective = |p: &[f64]| -> f64 {
        problem
            .gains
            .iter()
            .map(|row| {
                row.iter()
                    .zip(p)
                    .map(|(g, pk)| (pk * g).ln_1p())
                    .sum::<f64>()
            })
            .sum()
    };
    let mut mu = 0.0;
    let mut best: Option<(PowerSolution, f64, f64)> = None;
    let mut closest: Option<(PowerSolution, f64, f64)> = None;
    for t in 1..=MAX_OUTER_ITERATIONS {
        let sol = problem.solve_power(mu, budget);
        let achieved: f64 = sol
            .powers
            .iter()
            .zip(problem.weights)
            .map(|(p, w)| p * w)
            .sum();
        if achieved >= target * (1.0 - 2.0 * DISTANCE_TOLERANCE) {
            let value = objective(&sol.powers);
            if best.as_ref().is_none_or(|b| value > b.2) {
                best = Some((sol, mu, value));
            }
        } else if closest.as_ref().is_none_or(|c| achieved > c.2) {
            closest = Some((sol, mu, achieved));
        }
        let step = mu_scale / (t as f64).sqrt();
        mu = (mu - step * (achieved - target) / target).max(0.0);
    }
    let (sol, mu, _) = best.or(closest).expect("at least one iterate");
    (sol, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::StateChannel;
    use num_complex::Complex64;

    /// Channel state whose SNR slopes equal `gains` exactly (N0 * B = 1).
    pub(crate) fn toy_channel(gains: &[Vec<f64>]) -> ChannelState {
        let k = gains[0].len();
        let states = gains
            .iter()
            .enumerate()
            .map(|(label, row)| StateChannel {
                label,
                gains: row.iter().map(|g| Complex64::new(g.sqrt(), 0.0)).collect(),
            })
            .collect();
        ChannelState::new((0..k).map(|i| 1.0 + i as f64).collect(), 1.0, 1.0, states).unwrap()
    }

    #[test]
    fn capacity_closed_points() {
        let cs = toy_channel(&[vec![1.0, 2.0]]);
        assert_eq!(avg_capacity(&[0.0, 0.0], &cs), 0.0);
        let one = toy_channel(&[vec![1.0]]);
        assert!((avg_capacity(&[1.0], &one) - 1.0).abs() < 1e-15);
        let two = toy_channel(&[vec![1.0], vec![1.0]]);
        assert!((avg_capacity(&[1.0], &two) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_closed_points() {
        assert_eq!(sensing_distance(&[0.0, 0.0], &[4.0, 1.0]), 0.0);
        assert_eq!(sensing_distance(&[1.0, 3.0], &[0.0, 0.0]), 0.0);
        assert!((sensing_distance(&[1.0, 3.0], &[4.0, 1.0]) - 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_reference() {
        assert_eq!(uniform_reference_distance(&[0.0, 0.0], 2.0), 0.0);
        assert!((uniform_reference_distance(&[1.0, 1.0], 2.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn waterfilling_symmetric() {
        let p = classic_waterfilling(&[vec![1.0, 1.0]], 2.0).unwrap();
        assert!((p.powers[0] - 1.0).abs() < 1e-9 && (p.powers[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn waterfilling_skips_dead_carrier() {
        let p = classic_waterfilling(&[vec![1.0, 0.0]], 1.0).unwrap();
        assert!((p.powers[0] - 1.0).abs() < 1e-9);
        assert_eq!(p.powers[1], 0.0);
    }

    #[test]
    fn waterfilling_level_two() {
        // Water level 1/λ = 2: p1 = 2 - 1 = 1, p2 = max(0, 2 - 2) = 0.
        let p = classic_waterfilling(&[vec![1.0, 0.5]], 1.0).unwrap();
        assert!((p.powers[0] - 1.0).abs() < 1e-9, "{:?}", p.powers);
        assert!(p.powers[1].abs() < 1e-9);
    }

    #[test]
    fn waterfilling_rejects_dead_channel() {
        assert!(matches!(
            classic_waterfilling(&[vec![0.0, 0.0]], 1.0),
            Err(Error::ZeroGains)
        ));
    }

    #[test]
    fn multi_state_waterfilling_matches_stationarity() {
        let gains = vec![vec![3.0, 0.5, 1.2], vec![0.2, 2.0, 1.0]];
        let p = classic_waterfilling(&gains, 3.0).unwrap();
        assert!((p.total() - 3.0).abs() < 1e-9);
        let m: Vec<f64> = (0..3)
            .map(|k| {
                gains
                    .iter()
                    .map(|r| r[k] / (1.0 + p.powers[k] * r[k]))
                    .sum::<f64>()
                    / 2.0
            })
            .collect();
        for k in 1..3 {
            assert!((m[k] - m[0]).abs() < 1e-9 * m[0], "{m:?}");
        }
    }

    #[test]
    fn zero_threshold_is_waterfilling() {
        let gains = vec![vec![3.0, 0.5, 1.2, 0.9], vec![0.2, 2.0, 1.0, 0.7]];
        let cs = toy_channel(&gains);
        let w = vec![0.1, 0.4, 0.0, 0.9];
        let r = constrained_allocation(&cs, &w, 2.0, 0.0).unwrap();
        let classic = classic_waterfilling(&gains, 2.0).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.sensing_multiplier, 0.0);
        for (a, b) in r.allocation.powers.iter().zip(&classic.powers) {
            assert!((a - b).abs() <= 1e-8 * 2.0);
        }
    }

    #[test]
    fn threshold_at_unconstrained_distance_stays_inactive() {
        let gains = vec![vec![3.0, 0.5, 1.2, 0.9]];
        let cs = toy_channel(&gains);
        let w = vec![0.1, 0.4, 0.0, 0.9];
        let free = constrained_allocation(&cs, &w, 2.0, 0.0).unwrap();
        let tight = constrained_allocation(&cs, &w, 2.0, free.distance).unwrap();
        assert_eq!(tight.sensing_multiplier, 0.0);
        assert_eq!(tight.allocation, free.allocation);
    }

    #[test]
    fn active_constraint_is_tight_and_stationary() {
        let gains = vec![vec![3.0, 0.5, 1.2, 0.9], vec![2.5, 0.7, 1.0, 1.1]];
        let cs = toy_channel(&gains);
        let w = vec![0.1, 0.4, 0.0, 0.9];
        let free = constrained_allocation(&cs, &w, 2.0, 0.0).unwrap();
        let delta = 1.2 * free.distance;
        let r = constrained_allocation(&cs, &w, 2.0, delta).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.sensing_multiplier > 0.0);
        assert!(r.distance >= delta * (1.0 - 1e-6));
        assert!(r.distance <= delta * (1.0 + 2e-6));
        assert!(r.kkt_residual <= 1e-6);
        assert!(r.allocation.total() <= 2.0 * (1.0 + 1e-9));
        assert!(r.capacity < free.capacity);

        let grad = capacity_gradient(&r.allocation.powers, &cs);
        for k in 0..4 {
            let lhs = grad[k] + r.sensing_multiplier * w[k];
            if r.allocation.powers[k] > 0.0 {
                assert!((lhs - r.power_multiplier).abs() <= 1e-6 * r.power_multiplier);
            } else {
                assert!(lhs <= r.power_multiplier * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn unreachable_threshold_is_infeasible() {
        let cs = toy_channel(&[vec![1.0, 1.0]]);
        let w = vec![1.0, 2.0];
        // P * max w = 2, so δ = 1.5 needs D^2 = 2.25.
        let r = constrained_allocation(&cs, &w, 1.0, 1.5).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!((r.max_distance - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.allocation.powers, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_weights_with_positive_threshold_is_infeasible() {
        let cs = toy_channel(&[vec![1.0, 1.0]]);
        let r = constrained_allocation(&cs, &[0.0, 0.0], 1.0, 0.1).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn dual_ascent_approaches_bisection_answer() {
        let gains = vec![vec![3.0, 0.5, 1.2, 0.9]];
        let cs = toy_channel(&gains);
        let w = vec![0.1, 0.4, 0.0, 0.9];
        let free = constrained_allocation(&cs, &w, 2.0, 0.0).unwrap();
        let delta = 1.15 * free.distance;
        let exact = constrained_allocation(&cs, &w, 2.0, delta).unwrap();

        let problem = DualProblem::new(&gains, &w);
        let lambda0 = problem.solve_power(0.0, 2.0).lambda;
        let (sol, _) = dual_ascent(&problem, 2.0, delta, lambda0 / 0.9);
        let cap = avg_capacity(&sol.powers, &cs);
        assert!(sensing_distance(&sol.powers, &w) >= delta * (1.0 - 2e-6));
        assert!((cap - exact.capacity).abs() <= 0.01 * exact.capacity);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cs = toy_channel(&[vec![1.0, 1.0]]);
        assert!(constrained_allocation(&cs, &[1.0, 1.0], 0.0, 0.0).is_err());
        assert!(constrained_allocation(&cs, &[1.0, 1.0], 1.0, -1.0).is_err());
        assert!(constrained_allocation(&cs, &[1.0], 1.0, 0.0).is_err());
    }
}
