//! Onsager coefficients from equilibrium time correlations,
//! `L_ij = ½ ∫ ⟨σ_i(t) σ_j(0)⟩ dt`, discretized as a two-sided lag sum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::law::{PhasePoint, Trajectory};
use super::measure::Observable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OnsagerEstimate {
    /// `½ Δt Σ_{|τ| < max_lag} C(τ)`.
    pub value: f64,
    /// Spread of the per-trajectory estimates over `√K`; `None` for a single trajectory.
    pub standard_error: Option<f64>,
    /// Pooled cross-correlation `C(τ)` for `τ = −(max_lag−1) … max_lag−1`.
    pub correlation: Vec<f64>,
    /// Largest shift between first-half and second-half means, in units of the
    /// observable's standard deviation. Large values mean the input is not stationary.
    pub mean_drift: f64,
}

impl OnsagerEstimate {
    /// `C(τ)` for a signed lag.
    pub fn correlation_at(&self, lag: isize) -> Option<f64> {
        let center = (self.correlation.len() / 2) as isize;
        usize::try_from(center + lag)
            .ok()
            .and_then(|k| self.correlation.get(k).copied())
    }
}

/// Estimates `L_ij` for the observables `first` (σ_i) and `second` (σ_j) from an
/// ensemble of stationary trajectories sampled at a common step.
///
/// Both observables are centred on their ensemble mean. The correlation at lag
/// `τ` is `⟨σ_i(s+τ) σ_j(s)⟩`, pooled over every trajectory and every admissible `s`.
pub fn onsager_estimate(
    trajectories: &[Trajectory],
    first: &Observable,
    second: &Observable,
    max_lag: usize,
) -> Result<OnsagerEstimate> {
    if trajectories.is_empty() {
        return Err(Error::invalid(
            "trajectories",
            "need at least one trajectory",
        ));
    }
    if max_lag == 0 {
        return Err(Error::invalid("max_lag", "need at least one lag"));
    }
    let dt = trajectories[0].step();
    if trajectories.iter().any(|t| t.step() != dt) {
        return Err(Error::invalid(
            "trajectories",
            "all trajectories must share one step",
        ));
    }
    if let Some(t) = trajectories.iter().find(|t| t.len() <= max_lag) {
        return Err(Error::TrajectoryTooShort {
            len: t.len(),
            max_lag,
        });
    }

    let series = |obs: &Observable| -> Vec<Vec<f64>> {
        trajectories
            .iter()
            .map(|t| t.points().iter().map(|p| obs.eval(p)).collect())
            .collect()
    };
    let mut a = series(first);
    let mut b = series(second);
    let drift = mean_drift(&a).max(mean_drift(&b));
    center(&mut a);
    center(&mut b);

    let lags = 2 * max_lag - 1;
    let mut pooled = vec![0.0; lags];
    let mut counts = vec![0usize; lags];
    let mut per_trajectory = Vec::with_capacity(trajectories.len());
    for (x, y) in a.iter().zip(&b) {
        let n = x.len();
        let mut sum_c = 0.0;
        for (slot, lag) in (-(max_lag as isize - 1)..max_lag as isize).enumerate() {
            let shift = lag.unsigned_abs();
            let pairs = n - shift;
            // x(s + lag) y(s)
            let s: f64 = if lag >= 0 {
                x[shift..].iter().zip(&y[..pairs]).map(|(u, v)| u * v).sum()
            } else {
                x[..pairs].iter().zip(&y[shift..]).map(|(u, v)| u * v).sum()
            };
            pooled[slot] += s;
            counts[slot] += pairs;
            sum_c += s / pairs as f64;
        }
        per_trajectory.push(0.5 * dt * sum_c);
    }
    let correlation: Vec<f64> = pooled
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let value = 0.5 * dt * correlation.iter().sum::<f64>();

    let k = per_trajectory.len();
    let standard_error = (k >= 2).then(|| {
        let mean = per_trajectory.iter().sum::<f64>() / k as f64;
        let var = per_trajectory
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / (k - 1) as f64;
        (var / k as f64).sqrt()
    });

    Ok(OnsagerEstimate {
        value,
        standard_error,
        correlation,
        mean_drift: drift,
    })
}

/// [`onsager_estimate`] for the coordinate observables `i` and `j`.
pub fn onsager_coefficient(
    trajectories: &[Trajectory],
    i: usize,
    j: usize,
    max_lag: usize,
) -> Result<OnsagerEstimate> {
    let d = trajectories.first().map(|t| t.first().dim()).unwrap_or(0);
    for idx in [i, j] {
        if idx >= d {
            return Err(Error::invalid(
                "index",
                format!("coordinate {idx} out of range for dimension {d}"),
            ));
        }
    }
    onsager_estimate(
        trajectories,
        &Observable::coordinate(i),
        &Observable::coordinate(j),
        max_lag,
    )
}

fn center(series: &mut [Vec<f64>]) {
    let count: usize = series.iter().map(Vec::len).sum();
    let mean = series.iter().flatten().sum::<f64>() / count as f64;
    for v in series.iter_mut().flatten() {
        *v -= mean;
    }
}

fn mean_drift(series: &[Vec<f64>]) -> f64 {
    let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    let mut sq = 0.0;
    for x in series {
        let half = x.len() / 2;
        s1 += x[..half].iter().sum::<f64>();
        n1 += half;
        s2 += x[half..].iter().sum::<f64>();
        n2 += x.len() - half;
        sq += x.iter().map(|v| v * v).sum::<f64>();
    }
    if n1 == 0 || n2 == 0 {
        return 0.0;
    }
    let n = (n1 + n2) as f64;
    let mean = (s1 + s2) / n;
    let sd = (sq / n - mean * mean).max(0.0).sqrt();
    let shift = (s1 / n1 as f64 - s2 / n2 as f64).abs();
    if sd > 0.0 {
        shift / sd
    } else {
        shift
    }
}

/// Independent stationary Ornstein-Uhlenbeck channels sampled exactly at step `dt`:
/// each channel has correlation `variance · e^{−γ|t|}`, so `L_ii = variance/γ` and
/// `L_ij = 0` for `i ≠ j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrnsteinUhlenbeck {
    pub channels: usize,
    pub gamma: f64,
    pub variance: f64,
    pub dt: f64,
}

impl OrnsteinUhlenbeck {
    /// `members` trajectories of `len` points each, started from the stationary law.
    pub fn ensemble(&self, members: usize, len: usize, seed: u64) -> Result<Vec<Trajectory>> {
        if self.channels == 0 || len == 0 {
            return Err(Error::invalid(
                "ensemble",
                "need at least one channel and one point",
            ));
        }
        if !(self.gamma > 0.0 && self.variance > 0.0 && self.dt > 0.0) {
            return Err(Error::invalid(
                "ensemble",
                "γ, variance and dt must be positive",
            ));
        }
        let phi = (-self.gamma * self.dt).exp();
        let sd = self.variance.sqrt();
        let kick = sd * (1.0 - phi * phi).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(members);
        for _ in 0..members {
            let mut x: Vec<f64> = (0..self.channels)
                .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>();
            let mut points = Vec::with_capacity(len);
            points.push(PhasePoint::new(x.clone())?);
            for _ in 1..len {
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = phi * *v + kick * z;
                }
                points.push(PhasePoint::new(x.clone())?);
            }
            out.push(Trajectory::new(points, self.dt)?);
        }
        Ok(out)
    }
}
