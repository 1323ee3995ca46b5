//! Variational side of entropy generation: the action `A = ∫ L dt`, a search for
//! stationary states of maximal ΔS_irr, and the matching checks that no probe
//! perturbation raises ΔS_irr and none lowers the action.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exergy::{entropy_generation, ProcessBalance};
use crate::numeric::trapezoid;
use crate::report::format_value;
use crate::Execution;

/// A box-bounded family of stationary states, parameterized by `θ`, with its
/// entropy generation `ΔS_irr(θ)`.
#[derive(Clone)]
pub struct StateFamily {
    bounds: Vec<(f64, f64)>,
    eval: crate::phase::ScalarRule,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl StateFamily {
    pub fn new<F>(bounds: Vec<(f64, f64)>, entropy_generation: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if bounds.is_empty() {
            return Err(Error::invalid(
                "bounds",
                "a family needs at least one parameter",
            ));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(
                    format!("bounds[{k}]"),
                    format!("[{lo}, {hi}] is not a closed interval"),
                ));
            }
        }
        Ok(Self {
            bounds,
            eval: Arc::new(entropy_generation),
        })
    }

    /// Family of process balances; each θ is scored by its entropy generation.
    /// Balances that fail validation score NaN and are never selected.
    pub fn from_balances<F>(bounds: Vec<(f64, f64)>, balance: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> ProcessBalance + Send + Sync + 'static,
    {
        Self::new(bounds, move |theta| {
            entropy_generation(&balance(theta)).unwrap_or(f64::NAN)
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        (self.eval)(theta)
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.bounds)
                .all(|(x, &(lo, hi))| *x >= lo && *x <= hi)
    }

    fn clamp(&self, theta: &mut [f64]) {
        for (x, &(lo, hi)) in theta.iter_mut().zip(&self.bounds) {
            *x = x.clamp(lo, hi);
        }
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "θ vs family",
                expected: self.dim(),
                found: theta.len(),
            });
        }
        if !self.contains(theta) {
            return Err(Error::invalid(
                "theta",
                format!("{theta:?} lies outside the family bounds"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub tol_value: f64,
    pub tol_param: f64,
    pub fd_step: f64,
    pub seed: u64,
    /// Number of independent simplex searches.
    pub starts: usize,
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol_value: 1e-12,
            tol_param: 1e-10,
            fd_step: 1e-4,
            seed: 0,
            starts: 4,
            execution: Execution::Sequential,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_value", self.tol_value),
            ("tol_param", self.tol_param),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.max_iters == 0 || self.starts == 0 {
            return Err(Error::invalid("max_iters/starts", "must be at least 1"));
        }
        Ok(())
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub start: usize,
    pub theta: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub theta: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

impl Optimum {
    /// CSV dump with header `iteration,theta0,…,value`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.theta.len();
        let header: Vec<String> = std::iter::once("iteration".to_string())
            .chain((0..dim).map(|k| format!("theta{k}")))
            .chain(std::iter::once("value".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, e) in self.trace.iter().enumerate() {
            let mut row: Vec<String> = e.theta.iter().map(|&x| format_value(x)).collect();
            row.push(format_value(e.value));
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Budgeted objective for one start; minimizes `−ΔS_irr`.
struct Objective<'a> {
    family: &'a StateFamily,
    start: usize,
    budget: usize,
    trace: Vec<TraceEntry>,
}

impl Objective<'_> {
    fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    fn cost(&mut self, theta: &[f64]) -> f64 {
        let value = self.family.evaluate(theta);
        self.trace.push(TraceEntry {
            start: self.start,
            theta: theta.to_vec(),
            value,
        });
        if value.is_nan() {
            f64::INFINITY
        } else {
            -value
        }
    }
}

struct StartResult {
    theta: Vec<f64>,
    value: f64,
    converged: bool,
    trace: Vec<TraceEntry>,
}

fn by_cost(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> Ordering {
    a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)
}

/// Nelder-Mead on `−ΔS_irr`, with trial points projected back into the box.
fn simplex_search(
    family: &StateFamily,
    x0: Vec<f64>,
    start: usize,
    budget: usize,
    config: &OptimizerConfig,
) -> StartResult {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = family.dim();
    let mut obj = Objective {
        family,
        start,
        budget,
        trace: Vec::new(),
    };
    let project = |mut x: Vec<f64>| {
        family.clamp(&mut x);
        x
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let c0 = obj.cost(&x0);
    simplex.push((x0.clone(), c0));
    for k in 0..n {
        let (lo, hi) = family.bounds[k];
        let mut step = 0.1 * (hi - lo);
        if step == 0.0 {
            step = 1e-3;
        }
        let mut x = x0.clone();
        x[k] = if x0[k] + step <= hi {
            x0[k] + step
        } else {
            x0[k] - step
        };
        let x = project(x);
        let c = obj.cost(&x);
        simplex.push((x, c));
    }

    let mut converged = false;
    let mut iters = 0;
    while iters < config.max_iters && obj.remaining() >= n + 2 {
        simplex.sort_by(by_cost);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = if worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        if diameter <= config.tol_param && spread <= config.tol_value {
            converged = true;
            break;
        }
        iters += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            project(
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };

        let xr = along(REFLECT);
        let cr = obj.cost(&xr);
        if cr < simplex[0].1 {
            let xe = along(EXPAND);
            let ce = obj.cost(&xe);
            simplex[n] = if ce < cr { (xe, ce) } else { (xr, cr) };
            continue;
        }
        if cr < simplex[n - 1].1 {
            simplex[n] = (xr, cr);
            continue;
        }
        let (xc, cc) = if cr < simplex[n].1 {
            let xc = along(CONTRACT * REFLECT);
            let cc = obj.cost(&xc);
            (xc, cc)
        } else {
            let xc = along(-CONTRACT);
            let cc = obj.cost(&xc);
            (xc, cc)
        };
        if cc < simplex[n].1.min(cr) {
            simplex[n] = (xc, cc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x = project(
                anchor
                    .iter()
                    .zip(&entry.0)
                    .map(|(a, x)| a + SHRINK * (x - a))
                    .collect(),
            );
            let c = obj.cost(&x);
            *entry = (x, c);
        }
    }
    simplex.sort_by(by_cost);
    let (theta, cost) = simplex.swap_remove(0);
    StartResult {
        theta,
        value: -cost,
        converged,
        trace: obj.trace,
    }
}

/// Searches for a local maximizer of `ΔS_irr(θ)`.
///
/// Runs `config.starts` simplex searches from seeded uniform points in the box,
/// sharing a budget of `max_iters · (dim + 2)` evaluations. The best value wins;
/// ties go to the lexicographically smallest θ. The result is identical for
/// sequential and parallel execution.
pub fn maximize_entropy_generation(
    family: &StateFamily,
    config: &OptimizerConfig,
) -> Result<Optimum> {
    config.validate()?;
    let n = family.dim();
    let total_budget = config.max_iters.saturating_mul(n + 2);
    let min_per_start = 2 * (n + 2);
    let starts = config.starts.min(total_budget / min_per_start).max(1);
    let budget = total_budget / starts;
    if budget < n + 1 {
        return Err(Error::invalid(
            "max_iters",
            "budget too small for one simplex",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let origins: Vec<Vec<f64>> = (0..starts)
        .map(|_| {
            family
                .bounds
                .iter()
                .map(|&(lo, hi)| {
                    if lo < hi {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();

    let results: Vec<StartResult> = match config.execution {
        Execution::Sequential => origins
            .into_iter()
            .enumerate()
            .map(|(s, x0)| simplex_search(family, x0, s, budget, config))
            .collect(),
        Execution::Parallel => origins
            .into_par_iter()
            .enumerate()
            .map(|(s, x0)| simplex_search(family, x0, s, budget, config))
            .collect(),
    };

    let mut best: Option<&StartResult> = None;
    for r in &results {
        if r.value.is_nan() {
            continue;
        }
        best = match best {
            None => Some(r),
            Some(b) if r.value > b.value => Some(r),
            Some(b)
                if r.value == b.value && lexicographic(&r.theta, &b.theta) == Ordering::Less =>
            {
                Some(r)
            }
            keep => keep,
        };
    }
    let best = best.ok_or_else(|| Error::Numerical("no start produced a finite value".into()))?;
    Ok(Optimum {
        theta: best.theta.clone(),
        value: best.value,
        converged: best.converged,
        trace: results
            .iter()
            .flat_map(|r| r.trace.iter().cloned())
            .collect(),
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// `max_k,± ΔS_irr(θ ± h e_k) − ΔS_irr(θ)`; at a maximum this is at most `O(h²)`.
    pub max_violation: f64,
    /// Norm of the finite-difference gradient.
    pub gradient_norm: f64,
    /// Set when a probe fell outside the bounds and a one-sided difference was used.
    pub one_sided: bool,
}

/// Probes `ΔS_irr` at `θ ± fd_step · e_k` and reports the largest increase.
pub fn stationarity_check(
    family: &StateFamily,
    theta: &[f64],
    fd_step: f64,
) -> Result<StationarityReport> {
    family.check(theta)?;
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid("fd_step", "must be positive"));
    }
    let base = family.evaluate(theta);
    if !base.is_finite() {
        return Err(Error::NonFinite("ΔS_irr at θ".into()));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut grad_sq = 0.0;
    let mut one_sided = false;
    let mut probe = theta.to_vec();
    for k in 0..theta.len() {
        let (lo, hi) = family.bounds[k];
        let mut side = |x: f64| -> Option<f64> {
            if x < lo || x > hi {
                return None;
            }
            probe[k] = x;
            let v = family.evaluate(&probe);
            probe[k] = theta[k];
            Some(v)
        };
        let plus = side(theta[k] + fd_step);
        let minus = side(theta[k] - fd_step);
        let slope = match (plus, minus) {
            (Some(p), Some(m)) => (p - m) / (2.0 * fd_step),
            (Some(p), None) => {
                one_sided = true;
                (p - base) / fd_step
            }
            (None, Some(m)) => {
                one_sided = true;
                (base - m) / fd_step
            }
            (None, None) => {
                one_sided = true;
                0.0
            }
        };
        for v in [plus, minus].into_iter().flatten() {
            max_violation = max_violation.max(v - base);
        }
        grad_sq += slope * slope;
    }
    if max_violation == f64::NEG_INFINITY {
        max_violation = 0.0;
    }
    Ok(StationarityReport {
        max_violation,
        gradient_norm: grad_sq.sqrt(),
        one_sided,
    })
}

/// `A = ∫ L dt` by the trapezoidal rule over a uniformly sampled series.
pub fn action(lagrangian_series: &[f64], dt: f64) -> Result<f64> {
    if lagrangian_series.len() < 2 {
        return Err(Error::invalid(
            "lagrangian_series",
            "need at least two samples",
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if lagrangian_series.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Lagrangian series".into()));
    }
    Ok(trapezoid(lagrangian_series, dt))
}

/// Relative radii (fractions of each bound width) of the least-action probes.
pub const PROBE_RADII: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, PartialEq)]
pub struct LeastActionReport {
    pub action_at_optimum: f64,
    /// `(θ, A(θ))` for every probe that stayed inside the bounds.
    pub probes: Vec<(Vec<f64>, f64)>,
    /// `A(θ*) ≤ A(θ)` for every probe.
    pub minimal: bool,
}

/// Builds the constant-in-time Lagrangian `L = −T_ref ΔS_irr(θ)` over
/// `[0, horizon]` and checks that the action at `θ*` is not above the action of
/// any probe `θ* ± r (hi − lo) e_k`, `r ∈` [`PROBE_RADII`].
pub fn least_action_check(
    family: &StateFamily,
    theta_star: &[f64],
    t_ref: f64,
    horizon: f64,
    dt: f64,
) -> Result<LeastActionReport> {
    family.check(theta_star)?;
    if !(t_ref > 0.0 && t_ref.is_finite()) {
        return Err(Error::invalid("t_ref", "must be positive"));
    }
    if !(horizon > 0.0 && dt > 0.0 && horizon.is_finite() && dt.is_finite()) {
        return Err(Error::invalid("horizon/dt", "must be positive"));
    }
    let intervals = ((horizon / dt).round() as usize).max(1);
    let step = horizon / intervals as f64;
    let action_of = |theta: &[f64]| -> Result<f64> {
        let lagrangian = -t_ref * family.evaluate(theta);
        action(&vec![lagrangian; intervals + 1], step)
    };

    let action_at_optimum = action_of(theta_star)?;
    let mut probes = Vec::new();
    for k in 0..theta_star.len() {
        let (lo, hi) = family.bounds[k];
        for r in PROBE_RADII {
            for sign in [1.0, -1.0] {
                let mut theta = theta_star.to_vec();
                theta[k] += sign * r * (hi - lo);
                if family.contains(&theta) && theta[k] != theta_star[k] {
                    let a = action_of(&theta)?;
                    probes.push((theta, a));
                }
            }
        }
    }
    let slack = 1e-12 * action_at_optimum.abs().max(1.0);
    let minimal = probes.iter().all(|(_, a)| *a >= action_at_optimum - slack);
    Ok(LeastActionReport {
        action_at_optimum,
        probes,
        minimal,
    })
}
