use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::law::{advance, DynamicalLaw, LawKind, PhasePoint, ScalarRule, Trajectory};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::report::format_value;
use crate::Execution;

/// A scalar function on phase space.
#[derive(Clone)]
pub struct Observable(ScalarRule);

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Observable")
    }
}

impl Observable {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self(Arc::new(eval))
    }

    /// Projection on coordinate `k`.
    pub fn coordinate(k: usize) -> Self {
        Self::new(move |x| x[k])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Finite weighted ensemble standing in for the stationary statistics.
///
/// No density is ever assumed: the measure is exactly its sample/weight pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMeasure {
    samples: Vec<PhasePoint>,
    weights: Vec<f64>,
    /// Compensated weight sum; 1 up to rounding.
    total_weight: f64,
}

impl EnsembleMeasure {
    /// Weights must be non-negative and sum to 1 within 1e-12.
    pub fn new(samples: Vec<PhasePoint>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(
                "samples",
                "an ensemble needs at least one sample",
            ));
        }
        if samples.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "weights vs samples",
                expected: samples.len(),
                found: weights.len(),
            });
        }
        let d = samples[0].dim();
        if let Some(p) = samples.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                what: "ensemble samples",
                expected: d,
                found: p.dim(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights", "must be finite and non-negative"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights", format!("sum to {total}, not 1")));
        }
        Ok(Self {
            samples,
            weights,
            total_weight: total,
        })
    }

    /// Rescales arbitrary non-negative weights to unit mass.
    pub fn normalized(samples: Vec<PhasePoint>, raw: Vec<f64>) -> Result<Self> {
        let total = compensated_sum(raw.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("weights", "total weight must be positive"));
        }
        Self::new(samples, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(samples: Vec<PhasePoint>) -> Result<Self> {
        let n = samples.len().max(1);
        Self::new(samples, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(point: PhasePoint) -> Self {
        Self {
            samples: vec![point],
            weights: vec![1.0],
            total_weight: 1.0,
        }
    }

    /// `n` independent uniform samples on the box `[lo, hi)`.
    pub fn uniform_box(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                what: "box corners",
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid(
                "box",
                "lower corner must be below upper corner",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let coords = lo
                    .iter()
                    .zip(hi)
                    .map(|(&a, &b)| rng.random_range(a..b))
                    .collect();
                PhasePoint::new(coords)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(samples)
    }

    /// Equal-weight midpoints of a regular grid with `per_axis` cells along each
    /// axis of `[lo, hi)`. Free of sampling noise, unlike [`Self::uniform_box`].
    pub fn uniform_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                what: "box corners",
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid(
                "box",
                "lower corner must be below upper corner",
            ));
        }
        if per_axis == 0 || lo.is_empty() {
            return Err(Error::invalid(
                "per_axis",
                "need at least one cell and one axis",
            ));
        }
        let d = lo.len();
        let total = u32::try_from(d)
            .ok()
            .and_then(|d| per_axis.checked_pow(d))
            .ok_or_else(|| Error::invalid("per_axis", "grid too large"))?;
        let samples = (0..total)
            .map(|mut index| {
                let coords = (0..d)
                    .map(|k| {
                        let cell = index % per_axis;
                        index /= per_axis;
                        lo[k] + (hi[k] - lo[k]) * (cell as f64 + 0.5) / per_axis as f64
                    })
                    .collect();
                PhasePoint::new(coords)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(samples)
    }

    /// Equal-weight samples taken along one orbit of a map after a burn-in.
    pub fn from_orbit(
        law: &DynamicalLaw,
        start: &PhasePoint,
        burn_in: usize,
        n: usize,
    ) -> Result<Self> {
        let mut x = advance(law, start, burn_in)?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(PhasePoint::new(x.clone())?);
            x = law.step(&x);
        }
        Self::uniform(samples)
    }

    pub fn samples(&self) -> &[PhasePoint] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    /// `Σ w_k f(σ_k)`, normalized by the stored weight sum.
    ///
    /// Values are summed relative to `f(σ_0)`, so a constant function comes out
    /// bitwise exact.
    pub fn expectation<F>(&self, f: F, exec: Execution) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let anchor = f(&self.samples[0]);
        let weighted = match exec {
            Execution::Sequential => compensated_sum(
                self.samples
                    .iter()
                    .zip(&self.weights)
                    .map(|(s, w)| w * (f(s) - anchor)),
            ),
            Execution::Parallel => self
                .samples
                .par_iter()
                .zip(self.weights.par_iter())
                .map(|(s, w)| w * (f(s) - anchor))
                .sum(),
        };
        anchor + weighted / self.total_weight
    }

    /// CSV dump with header `index,x0,…,weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("index".to_string())
            .chain((0..self.dim()).map(|k| format!("x{k}")))
            .chain(std::iter::once("weight".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, (p, w)) in self.samples.iter().zip(&self.weights).enumerate() {
            let mut row: Vec<String> = p.iter().map(|&x| format_value(x)).collect();
            row.push(format_value(*w));
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Orbit average `(1/T) Σ_{j=0}^{T−1} φ(S^j σ)`.
pub fn time_average(
    law: &DynamicalLaw,
    start: &PhasePoint,
    observable: &Observable,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    if start.dim() != law.dim() {
        return Err(Error::DimensionMismatch {
            what: "start vs law",
            expected: law.dim(),
            found: start.dim(),
        });
    }
    let mut x = start.coords().to_vec();
    let mut sum = CompensatedSum::default();
    for j in 0..horizon {
        if j > 0 {
            x = law.step(&x);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("orbit at step {j}")));
            }
        }
        sum.add(observable.eval(&x));
    }
    Ok(sum.value() / horizon as f64)
}

/// `∫ μ(dσ) φ(σ) = Σ w_k φ(σ_k)`.
pub fn ensemble_average(measure: &EnsembleMeasure, observable: &Observable) -> f64 {
    ensemble_average_with(measure, observable, Execution::Sequential)
}

pub fn ensemble_average_with(
    measure: &EnsembleMeasure,
    observable: &Observable,
    exec: Execution,
) -> f64 {
    measure.expectation(|x| observable.eval(x), exec)
}

/// `|time average − ensemble average|`.
pub fn birkhoff_residual(
    law: &DynamicalLaw,
    start: &PhasePoint,
    measure: &EnsembleMeasure,
    observable: &Observable,
    horizon: usize,
) -> Result<f64> {
    let time = time_average(law, start, observable, horizon)?;
    Ok((time - ensemble_average(measure, observable)).abs())
}

/// Outcome of the histogram invariance test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurePreservation {
    pub preserved: bool,
    /// Largest absolute difference in bin weight before and after one step.
    pub max_deviation: f64,
}

/// Pushes every sample through one step of the map and compares binned weights
/// (`bins` per axis over the joint bounding box) before and after.
pub fn is_measure_preserving(
    law: &DynamicalLaw,
    measure: &EnsembleMeasure,
    bins: usize,
    tol: f64,
) -> Result<MeasurePreservation> {
    if law.kind() != LawKind::Map {
        return Err(Error::UnsupportedLaw(
            "measure preservation is checked for maps",
        ));
    }
    let d = measure.dim();
    if d > 3 {
        return Err(Error::invalid(
            "measure",
            "histogram binning supports d ≤ 3",
        ));
    }
    if bins == 0 {
        return Err(Error::invalid("bins", "need at least one bin"));
    }
    let before: Vec<&[f64]> = measure.samples().iter().map(|p| p.coords()).collect();
    let after: Vec<Vec<f64>> = measure.samples().iter().map(|p| law.apply(p)).collect();

    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in before
        .iter()
        .copied()
        .chain(after.iter().map(|v| v.as_slice()))
    {
        for k in 0..d {
            if !x[k].is_finite() {
                return Err(Error::NonFinite("pushed-forward sample".into()));
            }
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    for k in 0..d {
        if hi[k] <= lo[k] {
            hi[k] = lo[k] + 1.0;
        }
    }
    let bin_of = |x: &[f64]| -> usize {
        (0..d).fold(0, |acc, k| {
            let b = (((x[k] - lo[k]) / (hi[k] - lo[k])) * bins as f64) as usize;
            acc * bins + b.min(bins - 1)
        })
    };
    let cells = bins.pow(d as u32);
    let mut h_before = vec![0.0; cells];
    let mut h_after = vec![0.0; cells];
    for ((x, y), w) in before.iter().zip(&after).zip(measure.weights()) {
        h_before[bin_of(x)] += w;
        h_after[bin_of(y)] += w;
    }
    let max_deviation = h_before
        .iter()
        .zip(&h_after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(MeasurePreservation {
        preserved: max_deviation < tol,
        max_deviation,
    })
}

/// True iff the endpoints of the trajectory coincide within `tol` (max norm).
pub fn is_cycle(trajectory: &Trajectory, tol: f64) -> Result<bool> {
    if trajectory.len() < 2 {
        return Err(Error::invalid(
            "trajectory",
            "a cycle check needs at least two points",
        ));
    }
    Ok(trajectory.first().distance(trajectory.last()) < tol)
}

/// Membership test for a region of phase space.
pub type Region<'a> = &'a (dyn Fn(&[f64]) -> bool + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    /// Weight of the samples lying in any region.
    pub union_weight: f64,
    /// Weight of each region on its own.
    pub parts: Vec<f64>,
    pub sum_of_parts: f64,
    pub additive: bool,
}

/// Checks `μ(∪ Ω_i) = Σ μ(Ω_i)` for pairwise disjoint regions.
///
/// Disjointness is checked on the samples; a sample found in two regions is an error.
pub fn measure_additivity_check(
    measure: &EnsembleMeasure,
    regions: &[Region<'_>],
) -> Result<AdditivityReport> {
    let mut union_weight = 0.0;
    for (s, (p, w)) in measure.samples().iter().zip(measure.weights()).enumerate() {
        let mut owner = None;
        for (r, region) in regions.iter().enumerate() {
            if region(p) {
                if let Some(first) = owner {
                    return Err(Error::OverlappingRegions {
                        first,
                        second: r,
                        sample: s,
                    });
                }
                owner = Some(r);
            }
        }
        if owner.is_some() {
            union_weight += w;
        }
    }
    let parts: Vec<f64> = regions
        .iter()
        .map(|region| {
            measure
                .samples()
                .iter()
                .zip(measure.weights())
                .filter(|(p, _)| region(p))
                .map(|(_, w)| w)
                .sum()
        })
        .collect();
    let sum_of_parts: f64 = parts.iter().sum();
    Ok(AdditivityReport {
        union_weight,
        additive: (union_weight - sum_of_parts).abs() <= 1e-12,
        parts,
        sum_of_parts,
    })
}

#[cfg(test)]
mod tests {
    use super::super::law::catalog::*;
    use super::*;

    fn pt(x: f64) -> PhasePoint {
        PhasePoint::scalar(x).unwrap()
    }

    #[test]
    fn weights_are_validated() {
        assert!(EnsembleMeasure::new(vec![pt(0.0), pt(1.0)], vec![0.5, 0.6]).is_err());
        assert!(EnsembleMeasure::new(vec![pt(0.0)], vec![1.0, 0.0]).is_err());
        assert!(EnsembleMeasure::new(vec![pt(0.0), pt(1.0)], vec![-0.5, 1.5]).is_err());
        let m = EnsembleMeasure::normalized(vec![pt(0.0), pt(1.0)], vec![1.0, 3.0]).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
        EnsembleMeasure::uniform((0..100_000).map(|i| pt(i as f64)).collect()).unwrap();
    }

    #[test]
    fn grid_midpoints() {
        let g = EnsembleMeasure::uniform_grid(&[0.0, -1.0], &[1.0, 1.0], 4).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.samples()[0].coords(), &[0.125, -0.75]);
        assert_eq!(g.samples()[5].coords(), &[0.375, -0.25]);
        let mean = ensemble_average(&g, &Observable::coordinate(0));
        assert!((mean - 0.5).abs() < 1e-15);
        assert!(EnsembleMeasure::uniform_grid(&[0.0], &[1.0], 0).is_err());
        assert!(EnsembleMeasure::uniform_grid(&[1.0], &[0.0], 3).is_err());
    }

    #[test]
    fn time_average_of_fixed_point() {
        let v = time_average(&identity(1), &pt(0.7), &Observable::coordinate(0), 1000).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
        assert!(time_average(&identity(1), &pt(0.7), &Observable::coordinate(0), 0).is_err());
    }

    #[test]
    fn contracting_orbit_average_vanishes() {
        // Σ 2^-j ≤ 2, so the average is at most 2/T
        let v = time_average(
            &scaling(0.5),
            &pt(1.0),
            &Observable::coordinate(0),
            4_000_000,
        )
        .unwrap();
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn ensemble_averages() {
        let m = EnsembleMeasure::point_mass(pt(1.0));
        assert_eq!(ensemble_average(&m, &Observable::constant(3.0)), 3.0);

        let m = EnsembleMeasure::new(vec![pt(0.0), pt(4.0)], vec![0.25, 0.75]).unwrap();
        assert_eq!(ensemble_average(&m, &Observable::coordinate(0)), 3.0);

        let m = EnsembleMeasure::uniform_box(&[0.0], &[1.0], 10_000, 7).unwrap();
        let mean = ensemble_average(&m, &Observable::coordinate(0));
        assert!((mean - 0.5).abs() < 2e-2);
        let par = ensemble_average_with(&m, &Observable::coordinate(0), Execution::Parallel);
        assert!((mean - par).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_gap_for_misplaced_point_mass() {
        let law = identity(1);
        let obs = Observable::coordinate(0);
        let at_start = EnsembleMeasure::point_mass(pt(0.2));
        assert_eq!(
            birkhoff_residual(&law, &pt(0.2), &at_start, &obs, 50).unwrap(),
            0.0
        );
        let elsewhere = EnsembleMeasure::point_mass(pt(0.9));
        let gap = birkhoff_residual(&law, &pt(0.2), &elsewhere, &obs, 50).unwrap();
        assert!((gap - 0.7).abs() < 1e-15);
    }

    #[test]
    fn invariance_histograms() {
        let m = EnsembleMeasure::uniform_box(&[0.0], &[1.0], 10_000, 3).unwrap();
        let r = is_measure_preserving(&identity(1), &m, 50, 1e-12).unwrap();
        assert!(r.preserved);
        assert_eq!(r.max_deviation, 0.0);

        let r = is_measure_preserving(&square(), &m, 100, 0.02).unwrap();
        assert!(!r.preserved, "deviation {}", r.max_deviation);

        let flow = linear_flow(1.0, 1, 0.1).unwrap();
        assert!(is_measure_preserving(&flow, &m, 10, 0.1).is_err());
    }

    #[test]
    fn cycles() {
        let t = super::super::law::evolve(&rotation(0.25), &pt(0.0), 4).unwrap();
        assert!(is_cycle(&t, 1e-12).unwrap());
        let t = super::super::law::evolve(&golden_rotation(), &pt(0.0), 1000).unwrap();
        assert!(!is_cycle(&t, 1e-9).unwrap());
        let t = super::super::law::evolve(&identity(1), &pt(0.4), 3).unwrap();
        assert!(is_cycle(&t, 1e-12).unwrap());
        let single = Trajectory::from_series(&[1.0], 1.0).unwrap();
        assert!(is_cycle(&single, 1.0).is_err());
    }

    #[test]
    fn additivity() {
        let m = EnsembleMeasure::uniform((0..10).map(|i| pt(i as f64 / 10.0)).collect()).unwrap();
        let left = |x: &[f64]| x[0] < 0.5;
        let right = |x: &[f64]| x[0] >= 0.5;
        let r = measure_additivity_check(&m, &[&left, &right]).unwrap();
        assert!(r.additive);
        assert!((r.union_weight - 1.0).abs() < 1e-15);
        assert!((r.parts[0] - 0.5).abs() < 1e-15);

        let m = EnsembleMeasure::new(
            vec![pt(0.0), pt(1.0), pt(2.0), pt(3.0)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let a = |x: &[f64]| x[0] == 0.0;
        let b = |x: &[f64]| x[0] == 1.0 || x[0] == 3.0;
        let c = |x: &[f64]| x[0] == 2.0;
        let r = measure_additivity_check(&m, &[&a, &b, &c]).unwrap();
        assert!(r.additive);
        assert_eq!(r.parts, vec![0.1, 0.2 + 0.4, 0.3]);

        let overlap = |x: &[f64]| x[0] <= 1.0;
        assert!(matches!(
            measure_additivity_check(&m, &[&a, &overlap]),
            Err(Error::OverlappingRegions {
                first: 0,
                second: 1,
                sample: 0
            })
        ));
    }

    #[test]
    fn ensemble_csv() {
        let m = EnsembleMeasure::new(vec![pt(0.25), pt(1.0)], vec![0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "index,x0,weight\n0,0.25,0.5\n1,1,0.5\n"
        );
    }
}
