use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::report::format_value;

/// A point in phase space. For `N` particles the coordinates are ordered
/// `(p, q)` with `d = 6N`; test maps use any `d ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint(Vec<f64>);

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid(
                "coords",
                "phase points need at least one coordinate",
            ));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("phase point".into()));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for PhasePoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

type VectorRule = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub(crate) type ScalarRule = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    /// `σ ↦ Sσ`, iterated directly.
    Map,
    /// `σ̇ = E(σ)`, advanced with fixed-step RK4.
    Flow,
}

/// A discrete map or a vector field on `ℝᵈ`, with optional analytic divergence
/// (flows) or Jacobian determinant (maps).
#[derive(Clone)]
pub struct DynamicalLaw {
    kind: LawKind,
    dim: usize,
    dt: f64,
    transform: VectorRule,
    divergence: Option<ScalarRule>,
    jacobian_det: Option<ScalarRule>,
}

impl fmt::Debug for DynamicalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicalLaw")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("dt", &self.dt)
            .field("analytic_divergence", &self.divergence.is_some())
            .field("analytic_jacobian_det", &self.jacobian_det.is_some())
            .finish()
    }
}

impl DynamicalLaw {
    pub fn map<F>(dim: usize, transform: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            kind: LawKind::Map,
            dim,
            dt: 1.0,
            transform: Arc::new(transform),
            divergence: None,
            jacobian_det: None,
        }
    }

    pub fn flow<F>(dim: usize, dt: f64, field: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "flow step must be positive"));
        }
        Ok(Self {
            kind: LawKind::Flow,
            dim,
            dt,
            transform: Arc::new(field),
            divergence: None,
            jacobian_det: None,
        })
    }

    pub fn with_divergence<F>(mut self, divergence: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.divergence = Some(Arc::new(divergence));
        self
    }

    pub fn with_jacobian_det<F>(mut self, det: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.jacobian_det = Some(Arc::new(det));
        self
    }

    /// Drops any analytic divergence or Jacobian so that finite differences are used.
    pub fn numeric_only(mut self) -> Self {
        self.divergence = None;
        self.jacobian_det = None;
        self
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Evaluates the rule itself: `Sσ` for maps, `E(σ)` for flows.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.transform)(x)
    }

    pub(crate) fn analytic_divergence(&self) -> Option<&ScalarRule> {
        self.divergence.as_ref()
    }

    pub(crate) fn analytic_jacobian_det(&self) -> Option<&ScalarRule> {
        self.jacobian_det.as_ref()
    }

    /// Advances one step: one application of the map, or one RK4 step of the flow.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            LawKind::Map => self.apply(x),
            LawKind::Flow => {
                let h = self.dt;
                let k1 = self.apply(x);
                let k2 = self.apply(&axpy(x, 0.5 * h, &k1));
                let k3 = self.apply(&axpy(x, 0.5 * h, &k2));
                let k4 = self.apply(&axpy(x, h, &k3));
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        }
    }

    fn check_point(&self, x: &PhasePoint) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "phase point vs law",
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// Sampled orbit: `points[k]` is the state after `k` steps of size `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<PhasePoint>,
    step: f64,
    /// Step at which the orbit left the finite reals, if it did.
    truncated_at: Option<usize>,
}

impl Trajectory {
    pub fn new(points: Vec<PhasePoint>, step: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid(
                "points",
                "a trajectory needs at least one point",
            ));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("step", "must be positive"));
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                what: "trajectory points",
                expected: d,
                found: p.dim(),
            });
        }
        Ok(Self {
            points,
            step,
            truncated_at: None,
        })
    }

    /// Builds a one-dimensional trajectory from a scalar series.
    pub fn from_series(series: &[f64], step: f64) -> Result<Self> {
        let points = series
            .iter()
            .map(|&x| PhasePoint::scalar(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, step)
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn first(&self) -> &PhasePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &PhasePoint {
        &self.points[self.points.len() - 1]
    }

    pub fn truncated_at(&self) -> Option<usize> {
        self.truncated_at
    }

    /// CSV dump with header `index,x0,x1,…`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.first().dim();
        let header: Vec<String> = std::iter::once("index".to_string())
            .chain((0..d).map(|k| format!("x{k}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, p) in self.points.iter().enumerate() {
            let row: Vec<String> = p.iter().map(|&x| format_value(x)).collect();
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Iterates `law` from `start` for `steps` steps.
///
/// If the orbit leaves the finite reals, the trajectory stops at the last
/// finite point and records the failing step in [`Trajectory::truncated_at`].
pub fn evolve(law: &DynamicalLaw, start: &PhasePoint, steps: usize) -> Result<Trajectory> {
    law.check_point(start)?;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(start.clone());
    let mut truncated_at = None;
    for k in 1..=steps {
        let next = law.step(&points[k - 1]);
        if next.len() != law.dim() {
            return Err(Error::DimensionMismatch {
                what: "law output",
                expected: law.dim(),
                found: next.len(),
            });
        }
        if next.iter().any(|x| !x.is_finite()) {
            truncated_at = Some(k);
            break;
        }
        points.push(PhasePoint(next));
    }
    Ok(Trajectory {
        points,
        step: law.dt(),
        truncated_at,
    })
}

/// Runs `law` for `steps` steps and returns only the final point.
pub(crate) fn advance(law: &DynamicalLaw, start: &[f64], steps: usize) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    for k in 0..steps {
        x = law.step(&x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("orbit at step {}", k + 1)));
        }
    }
    Ok(x)
}

/// Fractional part of the golden ratio, `(√5 − 1)/2`.
pub const GOLDEN_SHIFT: f64 = 0.618_033_988_749_894_9;

/// Ready-made laws used by the examples, the verification suite and the tests.
///
/// The binary doubling and tent maps are deliberately absent: in binary floating
/// point their orbits collapse onto 0 within about 53 steps, so they make
/// misleading ergodic test cases.
pub mod catalog {
    use super::*;

    pub fn identity(dim: usize) -> DynamicalLaw {
        DynamicalLaw::map(dim, |x| x.to_vec()).with_jacobian_det(|_| 1.0)
    }

    /// Circle rotation `x ← (x + shift) mod 1`.
    pub fn rotation(shift: f64) -> DynamicalLaw {
        DynamicalLaw::map(1, move |x| vec![(x[0] + shift).rem_euclid(1.0)])
            .with_jacobian_det(|_| 1.0)
    }

    pub fn golden_rotation() -> DynamicalLaw {
        rotation(GOLDEN_SHIFT)
    }

    /// `x ← r x (1 − x)`; ergodic on [0, 1] for `r = 4`.
    pub fn logistic(r: f64) -> DynamicalLaw {
        DynamicalLaw::map(1, move |x| vec![r * x[0] * (1.0 - x[0])])
            .with_jacobian_det(move |x| r * (1.0 - 2.0 * x[0]))
    }

    /// `x ← a x`.
    pub fn scaling(a: f64) -> DynamicalLaw {
        DynamicalLaw::map(1, move |x| vec![a * x[0]]).with_jacobian_det(move |_| a)
    }

    /// `x ← x²`; does not preserve Lebesgue measure on [0, 1].
    pub fn square() -> DynamicalLaw {
        DynamicalLaw::map(1, |x| vec![x[0] * x[0]]).with_jacobian_det(|x| 2.0 * x[0])
    }

    /// Chirikov standard map on the torus, coordinates `(p, q)`:
    /// `p' = p + K sin q`, `q' = q + p'`, both mod 2π. Area preserving.
    pub fn standard_map(kick: f64) -> DynamicalLaw {
        DynamicalLaw::map(2, move |x| {
            let p = (x[0] + kick * x[1].sin()).rem_euclid(TAU);
            let q = (x[1] + p).rem_euclid(TAU);
            vec![p, q]
        })
        .with_jacobian_det(|_| 1.0)
    }

    /// Standard map without the torus wrap, so finite differences see a smooth map.
    pub fn standard_map_unwrapped(kick: f64) -> DynamicalLaw {
        DynamicalLaw::map(2, move |x| {
            let p = x[0] + kick * x[1].sin();
            vec![p, x[1] + p]
        })
    }

    /// Linear relaxation `ẋ = −λ x` in `dim` dimensions; `∇·E = −λ dim`.
    pub fn linear_flow(lambda: f64, dim: usize, dt: f64) -> Result<DynamicalLaw> {
        Ok(
            DynamicalLaw::flow(dim, dt, move |x| x.iter().map(|v| -lambda * v).collect())?
                .with_divergence(move |_| -lambda * dim as f64),
        )
    }

    /// `ẋ = −x³`; `∇·E = −3x²`.
    pub fn cubic_flow(dt: f64) -> Result<DynamicalLaw> {
        Ok(DynamicalLaw::flow(1, dt, |x| vec![-x[0].powi(3)])?
            .with_divergence(|x| -3.0 * x[0] * x[0]))
    }

    /// Rigid planar rotation `(ẋ, ẏ) = (−ω y, ω x)`; divergence free.
    pub fn planar_rotation(omega: f64, dt: f64) -> Result<DynamicalLaw> {
        Ok(
            DynamicalLaw::flow(2, dt, move |x| vec![-omega * x[1], omega * x[0]])?
                .with_divergence(|_| 0.0),
        )
    }

    /// Harmonic oscillator in canonical coordinates `(p, q)`: `ṗ = −q`, `q̇ = p`.
    pub fn harmonic_oscillator(dt: f64) -> Result<DynamicalLaw> {
        Ok(DynamicalLaw::flow(2, dt, |x| vec![-x[1], x[0]])?.with_divergence(|_| 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    #[test]
    fn identity_orbit_is_constant() {
        let start = PhasePoint::new(vec![0.3, -2.0]).unwrap();
        let t = evolve(&identity(2), &start, 10).unwrap();
        assert_eq!(t.len(), 11);
        assert!(t.points().iter().all(|p| *p == start));
    }

    #[test]
    fn golden_rotation_two_steps() {
        let t = evolve(&golden_rotation(), &PhasePoint::scalar(0.0).unwrap(), 2).unwrap();
        let xs: Vec<f64> = t.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 0.6180339887).abs() < 1e-10);
        assert!((xs[2] - 0.2360679775).abs() < 1e-10);
    }

    #[test]
    fn linear_flow_matches_exponential() {
        let law = linear_flow(1.0, 1, 0.1).unwrap();
        let t = evolve(&law, &PhasePoint::scalar(1.0).unwrap(), 10).unwrap();
        assert!((t.last()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(t.step(), 0.1);
    }

    #[test]
    fn blow_up_truncates() {
        let law = scaling(1e200);
        let t = evolve(&law, &PhasePoint::scalar(1.0).unwrap(), 5).unwrap();
        assert_eq!(t.truncated_at(), Some(2));
        assert_eq!(t.len(), 2);
        assert!(advance(&law, &[1.0], 5).is_err());
    }

    #[test]
    fn dimension_is_checked() {
        let start = PhasePoint::new(vec![0.0, 0.0]).unwrap();
        assert!(evolve(&golden_rotation(), &start, 1).is_err());
        assert!(PhasePoint::new(vec![]).is_err());
        assert!(DynamicalLaw::flow(1, 0.0, |x| x.to_vec()).is_err());
    }

    #[test]
    fn evolution_is_deterministic() {
        let law = standard_map(0.97);
        let start = PhasePoint::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            evolve(&law, &start, 500).unwrap(),
            evolve(&law, &start, 500).unwrap()
        );
    }

    #[test]
    fn csv_dump() {
        let t = Trajectory::from_series(&[0.0, 0.5], 1.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,x0\n0,0\n1,0.5\n");
    }
}
