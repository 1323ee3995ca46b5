//! Generalized thermodynamic coordinates, Onsager tensors and the density-level
//! formulas built on them, plus the compartment mass balance.
//!
//! All densities are evaluated from the same two building blocks,
//!
//! ```text
//! Q(ξ) = Σ_ij L_ij ξ_i ξ_j          C(ξ) = Σ_ijk L_ijk ξ_i ξ_j ξ_k
//! ```
//!
//! so that
//!
//! | density                  | value            |
//! |--------------------------|------------------|
//! | entropy rate per volume  | `Q + C/2`        |
//! | dissipative potential ψ  | `Q/2 + C/6`      |
//! | Lagrangian density ρ_L   | `Q/2 + C/3`      |
//! | Hamiltonian density ρ_H  | `−ρ_L`           |

use crate::error::{Error, Result};

/// Boltzmann constant in J/K.
pub const BOLTZMANN_SI: f64 = 1.380649e-23;

/// Deviations ξ_i = α_i − α_i⁽⁰⁾ of the extensive quantities from their
/// stable-state values, treated as pre-normalized dimensionless numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedState {
    xi: Vec<f64>,
    xi_dot: Option<Vec<f64>>,
    t: f64,
}

impl GeneralizedState {
    pub fn new(xi: Vec<f64>, t: f64) -> Result<Self> {
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("generalized state ξ".into()));
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("generalized state time".into()));
        }
        Ok(Self {
            xi,
            xi_dot: None,
            t,
        })
    }

    /// Attaches the rates ξ̇_i (per second).
    pub fn with_rates(mut self, xi_dot: Vec<f64>) -> Result<Self> {
        if xi_dot.len() != self.xi.len() {
            return Err(Error::DimensionMismatch {
                what: "ξ̇ vs ξ",
                expected: self.xi.len(),
                found: xi_dot.len(),
            });
        }
        if xi_dot.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("generalized rates ξ̇".into()));
        }
        self.xi_dot = Some(xi_dot);
        Ok(self)
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_dot(&self) -> Option<&[f64]> {
        self.xi_dot.as_deref()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// Same state with every deviation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GeneralizedState::new(self.xi.iter().map(|x| x * factor).collect(), self.t)
    }
}

/// Phenomenological coefficients `L_ij` (rank 2) and `L_ijk` (rank 3).
///
/// Both tensors are symmetrized on construction by averaging over index
/// permutations; only the symmetric part contributes to the quadratic and
/// cubic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsagerTensors {
    n: usize,
    l2: Vec<f64>,
    l3: Vec<f64>,
}

impl OnsagerTensors {
    /// Builds the tensors from nested rows, symmetrizing both.
    pub fn new(l2: &[Vec<f64>], l3: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = l2.len();
        if n == 0 {
            return Err(Error::invalid("l2", "tensors need at least one coordinate"));
        }
        for row in l2 {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "l2 row",
                    expected: n,
                    found: row.len(),
                });
            }
        }
        if l3.len() != n {
            return Err(Error::DimensionMismatch {
                what: "l3 vs l2",
                expected: n,
                found: l3.len(),
            });
        }
        for plane in l3 {
            if plane.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "l3 plane",
                    expected: n,
                    found: plane.len(),
                });
            }
            for row in plane {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "l3 row",
                        expected: n,
                        found: row.len(),
                    });
                }
            }
        }
        let flat2: Vec<f64> = l2.iter().flatten().copied().collect();
        let flat3: Vec<f64> = l3.iter().flatten().flatten().copied().collect();
        Self::from_flat(n, flat2, flat3)
    }

    /// Builds the tensors from row-major flat storage (`n²` and `n³` entries).
    pub fn from_flat(n: usize, l2: Vec<f64>, l3: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "tensors need at least one coordinate"));
        }
        if l2.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "flat l2",
                expected: n * n,
                found: l2.len(),
            });
        }
        if l3.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                what: "flat l3",
                expected: n * n * n,
                found: l3.len(),
            });
        }
        if l2.iter().chain(l3.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Onsager tensors".into()));
        }

        let mut sym2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sym2[i * n + j] = 0.5 * (l2[i * n + j] + l2[j * n + i]);
            }
        }

        let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
        let mut sym3 = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let sum = l3[idx(i, j, k)]
                        + l3[idx(i, k, j)]
                        + l3[idx(j, i, k)]
                        + l3[idx(j, k, i)]
                        + l3[idx(k, i, j)]
                        + l3[idx(k, j, i)];
                    sym3[idx(i, j, k)] = sum / 6.0;
                }
            }
        }
        Ok(Self {
            n,
            l2: sym2,
            l3: sym3,
        })
    }

    /// Quadratic coefficients only; the cubic tensor is zero.
    pub fn quadratic(l2: &[Vec<f64>]) -> Result<Self> {
        let n = l2.len();
        let l3 = vec![vec![vec![0.0; n]; n]; n];
        Self::new(l2, &l3)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_flat(n, vec![0.0; n * n], vec![0.0; n * n * n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn l2(&self, i: usize, j: usize) -> f64 {
        self.l2[i * self.n + j]
    }

    pub fn l3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.l3[(i * self.n + j) * self.n + k]
    }

    pub fn has_cubic_terms(&self) -> bool {
        self.l3.iter().any(|&x| x != 0.0)
    }

    fn check(&self, state: &GeneralizedState) -> Result<()> {
        if state.dim() != self.n {
            return Err(Error::DimensionMismatch {
                what: "state vs tensors",
                expected: self.n,
                found: state.dim(),
            });
        }
        Ok(())
    }

    /// `(Σ_ij L_ij ξ_i ξ_j, Σ_ijk L_ijk ξ_i ξ_j ξ_k)`.
    pub fn forms(&self, state: &GeneralizedState) -> Result<(f64, f64)> {
        self.check(state)?;
        let xi = state.xi();
        let n = self.n;
        let mut quadratic = 0.0;
        let mut cubic = 0.0;
        for i in 0..n {
            let mut row2 = 0.0;
            for j in 0..n {
                row2 += self.l2[i * n + j] * xi[j];
                let base = (i * n + j) * n;
                let mut row3 = 0.0;
                for k in 0..n {
                    row3 += self.l3[base + k] * xi[k];
                }
                cubic += xi[i] * xi[j] * row3;
            }
            quadratic += xi[i] * row2;
        }
        Ok((quadratic, cubic))
    }
}

/// Boltzmann constant and reference (lower reservoir) temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    k_b: f64,
    t_ref: f64,
}

impl PhysicalConstants {
    pub fn new(k_b: f64, t_ref: f64) -> Result<Self> {
        if !(k_b > 0.0 && k_b.is_finite()) {
            return Err(Error::invalid("k_b", "must be strictly positive"));
        }
        if !(t_ref > 0.0 && t_ref.is_finite()) {
            return Err(Error::invalid("t_ref", "must be strictly positive"));
        }
        Ok(Self { k_b, t_ref })
    }

    /// SI Boltzmann constant.
    pub fn si(t_ref: f64) -> Result<Self> {
        Self::new(BOLTZMANN_SI, t_ref)
    }

    /// `k_B = 1`, for dimensionless dynamical studies.
    pub fn unit(t_ref: f64) -> Result<Self> {
        Self::new(1.0, t_ref)
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn t_ref(&self) -> f64 {
        self.t_ref
    }
}

/// Entropy produced per unit time and volume: `Σ L_ij ξ_i ξ_j + ½ Σ L_ijk ξ_i ξ_j ξ_k`.
pub fn entropy_rate_density(state: &GeneralizedState, tensors: &OnsagerTensors) -> Result<f64> {
    let (q, c) = tensors.forms(state)?;
    Ok(q + 0.5 * c)
}

/// Non-linear dissipative potential density ψ: `½ Σ L_ij ξ_i ξ_j + ⅙ Σ L_ijk ξ_i ξ_j ξ_k`.
pub fn dissipative_potential(state: &GeneralizedState, tensors: &OnsagerTensors) -> Result<f64> {
    let (q, c) = tensors.forms(state)?;
    Ok(0.5 * q + c / 6.0)
}

/// Lagrangian density ρ_L: `½ Σ L_ij ξ_i ξ_j + ⅓ Σ L_ijk ξ_i ξ_j ξ_k`.
///
/// Algebraically equal to `entropy_rate_density − dissipative_potential`.
pub fn lagrangian_density(state: &GeneralizedState, tensors: &OnsagerTensors) -> Result<f64> {
    let (q, c) = tensors.forms(state)?;
    Ok(0.5 * q + c / 3.0)
}

/// Hamiltonian density `ρ_H = Σ ζ_i ξ_i − ρ_L`; every momentum vanishes, so this is `−ρ_L`.
pub fn hamiltonian_density(state: &GeneralizedState, tensors: &OnsagerTensors) -> Result<f64> {
    Ok(-lagrangian_density(state, tensors)?)
}

/// Momenta `ζ_i = ∂ρ_L/∂ξ̇_i` conjugate to the coordinates.
///
/// ρ_L depends on the coordinates only, so the result is the zero vector.
pub fn conjugate_momenta(state: &GeneralizedState, tensors: &OnsagerTensors) -> Result<Vec<f64>> {
    tensors.check(state)?;
    Ok(vec![0.0; state.dim()])
}

/// Residuals between the density relations. None of them is enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    /// `ρ_L − (entropy rate − ψ)`.
    pub decomposition: f64,
    /// `ρ_S − ρ_π − 2ψ`, when both `ρ_S` and `ρ_π` are supplied.
    pub lavenda: Option<f64>,
    /// `ψ − ρ_L`, equal to `−⅙ Σ L_ijk ξξξ`; zero iff the cubic form vanishes.
    pub potential_minus_lagrangian: f64,
    /// `ψ − ⅙ Σ L_ijk ξξξ`, i.e. the quadratic part `½ Σ L_ij ξ_i ξ_j`.
    pub cubic_only: f64,
}

pub fn consistency_report(
    state: &GeneralizedState,
    tensors: &OnsagerTensors,
    rho_s: Option<f64>,
    rho_pi: Option<f64>,
) -> Result<ConsistencyReport> {
    let (_, c) = tensors.forms(state)?;
    let rate = entropy_rate_density(state, tensors)?;
    let psi = dissipative_potential(state, tensors)?;
    let rho_l = lagrangian_density(state, tensors)?;
    let lavenda = match (rho_s, rho_pi) {
        (Some(s), Some(p)) => Some(s - p - 2.0 * psi),
        _ => None,
    };
    Ok(ConsistencyReport {
        decomposition: rho_l - (rate - psi),
        lavenda,
        potential_minus_lagrangian: psi - rho_l,
        cubic_only: psi - c / 6.0,
    })
}

/// Rectangular grid over (time, temperature, volume).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    time: Vec<f64>,
    temperature: Vec<f64>,
    volume: Vec<f64>,
}

impl DensityGrid {
    pub fn new(time: Vec<f64>, temperature: Vec<f64>, volume: Vec<f64>) -> Result<Self> {
        for (name, axis) in [
            ("time", &time),
            ("temperature", &temperature),
            ("volume", &volume),
        ] {
            if axis.len() < 2 {
                return Err(Error::invalid(name, "axis needs at least two points"));
            }
            if axis.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{name} axis")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(name, "axis must be strictly increasing"));
            }
        }
        Ok(Self {
            time,
            temperature,
            volume,
        })
    }

    /// Evenly spaced axes with `points` nodes each over the given closed ranges.
    pub fn uniform(
        time: (f64, f64),
        temperature: (f64, f64),
        volume: (f64, f64),
        points: usize,
    ) -> Result<Self> {
        let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
            let steps = points.saturating_sub(1).max(1) as f64;
            (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / steps)
                .collect()
        };
        Self::new(axis(time), axis(temperature), axis(volume))
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.time.len(), self.temperature.len(), self.volume.len())
    }

    /// Evaluates `field(t, T, V)` at every node, row-major in (t, T, V).
    pub fn sample(&self, field: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let mut out =
            Vec::with_capacity(self.time.len() * self.temperature.len() * self.volume.len());
        for &t in &self.time {
            for &temp in &self.temperature {
                for &v in &self.volume {
                    out.push(field(t, temp, v));
                }
            }
        }
        out
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (axis[i + 1] - axis[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Trapezoidal triple integral `∫dt ∫dT ∫dV` of a field sampled on `grid`
/// (row-major in (t, T, V)).
pub fn integrate_density(grid: &DensityGrid, values: &[f64]) -> Result<f64> {
    let (nt, ntemp, nv) = grid.shape();
    if values.len() != nt * ntemp * nv {
        return Err(Error::DimensionMismatch {
            what: "field vs grid",
            expected: nt * ntemp * nv,
            found: values.len(),
        });
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("density field".into()));
    }
    let wt = trapezoid_weights(&grid.time);
    let wtemp = trapezoid_weights(&grid.temperature);
    let wv = trapezoid_weights(&grid.volume);
    let mut total = 0.0;
    for (a, &w_a) in wt.iter().enumerate() {
        for (b, &w_b) in wtemp.iter().enumerate() {
            let base = (a * ntemp + b) * nv;
            let inner: f64 = wv
                .iter()
                .zip(&values[base..base + nv])
                .map(|(w, f)| w * f)
                .sum();
            total += w_a * w_b * inner;
        }
    }
    Ok(total)
}

/// Compartment-wise form of the continuity equations.
///
/// Each compartment `i` has density `ρ_i`, fixed volume `V_i`, mass `ρ_i V_i` and
/// velocity divergence `∇·ẋ_i`; the whole system has total density `ρ`, barycentric
/// divergence `∇·ẋ_B` and a source `Ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentSystem {
    masses: Vec<f64>,
    densities: Vec<f64>,
    volumes: Vec<f64>,
    div_velocity: Vec<f64>,
    source: f64,
    total_density: f64,
    div_barycentric: f64,
}

impl CompartmentSystem {
    /// Source-free system at rest. The total density defaults to `Σm_i / ΣV_i`.
    pub fn new(densities: Vec<f64>, volumes: Vec<f64>) -> Result<Self> {
        let n = densities.len();
        if n == 0 {
            return Err(Error::invalid("densities", "need at least one compartment"));
        }
        if volumes.len() != n {
            return Err(Error::DimensionMismatch {
                what: "volumes vs densities",
                expected: n,
                found: volumes.len(),
            });
        }
        for (name, values) in [("densities", &densities), ("volumes", &volumes)] {
            if values.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(name, "entries must be strictly positive"));
            }
        }
        let masses: Vec<f64> = densities.iter().zip(&volumes).map(|(r, v)| r * v).collect();
        let total_density = masses.iter().sum::<f64>() / volumes.iter().sum::<f64>();
        Ok(Self {
            masses,
            densities,
            volumes,
            div_velocity: vec![0.0; n],
            source: 0.0,
            total_density,
            div_barycentric: 0.0,
        })
    }

    pub fn with_div_velocity(mut self, div_velocity: Vec<f64>) -> Result<Self> {
        if div_velocity.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "divergences vs compartments",
                expected: self.len(),
                found: div_velocity.len(),
            });
        }
        if div_velocity.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("velocity divergences".into()));
        }
        self.div_velocity = div_velocity;
        Ok(self)
    }

    /// Sets the divergences from an antisymmetric matrix of exchange mass flows
    /// `F_ij` (kg/s leaving `i` towards `j`): `∇·ẋ_i = Σ_j F_ij / (ρ_i V_i)`.
    ///
    /// Divergences built this way satisfy `Σ ρ_i V_i ∇·ẋ_i = 0`.
    pub fn with_exchange(self, flows: &[Vec<f64>]) -> Result<Self> {
        let n = self.len();
        if flows.len() != n || flows.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "exchange matrix",
                expected: n,
                found: flows.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (flows[i][j], flows[j][i]);
                if a != -b {
                    return Err(Error::invalid(
                        "exchange",
                        format!(
                            "flows must be antisymmetric (F[{i}][{j}] = {a}, F[{j}][{i}] = {b})"
                        ),
                    ));
                }
            }
        }
        let div = (0..n)
            .map(|i| flows[i].iter().sum::<f64>() / self.masses[i])
            .collect();
        self.with_div_velocity(div)
    }

    pub fn with_source(mut self, source: f64) -> Result<Self> {
        if !source.is_finite() {
            return Err(Error::NonFinite("source Ξ".into()));
        }
        self.source = source;
        Ok(self)
    }

    pub fn with_barycentric(mut self, total_density: f64, div_barycentric: f64) -> Result<Self> {
        if !(total_density > 0.0 && total_density.is_finite()) {
            return Err(Error::invalid("total_density", "must be strictly positive"));
        }
        if !div_barycentric.is_finite() {
            return Err(Error::NonFinite("barycentric divergence".into()));
        }
        self.total_density = total_density;
        self.div_barycentric = div_barycentric;
        Ok(self)
    }

    /// Checks that the compartment volumes add up to `total` within 1e-12 relative.
    pub fn check_total_volume(&self, total: f64) -> Result<()> {
        let sum: f64 = self.volumes.iter().sum();
        if (sum - total).abs() > 1e-12 * total.abs().max(sum.abs()) {
            return Err(Error::invalid(
                "volumes",
                format!("compartment volumes sum to {sum}, expected {total}"),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn div_velocity(&self) -> &[f64] {
        &self.div_velocity
    }

    pub fn source(&self) -> f64 {
        self.source
    }

    pub fn total_density(&self) -> f64 {
        self.total_density
    }

    pub fn div_barycentric(&self) -> f64 {
        self.div_barycentric
    }
}

/// `Σ m_i`.
pub fn total_mass(system: &CompartmentSystem) -> f64 {
    system.masses.iter().sum()
}

/// One explicit Euler step of the continuity equations:
/// `ρ_i ← ρ_i + dt (ρ Ξ − ρ_i ∇·ẋ_i)` and `ρ ← ρ − dt ρ ∇·ẋ_B`.
///
/// Volumes are held fixed and masses recomputed as `ρ_i V_i`.
pub fn step_compartments(system: &CompartmentSystem, dt: f64) -> Result<CompartmentSystem> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be strictly positive"));
    }
    let rho = system.total_density;
    let mut densities = Vec::with_capacity(system.len());
    for (i, (&rho_i, &div)) in system
        .densities
        .iter()
        .zip(&system.div_velocity)
        .enumerate()
    {
        let next = rho_i + dt * (rho * system.source - rho_i * div);
        if !(next > 0.0 && next.is_finite()) {
            return Err(Error::NonPositiveDensity {
                compartment: i,
                value: next,
            });
        }
        densities.push(next);
    }
    let total_density = rho - dt * rho * system.div_barycentric;
    if !(total_density > 0.0 && total_density.is_finite()) {
        return Err(Error::Numerical(format!(
            "total density would become {total_density}"
        )));
    }
    let masses = densities
        .iter()
        .zip(&system.volumes)
        .map(|(r, v)| r * v)
        .collect();
    Ok(CompartmentSystem {
        masses,
        densities,
        volumes: system.volumes.clone(),
        div_velocity: system.div_velocity.clone(),
        source: system.source,
        total_density,
        div_barycentric: system.div_barycentric,
    })
}
