//! Mode dispatch: turns a validated [`RunConfig`] into a report and CSV files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::exergy::{self, ProcessBalance};
use crate::phase::{self, catalog, EnsembleMeasure, Observable, PhasePoint};
use crate::report::Report;
use crate::thermo::{self, GeneralizedState, OnsagerTensors, PhysicalConstants};
use crate::variational::{self, OptimizerConfig, StateFamily};
use crate::verify::{self, VerifySettings};
use crate::Execution;

/// Exit status for a verify run with at least one failed check.
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output` entry. The default is the working directory.
    pub out_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub execution: Execution,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Report,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut file = BufWriter::new(File::create(&path)?);
        body(&mut file)?;
        file.flush()?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs `config` and writes `<mode>_report.csv` plus mode-specific files.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome> {
    let dir = match (&options.out_dir, &config.output_path) {
        (Some(d), _) => d.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut out = Output {
        dir,
        files: Vec::new(),
    };
    let seed = options.seed_override.unwrap_or(config.seed);

    let (report, exit_code) = match config.mode {
        Mode::Exergy => (run_exergy(config)?, 0),
        Mode::Onsager => (run_onsager(config)?, 0),
        Mode::Phase => (run_phase(config, options.execution, seed, &mut out)?, 0),
        Mode::Variational => (
            run_variational(config, options.execution, seed, &mut out)?,
            0,
        ),
        Mode::Verify => run_verify(config, options.execution, seed, &mut out)?,
    };
    let csv = report.to_csv();
    out.write(&format!("{}_report.csv", config.mode), |w| {
        Ok(w.write_all(csv.as_bytes())?)
    })?;
    Ok(RunOutcome {
        exit_code,
        report,
        files: out.files,
    })
}

fn run_exergy(config: &RunConfig) -> Result<Report> {
    let t_a = config.require("t_a")?;
    let balance = ProcessBalance {
        q_r: config.require("q_r")?,
        t_r: config.require("t_r")?,
        t_a,
        delta_h: config.require("delta_h")?,
        delta_s: config.require("delta_s")?,
        delta_ek: config.require("delta_ek")?,
        delta_eg: config.require("delta_eg")?,
        w: config.require("w")?,
        t_ref: config.get("t_ref").unwrap_or(t_a),
        m_dot: config.get("m_dot"),
    };
    let result = exergy::analyze(&balance)?;
    let mut report = Report::new();
    report.push("delta_s_irr", result.entropy_generation);
    report.push("w_lost", result.lost_work);
    report.push("lagrangian", result.lagrangian);
    report.push("hamiltonian", result.hamiltonian);
    report.flag("second_law_violation", result.violates_second_law);
    if let Some(m_dot) = balance.m_dot {
        report.push("delta_s_irr_per_mass", result.entropy_generation / m_dot);
    }
    Ok(report)
}

fn run_onsager(config: &RunConfig) -> Result<Report> {
    let n = config.count("n")?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one coordinate"));
    }
    let xi = (0..n)
        .map(|i| config.require(&format!("xi_{i}")))
        .collect::<Result<Vec<_>>>()?;
    let mut l2 = vec![0.0; n * n];
    let mut l3 = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            l2[i * n + j] = config.get(&format!("l2_{i}_{j}")).unwrap_or(0.0);
            for k in 0..n {
                l3[(i * n + j) * n + k] = config.get(&format!("l3_{i}_{j}_{k}")).unwrap_or(0.0);
            }
        }
    }
    let state = GeneralizedState::new(xi, config.require("t")?)?;
    let tensors = OnsagerTensors::from_flat(n, l2, l3)?;

    let mut report = Report::new();
    report.push(
        "entropy_rate",
        thermo::entropy_rate_density(&state, &tensors)?,
    );
    report.push(
        "dissipative_potential",
        thermo::dissipative_potential(&state, &tensors)?,
    );
    report.push(
        "lagrangian_density",
        thermo::lagrangian_density(&state, &tensors)?,
    );
    report.push(
        "hamiltonian_density",
        thermo::hamiltonian_density(&state, &tensors)?,
    );
    for (k, z) in thermo::conjugate_momenta(&state, &tensors)?
        .into_iter()
        .enumerate()
    {
        report.push(format!("zeta_{k}"), z);
    }
    let residuals =
        thermo::consistency_report(&state, &tensors, config.get("rho_s"), config.get("rho_pi"))?;
    report.push("residual_decomposition", residuals.decomposition);
    if let Some(v) = residuals.lavenda {
        report.push("residual_lavenda", v);
    }
    report.push(
        "residual_potential_minus_lagrangian",
        residuals.potential_minus_lagrangian,
    );
    report.push("residual_cubic_only", residuals.cubic_only);
    Ok(report)
}

fn run_phase(
    config: &RunConfig,
    execution: Execution,
    seed: u64,
    out: &mut Output,
) -> Result<Report> {
    let horizon = config.count("horizon")?;
    let samples = config.count("samples")?;
    let constants = PhysicalConstants::new(config.kb_mode.value(), 300.0)?;
    let mut report = Report::new();

    let rotation = catalog::rotation(config.require("shift")?);
    let start = PhasePoint::scalar(config.require("start")?)?;
    let x = Observable::coordinate(0);
    let uniform = EnsembleMeasure::uniform_grid(&[0.0], &[1.0], samples)?;
    let time = phase::time_average(&rotation, &start, &x, horizon)?;
    let ensemble = phase::ensemble_average_with(&uniform, &x, execution);
    report.push("time_average", time);
    report.push("ensemble_average", ensemble);
    report.push("birkhoff_residual", (time - ensemble).abs());

    let relax = catalog::linear_flow(config.require("lambda")?, 1, config.require("dt")?)?;
    let line = EnsembleMeasure::uniform_box(&[-1.0], &[1.0], samples, seed.wrapping_add(1))?;
    let sigma = phase::entropy_production_with(&relax, &line, &constants, execution)?;
    report.push("entropy_production", sigma);
    report.push(
        "entropy_production_fd",
        phase::entropy_production_with(
            &relax.clone().numeric_only(),
            &line,
            &constants,
            execution,
        )?,
    );
    if let Some(m_dot) = config.get("m_dot") {
        report.push(
            "entropy_generation_statistical",
            phase::entropy_generation_statistical(&relax, &line, &constants, m_dot)?,
        );
    }

    let tau = std::f64::consts::TAU;
    let torus =
        EnsembleMeasure::uniform_box(&[0.0, 0.0], &[tau, tau], samples, seed.wrapping_add(2))?;
    let contraction = phase::contraction_rate_map(
        &catalog::standard_map(config.require("kick")?),
        &torus,
        &constants,
    )?;
    report.push("contraction_rate_standard_map", contraction.value);

    let orbit = phase::evolve(&rotation, &start, config.count("dump_steps")?)?;
    out.write("phase_trajectory.csv", |w| orbit.write_csv(w))?;
    out.write("phase_ensemble.csv", |w| uniform.write_csv(w))?;
    Ok(report)
}

fn run_variational(
    config: &RunConfig,
    execution: Execution,
    seed: u64,
    out: &mut Output,
) -> Result<Report> {
    let dim = config.count("dim")?;
    if dim == 0 {
        return Err(Error::invalid("dim", "need at least one parameter"));
    }
    let peak = config.require("peak")?;
    let curvature = config.require("curvature")?;
    let center = (0..dim)
        .map(|k| config.require(&format!("center_{k}")))
        .collect::<Result<Vec<_>>>()?;
    let bounds = vec![(config.require("lower")?, config.require("upper")?); dim];
    let family = StateFamily::new(bounds, move |t| {
        peak - curvature
            * t.iter()
                .zip(&center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
    })?;

    let fd_step = config.require("fd_step")?;
    let optimizer = OptimizerConfig {
        max_iters: config.count("max_iters")?,
        tol_value: config.require("tol_value")?,
        tol_param: config.require("tol_param")?,
        fd_step,
        seed,
        starts: config.count("starts")?,
        execution,
    };
    let optimum = variational::maximize_entropy_generation(&family, &optimizer)?;
    let stationarity = variational::stationarity_check(&family, &optimum.theta, fd_step)?;
    let least = variational::least_action_check(
        &family,
        &optimum.theta,
        config.require("t_ref")?,
        config.require("horizon")?,
        config.require("dt")?,
    )?;

    let mut report = Report::new();
    for (k, v) in optimum.theta.iter().enumerate() {
        report.push(format!("theta_{k}"), *v);
    }
    report.push("value", optimum.value);
    report.flag("converged", optimum.converged);
    report.push("max_violation", stationarity.max_violation);
    report.push("gradient_norm", stationarity.gradient_norm);
    report.push("action_at_optimum", least.action_at_optimum);
    report.flag("least_action_minimal", least.minimal);
    out.write("variational_trace.csv", |w| optimum.write_trace_csv(w))?;
    Ok(report)
}

fn run_verify(
    config: &RunConfig,
    execution: Execution,
    seed: u64,
    out: &mut Output,
) -> Result<(Report, i32)> {
    let settings = VerifySettings {
        instances: config.count("instances")?,
        horizon: config.count("horizon")?,
        samples: config.count("samples")?,
        members: config.count("members")?,
        steps: config.count("steps")?,
    };
    let checks = verify::run_suite(&settings, seed, execution)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let csv = verify::checks_csv(&checks);
    out.write("verify.csv", |w| Ok(w.write_all(csv.as_bytes())?))?;

    let mut report = Report::new();
    report.push("checks", checks.len() as f64);
    report.push("passed", (checks.len() - failed) as f64);
    report.push("failed", failed as f64);
    let code = if failed == 0 { 0 } else { EXIT_VERIFY_FAILED };
    Ok((report, code))
}

/// Reads, parses and runs the config at `path`.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunOutcome> {
    let text = fs::read_to_string(path)?;
    let config = crate::config::parse_config(&text)?;
    run(&config, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exergy_rows() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::new(
            Mode::Exergy,
            [
                ("q_r", 1000.0),
                ("t_r", 500.0),
                ("t_a", 300.0),
                ("delta_h", 0.0),
                ("delta_s", 0.0),
                ("delta_ek", 0.0),
                ("delta_eg", 0.0),
                ("w", 0.0),
            ],
        );
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let outcome = run(&config, &opts).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let csv = fs::read_to_string(dir.path().join("exergy_report.csv")).unwrap();
        assert!(csv.contains("delta_s_irr,1.333333"), "{csv}");
        assert!(csv.contains("w_lost,400\n"), "{csv}");
        assert!(csv.contains("second_law_violation,0\n"));
    }

    #[test]
    fn onsager_quadratic_rows() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::new(Mode::Onsager, [("n", 1.0), ("xi_0", 2.0), ("l2_0_0", 1.0)]);
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let report = run(&config, &opts).unwrap().report;
        assert_eq!(report.get("entropy_rate"), Some(4.0));
        assert_eq!(report.get("lagrangian_density"), Some(2.0));
        assert_eq!(report.get("hamiltonian_density"), Some(-2.0));
        assert_eq!(report.get("zeta_0"), Some(0.0));
        assert_eq!(report.get("residual_lavenda"), None);
    }

    #[test]
    fn variational_writes_trace() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::new(Mode::Variational, [("peak", 2.0), ("center_0", 1.0)]);
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let outcome = run(&config, &opts).unwrap();
        assert!((outcome.report.get("theta_0").unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(outcome.report.get("least_action_minimal"), Some(1.0));
        assert!(dir.path().join("variational_trace.csv").exists());
    }

    #[test]
    fn invalid_balance_is_a_validation_error() {
        let config = RunConfig::new(
            Mode::Exergy,
            [
                ("q_r", 1.0),
                ("t_r", -5.0),
                ("t_a", 300.0),
                ("delta_h", 0.0),
                ("delta_s", 0.0),
                ("delta_ek", 0.0),
                ("delta_eg", 0.0),
                ("w", 0.0),
            ],
        );
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        assert_eq!(run(&config, &opts).unwrap_err().exit_code(), 1);
    }
}
