//! Experiment runners behind the `spinamp` executable.
//!
//! Each runner turns a [`RunConfig`] into a [`Table`] (or, for `validate`, a
//! [`ValidationReport`]) plus the metadata needed to reproduce it.

mod config;
mod output;
mod validate;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use config::{
    apply_override, ChecksConfig, DriveConfig, Experiment, GridConfig, OracleConfig, ParamsConfig,
    RunConfig,
};
pub use output::{meta_path, write_json, Cell, Table};
pub use validate::{conservation_residual, run_validate, CheckResult, ValidationReport};

use crate::analytic;
use crate::dynamics::{omega_max, readout_gain, reduced_trajectory, TimeGrid, Trajectory};
use crate::hilbert::{eig_hermitian, DensityMatrix, QubitState, SpaceDims};
use crate::model::{build_driven, build_hc, collapse_ops, SystemParams};
use crate::rk4::required_steps;
use crate::{angular_to_mhz, mhz_to_angular};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest cutoff tried when looking for a converged value to suggest.
const MAX_SUGGESTED_CUTOFF: usize = 64;
/// Largest number of step doublings tried when looking for a converged dt.
const MAX_STEP_DOUBLINGS: u32 = 6;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Physics(#[from] crate::Error),
    #[error("{0}")]
    Check(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// max_t |a − b| / max_t |b|, or the absolute deviation when b vanishes.
pub fn curve_deviation(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dev = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 1e-12 {
        dev / scale
    } else {
        dev
    }
}

/// Largest [`curve_deviation`] over the reported observables of a run.
pub fn trajectory_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    [
        curve_deviation(&a.collective_n, &b.collective_n),
        curve_deviation(&a.qubit_excited, &b.qubit_excited),
        curve_deviation(&a.total_n, &b.total_n),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub suggestion: Option<String>,
}

/// Integration grid for `p` at `cutoff`: the configured step count, or
/// `step_refinement` times the guard minimum rounded up to whole records.
pub fn resolve_grid(
    cfg: &RunConfig,
    p: &SystemParams,
    cutoff: usize,
    t_end: f64,
) -> Result<TimeGrid, RunError> {
    let g = &cfg.grid;
    let grid = match g.n_steps {
        Some(n) => TimeGrid::new(g.t_start_us, t_end, n, n / g.records)?,
        None => {
            let w = omega_max(&build_driven(p, cutoff)?, &collapse_ops(p, cutoff)?);
            let steps = g.step_refinement * required_steps(w, t_end - g.t_start_us);
            TimeGrid::with_records(g.t_start_us, t_end, g.records, steps.div_ceil(g.records))?
        }
    };
    Ok(grid)
}

/// Driven reduced model (H_c + H_d, collapse √γÂ [+ √ΓÂ]) from |q, 0⟩.
pub fn simulate_branch(
    p: &SystemParams,
    cutoff: usize,
    grid: &TimeGrid,
    q: QubitState,
) -> crate::Result<Trajectory> {
    let rho0 = DensityMatrix::basis(SpaceDims::qubit_fock(cutoff)?, &[q.index(), 0])?;
    reduced_trajectory(
        &build_driven(p, cutoff)?,
        &collapse_ops(p, cutoff)?,
        &rho0,
        grid,
        p.gamma,
    )
}

fn simulate_pair(
    p: &SystemParams,
    cutoff: usize,
    grid: &TimeGrid,
) -> crate::Result<(Trajectory, Trajectory)> {
    let (e, g) = rayon::join(
        || simulate_branch(p, cutoff, grid, QubitState::Excited),
        || simulate_branch(p, cutoff, grid, QubitState::Ground),
    );
    Ok((e?, g?))
}

fn pair_deviation(a: &(Trajectory, Trajectory), b: &(Trajectory, Trajectory)) -> f64 {
    trajectory_deviation(&a.0, &b.0).max(trajectory_deviation(&a.1, &b.1))
}

/// Both qubit branches at one parameter set, with their convergence checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPair {
    pub params: SystemParams,
    pub cutoff: usize,
    pub grid: TimeGrid,
    pub excited: Trajectory,
    pub ground: Trajectory,
    pub checks: Vec<ConvergenceCheck>,
}

impl BranchPair {
    pub fn gain(&self) -> Vec<f64> {
        readout_gain(&self.excited, &self.ground).expect("branches share a grid")
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &ConvergenceCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs both branches at the configured cutoff and, as enabled, reruns them
/// with dt halved and with the cutoff doubled.
pub fn run_branches(cfg: &RunConfig, p: &SystemParams, t_end: f64) -> Result<BranchPair, RunError> {
    let d = cfg.fock_cutoff;
    let grid = resolve_grid(cfg, p, d, t_end)?;
    let base = simulate_pair(p, d, &grid)?;
    let mut checks = Vec::new();

    if cfg.checks.timestep {
        let tol = cfg.checks.timestep_tolerance;
        let fine = simulate_pair(p, d, &grid.halved())?;
        let measured = pair_deviation(&base, &fine);
        let suggestion = if measured < tol {
            None
        } else {
            Some(suggest_steps(p, d, &grid, fine, tol)?)
        };
        checks.push(ConvergenceCheck {
            name: "step_convergence".into(),
            measured,
            tolerance: tol,
            passed: measured < tol,
            suggestion,
        });
    }
    if cfg.checks.cutoff {
        let tol = cfg.checks.cutoff_tolerance;
        let wide = simulate_pair(p, 2 * d, &resolve_grid(cfg, p, 2 * d, t_end)?)?;
        let measured = pair_deviation(&base, &wide);
        let suggestion = if measured < tol {
            None
        } else {
            Some(suggest_cutoff(cfg, p, 2 * d, t_end, wide, tol)?)
        };
        checks.push(ConvergenceCheck {
            name: "cutoff_convergence".into(),
            measured,
            tolerance: tol,
            passed: measured < tol,
            suggestion,
        });
    }

    let (excited, ground) = base;
    Ok(BranchPair {
        params: *p,
        cutoff: d,
        grid,
        excited,
        ground,
        checks,
    })
}

fn suggest_steps(
    p: &SystemParams,
    d: usize,
    grid: &TimeGrid,
    mut prev: (Trajectory, Trajectory),
    tol: f64,
) -> Result<String, RunError> {
    let mut g = grid.halved();
    for _ in 0..MAX_STEP_DOUBLINGS {
        let next = simulate_pair(p, d, &g.halved())?;
        if pair_deviation(&prev, &next) < tol {
            return Ok(format!("grid.n_steps={}", g.n_steps));
        }
        prev = next;
        g = g.halved();
    }
    Ok(format!("no converged step count up to n_steps={}", g.n_steps))
}

fn suggest_cutoff(
    cfg: &RunConfig,
    p: &SystemParams,
    mut d: usize,
    t_end: f64,
    mut prev: (Trajectory, Trajectory),
    tol: f64,
) -> Result<String, RunError> {
    while 2 * d <= MAX_SUGGESTED_CUTOFF {
        let next = simulate_pair(p, 2 * d, &resolve_grid(cfg, p, 2 * d, t_end)?)?;
        if pair_deviation(&prev, &next) < tol {
            return Ok(format!("fock_cutoff={d}"));
        }
        prev = next;
        d *= 2;
    }
    Ok(format!("no converged cutoff up to {MAX_SUGGESTED_CUTOFF}"))
}

fn ensure_converged<'a>(pairs: impl IntoIterator<Item = &'a BranchPair>) -> Result<(), RunError> {
    let failures: Vec<String> = pairs
        .into_iter()
        .flat_map(|pair| {
            pair.failed_checks().map(move |c| {
                format!(
                    "{} failed at gamma/2pi = {} MHz: change {:.3e} exceeds {:.1e}; try {}",
                    c.name,
                    angular_to_mhz(pair.params.gamma),
                    c.measured,
                    c.tolerance,
                    c.suggestion.as_deref().unwrap_or("a finer setting")
                )
            })
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check(failures.join("\n")))
    }
}

/// Numerical and closed-form ⟨Â†Â⟩ for both qubit branches.
pub fn figure2(cfg: &RunConfig) -> Result<(Table, BranchPair), RunError> {
    let p = cfg.params.to_params()?;
    let pair = run_branches(cfg, &p, cfg.t_end(Experiment::Figure2))?;
    ensure_converged([&pair])?;
    let mut table = Table::new(["t_us", "n_num_e", "n_ana_e", "n_num_g", "n_ana_g"]);
    for (k, &t) in pair.excited.times.iter().enumerate() {
        table.push(vec![
            t.into(),
            pair.excited.collective_n[k].into(),
            analytic::excited_population(t, &p).into(),
            pair.ground.collective_n[k].into(),
            analytic::ground_population(t, &p).into(),
        ]);
    }
    Ok((table, pair))
}

fn sweep_pairs(cfg: &RunConfig, experiment: Experiment) -> Result<Vec<BranchPair>, RunError> {
    let p = cfg.params.to_params()?;
    let t_end = cfg.t_end(experiment);
    let pairs: Vec<BranchPair> = cfg
        .gamma_sweep_mhz
        .par_iter()
        .map(|&nu| run_branches(cfg, &p.with_gamma(mhz_to_angular(nu)), t_end))
        .collect::<Result<_, _>>()?;
    ensure_converged(&pairs)?;
    Ok(pairs)
}

/// Ensemble excitation totals and their difference, per γ.
pub fn figure3(cfg: &RunConfig) -> Result<(Table, Vec<BranchPair>), RunError> {
    let pairs = sweep_pairs(cfg, Experiment::Figure3)?;
    let mut table = Table::new(["t_us", "gamma_mhz", "total_e", "total_g", "gain"]);
    for (pair, &nu) in pairs.iter().zip(&cfg.gamma_sweep_mhz) {
        let gain = pair.gain();
        for (k, &t) in pair.excited.times.iter().enumerate() {
            table.push(vec![
                t.into(),
                nu.into(),
                pair.excited.total_n[k].into(),
                pair.ground.total_n[k].into(),
                gain[k].into(),
            ]);
        }
    }
    Ok((table, pairs))
}

/// One summary row per γ.
pub fn sweep(cfg: &RunConfig) -> Result<(Table, Vec<BranchPair>), RunError> {
    let pairs = sweep_pairs(cfg, Experiment::Sweep)?;
    let mut table = Table::new([
        "gamma_mhz",
        "max_gain",
        "t_max_gain_us",
        "final_gain",
        "final_total_e",
        "final_total_g",
        "max_n_e",
        "max_n_g",
    ]);
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (pair, &nu) in pairs.iter().zip(&cfg.gamma_sweep_mhz) {
        let gain = pair.gain();
        let (k_max, g_max) = gain
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, g)| if g > best.1 { (k, g) } else { best });
        table.push(vec![
            nu.into(),
            g_max.into(),
            pair.excited.times[k_max].into(),
            (*gain.last().unwrap()).into(),
            (*pair.excited.total_n.last().unwrap()).into(),
            (*pair.ground.total_n.last().unwrap()).into(),
            peak(&pair.excited.collective_n).into(),
            peak(&pair.ground.collective_n).into(),
        ]);
    }
    Ok((table, pairs))
}

/// Closed-form dressed level of one excitation manifold next to the
/// numerical eigenvalues of the truncated H_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub level: analytic::JcLevel,
    pub numeric_plus: f64,
    pub numeric_minus: f64,
    /// Worst eigenvalue mismatch over the doublet's half-splitting.
    pub rel_gap: f64,
}

/// Manifolds n = 0 … cutoff−2, the ones the truncation keeps intact.
pub fn spectrum_rows(p: &SystemParams, cutoff: usize) -> crate::Result<Vec<SpectrumRow>> {
    let eig = eig_hermitian(&build_hc(p, cutoff)?)?;
    let mut used = vec![false; eig.values.len()];
    let mut nearest = |target: f64| {
        let k = (0..eig.values.len())
            .filter(|&k| !used[k])
            .min_by(|&a, &b| {
                (eig.values[a] - target)
                    .abs()
                    .total_cmp(&(eig.values[b] - target).abs())
            })
            .expect("enough eigenvalues");
        used[k] = true;
        eig.values[k]
    };
    Ok((0..cutoff - 1)
        .map(|n| {
            let level = analytic::jc_spectrum(n, p);
            let numeric_plus = nearest(level.omega_plus);
            let numeric_minus = nearest(level.omega_minus);
            let half_split = (level.omega_plus - level.omega_minus) / 2.0;
            let rel_gap = (numeric_plus - level.omega_plus)
                .abs()
                .max((numeric_minus - level.omega_minus).abs())
                / half_split;
            SpectrumRow {
                level,
                numeric_plus,
                numeric_minus,
                rel_gap,
            }
        })
        .collect())
}

pub fn spectrum(cfg: &RunConfig) -> Result<(Table, Vec<SpectrumRow>), RunError> {
    let p = cfg.params.to_params()?;
    let rows = spectrum_rows(&p, cfg.fock_cutoff)?;
    let mut table = Table::new([
        "n",
        "omega_plus_mhz",
        "omega_minus_mhz",
        "phi_n",
        "numeric_plus_mhz",
        "numeric_minus_mhz",
        "rel_gap",
    ]);
    for r in &rows {
        table.push(vec![
            r.level.n.into(),
            angular_to_mhz(r.level.omega_plus).into(),
            angular_to_mhz(r.level.omega_minus).into(),
            r.level.phi_n.into(),
            angular_to_mhz(r.numeric_plus).into(),
            angular_to_mhz(r.numeric_minus).into(),
            r.rel_gap.into(),
        ]);
    }
    Ok((table, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub gamma_mhz: f64,
    pub t_start_us: f64,
    pub t_end_us: f64,
    pub n_steps: usize,
    pub record_every: usize,
    pub dt_us: f64,
}

/// Contents of the `<out>.meta.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub experiment: Experiment,
    pub code_version: &'static str,
    /// Resolved configuration; running it again reproduces the output.
    pub config: RunConfig,
    pub fock_cutoff: usize,
    pub grids: Vec<GridMeta>,
    pub checks: Vec<ConvergenceCheck>,
    pub units: &'static str,
}

impl Meta {
    fn new(cfg: &RunConfig, experiment: Experiment) -> Self {
        let mut config = cfg.clone();
        config.experiment = Some(experiment);
        config.grid.t_end_us = Some(cfg.t_end(experiment));
        Self {
            experiment,
            code_version: CODE_VERSION,
            config,
            fock_cutoff: cfg.fock_cutoff,
            grids: Vec::new(),
            checks: Vec::new(),
            units: "time in us; frequencies in MHz (nu = omega / 2pi); excitation numbers dimensionless",
        }
    }

    fn record(&mut self, pairs: &[BranchPair]) {
        for pair in pairs {
            let g = pair.grid;
            self.grids.push(GridMeta {
                gamma_mhz: angular_to_mhz(pair.params.gamma),
                t_start_us: g.t_start,
                t_end_us: g.t_end,
                n_steps: g.n_steps,
                record_every: g.record_every,
                dt_us: g.dt(),
            });
            self.checks.extend(pair.checks.iter().cloned());
        }
    }
}

/// Result of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Table(Table),
    Report(ValidationReport),
}

/// Runs `experiment` and returns its output with the sidecar contents.
pub fn run_experiment(cfg: &RunConfig, experiment: Experiment) -> Result<(RunOutput, Meta), RunError> {
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(RunError::Config(format!(
                "config names experiment '{e}' but '{experiment}' was requested"
            )));
        }
    }
    let mut meta = Meta::new(cfg, experiment);
    let out = match experiment {
        Experiment::Figure2 => {
            let (t, pair) = figure2(cfg)?;
            meta.record(std::slice::from_ref(&pair));
            RunOutput::Table(t)
        }
        Experiment::Figure3 => {
            let (t, pairs) = figure3(cfg)?;
            meta.record(&pairs);
            RunOutput::Table(t)
        }
        Experiment::Sweep => {
            let (t, pairs) = sweep(cfg)?;
            meta.record(&pairs);
            RunOutput::Table(t)
        }
        Experiment::Spectrum => RunOutput::Table(spectrum(cfg)?.0),
        Experiment::Validate => RunOutput::Report(run_validate(cfg)?),
    };
    Ok((out, meta))
}

/// Writes the CSV (or JSON report) and its sidecar.
pub fn write_outputs(out: &RunOutput, meta: &Meta, path: &Path) -> Result<(), RunError> {
    match out {
        RunOutput::Table(t) => t.write(path)?,
        RunOutput::Report(r) => write_json(path, r)?,
    }
    write_json(&meta_path(path), meta)
}

/// Worker pool sized by `SPINAMP_THREADS`, defaulting to the available cores.
pub fn thread_pool() -> Result<rayon::ThreadPool, RunError> {
    let threads = match std::env::var("SPINAMP_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(RunError::Config(format!(
                    "SPINAMP_THREADS must be a positive integer, got '{v}'"
                )))
            }
        },
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Check(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(overrides: &[&str]) -> RunConfig {
        let mut o: Vec<String> = vec![
            "fock_cutoff=6".into(),
            "grid.t_end_us=0.02".into(),
            "grid.records=40".into(),
        ];
        o.extend(overrides.iter().map(|s| s.to_string()));
        RunConfig::from_overrides(&o).unwrap()
    }

    #[test]
    fn deviation_is_relative_to_curve_peak() {
        assert_eq!(curve_deviation(&[1.0, 2.5], &[1.0, 2.0]), 0.25);
        assert_eq!(curve_deviation(&[0.0, 1e-13], &[0.0, 0.0]), 1e-13);
    }

    #[test]
    fn figure2_table_has_expected_columns() {
        let (t, pair) = figure2(&quick(&[])).unwrap();
        assert_eq!(t.header, ["t_us", "n_num_e", "n_ana_e", "n_num_g", "n_ana_g"]);
        assert_eq!(t.rows.len(), 41);
        assert_eq!(t.column("t_us").unwrap()[0], 0.0);
        assert!(pair.checks.iter().all(|c| c.passed), "{:?}", pair.checks);
    }

    #[test]
    fn gain_starts_at_zero_and_favors_excited() {
        let (t, _) = figure3(&quick(&["gamma_sweep_mhz=[10, 25]"])).unwrap();
        let gain = t.column("gain").unwrap();
        let t_us = t.column("t_us").unwrap();
        for (k, g) in gain.iter().enumerate() {
            if t_us[k] == 0.0 {
                assert_eq!(*g, 0.0);
            }
            assert!(*g >= -1e-6);
        }
    }

    #[test]
    fn coarse_cutoff_fails_with_suggestion() {
        let err = figure2(&quick(&["fock_cutoff=3", "grid.t_end_us=0.1"])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cutoff_convergence") && msg.contains("fock_cutoff="), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn spectrum_matches_diagonalization() {
        let (t, rows) = spectrum(&quick(&["fock_cutoff=12"])).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows.iter().all(|r| r.rel_gap < 1e-9));
        let n = t.column("n").unwrap();
        assert!(n[0] == 0.0 && n.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn resonant_spectrum_has_quarter_turn_mixing() {
        let cfg = quick(&["params.omega_t_mhz=0", "params.drive={\"explicit_mhz\": 0}"]);
        let (t, _) = spectrum(&cfg).unwrap();
        assert!(t
            .column("phi_n")
            .unwrap()
            .iter()
            .all(|phi| (phi - std::f64::consts::FRAC_PI_2).abs() < 1e-15));
    }

    #[test]
    fn experiment_mismatch_is_a_config_error() {
        let cfg = quick(&["experiment=figure3"]);
        let err = run_experiment(&cfg, Experiment::Figure2).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
