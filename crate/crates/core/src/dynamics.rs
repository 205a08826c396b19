//! Lindblad master-equation integration and excitation accounting.
//!
//! The generator is dρ/dt = −i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}),
//! stepped with classical RK4 on a fixed grid. Operators are compiled into
//! nonzero-entry lists before stepping; the models here are banded, so each
//! right-hand side costs O(nnz · dim) rather than O(dim³).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::hilbert::{trace_product, DensityMatrix, Operator, SpaceDims, StateDiagnostics};
use crate::model::{collective_number, qubit_excited};
use crate::rk4::{required_steps, Rk4, STABILITY_GUARD};
use crate::{Error, Result, C64};

/// Abort threshold on the smallest eigenvalue of ρ(t).
pub const POSITIVITY_TOL: f64 = -1e-6;
/// Abort threshold on |Tr ρ(t) − 1|.
pub const TRACE_TOL: f64 = 1e-7;

/// Fixed integration grid with a coarser recording cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
    /// Record every k-th integration step (k must divide `n_steps`).
    pub record_every: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize, record_every: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps == 0 || record_every == 0 || !n_steps.is_multiple_of(record_every) {
            return Err(Error::InvalidParameter(format!(
                "record_every ({record_every}) must be positive and divide n_steps ({n_steps})"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
            record_every,
        })
    }

    /// `records` recording intervals, each split into `substeps` RK4 steps.
    pub fn with_records(t_start: f64, t_end: f64, records: usize, substeps: usize) -> Result<Self> {
        Self::new(t_start, t_end, records * substeps, substeps)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn n_records(&self) -> usize {
        self.n_steps / self.record_every + 1
    }

    pub fn record_times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_records())
            .map(|k| self.t_start + (k * self.record_every) as f64 * dt)
            .collect()
    }

    /// Fails with [`Error::StepGuard`] when dt · ω_max exceeds the guard.
    pub fn check_guard(&self, omega_max: f64) -> Result<()> {
        let product = self.dt() * omega_max;
        if product > STABILITY_GUARD {
            return Err(Error::StepGuard {
                dt: self.dt(),
                omega_max,
                product,
                required_steps: required_steps(omega_max, self.duration()),
            });
        }
        Ok(())
    }

    /// Same span and recording times with every integration step split in two.
    pub fn halved(&self) -> Self {
        Self {
            n_steps: self.n_steps * 2,
            record_every: self.record_every * 2,
            ..*self
        }
    }
}

/// Nonzero entries of an operator, applied to column-major dense matrices.
#[derive(Debug, Clone)]
struct Stencil {
    entries: Vec<(usize, usize, C64)>,
}

impl Stencil {
    fn compile(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// out = S · x
    fn apply(&self, n: usize, x: &[C64], out: &mut [C64]) {
        assert!(x.len() == n * n && out.len() == n * n);
        out.fill(C64::new(0.0, 0.0));
        for (xc, oc) in x.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for &(i, j, v) in &self.entries {
                // SAFETY: compile() only stores indices below the operator
                // dimension, which equals n and each column's length.
                unsafe { *oc.get_unchecked_mut(i) += v * *xc.get_unchecked(j) };
            }
        }
    }

    /// out += S · x†
    fn apply_adjoint_add(&self, n: usize, x: &[C64], out: &mut [C64]) {
        assert!(x.len() == n * n && out.len() == n * n);
        for &(i, j, v) in &self.entries {
            let xrow = &x[j * n..(j + 1) * n];
            for (c, xv) in xrow.iter().enumerate() {
                // SAFETY: c < n and i < n, so c * n + i < n * n.
                unsafe { *out.get_unchecked_mut(c * n + i) += v * xv.conj() };
            }
        }
    }
}

/// Compiled Lindblad generator.
struct Lindbladian {
    n: usize,
    h_eff: Stencil,
    jumps: Vec<Stencil>,
    y: Vec<C64>,
    x: Vec<C64>,
}

impl Lindbladian {
    fn new(h_eff: &DMatrix<C64>, collapse: &[Operator]) -> Self {
        let n = h_eff.nrows();
        Self {
            n,
            h_eff: Stencil::compile(h_eff),
            jumps: collapse.iter().map(|l| Stencil::compile(l.matrix())).collect(),
            y: vec![C64::new(0.0, 0.0); n * n],
            x: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// With H_eff = H − (i/2)Σ L†L and Hermitian ρ,
    /// dρ/dt = −i(H_eff ρ − (H_eff ρ)†) + Σ L (Lρ)†.
    fn rhs(&mut self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        self.h_eff.apply(n, rho, &mut self.y);
        let minus_i = C64::new(0.0, -1.0);
        for c in 0..n {
            for i in c..n {
                let upper = self.y[c * n + i];
                let lower = self.y[i * n + c];
                let v = minus_i * (upper - lower.conj());
                out[c * n + i] = v;
                out[i * n + c] = v.conj();
            }
        }
        for l in &self.jumps {
            l.apply(n, rho, &mut self.x);
            l.apply_adjoint_add(n, &self.x, out);
        }
    }
}

/// H_eff = H − (i/2) Σ L†L.
fn effective_hamiltonian(h: &Operator, collapse: &[Operator]) -> DMatrix<C64> {
    let mut h_eff = h.matrix().clone();
    for l in collapse {
        h_eff -= (l.matrix().adjoint() * l.matrix()) * C64::new(0.0, 0.5);
    }
    h_eff
}

/// Row-sum bound on the fastest rate of the generator, used by the step guard.
pub fn omega_max(h: &Operator, collapse: &[Operator]) -> f64 {
    effective_hamiltonian(h, collapse)
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Raw output of [`evolve`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    /// `expectations[k][r]` is Re Tr(ρ(t_r) O_k).
    pub expectations: Vec<Vec<f64>>,
    pub diagnostics: Vec<StateDiagnostics>,
    pub final_state: DensityMatrix,
    pub dt: f64,
    pub omega_max: f64,
}

/// Integrates the master equation from `rho0` over `grid`, recording the
/// expectation of every observable at each recording point.
pub fn evolve(
    h: &Operator,
    collapse: &[Operator],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Operator],
) -> Result<Evolution> {
    let dims: &SpaceDims = rho0.dims();
    for op in std::iter::once(h).chain(collapse).chain(observables) {
        if op.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims.factors().to_vec(),
                found: op.dims().factors().to_vec(),
            });
        }
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermiticity_error()));
    }

    let w_max = omega_max(h, collapse);
    grid.check_guard(w_max)?;

    let n = dims.total();
    let mut generator = Lindbladian::new(&effective_hamiltonian(h, collapse), collapse);
    let mut rk = Rk4::new(n * n);
    let mut state: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let dt = grid.dt();

    let times = grid.record_times();
    let mut expectations = vec![Vec::with_capacity(times.len()); observables.len()];
    let mut diagnostics = Vec::with_capacity(times.len());

    let mut record = |state: &[C64], t: f64| -> Result<()> {
        let m = DMatrix::from_column_slice(n, n, state);
        for (k, obs) in observables.iter().enumerate() {
            expectations[k].push(trace_product(&m, obs.matrix()).re);
        }
        let d = DensityMatrix::from_raw(dims.clone(), m).diagnostics();
        if d.min_eig < POSITIVITY_TOL {
            return Err(Error::PositivityViolation {
                t,
                min_eig: d.min_eig,
            });
        }
        if d.trace_err > TRACE_TOL {
            return Err(Error::TraceDrift {
                t,
                trace_err: d.trace_err,
            });
        }
        diagnostics.push(d);
        Ok(())
    };

    record(&state, times[0])?;
    let mut rhs = |y: &[C64], out: &mut [C64]| generator.rhs(y, out);
    for (r, &t) in times.iter().enumerate().skip(1) {
        for _ in 0..grid.record_every {
            rk.step(&mut rhs, &mut state, dt);
        }
        debug_assert!((t - (grid.t_start + (r * grid.record_every) as f64 * dt)).abs() < 1e-12);
        record(&state, t)?;
    }

    Ok(Evolution {
        times,
        expectations,
        diagnostics,
        final_state: DensityMatrix::from_raw(dims.clone(), DMatrix::from_column_slice(n, n, &state)),
        dt,
        omega_max: w_max,
    })
}

/// Expectation-value record of a reduced-model run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// ⟨Â†Â⟩
    pub collective_n: Vec<f64>,
    /// ⟨σ⁺σ⁻⟩
    pub qubit_excited: Vec<f64>,
    /// γ∫₀ᵗ⟨Â†Â⟩dt′: quanta handed to the subradiant modes.
    pub subradiant_n: Vec<f64>,
    /// collective_n + subradiant_n = Σ_j⟨a_j†a_j⟩
    pub total_n: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub hermiticity_err: Vec<f64>,
    pub min_eig: Vec<f64>,
}

impl Trajectory {
    /// Largest |Tr ρ − 1| over the run.
    pub fn max_trace_err(&self) -> f64 {
        self.trace_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_hermiticity_err(&self) -> f64 {
        self.hermiticity_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evolves a reduced-model state and assembles its [`Trajectory`].
///
/// `gamma` is the rate that feeds the subradiant reservoir (the inhomogeneous
/// width), which need not equal the total collapse rate when Γ > 0.
pub fn reduced_trajectory(
    h: &Operator,
    collapse: &[Operator],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    gamma: f64,
) -> Result<Trajectory> {
    let cutoff = *rho0
        .dims()
        .factors()
        .get(1)
        .filter(|_| rho0.dims().factors().len() == 2)
        .ok_or_else(|| Error::InvalidParameter("reduced model expects qubit ⊗ Fock".into()))?;
    let obs = [collective_number(cutoff)?, qubit_excited(cutoff)?];
    let ev = evolve(h, collapse, rho0, grid, &obs)?;
    let mut ex = ev.expectations.into_iter();
    let collective_n = ex.next().expect("two observables");
    let qubit = ex.next().expect("two observables");
    let subradiant_n = subradiant_excitations(&collective_n, gamma, &ev.times)?;
    let total_n = collective_n
        .iter()
        .zip(&subradiant_n)
        .map(|(a, b)| a + b)
        .collect();
    Ok(Trajectory {
        times: ev.times,
        collective_n,
        qubit_excited: qubit,
        subradiant_n,
        total_n,
        trace_err: ev.diagnostics.iter().map(|d| d.trace_err).collect(),
        hermiticity_err: ev.diagnostics.iter().map(|d| d.hermiticity_err).collect(),
        min_eig: ev.diagnostics.iter().map(|d| d.min_eig).collect(),
    })
}

/// Cumulative trapezoidal integral, starting at zero.
pub fn cumulative_trapezoid(series: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    if series.len() != times.len() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for k in 0..series.len() {
        if k > 0 {
            acc += 0.5 * (series[k] + series[k - 1]) * (times[k] - times[k - 1]);
        }
        out.push(acc);
    }
    Ok(out)
}

/// γ∫₀ᵗ⟨Â†Â⟩dt′ by the trapezoidal rule on the recording grid.
pub fn subradiant_excitations(collective_n: &[f64], gamma: f64, times: &[f64]) -> Result<Vec<f64>> {
    Ok(cumulative_trapezoid(collective_n, times)?
        .into_iter()
        .map(|v| gamma * v)
        .collect())
}

/// ⟨Â†Â⟩(t) + γ∫₀ᵗ⟨Â†Â⟩dt′: the excitation number held by the whole ensemble.
pub fn total_excitations(collective_n: &[f64], gamma: f64, times: &[f64]) -> Result<Vec<f64>> {
    Ok(subradiant_excitations(collective_n, gamma, times)?
        .into_iter()
        .zip(collective_n)
        .map(|(s, c)| s + c)
        .collect())
}

/// Ensemble excitation difference between the |e⟩ and |g⟩ branches.
pub fn readout_gain(traj_e: &Trajectory, traj_g: &Trajectory) -> Result<Vec<f64>> {
    if traj_e.times != traj_g.times {
        return Err(Error::GridMismatch);
    }
    Ok(traj_e
        .total_n
        .iter()
        .zip(&traj_g.total_n)
        .map(|(e, g)| e - g)
        .collect())
}
