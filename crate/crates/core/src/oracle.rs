//! Brute-force many-spin models that validate the reduced description.
//!
//! Two solvers live here:
//!
//! * [`single_excitation_evolve`] integrates the undriven N-spin model in its
//!   (N+1)-dimensional single-excitation subspace, so N can be in the
//!   thousands. Sampling spin frequencies from the Lorentzian and comparing
//!   against the reduced model with collapse √γ Â tests the claim that the
//!   inhomogeneous spread acts as a decay of the collective mode.
//! * [`full_model_evolve`] keeps every bosonized spin as its own truncated
//!   mode, including the drive, for a handful of spins. It resolves the
//!   bright/subradiant split directly.
//!
//! Finite samples only reproduce the Lorentzian continuum on average; the
//! trace-out comparison therefore averages over seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, evolve, TimeGrid};
use crate::hilbert::{
    embed, ladder, number, qubit_projector, sigma_minus, sigma_plus, sigma_x, sigma_z,
    DensityMatrix, Operator, QubitState, SpaceDims, StateDiagnostics,
};
use crate::model::{build_hc, collapse_ops, SystemParams};
use crate::rk4::{required_steps, Rk4};
use crate::{Error, Result, C64};

/// Default tail cut, in units of γ, applied when sampling spin frequencies.
pub const DEFAULT_TRUNCATION_K: f64 = 50.0;
/// Smallest tail cut accepted by the sampler.
pub const MIN_TRUNCATION_K: f64 = 10.0;
/// Step count of oracle runs as a multiple of the guard minimum. RK4 loses
/// norm at sixth order in dt·ω; this keeps the loss near 1e-8.
pub const ORACLE_STEP_REFINEMENT: usize = 8;
/// Largest Hilbert-space dimension [`full_model_evolve`] will build.
pub const FULL_MODEL_MAX_DIM: usize = 162;

/// Distribution of the individual couplings g_j. Either way the couplings are
/// normalized so that √(Σ g_j²) equals the target G.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingProfile {
    #[default]
    Uniform,
    LogNormal {
        sigma: f64,
    },
}

/// Spin frequencies and couplings of one ensemble realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSample {
    /// ω_j in rad/µs.
    pub freqs: Vec<f64>,
    /// g_j in rad/µs.
    pub couplings: Vec<f64>,
    pub seed: Option<u64>,
    pub truncation_k: Option<f64>,
}

impl EnsembleSample {
    /// Sample with hand-picked frequencies and couplings.
    pub fn from_parts(freqs: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let s = Self {
            freqs,
            couplings,
            seed: None,
            truncation_k: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// N spins at the given frequencies sharing coupling G/√N.
    pub fn uniform(freqs: Vec<f64>, g_collective: f64) -> Result<Self> {
        let g = g_collective / (freqs.len() as f64).sqrt();
        let n = freqs.len();
        Self::from_parts(freqs, vec![g; n])
    }

    fn validate(&self) -> Result<()> {
        if self.freqs.is_empty() || self.freqs.len() != self.couplings.len() {
            return Err(Error::InvalidParameter(format!(
                "ensemble needs equal, nonzero numbers of frequencies ({}) and couplings ({})",
                self.freqs.len(),
                self.couplings.len()
            )));
        }
        if !(self.collective_coupling() > 0.0) {
            return Err(Error::InvalidParameter(
                "collective coupling must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// G = √(Σ g_j²).
    pub fn collective_coupling(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Inverse CDF of the Lorentzian: ω̄ + (γ/2)·tan(π(u − ½)).
pub fn lorentzian_quantile(u: f64, omega_bar: f64, gamma: f64) -> f64 {
    omega_bar + gamma / 2.0 * (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Draws Lorentzian frequencies by inverse CDF from a stream of uniforms,
/// rejecting any draw farther than `truncation_k · γ` from ω̄.
pub fn frequencies_from_uniforms<I>(
    n: usize,
    omega_bar: f64,
    gamma: f64,
    truncation_k: f64,
    uniforms: I,
) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = f64>,
{
    check_sampling(n, gamma, truncation_k)?;
    let limit = truncation_k * gamma;
    let out: Vec<f64> = uniforms
        .into_iter()
        .map(|u| lorentzian_quantile(u, omega_bar, gamma))
        .filter(|w| (w - omega_bar).abs() <= limit)
        .take(n)
        .collect();
    if out.len() < n {
        return Err(Error::InvalidParameter(format!(
            "uniform stream exhausted after {} accepted samples",
            out.len()
        )));
    }
    Ok(out)
}

fn check_sampling(n: usize, gamma: f64, truncation_k: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one spin".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling needs a positive width, got {gamma}"
        )));
    }
    if !(truncation_k >= MIN_TRUNCATION_K) {
        return Err(Error::InvalidParameter(format!(
            "truncation K must be >= {MIN_TRUNCATION_K}, got {truncation_k}"
        )));
    }
    Ok(())
}

/// Seeded generator of [`EnsembleSample`]s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSampler {
    pub n: usize,
    pub omega_bar: f64,
    pub gamma: f64,
    pub g_target: f64,
    pub truncation_k: f64,
    pub couplings: CouplingProfile,
}

impl EnsembleSampler {
    pub fn new(n: usize, omega_bar: f64, gamma: f64, g_target: f64) -> Self {
        Self {
            n,
            omega_bar,
            gamma,
            g_target,
            truncation_k: DEFAULT_TRUNCATION_K,
            couplings: CouplingProfile::Uniform,
        }
    }

    pub fn truncation(mut self, k: f64) -> Self {
        self.truncation_k = k;
        self
    }

    pub fn couplings(mut self, profile: CouplingProfile) -> Self {
        self.couplings = profile;
        self
    }

    pub fn sample(&self, seed: u64) -> Result<EnsembleSample> {
        check_sampling(self.n, self.gamma, self.truncation_k)?;
        if !(self.g_target > 0.0) {
            return Err(Error::InvalidParameter("target G must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stream = std::iter::repeat_with(|| rng.random::<f64>());
        let freqs = frequencies_from_uniforms(
            self.n,
            self.omega_bar,
            self.gamma,
            self.truncation_k,
            stream,
        )?;
        let raw: Vec<f64> = match self.couplings {
            CouplingProfile::Uniform => vec![1.0; self.n],
            CouplingProfile::LogNormal { sigma } => {
                let dist = LogNormal::new(0.0, sigma)
                    .map_err(|e| Error::InvalidParameter(format!("log-normal spread: {e}")))?;
                (0..self.n).map(|_| dist.sample(&mut rng)).collect()
            }
        };
        let norm = raw.iter().map(|g| g * g).sum::<f64>().sqrt();
        let couplings = raw.iter().map(|g| g * self.g_target / norm).collect();
        let s = EnsembleSample {
            freqs,
            couplings,
            seed: Some(seed),
            truncation_k: Some(self.truncation_k),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Lorentzian ensemble with uniform couplings G/√n.
pub fn sample_frequencies(
    n: usize,
    omega_bar: f64,
    gamma: f64,
    g_target: f64,
    seed: u64,
    truncation_k: f64,
) -> Result<EnsembleSample> {
    EnsembleSampler::new(n, omega_bar, gamma, g_target)
        .truncation(truncation_k)
        .sample(seed)
}

/// Amplitudes of the single-excitation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationRecord {
    pub times: Vec<f64>,
    /// c_e(t)
    pub qubit_amplitude: Vec<C64>,
    /// A(t) = (1/G) Σ_j g_j c_j(t)
    pub collective_amplitude: Vec<C64>,
    /// Σ|c|²
    pub norm: Vec<f64>,
}

impl SingleExcitationRecord {
    pub fn qubit_population(&self) -> Vec<f64> {
        self.qubit_amplitude.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn collective_population(&self) -> Vec<f64> {
        self.collective_amplitude.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Spectral-norm bound on the single-excitation Hamiltonian.
///
/// The matrix is diagonal plus a rank-two star coupling of norm G, so
/// max |diagonal| + G bounds its spectrum.
pub fn single_excitation_omega_max(sample: &EnsembleSample, p: &SystemParams) -> f64 {
    let diag = sample
        .freqs
        .iter()
        .map(|w| C64::new(w - p.omega_d, -p.gamma_s / 2.0).norm())
        .fold(p.qubit_detuning().abs(), f64::max);
    diag + sample.collective_coupling()
}

/// Integrates ċ_e = −i(ω_T−ω_d)c_e − iΣ_j g_j c_j,
/// ċ_j = −i(ω_j − ω_d − iΓ/2)c_j − i g_j c_e from |e, vac⟩.
///
/// Uses ω_T, ω_d and Γ from `p`; the drive is ignored.
pub fn single_excitation_evolve(
    sample: &EnsembleSample,
    p: &SystemParams,
    grid: &TimeGrid,
) -> Result<SingleExcitationRecord> {
    sample.validate()?;
    grid.check_guard(single_excitation_omega_max(sample, p))?;

    let n = sample.len();
    let eps_e = p.qubit_detuning();
    let eps: Vec<C64> = sample
        .freqs
        .iter()
        .map(|w| C64::new(w - p.omega_d, -p.gamma_s / 2.0))
        .collect();
    let g = &sample.couplings;
    let g_total = sample.collective_coupling();
    let minus_i = C64::new(0.0, -1.0);

    let mut rhs = |y: &[C64], out: &mut [C64]| {
        let ce = y[0];
        let mut s = C64::new(0.0, 0.0);
        for j in 0..n {
            s += g[j] * y[j + 1];
            out[j + 1] = minus_i * (eps[j] * y[j + 1] + g[j] * ce);
        }
        out[0] = minus_i * (eps_e * ce + s);
    };

    let mut state = vec![C64::new(0.0, 0.0); n + 1];
    state[0] = C64::new(1.0, 0.0);
    let mut rk = Rk4::new(n + 1);
    let times = grid.record_times();
    let mut rec = SingleExcitationRecord {
        times: times.clone(),
        qubit_amplitude: Vec::with_capacity(times.len()),
        collective_amplitude: Vec::with_capacity(times.len()),
        norm: Vec::with_capacity(times.len()),
    };
    let push = |y: &[C64], rec: &mut SingleExcitationRecord| {
        let a: C64 = g.iter().zip(&y[1..]).map(|(gj, cj)| gj * cj).sum();
        rec.qubit_amplitude.push(y[0]);
        rec.collective_amplitude.push(a / g_total);
        rec.norm.push(y.iter().map(|c| c.norm_sqr()).sum());
    };

    push(&state, &mut rec);
    let dt = grid.dt();
    for _ in 1..times.len() {
        for _ in 0..grid.record_every {
            rk.step(&mut rhs, &mut state, dt);
        }
        push(&state, &mut rec);
    }
    Ok(rec)
}

/// Observables of a [`full_model_evolve`] run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullModelRecord {
    pub times: Vec<f64>,
    /// ⟨σ⁺σ⁻⟩
    pub qubit_excited: Vec<f64>,
    /// `mode_n[j][r]` = ⟨a_j†a_j⟩ at record r.
    pub mode_n: Vec<Vec<f64>>,
    /// Σ_j⟨a_j†a_j⟩
    pub total_n: Vec<f64>,
    /// ⟨Â†Â⟩ with Â = (1/G)Σ g_j a_j
    pub collective_n: Vec<f64>,
    /// total_n − collective_n
    pub subradiant_n: Vec<f64>,
    pub diagnostics: Vec<StateDiagnostics>,
}

/// Operators of the full bosonized model on qubit ⊗ mode_1 ⊗ … ⊗ mode_N.
pub struct FullModel {
    pub dims: SpaceDims,
    pub hamiltonian: Operator,
    pub collective_lowering: Operator,
    pub mode_lowering: Vec<Operator>,
    pub qubit_excited: Operator,
}

impl FullModel {
    /// H = ((ω_T−ω_d)/2)σ_z + Σ_j g_j(σ⁻a_j† + σ⁺a_j) + Σ_j(ω_j−ω_d)a_j†a_j
    ///     + (λ_d/2)(σ⁺ + σ⁻).
    pub fn build(sample: &EnsembleSample, cutoff: usize, p: &SystemParams) -> Result<Self> {
        sample.validate()?;
        if cutoff < 2 {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        let mut factors = vec![2];
        factors.extend(std::iter::repeat_n(cutoff, sample.len()));
        let dims = SpaceDims::new(factors)?;
        if dims.total() > FULL_MODEL_MAX_DIM {
            return Err(Error::SpaceTooLarge {
                dim: dims.total(),
                cap: FULL_MODEL_MAX_DIM,
            });
        }
        let a = ladder(cutoff)?;
        let mode_lowering: Vec<Operator> = (0..sample.len())
            .map(|j| embed(&a, j + 1, &dims))
            .collect::<Result<_>>()?;
        let sm = embed(&sigma_minus(), 0, &dims)?;
        let sp = embed(&sigma_plus(), 0, &dims)?;

        let mut h = embed(&sigma_z(), 0, &dims)? * (p.qubit_detuning() / 2.0);
        h = &h + &(embed(&sigma_x(), 0, &dims)? * (p.lambda_d / 2.0));
        for (j, aj) in mode_lowering.iter().enumerate() {
            let gj = sample.couplings[j];
            let hop = &(&sm * &aj.adjoint()) + &(&sp * aj);
            h = &h + &(hop * gj);
            let nj = embed(&number(cutoff)?, j + 1, &dims)?;
            h = &h + &(nj * (sample.freqs[j] - p.omega_d));
        }
        let hamiltonian = h.into_hermitian()?;

        let g_total = sample.collective_coupling();
        let mut collective = Operator::zeros(dims.clone());
        for (j, aj) in mode_lowering.iter().enumerate() {
            collective = &collective + &(aj * (sample.couplings[j] / g_total));
        }
        let qubit_excited = embed(&qubit_projector(QubitState::Excited), 0, &dims)?;
        Ok(Self {
            dims,
            hamiltonian,
            collective_lowering: collective,
            mode_lowering,
            qubit_excited,
        })
    }
}

/// Lindblad evolution of the full model from |qubit, vac⟩; each spin relaxes
/// at Γ (`p.gamma_s`). The inhomogeneous width enters only via the sampled
/// frequencies, so `p.gamma` is not used.
pub fn full_model_evolve(
    sample: &EnsembleSample,
    per_mode_cutoff: usize,
    p: &SystemParams,
    grid: &TimeGrid,
    initial: QubitState,
) -> Result<FullModelRecord> {
    let model = FullModel::build(sample, per_mode_cutoff, p)?;
    let collapse: Vec<Operator> = if p.gamma_s > 0.0 {
        model
            .mode_lowering
            .iter()
            .map(|a| a * p.gamma_s.sqrt())
            .collect()
    } else {
        Vec::new()
    };
    let mut observables = vec![model.qubit_excited.clone()];
    for a in &model.mode_lowering {
        observables.push(&a.adjoint() * a);
    }
    let big_a = &model.collective_lowering;
    observables.push(&big_a.adjoint() * big_a);

    let mut labels = vec![0; model.dims.factors().len()];
    labels[0] = initial.index();
    let rho0 = DensityMatrix::basis(model.dims.clone(), &labels)?;
    let ev = evolve(&model.hamiltonian, &collapse, &rho0, grid, &observables)?;

    let mut ex = ev.expectations.into_iter();
    let qubit_excited = ex.next().expect("qubit observable");
    let mode_n: Vec<Vec<f64>> = ex.by_ref().take(sample.len()).collect();
    let collective_n = ex.next().expect("collective observable");
    let total_n: Vec<f64> = (0..ev.times.len())
        .map(|r| mode_n.iter().map(|m| m[r]).sum())
        .collect();
    let subradiant_n = total_n
        .iter()
        .zip(&collective_n)
        .map(|(t, c)| t - c)
        .collect();
    Ok(FullModelRecord {
        times: ev.times,
        qubit_excited,
        mode_n,
        total_n,
        collective_n,
        subradiant_n,
        diagnostics: ev.diagnostics,
    })
}

/// Settings of the large-N trace-out comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOutSettings {
    pub n_spins: usize,
    pub seeds: Vec<u64>,
    pub truncation_k: f64,
    /// Comparison window is t ∈ [0, gamma_t_max / γ].
    pub gamma_t_max: f64,
    pub records: usize,
    /// Only points where the reduced ⟨σ⁺σ⁻⟩ exceeds this are compared.
    pub population_floor: f64,
}

impl Default for TraceOutSettings {
    fn default() -> Self {
        Self {
            n_spins: 2000,
            seeds: vec![0, 1, 2],
            truncation_k: DEFAULT_TRUNCATION_K,
            gamma_t_max: 3.0,
            records: 600,
            population_floor: 0.1,
        }
    }
}

/// Outcome of [`trace_out_comparison`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceOutReport {
    pub times: Vec<f64>,
    /// Reduced-model ⟨σ⁺σ⁻⟩(t).
    pub reduced_qubit: Vec<f64>,
    /// Reduced-model √⟨Â†Â⟩(t).
    pub reduced_collective: Vec<f64>,
    /// Seed-averaged |c_e(t)|².
    pub mean_qubit: Vec<f64>,
    /// Seed-averaged |A(t)|.
    pub mean_collective: Vec<f64>,
    /// max_t |mean |c_e|² − reduced| / reduced over points above the floor.
    pub qubit_rel_dev: f64,
    /// Same statistic for every seed on its own.
    pub per_seed_qubit_rel_dev: Vec<f64>,
    /// max_t |mean |A| − reduced| / max_t reduced.
    pub collective_rel_dev: f64,
    pub max_norm_drift: f64,
}

/// Compares the seed-averaged N-spin single-excitation dynamics from |e, vac⟩
/// with the reduced model (H_c, collapse √γÂ, initial |e,0⟩).
pub fn trace_out_comparison(p: &SystemParams, settings: &TraceOutSettings) -> Result<TraceOutReport> {
    if settings.seeds.is_empty() {
        return Err(Error::InvalidParameter("trace-out needs at least one seed".into()));
    }
    if !(p.gamma > 0.0) {
        return Err(Error::InvalidParameter("trace-out needs γ > 0".into()));
    }
    let undriven = p.with_lambda_d(0.0);
    let t_end = settings.gamma_t_max / p.gamma;
    // every accepted spin lies within Kγ of ω̄, which bounds the fastest rate
    // of any sample before drawing it
    let omega_bound = p.qubit_detuning().abs().max(
        C64::new(
            p.mode_detuning().abs() + settings.truncation_k * p.gamma,
            p.gamma_s / 2.0,
        )
        .norm(),
    ) + p.g_collective;
    let steps = ORACLE_STEP_REFINEMENT * required_steps(omega_bound, t_end);
    let substeps = steps.div_ceil(settings.records);
    let grid = TimeGrid::with_records(0.0, t_end, settings.records, substeps)?;

    let cutoff = 3;
    let rho0 = DensityMatrix::basis(
        SpaceDims::qubit_fock(cutoff)?,
        &[QubitState::Excited.index(), 0],
    )?;
    let reduced = dynamics::reduced_trajectory(
        &build_hc(&undriven, cutoff)?,
        &collapse_ops(&undriven, cutoff)?,
        &rho0,
        &grid,
        undriven.gamma,
    )?;
    let reduced_collective: Vec<f64> = reduced.collective_n.iter().map(|n| n.max(0.0).sqrt()).collect();

    let sampler = EnsembleSampler::new(
        settings.n_spins,
        undriven.omega_bar,
        undriven.gamma,
        undriven.g_collective,
    )
    .truncation(settings.truncation_k);

    let runs: Vec<SingleExcitationRecord> = settings
        .seeds
        .iter()
        .map(|&seed| single_excitation_evolve(&sampler.sample(seed)?, &undriven, &grid))
        .collect::<Result<_>>()?;

    let n_rec = grid.n_records();
    let n_seeds = runs.len() as f64;
    let mean_qubit: Vec<f64> = (0..n_rec)
        .map(|r| runs.iter().map(|run| run.qubit_amplitude[r].norm_sqr()).sum::<f64>() / n_seeds)
        .collect();
    let mean_collective: Vec<f64> = (0..n_rec)
        .map(|r| runs.iter().map(|run| run.collective_amplitude[r].norm()).sum::<f64>() / n_seeds)
        .collect();

    let rel_dev = |series: &[f64]| -> f64 {
        series
            .iter()
            .zip(&reduced.qubit_excited)
            .filter(|(_, &red)| red > settings.population_floor)
            .map(|(v, red)| (v - red).abs() / red)
            .fold(0.0, f64::max)
    };
    let per_seed_qubit_rel_dev = runs.iter().map(|run| rel_dev(&run.qubit_population())).collect();
    let collective_scale = reduced_collective.iter().copied().fold(0.0, f64::max);
    let collective_rel_dev = mean_collective
        .iter()
        .zip(&reduced_collective)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / collective_scale;
    let max_norm_drift = runs
        .iter()
        .flat_map(|run| run.norm.iter().map(|n| (n - 1.0).abs()))
        .fold(0.0, f64::max);

    Ok(TraceOutReport {
        qubit_rel_dev: rel_dev(&mean_qubit),
        per_seed_qubit_rel_dev,
        collective_rel_dev,
        max_norm_drift,
        times: reduced.times,
        reduced_qubit: reduced.qubit_excited,
        reduced_collective,
        mean_qubit,
        mean_collective,
    })
}

/// Kolmogorov–Smirnov distance between samples and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
