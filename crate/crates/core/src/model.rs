//! Reduced (qubit ⊗ collective mode) Hamiltonians and collapse operators.
//!
//! All builders act in the frame rotating at the drive frequency, where the
//! qubit and mode detunings are ω_T − ω_d and ω̄ − ω_d.

use serde::{Deserialize, Serialize};

use crate::hilbert::{
    kron, ladder, number, qubit_projector, sigma_minus, sigma_plus, sigma_x, sigma_z, Operator,
    QubitState, SpaceDims,
};
use crate::{Error, Result};

/// How the drive frequency is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveChoice {
    /// Explicit drive angular frequency (rad/µs).
    Explicit(f64),
    /// ω_d = ω̄ + G²/Δ: resonant with the collective mode when the qubit is excited.
    Matched,
}

impl DriveChoice {
    pub fn resolve(self, omega_t: f64, omega_bar: f64, g_collective: f64) -> Result<f64> {
        match self {
            DriveChoice::Explicit(w) => Ok(w),
            DriveChoice::Matched => {
                let delta = omega_t - omega_bar;
                if delta == 0.0 {
                    return Err(Error::ZeroDetuning);
                }
                Ok(omega_bar + g_collective * g_collective / delta)
            }
        }
    }
}

/// Physical rates of the protocol, all in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_t: f64,
    pub omega_bar: f64,
    pub omega_d: f64,
    pub g_collective: f64,
    pub lambda_d: f64,
    pub gamma: f64,
    pub gamma_s: f64,
}

impl SystemParams {
    pub fn new(
        omega_t: f64,
        omega_bar: f64,
        drive: DriveChoice,
        g_collective: f64,
        lambda_d: f64,
        gamma: f64,
        gamma_s: f64,
    ) -> Result<Self> {
        let omega_d = drive.resolve(omega_t, omega_bar, g_collective)?;
        let p = Self {
            omega_t,
            omega_bar,
            omega_d,
            g_collective,
            lambda_d,
            gamma,
            gamma_s,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`SystemParams::new`] with every frequency given as ν = ω/2π in MHz.
    pub fn from_mhz(
        omega_t: f64,
        omega_bar: f64,
        drive: DriveChoice,
        g_collective: f64,
        lambda_d: f64,
        gamma: f64,
        gamma_s: f64,
    ) -> Result<Self> {
        use crate::mhz_to_angular as w;
        let drive = match drive {
            DriveChoice::Explicit(nu) => DriveChoice::Explicit(w(nu)),
            DriveChoice::Matched => DriveChoice::Matched,
        };
        Self::new(
            w(omega_t),
            w(omega_bar),
            drive,
            w(g_collective),
            w(lambda_d),
            w(gamma),
            w(gamma_s),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_t", self.omega_t),
            ("omega_bar", self.omega_bar),
            ("omega_d", self.omega_d),
            ("g_collective", self.g_collective),
            ("lambda_d", self.lambda_d),
            ("gamma", self.gamma),
            ("gamma_s", self.gamma_s),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} is not finite")));
        }
        if self.g_collective <= 0.0 {
            return Err(Error::InvalidParameter(
                "collective coupling G must be positive".into(),
            ));
        }
        if self.gamma < 0.0 || self.gamma_s < 0.0 {
            return Err(Error::InvalidParameter("decay rates must be >= 0".into()));
        }
        Ok(())
    }

    /// Δ = ω_T − ω̄.
    pub fn delta(&self) -> f64 {
        self.omega_t - self.omega_bar
    }

    pub(crate) fn nonzero_delta(&self) -> Result<f64> {
        let d = self.delta();
        if d == 0.0 {
            Err(Error::ZeroDetuning)
        } else {
            Ok(d)
        }
    }

    /// ω_T − ω_d.
    pub fn qubit_detuning(&self) -> f64 {
        self.omega_t - self.omega_d
    }

    /// ω̄ − ω_d.
    pub fn mode_detuning(&self) -> f64 {
        self.omega_bar - self.omega_d
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_lambda_d(mut self, lambda_d: f64) -> Self {
        self.lambda_d = lambda_d;
        self
    }
}

fn reduced(cutoff: usize) -> Result<(SpaceDims, Operator, Operator)> {
    let dims = SpaceDims::qubit_fock(cutoff)?;
    let id_q = Operator::identity(SpaceDims::qubit());
    let id_f = Operator::identity(SpaceDims::fock(cutoff)?);
    Ok((dims, id_q, id_f))
}

/// Â on the reduced space (identity on the qubit).
pub fn collective_lowering(cutoff: usize) -> Result<Operator> {
    let (_, id_q, _) = reduced(cutoff)?;
    Ok(kron(&id_q, &ladder(cutoff)?))
}

/// Â†Â on the reduced space.
pub fn collective_number(cutoff: usize) -> Result<Operator> {
    let (_, id_q, _) = reduced(cutoff)?;
    Ok(kron(&id_q, &number(cutoff)?))
}

/// σ⁺σ⁻ on the reduced space.
pub fn qubit_excited(cutoff: usize) -> Result<Operator> {
    let (_, _, id_f) = reduced(cutoff)?;
    Ok(kron(&qubit_projector(QubitState::Excited), &id_f))
}

/// H_c = ((ω_T−ω_d)/2)σ_z + G(Âσ⁺ + Â†σ⁻) + (ω̄−ω_d)Â†Â.
pub fn build_hc(p: &SystemParams, cutoff: usize) -> Result<Operator> {
    let (_, _, id_f) = reduced(cutoff)?;
    let a = ladder(cutoff)?;
    let qubit = kron(&sigma_z(), &id_f) * (p.qubit_detuning() / 2.0);
    let flip_flop =
        (kron(&sigma_plus(), &a) + kron(&sigma_minus(), &a.adjoint())) * p.g_collective;
    let mode = collective_number(cutoff)? * p.mode_detuning();
    (&(&qubit + &flip_flop) + &mode).into_hermitian()
}

/// H_d = (λ_d/2)(σ⁺ + σ⁻) ⊗ I.
pub fn build_drive(p: &SystemParams, cutoff: usize) -> Result<Operator> {
    let (_, _, id_f) = reduced(cutoff)?;
    Ok(kron(&sigma_x(), &id_f) * (p.lambda_d / 2.0))
}

/// H_c + H_d.
pub fn build_driven(p: &SystemParams, cutoff: usize) -> Result<Operator> {
    Ok(&build_hc(p, cutoff)? + &build_drive(p, cutoff)?)
}

/// H_disp = ((ω_T−ω_d)/2)σ_z + (G²/Δ)σ⁺σ⁻ + (ω̄−ω_d + (G²/Δ)σ_z)Â†Â.
pub fn build_dispersive(p: &SystemParams, cutoff: usize) -> Result<Operator> {
    let delta = p.nonzero_delta()?;
    let chi = p.g_collective * p.g_collective / delta;
    let dims = SpaceDims::qubit_fock(cutoff)?;
    let mut diag = Vec::with_capacity(dims.total());
    for q in [QubitState::Ground, QubitState::Excited] {
        let s = q.sign();
        let excited = if q == QubitState::Excited { 1.0 } else { 0.0 };
        for n in 0..cutoff {
            diag.push(
                p.qubit_detuning() / 2.0 * s
                    + chi * excited
                    + (p.mode_detuning() + chi * s) * n as f64,
            );
        }
    }
    Operator::diagonal(dims, &diag)
}

/// Effective collective-mode Hamiltonian for a frozen qubit state:
/// (ω̄ − ω_d ± G²/Δ)Â†Â ± λ_eff(Â + Â†), with + for |e⟩.
///
/// Acts on the Fock space of the collective mode alone.
pub fn build_anc(p: &SystemParams, qubit: QubitState, cutoff: usize) -> Result<Operator> {
    let delta = p.nonzero_delta()?;
    let chi = p.g_collective * p.g_collective / delta;
    let lambda_eff = p.lambda_d / 2.0 * p.g_collective / delta;
    let s = qubit.sign();
    let a = ladder(cutoff)?;
    let quad = number(cutoff)? * (p.mode_detuning() + s * chi);
    let linear = (&a + &a.adjoint()) * (s * lambda_eff);
    (&quad + &linear).into_hermitian()
}

fn decay_channels(p: &SystemParams, lowering: &Operator) -> Vec<Operator> {
    let mut out = Vec::new();
    if p.gamma > 0.0 {
        out.push(lowering * p.gamma.sqrt());
    }
    // collective-level stand-in for per-spin relaxation
    if p.gamma_s > 0.0 {
        out.push(lowering * p.gamma_s.sqrt());
    }
    out
}

/// [√γ Â] plus [√Γ Â] when Γ > 0, on the reduced space.
pub fn collapse_ops(p: &SystemParams, cutoff: usize) -> Result<Vec<Operator>> {
    Ok(decay_channels(p, &collective_lowering(cutoff)?))
}

/// Same channels as [`collapse_ops`] on the bare Fock space of the mode.
pub fn mode_collapse_ops(p: &SystemParams, cutoff: usize) -> Result<Vec<Operator>> {
    Ok(decay_channels(p, &ladder(cutoff)?))
}
