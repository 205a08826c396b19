//! Closed-form results for the dispersive readout protocol.

use std::f64::consts::PI;

use serde::Serialize;

use crate::model::SystemParams;
use crate::{Error, Result};

/// f(ω) = (1/π)(γ/2)/((ω − ω̄)² + (γ/2)²), normalized over the real line.
pub fn lorentzian_pdf(omega: f64, omega_bar: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lorentzian width must be positive, got {gamma}"
        )));
    }
    let hw = gamma / 2.0;
    let x = omega - omega_bar;
    Ok(hw / (PI * (x * x + hw * hw)))
}

/// Cumulative distribution of [`lorentzian_pdf`].
pub fn lorentzian_cdf(omega: f64, omega_bar: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lorentzian width must be positive, got {gamma}"
        )));
    }
    Ok(0.5 + ((omega - omega_bar) / (gamma / 2.0)).atan() / PI)
}

/// λ_eff = (λ_d/2)(G/Δ): drive amplitude seen by the collective mode.
pub fn lambda_eff(p: &SystemParams) -> Result<f64> {
    let delta = p.nonzero_delta()?;
    Ok(p.lambda_d / 2.0 * p.g_collective / delta)
}

/// χ = G²/Δ: qubit-state-dependent shift of the collective mode frequency.
pub fn dispersive_shift(p: &SystemParams) -> Result<f64> {
    let delta = p.nonzero_delta()?;
    Ok(p.g_collective * p.g_collective / delta)
}

/// Dressed doublet of the (n+1)-excitation manifold {|e,n⟩, |g,n+1⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JcLevel {
    pub n: usize,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Mixing angle in [0, π).
    pub phi_n: f64,
}

impl JcLevel {
    /// Amplitudes (⟨e,n|, ⟨g,n+1|) of |+,n⟩.
    pub fn plus_state(&self) -> (f64, f64) {
        ((self.phi_n / 2.0).cos(), (self.phi_n / 2.0).sin())
    }

    /// Amplitudes (⟨e,n|, ⟨g,n+1|) of |−,n⟩.
    pub fn minus_state(&self) -> (f64, f64) {
        (-(self.phi_n / 2.0).sin(), (self.phi_n / 2.0).cos())
    }
}

/// Ω±(n) = (n + ½)(ω̄ − ω_d) ± √(Δ² + 4G²(n+1))/2, tan φ_n = 2G√(n+1)/Δ.
pub fn jc_spectrum(n: usize, p: &SystemParams) -> JcLevel {
    let delta = p.delta();
    let coupling = 2.0 * p.g_collective * ((n + 1) as f64).sqrt();
    let mean = (n as f64 + 0.5) * p.mode_detuning();
    let half_split = (delta * delta + coupling * coupling).sqrt() / 2.0;
    JcLevel {
        n,
        omega_plus: mean + half_split,
        omega_minus: mean - half_split,
        // atan2 keeps the branch right for Δ ≤ 0
        phi_n: coupling.atan2(delta),
    }
}

/// ⟨Â†Â⟩(t) = (4λ_eff²/γ²)(1 − e^{−γt/2})² for the excited qubit under the
/// matched drive. At γ = 0 this returns the limit λ_eff² t².
pub fn excited_population(t: f64, p: &SystemParams) -> f64 {
    let lam = lambda_eff(p).unwrap_or(0.0);
    if p.gamma == 0.0 {
        return lam * lam * t * t;
    }
    let g = p.gamma;
    let rise = 1.0 - (-g * t / 2.0).exp();
    4.0 * lam * lam / (g * g) * rise * rise
}

/// t → ∞ value of [`excited_population`].
pub fn excited_steady_state(p: &SystemParams) -> f64 {
    let lam = lambda_eff(p).unwrap_or(0.0);
    4.0 * lam * lam / (p.gamma * p.gamma)
}

/// ⟨Â†Â⟩(t) for the ground-state qubit under the matched drive:
/// λ_eff²/((2G²/Δ)² + (γ/2)²) · [1 − 2cos(2G²t/Δ)e^{−γt/2} + e^{−γt}].
pub fn ground_population(t: f64, p: &SystemParams) -> f64 {
    let bracket = 1.0 - 2.0 * (ground_beat(p) * t).cos() * (-p.gamma * t / 2.0).exp()
        + (-p.gamma * t).exp();
    ground_mean(p) * bracket
}

/// Long-time mean of [`ground_population`].
pub fn ground_mean(p: &SystemParams) -> f64 {
    let lam = lambda_eff(p).unwrap_or(0.0);
    let beat = ground_beat(p);
    lam * lam / (beat * beat + p.gamma * p.gamma / 4.0)
}

/// 2G²/Δ: detuning between the drive and the collective mode for |g⟩.
fn ground_beat(p: &SystemParams) -> f64 {
    2.0 * dispersive_shift(p).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz_to_angular as w;
    use crate::model::DriveChoice;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn figure2() -> SystemParams {
        SystemParams::from_mhz(412.5, 0.0, DriveChoice::Matched, 75.0, 40.0, 12.5, 0.0).unwrap()
    }

    #[test]
    fn lorentzian_examples() {
        let (wb, g) = (3.0, 0.8);
        assert_abs_diff_eq!(lorentzian_pdf(wb, wb, g).unwrap(), 2.0 / (PI * g), epsilon = 1e-15);
        for s in [-1.0, 1.0] {
            assert_abs_diff_eq!(
                lorentzian_pdf(wb + s * g / 2.0, wb, g).unwrap(),
                1.0 / (PI * g),
                epsilon = 1e-15
            );
        }
        assert!(lorentzian_pdf(0.0, 0.0, 0.0).is_err());
        assert!(lorentzian_pdf(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn lorentzian_integrates_to_one() {
        // composite Simpson over ω̄ ± 500γ, denser near the peak
        let (wb, g) = (-2.0, 1.3);
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let f = |x: f64| lorentzian_pdf(x, wb, g).unwrap();
            let mut s = f(a) + f(b);
            for k in 1..n {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let core = simpson(wb - 20.0 * g, wb + 20.0 * g, 20_000);
        let left = simpson(wb - 500.0 * g, wb - 20.0 * g, 20_000);
        let right = simpson(wb + 20.0 * g, wb + 500.0 * g, 20_000);
        let total = core + left + right;
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
        let cdf_mass = lorentzian_cdf(wb + 500.0 * g, wb, g).unwrap()
            - lorentzian_cdf(wb - 500.0 * g, wb, g).unwrap();
        assert_abs_diff_eq!(total, cdf_mass, epsilon = 1e-8);
    }

    #[test]
    fn lambda_eff_examples() {
        let p = figure2();
        assert_eq!(lambda_eff(&p.with_lambda_d(0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            crate::angular_to_mhz(lambda_eff(&p).unwrap()),
            3.636_363_636_363_636,
            epsilon = 1e-12
        );
        let q = SystemParams::new(2.0, 0.0, DriveChoice::Explicit(0.0), 2.0, 5.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(lambda_eff(&q).unwrap(), 2.5, epsilon = 1e-15);
        let mut z = p;
        z.omega_t = z.omega_bar;
        assert_eq!(lambda_eff(&z), Err(Error::ZeroDetuning));
    }

    #[test]
    fn dispersive_shift_examples() {
        let p = figure2();
        assert_abs_diff_eq!(
            crate::angular_to_mhz(dispersive_shift(&p).unwrap()),
            13.636_363_636_363_637,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            p.omega_d - p.omega_bar,
            dispersive_shift(&p).unwrap(),
            epsilon = 1e-12
        );
        let mut z = p;
        z.omega_t = z.omega_bar;
        assert_eq!(dispersive_shift(&z), Err(Error::ZeroDetuning));
    }

    #[test]
    fn jc_resonant_and_decoupled_limits() {
        let g = 1.7;
        let res = SystemParams::new(5.0, 5.0, DriveChoice::Explicit(5.0), g, 0.0, 0.0, 0.0).unwrap();
        for n in 0..6 {
            let l = jc_spectrum(n, &res);
            let r = g * ((n + 1) as f64).sqrt();
            assert_abs_diff_eq!(l.omega_plus, r, epsilon = 1e-13);
            assert_abs_diff_eq!(l.omega_minus, -r, epsilon = 1e-13);
            assert_abs_diff_eq!(l.phi_n, PI / 2.0, epsilon = 1e-15);
        }
        let weak =
            SystemParams::new(4.0, 1.0, DriveChoice::Explicit(0.5), 1e-9, 0.0, 0.0, 0.0).unwrap();
        let l = jc_spectrum(3, &weak);
        assert!(l.phi_n < 1e-8);
        assert_abs_diff_eq!(l.omega_plus, 3.5 * 0.5 + 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(l.omega_minus, 3.5 * 0.5 - 1.5, epsilon = 1e-9);
    }

    #[test]
    fn excited_population_examples() {
        let p = figure2();
        assert_eq!(excited_population(0.0, &p), 0.0);
        assert_abs_diff_eq!(excited_steady_state(&p), 0.338_512, epsilon = 5e-7);
        assert_abs_diff_eq!(excited_population(1e3, &p), excited_steady_state(&p), epsilon = 1e-15);
        let t = 2.0 / p.gamma;
        let expect = excited_steady_state(&p) * (1.0 - (-1.0f64).exp()).powi(2);
        assert_abs_diff_eq!(excited_population(t, &p), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(excited_population(t, &p), 0.135_262, epsilon = 5e-7);
        let lam = lambda_eff(&p).unwrap();
        assert_abs_diff_eq!(
            excited_population(0.01, &p.with_gamma(0.0)),
            lam * lam * 1e-4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ground_population_examples() {
        let p = figure2();
        assert_abs_diff_eq!(ground_population(0.0, &p), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(ground_mean(&p), 0.016_891, epsilon = 5e-7);
        let period = 2.0 * PI / ground_beat(&p);
        assert_abs_diff_eq!(period, 0.036_666_666_666_666, epsilon = 1e-12);
        assert_abs_diff_eq!(ground_beat(&p), w(27.272_727_272_727_27), epsilon = 1e-9);
    }

    #[test]
    fn suppression_ratio_at_figure2_parameters() {
        let p = figure2();
        let ratio = excited_steady_state(&p) / ground_mean(&p);
        let beat = ground_beat(&p);
        let half = p.gamma / 2.0;
        let expect = (beat * beat + half * half) / (half * half);
        assert_abs_diff_eq!(ratio, expect, epsilon = 1e-10);
        assert_abs_diff_eq!(ratio, 20.04, epsilon = 5e-3);
    }

    #[test]
    fn eigenvector_amplitudes_are_orthonormal() {
        let l = jc_spectrum(2, &figure2());
        let (a, b) = l.plus_state();
        let (c, d) = l.minus_state();
        assert_abs_diff_eq!(a * a + b * b, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a * c + b * d, 0.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn excited_population_monotone_and_bounded(
            gamma_mhz in 0.5f64..100.0,
            t1 in 0.0f64..2.0,
            dt in 0.0f64..1.0,
        ) {
            let p = figure2().with_gamma(w(gamma_mhz));
            let a = excited_population(t1, &p);
            let b = excited_population(t1 + dt, &p);
            prop_assert!(b >= a);
            prop_assert!(b <= excited_steady_state(&p) * (1.0 + 1e-12));
        }

        #[test]
        fn ground_population_bounded(
            gamma_mhz in 0.0f64..100.0,
            t in 0.0f64..5.0,
        ) {
            let p = figure2().with_gamma(w(gamma_mhz));
            let v = ground_population(t, &p);
            prop_assert!(v >= -1e-15);
            prop_assert!(v <= 4.0 * ground_mean(&p) * (1.0 + 1e-12));
        }

        #[test]
        fn mixing_angle_in_range(
            delta in -1000.0f64..1000.0,
            g in 0.01f64..500.0,
            n in 0usize..30,
        ) {
            let p = SystemParams::new(delta, 0.0, DriveChoice::Explicit(0.0), g, 0.0, 0.0, 0.0).unwrap();
            let l = jc_spectrum(n, &p);
            prop_assert!(l.phi_n >= 0.0 && l.phi_n < PI);
            prop_assert!(l.omega_plus >= l.omega_minus);
        }
    }
}
