//! Simulation of qubit readout by spin amplification.
//!
//! A target qubit couples dispersively to the collective (bright) mode of an
//! inhomogeneously broadened spin ensemble. Driving the qubit at the
//! frequency of the collective mode shifted for the excited qubit pumps
//! excitations into the ensemble only when the qubit is excited. The
//! inhomogeneous width transfers quanta from the bright mode into subradiant
//! modes, which still count toward the readout signal.
//!
//! Modules:
//!
//! * [`hilbert`]: dense operators on truncated qubit and Fock spaces.
//! * [`model`]: reduced-model Hamiltonians and collapse operators.
//! * [`dynamics`]: fixed-step RK4 Lindblad integration and excitation accounting.
//! * [`analytic`]: closed-form spectra and population curves.
//! * [`oracle`]: brute-force many-spin models used to validate the reduced model.
//! * [`experiments`]: config-driven experiment runners behind the `spinamp` CLI.
//!
//! All frequencies are angular, in rad/µs, and times are in µs.

pub mod analytic;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod hilbert;
pub mod model;
pub mod oracle;
pub mod rk4;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/µs.
pub fn mhz_to_angular(nu_mhz: f64) -> f64 {
    std::f64::consts::TAU * nu_mhz
}

/// Converts an angular frequency in rad/µs to an ordinary frequency in MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU
}
