//! Classical fixed-step fourth-order Runge–Kutta on complex state vectors.
//!
//! Shared by the density-matrix integrator and the single-excitation oracle.

use crate::C64;

/// Largest admissible `dt · ω_max` for a fixed step.
pub const STABILITY_GUARD: f64 = 0.25;

/// Smallest step count over `duration` satisfying the stability guard.
pub fn required_steps(omega_max: f64, duration: f64) -> usize {
    let mut n = ((duration * omega_max / STABILITY_GUARD).ceil() as usize).max(1);
    while duration / n as f64 * omega_max > STABILITY_GUARD {
        n += 1;
    }
    n
}

/// Scratch buffers for one integrator instance.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    probe: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            probe: z,
        }
    }

    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }

    /// Advances `y` by one step of size `dt`.
    ///
    /// `rhs(y, out)` must overwrite `out` with dy/dt at `y`.
    pub fn step<F>(&mut self, rhs: &mut F, y: &mut [C64], dt: f64)
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        debug_assert_eq!(y.len(), self.len());
        let half = 0.5 * dt;

        rhs(y, &mut self.k1);
        axpy_into(&mut self.probe, y, half, &self.k1);
        rhs(&self.probe, &mut self.k2);
        axpy_into(&mut self.probe, y, half, &self.k2);
        rhs(&self.probe, &mut self.k3);
        axpy_into(&mut self.probe, y, dt, &self.k3);
        rhs(&self.probe, &mut self.k4);

        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * w;
        }
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(omega: f64, t: f64, steps: usize) -> C64 {
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut rk = Rk4::new(1);
        let dt = t / steps as f64;
        let mut f = |y: &[C64], out: &mut [C64]| out[0] = C64::new(0.0, -omega) * y[0];
        for _ in 0..steps {
            rk.step(&mut f, &mut y, dt);
        }
        y[0]
    }

    #[test]
    fn fourth_order_convergence_on_oscillator() {
        let (omega, t) = (3.0, 2.0);
        let exact = C64::new(0.0, -omega * t).exp();
        let e1 = (integrate(omega, t, 40) - exact).norm();
        let e2 = (integrate(omega, t, 80) - exact).norm();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 16.0 * 0.1, "ratio {ratio}");
    }

    #[test]
    fn required_steps_meets_guard() {
        let n = required_steps(1000.0, 0.3);
        assert!(0.3 / n as f64 * 1000.0 <= STABILITY_GUARD);
        assert!(0.3 / (n - 1) as f64 * 1000.0 > STABILITY_GUARD);
        assert_eq!(required_steps(0.0, 1.0), 1);
    }
}
