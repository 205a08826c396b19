use proptest::prelude::*;

use spinamp::analytic::{jc_spectrum, lorentzian_cdf};
use spinamp::dynamics::{omega_max, TimeGrid};
use spinamp::experiments::simulate_branch;
use spinamp::hilbert::{eig_hermitian, QubitState};
use spinamp::model::{build_driven, build_hc, collapse_ops, collective_number, qubit_excited};
use spinamp::model::{DriveChoice, SystemParams};
use spinamp::oracle::{lorentzian_quantile, EnsembleSampler};
use spinamp::rk4::required_steps;

fn params() -> impl Strategy<Value = SystemParams> {
    (-600.0..600.0f64, 10.0..120.0f64, 0.0..60.0f64, 1.0..50.0f64).prop_filter_map(
        "matched drive needs a detuned mode",
        |(omega_t, g, lambda, gamma)| {
            SystemParams::from_mhz(omega_t, 0.0, DriveChoice::Matched, g, lambda, gamma, 0.0).ok()
        },
    )
}

fn short_grid(p: &SystemParams, cutoff: usize, t_end: f64) -> TimeGrid {
    let h = build_driven(p, cutoff).unwrap();
    let w = omega_max(&h, &collapse_ops(p, cutoff).unwrap());
    TimeGrid::with_records(0.0, t_end, 20, (4 * required_steps(w, t_end)).div_ceil(20)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jc_levels_match_diagonalization(p in params()) {
        let d = 8;
        let eig = eig_hermitian(&build_hc(&p, d).unwrap()).unwrap();
        let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for n in 0..d - 1 {
            let lvl = jc_spectrum(n, &p);
            for target in [lvl.omega_plus, lvl.omega_minus] {
                let nearest = eig.values.iter().map(|v| (v - target).abs()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest / scale < 1e-12, "n = {n}: miss {nearest}");
            }
        }
    }

    #[test]
    fn coupling_preserves_excitation_number(p in params(), d in 2usize..10) {
        let h = build_hc(&p, d).unwrap();
        let n = qubit_excited(d).unwrap() + collective_number(d).unwrap();
        let c = h.commutator(&n).unwrap();
        prop_assert!(c.max_abs() < 1e-9 * h.max_abs());
    }

    #[test]
    fn lorentzian_quantile_inverts_cdf(u in 1e-6..(1.0 - 1e-6), gamma in 0.1..100.0f64, centre in -50.0..50.0f64) {
        let w = lorentzian_quantile(u, centre, gamma);
        prop_assert!((lorentzian_cdf(w, centre, gamma).unwrap() - u).abs() < 1e-9);
    }

    #[test]
    fn seeded_sampling_is_reproducible(n in 2usize..300, seed in any::<u64>()) {
        let s = EnsembleSampler::new(n, 0.0, 10.0, 75.0);
        let a = s.sample(seed).unwrap();
        prop_assert_eq!(&a, &s.sample(seed).unwrap());
        prop_assert_ne!(&a.freqs, &s.sample(seed.wrapping_add(1)).unwrap().freqs);
        prop_assert!((a.collective_coupling() - 75.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn short_evolutions_stay_physical(p in params(), excited in any::<bool>()) {
        let d = 5;
        let q = if excited { QubitState::Excited } else { QubitState::Ground };
        let t = simulate_branch(&p, d, &short_grid(&p, d, 0.02), q).unwrap();
        prop_assert!(t.max_trace_err() < 1e-7);
        prop_assert!(t.max_hermiticity_err() < 1e-9);
        prop_assert!(t.min_eigenvalue() >= -1e-6);
        prop_assert!(t.collective_n.iter().all(|x| *x >= -1e-9 && *x <= (d - 1) as f64 + 1e-9));
    }

    #[test]
    fn undriven_gain_comes_from_one_excitation(p in params()) {
        let p = p.with_lambda_d(0.0);
        let d = 4;
        let grid = short_grid(&p, d, 0.05);
        let e = simulate_branch(&p, d, &grid, QubitState::Excited).unwrap();
        let g = simulate_branch(&p, d, &grid, QubitState::Ground).unwrap();
        prop_assert!(g.total_n.iter().all(|x| x.abs() < 1e-12));
        let gain = spinamp::dynamics::readout_gain(&e, &g).unwrap();
        prop_assert!(gain.iter().all(|x| *x >= -1e-9 && *x <= 1.0 + 1e-6));
    }
}
