"""Smoke test for the spinamp_py extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/spinamp_py-*.whl
"""

import math

import spinamp_py as sp


def main():
    p = sp.SystemParams()
    assert math.isclose(p.delta_mhz, 412.5)
    assert math.isclose(p.lambda_d_mhz, 40.0)
    assert math.isclose(sp.lambda_eff_mhz(p), 40.0 / 11.0, rel_tol=1e-12)
    assert round(sp.excited_steady_state(p), 6) == 0.338512
    assert round(sp.ground_mean(p), 6) == 0.016891
    assert sp.excited_population(0.0, p) == 0.0

    plus, minus, phi = sp.jc_spectrum(0, p)
    assert plus > minus and 0.0 < phi < math.pi

    e = sp.simulate_branch(p, "e", cutoff=6, t_end_us=0.02, records=20)
    assert len(e["t_us"]) == 21
    assert all(0.0 <= x <= 5.0 for x in e["collective_n"])

    t, gain = sp.readout_gain(p, cutoff=6, t_end_us=0.02, records=20)
    assert len(t) == len(gain) == 21 and abs(gain[0]) < 1e-12

    freqs, couplings = sp.sample_ensemble(100, 0.0, 12.5, 75.0, seed=7)
    assert freqs == sp.sample_ensemble(100, 0.0, 12.5, 75.0, seed=7)[0]
    assert math.isclose(math.sqrt(sum(g * g for g in couplings)), 75.0)

    header, rows = sp.run_experiment("spectrum", ["fock_cutoff=6"])
    assert header[0] == "n" and len(rows) == 5

    try:
        sp.SystemParams(gamma_mhz=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative gamma accepted")

    print("spinamp_py smoke test passed")


if __name__ == "__main__":
    main()
