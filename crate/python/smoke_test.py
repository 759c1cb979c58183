"""Smoke test for the spintime_py extension.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/spintime_py-*.whl
"""

import cmath
import math

import spintime_py as st


def main():
    c = st.constants()
    assert abs(c["hbar"] - 0.6582119569) < 1e-12
    assert abs(c["kinetic_scale"] - 3.80998) < 1e-4

    u = st.Scenario.uniform_field()
    assert u.kind == "uniform_field"
    assert abs(u.group_speed - 13.26) < 0.01
    vx, vy, vz = u.velocity(1.0, 2.0, 3.0, 0.5, spin=True)
    assert all(math.isfinite(v) for v in (vx, vy, vz))

    s = st.arrival_summary(u, with_distribution=True)
    assert s["converged"] and s["delta"] > 0.0
    h = s["t"][1] - s["t"][0]
    assert abs(sum(s["pi_spin"]) * h - 1.0) < 1e-3

    t = st.transmission_amplitude(1.2, 8.0, 10.0)
    r2 = 1.0 - abs(t) ** 2
    assert 0.0 < r2 < 1.0
    assert st.transmission_amplitude(1.2, 0.0, 10.0) == 1.0 + 0.0j

    b = st.Scenario.barrier()
    p = b.transmission_probability()
    assert 0.6 < p < 0.75

    path = st.trajectory(u, (0.0, 0.0, 5.0), spin=False, t_max=1.0)
    assert path[-1][0] == 1.0 and path[-1][1] > 10.0

    e = st.ensemble(u, paths=20, t_max=2.0)
    assert e["transmitted_fraction"] + e["aborted_fraction"] + e["reflected_fraction"] == 1.0

    try:
        st.Scenario.uniform_field(sigma0=-1.0)
    except ValueError as err:
        assert "sigma" in str(err)
    else:
        raise AssertionError("negative sigma0 accepted")

    print(f"ok: tau - tau_i = {s['delta']:.4e} fs, P_T = {p:.4f}, arg T(1.2) = {cmath.phase(t):.4f}")


if __name__ == "__main__":
    main()
