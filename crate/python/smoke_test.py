"""Smoke test for the Python bindings.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml` or
`maturin build -m crates/python/Cargo.toml` and pip-install the wheel.
"""

import math

import onebit_sprt_py as ob


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    lower, upper = ob.thresholds(1e-3, 1e-3)
    close(upper, math.log(999.0), 1e-12)
    close(lower, -math.log(999.0), 1e-12)

    eye = [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]
    close(ob.orthant4(eye), 1.0 / 16.0, 1e-15)
    half = [[1.0 if i == j else 0.5 for j in range(4)] for i in range(4)]
    close(ob.orthant4(half), 0.2, 1e-12)
    close(ob.quad_moment(half), 0.2, 1e-11)

    a = ob.build_steering(2, math.radians(15.0))
    assert len(a) == 4 and len(a[0]) == 2
    r = ob.build_covariance(1, 0.3, 1.0)
    close(r[0][0], 2.0, 1e-15)

    sc = ob.Scenario(4, alpha=1e-9)
    res = ob.analyze(sc)
    chi0, chi1 = res["efficiency"]
    close(chi0, 0.2564, 1e-3)
    close(chi1, 0.3438, 1e-3)

    model = ob.BinaryModel(sc)
    e0, e1 = model.expected_llr()
    assert e0 < 0.0 < e1
    assert len(model.b) == 28 and model.pairs[0] == (0, 1)
    z = [1, -1, 1, 1, -1, -1, 1, -1]
    close(model.approx_llr(z), model.approx_llr([-v for v in z]), 1e-15)

    rep = ob.run_experiment(ob.Scenario(2, alpha=1e-3, seed=3), 20, "H1", "ideal", horizon=50)
    assert rep["runs"] == 20 and len(rep["trajectory"]) == 50
    assert rep == ob.run_experiment(ob.Scenario(2, alpha=1e-3, seed=3), 20, "H1", "ideal", horizon=50)

    try:
        ob.thresholds(0.6, 0.6)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid alpha accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
