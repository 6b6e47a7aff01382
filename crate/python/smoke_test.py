"""Smoke test for the advection_eigen_py extension module."""

import math

import advection_eigen_py as ae


def main():
    c = ae.Reaction.plateau(1.0, 100.0, 0.0)
    rv = ae.reference_eigenvalues(c)
    assert abs(rv["lambda_nn"] - 1.0) < 1e-9, rv
    assert abs(rv["lambda_dd"] - (1 + 9 * math.pi**2)) / rv["lambda_dd"] < 1e-6, rv
    assert abs(ae.middle_eigenvalue(c, "DD") - rv["lambda_dd"]) < 1e-12

    flat = ae.solve(0.0, ae.Potential.zero(), ae.Reaction.constant(3.0), d=2)
    assert abs(flat["lambda"] - 3.0) < 1e-8, flat["lambda"]

    m = ae.Potential.ladder("DD", 1 / 3 - 1e-3, 0.25, 4, beta=0.5)
    assert ae.Potential.from_json(m.to_json()).sup_distance(m) == 0.0
    rows = ae.sweep([1.0, 10.0, 100.0], m, c, workers=2)
    assert [r["s"] for r in rows] == [1.0, 10.0, 100.0]
    assert all(c.c_min - 1e-9 <= r["lambda"] <= c.c_max + 1e-9 for r in rows)

    sigma, ell = ae.ladder(0.25, 10.0)
    assert all(abs(ell[n + 1] - ell[n] - sigma[n] * ell[n]) <= 1e-12 * ell[n + 1] for n in range(10))
    e, f, g = ae.efg(0.25, 1.0)
    assert min(e, f, g) >= 0.0

    rec = ae.crosscheck(5.0, ae.Potential.bump(0.2), ae.Reaction.polynomial([2.0, 1.0]))
    assert rec["pass"], rec

    try:
        ae.Potential.ladder("NN", 0.2, 0.3, 2, beta=0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("NN ladder accepted a beta")

    print("smoke test passed:", {k: round(v, 6) for k, v in rv.items()})


if __name__ == "__main__":
    main()
