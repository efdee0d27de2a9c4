"""Smoke test for the safecontract extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py`.
"""

import math

import safecontract as sc


def close(a, b, tol=1e-9):
    return math.isclose(a, b, abs_tol=tol)


def main():
    unit = sc.Agent([10.0], [2.0], kappa_s=1.0, kappa_i=1.0)
    s = unit.solve()
    assert close(s.gamma, 0.3) and close(s.beta, 1 / 3) and s.action == 0, s
    assert close(s.utility, 20 / 3)
    assert close(unit.beta(0.5), 0.2)
    assert close(unit.gamma_ir(), 0.3)
    assert unit.needs_inspection()
    assert unit.best_response(0.3, 0.2) == (0, False)
    assert unit.best_response(0.1, 0.0) is None
    assert close(unit.utility_at(0.2), 4.8)

    rows = unit.sweep("kappa_i", [1.0, 16.0, 25.0])
    assert [round(r.gamma, 9) for r in rows] == [0.3, 0.4, 0.5]
    assert unit.sweep("kappa_s", [9.0]) == [None]

    g, b, u = sc.brute_force_single(unit, 1e-2)
    assert u <= s.utility + 1e-9 and s.utility - u < 0.1

    alloc = sc.allocate([unit] * 4, 1, delta=0.01)
    assert close(alloc.total_utility, 23.0) and close(alloc.gap_bound, 3.96)
    assert all(close(c, 0.25) for c in alloc.caps)

    sched = sc.Schedule([0.6, 0.8, 0.6], 2)
    assert all(close(m, t, 1e-12) for m, t in zip(sched.exact_marginals(), [0.6, 0.8, 0.6]))
    draw = sched.sample(7)
    assert len(draw) == 2 and len(set(draw)) == 2
    assert sched.sample(7) == draw

    try:
        sc.Agent([10.0], [2.0], kappa_s=8.0, kappa_i=1.0).solve()
    except sc.InfeasibleError as e:
        assert "Assumption 2" in str(e)
    else:
        raise AssertionError("expected InfeasibleError")

    try:
        sc.Agent([3.0, 2.0], [1.0, 2.0], kappa_s=0.1, kappa_i=1.0)
    except ValueError as e:
        assert "Assumption 1" in str(e)
    else:
        raise AssertionError("expected ValueError")

    try:
        sc.allocate([unit] * 11, 1)
    except sc.InfeasibleError:
        pass
    else:
        raise AssertionError("expected InfeasibleError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
