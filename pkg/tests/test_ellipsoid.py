import math

import numpy as np
import pytest
from scipy.optimize import linprog

from refgame.ellipsoid import Cut, Feasible, ellipsoid_search, iteration_cap
from refgame.errors import NumericalFailure, PreconditionError


def halfspace_oracle(a, b):
    def oracle(z):
        viol = a @ z - b
        i = int(np.argmax(viol))
        if viol[i] <= 0:
            return Feasible({"case": "inside"})
        return Cut(a[i], viol[i] / np.linalg.norm(a[i]), {"case": "cut", "objective": float(viol[i])})
    return oracle


def with_box(a, b, big_r):
    """Append the faces of the cube inscribed in the radius-``big_r`` ball."""
    n = a.shape[1]
    half = big_r / math.sqrt(n)
    return np.vstack([a, np.eye(n), -np.eye(n)]), np.concatenate([b, np.full(2 * n, half)])


def chebyshev_radius(a, b):
    """Largest t such that a ball of radius t fits (t < 0 measures infeasibility)."""
    n = a.shape[1]
    a_ub = np.hstack([a, np.linalg.norm(a, axis=1)[:, None]])
    res = linprog(np.r_[np.zeros(n), -1.0], A_ub=a_ub, b_ub=b, bounds=[(None, None)] * (n + 1))
    return -res.fun


def test_always_feasible_oracle():
    res = ellipsoid_search(4, 2.0, 0.1, lambda z: Feasible())
    assert res.feasible and res.iterations == 1 and np.allclose(res.point, 0)


def test_empty_interval():
    a = np.array([[-1.0], [1.0]])
    b = np.array([-1.0, -1.0])  # x >= 1 and x <= -1
    res = ellipsoid_search(1, 4.0, 1e-3, halfspace_oracle(a, b))
    assert not res.feasible and res.iterations <= res.cap


def test_matches_linear_programming_oracle(rng):
    big_r, small_r = 3.0, 1e-3
    checked = agree = 0
    while checked < 50:
        n = int(rng.integers(3, 11))
        m = int(rng.integers(n + 1, 2 * n + 4))
        a = rng.standard_normal((m, n))
        b = a @ rng.uniform(-0.8, 0.8, n) + rng.uniform(-0.6, 0.4, m)
        a, b = with_box(a, b, big_r)
        t = chebyshev_radius(a, b)
        if abs(t) < 0.05:
            continue  # too close to the boundary to call either way
        checked += 1
        res = ellipsoid_search(n, big_r, small_r, halfspace_oracle(a, b))
        agree += res.feasible == (t > 0)
    assert agree == checked


def test_volume_shrinks_every_cut(rng):
    n = 5
    a = rng.standard_normal((12, n))
    b = -np.ones(12) * 5  # far outside the ball: always cutting
    res = ellipsoid_search(n, 2.0, 1e-2, halfspace_oracle(a, b), max_iter=60)
    logvols = [e["logvol"] for e in res.log] + [res.logvol]
    drops = np.diff(logvols)
    assert np.all(drops <= -1 / (2 * (n + 1)) + 1e-12)
    assert np.allclose(res.shape, res.shape.T, atol=1e-9)
    assert abs(0.5 * np.linalg.slogdet(res.shape)[1] - res.logvol) < 1e-8


def test_deep_cuts_reach_the_same_answers(rng):
    n = 4
    a = rng.standard_normal((8, n))
    b = a @ rng.uniform(-0.5, 0.5, n) + 0.3
    central = ellipsoid_search(n, 3.0, 1e-3, halfspace_oracle(a, b))
    deep = ellipsoid_search(n, 3.0, 1e-3, halfspace_oracle(a, b), deep_cut=True)
    assert central.feasible and deep.feasible
    assert deep.iterations <= central.iterations


def test_iteration_cap_formula():
    assert iteration_cap(3, 10.0, 0.1) == math.ceil(2 * 3 * 4 * math.log(100))
    assert iteration_cap(0, 10.0, 0.1) == 1


def test_errors():
    with pytest.raises(PreconditionError):
        ellipsoid_search(2, 0.1, 1.0, lambda z: Feasible())
    with pytest.raises(NumericalFailure):
        ellipsoid_search(2, 1.0, 0.1, lambda z: Cut(np.array([np.nan, 0.0])))
