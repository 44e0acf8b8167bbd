import numpy as np
import pytest

from refgame.channels import ChannelImage, HullSet, MixedCircuit, images_disjoint_pair
from refgame.distinguish import Povm, helstrom_povm, povm_success, separating_operator, set_povm
from refgame.errors import PreconditionError
from refgame.linalg import random_density, spectral_norm, trace_norm

ZERO, ONE = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])


def check_povm(povm: Povm):
    assert np.allclose(povm.e0 + povm.e1, np.eye(len(povm.e0)), atol=1e-9)
    assert np.linalg.eigvalsh(povm.e0)[0] > -1e-9
    assert np.linalg.eigvalsh(povm.e1)[0] > -1e-9


def test_helstrom_examples(rng):
    povm, p = helstrom_povm(ZERO, ONE)
    assert np.isclose(p, 1.0) and np.isclose(povm_success(povm, [(ZERO, 0), (ONE, 1)], [0.5, 0.5]), 1.0)
    rho = random_density(3, rng)
    povm, p = helstrom_povm(rho, rho)
    assert np.isclose(p, 0.5) and np.isclose(povm_success(povm, [(rho, 0), (rho, 1)], [0.5, 0.5]), 0.5)
    check_povm(povm)


def test_helstrom_success_formula(rng):
    for _ in range(30):
        n = int(rng.integers(2, 6))
        r0, r1 = random_density(n, rng), random_density(n, rng)
        povm, p = helstrom_povm(r0, r1)
        check_povm(povm)
        measured = povm_success(povm, [(r0, 0), (r1, 1)], [0.5, 0.5])
        assert abs(measured - (0.5 + trace_norm(r0 - r1) / 4)) < 1e-10
        assert abs(p - measured) < 1e-10


def _projective(theta, phi):
    v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    e0 = np.outer(v, v.conj())
    return Povm(e0, np.eye(2) - e0)


def test_helstrom_is_optimal_on_qubits(rng):
    grid = [(t, f) for t in np.linspace(0, np.pi, 60) for f in np.linspace(0, 2 * np.pi, 60)]
    for _ in range(5):
        r0, r1 = random_density(2, rng), random_density(2, rng)
        _, p = helstrom_povm(r0, r1)
        best = max(povm_success(_projective(t, f), [(r0, 0), (r1, 1)], [0.5, 0.5]) for t, f in grid)
        assert best <= p + 1e-6


def test_povm_success_rules(rng):
    rho = random_density(2, rng)
    half = Povm(np.eye(2) / 2, np.eye(2) / 2)
    assert np.isclose(povm_success(half, [(rho, 0)], [1.0]), 0.5)
    with pytest.raises(PreconditionError):
        povm_success(half, [(rho, 2)], [1.0])
    with pytest.raises(PreconditionError):
        povm_success(half, [(rho, 0)], [0.7])


def test_singleton_hulls_reduce_to_helstrom(rng):
    r0, r1 = random_density(2, rng), random_density(2, rng)
    report = set_povm(HullSet([r0]), HullSet([r1]))
    _, p = helstrom_povm(r0, r1)
    assert abs(report.distance - trace_norm(r0 - r1)) < 1e-6
    assert abs(report.uniform_guarantee - p) < 1e-6
    measured = povm_success(report.povm, [(r0, 0), (r1, 1)], [0.5, 0.5])
    assert measured >= p - 1e-6


def test_overlapping_sets_give_a_coin_flip():
    ident = MixedCircuit.identity(2)
    report = set_povm(ident, ident)
    assert np.allclose(report.povm.e0, np.eye(2) / 2) and np.allclose(report.povm.e1, np.eye(2) / 2)
    check_povm(report.povm)


def test_orthogonal_constants():
    report = set_povm(MixedCircuit.constant(ZERO, 2), MixedCircuit.constant(ONE, 2))
    check_povm(report.povm)
    assert abs(report.distance - 2) < 1e-6
    assert povm_success(report.povm, [(ZERO, 0)], [1.0]) > 1 - 1e-6


def test_separating_povm_properties(rng):
    for _ in range(3):
        q0, q1 = images_disjoint_pair(rng)
        a0, a1 = ChannelImage(q0), ChannelImage(q1)
        report = set_povm(a0, a1)
        check_povm(report.povm)
        k = report.separator
        assert spectral_norm(k) <= 1 + 1e-8
        assert np.allclose(report.povm.e0 - report.povm.e1, k, atol=1e-9)
        assert report.margin >= report.distance - 1e-6
        for _ in range(50):
            s0, s1 = a0.sample(rng), a1.sample(rng)
            assert np.real(np.vdot(k, s0 - s1)) >= report.distance - 1e-6
            assert povm_success(report.povm, [(s0, 0), (s1, 1)], [0.5, 0.5]) >= 0.5 + report.distance / 4 - 1e-6
            w = rng.random()
            assert povm_success(report.povm, [(s0, 0), (s1, 1)], [w, 1 - w]) >= report.distance / 2 - 1e-6


def test_separating_operator_on_hulls():
    plus = np.full((2, 2), 0.5)
    k, margin = separating_operator(HullSet([ZERO, plus]), HullSet([ONE]))
    assert spectral_norm(k) <= 1 + 1e-12
    assert margin >= np.sqrt(2) - 1e-6
