import numpy as np
import pytest
from games_zoo import fixed_reject_game, flip_output_qip, identity_qip

from refgame.channels import MixedCircuit
from refgame.errors import PreconditionError
from refgame.games import qip_value, qrg_value_given_yes, yes_value_given_no
from refgame.harness.constructions import (
    build_close_images_verifier,
    flip_qubit_verifier,
    honest_yes_prover,
    leaky_claim_game,
    parallel_repeat,
    random_sqg,
    repeat_prover,
)
from refgame.harness.search import SEED_ENV, RunConfig, saddle_value, search_prover, simulate
from refgame.linalg import haar_unitary, is_unitary
from refgame.transcript import ProverStrategy

ZERO = np.diag([1.0, 0.0]).astype(complex)
ONE = np.diag([0.0, 1.0]).astype(complex)


def random_prover(rng, message_dim, env_dim):
    return ProverStrategy([haar_unitary(message_dim * env_dim, rng)], env_dim)


def test_close_images_yes_value_is_a_half():
    ident = MixedCircuit.identity(2)
    g = build_close_images_verifier(ident, ident)
    yes = honest_yes_prover(g, ZERO, ZERO)
    assert abs(qrg_value_given_yes(g, yes).value - 0.5) < 1e-4


def test_close_images_no_value_near_one():
    g = build_close_images_verifier(MixedCircuit.constant(ZERO, 2), MixedCircuit.constant(ONE, 2))
    d = 2.0
    eps = 1 - (0.5 + d / 4)
    for rho in (ZERO, ONE, np.eye(2) / 2):
        yes = honest_yes_prover(g, rho, rho)
        assert qrg_value_given_yes(g, yes).value >= 1 - eps / 4 - 1e-6


def test_close_images_circuits_respect_roles():
    g = build_close_images_verifier(MixedCircuit.identity(2), MixedCircuit.identity(2))
    assert all(is_unitary(u) for u in g.yes_rounds + g.no_rounds)
    assert g.yes_labels == ("x0", "x1") and g.no_labels == ("y",)
    with pytest.raises(PreconditionError):
        build_close_images_verifier(MixedCircuit.identity(2), MixedCircuit.identity(4))


def test_close_images_with_a_dishonest_yes_prover(rng):
    """Sending different states can only help the no-prover."""
    ident = MixedCircuit.identity(2)
    g = build_close_images_verifier(ident, ident)
    for _ in range(3):
        yes = random_prover(rng, 4, 2)
        assert qrg_value_given_yes(g, yes).value >= 0.5 - 1e-6


def test_repeat_once_changes_nothing(rng):
    g = random_sqg(rng)
    once = parallel_repeat(g, 1)
    for _ in range(3):
        yes = random_prover(rng, 2, 2)
        assert abs(qrg_value_given_yes(once, yes).value - qrg_value_given_yes(g, yes).value) < 1e-8
    assert abs(qip_value(parallel_repeat(flip_qubit_verifier(), 1)).value - 1) < 1e-6


@pytest.mark.parametrize("rule", ["unanimous_accept", "unanimous_reject"])
def test_repeat_with_product_provers_multiplies(rng, rule):
    g = random_sqg(rng)
    yes, no = random_prover(rng, 2, 2), random_prover(rng, 2, 2)
    p = simulate(g, yes, no)
    rep = parallel_repeat(g, 2, rule)
    q = simulate(rep, repeat_prover(yes, 2, 2), repeat_prover(no, 2, 2))
    expected = p**2 if rule == "unanimous_accept" else 1 - (1 - p) ** 2
    assert abs(q - expected) < 1e-9


def test_repeat_qip_multiplies(rng):
    v = flip_output_qip()
    rep = parallel_repeat(v, 3)
    assert abs(simulate(rep, repeat_prover(ProverStrategy([np.eye(2)], 1), 2, 3)) - 1) < 1e-12


def test_repeat_rejects_bad_arguments():
    with pytest.raises(PreconditionError):
        parallel_repeat(flip_qubit_verifier(), 0)
    with pytest.raises(PreconditionError):
        parallel_repeat(flip_qubit_verifier(), 2, "majority")


@pytest.mark.slow
def test_repeated_soundness_is_at_most_squared():
    g = leaky_claim_game(np.pi / 2, np.pi / 2)
    saddle = saddle_value(g, RunConfig(seed=0))
    s = yes_value_given_no(g, saddle.no_prover).value
    rep = parallel_repeat(g, 2, "unanimous_accept")
    assert yes_value_given_no(rep, repeat_prover(saddle.no_prover, 2, 2)).value <= s**2 + 1e-4


def test_simulate_trivial_cases():
    assert simulate(identity_qip(), ProverStrategy([np.eye(2)], 1)) == pytest.approx(0, abs=1e-14)
    assert simulate(flip_output_qip(), ProverStrategy([np.eye(2)], 1)) == pytest.approx(1, abs=1e-14)


def test_simulate_checks_dimensions(rng):
    with pytest.raises(PreconditionError):
        simulate(flip_qubit_verifier(), ProverStrategy([np.eye(2), np.eye(2)], 1))
    with pytest.raises(PreconditionError):
        simulate(fixed_reject_game(0.2), random_prover(rng, 2, 2))


def test_search_finds_the_flip():
    found = search_prover(flip_qubit_verifier(), "prover", RunConfig(seed=0, restarts=20), private_dim=1)
    assert found.value >= 1 - 1e-6


def test_search_is_deterministic(rng):
    g = random_sqg(rng)
    yes = random_prover(rng, 2, 2)
    cfg = RunConfig(seed=11, restarts=3)
    a = search_prover(g, "no", cfg, opponent=yes, private_dim=2)
    b = search_prover(g, "no", cfg, opponent=yes, private_dim=2)
    assert a.value == b.value and a.restart_values == b.restart_values
    assert all(np.array_equal(u, w) for u, w in zip(a.prover.unitaries, b.prover.unitaries))
    c = search_prover(g, "no", RunConfig(seed=12, restarts=3), opponent=yes, private_dim=2)
    assert c.restart_values != a.restart_values


def test_search_role_errors(rng):
    with pytest.raises(PreconditionError):
        search_prover(flip_qubit_verifier(), "yes", RunConfig())
    with pytest.raises(PreconditionError):
        search_prover(random_sqg(rng), "no", RunConfig())
    with pytest.raises(PreconditionError):
        search_prover(random_sqg(rng), "judge", RunConfig(), opponent=random_prover(rng, 2, 2))


@pytest.mark.parametrize("q", [0.2, 0.7])
def test_saddle_of_prover_independent_game(q):
    result = saddle_value(fixed_reject_game(q), RunConfig(seed=0))
    assert abs(result.value - q) < 1e-6


def test_saddle_of_close_images_yes_instance():
    ident = MixedCircuit.identity(2)
    g = build_close_images_verifier(ident, ident)
    result = saddle_value(g, RunConfig(seed=0))
    assert abs(result.value - 0.5) < 1e-3
    assert result.value - result.lower_bound < 1e-5


def test_saddle_value_is_a_certificate(rng):
    g = random_sqg(rng)
    cfg = RunConfig(seed=4)
    result = saddle_value(g, cfg)
    assert abs(qrg_value_given_yes(g, result.yes_prover, cfg.epsilon).value - result.value) < 1e-8
    assert result.value == min(result.history)
    assert result.lower_bound <= result.value + 1e-9
    # fewer sweeps can only leave a looser bracket
    short = saddle_value(g, RunConfig(seed=4, saddle_rounds=2))
    assert short.value >= result.value - 1e-9 and short.lower_bound <= result.value + 1e-9
    # no no-prover does better than the certified worst case
    assert 1 - simulate(g, result.yes_prover, result.no_prover) <= result.value + 1e-6


def test_run_config_seed_precedence(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert RunConfig.resolve().seed == 0
    monkeypatch.setenv(SEED_ENV, "17")
    assert RunConfig.resolve().seed == 17
    assert RunConfig.resolve(5).seed == 5
    assert RunConfig.resolve(5, restarts=3).restarts == 3
    monkeypatch.setenv(SEED_ENV, "x")
    with pytest.raises(PreconditionError):
        RunConfig.resolve()
