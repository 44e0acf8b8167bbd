import numpy as np
import pytest
from builders import random_qip
from games_zoo import (
    GAME_LAYOUT,
    fixed_accept_qip,
    fixed_reject_game,
    flip_output_qip,
    handover_game,
    identity_qip,
)

from refgame.errors import PreconditionError
from refgame.games import (
    ROLE_MESSAGE,
    ROLE_PRIVATE,
    NO_SPACE,
    YES_SPACE,
    DqipVerifier,
    QipVerifier,
    interleaved_no_value,
    qip_value,
    qrg_value_given_yes,
    yes_value_against_pool,
    yes_value_given_no,
)
from refgame.harness.constructions import flip_qubit_verifier, random_sqg
from refgame.harness.search import RunConfig, search_prover, simulate
from refgame.linalg import SpaceLayout, embed_lift, haar_unitary
from refgame.transcript import ProverStrategy, prover_value

FAST = RunConfig(seed=3, restarts=8)


def random_prover(rng, message_dim, env_dim, rounds=1):
    return ProverStrategy([haar_unitary(message_dim * env_dim, rng) for _ in range(rounds)], env_dim)


def test_qip_value_examples():
    assert abs(qip_value(flip_qubit_verifier()).value - 1) < 1e-6
    assert abs(qip_value(fixed_accept_qip(0.3)).value - 0.3) < 1e-6


def test_qip_value_matches_search(rng):
    for _ in range(3):
        v = random_qip(rng)
        assert abs(qip_value(v).value - search_prover(v, "prover", FAST).value) < 1e-4


def test_two_round_qip_matches_search(rng):
    v = random_qip(rng, rounds=2)
    assert abs(qip_value(v).value - search_prover(v, "prover", FAST, private_dim=2).value) < 1e-4


def test_simulate_examples(rng):
    nobody = ProverStrategy([np.eye(2)], 1)
    assert simulate(identity_qip(), nobody) == pytest.approx(0.0)
    assert simulate(flip_output_qip(), nobody) == pytest.approx(1.0)


def test_simulate_matches_transcript_pipeline(rng):
    for _ in range(10):
        v = random_qip(rng, rounds=2)
        p = random_prover(rng, 2, 3, rounds=2)
        assert abs(simulate(v, p) - prover_value(v.round_sequence(), p)) < 1e-10
    for _ in range(10):
        g = random_sqg(rng)
        y, n = random_prover(rng, 2, 2), random_prover(rng, 2, 3)
        rejection = prover_value(g.no_sequence(y), n)
        acceptance = prover_value(g.yes_against(n), y)
        assert abs(simulate(g, y, n) - (1 - rejection)) < 1e-10
        assert abs(simulate(g, y, n) - acceptance) < 1e-10


def test_qrg_value_examples(rng):
    for q in (0.0, 0.25, 0.9):
        g = fixed_reject_game(q)
        for _ in range(3):
            assert abs(qrg_value_given_yes(g, random_prover(rng, 2, 2)).value - q) < 1e-6
    g = handover_game()
    assert abs(qrg_value_given_yes(g, random_prover(rng, 2, 2)).value - 1) < 1e-6


def test_qrg_value_matches_no_prover_search(rng):
    for _ in range(1):
        g = random_sqg(rng)
        y = random_prover(rng, 2, 2)
        exact = qrg_value_given_yes(g, y).value
        found = search_prover(g, "no", FAST, opponent=y, private_dim=2).value
        assert abs(exact - found) < 1e-4
        n = random_prover(rng, 2, 2)
        assert abs(yes_value_given_no(g, n).value - search_prover(g, "yes", FAST, opponent=n, private_dim=2).value) < 1e-4


def test_interleaved_no_value_reduces_to_the_short_game(rng):
    g = random_sqg(rng)
    y = random_prover(rng, 2, 2)
    layout = g.layout + SpaceLayout([(YES_SPACE, 2)])
    lift = lambda u: embed_lift(u, list(g.layout.labels), layout)  # noqa: E731
    ymove = embed_lift(y.unitaries[0], ["my", YES_SPACE], layout)
    rounds = [lift(g.yes_rounds[0]), lift(g.yes_rounds[1]), lift(g.no_rounds[0])]
    moves = [ymove, np.eye(layout.total_dim)]
    value = interleaved_no_value(rounds, moves, layout, ["mn"], "out").value
    # the general form also lets the no-prover move before the yes-prover, so it can only do better
    assert value >= qrg_value_given_yes(g, y).value - 1e-6
    with pytest.raises(PreconditionError):
        interleaved_no_value(rounds, [], layout, ["mn"], "out")


def test_interleaved_no_value_with_trivial_yes_prover():
    g = handover_game()
    layout = g.layout + SpaceLayout([(YES_SPACE, 1)])
    lift = lambda u: embed_lift(u, list(g.layout.labels), layout)  # noqa: E731
    rounds = [lift(g.yes_rounds[1]), lift(g.no_rounds[0])]
    assert abs(interleaved_no_value(rounds, [np.eye(layout.total_dim)], layout, ["mn"], "out").value - 1) < 1e-6


def test_role_validation():
    lay = SpaceLayout([("m", 2), ("out", 2)])
    with pytest.raises(PreconditionError):
        QipVerifier(lay, {"m": ROLE_MESSAGE, "out": ROLE_MESSAGE}, "out", (np.eye(4), np.eye(4)))
    with pytest.raises(PreconditionError):
        QipVerifier(lay, {"m": ROLE_MESSAGE, "out": "bogus"}, "out", (np.eye(4), np.eye(4)))
    with pytest.raises(PreconditionError):
        QipVerifier(lay, {"m": ROLE_PRIVATE, "out": ROLE_PRIVATE}, "out", (np.eye(4), np.eye(4)))
    with pytest.raises(PreconditionError):
        QipVerifier(lay, {"m": ROLE_MESSAGE, "out": ROLE_PRIVATE}, "out", (np.eye(4), np.diag([1, 1, 1, 0.5])))
    d = GAME_LAYOUT.total_dim
    with pytest.raises(PreconditionError):
        DqipVerifier(GAME_LAYOUT, {"my": ROLE_PRIVATE, "out": ROLE_PRIVATE, "mn": ROLE_PRIVATE}, "out",
                     (np.eye(d), np.eye(d)), (np.eye(d),))


def test_prover_round_count_is_checked(rng):
    g = random_sqg(rng)
    with pytest.raises(PreconditionError):
        g.no_sequence(ProverStrategy([], 1))
    with pytest.raises(PreconditionError):
        g.yes_against(ProverStrategy([np.eye(2), np.eye(2)], 1))
    assert NO_SPACE in g.yes_against(ProverStrategy([np.eye(2)], 1)).layout.labels


def test_pool_of_one_matches_the_single_best_response(rng):
    g = random_sqg(rng)
    no = random_prover(rng, 2, 2)
    pool = yes_value_against_pool(g, [no])
    assert abs(pool.value - yes_value_given_no(g, no).value) < 1e-6
    assert pool.upper_bound >= pool.value - 1e-9
    # the extracted yes-prover realises the value
    assert abs(simulate(g, pool.yes_prover, no) - pool.value) < 1e-6


def test_pool_value_is_the_worst_member(rng):
    g = random_sqg(rng)
    pool = [random_prover(rng, 2, 2) for _ in range(3)]
    sol = yes_value_against_pool(g, pool)
    worst = min(simulate(g, sol.yes_prover, no) for no in pool)
    assert abs(worst - sol.value) < 1e-6
    assert sol.value <= min(yes_value_given_no(g, no).value for no in pool) + 1e-6
    # random yes-provers never beat it
    for _ in range(10):
        y = random_prover(rng, 2, 2)
        assert min(simulate(g, y, no) for no in pool) <= sol.upper_bound + 1e-9
