import numpy as np
import pytest
from builders import random_prover, random_rounds

from refgame.errors import PreconditionError
from refgame.linalg import SpaceLayout, haar_unitary, spectral_norm
from refgame.sdp import check_solution, solve_sdp
from refgame.transcript import (
    FaceReduction,
    ProverStrategy,
    RoundSequence,
    Transcript,
    build_consistency_system,
    feasible_bound,
    prover_states,
    prover_to_transcript,
    prover_value,
    solve_opt,
    transcript_to_prover,
    trivial_transcript,
)

QUBITS = SpaceLayout([("f", 2), ("g", 2)])


def stacked_residual(system, transcript):
    return system.residual(transcript.stacked())


def direct_value(rounds, prover):
    """||A_r U_r ... U_1 A_0 |0>||^2 with the prover lifted by Kronecker products."""
    d_f, d_g, h = rounds.dim_f, rounds.dim_g, prover.env_dim
    psi = np.zeros(d_f * d_g * h, dtype=complex)
    psi[0] = 1
    lift_a = lambda a: np.kron(a, np.eye(h))  # noqa: E731
    lift_u = lambda u: np.kron(np.eye(d_f), u)  # noqa: E731
    for a, u in zip(rounds.canonical[:-1], prover.unitaries):
        psi = lift_u(u) @ lift_a(a) @ psi
    out = lift_a(rounds.canonical[-1]) @ psi
    return float(np.real(np.vdot(out, out)))


# -- consistency system -------------------------------------------------------


def test_identity_round_pins_the_reduced_state():
    rounds = RoundSequence([np.eye(4), np.eye(4)], QUBITS, ("g",))
    system = build_consistency_system(rounds)
    good = Transcript(rounds, [np.kron(np.diag([1.0, 0]), np.eye(2) / 2)])
    assert stacked_residual(system, good) < 1e-12
    bad = Transcript(rounds, [np.kron(np.diag([0.0, 1]), np.eye(2) / 2)], check=False)
    assert stacked_residual(system, bad) > 0.1


def test_trivial_and_random_transcripts_satisfy_the_system(rng):
    rounds = random_rounds(rng, 2, 2, 2)
    system = build_consistency_system(rounds)
    assert stacked_residual(system, trivial_transcript(rounds)) <= 1e-12
    t = prover_to_transcript(rounds, random_prover(rng, rounds, 3))
    assert stacked_residual(system, t) <= 1e-10
    snaps = list(t.snapshots)
    snaps[0] = np.eye(4) / 4
    assert stacked_residual(system, Transcript(rounds, snaps, check=False)) >= 1e-3


def test_stacked_sdp_agrees_with_reduced_solver(rng):
    rounds = random_rounds(rng, 1, 2, 2)
    problem = build_consistency_system(rounds).to_sdp(1e-7)
    literal = solve_sdp(problem)
    assert check_solution(problem, literal).passed
    reduced = solve_opt(rounds, 1e-7)
    assert abs(literal.objective_value - reduced.value) < 1e-6


# -- bound and trivial transcript -------------------------------------------


def test_feasible_bound_examples(rng):
    rounds = random_rounds(rng, 3, 2, 2)
    assert feasible_bound(rounds) == pytest.approx(1.0)
    doubled = RoundSequence([2 * np.eye(4), np.eye(4)], QUBITS, ("g",))
    assert feasible_bound(doubled) == pytest.approx(4.0)


def test_transcripts_respect_the_norm_bound(rng):
    for _ in range(20):
        rounds = random_rounds(rng, 2, 2, 3)
        t = prover_to_transcript(rounds, random_prover(rng, rounds, 2))
        assert max(spectral_norm(x) for x in t.snapshots) <= feasible_bound(rounds) + 1e-9


def test_trivial_transcript_examples(rng):
    rounds = RoundSequence([np.eye(4)] * 3, QUBITS, ("g",))
    ground = np.zeros((4, 4))
    ground[0, 0] = 1
    assert all(np.allclose(x, ground) for x in trivial_transcript(rounds).snapshots)
    rounds = random_rounds(rng, 2, 2, 2)
    t = trivial_transcript(rounds)
    for x in t.snapshots:
        assert np.isclose(np.trace(x).real, 1) and np.isclose(spectral_norm(x), 1)
    psi = np.zeros(4)
    psi[0] = 1
    for a in rounds.matrices:
        psi = a @ psi
    assert np.isclose(t.value(), np.linalg.norm(psi) ** 2)


def test_transcript_validation(rng):
    rounds = random_rounds(rng, 1, 2, 2)
    with pytest.raises(PreconditionError):
        Transcript(rounds, [])
    with pytest.raises(PreconditionError):
        Transcript(rounds, [-np.eye(4) / 4])
    with pytest.raises(PreconditionError):
        Transcript(rounds, [np.diag([0, 0, 0, 1.0])])  # inconsistent for a generic A_0


# -- solve_opt ----------------------------------------------------------------


def test_solve_opt_examples(rng):
    accept_g = np.kron(np.eye(2), np.diag([0.0, 1.0]))
    rounds = RoundSequence([np.eye(4), accept_g], QUBITS, ("g",))
    assert abs(solve_opt(rounds).value - 1) < 1e-6
    rounds = RoundSequence([haar_unitary(4, rng), np.zeros((4, 4))], QUBITS, ("g",))
    assert abs(solve_opt(rounds).value) < 1e-6
    rounds = RoundSequence([haar_unitary(4, rng), haar_unitary(4, rng), np.eye(4)], QUBITS, ("g",))
    assert abs(solve_opt(rounds).value - 1) < 1e-6
    with pytest.raises(PreconditionError):
        solve_opt(rounds, 0.0)


def test_solve_opt_certificate(rng):
    for _ in range(5):
        rounds = random_rounds(rng, 2, 2, 2)
        sol = solve_opt(rounds, 1e-7)
        assert max(sol.transcript.residuals()) <= 1e-7
        assert sol.value <= sol.upper_bound + 1e-10
        assert sol.upper_bound - sol.value <= 1e-7


def test_zero_rounds_is_direct():
    a = np.diag([0.6, 0.8, 0, 0]).astype(complex)
    sol = solve_opt(RoundSequence([a], QUBITS, ("g",)))
    assert sol.value == pytest.approx(0.36)


def test_contraction_never_increases_the_value(rng):
    for _ in range(5):
        rounds = random_rounds(rng, 1, 2, 2, contraction_last=False)
        shrink = np.diag(rng.uniform(0, 1, 4)) @ haar_unitary(4, rng)
        smaller = RoundSequence(list(rounds.matrices[:-1]) + [shrink @ rounds.matrices[-1]], QUBITS, ("g",))
        assert solve_opt(smaller).value <= solve_opt(rounds).value + 1e-7


def test_random_provers_never_beat_the_optimum(rng):
    for _ in range(5):
        rounds = random_rounds(rng, 2, 2, 2)
        sol = solve_opt(rounds, 1e-7)
        for _ in range(40):
            assert prover_value(rounds, random_prover(rng, rounds, 4)) <= sol.upper_bound + 1e-9
        extracted = transcript_to_prover(rounds, sol.transcript)
        assert prover_value(rounds, extracted) >= sol.value - 1e-7 - 1e-5


def test_face_reduction_contains_every_transcript(rng):
    rounds = random_rounds(rng, 2, 3, 2)
    face = FaceReduction(rounds)
    t = prover_to_transcript(rounds, random_prover(rng, rounds, 2))
    canon = [rounds.to_canonical(x) for x in t.snapshots]
    assert all(np.allclose(b @ y @ b.conj().T, x, atol=1e-10)
               for b, y, x in zip(face.bases[1:], face.restrict(canon), canon))


# -- provers ------------------------------------------------------------------


def test_identity_prover_gives_the_trivial_transcript(rng):
    rounds = random_rounds(rng, 2, 2, 2)
    t = prover_to_transcript(rounds, ProverStrategy([np.eye(2)] * 2, 1))
    assert all(np.allclose(a, b) for a, b in zip(t.snapshots, trivial_transcript(rounds).snapshots))
    back = transcript_to_prover(rounds, trivial_transcript(rounds))
    assert abs(prover_value(rounds, back) - trivial_transcript(rounds).value()) < 1e-8


def test_prover_transcript_value_and_residuals(rng):
    for _ in range(20):
        rounds = random_rounds(rng, 2, 2, 2)
        prover = random_prover(rng, rounds, 3)
        t = prover_to_transcript(rounds, prover)
        assert abs(t.value() - direct_value(rounds, prover)) < 1e-10
        assert max(t.residuals()) <= 1e-10


def test_round_trip_preserves_value(rng):
    for _ in range(20):
        rounds = random_rounds(rng, 2, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        prover = random_prover(rng, rounds, int(rng.integers(1, 4)))
        t = prover_to_transcript(rounds, prover)
        back = transcript_to_prover(rounds, t)
        assert abs(prover_value(rounds, back) - t.value()) < 1e-8
        again = prover_to_transcript(rounds, back)
        assert all(np.allclose(a, b, atol=1e-7) for a, b in zip(t.snapshots, again.snapshots))


def test_prover_shape_errors(rng):
    rounds = random_rounds(rng, 2, 2, 2)
    with pytest.raises(PreconditionError):
        prover_states(rounds, ProverStrategy([np.eye(2)], 1))
    with pytest.raises(PreconditionError):
        RoundSequence([np.eye(3)], QUBITS, ("g",))
    with pytest.raises(PreconditionError):
        RoundSequence([], QUBITS, ("g",))
