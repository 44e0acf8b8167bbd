"""Concrete verifiers: the close-images game, parallel repetition and small test games."""

from __future__ import annotations

from itertools import product

import numpy as np

from ..channels import MixedCircuit
from ..errors import PreconditionError
from ..games import (
    ROLE_MESSAGE,
    ROLE_NO_MESSAGE,
    ROLE_PRIVATE,
    ROLE_YES_MESSAGE,
    DqipVerifier,
    QipVerifier,
)
from ..linalg import SpaceLayout, embed_lift, haar_unitary, permute_operator, purify, unitary_from_isometry
from ..transcript import ProverStrategy

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _padded_stinespring(channel: MixedCircuit, env_dim: int) -> np.ndarray:
    """The channel's unitary on ``in, out, env`` with the environment enlarged to ``env_dim``.

    The original unitary acts on environment indices below the channel's own
    environment size; everything else is left alone.
    """
    d_in, d_out, e = channel.in_dim, channel.out_dim, channel.env_dim
    size = d_in * d_out * env_dim
    out = np.eye(size, dtype=complex)
    idx = [(f * d_out + g) * env_dim + k for f, g, k in product(range(d_in), range(d_out), range(e))]
    out[np.ix_(idx, idx)] = channel.unitary
    return out


def build_close_images_verifier(q0: MixedCircuit, q1: MixedCircuit) -> DqipVerifier:
    """Short game in which the yes-prover claims two channels have overlapping images.

    The yes-prover sends inputs in registers ``x0`` and ``x1``. The verifier
    flips a coin, runs the chosen channel on its input, and hands the output
    register ``y`` to the no-prover, who must guess the coin from it. The
    verifier accepts iff the guess (the first qubit of ``y``) is wrong. With
    intersecting images the yes-prover can hold the no-prover to a fair coin;
    with far-apart images the no-prover wins almost surely.
    """
    if q0.in_dim != q1.in_dim or q0.out_dim != q1.out_dim:
        raise PreconditionError("both channels must have the same input and output dimensions")
    if q0.out_dim % 2:
        raise PreconditionError("the output dimension must be even so its first qubit can carry a guess")
    d_in, d_out = q0.in_dim, q0.out_dim
    env = max(q0.env_dim, q1.env_dim)
    layout = SpaceLayout([("x0", d_in), ("x1", d_in), ("coin", 2), ("env", env), ("out", 2), ("y", d_out)])
    roles = {"x0": ROLE_YES_MESSAGE, "x1": ROLE_YES_MESSAGE, "coin": ROLE_PRIVATE, "env": ROLE_PRIVATE,
             "out": ROLE_PRIVATE, "y": ROLE_NO_MESSAGE}
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    run0 = embed_lift(p0, ["coin"], layout) @ embed_lift(_padded_stinespring(q0, env), ["x0", "y", "env"], layout)
    run1 = embed_lift(p1, ["coin"], layout) @ embed_lift(_padded_stinespring(q1, env), ["x1", "y", "env"], layout)
    v1 = (run0 + run1) @ embed_lift(HADAMARD, ["coin"], layout)
    # out ^= coin ^ guess, with the guess read from the first qubit of y
    perm = np.zeros((2 * 2 * d_out,) * 2)
    for c, o, k in product(range(2), range(2), range(d_out)):
        guess = int(k >= d_out // 2)
        perm[(c * 2 + (o ^ c ^ guess)) * d_out + k, (c * 2 + o) * d_out + k] = 1.0
    w1 = embed_lift(perm, ["coin", "out", "y"], layout)
    return DqipVerifier(layout, roles, "out", (np.eye(layout.total_dim), v1), (w1,))


def honest_yes_prover(verifier: DqipVerifier, rho0, rho1) -> ProverStrategy:
    """Yes-prover for the close-images game that sends ``rho0`` and ``rho1``.

    Mixed inputs are purified into the prover's private space.
    """
    d_in = verifier.layout.dim_of("x0")
    e0 = max(1, int(np.sum(np.linalg.eigvalsh(rho0) > 1e-12)))
    e1 = max(1, int(np.sum(np.linalg.eigvalsh(rho1) > 1e-12)))
    psi0 = purify(rho0, e0).reshape(d_in, e0)
    psi1 = purify(rho1, e1).reshape(d_in, e1)
    state = np.einsum("ab,cd->acbd", psi0, psi1).reshape(-1)  # x0, x1, y0, y1
    unitary = unitary_from_isometry(state[:, None])
    return ProverStrategy([unitary], e0 * e1)


def _vote_unitary(k: int, rule: str) -> np.ndarray:
    if rule not in ("unanimous_accept", "unanimous_reject"):
        raise PreconditionError(f"unknown vote rule {rule!r}")
    dim = 2 ** (k + 1)
    out = np.zeros((dim, dim))
    for bits in product(range(2), repeat=k):
        vote = int(all(bits)) if rule == "unanimous_accept" else int(any(bits))
        for f in range(2):
            src = int("".join(map(str, bits)) + str(f), 2)
            dst = int("".join(map(str, bits)) + str(f ^ vote), 2)
            out[dst, src] = 1.0
    return out


def _repeated_layout(layout: SpaceLayout, roles: dict, k: int, group_order):
    factors, new_roles = [], {}
    for role in group_order:
        for j in range(k):
            for label in layout.labels:
                if roles[label] == role:
                    factors.append((f"{label}#{j}", layout.dim_of(label)))
                    new_roles[f"{label}#{j}"] = role
        if role == ROLE_PRIVATE:
            factors.append(("vote", 2))
            new_roles["vote"] = ROLE_PRIVATE
    return SpaceLayout(factors), new_roles


def _tensor_power(op, layout: SpaceLayout, new_layout: SpaceLayout, k: int) -> np.ndarray:
    out = np.eye(new_layout.total_dim, dtype=complex)
    for j in range(k):
        out = embed_lift(op, [f"{label}#{j}" for label in layout.labels], new_layout) @ out
    return out


def parallel_repeat(verifier, k: int, rule: str = "unanimous_accept"):
    """Run ``k`` copies side by side and decide by a unanimous vote.

    ``unanimous_accept`` accepts only if every copy accepts;
    ``unanimous_reject`` rejects only if every copy rejects. The vote is
    written into a fresh output qubit after the last round.
    """
    if k < 1:
        raise PreconditionError("k must be at least 1")
    vote = _vote_unitary(k, rule)
    if isinstance(verifier, QipVerifier):
        order = (ROLE_MESSAGE, ROLE_PRIVATE)
    elif isinstance(verifier, DqipVerifier):
        order = (ROLE_YES_MESSAGE, ROLE_PRIVATE, ROLE_NO_MESSAGE)
    else:
        raise PreconditionError("expected a QipVerifier or DqipVerifier")
    new_layout, new_roles = _repeated_layout(verifier.layout, verifier.roles, k, order)
    vote_op = embed_lift(vote, [f"{verifier.output}#{j}" for j in range(k)] + ["vote"], new_layout)
    power = lambda op: _tensor_power(op, verifier.layout, new_layout, k)  # noqa: E731
    if isinstance(verifier, QipVerifier):
        rounds = [power(v) for v in verifier.rounds]
        rounds[-1] = vote_op @ rounds[-1]
        return QipVerifier(new_layout, new_roles, "vote", tuple(rounds))
    yes = tuple(power(v) for v in verifier.yes_rounds)
    no = [power(w) for w in verifier.no_rounds]
    no[-1] = vote_op @ no[-1]
    return DqipVerifier(new_layout, new_roles, "vote", yes, tuple(no))


def repeat_prover(prover: ProverStrategy, message_dim: int, k: int) -> ProverStrategy:
    """``k`` independent copies of a prover, regrouped as messages then environments."""
    h = prover.env_dim
    dims = [message_dim, h] * k
    perm = [2 * j for j in range(k)] + [2 * j + 1 for j in range(k)]
    unitaries = []
    for u in prover.unitaries:
        big = np.eye(1, dtype=complex)
        for _ in range(k):
            big = np.kron(big, u)
        unitaries.append(permute_operator(big, dims, perm))
    return ProverStrategy(unitaries, h**k)


def flip_qubit_verifier() -> QipVerifier:
    """One-round proof system accepting iff the prover returns ``|1>`` in the message qubit."""
    layout = SpaceLayout([("m", 2), ("out", 2)])
    roles = {"m": ROLE_MESSAGE, "out": ROLE_PRIVATE}
    cnot = embed_lift(np.kron(np.diag([1, 0]), np.eye(2)) + np.kron(np.diag([0, 1]), PAULI_X), ["m", "out"], layout)
    return QipVerifier(layout, roles, "out", (np.eye(4), cnot))


def _rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _controlled(u, control: str, target: str, layout: SpaceLayout) -> np.ndarray:
    op = np.kron(np.diag([1.0, 0.0]), np.eye(2)) + np.kron(np.diag([0.0, 1.0]), u)
    return embed_lift(op, [control, target], layout)


SQG_LAYOUT = SpaceLayout([("my", 2), ("out", 2), ("mn", 2)])
SQG_ROLES = {"my": ROLE_YES_MESSAGE, "out": ROLE_PRIVATE, "mn": ROLE_NO_MESSAGE}


def leaky_claim_game(leak: float, phi: float) -> DqipVerifier:
    """Qubit game in which the yes-prover's claim leaks to the no-prover.

    The yes-prover's qubit is copied into the output, and a rotation by
    ``leak`` controlled on it is applied to the no-prover's register. The
    no-prover's reply then rotates the output by ``phi``. With ``leak = 0``
    and small ``phi`` the yes-prover wins; large angles favour the no-prover.
    """
    layout = SQG_LAYOUT
    v1 = _controlled(_rotation_y(leak), "my", "mn", layout) @ _controlled(PAULI_X, "my", "out", layout)
    w1 = _controlled(_rotation_y(phi), "mn", "out", layout)
    return DqipVerifier(layout, dict(SQG_ROLES), "out", (np.eye(layout.total_dim), v1), (w1,))


def random_sqg(rng: np.random.Generator) -> DqipVerifier:
    """Two-prover game on three qubits with Haar-random verifier rounds."""
    dim = SQG_LAYOUT.total_dim
    return DqipVerifier(SQG_LAYOUT, dict(SQG_ROLES), "out", (np.eye(dim), haar_unitary(dim, rng)),
                        (haar_unitary(dim, rng),))
