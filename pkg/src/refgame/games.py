"""Verifier descriptions and the values of games against fixed opponents.

Factors of a verifier's layout carry roles:

* ``M`` and ``V`` for a one-prover proof system (message and private space);
* ``M_Y``, ``V`` and ``M_N`` for a two-prover game (yes-prover messages,
  verifier private space, no-prover messages).

Provers keep private spaces ``Y`` and ``N`` that the verifier never touches.
The output qubit is a ``V`` factor; ``|1>`` means accept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalFailure, PreconditionError
from .linalg import SpaceLayout, as_unitary, embed_lift, ground_and_projectors
from .sdp import STATUS_FAILURE, RealSdp, blocks_to_vec, solve_real_sdp
from .transcript import (
    FaceReduction,
    OptSolution,
    ProverStrategy,
    RoundSequence,
    Transcript,
    feasible_bound,
    solve_opt,
    transcript_to_prover,
    trivial_transcript,
)

ROLE_MESSAGE = "M"
ROLE_PRIVATE = "V"
ROLE_YES_MESSAGE = "M_Y"
ROLE_NO_MESSAGE = "M_N"
YES_SPACE = "Y"
NO_SPACE = "N"
PROVER_SPACE = "P"


def _check_roles(layout: SpaceLayout, roles: dict, allowed: set, output: str):
    for label in layout.labels:
        if roles.get(label) not in allowed:
            raise PreconditionError(f"factor {label!r} has role {roles.get(label)!r}; allowed {sorted(allowed)}")
    if roles.get(output) != ROLE_PRIVATE:
        raise PreconditionError(f"output factor {output!r} must be private to the verifier")
    if layout.dim_of(output) != 2:
        raise PreconditionError("the output factor must be a qubit")


@dataclass(frozen=True, eq=False)
class QipVerifier:
    """One-prover verifier: unitaries ``V_0..V_r`` on message and private factors."""

    layout: SpaceLayout
    roles: dict
    output: str
    rounds: tuple

    def __post_init__(self):
        _check_roles(self.layout, self.roles, {ROLE_MESSAGE, ROLE_PRIVATE}, self.output)
        object.__setattr__(self, "rounds", tuple(as_unitary(u) for u in self.rounds))
        d = self.layout.total_dim
        if any(u.shape != (d, d) for u in self.rounds):
            raise PreconditionError("every round must act on the whole verifier layout")
        if not self.message_labels:
            raise PreconditionError("a proof system needs a message factor")

    @property
    def r(self) -> int:
        return len(self.rounds) - 1

    @property
    def message_labels(self) -> tuple:
        return tuple(label for label in self.layout.labels if self.roles[label] == ROLE_MESSAGE)

    def projectors(self):
        return ground_and_projectors(self.layout, self.output)

    def round_sequence(self) -> RoundSequence:
        _, accept, _ = self.projectors()
        mats = list(self.rounds[:-1]) + [accept @ self.rounds[-1]]
        return RoundSequence(mats, self.layout, self.message_labels)


def qip_value(verifier: QipVerifier, epsilon: float = 1e-7) -> OptSolution:
    """Maximum acceptance probability over all provers."""
    return solve_opt(verifier.round_sequence(), epsilon)


@dataclass(frozen=True, eq=False)
class DqipVerifier:
    """Two-prover verifier with the yes-prover moving first.

    ``yes_rounds`` are ``V_0..V_{r1}`` (the yes-prover acts between them);
    ``no_rounds`` are ``W_1..W_{r2}`` (the no-prover acts before each).
    A short game has ``r1 = r2 = 1``.
    """

    layout: SpaceLayout
    roles: dict
    output: str
    yes_rounds: tuple
    no_rounds: tuple

    def __post_init__(self):
        _check_roles(self.layout, self.roles, {ROLE_YES_MESSAGE, ROLE_PRIVATE, ROLE_NO_MESSAGE}, self.output)
        object.__setattr__(self, "yes_rounds", tuple(as_unitary(u) for u in self.yes_rounds))
        object.__setattr__(self, "no_rounds", tuple(as_unitary(u) for u in self.no_rounds))
        d = self.layout.total_dim
        if any(u.shape != (d, d) for u in self.yes_rounds + self.no_rounds):
            raise PreconditionError("every round must act on the whole verifier layout")
        if not self.yes_rounds or not self.no_rounds:
            raise PreconditionError("need at least V_0 and W_1")
        if not self.yes_labels or not self.no_labels:
            raise PreconditionError("both provers need a message factor")

    @property
    def r1(self) -> int:
        return len(self.yes_rounds) - 1

    @property
    def r2(self) -> int:
        return len(self.no_rounds)

    @property
    def yes_labels(self) -> tuple:
        return tuple(label for label in self.layout.labels if self.roles[label] == ROLE_YES_MESSAGE)

    @property
    def no_labels(self) -> tuple:
        return tuple(label for label in self.layout.labels if self.roles[label] == ROLE_NO_MESSAGE)

    def projectors(self):
        return ground_and_projectors(self.layout, self.output)

    def yes_sequence(self) -> RoundSequence:
        """Rounds whose consistent transcripts are the yes-prover's snapshots.

        The final operator is the identity; only the consistency of
        ``X_1..X_{r1}`` matters.
        """
        mats = list(self.yes_rounds[:-1]) + [np.eye(self.layout.total_dim)]
        return RoundSequence(mats, self.layout, self.yes_labels)

    def no_sequence(self, yes_prover: ProverStrategy, *, reject: bool = True) -> RoundSequence:
        """The one-prover system the no-prover faces once the yes-prover is fixed.

        The yes-prover's private space becomes a verifier factor ``Y``. The
        last operator projects onto rejection (or acceptance).
        """
        if len(yes_prover.unitaries) != self.r1:
            raise PreconditionError(f"yes-prover has {len(yes_prover.unitaries)} moves, game has {self.r1}")
        layout = self.layout + SpaceLayout([(YES_SPACE, yes_prover.env_dim)])
        lift = lambda u: embed_lift(u, list(self.layout.labels), layout)  # noqa: E731
        yes_acting = list(self.yes_labels) + [YES_SPACE]
        c = lift(self.yes_rounds[0])
        for v, y in zip(self.yes_rounds[1:], yes_prover.unitaries):
            c = lift(v) @ embed_lift(y, yes_acting, layout) @ c
        _, accept, rejectp = self.projectors()
        final = lift(rejectp if reject else accept)
        mats = [c] + [lift(w) for w in self.no_rounds]
        mats[-1] = final @ mats[-1]
        return RoundSequence(mats, layout, self.no_labels)

    def yes_against(self, no_prover: ProverStrategy, *, accept: bool = True) -> RoundSequence:
        """The one-prover system the yes-prover faces once the no-prover is fixed."""
        if len(no_prover.unitaries) != self.r2:
            raise PreconditionError(f"no-prover has {len(no_prover.unitaries)} moves, game has {self.r2}")
        layout = self.layout + SpaceLayout([(NO_SPACE, no_prover.env_dim)])
        lift = lambda u: embed_lift(u, list(self.layout.labels), layout)  # noqa: E731
        no_acting = list(self.no_labels) + [NO_SPACE]
        tail = lift(self.yes_rounds[-1])
        for w, n in zip(self.no_rounds, no_prover.unitaries):
            tail = lift(w) @ embed_lift(n, no_acting, layout) @ tail
        _, acceptp, rejectp = self.projectors()
        tail = lift(acceptp if accept else rejectp) @ tail
        mats = [lift(v) for v in self.yes_rounds[:-1]] + [tail]
        return RoundSequence(mats, layout, self.yes_labels)

    def interaction_dim(self) -> int:
        return self.layout.total_dim


def qrg_value_given_yes(verifier: DqipVerifier, yes_prover: ProverStrategy, epsilon: float = 1e-7) -> OptSolution:
    """Largest rejection probability any no-prover achieves against ``yes_prover``."""
    return solve_opt(verifier.no_sequence(yes_prover), epsilon)


def yes_value_given_no(verifier: DqipVerifier, no_prover: ProverStrategy, epsilon: float = 1e-7) -> OptSolution:
    """Largest acceptance probability any yes-prover achieves against ``no_prover``."""
    return solve_opt(verifier.yes_against(no_prover), epsilon)


def final_operator(verifier: DqipVerifier, no_prover: ProverStrategy, *, accept: bool = False) -> np.ndarray:
    """``E = Pi W_{r2} N_{r2} ... W_1 N_1 V_{r1} (I (x) |0>_N)`` for a fixed no-prover.

    ``<E*E, X>`` is the rejection (or acceptance) probability when the
    yes-prover's final snapshot is ``X``.
    """
    layout = verifier.layout + SpaceLayout([(NO_SPACE, no_prover.env_dim)])
    lift = lambda u: embed_lift(u, list(verifier.layout.labels), layout)  # noqa: E731
    acting = list(verifier.no_labels) + [NO_SPACE]
    op = lift(verifier.yes_rounds[-1])
    for w, n in zip(verifier.no_rounds, no_prover.unitaries):
        op = lift(w) @ embed_lift(n, acting, layout) @ op
    _, acceptp, rejectp = verifier.projectors()
    op = lift(acceptp if accept else rejectp) @ op
    return op[:, :: no_prover.env_dim]


@dataclass
class PoolSolution:
    value: float
    upper_bound: float
    transcript: Transcript
    yes_prover: ProverStrategy


def yes_value_against_pool(verifier: DqipVerifier, no_provers: Sequence[ProverStrategy],
                           epsilon: float = 1e-7) -> PoolSolution:
    """Best yes-prover when the no-prover will be the worst of ``no_provers`` for it.

    Maximises ``t`` subject to ``<E_j* E_j, X_{r1}> >= t`` for every listed
    no-prover, over consistent yes-transcripts. This is one SDP: ``t`` and the
    slacks are extra 1x1 blocks.
    """
    if not no_provers:
        raise PreconditionError("need at least one no-prover")
    rounds = verifier.yes_sequence()
    face = FaceReduction(rounds, scaled=True)
    amat, rhs = face.constraint_rows()
    n_face = amat.shape[1]
    m = len(no_provers)
    zeros = [np.zeros((verifier.layout.total_dim,) * 2, dtype=complex)] * (rounds.r - 1)
    funcs = []
    for no in no_provers:
        e = final_operator(verifier, no, accept=True)
        funcs.append(blocks_to_vec(face.pullback(zeros + [rounds.to_canonical(e.conj().T @ e)])))
    rows = [np.hstack([amat, np.zeros((amat.shape[0], 1 + m))])]
    for j, f in enumerate(funcs):
        slack = np.zeros(m)
        slack[j] = -1.0
        rows.append(np.concatenate([f, [-1.0], slack])[None, :])
    objective = np.zeros(n_face + 1 + m)
    objective[n_face] = 1.0
    x_face = blocks_to_vec(face.restrict([rounds.to_canonical(x) for x in trivial_transcript(rounds).snapshots]))
    x_init = np.concatenate([x_face, [0.0], [f @ x_face for f in funcs]])
    problem = RealSdp(face.block_dims + (1,) * (1 + m), np.vstack(rows), np.concatenate([rhs, np.zeros(m)]),
                      objective, max(1.0, feasible_bound(rounds) * face.norm_factor()), epsilon, x_init)
    sol = solve_real_sdp(problem)
    if sol.status == STATUS_FAILURE:
        raise NumericalFailure("pool SDP failed", {"status": sol.status, **sol.diagnostics})
    snaps = [rounds.from_canonical(x) for x in face.expand(sol.blocks[: len(face.block_dims)])]
    transcript = Transcript(rounds, snaps)
    return PoolSolution(sol.objective_value, sol.dual_bound, transcript, transcript_to_prover(rounds, transcript))


def interleaved_no_value(rounds: Sequence[np.ndarray], yes_moves: Sequence[np.ndarray], layout: SpaceLayout,
                         no_labels: Sequence[str], output: str, epsilon: float = 1e-7) -> OptSolution:
    """No-prover optimum for a game where both provers move every round.

    ``rounds`` are ``V_0..V_r`` and ``yes_moves`` the yes-prover's unitaries
    ``Y_1..Y_r``, all given on ``layout`` (which must already include the
    yes-prover's private space). The no-prover faces the operators
    ``V_0, V_1 Y_1, ..., V_{r-1} Y_{r-1}`` and then ``Pi_reject V_r Y_r``.
    """
    if len(yes_moves) != len(rounds) - 1:
        raise PreconditionError("need one yes-prover move between consecutive verifier rounds")
    _, _, rejectp = ground_and_projectors(layout, output)
    mats = [np.asarray(rounds[0])] + [np.asarray(v) @ np.asarray(y) for v, y in zip(rounds[1:], yes_moves)]
    mats[-1] = rejectp @ mats[-1]
    return solve_opt(RoundSequence(mats, layout, no_labels), epsilon)
