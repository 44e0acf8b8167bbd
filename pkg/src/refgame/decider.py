"""Deciding two-prover games with the ellipsoid method.

The yes-prover wins at level ``c`` when some transcript it can produce keeps
every no-prover's rejection probability at most ``c``. The set of such
transcripts is convex; a separation oracle for it needs one transcript SDP per
query. The ellipsoid method then either finds a winning transcript (accept) or
shrinks below the volume any winning set would have (reject).

The search runs in orthonormal coordinates of the affine set of consistent
yes-transcripts, restricted to the subspace every such transcript occupies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .ellipsoid import Cut, Feasible, ellipsoid_search
from .errors import PreconditionError
from .games import DqipVerifier, final_operator
from .linalg import TOL_PSD, round_to_bits, spectral_norm
from .sdp import blocks_to_vec, vec_to_blocks
from .transcript import FaceReduction, ProverStrategy, Transcript, _tr_g, solve_opt, transcript_to_prover


@dataclass(frozen=True)
class WinSet:
    """Consistent yes-transcripts whose worst-case rejection is at most ``c``."""

    verifier: DqipVerifier
    c: float

    @property
    def block_dim(self) -> int:
        return self.verifier.layout.total_dim

    @property
    def stacked_dim(self) -> int:
        return (self.verifier.r1 + 1) * self.block_dim


@dataclass
class Hyperplane:
    """``<normal, Z> < <normal, x> + epsilon`` for every ``Z`` in the set."""

    normal: list  # one Hermitian matrix per snapshot X_1..X_r1 (X_0 carries no weight)
    case: str
    objective: float
    level: float


@dataclass
class NearFeasible:
    objective: float
    yes_prover: ProverStrategy


def no_prover_operator(verifier: DqipVerifier, no_prover: ProverStrategy) -> np.ndarray:
    """``E = D (I (x) |0>_N)`` where ``D`` is the no-prover's rejection map after ``V_{r1}``.

    ``<E*E, X>`` is the rejection probability on a final yes-transcript ``X``.
    """
    return final_operator(verifier, no_prover, accept=False)


def sep_oracle(win: WinSet, snapshots, epsilon: float, *, precision_bits: int | None = None):
    """Separation oracle for the winning set at a consistent point.

    ``snapshots`` are ``X_1..X_{r1}`` on the verifier layout. Returns a
    :class:`Hyperplane` or :class:`NearFeasible`.
    """
    verifier = win.verifier
    for k, x in enumerate(snapshots):
        lam, vec = np.linalg.eigh((x + x.conj().T) / 2)
        if lam[0] < -TOL_PSD:
            normal = [np.zeros_like(y) for y in snapshots]
            u = vec[:, 0]
            normal[k] = -np.outer(u, u.conj())
            return Hyperplane(normal, "psd_cut", float(lam[0]), 0.0)

    yes_rounds = verifier.yes_sequence()
    transcript = Transcript(yes_rounds, snapshots, check=False)
    yes_prover = transcript_to_prover(yes_rounds, transcript)
    if precision_bits is not None:
        yes_prover = ProverStrategy([round_to_bits(u, precision_bits) for u in yes_prover.unitaries],
                                    yes_prover.env_dim)
    no_rounds = verifier.no_sequence(yes_prover)
    sol = solve_opt(no_rounds, epsilon / 2)
    if sol.value <= win.c:
        return NearFeasible(sol.value, yes_prover)
    no_prover = transcript_to_prover(no_rounds, sol.transcript)
    e = no_prover_operator(verifier, no_prover)
    dd = e.conj().T @ e
    scale = spectral_norm(dd)
    normal = [np.zeros_like(y) for y in snapshots]
    normal[-1] = dd / scale
    return Hyperplane(normal, "win_cut", sol.value, win.c / scale)


class YesTranscriptSpace:
    """Affine coordinates for consistent yes-transcripts.

    Points are ``x(z) = centre + basis @ z`` in the real coordinates of the
    reduced snapshot blocks. The centre is the transcript of a yes-prover that
    replaces every message with the maximally mixed state; it has full support
    on the reduced subspaces.
    """

    def __init__(self, verifier: DqipVerifier):
        self.verifier = verifier
        self.rounds = verifier.yes_sequence()
        self.face = FaceReduction(self.rounds)
        amat, rhs = self.face.constraint_rows()
        self.centre = blocks_to_vec(self.face.restrict(self._mixing_transcript()))
        n_coords = self.centre.size
        if amat.shape[0]:
            self.basis = sla.null_space(amat, rcond=1e-10)
            self.offset_error = float(np.max(np.abs(amat @ self.centre - rhs), initial=0.0))
        else:
            self.basis = np.eye(n_coords)
            self.offset_error = 0.0

    def _mixing_transcript(self):
        rd = self.rounds
        d_f, d_g = rd.dim_f, rd.dim_g
        x = np.zeros((d_f * d_g,) * 2, dtype=complex)
        x[0, 0] = 1.0
        out = []
        for a in rd.canonical[:-1]:
            sigma = _tr_g(a @ x @ a.conj().T, d_f, d_g)
            x = np.kron(sigma, np.eye(d_g) / d_g)
            out.append(x)
        return out

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def snapshots(self, z) -> list:
        vec = self.centre + self.basis @ z
        blocks = vec_to_blocks(vec, self.face.block_dims)
        return [self.rounds.from_canonical(x) for x in self.face.expand(blocks)]

    def gradient(self, normal) -> np.ndarray:
        reduced = self.face.pullback([self.rounds.to_canonical(h) for h in normal])
        return self.basis.T @ blocks_to_vec(reduced)


@dataclass
class Decision:
    accept: bool
    iterations: int
    cap: int
    log: list
    witness: ProverStrategy | None = None
    parameters: dict = field(default_factory=dict)


def decide_dqip(verifier: DqipVerifier, c: float, s: float, *, deep_cut: bool = False,
                precision_bits: int | None = None, max_iter: int | None = None) -> Decision:
    """Accept iff the yes-prover can hold rejection to ``c + eps/2``, with ``eps = 1 - c - s``.

    Accepting means a yes-prover with worst-case rejection at most
    ``c + eps/2`` was found (it is returned as the witness). Rejecting means
    the ellipsoid shrank below any ball of radius ``eps / (16 * stacked_dim)``.
    """
    eps = 1 - c - s
    if not eps > 0:
        raise PreconditionError(f"need c + s < 1, got c={c}, s={s}")
    win = WinSet(verifier, c + eps / 2)
    accuracy = eps / 4
    space = YesTranscriptSpace(verifier)
    big_r = math.sqrt(win.stacked_dim)
    small_r = eps / (16 * win.stacked_dim)
    found = {}

    def oracle(z):
        answer = sep_oracle(win, space.snapshots(z), accuracy, precision_bits=precision_bits)
        if isinstance(answer, NearFeasible):
            found["prover"] = answer.yes_prover
            return Feasible({"case": "near_feasible", "objective": answer.objective})
        g = space.gradient(answer.normal)
        value = sum(float(np.real(np.vdot(h, x))) for h, x in zip(answer.normal, space.snapshots(z)))
        return Cut(g, value - answer.level, {"case": answer.case, "objective": answer.objective})

    result = ellipsoid_search(space.dim, big_r, small_r, oracle, max_iter=max_iter, deep_cut=deep_cut)
    params = {"epsilon": eps, "level": win.c, "oracle_accuracy": accuracy, "R": big_r, "r": small_r,
              "dimension": space.dim, "stacked_dim": win.stacked_dim}
    return Decision(result.feasible, result.iterations, result.cap, result.log, found.get("prover"), params)
