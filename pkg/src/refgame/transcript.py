"""Transcripts of one-prover interactions and the transcript optimisation problem.

A :class:`RoundSequence` lists the verifier's operators ``A_0, ..., A_r`` on a
space ``F (x) G``; ``G`` (the *traced* factors) is the message space the
prover can touch, ``F`` is private to the verifier. A prover with environment
``H`` applies unitaries ``U_1, ..., U_r`` on ``G (x) H`` and the joint state
evolves as ``u_{i+1} = U_{i+1} A_i u_i`` from ``u_0 = |0>``. The transcript
records ``X_i = Tr_H u_i u_i*`` and the prover's value is ``||A_r u_r||^2``.

Transcripts produced by some prover are exactly the PSD solutions of linear
*consistency* constraints ``Tr_G A_i X_i A_i* = Tr_G X_{i+1}``, so the best
prover is found by an SDP. Before solving, each snapshot is restricted to the
smallest subspace every consistent transcript can occupy (``supp Tr_G X`` is
forced round by round); this keeps the SDP small and strictly feasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NumericalFailure, PreconditionError
from .linalg import (
    RANK_THRESHOLD,
    TOL_CONSISTENCY,
    TOL_PSD,
    SpaceLayout,
    embed_lift,
    ground_state,
    hermitian_basis,
    hermitian_part,
    numerical_rank,
    permute_operator,
    procrustes_unitary,
    purify,
    real_embed,
    spectral_norm,
    support_basis,
)
from .sdp import STATUS_FAILURE, RealSdp, SdpProblem, SdpSolution, blocks_to_vec, solve_real_sdp


@dataclass(frozen=True, eq=False)
class RoundSequence:
    """Verifier operators ``A_0..A_r`` on ``layout`` with message factors ``traced``."""

    matrices: tuple
    layout: SpaceLayout
    traced: tuple

    def __init__(self, matrices: Sequence[np.ndarray], layout: SpaceLayout, traced: Sequence[str]):
        mats = tuple(np.asarray(m, dtype=complex) for m in matrices)
        if not mats:
            raise PreconditionError("a round sequence needs at least one operator")
        d = layout.total_dim
        for i, m in enumerate(mats):
            if m.shape != (d, d):
                raise PreconditionError(f"operator {i} has shape {m.shape}, expected {(d, d)}")
        traced = tuple(traced)
        for label in traced:
            layout.index(label)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "traced", traced)

    @property
    def r(self) -> int:
        return len(self.matrices) - 1

    @cached_property
    def kept(self) -> tuple:
        return tuple(label for label in self.layout.labels if label not in self.traced)

    @cached_property
    def dim_f(self) -> int:
        return self.layout.dim_of(self.kept) if self.kept else 1

    @cached_property
    def dim_g(self) -> int:
        return self.layout.dim_of(self.traced) if self.traced else 1

    @cached_property
    def _perm(self):
        labels = self.layout.labels
        return [labels.index(x) for x in self.kept + self.traced]

    def to_canonical(self, op: np.ndarray) -> np.ndarray:
        """Reorder an operator on the layout into ``F (x) G`` order."""
        return permute_operator(op, self.layout.dims, self._perm)

    def from_canonical(self, op: np.ndarray) -> np.ndarray:
        dims = [self.layout.dims[p] for p in self._perm]
        return permute_operator(op, dims, list(np.argsort(self._perm)))

    @cached_property
    def canonical(self) -> tuple:
        return tuple(self.to_canonical(m) for m in self.matrices)


def feasible_bound(rounds: RoundSequence) -> float:
    """``max_i prod_{j<i} ||A_j||^2``, a spectral-norm bound on every snapshot."""
    best, acc = 1.0, 1.0
    for a in rounds.matrices[:-1]:
        acc *= spectral_norm(a) ** 2
        best = max(best, acc)
    return best


def _tr_g(x: np.ndarray, d_f: int, d_g: int) -> np.ndarray:
    return np.einsum("agbg->ab", x.reshape(d_f, d_g, d_f, d_g))


@dataclass(frozen=True, eq=False)
class Transcript:
    """Snapshots ``X_1..X_r`` (``X_0 = |0><0|`` is implicit) on the layout."""

    rounds: RoundSequence
    snapshots: tuple

    def __init__(self, rounds: RoundSequence, snapshots: Sequence[np.ndarray], check: bool = True):
        snaps = tuple((np.asarray(x, dtype=complex) + np.asarray(x, dtype=complex).conj().T) / 2 for x in snapshots)
        if len(snaps) != rounds.r:
            raise PreconditionError(f"expected {rounds.r} snapshots, got {len(snaps)}")
        object.__setattr__(self, "rounds", rounds)
        object.__setattr__(self, "snapshots", snaps)
        if check:
            self.check()

    @property
    def all_snapshots(self) -> tuple:
        d = self.rounds.layout.total_dim
        x0 = np.zeros((d, d), dtype=complex)
        x0[0, 0] = 1.0
        return (x0,) + self.snapshots

    def stacked(self) -> np.ndarray:
        from scipy.linalg import block_diag

        return block_diag(*self.all_snapshots)

    def residuals(self) -> list[float]:
        """Frobenius norm of each consistency equation's violation."""
        rd = self.rounds
        xs = [rd.to_canonical(x) for x in self.all_snapshots]
        out = []
        for k in range(rd.r):
            a = rd.canonical[k]
            lhs = _tr_g(a @ xs[k] @ a.conj().T, rd.dim_f, rd.dim_g)
            rhs = _tr_g(xs[k + 1], rd.dim_f, rd.dim_g)
            out.append(float(np.linalg.norm(lhs - rhs)))
        return out

    def value(self) -> float:
        a = self.rounds.matrices[-1]
        return float(np.real(np.vdot(a.conj().T @ a, self.all_snapshots[-1])))

    def check(self, tol_cons: float = TOL_CONSISTENCY, tol_psd: float = TOL_PSD) -> None:
        bound = feasible_bound(self.rounds)
        for i, x in enumerate(self.snapshots, start=1):
            lam = np.linalg.eigvalsh(x)
            scale = max(1.0, abs(lam[-1]))
            if lam[0] < -tol_psd * scale:
                raise PreconditionError(f"snapshot {i} has eigenvalue {lam[0]:.3e}")
            if lam[-1] > bound + tol_psd * scale:
                raise PreconditionError(f"snapshot {i} has norm {lam[-1]:.12f} above the bound {bound:.12f}")
        res = self.residuals()
        if res and max(res) > tol_cons * max(1.0, bound):
            raise PreconditionError(f"transcript violates consistency by {max(res):.3e}")


def trivial_transcript(rounds: RoundSequence) -> Transcript:
    """The transcript of the prover that does nothing: ``X_{i+1} = A_i X_i A_i*``."""
    d = rounds.layout.total_dim
    x = np.zeros((d, d), dtype=complex)
    x[0, 0] = 1.0
    snaps = []
    for a in rounds.matrices[:-1]:
        x = a @ x @ a.conj().T
        snaps.append(x)
    return Transcript(rounds, snaps)


# --------------------------------------------------------------------------
# literal stacked form of the consistency constraints


@dataclass
class ConsistencySystem:
    """Consistency constraints on the stacked space ``(F (x) G)^{r+1}``.

    Every constraint is a real equation ``<C, Z> = c`` with ``C`` Hermitian.
    Besides the consistency equations this pins ``Z`` to be block diagonal
    with first block ``|0><0|``.
    """

    rounds: RoundSequence
    constraints: list

    @property
    def block_dim(self) -> int:
        return self.rounds.layout.total_dim

    @property
    def stacked_dim(self) -> int:
        return (self.rounds.r + 1) * self.block_dim

    def residual(self, z: np.ndarray) -> float:
        return max((abs(np.real(np.vdot(c, z)) - v) for c, v in self.constraints), default=0.0)

    def to_sdp(self, epsilon: float = 1e-7) -> SdpProblem:
        """The transcript optimisation problem stated on the stacked space."""
        d, r = self.block_dim, self.rounds.r
        a_r = self.rounds.matrices[-1]
        objective = np.zeros((self.stacked_dim,) * 2, dtype=complex)
        objective[r * d:, r * d:] = a_r.conj().T @ a_r
        x_init = trivial_transcript(self.rounds).stacked()
        return SdpProblem(objective, self.constraints, x_init, feasible_bound(self.rounds), epsilon)


def _herm_pair_pins(n, a, b, value):
    """Two Hermitian functionals fixing the complex entry ``Z[a, b]``."""
    re = np.zeros((n, n), dtype=complex)
    im = np.zeros((n, n), dtype=complex)
    if a == b:
        re[a, a] = 1.0
        return [(re, float(np.real(value)))]
    re[a, b] = re[b, a] = 0.5
    im[a, b], im[b, a] = -0.5j, 0.5j
    return [(re, float(np.real(value))), (im, float(np.imag(value)))]


def build_consistency_system(rounds: RoundSequence) -> ConsistencySystem:
    d, r = rounds.layout.total_dim, rounds.r
    n = (r + 1) * d
    cons = []
    kept = list(rounds.kept)
    d_f = rounds.dim_f
    for k in range(r):
        a = rounds.matrices[k]
        for i in range(d_f):
            for j in range(i, d_f):
                e = np.zeros((d_f, d_f), dtype=complex)
                e[i, j] = 1.0
                lifted = embed_lift(e, kept, rounds.layout) if kept else e * np.eye(d)
                t = np.zeros((n, n), dtype=complex)
                t[k * d:(k + 1) * d, k * d:(k + 1) * d] = a.conj().T @ lifted @ a
                t[(k + 1) * d:(k + 2) * d, (k + 1) * d:(k + 2) * d] = -lifted
                cons.append(((t + t.conj().T) / 2, 0.0))
                if i != j:
                    cons.append(((t - t.conj().T) / 2j, 0.0))
    x0 = np.zeros((d, d), dtype=complex)
    x0[0, 0] = 1.0
    for a in range(d):
        for b in range(a, d):
            cons.extend(_herm_pair_pins(n, a, b, x0[a, b]))
    for k in range(r + 1):
        for l in range(k + 1, r + 1):
            for a in range(k * d, (k + 1) * d):
                for b in range(l * d, (l + 1) * d):
                    cons.extend(_herm_pair_pins(n, a, b, 0.0))
    return ConsistencySystem(rounds, cons)


# --------------------------------------------------------------------------
# facial reduction and the reduced SDP


class FaceReduction:
    """Smallest subspaces ``S_1..S_r`` containing every consistent snapshot.

    ``S_{i+1} = supp(Tr_G A_i P_i A_i*) (x) G`` where ``P_i`` projects onto
    ``S_i`` and ``S_0`` is spanned by ``|0>``. Snapshots are written as
    ``X_i = B_i Y_i B_i*`` (in ``F (x) G`` order); ``Y_i`` are the reduced
    variables.

    By default ``B_i = Q_i (x) I_G`` is an isometry. With ``scaled=True`` it
    is ``Q_i R_i (x) I_G`` where ``R_i`` is the square root of the reduced
    state of the prover that replaces every message by the maximally mixed
    state. That prover's transcript becomes ``Y_i = I / dim G`` in every
    block, which keeps badly scaled supports from stalling an SDP solver.
    """

    def __init__(self, rounds: RoundSequence, threshold: float = RANK_THRESHOLD, *, scaled: bool = False):
        self.rounds = rounds
        self.scaled = scaled
        d_f, d_g = rounds.dim_f, rounds.dim_g
        self.supports = []  # Q_i, columns in F
        self.inverse_scales = []  # R_i^{-1}
        ground = ground_state(d_f * d_g)[:, None]
        self.bases = [ground]
        self.pinvs = [ground.conj().T]
        mixing = ground @ ground.conj().T
        for a in rounds.canonical[:-1]:
            k = a @ self.bases[-1]
            sigma = _tr_g(k @ k.conj().T, d_f, d_g)
            q = support_basis(sigma, threshold) if k.size else np.zeros((d_f, 0))
            t = q.shape[1]
            scale, inverse = np.eye(t), np.eye(t)
            mix_sigma = _tr_g(a @ mixing @ a.conj().T, d_f, d_g)
            if scaled and t:
                lam, vec = np.linalg.eigh(hermitian_part(q.conj().T @ mix_sigma @ q))
                lam = np.maximum(lam, threshold * lam[-1])
                scale = (vec * np.sqrt(lam)) @ vec.conj().T
                inverse = (vec / np.sqrt(lam)) @ vec.conj().T
            self.supports.append(q)
            self.inverse_scales.append(inverse)
            self.bases.append(np.kron(q @ scale, np.eye(d_g)))
            self.pinvs.append(np.kron(inverse @ q.conj().T, np.eye(d_g)))
            mixing = np.kron(mix_sigma, np.eye(d_g) / d_g)

    @property
    def block_dims(self) -> tuple:
        return tuple(b.shape[1] for b in self.bases[1:])

    def norm_factor(self) -> float:
        """``max_i ||B_i^+||^2``: reduced blocks are at most this times the snapshot norm."""
        return max([1.0] + [spectral_norm(r) ** 2 for r in self.inverse_scales if r.size])

    def restrict(self, snapshots_canonical) -> list:
        """Reduced blocks ``Y_i`` of snapshots lying in the face."""
        return [p @ x @ p.conj().T for p, x in zip(self.pinvs[1:], snapshots_canonical)]

    def pullback(self, functionals_canonical) -> list:
        """``B_i* H_i B_i``, so that ``<H_i, X_i> = <pullback, Y_i>``."""
        return [b.conj().T @ h @ b for b, h in zip(self.bases[1:], functionals_canonical)]

    def expand(self, blocks) -> list:
        return [b @ y @ b.conj().T for b, y in zip(self.bases[1:], blocks)]

    def constraint_rows(self):
        """Real rows and right-hand side of the reduced consistency equations."""
        rd = self.rounds
        d_f, d_g = rd.dim_f, rd.dim_g
        dims = self.block_dims
        sizes = [s * s for s in dims]
        starts = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        n_coords = int(starts[-1])
        rows, rhs = [], []
        for k in range(rd.r):
            q = self.supports[k]
            t = q.shape[1]
            if t == 0:
                continue
            b_k = self.bases[k]
            s_k = b_k.shape[1]
            block = np.zeros((t * t, n_coords))
            # R^{-1} Q* (.) Q R^{-1} maps the F marginal onto the scaled support
            qr = q @ self.inverse_scales[k]
            lmap = np.einsum("fa,fgp->agp", qr.conj(), (rd.canonical[k] @ b_k).reshape(d_f, d_g, s_k))
            # the next snapshot enters through its partial trace over G
            basis_next = hermitian_basis(t * d_g).reshape(-1, t, d_g, t, d_g)
            ptrace = real_embed(np.einsum("nagbg->nab", basis_next)).T
            block[:, starts[k]:starts[k + 1]] = -ptrace
            if k == 0:
                const = np.einsum("ag,bg->ab", lmap[:, :, 0], lmap[:, :, 0].conj())
                rows.append(-block)
                rhs.append(real_embed(const))
            else:
                basis = hermitian_basis(s_k)
                images = np.einsum("agp,npq,bgq->nab", lmap, basis, lmap.conj(), optimize=True)
                block[:, starts[k - 1]:starts[k]] = real_embed(images).T
                rows.append(block)
                rhs.append(np.zeros(t * t))
        if not rows:
            return np.zeros((0, n_coords)), np.zeros(0)
        return np.vstack(rows), np.concatenate(rhs)

    def objective_vector(self) -> np.ndarray:
        dims = self.block_dims
        out = [np.zeros(s * s) for s in dims]
        a = self.rounds.canonical[-1]
        b = self.bases[-1]
        ab = a @ b
        out[-1] = real_embed(ab.conj().T @ ab)
        return np.concatenate(out)


class OptSolution(NamedTuple):
    transcript: Transcript
    value: float
    upper_bound: float
    sdp: SdpSolution | None


def solve_opt(rounds: RoundSequence, epsilon: float = 1e-7) -> OptSolution:
    """Maximise ``<A_r* A_r, X_r>`` over transcripts consistent with ``rounds``.

    Returns an optimal transcript, its value, and a certified upper bound on
    the optimum that lies within ``epsilon`` of the value.
    """
    if not epsilon > 0:
        raise PreconditionError("epsilon must be positive")
    if rounds.r == 0:
        a = rounds.matrices[0]
        value = float(np.real(np.vdot(a[:, 0], a[:, 0])))
        return OptSolution(Transcript(rounds, []), value, value, None)
    face = FaceReduction(rounds, scaled=True)
    amat, rhs = face.constraint_rows()
    bound = feasible_bound(rounds) * face.norm_factor()
    x_init = blocks_to_vec(face.restrict([rounds.to_canonical(x) for x in trivial_transcript(rounds).snapshots]))
    problem = RealSdp(face.block_dims, amat, rhs, face.objective_vector(), bound, epsilon, x_init)
    sol = solve_real_sdp(problem)
    if sol.status == STATUS_FAILURE:
        raise NumericalFailure("transcript SDP failed", {"status": sol.status, **sol.diagnostics})
    snaps = [rounds.from_canonical(x) for x in face.expand(sol.blocks)]
    transcript = Transcript(rounds, snaps)
    return OptSolution(transcript, transcript.value(), sol.dual_bound, sol)


# --------------------------------------------------------------------------
# provers and transcripts


@dataclass
class ProverStrategy:
    """Unitaries ``U_1..U_r`` on ``G (x) H`` (message factors, then environment)."""

    unitaries: list
    env_dim: int


def prover_states(rounds: RoundSequence, prover: ProverStrategy) -> list:
    """Joint states ``u_0..u_r`` on ``F (x) G (x) H`` (canonical order)."""
    if len(prover.unitaries) != rounds.r:
        raise PreconditionError(f"prover has {len(prover.unitaries)} unitaries for {rounds.r} rounds")
    d_f, d_g, h = rounds.dim_f, rounds.dim_g, prover.env_dim
    u = ground_state(d_f * d_g * h)
    states = [u]
    for a, w in zip(rounds.canonical[:-1], prover.unitaries):
        v = (a @ u.reshape(d_f * d_g, h)).reshape(d_f, d_g * h)
        u = (v @ np.asarray(w).T).reshape(-1)
        states.append(u)
    return states


def prover_value(rounds: RoundSequence, prover: ProverStrategy) -> float:
    u = prover_states(rounds, prover)[-1]
    h = prover.env_dim
    out = rounds.canonical[-1] @ u.reshape(-1, h)
    return float(np.real(np.vdot(out, out)))


def prover_to_transcript(rounds: RoundSequence, prover: ProverStrategy) -> Transcript:
    h = prover.env_dim
    snaps = []
    for u in prover_states(rounds, prover)[1:]:
        m = u.reshape(-1, h)
        snaps.append(rounds.from_canonical(m @ m.conj().T))
    return Transcript(rounds, snaps)


def transcript_to_prover(rounds: RoundSequence, transcript: Transcript, env_dim: int | None = None) -> ProverStrategy:
    """A prover realising ``transcript``, built from purifications.

    The environment has the largest numerical rank among the snapshots unless
    ``env_dim`` is given. Each unitary is the Procrustes solution connecting
    ``A_i u_i`` to a purification of the next snapshot.
    """
    d_f, d_g = rounds.dim_f, rounds.dim_g
    xs = [rounds.to_canonical(x) for x in transcript.snapshots]
    if env_dim is None:
        env_dim = max([1] + [numerical_rank(x) for x in xs])
    u = ground_state(d_f * d_g * env_dim)
    unitaries = []
    for a, x in zip(rounds.canonical[:-1], xs):
        w = (a @ u.reshape(d_f * d_g, env_dim)).reshape(d_f, d_g * env_dim)
        target = purify(x, env_dim).reshape(d_f, d_g * env_dim)
        r = procrustes_unitary(w, target)
        unitaries.append(r.T)
        u = (w @ r).reshape(-1)
    return ProverStrategy(unitaries, env_dim)
