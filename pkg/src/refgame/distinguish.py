"""Distinguishing states and convex sets of states.

``image_distance`` computes the minimum trace distance between two convex sets
with one SDP. ``set_povm`` turns the SDP's dual multiplier into a two-outcome
measurement that beats random guessing by ``d/4`` on every pair drawn from the
two sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelImage, ConvexStateSet, MixedCircuit
from .errors import NumericalFailure, PreconditionError
from .linalg import as_density, hermitian_part, jordan_decompose, real_embed, real_unembed, sign_projectors, trace_norm
from .sdp import STATUS_OPTIMAL, RealSdp, blocks_to_vec, solve_real_sdp

YES_THRESHOLD = 1e-6
ZERO_DISTANCE = 1e-8
TRACE_CAP = 4.0


@dataclass
class Povm:
    e0: np.ndarray
    e1: np.ndarray

    def probabilities(self, rho) -> tuple[float, float]:
        return float(np.real(np.vdot(self.e0, rho))), float(np.real(np.vdot(self.e1, rho)))

    def outcome(self, label: int) -> np.ndarray:
        if label not in (0, 1):
            raise PreconditionError(f"no outcome {label!r}; outcomes are 0 and 1")
        return self.e0 if label == 0 else self.e1


def povm_success(povm: Povm, pairs, weights) -> float:
    """``sum_i w_i <E_{c_i}, rho_i>`` for ``pairs = [(rho_i, c_i), ...]``."""
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(pairs):
        raise PreconditionError("one weight per pair is needed")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise PreconditionError("weights must form a probability vector")
    return float(sum(w * np.real(np.vdot(povm.outcome(c), rho)) for w, (rho, c) in zip(weights, pairs)))


def helstrom_povm(rho0, rho1) -> tuple[Povm, float]:
    """Optimal measurement for a uniformly chosen state from ``{rho0, rho1}``.

    Ties (the kernel of ``rho0 - rho1``) are split evenly between outcomes.
    Returns the POVM and its success probability ``1/2 + ||rho0 - rho1||_tr / 4``.
    """
    rho0, rho1 = as_density(rho0), as_density(rho1)
    pos, _, null = sign_projectors(rho0 - rho1, tol=1e-12)
    e0 = pos + null / 2
    e1 = np.eye(len(e0)) - e0
    return Povm(e0, e1), 0.5 + trace_norm(rho0 - rho1) / 4


@dataclass
class ImageDistanceResult:
    distance: float
    lower_bound: float
    rho0_star: list
    rho1_star: list
    delta: np.ndarray
    multiplier: np.ndarray
    status: str


def _as_set(a) -> ConvexStateSet:
    if isinstance(a, ConvexStateSet):
        return a
    if isinstance(a, MixedCircuit):
        return ChannelImage(a)
    raise PreconditionError(f"expected a channel or convex state set, got {type(a).__name__}")


def image_distance(set0, set1, epsilon: float = 1e-8) -> ImageDistanceResult:
    """Minimum of ``||sigma0 - sigma1||_tr`` over ``sigma_i`` in the two sets.

    Blocks: the variables of both sets, then ``P``, ``N`` and a scalar slack
    with ``P - N = sigma0 - sigma1`` and ``Tr P + Tr N + t = 4``. The slack
    only bounds the feasible region; it never binds at the optimum since the
    distance is at most 2.
    """
    a0, a1 = _as_set(set0), _as_set(set1)
    if a0.out_dim != a1.out_dim:
        raise PreconditionError("the two sets live in different dimensions")
    d = a0.out_dim
    b0, b1 = a0.block_dims(), a1.block_dims()
    dims = b0 + b1 + (d, d, 1)
    n0 = sum(k * k for k in b0)
    n1 = sum(k * k for k in b1)
    nd = d * d
    n_coords = n0 + n1 + 2 * nd + 1
    s0, s1 = slice(0, n0), slice(n0, n0 + n1)
    sp, sn = slice(n0 + n1, n0 + n1 + nd), slice(n0 + n1 + nd, n0 + n1 + 2 * nd)

    rows, rhs = [], []
    for setk, sl in ((a0, s0), (a1, s1)):
        norm_rows, norm_rhs = setk.normalisation()
        for r, v in zip(norm_rows, norm_rhs):
            row = np.zeros(n_coords)
            row[sl] = r
            rows.append(row)
            rhs.append(v)
    diff = np.zeros((nd, n_coords))
    diff[:, sp] = np.eye(nd)
    diff[:, sn] = -np.eye(nd)
    diff[:, s0] = -a0.image_matrix()
    diff[:, s1] = a1.image_matrix()
    first_diff_row = len(rows)
    rows.extend(diff)
    rhs.extend([0.0] * nd)
    cap = np.zeros(n_coords)
    cap[sp] = real_embed(np.eye(d))
    cap[sn] = real_embed(np.eye(d))
    cap[-1] = 1.0
    rows.append(cap)
    rhs.append(TRACE_CAP)
    objective = -cap.copy()
    objective[-1] = 0.0

    x0_blocks0, x0_blocks1 = a0.interior_point(), a1.interior_point()
    delta0 = a0.state_of(x0_blocks0) - a1.state_of(x0_blocks1)
    p0, m0 = jordan_decompose(hermitian_part(delta0))
    slack0 = TRACE_CAP - np.trace(p0 + m0).real
    x_init = blocks_to_vec(list(x0_blocks0) + list(x0_blocks1) + [p0, m0, np.array([[slack0]])])

    problem = RealSdp(dims, np.array(rows), np.array(rhs), objective, TRACE_CAP, epsilon, x_init)
    sol = solve_real_sdp(problem)
    if sol.status != STATUS_OPTIMAL:
        raise NumericalFailure("distance SDP did not converge", {"status": sol.status, **sol.diagnostics})
    blocks = sol.blocks
    k0, k1 = len(b0), len(b1)
    rho0 = blocks[:k0]
    rho1 = blocks[k0:k0 + k1]
    delta = a0.state_of(rho0) - a1.state_of(rho1)
    multiplier = real_unembed(sol.dual[first_diff_row:first_diff_row + nd], d)
    return ImageDistanceResult(
        distance=trace_norm(delta),
        lower_bound=-sol.dual_bound,
        rho0_star=rho0,
        rho1_star=rho1,
        delta=hermitian_part(delta),
        multiplier=hermitian_part(multiplier),
        status=sol.status,
    )


def classify_promise(d: float, epsilon: float) -> str:
    """``"yes"`` when the images meet, ``"no"`` when they are far, else ``"violated"``."""
    if d <= YES_THRESHOLD:
        return "yes"
    if d > 2 - epsilon:
        return "no"
    return "violated"


@dataclass
class SetPovmResult:
    povm: Povm
    distance: float
    separator: np.ndarray
    margin: float
    uniform_guarantee: float
    one_sided_guarantee: float


def separating_operator(set0, set1, result: ImageDistanceResult | None = None) -> tuple[np.ndarray, float]:
    """Hermitian ``K`` with ``||K|| <= 1`` and ``<K, s0 - s1> >= d`` on the sets.

    ``K`` is the optimal dual multiplier of the difference constraint; it is
    the trace-norm subgradient at the optimal difference that certifies
    optimality. Its eigenvalues are clipped to ``[-1, 1]`` to remove solver
    round-off, and the exact margin ``min <K, s0> - max <K, s1>`` is returned.
    """
    a0, a1 = _as_set(set0), _as_set(set1)
    result = result or image_distance(a0, a1)
    lam, vec = np.linalg.eigh(result.multiplier)
    k = (vec * np.clip(lam, -1, 1)) @ vec.conj().T
    margin = a0.min_overlap(k) + a1.min_overlap(-k)
    return k, margin


def set_povm(set0, set1, epsilon: float = 1e-8) -> SetPovmResult:
    """Measurement distinguishing every pair from two convex sets.

    With ``K = K+ - K-`` its Jordan decomposition, ``E0 = K+ + (I - K+ - K-)/2``.
    When the sets (numerically) intersect, the measurement is ``I/2, I/2``.
    """
    a0, a1 = _as_set(set0), _as_set(set1)
    result = image_distance(a0, a1, epsilon)
    d = result.distance
    dim = a0.out_dim
    if d <= ZERO_DISTANCE:
        half = np.eye(dim) / 2
        return SetPovmResult(Povm(half, half.copy()), d, np.zeros((dim, dim)), 0.0, 0.5, 0.0)
    k, margin = separating_operator(a0, a1, result)
    kp, km = jordan_decompose(k)
    e0 = kp + (np.eye(dim) - kp - km) / 2
    e1 = np.eye(dim) - e0
    return SetPovmResult(Povm(e0, e1), d, k, margin, 0.5 + margin / 4, margin / 2)
