"""Primal-dual interior-point solver for complex semidefinite programs.

Problems have the form

    maximise <H, X>  subject to  <A_i, X> = alpha_i,  X >= 0,

where ``X`` is Hermitian, optionally block-diagonal. Complex constraints are
split into two real ones. Internally every block is mapped through the
isometric real embedding of :mod:`refgame.linalg`, redundant constraints are
removed by an SVD, and an infeasible-start path-following method (HKM search
direction, Mehrotra predictor-corrector) runs on the resulting real problem.

Every returned solution carries a *certified* dual bound: a dual iterate is
turned into a rigorous upper bound on the optimum by charging the negative
part of its slack matrix against the trace bound implied by ``bound_b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .errors import PreconditionError
from .linalg import TOL_PSD, hermitian_part, real_embed, real_unembed

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"
STATUS_FAILURE = "numerical_failure"

MAX_ITER = 500
REDUNDANCY_TOL = 1e-10
SIGMA_CAP = 0.2
STEP_FRACTION = 0.95


def feasibility_tolerance(epsilon: float) -> float:
    return min(1e-8, epsilon / 100)


@dataclass
class SdpProblem:
    """An SDP stated with full complex matrices.

    ``block_dims`` optionally declares that ``X`` is block-diagonal with the
    given block sizes; entries outside the blocks are then fixed at zero.
    """

    objective: np.ndarray
    constraints: list
    x_init: np.ndarray
    bound_b: float
    epsilon: float
    block_dims: tuple | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=complex)
        n = self.objective.shape[0]
        if self.block_dims is None:
            self.block_dims = (n,)
        self.block_dims = tuple(int(d) for d in self.block_dims)
        if sum(self.block_dims) != n:
            raise PreconditionError(f"block sizes {self.block_dims} do not add up to {n}")
        if np.max(np.abs(self.objective - self.objective.conj().T), initial=0.0) > 1e-10:
            raise PreconditionError("objective must be Hermitian")
        if not self.epsilon > 0:
            raise PreconditionError("epsilon must be positive")
        if not self.bound_b > 0:
            raise PreconditionError("bound_b must be positive")


@dataclass
class RealSdp:
    """The same problem after real embedding of each diagonal block.

    Rows of ``amat`` are constraint functionals on the concatenated block
    coordinates; the objective is ``objective @ x``, to be maximised.
    """

    block_dims: tuple
    amat: np.ndarray
    rhs: np.ndarray
    objective: np.ndarray
    bound_b: float
    epsilon: float
    x_init: np.ndarray | None = None

    def __post_init__(self):
        self.block_dims = tuple(int(d) for d in self.block_dims)
        n_coords = sum(d * d for d in self.block_dims)
        self.amat = np.asarray(self.amat, dtype=float).reshape(-1, n_coords)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.objective = np.asarray(self.objective, dtype=float).reshape(n_coords)
        if self.amat.shape[0] != self.rhs.shape[0]:
            raise PreconditionError("constraint matrix and right-hand side disagree in length")


@dataclass
class SdpSolution:
    blocks: list
    objective_value: float
    dual_bound: float
    constraint_residual: float
    status: str
    iterations: int
    dual: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return sla.block_diag(*self.blocks) if self.blocks else np.zeros((0, 0), dtype=complex)

    @property
    def gap(self) -> float:
        return self.dual_bound - self.objective_value


# --------------------------------------------------------------------------
# conversion between complex and real forms


def _offsets(block_dims):
    out, pos = [], 0
    for d in block_dims:
        out.append(slice(pos, pos + d * d))
        pos += d * d
    return out


def _block_ranges(block_dims):
    out, pos = [], 0
    for d in block_dims:
        out.append(slice(pos, pos + d))
        pos += d
    return out


def blocks_to_vec(blocks) -> np.ndarray:
    parts = [real_embed(b) for b in blocks]
    return np.concatenate(parts) if parts else np.zeros(0)


def vec_to_blocks(vec, block_dims) -> list:
    return [real_unembed(vec[sl], d) for sl, d in zip(_offsets(block_dims), block_dims)]


def _diag_blocks(a, block_dims):
    return [a[r, r] for r in _block_ranges(block_dims)]


def realify(problem: SdpProblem) -> RealSdp:
    """Split complex constraints into Hermitian pairs and embed each block."""
    dims = problem.block_dims
    rows, rhs = [], []
    for a, alpha in problem.constraints:
        a = np.asarray(a, dtype=complex)
        alpha = complex(alpha)
        herm = (a + a.conj().T) / 2
        anti = (a - a.conj().T) / 2j
        rows.append(blocks_to_vec(_diag_blocks(herm, dims)))
        rhs.append(alpha.real)
        rows.append(blocks_to_vec(_diag_blocks(anti, dims)))
        rhs.append(-alpha.imag)
    n_coords = sum(d * d for d in dims)
    amat = np.array(rows).reshape(-1, n_coords)
    x0 = None if problem.x_init is None else blocks_to_vec(_diag_blocks(hermitian_part(problem.x_init), dims))
    return RealSdp(
        block_dims=dims,
        amat=amat,
        rhs=np.array(rhs),
        objective=blocks_to_vec(_diag_blocks(problem.objective, dims)),
        bound_b=problem.bound_b,
        epsilon=problem.epsilon,
        x_init=x0,
    )


def solve_sdp(problem: SdpProblem, *, max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve a complex SDP; see :func:`solve_real_sdp` for the guarantees."""
    return solve_real_sdp(realify(problem), max_iter=max_iter)


# --------------------------------------------------------------------------
# the interior-point method


class _Operator:
    """Constraint map and adjoint on lists of Hermitian blocks."""

    def __init__(self, amat, block_dims):
        self.amat = amat
        self.dims = block_dims
        self.slices = _offsets(block_dims)
        self.mats = [real_unembed(amat[:, sl], d) for sl, d in zip(self.slices, block_dims)]

    def apply(self, blocks):
        out = np.zeros(self.amat.shape[0])
        for sl, b in zip(self.slices, blocks):
            out += self.amat[:, sl] @ real_embed(b)
        return out

    def adjoint(self, y):
        return [real_unembed(self.amat[:, sl].T @ y, d) for sl, d in zip(self.slices, self.dims)]

    def schur(self, xs, sinvs):
        m = self.amat.shape[0]
        out = np.zeros((m, m))
        for sl, mats, x, sinv in zip(self.slices, self.mats, xs, sinvs):
            g = np.einsum("ab,jbc,cd->jad", x, mats, sinv, optimize=True)
            g = (g + np.conj(np.swapaxes(g, 1, 2))) / 2
            out += self.amat[:, sl] @ real_embed(g).T
        return (out + out.T) / 2


def _inner(xs, ys) -> float:
    return float(sum(np.real(np.vdot(x, y)) for x, y in zip(xs, ys)))


def _herm(a):
    return (a + a.conj().T) / 2


def _max_step(xs, dxs) -> float:
    """Largest alpha with every ``X + alpha dX`` positive semidefinite."""
    alpha = np.inf
    for x, dx in zip(xs, dxs):
        try:
            chol = sla.cholesky(x, lower=True)
            left = sla.solve_triangular(chol, dx, lower=True)
            w = sla.solve_triangular(chol, left.conj().T, lower=True)
            lam = np.linalg.eigvalsh(_herm(w))[0]
        except (np.linalg.LinAlgError, sla.LinAlgError):
            lam_x, vec = np.linalg.eigh(x)
            lam_x = np.clip(lam_x, 1e-300, None)
            scale = vec / np.sqrt(lam_x)
            lam = np.linalg.eigvalsh(_herm(scale.conj().T @ dx @ scale))[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _min_eig(blocks) -> float:
    vals = [np.linalg.eigvalsh(b)[0] for b in blocks if b.shape[0]]
    return float(min(vals)) if vals else 0.0


def _reduce_constraints(amat, rhs):
    """Orthonormalise the constraint rows and drop redundant ones.

    Returns ``(rows, rhs, back, inconsistency)`` where ``back`` maps reduced
    dual variables to dual variables of the original rows.
    """
    if amat.shape[0] == 0:
        return amat, rhs, np.zeros((0, 0)), 0.0
    u, s, vt = np.linalg.svd(amat, full_matrices=False)
    top = s[0] if s.size else 0.0
    keep = s > REDUNDANCY_TOL * max(1.0, top)
    u, s, vt = u[:, keep], s[keep], vt[keep]
    proj = u.T @ rhs
    inconsistency = float(np.linalg.norm(rhs - u @ proj))
    return vt, proj / s, u / s, inconsistency


def solve_real_sdp(problem: RealSdp, *, max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve a real-embedded block SDP.

    The returned point satisfies the constraints to within the feasibility
    tolerance ``min(1e-8, epsilon/100)`` and is positive semidefinite up to
    ``TOL_PSD``. ``dual_bound`` is a certified upper bound on the optimum,
    valid whenever every feasible point has spectral norm at most
    ``bound_b``. Status ``optimal`` means the certified gap is at most
    ``epsilon``.
    """
    dims_all = problem.block_dims
    live = [k for k, d in enumerate(dims_all) if d > 0]
    dims = tuple(dims_all[k] for k in live)
    all_slices = _offsets(dims_all)
    col_index = np.concatenate([np.arange(all_slices[k].start, all_slices[k].stop) for k in live]) if live else np.zeros(0, int)
    amat_full = problem.amat[:, col_index]
    c_vec = problem.objective[col_index]
    eps = problem.epsilon
    delta = feasibility_tolerance(eps)

    def expand(blocks):
        out = [np.zeros((d, d), dtype=complex) for d in dims_all]
        for k, b in zip(live, blocks):
            out[k] = b
        return out

    amat, rhs, back, inconsistency = _reduce_constraints(amat_full, problem.rhs)
    diagnostics = {"constraints": int(problem.amat.shape[0]), "rank": int(amat.shape[0]),
                   "inconsistency": inconsistency}
    if inconsistency > 1e-8 * (1 + np.linalg.norm(problem.rhs)):
        return SdpSolution(expand([np.zeros((d, d), dtype=complex) for d in dims]), np.nan, np.nan, np.inf,
                           STATUS_FAILURE, 0, None, {**diagnostics, "reason": "inconsistent constraints"})

    n_coords = amat.shape[1]
    ntot = sum(dims)
    trace_bound = ntot * problem.bound_b
    op = _Operator(amat, dims)

    def residual_of(vec):
        return float(np.max(np.abs(amat_full @ vec - problem.rhs), initial=0.0))

    def project(vec):
        return vec + amat.T @ (rhs - amat @ vec) if amat.shape[0] else vec

    if n_coords == 0 or amat.shape[0] == n_coords:
        # the constraints determine X completely
        vec = amat.T @ rhs if n_coords else np.zeros(0)
        blocks = vec_to_blocks(vec, dims)
        lam = _min_eig(blocks)
        value = float(c_vec @ vec)
        status = STATUS_OPTIMAL if lam >= -TOL_PSD else STATUS_FAILURE
        diagnostics["min_eig"] = lam
        return SdpSolution(expand(blocks), value, value, residual_of(vec), status, 0, None, diagnostics)

    c_blocks = [-b for b in vec_to_blocks(c_vec, dims)]  # minimisation form
    c_norm = np.sqrt(_inner(c_blocks, c_blocks))
    b_norm = float(np.linalg.norm(rhs))

    best_primal = (-np.inf, None)
    if problem.x_init is not None:
        v0 = project(problem.x_init[col_index])
        if _min_eig(vec_to_blocks(v0, dims)) >= -TOL_PSD and residual_of(v0) <= delta:
            best_primal = (float(c_vec @ v0), v0)
    best_dual = (np.inf, None)

    xi = max(1.0, problem.bound_b, b_norm)
    eta = max(1.0, c_norm)
    xs = [xi * np.eye(d) for d in dims]
    ss = [eta * np.eye(d) for d in dims]
    y = np.zeros(amat.shape[0])

    status = STATUS_MAX_ITER
    it = 0
    history = []
    for it in range(1, max_iter + 1):
        rp = rhs - op.apply(xs)
        aty = op.adjoint(y)
        rd = [c - s - a for c, s, a in zip(c_blocks, ss, aty)]
        mu = _inner(xs, ss) / ntot
        pinf = float(np.linalg.norm(rp)) / (1 + b_norm)
        dinf = np.sqrt(_inner(rd, rd)) / (1 + c_norm)

        # certificates from the current iterate
        s_exact = [c - a for c, a in zip(c_blocks, aty)]
        lam_s = _min_eig(s_exact)
        dual_val = -float(rhs @ y) + max(0.0, -lam_s) * trace_bound
        if dual_val < best_dual[0]:
            best_dual = (dual_val, y.copy())
        vec = project(blocks_to_vec(xs))
        if _min_eig(vec_to_blocks(vec, dims)) >= -TOL_PSD and residual_of(vec) <= delta:
            val = float(c_vec @ vec)
            if val > best_primal[0]:
                best_primal = (val, vec)
        gap = best_dual[0] - best_primal[0]
        history.append((it, pinf, dinf, mu, gap))
        if gap <= eps / 2:
            status = STATUS_OPTIMAL
            break
        if mu < 1e-15 and pinf < 1e-14 and dinf < 1e-14:
            break

        try:
            sinvs = [np.linalg.inv(s) for s in ss]
            sinvs = [_herm(s) for s in sinvs]
            schur = op.schur(xs, sinvs)
            factor = sla.cho_factor(schur + 1e-14 * np.trace(schur) / max(1, len(schur)) * np.eye(len(schur)))
            solve = lambda r: sla.cho_solve(factor, r)  # noqa: E731
        except (np.linalg.LinAlgError, sla.LinAlgError):
            try:
                pinv = np.linalg.pinv(schur, rcond=1e-14)
                solve = lambda r: pinv @ r  # noqa: E731
            except np.linalg.LinAlgError:
                status = STATUS_FAILURE
                diagnostics["reason"] = "Schur complement factorisation failed"
                break

        x_rd_sinv = [_herm(x @ r @ si) for x, r, si in zip(xs, rd, sinvs)]

        def direction(sigma_mu, corr):
            rc = [sigma_mu * si - x - (0 if c is None else c) for si, x, c in zip(sinvs, xs, corr)]
            rhs_y = rp - op.apply([a - b for a, b in zip(rc, x_rd_sinv)])
            dy = solve(rhs_y)
            ds = [r - a for r, a in zip(rd, op.adjoint(dy))]
            dx = [a - _herm(x @ d @ si) for a, x, d, si in zip(rc, xs, ds, sinvs)]
            return dx, dy, ds

        none = [None] * len(dims)
        dx_a, dy_a, ds_a = direction(0.0, none)
        ap = min(1.0, _max_step(xs, dx_a))
        ad = min(1.0, _max_step(ss, ds_a))
        mu_a = _inner([x + ap * d for x, d in zip(xs, dx_a)], [s + ad * d for s, d in zip(ss, ds_a)]) / ntot
        sigma = min(SIGMA_CAP, max(0.0, mu_a / mu) ** 3) if mu > 0 else 0.0
        corr = [_herm(dx @ ds @ si) for dx, ds, si in zip(dx_a, ds_a, sinvs)]
        dx, dy, ds = direction(sigma * mu, corr)
        ap = min(1.0, STEP_FRACTION * _max_step(xs, dx))
        ad = min(1.0, STEP_FRACTION * _max_step(ss, ds))
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < 1e-12:
            status = STATUS_FAILURE
            diagnostics["reason"] = "step length collapsed"
            break
        xs = [_herm(x + ap * d) for x, d in zip(xs, dx)]
        ss = [_herm(s + ad * d) for s, d in zip(ss, ds)]
        y = y + ad * dy

    diagnostics["history_tail"] = history[-3:]
    if best_primal[1] is None:
        vec = project(blocks_to_vec(xs))
        value = float(c_vec @ vec)
        if status == STATUS_OPTIMAL:
            status = STATUS_FAILURE
        if status != STATUS_FAILURE:
            status = STATUS_FAILURE
            diagnostics.setdefault("reason", "no feasible positive semidefinite iterate")
    else:
        value, vec = best_primal
        if status == STATUS_OPTIMAL and best_dual[0] - value > eps:
            status = STATUS_MAX_ITER
    dual_bound, y_best = best_dual
    if status == STATUS_FAILURE and best_primal[1] is not None and best_dual[0] - best_primal[0] <= eps:
        status = STATUS_OPTIMAL
    dual_full = None if y_best is None else back @ y_best
    return SdpSolution(
        expand(vec_to_blocks(vec, dims)),
        value,
        float(dual_bound),
        residual_of(vec),
        status,
        it,
        dual_full,
        diagnostics,
    )


# --------------------------------------------------------------------------
# independent verification


@dataclass
class SolutionReport:
    residual: float
    min_eig: float
    objective: float
    dual_bound: float
    gap: float
    passed: bool | None
    diagnostics: dict


def check_solution(problem: SdpProblem, solution: SdpSolution) -> SolutionReport:
    """Recompute residuals, the PSD margin and the certified gap from scratch.

    The dual bound is rebuilt from ``solution.dual`` (multipliers of the
    realified constraint rows) rather than trusted. For a
    ``numerical_failure`` solution the report only echoes diagnostics and
    ``passed`` is ``None``.
    """
    x = solution.x
    residual = 0.0
    for a, alpha in problem.constraints:
        residual = max(residual, abs(np.vdot(np.asarray(a), x) - complex(alpha)))
    min_eig = float(np.linalg.eigvalsh(_herm(x))[0]) if x.size else 0.0
    objective = float(np.real(np.vdot(problem.objective, x)))
    if solution.status == STATUS_FAILURE:
        return SolutionReport(residual, min_eig, objective, np.nan, np.nan, None, dict(solution.diagnostics))

    dual_bound = np.inf
    if solution.dual is not None:
        realised = realify(problem)
        y = solution.dual
        slack = -realised.objective - realised.amat.T @ y
        lam = min((np.linalg.eigvalsh(b)[0] for b in vec_to_blocks(slack, realised.block_dims) if b.size), default=0.0)
        trace_bound = sum(problem.block_dims) * problem.bound_b
        dual_bound = -float(realised.rhs @ y) + max(0.0, -lam) * trace_bound
    gap = dual_bound - objective
    passed = bool(
        solution.status == STATUS_OPTIMAL
        and residual <= feasibility_tolerance(problem.epsilon)
        and min_eig >= -TOL_PSD
        and gap <= problem.epsilon
    )
    return SolutionReport(residual, min_eig, objective, dual_bound, gap, passed, dict(solution.diagnostics))


def lambda_max_problem(h: np.ndarray, epsilon: float = 1e-8) -> SdpProblem:
    """``max <H, X>`` over density matrices, whose value is ``lambda_max(H)``."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    return SdpProblem(h, [(np.eye(n), 1.0)], np.eye(n) / n, 1.0, epsilon)


__all__: Sequence[str] = [
    "SdpProblem", "RealSdp", "SdpSolution", "SolutionReport", "solve_sdp", "solve_real_sdp",
    "realify", "check_solution", "lambda_max_problem", "blocks_to_vec", "vec_to_blocks",
    "feasibility_tolerance", "STATUS_OPTIMAL", "STATUS_MAX_ITER", "STATUS_FAILURE",
]
