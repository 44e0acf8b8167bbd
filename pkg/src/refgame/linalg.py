"""Dense complex linear algebra on labelled tensor-product spaces.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
A :class:`SpaceLayout` names the tensor factors of a space so that lifting,
partial traces and state updates can refer to factors by label instead of by
axis position. Factor ordering is big-endian: the first factor is the most
significant index of the flattened vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg as sla

from .errors import InconsistentTranscriptError, PreconditionError, PurificationError

TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_UNITARY = 1e-9
TOL_CONSISTENCY = 1e-7
RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered labelled factors of a finite-dimensional Hilbert space."""

    factors: tuple[tuple[str, int], ...]

    def __init__(self, factors: Iterable[tuple[str, int]]):
        factors = tuple((str(label), int(dim)) for label, dim in factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise PreconditionError(f"duplicate factor labels in {labels}")
        if any(dim < 1 for _, dim in factors):
            raise PreconditionError(f"factor dimensions must be positive: {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise PreconditionError(f"unknown factor label {label!r}; layout has {self.labels}") from None

    def dim_of(self, labels: str | Iterable[str]) -> int:
        if isinstance(labels, str):
            labels = [labels]
        return prod(self.factors[self.index(label)][1] for label in labels)

    def subset(self, labels: Iterable[str]) -> "SpaceLayout":
        """Layout restricted to ``labels``, keeping this layout's order."""
        wanted = set(labels)
        for label in wanted:
            self.index(label)
        return SpaceLayout(f for f in self.factors if f[0] in wanted)

    def reordered(self, labels: Sequence[str]) -> "SpaceLayout":
        if sorted(labels) != sorted(self.labels):
            raise PreconditionError(f"{labels} is not a permutation of {self.labels}")
        return SpaceLayout((label, self.dim_of(label)) for label in labels)

    def __add__(self, other: "SpaceLayout") -> "SpaceLayout":
        return SpaceLayout(self.factors + other.factors)


# --------------------------------------------------------------------------
# validation helpers


def _as_square(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError(f"{name} must be square, got shape {a.shape}")
    return a


def is_hermitian(a, tol: float = TOL_HERM) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def as_hermitian(a, tol: float = TOL_HERM) -> np.ndarray:
    """Return ``a`` symmetrised, after checking it is Hermitian up to ``tol``."""
    a = _as_square(a, "Hermitian matrix")
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > tol:
        raise PreconditionError(f"matrix is not Hermitian (max |A - A*| = {err:.3e})")
    return (a + a.conj().T) / 2


def as_density(a, tol_psd: float = TOL_PSD, tol_trace: float = TOL_TRACE) -> np.ndarray:
    a = as_hermitian(a)
    lam = np.linalg.eigvalsh(a)
    if lam[0] < -tol_psd:
        raise PreconditionError(f"density matrix has eigenvalue {lam[0]:.3e}")
    if abs(lam.sum() - 1) > tol_trace:
        raise PreconditionError(f"density matrix has trace {lam.sum():.12f}")
    return a


def is_unitary(u, tol: float = TOL_UNITARY) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) <= tol


def as_unitary(u, tol: float = TOL_UNITARY) -> np.ndarray:
    u = _as_square(u, "unitary")
    if not is_unitary(u, tol):
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        raise PreconditionError(f"matrix is not unitary (max |U*U - I| = {err:.3e})")
    return u


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


# --------------------------------------------------------------------------
# tensor plumbing


def permute_operator(op: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of an operator.

    ``op`` acts on factors with dimensions ``dims``; the result acts on the
    factors ``[dims[p] for p in perm]`` in that order.
    """
    n = len(dims)
    t = np.asarray(op).reshape(tuple(dims) * 2)
    axes = list(perm) + [n + p for p in perm]
    d = prod(dims)
    return t.transpose(axes).reshape(d, d)


def permute_vector(vec: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    return np.asarray(vec).reshape(tuple(dims)).transpose(list(perm)).reshape(-1)


def embed_lift(a, acting_labels: Sequence[str], layout: SpaceLayout) -> np.ndarray:
    """Lift an operator on some factors to the whole layout.

    ``a`` acts on the factors ``acting_labels`` taken in the order given; the
    remaining factors receive the identity.
    """
    acting_labels = list(acting_labels)
    a = np.asarray(a, dtype=complex)
    d_act = layout.dim_of(acting_labels) if acting_labels else 1
    if a.shape != (d_act, d_act):
        raise PreconditionError(f"operator shape {a.shape} does not match factors {acting_labels} (dim {d_act})")
    rest = [label for label in layout.labels if label not in acting_labels]
    d_rest = layout.dim_of(rest) if rest else 1
    full = np.kron(a, np.eye(d_rest))
    current = acting_labels + rest
    dims = [layout.dim_of(label) for label in current]
    perm = [current.index(label) for label in layout.labels]
    return permute_operator(full, dims, perm)


def apply_to_state(vec: np.ndarray, op: np.ndarray, acting_labels: Sequence[str], layout: SpaceLayout) -> np.ndarray:
    """Apply ``op`` (on ``acting_labels`` in that order) to a state vector."""
    acting_labels = list(acting_labels)
    axes = [layout.index(label) for label in acting_labels]
    dims = layout.dims
    d_act = prod(dims[i] for i in axes)
    t = np.asarray(vec, dtype=complex).reshape(dims)
    rest = [i for i in range(len(dims)) if i not in axes]
    t = t.transpose(axes + rest).reshape(d_act, -1)
    t = (np.asarray(op) @ t).reshape([dims[i] for i in axes] + [dims[i] for i in rest])
    inverse = np.argsort(axes + rest)
    return t.transpose(inverse).reshape(-1)


def partial_trace(x: np.ndarray, layout: SpaceLayout, traced_labels: Iterable[str]) -> np.ndarray:
    """Trace out ``traced_labels``; the result keeps the layout order of the rest."""
    traced = {layout.index(label) for label in traced_labels}
    dims = layout.dims
    n = len(dims)
    x = np.asarray(x)
    if x.shape != (layout.total_dim, layout.total_dim):
        raise PreconditionError(f"operator shape {x.shape} does not match layout dim {layout.total_dim}")
    kept = [i for i in range(n) if i not in traced]
    t = x.reshape(tuple(dims) * 2)
    perm = kept + sorted(traced) + [n + i for i in kept] + [n + i for i in sorted(traced)]
    dk = prod(dims[i] for i in kept)
    dt = prod(dims[i] for i in traced)
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def ground_state(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


def ground_and_projectors(layout: SpaceLayout, output_label: str):
    """Return ``(ground, accept, reject)`` for a layout with an output qubit.

    ``reject`` projects the output qubit onto ``|0>``; ``accept`` is its
    complement.
    """
    if layout.dim_of(output_label) != 2:
        raise PreconditionError(f"output factor {output_label!r} must be a qubit")
    zero = np.diag([1.0, 0.0]).astype(complex)
    reject = embed_lift(zero, [output_label], layout)
    accept = np.eye(layout.total_dim) - reject
    return ground_state(layout.total_dim), accept, reject


# --------------------------------------------------------------------------
# norms and decompositions


def kron(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr(a* b)``."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise PreconditionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def trace_norm(a) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(a), compute_uv=False)))


def spectral_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def psd_sqrt(x) -> np.ndarray:
    lam, vec = np.linalg.eigh(hermitian_part(x))
    return (vec * np.sqrt(np.clip(lam, 0, None))) @ vec.conj().T


def fidelity(x, y) -> float:
    """Fidelity ``|| sqrt(X) sqrt(Y) ||_tr`` of two positive semidefinite matrices."""
    return trace_norm(psd_sqrt(x) @ psd_sqrt(y))


def jordan_decompose(k):
    """Split a Hermitian matrix into positive and negative parts with disjoint supports."""
    k = as_hermitian(k)
    lam, vec = np.linalg.eigh(k)
    pos = (vec * np.clip(lam, 0, None)) @ vec.conj().T
    neg = (vec * np.clip(-lam, 0, None)) @ vec.conj().T
    return pos, neg


def sign_projectors(k, tol: float = 0.0):
    """Projectors onto the positive, negative and null eigenspaces of ``k``."""
    lam, vec = np.linalg.eigh(hermitian_part(k))
    scale = tol * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    masks = (lam > scale, lam < -scale, np.abs(lam) <= scale)
    return tuple((vec[:, m] @ vec[:, m].conj().T) for m in masks)


def numerical_rank(x, threshold: float = RANK_THRESHOLD) -> int:
    lam = np.linalg.eigvalsh(hermitian_part(x))
    top = float(np.max(np.abs(lam), initial=0.0))
    if top == 0.0:
        return 0
    return int(np.sum(lam > threshold * top))


def support_basis(x, threshold: float = RANK_THRESHOLD) -> np.ndarray:
    """Orthonormal columns spanning the numerical support of a PSD matrix."""
    lam, vec = np.linalg.eigh(hermitian_part(x))
    top = float(np.max(np.abs(lam), initial=0.0))
    if top == 0.0:
        return vec[:, :0]
    return vec[:, lam > threshold * top][:, ::-1]


def purify(x, env_dim: int) -> np.ndarray:
    """Vector ``v`` on ``space (x) env`` with ``Tr_env vv* = x``.

    The environment is the trailing factor. Eigenvalues below the numerical
    rank threshold are kept when room allows, so the reduced state is
    reproduced as closely as ``env_dim`` permits.
    """
    x = as_hermitian(x)
    lam, vec = np.linalg.eigh(x)
    lam, vec = lam[::-1], vec[:, ::-1]
    if lam[-1] < -TOL_PSD * max(1.0, abs(lam[0])):
        raise PreconditionError(f"cannot purify a matrix with eigenvalue {lam[-1]:.3e}")
    rank = numerical_rank(x)
    if rank > env_dim:
        raise PurificationError(f"rank {rank} exceeds environment dimension {env_dim}")
    keep = min(len(lam), env_dim)
    out = np.zeros((x.shape[0], env_dim), dtype=complex)
    out[:, :keep] = vec[:, :keep] * np.sqrt(np.clip(lam[:keep], 0, None))
    return out.reshape(-1)


def procrustes_unitary(u_mat: np.ndarray, v_mat: np.ndarray) -> np.ndarray:
    """Unitary ``R`` minimising ``|| u_mat R - v_mat ||_F``."""
    p, _, qh = np.linalg.svd(u_mat.conj().T @ v_mat)
    return p @ qh


def connecting_unitary(u, v, layout: SpaceLayout, env_label: str | Sequence[str], tol_match: float = 1e-8) -> np.ndarray:
    """Unitary ``W`` on the environment with ``(I (x) W) u = v``.

    ``u`` and ``v`` must have the same reduced state on the complement of the
    environment (``env_label`` may name one factor or several).
    """
    env = [env_label] if isinstance(env_label, str) else list(env_label)
    rest = [label for label in layout.labels if label not in env]
    order = [layout.index(label) for label in rest + env]
    d_env = layout.dim_of(env)
    um = permute_vector(u, layout.dims, order).reshape(-1, d_env)
    vm = permute_vector(v, layout.dims, order).reshape(-1, d_env)
    mismatch = trace_norm(um @ um.conj().T - vm @ vm.conj().T)
    if mismatch > tol_match:
        raise InconsistentTranscriptError(f"reduced states differ by {mismatch:.3e} in trace norm")
    # (I (x) W) u corresponds to um @ W.T
    return procrustes_unitary(um, vm).T


# --------------------------------------------------------------------------
# real embedding of Hermitian matrices


def _triu(n: int):
    return np.triu_indices(n, k=1)


def real_embed(a) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix.

    Diagonal entries come first, then ``sqrt(2) Re`` and ``sqrt(2) Im`` of the
    strictly upper entries, interleaved per entry. Works on a stack of
    matrices along the leading axes.
    """
    a = np.asarray(a)
    n = a.shape[-1]
    iu, ju = _triu(n)
    diag = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    off = a[..., iu, ju]
    pairs = np.stack([np.real(off), np.imag(off)], axis=-1).reshape(*a.shape[:-2], -1)
    return np.concatenate([diag, np.sqrt(2) * pairs], axis=-1)


def real_unembed(vec, n: int) -> np.ndarray:
    """Inverse of :func:`real_embed` (stacks along leading axes)."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape[-1] != n * n:
        raise PreconditionError(f"expected {n * n} real coordinates, got {vec.shape[-1]}")
    lead = vec.shape[:-1]
    out = np.zeros(lead + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = vec[..., :n]
    iu, ju = _triu(n)
    pairs = vec[..., n:].reshape(*lead, -1, 2) / np.sqrt(2)
    off = pairs[..., 0] + 1j * pairs[..., 1]
    out[..., iu, ju] = off
    out[..., ju, iu] = off.conj()
    return out


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n-by-n Hermitian matrices, matching :func:`real_embed`."""
    return real_unembed(np.eye(n * n), n)


# --------------------------------------------------------------------------
# misc


def round_to_bits(a, bits: int) -> np.ndarray:
    """Round real and imaginary parts to the grid ``2**-bits``."""
    scale = float(2**bits)
    a = np.asarray(a, dtype=complex)
    return (np.round(a.real * scale) + 1j * np.round(a.imag * scale)) / scale


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def unitary_from_isometry(iso: np.ndarray) -> np.ndarray:
    """Complete an isometry (orthonormal columns) to a unitary with those leading columns."""
    iso = np.asarray(iso, dtype=complex)
    d, k = iso.shape
    if np.max(np.abs(iso.conj().T @ iso - np.eye(k)), initial=0.0) > 1e-9:
        raise PreconditionError("columns are not orthonormal")
    if k == d:
        return iso.copy()
    complement = sla.null_space(iso.conj().T)
    return np.hstack([iso, complement])


def expm_hermitian(h: np.ndarray) -> np.ndarray:
    """``exp(i h)`` for Hermitian ``h``."""
    lam, vec = np.linalg.eigh(hermitian_part(h))
    return (vec * np.exp(1j * lam)) @ vec.conj().T
