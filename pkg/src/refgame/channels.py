"""Quantum channels given by Stinespring unitaries, and convex sets of states.

A :class:`MixedCircuit` stores one unitary ``U`` on ``F (x) G (x) E`` (input,
output, environment, in that order). The channel it implements is

    rho  ->  Tr_{F (x) E} U (rho (x) |00><00|) U*.

Convex sets of states (channel images and convex hulls of listed states) expose
the linear data the distinguisher's SDP needs: variable blocks, the linear map
from those blocks to output states, and normalisation rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .linalg import (
    SpaceLayout,
    as_density,
    as_unitary,
    haar_unitary,
    hermitian_basis,
    partial_trace,
    random_density,
    real_embed,
    unitary_from_isometry,
)


@dataclass(frozen=True)
class MixedCircuit:
    """A channel ``F -> G`` presented by a Stinespring unitary on ``F, G, E``."""

    unitary: np.ndarray
    in_dim: int
    out_dim: int
    env_dim: int

    def __post_init__(self):
        d = self.in_dim * self.out_dim * self.env_dim
        u = np.asarray(self.unitary, dtype=complex)
        if u.shape != (d, d):
            raise PreconditionError(f"Stinespring unitary must be {d}x{d}, got {u.shape}")
        object.__setattr__(self, "unitary", as_unitary(u))

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout([("in", self.in_dim), ("out", self.out_dim), ("env", self.env_dim)])

    def _input_columns(self) -> np.ndarray:
        return np.arange(self.in_dim) * self.out_dim * self.env_dim

    def apply(self, rho) -> np.ndarray:
        rho = as_density(rho)
        if rho.shape != (self.in_dim, self.in_dim):
            raise PreconditionError(f"input must be {self.in_dim}x{self.in_dim}")
        fresh = np.zeros((self.out_dim * self.env_dim,) * 2, dtype=complex)
        fresh[0, 0] = 1.0
        big = self.unitary @ np.kron(rho, fresh) @ self.unitary.conj().T
        return partial_trace(big, self.layout, ["in", "env"])

    def apply_linear(self, x) -> np.ndarray:
        """The channel's linear extension, for arbitrary square inputs."""
        k = self.kraus()
        return np.einsum("kab,bc,kdc->ad", k, np.asarray(x, dtype=complex), k.conj())

    def kraus(self) -> np.ndarray:
        """Kraus operators read from the columns ``|f, 0, 0>`` of the unitary.

        Returned with shape ``(in_dim * env_dim, out_dim, in_dim)``.
        """
        iso = self.unitary[:, self._input_columns()]
        t = iso.reshape(self.in_dim, self.out_dim, self.env_dim, self.in_dim)
        return t.transpose(0, 2, 1, 3).reshape(-1, self.out_dim, self.in_dim)

    def real_matrix(self) -> np.ndarray:
        """Matrix of the channel in real-embedding coordinates (out^2 x in^2)."""
        basis = hermitian_basis(self.in_dim)
        k = self.kraus()
        images = np.einsum("kab,nbc,kdc->nad", k, basis, k.conj())
        return real_embed(images).T

    @classmethod
    def from_kraus(cls, kraus, env_dim: int | None = None) -> "MixedCircuit":
        """Build a Stinespring unitary realising the channel with these Kraus operators."""
        kraus = np.asarray(kraus, dtype=complex)
        n_ops, d_out, d_in = kraus.shape
        env_dim = d_out if env_dim is None else env_dim
        if n_ops > d_in * env_dim:
            raise PreconditionError(f"{n_ops} Kraus operators do not fit an environment of size {env_dim}")
        # |f> -> |0>_F (x) sum_k K_k|f> (x) |k>_E, with Kraus index k = (f', e)
        iso = np.zeros((d_in, d_out, env_dim, d_in), dtype=complex)
        for idx in range(n_ops):
            f_idx, e_idx = divmod(idx, env_dim)
            iso[f_idx, :, e_idx, :] = kraus[idx]
        iso = iso.reshape(-1, d_in)
        gram = iso.conj().T @ iso
        if np.max(np.abs(gram - np.eye(d_in))) > 1e-9:
            raise PreconditionError("Kraus operators are not trace preserving")
        full = unitary_from_isometry(iso)
        d = full.shape[0]
        cols = np.arange(d_in) * d_out * env_dim
        others = np.setdiff1d(np.arange(d), cols)
        u = np.empty_like(full)
        u[:, cols] = full[:, :d_in]
        u[:, others] = full[:, d_in:]
        return cls(u, d_in, d_out, env_dim)

    @classmethod
    def identity(cls, dim: int, env_dim: int = 1) -> "MixedCircuit":
        return cls.from_kraus(np.eye(dim)[None], env_dim)

    @classmethod
    def constant(cls, state, in_dim: int, env_dim: int | None = None) -> "MixedCircuit":
        """Channel that discards its input and outputs ``state``."""
        state = as_density(state)
        lam, vec = np.linalg.eigh(state)
        kraus = []
        for l, v in zip(lam, vec.T):
            if l > 1e-14:
                for f in range(in_dim):
                    e = np.zeros(in_dim)
                    e[f] = 1
                    kraus.append(np.sqrt(l) * np.outer(v, e))
        env_dim = max(len(kraus) // in_dim, 1) if env_dim is None else env_dim
        return cls.from_kraus(np.array(kraus), env_dim)

    @classmethod
    def random(cls, in_dim: int, out_dim: int, env_dim: int, rng: np.random.Generator) -> "MixedCircuit":
        return cls(haar_unitary(in_dim * out_dim * env_dim, rng), in_dim, out_dim, env_dim)


def choi_matrix(channel: MixedCircuit) -> np.ndarray:
    k = channel.kraus()
    vecs = k.transpose(0, 2, 1).reshape(k.shape[0], -1)  # vec(K) with input index first
    return np.einsum("ka,kb->ab", vecs, vecs.conj())


# --------------------------------------------------------------------------
# convex sets of states


class ConvexStateSet:
    """Interface for sets the distinguisher optimises over.

    Subclasses describe the set as the image of a product of PSD blocks under
    a linear map, subject to linear normalisation constraints.
    """

    out_dim: int

    def block_dims(self) -> tuple:
        raise NotImplementedError

    def image_matrix(self) -> np.ndarray:
        """Real matrix from concatenated block coordinates to output coordinates."""
        raise NotImplementedError

    def normalisation(self):
        """Rows and right-hand sides of the normalisation constraints."""
        raise NotImplementedError

    def interior_point(self) -> list:
        raise NotImplementedError

    def state_of(self, blocks) -> np.ndarray:
        raise NotImplementedError

    def min_overlap(self, k) -> float:
        """``min <K, sigma>`` over states ``sigma`` in the set."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class ChannelImage(ConvexStateSet):
    """The set ``{Q(rho) : rho a density matrix}``."""

    def __init__(self, channel: MixedCircuit):
        self.channel = channel
        self.out_dim = channel.out_dim

    def block_dims(self):
        return (self.channel.in_dim,)

    def image_matrix(self):
        return self.channel.real_matrix()

    def normalisation(self):
        return real_embed(np.eye(self.channel.in_dim))[None], np.array([1.0])

    def interior_point(self):
        return [np.eye(self.channel.in_dim) / self.channel.in_dim]

    def state_of(self, blocks):
        return self.channel.apply_linear(blocks[0])

    def min_overlap(self, k):
        kr = self.channel.kraus()
        dual = np.einsum("kba,bc,kcd->ad", kr.conj(), np.asarray(k, dtype=complex), kr)
        return float(np.linalg.eigvalsh((dual + dual.conj().T) / 2)[0])

    def sample(self, rng):
        rank = int(rng.integers(1, self.channel.in_dim + 1))
        return self.channel.apply(random_density(self.channel.in_dim, rng, rank))


class HullSet(ConvexStateSet):
    """Convex hull of finitely many density matrices."""

    def __init__(self, states):
        states = [as_density(s) for s in states]
        if not states:
            raise PreconditionError("a hull needs at least one state")
        dims = {s.shape[0] for s in states}
        if len(dims) != 1:
            raise PreconditionError("hull states must share a dimension")
        self.states = states
        self.out_dim = dims.pop()

    def block_dims(self):
        return (1,) * len(self.states)

    def image_matrix(self):
        return real_embed(np.array(self.states)).T

    def normalisation(self):
        return np.ones((1, len(self.states))), np.array([1.0])

    def interior_point(self):
        n = len(self.states)
        return [np.full((1, 1), 1.0 / n) for _ in range(n)]

    def state_of(self, blocks):
        return sum(float(np.real(b[0, 0])) * s for b, s in zip(blocks, self.states))

    def min_overlap(self, k):
        return float(min(np.real(np.vdot(k, s)) for s in self.states))

    def sample(self, rng):
        w = rng.dirichlet(np.ones(len(self.states)))
        return sum(wi * s for wi, s in zip(w, self.states))


def images_disjoint_pair(rng: np.random.Generator, dim: int = 2, shrink: float = 0.3):
    """Two channels whose images are well separated (used by tests and demos).

    Each channel mixes a fixed basis state with a random channel's output, so
    its image is a small region around that state; the two centres are
    orthogonal.
    """
    out = []
    for centre in np.eye(dim)[:2]:
        base = MixedCircuit.random(dim, dim, dim, rng).kraus()
        fixed = [np.outer(centre, np.eye(dim)[f]) for f in range(dim)]
        kraus = np.concatenate([np.sqrt(shrink) * base, np.sqrt(1 - shrink) * np.array(fixed)])
        out.append(MixedCircuit.from_kraus(kraus, -(-kraus.shape[0] // dim)))
    return out[0], out[1]
