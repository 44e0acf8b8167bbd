"""Central-cut ellipsoid method for convex feasibility with a separation oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalFailure, PreconditionError


@dataclass
class Cut:
    """Keep ``{z : gradient . (z - centre) <= -depth * sqrt(g' B g)}``.

    ``depth`` is zero for a central cut. ``info`` is copied into the log.
    """

    gradient: np.ndarray
    depth: float = 0.0
    info: dict = field(default_factory=dict)


@dataclass
class Feasible:
    info: dict = field(default_factory=dict)


@dataclass
class EllipsoidResult:
    feasible: bool
    point: np.ndarray
    iterations: int
    cap: int
    log: list
    shape: np.ndarray | None = None
    logvol: float = 0.0


def iteration_cap(n: int, big_r: float, small_r: float) -> int:
    """Steps after which an ellipsoid of radius ``big_r`` can no longer contain a ball of radius ``small_r``."""
    if n == 0:
        return 1
    return max(1, math.ceil(2 * n * (n + 1) * math.log(big_r / small_r)))


def ellipsoid_search(
    n: int,
    big_r: float,
    small_r: float,
    oracle: Callable[[np.ndarray], Cut | Feasible],
    *,
    center: np.ndarray | None = None,
    max_iter: int | None = None,
    deep_cut: bool = False,
) -> EllipsoidResult:
    """Find a point the oracle accepts, or conclude none exists.

    Starts from the ball of radius ``big_r`` around ``center`` (default the
    origin). Stops as soon as the oracle returns :class:`Feasible`; otherwise
    runs ``ceil(2n(n+1) ln(big_r/small_r))`` cuts. Deep cuts use the depth
    the oracle reports; by default every cut is central.
    """
    if not (big_r > 0 and small_r > 0 and big_r > small_r):
        raise PreconditionError("need 0 < small_r < big_r")
    cap = iteration_cap(n, big_r, small_r)
    if max_iter is not None:
        cap = min(cap, max_iter)
    z = np.zeros(n) if center is None else np.array(center, dtype=float)
    shape = big_r**2 * np.eye(n)
    logvol = n * math.log(big_r)
    log = []
    for it in range(1, cap + 1):
        answer = oracle(z)
        entry = {"iter": it, "logvol": logvol, **answer.info}
        log.append(entry)
        if isinstance(answer, Feasible):
            return EllipsoidResult(True, z, it, cap, log, shape, logvol)
        if n == 0:
            return EllipsoidResult(False, z, it, cap, log, shape, logvol)
        g = np.asarray(answer.gradient, dtype=float)
        bg = shape @ g
        gbg = float(g @ bg)
        if not np.isfinite(gbg) or gbg < 0:
            raise NumericalFailure("ellipsoid shape matrix lost positive definiteness",
                                   {"iter": it, "gBg": gbg, "log_tail": log[-5:]})
        if gbg == 0.0 or np.sqrt(gbg) <= 1e-300:
            # the cut is constant on the search space and excludes all of it
            return EllipsoidResult(False, z, it, cap, log, shape, logvol)
        alpha = answer.depth / np.sqrt(gbg) if deep_cut else 0.0
        if alpha >= 1:
            return EllipsoidResult(False, z, it, cap, log, shape, logvol)
        b = bg / np.sqrt(gbg)
        if n == 1:
            # an interval: keep the surviving part
            lo, hi = z[0] - np.sqrt(shape[0, 0]), z[0] + np.sqrt(shape[0, 0])
            cut_at = z[0] - alpha * np.sqrt(shape[0, 0]) * np.sign(g[0])
            lo, hi = (lo, cut_at) if g[0] > 0 else (cut_at, hi)
            z = np.array([(lo + hi) / 2])
            shape = np.array([[((hi - lo) / 2) ** 2]])
            logvol = math.log((hi - lo) / 2)
            continue
        tau = (1 + n * alpha) / (n + 1)
        z = z - tau * b
        factor = n * n * (1 - alpha * alpha) / (n * n - 1)
        shrink = 2 * (1 + n * alpha) / ((n + 1) * (1 + alpha))
        shape = factor * (shape - shrink * np.outer(b, b))
        shape = (shape + shape.T) / 2
        logvol += 0.5 * (n * math.log(factor) + math.log(1 - shrink))
    return EllipsoidResult(False, z, cap, cap, log, shape, logvol)
