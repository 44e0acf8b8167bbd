"""Direct simulation, heuristic prover search and saddle-point estimates.

Simulation and prover search never solve an SDP to score a strategy; they
evolve state vectors, which makes them an independent check on the
transcript-based solvers. The saddle estimate, by contrast, is built from
exact SDP best responses.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import PreconditionError
from ..games import (
    NO_SPACE,
    PROVER_SPACE,
    YES_SPACE,
    DqipVerifier,
    QipVerifier,
    qrg_value_given_yes,
    yes_value_against_pool,
)
from ..linalg import SpaceLayout, apply_to_state, expm_hermitian, ground_state, haar_unitary, hermitian_basis
from ..transcript import ProverStrategy, prover_value, transcript_to_prover

SEED_ENV = "REFGAME_SEED"


@dataclass
class RunConfig:
    """Everything that influences a randomised run."""

    seed: int = 0
    restarts: int = 20
    max_sweeps: int = 400
    initial_step: float = 0.5
    min_step: float = 1e-5
    private_dim: int | None = None
    saddle_rounds: int = 40
    saddle_gap: float = 1e-6
    epsilon: float = 1e-7

    @classmethod
    def resolve(cls, seed: int | None = None, **overrides) -> "RunConfig":
        """The command-line seed wins over the environment variable, which wins over 0."""
        if seed is None:
            env = os.environ.get(SEED_ENV)
            if env is not None:
                try:
                    seed = int(env)
                except ValueError:
                    raise PreconditionError(f"{SEED_ENV} must be an integer, got {env!r}") from None
            else:
                seed = 0
        return cls(seed=seed, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# simulation


def simulate(verifier, yes_prover: ProverStrategy, no_prover: ProverStrategy | None = None) -> float:
    """Acceptance probability of an explicit interaction.

    For a :class:`QipVerifier` pass the prover as ``yes_prover``; its
    unitaries act on the message factors then its private space ``P``. For a
    :class:`DqipVerifier` the yes-prover acts on ``M_Y`` then ``Y`` and the
    no-prover on ``M_N`` then ``N``.
    """
    _, accept, _ = verifier.projectors()
    v_labels = list(verifier.layout.labels)
    if isinstance(verifier, QipVerifier):
        layout = SpaceLayout([(PROVER_SPACE, yes_prover.env_dim)]) + verifier.layout
        psi = ground_state(layout.total_dim)
        psi = apply_to_state(psi, verifier.rounds[0], v_labels, layout)
        acting = list(verifier.message_labels) + [PROVER_SPACE]
        if len(yes_prover.unitaries) != verifier.r:
            raise PreconditionError("prover and verifier disagree on the number of rounds")
        for v, p in zip(verifier.rounds[1:], yes_prover.unitaries):
            psi = apply_to_state(psi, p, acting, layout)
            psi = apply_to_state(psi, v, v_labels, layout)
    elif isinstance(verifier, DqipVerifier):
        if no_prover is None:
            raise PreconditionError("a two-prover game needs both provers")
        if len(yes_prover.unitaries) != verifier.r1 or len(no_prover.unitaries) != verifier.r2:
            raise PreconditionError("provers and verifier disagree on the number of rounds")
        layout = (SpaceLayout([(YES_SPACE, yes_prover.env_dim)]) + verifier.layout
                  + SpaceLayout([(NO_SPACE, no_prover.env_dim)]))
        psi = ground_state(layout.total_dim)
        psi = apply_to_state(psi, verifier.yes_rounds[0], v_labels, layout)
        yes_acting = list(verifier.yes_labels) + [YES_SPACE]
        for v, y in zip(verifier.yes_rounds[1:], yes_prover.unitaries):
            psi = apply_to_state(psi, y, yes_acting, layout)
            psi = apply_to_state(psi, v, v_labels, layout)
        no_acting = list(verifier.no_labels) + [NO_SPACE]
        for w, n in zip(verifier.no_rounds, no_prover.unitaries):
            psi = apply_to_state(psi, n, no_acting, layout)
            psi = apply_to_state(psi, w, v_labels, layout)
    else:
        raise PreconditionError("expected a QipVerifier or DqipVerifier")
    psi = apply_to_state(psi, accept, v_labels, layout)
    return float(np.real(np.vdot(psi, psi)))


# --------------------------------------------------------------------------
# search


@dataclass
class SearchResult:
    prover: ProverStrategy
    value: float
    restart_values: list = field(default_factory=list)


def _compass_search(score, dims, start, config: RunConfig):
    """Maximise ``score(unitaries)`` by left-multiplying one-parameter unitaries.

    Each sweep tries ``exp(+-i s G)`` for every Hermitian basis element ``G``
    of every round; the step ``s`` halves after a sweep without improvement.
    """
    current = [u.copy() for u in start]
    best = score(current)
    bases = {d: hermitian_basis(d) for d in set(dims)}
    step = config.initial_step
    sweeps = 0
    moves, moves_step = None, None
    while step >= config.min_step and sweeps < config.max_sweeps:
        sweeps += 1
        if moves_step != step:
            moves = {d: [(expm_hermitian(step * g), expm_hermitian(-step * g)) for g in bases[d]] for d in bases}
            moves_step = step
        improved = False
        for i, d in enumerate(dims):
            for plus, minus in moves[d]:
                for m in (plus, minus):
                    trial = current[:i] + [m @ current[i]] + current[i + 1:]
                    val = score(trial)
                    if val > best + 1e-15:
                        current, best, improved = trial, val, True
                        break
        if not improved:
            step /= 2
    return current, best


def _search(sequences, env_dim: int, config: RunConfig):
    """Best prover for the one-prover systems ``sequences`` (score = min over them)."""
    rounds0 = sequences[0]
    dim = rounds0.dim_g * env_dim
    dims = [dim] * rounds0.r

    def score(unitaries):
        p = ProverStrategy(unitaries, env_dim)
        return min(prover_value(s, p) for s in sequences)

    streams = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best, values = None, []
    for ss in streams:
        rng = np.random.default_rng(ss)
        init = [haar_unitary(d, rng) for d in dims]
        unitaries, val = _compass_search(score, dims, init, config)
        values.append(val)
        if best is None or val > best[1]:
            best = (unitaries, val)
    return SearchResult(ProverStrategy(best[0], env_dim), best[1], values)


def search_prover(verifier, role: str, config: RunConfig, opponent: ProverStrategy | None = None,
                  private_dim: int | None = None) -> SearchResult:
    """Randomised local search for a good prover.

    ``role`` is ``"prover"`` for a one-prover system (maximises acceptance),
    ``"yes"`` (maximises acceptance against ``opponent``, a no-prover) or
    ``"no"`` (maximises rejection against ``opponent``, a yes-prover). The
    value reported is the probability the searching prover is maximising.
    Deterministic for a fixed ``config.seed``.
    """
    private_dim = private_dim or config.private_dim
    if isinstance(verifier, QipVerifier):
        if role != "prover":
            raise PreconditionError("one-prover systems only have the role 'prover'")
        rounds = verifier.round_sequence()
        seqs = [rounds]
    elif isinstance(verifier, DqipVerifier):
        if opponent is None:
            raise PreconditionError("searching in a two-prover game needs a fixed opponent")
        if role == "yes":
            seqs = [verifier.yes_against(opponent)]
        elif role == "no":
            seqs = [verifier.no_sequence(opponent)]
        else:
            raise PreconditionError(f"unknown role {role!r}")
    else:
        raise PreconditionError("expected a QipVerifier or DqipVerifier")
    env = private_dim or seqs[0].dim_f * seqs[0].dim_g
    return _search(seqs, env, config)


@dataclass
class SaddleResult:
    value: float
    yes_prover: ProverStrategy
    no_prover: ProverStrategy
    history: list
    lower_bound: float = 0.0


def saddle_value(verifier: DqipVerifier, config: RunConfig) -> SaddleResult:
    """Estimate ``min_yes max_no Pr[reject]`` by alternating exact best responses.

    Each sweep adds the no-prover's best response (a transcript SDP) to a pool
    and replaces the yes-prover by its best response to the whole pool (one
    more SDP). ``value`` is the exact worst-case rejection of the best
    yes-prover seen, an upper bound on the saddle value; ``lower_bound`` is a
    certified lower bound from the pool problem. ``history`` traces ``value``
    per sweep. Stops after ``config.saddle_rounds`` sweeps or once the bounds
    are within ``config.saddle_gap``.
    """
    yes_seq = verifier.yes_sequence()
    h = config.private_dim or yes_seq.dim_f
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    yes = ProverStrategy([haar_unitary(yes_seq.dim_g * h, rng) for _ in range(verifier.r1)], h)
    pool, history, best, lower = [], [], None, 0.0
    for _ in range(config.saddle_rounds):
        sol = qrg_value_given_yes(verifier, yes, config.epsilon)
        no = transcript_to_prover(verifier.no_sequence(yes), sol.transcript)
        if best is None or sol.value < best[0]:
            best = (sol.value, yes, no)
        history.append(best[0])
        if best[0] - lower <= config.saddle_gap:
            break
        pool.append(no)
        response = yes_value_against_pool(verifier, pool, config.epsilon)
        lower = max(lower, 1 - response.upper_bound)
        yes = response.yes_prover
    return SaddleResult(best[0], best[1], best[2], history, lower)
