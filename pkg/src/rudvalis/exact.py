"""Exact distribution evolution for small decks.

The lifted state ``(deck, y)`` is indexed as ``rank(deck) * n + y`` where
``rank`` is the Lehmer-code rank (lexicographic order of
``itertools.permutations``).  Each step scatters probability along at most
four successor arrays with ``np.bincount``; the reduction order is fixed, so
results are bitwise reproducible.

The position of a single card is a Markov chain on its own, and is handled
with dense ``n x n`` matrices for ``n`` in the hundreds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from rudvalis.errors import CapExceededError, ValidationError
from rudvalis.shuffles import LiftedState, ShuffleSpec, apply_move
from rudvalis.spectral import EigenSystem, build_twisted_matrix, phase_table

STATE_CAP = 10**6


def lehmer_rank(perms: np.ndarray) -> np.ndarray:
    """Lexicographic rank of each row of ``perms`` (permutations of 0..n-1)."""
    perms = np.atleast_2d(perms)
    n = perms.shape[1]
    smaller_after = np.triu(perms[:, None, :] < perms[:, :, None], k=1).sum(axis=2)
    weights = np.array([math.factorial(n - 1 - i) for i in range(n)], dtype=np.int64)
    return smaller_after @ weights


def lehmer_unrank(rank: int, n: int) -> tuple[int, ...]:
    items = list(range(n))
    out = []
    for i in range(n - 1, -1, -1):
        q, rank = divmod(rank, math.factorial(i))
        out.append(items.pop(q))
    return tuple(out)


@dataclass(frozen=True)
class DistVector:
    """Probabilities over lifted states ``rank * n + y``."""

    n: int
    probs: np.ndarray

    def perm_marginal(self) -> np.ndarray:
        return self.probs.reshape(-1, self.n).sum(axis=1)

    def y_marginal(self) -> np.ndarray:
        return self.probs.reshape(-1, self.n).sum(axis=0)


class LiftedChain:
    """Successor tables of the lifted chain for one :class:`ShuffleSpec`."""

    def __init__(self, spec: ShuffleSpec):
        n = spec.n
        self.check_cap(n)
        self.spec = spec
        self.n = n
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        self.size = len(self.perms) * n
        y = np.arange(n)
        self.moves = []
        for move, q in spec.moves:
            src = np.array(apply_move(range(n), move))
            ranks = lehmer_rank(self.perms[:, src])
            succ = (ranks[:, None] * n + (y[None, :] + move.shift) % n).reshape(-1)
            self.moves.append((float(q), succ))

    @staticmethod
    def check_cap(n: int) -> None:
        if math.factorial(n) * n > STATE_CAP:
            raise CapExceededError(
                f"n={n} gives {math.factorial(n) * n} lifted states (cap {STATE_CAP})"
            )

    def index(self, state: LiftedState) -> int:
        deck = np.asarray(state.deck) - min(state.deck)
        return int(lehmer_rank(deck)[0]) * self.n + state.y % self.n

    def point_mass(self, state: LiftedState | None = None) -> np.ndarray:
        state = LiftedState.start(self.n) if state is None else state
        p = np.zeros(self.size)
        p[self.index(state)] = 1.0
        return p

    def step(self, p: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size)
        for q, succ in self.moves:
            out += np.bincount(succ, weights=q * p, minlength=self.size)
        return out

    def evolve(self, t_max: int, state: LiftedState | None = None) -> Iterator[np.ndarray]:
        """Yield the distributions at t = 0..t_max."""
        p = self.point_mass(state)
        yield p
        for _ in range(t_max):
            p = self.step(p)
            yield p

    def psi_values(self, es: EigenSystem) -> np.ndarray:
        """Eigenfunction over all lifted states, reference deck = identity."""
        if es.n != self.n:
            raise ValidationError(f"eigensystem n={es.n} does not match chain n={self.n}")
        n = self.n
        wt = phase_table(n)
        pos = np.arange(n)
        at_y0 = (es.v[None, :] * wt[(pos[None, :] - self.perms) % n]).sum(axis=1)
        return (at_y0[:, None] * wt[None, :]).reshape(-1)


def evolve_full(spec: ShuffleSpec, t: int, state: LiftedState | None = None) -> DistVector:
    """Exact law of the lifted chain after ``t`` steps from ``state``."""
    chain = LiftedChain(spec)
    for p in chain.evolve(t, state):
        pass
    return DistVector(spec.n, p)


def tv_to_uniform(dist: DistVector) -> float:
    """Total variation of the permutation marginal from the uniform law."""
    marg = dist.perm_marginal()
    return 0.5 * float(np.abs(marg - 1.0 / len(marg)).sum())


def psi_moment_series(
    spec: ShuffleSpec, es: EigenSystem, t_max: int, state: LiftedState | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """``E[Psi_t]`` and ``E[|Psi_t|^2]`` for t = 0..t_max."""
    chain = LiftedChain(spec)
    psi = chain.psi_values(es)
    abs2 = np.abs(psi) ** 2
    means, seconds = [], []
    for p in chain.evolve(t_max, state):
        means.append(p @ psi)
        seconds.append(p @ abs2)
    return np.array(means), np.array(seconds)


def psi_moments_exact(
    spec: ShuffleSpec, es: EigenSystem, t: int, state: LiftedState | None = None
) -> tuple[complex, float]:
    means, seconds = psi_moment_series(spec, es, t, state)
    return complex(means[-1]), float(seconds[-1])


def exact_curve(spec: ShuffleSpec, t_max: int, es: EigenSystem | None = None) -> dict:
    """Columns ``t, tv, mean_re, mean_im, var`` from the identity start.

    Without an eigensystem the moment columns are NaN.
    """
    chain = LiftedChain(spec)
    psi = chain.psi_values(es) if es is not None else None
    rows = {k: [] for k in ("t", "tv", "mean_re", "mean_im", "var")}
    nfact = len(chain.perms)
    for t, p in enumerate(chain.evolve(t_max)):
        marg = p.reshape(-1, chain.n).sum(axis=1)
        rows["t"].append(t)
        rows["tv"].append(0.5 * float(np.abs(marg - 1.0 / nfact).sum()))
        if psi is None:
            mean, var = complex("nan"), float("nan")
        else:
            mean = complex(p @ psi)
            var = float(p @ (np.abs(psi) ** 2)) - abs(mean) ** 2
        rows["mean_re"].append(mean.real)
        rows["mean_im"].append(mean.imag)
        rows["var"].append(var)
    return rows


# ---------------------------------------------------------------------------
# single card position


def card_chain_matrix(spec: ShuffleSpec) -> np.ndarray:
    """Row-stochastic transition matrix of one card's position."""
    return build_twisted_matrix(spec, w=1.0).real


def _tv_positions(p: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - 1.0 / len(p)).sum())


def single_card_tv_curve(
    spec: ShuffleSpec, t_grid: Sequence[int], start: int = 1
) -> list[tuple[int, float]]:
    """Exact TV of the card-position law to uniform at each t in ``t_grid``.

    The card starts at position ``start`` (1 = top).
    """
    if spec.n > 512:
        raise CapExceededError(f"single-card curves are limited to n <= 512, got {spec.n}")
    P = card_chain_matrix(spec)
    p = np.zeros(spec.n)
    p[start - 1] = 1.0
    out, now = [], 0
    for t in sorted(t_grid):
        if t > now:
            p = p @ np.linalg.matrix_power(P, t - now)
            now = t
        out.append((t, _tv_positions(p)))
    return out


def auto_tv_curve(spec: ShuffleSpec, threshold: float = 0.25, start: int = 1, t_cap: int = 2**40):
    """TV at t = 0, 1, 2, 4, ... stopping at the first value below ``threshold``."""
    P = card_chain_matrix(spec)
    p = np.zeros(spec.n)
    p[start - 1] = 1.0
    out = [(0, _tv_positions(p))]
    t, step = 1, P
    p = p @ P
    while True:
        tv = _tv_positions(p)
        out.append((t, tv))
        if tv < threshold or t >= t_cap:
            return out
        p = p @ step
        step = step @ step
        t *= 2


def single_card_mixing_time(spec: ShuffleSpec, threshold: float = 0.25, start: int = 1) -> int:
    """First t with card-position TV below ``threshold``.

    Binary lifting over ``P**(2**k)``; valid because the TV of a doubly
    stochastic chain to uniform never increases.
    """
    P = card_chain_matrix(spec)
    p0 = np.zeros(spec.n)
    p0[start - 1] = 1.0
    if _tv_positions(p0) < threshold:
        return 0
    powers = [P]
    while _tv_positions(p0 @ powers[-1]) >= threshold:
        if len(powers) > 62:
            raise ValidationError("card position does not mix below threshold")
        powers.append(powers[-1] @ powers[-1])
    p, t = p0, 0
    for k in range(len(powers) - 1, -1, -1):
        cand = p @ powers[k]
        if _tv_positions(cand) >= threshold:
            p, t = cand, t + 2**k
    return t + 1


def fit_exponent(ns: Sequence[int], ts: Sequence[int]) -> float:
    """Slope of the least-squares line through ``(log n, log t)``."""
    slope, _ = np.polyfit(np.log(ns), np.log(ts), 1)
    return float(slope)
