"""Seeded simulation of the lifted shuffles at larger deck sizes.

Random streams
--------------
Every stream is a PCG64 generator seeded by ``SeedSequence(seed, spawn_key=key)``:

* ``(0, trial)`` -- the moves of trial ``trial`` in :func:`sample_psi`;
* ``(1,)`` -- stationary draws in :func:`stationary_psi`;
* ``(2,)`` -- :func:`coupling_parity` and :func:`shift_count_equivalence`.

Results therefore depend only on ``(seed, trial)``, never on how many trials
run or in which order.

Deck representation
-------------------
Long runs keep the deck in a circular buffer: position ``i`` (0 = top) holds
``buf[(off + i) % n]``, so a shift only moves ``off`` and a swap exchanges
two buffer slots.  Cards are labelled ``0..n-1`` by their starting position.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from rudvalis.shuffles import Move, ShuffleSpec, apply_move, draw_moves, move_sampler
from rudvalis.spectral import EigenSystem, phase_table, psi_eval

CHUNK = 1 << 16


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, trial)))


def _aux_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


# per move code: does it swap top and bottom, and its shift (+1 left, -1 right)
_SWAPS = np.array([0, 0, 0, 1, 1], dtype=np.int64)
_SHIFTS = np.array([0, 1, -1, 0, 1], dtype=np.int64)


@njit(cache=True)
def _apply_codes(buf, off, y, raw, table, swaps, shifts):  # pragma: no cover - compiled
    # branch-free: random move codes defeat the branch predictor
    n = buf.shape[0]
    for r in raw:
        c = table[r]
        j = off - 1 + n * (off == 0)
        a = buf[off]
        b = buf[j]
        d = swaps[c] * (b - a)
        buf[off] = a + d
        buf[j] = b - d
        h = shifts[c]
        off += h
        off += n * (off < 0) - n * (off >= n)
        y += h
        y += n * (y < 0) - n * (y >= n)
    return off, y


def apply_codes(buf: np.ndarray, off: int, y: int, codes: np.ndarray) -> tuple[int, int]:
    """Apply move codes to a circular-buffer deck in place."""
    identity = np.arange(256, dtype=np.uint8)
    return _apply_codes(buf, off, y, np.asarray(codes, dtype=np.uint8), identity, _SWAPS, _SHIFTS)


def simulate_deck(spec: ShuffleSpec, t: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Run ``t`` lifted steps from the identity; returns (deck top-to-bottom, y)."""
    n = spec.n
    sample = move_sampler(spec)
    buf = np.arange(n, dtype=np.int64)
    off, y = 0, 0
    left = t
    while left > 0:
        k = min(left, CHUNK)
        raw, table = sample(rng, k)
        off, y = _apply_codes(buf, off, y, raw, table, _SWAPS, _SHIFTS)
        left -= k
    return np.roll(buf, -off), int(y)


def psi_of(deck: np.ndarray, y, es: EigenSystem) -> np.ndarray:
    """Eigenfunction for decks labelled by starting position (vectorised over rows)."""
    n = es.n
    z = (np.arange(n) - np.asarray(deck) + np.asarray(y)[..., None]) % n
    return (es.v * phase_table(n)[z]).sum(axis=-1)


@dataclass(frozen=True)
class TrialBatch:
    spec: ShuffleSpec
    es: EigenSystem = field(repr=False)
    t: int
    trials: int
    seed: int
    samples: np.ndarray = field(repr=False)

    @property
    def mean(self) -> complex:
        return complex(self.samples.mean())

    @property
    def variance(self) -> float:
        """Unbiased sample variance ``E|Psi - E Psi|^2``."""
        if self.trials < 2:
            return 0.0
        return float(np.sum(np.abs(self.samples - self.samples.mean()) ** 2) / (self.trials - 1))

    def rows(self):
        for i, s in enumerate(self.samples):
            yield i, s.real, s.imag, abs(s)


def sample_psi(spec: ShuffleSpec, es: EigenSystem, t: int, trials: int, seed: int) -> TrialBatch:
    """``trials`` independent values of ``Psi_t`` from the identity start."""
    decks = np.empty((trials, spec.n), dtype=np.int64)
    ys = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        decks[i], ys[i] = simulate_deck(spec, t, trial_rng(seed, i))
    return TrialBatch(spec, es, t, trials, seed, psi_of(decks, ys, es))


def stationary_psi(es: EigenSystem, count: int, seed: int, t: int | None = None) -> np.ndarray:
    """``Psi`` at exactly stationary states: uniform deck, uniform y.

    The Rudvalis lift is periodic (``y = t mod n``), so there ``y`` is pinned
    to ``t mod n`` when ``t`` is given.
    """
    n = es.n
    rng = _aux_rng(seed, 1)
    decks = rng.permuted(np.tile(np.arange(n), (count, 1)), axis=1)
    if es.spec.kind == "rudvalis" and t is not None:
        ys = np.full(count, t % n)
    else:
        ys = rng.integers(0, n, size=count)
    return psi_of(decks, ys, es)


def separation_test(batch: TrialBatch, stationary: int, epsilon: float) -> tuple[float, float]:
    """Distinguish time-t from stationarity with ``A = {|Psi| >= threshold}``.

    Returns ``threshold = sqrt(R / (gamma eps))`` and the empirical
    ``P_t(A) - P_inf(A)``, a lower-bound estimate of total variation.
    """
    es = batch.es
    threshold = float(np.sqrt(es.r_bound / (es.gamma * epsilon)))
    ref = stationary_psi(es, stationary, batch.seed, batch.t)
    hit_t = float(np.mean(np.abs(batch.samples) >= threshold))
    hit_inf = float(np.mean(np.abs(ref) >= threshold))
    return threshold, hit_t - hit_inf


# ---------------------------------------------------------------------------
# incremental eigenfunction along one trajectory


class PsiTracker:
    """Maintain ``Psi`` in O(1) work per move.

    The profile is written as ``v(x) = sum_k c_k rho_k**x`` plus explicit
    corrections at a few exceptional positions.  The sums
    ``M_k = sum_x rho_k**x w**z(x)`` transform by a common factor under a
    shift, with a fix-up for the card that wraps around; swaps touch two
    terms.  Rounding drift is cleared by a full recomputation every
    ``renormalize_every`` moves (0 disables it).
    """

    def __init__(self, es: EigenSystem, renormalize_every: int = 10_000):
        n = es.n
        self.es = es
        self.n = n
        self.renormalize_every = renormalize_every
        self.wt = phase_table(n)
        x = np.arange(1, n + 1)
        if es.spec.kind == "symmetrized":
            centre = (n + 1) / 2
            a, b = (1 + es.delta) / 2, (1 - es.delta) / 2
            e = np.exp(1j * es.theta)
            self.rho = np.array([e, 1 / e])
            self.coef = np.array([a * np.exp(-1j * es.theta * centre), b * np.exp(1j * es.theta * centre)])
            self.exceptions = np.array([], dtype=np.int64)
        else:
            r = es.lam if es.spec.kind == "rudvalis" else 2 * es.lam - 1
            self.rho = np.array([1 / r])
            self.coef = np.array([es.v[0] * r])  # c rho**1 == v(1)
            self.exceptions = np.array([n], dtype=np.int64)
        # rho_k**x for x = 0..n
        self.rpow = np.exp(np.outer(np.log(self.rho), np.arange(n + 1)))
        modal = self.coef @ self.rpow[:, x]
        self.correction = es.v - modal  # nonzero only at exceptional positions
        self.buf = list(range(n))
        self.off = 0
        self.y = 0
        self.z = [0] * n
        self.steps = 0
        self._recompute()

    def card_at(self, pos: int) -> int:
        """Card at 1-based position ``pos``."""
        return self.buf[(self.off + pos - 1) % self.n]

    def deck(self) -> tuple[int, ...]:
        return tuple(self.card_at(i) for i in range(1, self.n + 1))

    def _recompute(self) -> None:
        deck = np.array(self.deck())
        phases = self.wt[np.array(self.z)[deck]]
        self.M = self.rpow[:, 1:] @ phases

    def value(self) -> complex:
        total = complex(self.coef @ self.M)
        for x in self.exceptions:
            total += self.correction[x - 1] * self.wt[self.z[self.card_at(x)]]
        return total

    def step(self, move: Move) -> None:
        n, wt, rp = self.n, self.wt, self.rpow
        if move is Move.SWAP_SHIFT_LEFT:
            self.step(Move.SWAP)
            self.steps -= 1
            move = Move.SHIFT_LEFT
        if move is Move.SHIFT_LEFT:
            ph = wt[self.z[self.card_at(1)]]
            self.M = (self.M - rp[:, 1] * ph) / self.rho + rp[:, n] * ph
            self.off = (self.off + 1) % n
            self.y = (self.y + 1) % n
        elif move is Move.SHIFT_RIGHT:
            ph = wt[self.z[self.card_at(n)]]
            self.M = (self.M - rp[:, n] * ph) * self.rho + rp[:, 1] * ph
            self.off = (self.off - 1) % n
            self.y = (self.y - 1) % n
        elif move is Move.SWAP:
            top, bottom = self.card_at(1), self.card_at(n)
            self.M = self.M - rp[:, 1] * wt[self.z[top]] - rp[:, n] * wt[self.z[bottom]]
            self.z[top] = (self.z[top] - 1) % n
            self.z[bottom] = (self.z[bottom] + 1) % n
            self.M = self.M + rp[:, n] * wt[self.z[top]] + rp[:, 1] * wt[self.z[bottom]]
            i, j = self.off, (self.off - 1) % n
            self.buf[i], self.buf[j] = self.buf[j], self.buf[i]
        self.steps += 1
        if self.renormalize_every and self.steps % self.renormalize_every == 0:
            self._recompute()


def psi_trajectory(
    spec: ShuffleSpec, es: EigenSystem, t: int, seed: int, renormalize_every: int = 10_000
) -> tuple[np.ndarray, PsiTracker]:
    """``Psi_0..Psi_t`` along one trajectory (the stream of trial 0)."""
    tracker = PsiTracker(es, renormalize_every)
    out = np.empty(t + 1, dtype=complex)
    out[0] = tracker.value()
    codes = draw_moves(spec, trial_rng(seed, 0), t)
    for k, c in enumerate(codes, start=1):
        tracker.step(Move(int(c)))
        out[k] = tracker.value()
    return out, tracker


def tracker_psi_eval(tracker: PsiTracker) -> complex:
    """Full recomputation of the tracker's current value via :func:`psi_eval`."""
    return psi_eval(tracker.deck(), tracker.y, tracker.es, start=range(tracker.n))


# ---------------------------------------------------------------------------
# shift-or-swap versus Rudvalis(1/3)


def coupling_parity(n: int, total_shifts: int, seed: int) -> float:
    """Fraction of shifts preceded by an odd number of swaps.

    The run of swaps before each shift is counted from the previous shift
    (or from time 0 for the first one).
    """
    spec = _sos_quiet(n)
    rng = _aux_rng(seed, 2)
    odd = 0
    seen = 0
    run = 0
    while seen < total_shifts:
        codes = draw_moves(spec, rng, CHUNK)
        shifts = np.flatnonzero(codes == Move.SHIFT_LEFT)
        if len(shifts) == 0:
            run += len(codes)
            continue
        runs = np.diff(shifts, prepend=-1) - 1
        runs[0] += run
        take = min(len(runs), total_shifts - seen)
        odd += int(np.sum(runs[:take] % 2))
        seen += take
        run = len(codes) - 1 - shifts[-1]
    return odd / total_shifts


def _sos_quiet(n: int) -> ShuffleSpec:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ShuffleSpec.shift_or_swap(n)


@dataclass(frozen=True)
class CouplingReport:
    n: int
    t: int
    epochs: int
    matched: bool
    first_mismatch: int | None
    pending_swaps: int
    final_match: bool

    @property
    def epoch_rate(self) -> float:
        return self.epochs / self.t if self.t else 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "epochs": self.epochs,
            "epoch_rate": self.epoch_rate,
            "matched": self.matched,
            "first_mismatch": self.first_mismatch,
            "pending_swaps": self.pending_swaps,
            "final_match": self.final_match,
        }


def compare_coupled(n: int, moves) -> CouplingReport:
    """Replay shift-or-swap ``moves`` next to the collapsed Rudvalis walk.

    Each maximal run of swaps followed by a shift becomes one Rudvalis move:
    swap-then-shift-left when the run is odd, shift-left when it is even.
    The two decks must agree right after every shift; at the end they differ
    by the parity of the trailing swaps.
    """
    sos = tuple(range(n))
    rud = sos
    pending = 0
    epochs = 0
    first_mismatch = None
    for code in moves:
        move = Move(int(code))
        sos = apply_move(sos, move)
        if move is Move.SWAP:
            pending += 1
            continue
        rud = apply_move(rud, Move.SWAP_SHIFT_LEFT if pending % 2 else Move.SHIFT_LEFT)
        pending = 0
        epochs += 1
        if first_mismatch is None and rud != sos:
            first_mismatch = epochs
    final = apply_move(rud, Move.SWAP) if pending % 2 else rud
    return CouplingReport(
        n=n,
        t=len(moves),
        epochs=epochs,
        matched=first_mismatch is None,
        first_mismatch=first_mismatch,
        pending_swaps=pending,
        final_match=final == sos,
    )


def shift_count_equivalence(n: int, t: int, seed: int) -> CouplingReport:
    moves = draw_moves(_sos_quiet(n), _aux_rng(seed, 2), t)
    return compare_coupled(n, moves)
