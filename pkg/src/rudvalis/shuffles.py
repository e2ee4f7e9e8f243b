"""Decks, elementary moves and the three shuffle distributions.

Positions are numbered 1..n from the top of the deck in every public value
(``CardPhase.x``, reports); tuples representing decks are ordinary Python
sequences, so ``deck[0]`` is the top card.

The lifted chain carries, next to the deck, the net shift counter
``y = #shift-left - #shift-right (mod n)``.  For a tracked card the phase
``z = x - x0 + y (mod n)`` only moves when that card takes part in a swap.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from rudvalis.errors import ValidationError

Deck = tuple

KINDS = ("rudvalis", "shift-or-swap", "symmetrized")


class Move(enum.IntEnum):
    HOLD = 0
    SHIFT_LEFT = 1
    SHIFT_RIGHT = 2
    SWAP = 3
    SWAP_SHIFT_LEFT = 4

    @property
    def tag(self) -> str:
        return _TAGS[self]

    @classmethod
    def from_tag(cls, tag: str) -> "Move":
        for move, name in _TAGS.items():
            if name == tag:
                return move
        raise ValidationError(f"unknown move tag {tag!r}")

    @property
    def shift(self) -> int:
        """Contribution of this move to the lifted shift counter."""
        if self in (Move.SHIFT_LEFT, Move.SWAP_SHIFT_LEFT):
            return 1
        if self is Move.SHIFT_RIGHT:
            return -1
        return 0


_TAGS = {
    Move.HOLD: "hold",
    Move.SHIFT_LEFT: "shift-left",
    Move.SHIFT_RIGHT: "shift-right",
    Move.SWAP: "swap",
    Move.SWAP_SHIFT_LEFT: "swap-then-shift-left",
}


def apply_move(deck: Sequence, move: Move) -> Deck:
    """Return the deck after ``move``; index 0 is the top card.

    >>> apply_move((1, 2, 3), Move.SHIFT_LEFT)
    (2, 3, 1)
    >>> apply_move((1, 2, 3), Move.SWAP_SHIFT_LEFT)
    (2, 1, 3)
    """
    deck = tuple(deck)
    if move is Move.HOLD:
        return deck
    if move is Move.SHIFT_LEFT:
        return deck[1:] + deck[:1]
    if move is Move.SHIFT_RIGHT:
        return deck[-1:] + deck[:-1]
    if move is Move.SWAP:
        return deck[-1:] + deck[1:-1] + deck[:1]
    if move is Move.SWAP_SHIFT_LEFT:
        return apply_move(apply_move(deck, Move.SWAP), Move.SHIFT_LEFT)
    raise ValidationError(f"unknown move {move!r}")


@dataclass(frozen=True)
class ShuffleSpec:
    """Which shuffle, on how many cards.

    Build instances with :meth:`rudvalis`, :meth:`shift_or_swap`,
    :meth:`symmetrized` or :meth:`make`; they validate their arguments.
    """

    kind: str
    n: int
    p: Fraction | None = None
    moves: tuple[tuple[Move, Fraction], ...] = field(default=(), compare=False)

    @classmethod
    def rudvalis(cls, n: int, p=Fraction(1, 2)) -> "ShuffleSpec":
        p = _as_fraction(p)
        if not 0 < p < 1:
            raise ValidationError(f"rudvalis needs 0 < p < 1, got {float(p)}")
        _check_n(n)
        return cls("rudvalis", n, p, ((Move.SWAP_SHIFT_LEFT, p), (Move.SHIFT_LEFT, 1 - p)))

    @classmethod
    def shift_or_swap(cls, n: int) -> "ShuffleSpec":
        _check_n(n)
        if n % 2 == 0:
            warnings.warn(
                f"shift-or-swap with even n={n} is sign-periodic; "
                "the permutation never converges to uniform",
                stacklevel=2,
            )
        half = Fraction(1, 2)
        return cls("shift-or-swap", n, None, ((Move.SHIFT_LEFT, half), (Move.SWAP, half)))

    @classmethod
    def symmetrized(cls, n: int) -> "ShuffleSpec":
        _check_n(n)
        if n % 2 == 0:
            raise ValidationError(f"symmetrized shuffle requires odd n, got n={n}")
        q = Fraction(1, 4)
        return cls(
            "symmetrized",
            n,
            None,
            ((Move.SHIFT_LEFT, q), (Move.SHIFT_RIGHT, q), (Move.SWAP, q), (Move.HOLD, q)),
        )

    @classmethod
    def make(cls, kind: str, n: int, p=None) -> "ShuffleSpec":
        if kind == "rudvalis":
            if p is None:
                raise ValidationError("rudvalis requires p")
            return cls.rudvalis(n, p)
        if kind == "shift-or-swap":
            return cls.shift_or_swap(n)
        if kind == "symmetrized":
            return cls.symmetrized(n)
        raise ValidationError(f"unknown shuffle kind {kind!r}; expected one of {KINDS}")

    def with_n(self, n: int) -> "ShuffleSpec":
        if self.kind == "rudvalis":
            return ShuffleSpec.rudvalis(n, self.p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return ShuffleSpec.make(self.kind, n)

    @property
    def sign_periodic(self) -> bool:
        """Every move is an odd permutation, so the sign alternates."""
        return self.kind == "shift-or-swap" and self.n % 2 == 0

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([float(q) for _, q in self.moves])

    def describe(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.p is not None:
            out["p"] = float(self.p)
        out["moves"] = {m.tag: float(q) for m, q in self.moves}
        return out


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, str):
        try:
            return Fraction(p)
        except ValueError as exc:
            raise ValidationError(f"cannot parse p={p!r}") from exc
    return Fraction(p)


def _check_n(n: int) -> None:
    if int(n) != n or n < 3:
        raise ValidationError(f"deck size must be an integer >= 3, got {n}")


@dataclass(frozen=True)
class LiftedState:
    deck: Deck
    y: int = 0

    @classmethod
    def start(cls, n: int) -> "LiftedState":
        return cls(tuple(range(1, n + 1)), 0)


@dataclass(frozen=True)
class CardPhase:
    x: int
    z: int
    x0: int


def move_sampler(spec: ShuffleSpec):
    """Return ``sample(rng, size) -> (raw, table)`` with moves ``table[raw]``.

    Distributions whose weights are multiples of 1/256 (every shuffle here
    except Rudvalis with a non-dyadic p) use one random byte per move and a
    256-entry lookup table. Otherwise one double per move is compared against
    the cumulative weights and ``table`` is the identity.
    """
    codes = np.array([int(m) for m, _ in spec.moves], dtype=np.uint8)
    weights = [q for _, q in spec.moves]
    if all((q * 256).denominator == 1 for q in weights):
        table = np.repeat(codes, [int(q * 256) for q in weights])

        def sample(rng, size):
            return np.frombuffer(rng.bytes(size), dtype=np.uint8), table

        return sample
    cumulative = np.cumsum([float(q) for q in weights])
    cumulative[-1] = np.inf
    identity = np.arange(256, dtype=np.uint8)

    def sample(rng, size):
        idx = np.searchsorted(cumulative, rng.random(size), side="right")
        return codes[idx], identity

    return sample


def draw_moves(spec: ShuffleSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Sample ``size`` move codes (``Move`` values as uint8)."""
    raw, table = move_sampler(spec)(rng, size)
    return table[raw]


def step_lifted(
    state: LiftedState, spec: ShuffleSpec, rng: np.random.Generator
) -> tuple[LiftedState, Move]:
    """Advance the lifted chain one step; returns the new state and the move."""
    move = Move(int(draw_moves(spec, rng, 1)[0]))
    return lift_move(state, move, spec.n), move


def lift_move(state: LiftedState, move: Move, n: int) -> LiftedState:
    return LiftedState(apply_move(state.deck, move), (state.y + move.shift) % n)


def card_phase_update(c: CardPhase, move: Move, n: int) -> CardPhase:
    """Update one card's (position, phase) under ``move``.

    Shifts move the card but keep its phase; a swap changes the phase by -1
    for the card leaving the top and by +1 for the card leaving the bottom.
    """
    x, z = c.x, c.z
    if move is Move.SWAP_SHIFT_LEFT:
        return card_phase_update(card_phase_update(c, Move.SWAP, n), Move.SHIFT_LEFT, n)
    if move is Move.SHIFT_LEFT:
        x -= 1
    elif move is Move.SHIFT_RIGHT:
        x += 1
    elif move is Move.SWAP:
        if x == 1:
            x, z = x - 1, z - 1
        elif x == n:
            x, z = x + 1, z + 1
    return CardPhase((x - 1) % n + 1, z % n, c.x0)


def card_transitions(spec: ShuffleSpec) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Single-card walk as ``(prob, dest, dz)`` per move, 0-based positions.

    ``dest[i]`` is where a card at position ``i + 1`` goes and ``dz[i]`` in
    {-1, 0, 1} is its phase increment.
    """
    n = spec.n
    out = []
    for move, q in spec.moves:
        dest = np.empty(n, dtype=np.int64)
        dz = np.empty(n, dtype=np.int64)
        for i in range(n):
            new = card_phase_update(CardPhase(i + 1, 0, i + 1), move, n)
            dest[i] = new.x - 1
            dz[i] = new.z if new.z <= 1 else new.z - n
        out.append((float(q), dest, dz))
    return out


def track_consistency(
    trajectory: Iterable[tuple[LiftedState, Move | None]], card, *, corrupt_at: int | None = None
) -> bool:
    """Check the incremental phase of ``card`` against ``x - x0 + y``.

    ``trajectory`` starts with the initial state (its move is ignored) and
    each later entry is the state reached by the accompanying move.
    ``corrupt_at`` injects an off-by-one into the tracked phase at that step,
    for exercising the detector.
    """
    it = iter(trajectory)
    first, _ = next(it)
    if first.y != 0:
        return False
    n = len(first.deck)
    x0 = first.deck.index(card) + 1
    phase = CardPhase(x0, 0, x0)
    for step, (state, move) in enumerate(it, start=1):
        phase = card_phase_update(phase, move, n)
        if corrupt_at == step:
            phase = replace(phase, z=(phase.z + 1) % n)
        x = state.deck.index(card) + 1
        if phase.x != x or phase.z != (x - x0 + state.y) % n:
            return False
    return True
