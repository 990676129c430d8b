"""Card-Cyclic-to-Random step and round operators.

At time ``t`` the card labelled ``((t - 1) mod n) + 1`` is removed and put back
into one of the ``n`` slots around the remaining ``n - 1`` cards, each slot
equally likely. Slot ``s`` means ``s`` of the remaining cards end up to its left.
"""
from __future__ import annotations

from collections import OrderedDict
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from . import kernels
from .rng import RandomStream

MAX_ENUM_N = 8


def moving_label(t: int, n: int) -> int:
    return (t - 1) % n + 1


class Deck:
    """Permutation of labels 1..n with position lookup kept in sync.

    Positions exposed by the public methods are 1-based (leftmost card is at
    position 1); the arrays underneath are 0-based.
    """

    __slots__ = ("order", "pos")

    def __init__(self, order: Sequence[int]):
        order = np.asarray(order, dtype=np.int64).copy()
        n = order.shape[0]
        if n < 1 or not np.array_equal(np.sort(order), np.arange(1, n + 1)):
            raise ValueError("deck must be a permutation of 1..n")
        pos = np.empty(n + 1, dtype=np.int64)
        pos[0] = -1
        pos[order] = np.arange(n)
        self.order = order
        self.pos = pos

    @classmethod
    def identity(cls, n: int) -> Deck:
        return cls(np.arange(1, n + 1))

    @classmethod
    def _wrap(cls, order: np.ndarray, pos: np.ndarray) -> Deck:
        deck = cls.__new__(cls)
        deck.order = order
        deck.pos = pos
        return deck

    @classmethod
    def parse(cls, line: str) -> Deck:
        return cls([int(tok) for tok in line.split()])

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def copy(self) -> Deck:
        return Deck._wrap(self.order.copy(), self.pos.copy())

    def label_at(self, position: int) -> int:
        return int(self.order[position - 1])

    def position_of(self, label: int) -> int:
        return int(self.pos[label]) + 1

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.order)

    def serialize(self) -> str:
        return " ".join(str(int(c)) for c in self.order)

    def is_valid(self) -> bool:
        n = self.n
        return (
            np.array_equal(np.sort(self.order), np.arange(1, n + 1))
            and bool(np.all(self.pos[self.order] == np.arange(n)))
        )

    def __eq__(self, other):
        return isinstance(other, Deck) and np.array_equal(self.order, other.order)

    def __hash__(self):
        return hash(self.as_tuple())

    def __repr__(self):
        return f"Deck([{', '.join(map(str, self.as_tuple()))}])"


def insert_card(deck: Deck, label: int, slot: int) -> Deck:
    """Return a new deck with ``label`` moved to ``slot`` (0..n-1)."""
    if not 0 <= slot < deck.n:
        raise ValueError(f"slot {slot} outside 0..{deck.n - 1}")
    out = deck.copy()
    kernels.move_card(out.order, out.pos, label, slot)
    return out


def cctr_step(deck: Deck, t: int, rng: RandomStream) -> Deck:
    return insert_card(deck, moving_label(t, deck.n), rng.slot(deck.n))


def run_rounds(deck: Deck, rounds: int, rng: RandomStream, t0: int = 1) -> Deck:
    """Apply ``rounds * n`` steps starting at clock ``t0``.

    The whole slot vector is drawn in one call before any card moves.
    """
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    return run_steps(deck, rounds * deck.n, rng, t0)


def run_steps(deck: Deck, steps: int, rng: RandomStream, t0: int = 1) -> Deck:
    out = deck.copy()
    if steps:
        kernels.run_steps(out.order, out.pos, t0, rng.slots(out.n, steps))
    return out


def step_enumerate(deck: Deck, t: int) -> list[tuple[Deck, Fraction]]:
    """All successors of one step with exact probabilities (duplicates merged)."""
    n = deck.n
    if n > MAX_ENUM_N:
        raise ValueError(f"enumeration limited to n <= {MAX_ENUM_N}, got {n}")
    label = moving_label(t, n)
    merged: OrderedDict[tuple, Fraction] = OrderedDict()
    for s in range(n):
        key = insert_card(deck, label, s).as_tuple()
        merged[key] = merged.get(key, Fraction(0)) + Fraction(1, n)
    return [(Deck(k), p) for k, p in merged.items()]


def all_decks(n: int) -> list[tuple[int, ...]]:
    return list(permutations(range(1, n + 1)))


def step_matrices(n: int) -> list[np.ndarray]:
    """Dense one-step transition matrices for t = 1..n over lexicographic S_n."""
    if n > 6:
        raise ValueError("dense step matrices limited to n <= 6")
    states = all_decks(n)
    index = {s: k for k, s in enumerate(states)}
    mats = []
    for t in range(1, n + 1):
        P = np.zeros((len(states), len(states)))
        for k, s in enumerate(states):
            for nxt, p in step_enumerate(Deck(s), t):
                P[k, index[nxt.as_tuple()]] += float(p)
        mats.append(P)
    return mats


def round_matrix(n: int) -> np.ndarray:
    """Transition matrix of one full round (steps t = 1..n)."""
    mats = step_matrices(n)
    R = mats[0]
    for P in mats[1:]:
        R = R @ P
    return R
