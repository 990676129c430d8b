"""Barrier-augmented shuffle: startup round, barrier steps and the estimate of g.

``barrier_gap`` is the number of cards strictly left of the barrier, which is
also the barrier position B (the position of the card just left of it, 0 when
the barrier is leftmost).

Clock: events 1..n are the startup placements of cards 1..n, shuffling resumes
at t = n + 1 with card 1. ``B_t`` (as used for g) is the barrier position when
the card of time t is about to move, i.e. after event t - 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .analysis import ProfileF
from .rng import RandomStream, map_replicates
from .shuffle import Deck, moving_label


@dataclass(frozen=True)
class BarrierDeck:
    deck: Deck
    barrier_gap: int

    def __post_init__(self):
        if not 0 <= self.barrier_gap <= self.deck.n:
            raise ValueError("barrier_gap must lie in 0..n")

    @property
    def n(self) -> int:
        return self.deck.n

    @property
    def barrier_position(self) -> int:
        return self.barrier_gap

    def left_cards(self) -> set[int]:
        return {int(c) for c in self.deck.order[: self.barrier_gap]}

    def serialize(self) -> str:
        toks = [str(int(c)) for c in self.deck.order]
        toks.insert(self.barrier_gap, "|")
        return " ".join(toks)

    @classmethod
    def parse(cls, line: str) -> BarrierDeck:
        toks = line.split()
        gap = toks.index("|")
        return cls(Deck([int(x) for x in toks if x != "|"]), gap)


def _profile_probs(n: int, profile: Callable | None) -> np.ndarray:
    profile = profile or ProfileF.from_constants()
    probs = np.asarray(profile(np.arange(1, n + 1) / n), dtype=float)
    return np.broadcast_to(probs, (n,)).copy()


def _startup_arrays(n, profile, rng):
    probs = _profile_probs(n, profile)
    side_u = rng.uniform(n)
    slot_u = rng.uniform(n)
    order = np.zeros(n, dtype=np.int64)
    pos = np.full(n + 1, -1, dtype=np.int64)
    gaps = np.empty(n, dtype=np.int64)
    left = np.empty(n, dtype=np.bool_)
    gap = kernels.startup_build(probs, side_u, slot_u, order, pos, gaps, left)
    return order, pos, int(gap), gaps, left


def startup_deck(n: int, profile: Callable | None, rng: RandomStream) -> BarrierDeck:
    """Startup round: card t goes left of the barrier w.p. profile(t/n).

    Draws n uniforms for the sides, then n uniforms for the within-side slots.
    """
    if n < 2:
        raise ValueError("startup round needs n >= 2")
    order, pos, gap, _, _ = _startup_arrays(n, profile, rng)
    return BarrierDeck(Deck._wrap(order, pos), gap)


def barrier_insert(bdeck: BarrierDeck, t: int, slot: int) -> tuple[BarrierDeck, bool]:
    """Move the card of time t into ``slot``; returns the new state and its side."""
    deck = bdeck.deck.copy()
    gap, went_left = kernels.barrier_move(deck.order, deck.pos, bdeck.barrier_gap, moving_label(t, deck.n), slot)
    return BarrierDeck(deck, int(gap)), bool(went_left)


def barrier_step(bdeck: BarrierDeck, t: int, rng: RandomStream) -> BarrierDeck:
    # one slot draw, exactly as cctr_step, so the deck marginal is shared
    return barrier_insert(bdeck, t, rng.slot(bdeck.n))[0]


@dataclass
class BarrierTrace:
    """One trajectory. ``gaps[k]`` is the barrier after event k + 1 and
    ``left[k]`` whether the card handled at event k + 1 landed left."""

    n: int
    gaps: np.ndarray
    left: np.ndarray
    final: BarrierDeck

    def B(self, t: int) -> int:
        """Barrier position when the card of time t (> 1) is about to move."""
        return int(self.gaps[t - 2])


def barrier_trace(n: int, total_steps: int, rng: RandomStream, profile: Callable | None = None) -> BarrierTrace:
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    order, pos, gap, gaps0, left0 = _startup_arrays(n, profile, rng)
    slots = rng.slots(n, total_steps)
    gaps = np.empty(total_steps, dtype=np.int64)
    left = np.empty(total_steps, dtype=np.bool_)
    gap = kernels.barrier_run(order, pos, gap, n + 1, slots, gaps, left)
    return BarrierTrace(
        n,
        np.concatenate([gaps0, gaps]),
        np.concatenate([left0, left]),
        BarrierDeck(Deck._wrap(order, pos), int(gap)),
    )


def trace_fraction(trace: BarrierTrace, max_t: int) -> np.ndarray:
    """Per-t quantity whose mean is g(t): the side indicator of the startup card
    for t <= n, and B_t / n afterwards."""
    n = trace.n
    out = np.empty(max_t)
    m = min(n, max_t)
    out[:m] = trace.left[:m]
    if max_t > n:
        out[n:] = trace.gaps[n - 1 : max_t - 1] / n
    return out


def empirical_g(n: int, max_t: int, replicates: int, seed: int = 0, profile: Callable | None = None, threads: int = 1):
    """Sample mean and standard error of the g estimate for t = 1..max_t.

    Replicate r uses ``RandomStream(seed, r)``.
    """
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    if max_t < 1:
        raise ValueError("max_t must be >= 1")
    steps = max(max_t - n, 1)
    rows = map_replicates(
        lambda r: trace_fraction(barrier_trace(n, steps, RandomStream(seed, r), profile), max_t),
        replicates,
        threads,
    )
    vals = np.vstack(rows)
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / np.sqrt(replicates)
