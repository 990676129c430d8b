"""Label and position couplings, the insertion and Kendall tau distances, and
the three-stage coupled round with its (A, B) counter chain.

Group tags on cards, in order of appearance: ``a`` (landed between i and j
during stage 1), ``alpha_prime`` (joined the a-group in stage 2), ``b`` (landed
right of j or of a b-card in stage 2), then ``a_star`` / ``beta_prime`` for
stage-3 arrivals in the a- and b-groups. A card inherits the group of the card
it is inserted next to, which is identical in both decks under label coupling.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .barrier import BarrierDeck
from .rng import RandomStream, map_replicates
from .shuffle import Deck, moving_label

TAG_NAMES = ("none", "a", "alpha_prime", "a_star", "b", "beta_prime")
A_TAGS = {"a", "alpha_prime", "a_star"}
B_TAGS = {"b", "beta_prime"}

BarrierConfig = BarrierDeck


def label_step_pair(decks: tuple[Deck, Deck], t: int, rng: RandomStream) -> tuple[Deck, Deck]:
    """Both decks insert the moving card right of the same uniformly drawn label
    (leftmost if the label drawn is the moving card itself)."""
    x = rng.slot(decks[0].n) + 1
    return tuple(_label_insert(d, t, x) for d in decks)


def _label_insert(deck: Deck, t: int, x: int) -> Deck:
    out = deck.copy()
    lab = moving_label(t, out.n)
    kernels.move_card(out.order, out.pos, lab, kernels.label_slot(out.pos, lab, x))
    return out


def position_step_pair(decks: tuple[Deck, Deck], t: int, rng: RandomStream) -> tuple[Deck, Deck]:
    """Both decks insert the moving card at the same slot index."""
    s = rng.slot(decks[0].n)
    out = []
    for d in decks:
        d = d.copy()
        kernels.move_card(d.order, d.pos, moving_label(t, d.n), s)
        out.append(d)
    return tuple(out)


def _check_same_labels(u: Deck, v: Deck):
    if u.n != v.n:
        raise ValueError(f"decks have different sizes ({u.n} vs {v.n})")


def insertion_distance(cfg1, cfg2) -> int:
    """Fewest remove-and-reinsert moves between two configurations.

    Accepts two BarrierDecks or two bare Decks. Unmoved cards plus the barrier
    form a common subsequence, so the distance is n minus the best common
    subsequence forced through the barrier: LCS of the left parts plus LCS of
    the right parts.
    """
    if isinstance(cfg1, BarrierDeck) != isinstance(cfg2, BarrierDeck):
        raise TypeError("compare two barrier configurations or two bare decks")
    if isinstance(cfg1, BarrierDeck):
        _check_same_labels(cfg1.deck, cfg2.deck)
        return int(
            kernels.barrier_insertion_distance(
                cfg1.deck.order, cfg1.barrier_gap, cfg2.deck.order, cfg2.barrier_gap
            )
        )
    _check_same_labels(cfg1, cfg2)
    return cfg1.n - int(kernels.lcs_length(cfg1.order, cfg2.order))


def kendall_tau(deck_x: Deck, deck_y: Deck) -> int:
    """Number of label pairs ordered differently (= adjacent-transposition distance)."""
    _check_same_labels(deck_x, deck_y)
    return int(kernels.kendall_distance(deck_x.order, deck_y.pos))


@dataclass
class CoupledPair:
    deck_x: Deck
    deck_y: Deck
    i: int
    j: int
    mode: str = "position"
    stage: object = 1
    tags: dict = field(default_factory=dict)

    @property
    def counters(self) -> tuple[int, int]:
        a = sum(1 for v in self.tags.values() if v in A_TAGS)
        b = sum(1 for v in self.tags.values() if v in B_TAGS)
        return a, b


@dataclass
class ThreeStageResult:
    count_A: int
    count_B: int
    rho: int
    stage1_ok: bool
    pair: CoupledPair
    history: np.ndarray | None = None

    @property
    def inequality_ok(self) -> bool:
        return self.rho <= self.count_A * self.count_B


def adjacent_start(n: int, i: int, j: int, rng: RandomStream | None = None) -> tuple[Deck, Deck]:
    """Decks x = ... i j ... and y = ... j i ..., other cards random (or sorted)."""
    _check_pair(n, i, j)
    others = [c for c in range(1, n + 1) if c not in (i, j)]
    k = 0
    if rng is not None:
        others = [int(c) for c in rng.gen.permutation(others)]
        k = rng.slot(n - 1)
    x = others[:k] + [i, j] + others[k:]
    y = others[:k] + [j, i] + others[k:]
    return Deck(x), Deck(y)


def _check_pair(n, i, j):
    if n < 4:
        raise ValueError(f"n must be >= 4, got {n}")
    if not 1 <= i < j <= n:
        raise ValueError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")


def three_stage_run(
    n: int, i: int, j: int, rng: RandomStream, start: tuple[Deck, Deck] | None = None, record: bool = False
) -> ThreeStageResult:
    """One coupled round from decks differing by the adjacent swap of i and j.

    Draw pattern: the start arrangement (if not given), then n integers in
    0..n-1 used as slots in stage 1 and as labels minus one afterwards.
    With ``record`` the result carries ``history``: entry t is 1 if the card
    moved at time t joined the A group, 2 if it joined B, 0 otherwise.
    """
    _check_pair(n, i, j)
    x, y = start if start is not None else adjacent_start(n, i, j, rng)
    x, y = x.copy(), y.copy()
    if not (x.pos[j] == x.pos[i] + 1 and y.order[x.pos[i]] == j and y.order[x.pos[j]] == i):
        raise ValueError("start decks must be x = ..i j.., y = ..j i.. with all else equal")
    tags = np.zeros(n + 1, dtype=np.int64)
    ok = np.zeros(1, dtype=np.bool_)
    history = np.zeros(n + 1 if record else 1, dtype=np.int64)
    a, b = kernels.three_stage(x.order, x.pos, y.order, y.pos, tags, i, j, rng.slots(n, n), ok, history)
    pair = CoupledPair(
        x, y, i, j, mode="label", stage="done",
        tags={c: TAG_NAMES[tags[c]] for c in range(1, n + 1) if tags[c]},
    )
    return ThreeStageResult(int(a), int(b), kendall_tau(x, y), bool(ok[0]), pair, history if record else None)


def counter_chain_run(n: int, i: int, j: int, rng: RandomStream) -> tuple[int, int]:
    _check_pair(n, i, j)
    a, b = kernels.counter_chain(n, i, j, rng.slots(n, n))
    return int(a), int(b)


def counter_chain_distribution(n: int, i: int, j: int) -> dict[tuple[int, int], Fraction]:
    """Exact law of (A_n, B_n) by propagating every counter path."""
    _check_pair(n, i, j)
    dist = {(0, 0): Fraction(1)}
    for t in range(1, n + 1):
        nxt = defaultdict(Fraction)
        for (a, b), p in dist.items():
            if t < i:
                up_a, up_b = a + 1, 0
            elif t < j:
                up_a, up_b = a, b + 1
            else:
                up_a, up_b = a, b
            stay = n - up_a - up_b
            if up_a:
                nxt[(a + 1, b)] += p * Fraction(up_a, n)
            if up_b:
                nxt[(a, b + 1)] += p * Fraction(up_b, n)
            nxt[(a, b)] += p * Fraction(stay, n)
        dist = dict(nxt)
    return dist


def closed_form_eab(n: int, i: int, j: int) -> float:
    """E[A_n B_n] = ((1+1/n)^{i-1} - 1) [(1+2/n)^{j-i} - (1+1/n)^{j-i}] (1+2/n)^{n-j+1}."""
    if n < 4 or not 1 <= i <= j <= n:
        raise ValueError(f"need n >= 4 and 1 <= i <= j <= n, got n={n}, i={i}, j={j}")
    p1, p2 = 1.0 + 1.0 / n, 1.0 + 2.0 / n
    return (p1 ** (i - 1) - 1.0) * (p2 ** (j - i) - p1 ** (j - i)) * p2 ** (n - j + 1)


def continuum_bound(beta: float, gamma: float, n: int | None = None) -> float:
    """(e^b - 1) e^{g-b} (e^{g-b} - 1) e^{2(1-g)}, times (1 + 2/n) when b > ln 2 and n is given."""
    e = math.exp(gamma - beta)
    v = (math.exp(beta) - 1.0) * e * (e - 1.0) * math.exp(2.0 * (1.0 - gamma))
    if n is not None and beta > math.log(2.0):
        v *= 1.0 + 2.0 / n
    return v


def contraction_certificate(n: int, grid: int = 400) -> tuple[float, float, float]:
    """Maximise the continuum bound over 0 <= beta <= gamma <= 1.

    Coarse grid first, then SLSQP polish from the best grid point.
    """
    if n < 4:
        raise ValueError("n must be >= 4")
    best = (-1.0, 0.0, 0.0)
    for gi in range(grid + 1):
        g = gi / grid
        for bi in range(gi + 1):
            b = bi / grid
            v = continuum_bound(b, g, n)
            if v > best[0]:
                best = (v, b, g)
    res = minimize(
        lambda z: -continuum_bound(z[0], z[1], n),
        x0=[best[1], best[2]],
        method="SLSQP",
        bounds=[(0.0, 1.0), (0.0, 1.0)],
        constraints=[{"type": "ineq", "fun": lambda z: z[1] - z[0]}],
        options={"ftol": 1e-15, "maxiter": 200},
    )
    if res.success and -res.fun >= best[0]:
        b, g = float(res.x[0]), float(res.x[1])
        return continuum_bound(b, g, n), b, g
    return best


def random_reinsertion(order: np.ndarray, gap: int, rng: RandomStream) -> tuple[np.ndarray, int]:
    """Remove a uniform card and put it back in a uniform gap of the
    barrier-augmented sequence (barrier token 0)."""
    seq = list(order[:gap]) + [0] + list(order[gap:])
    card = int(order[rng.slot(len(order))])
    seq.remove(card)
    seq.insert(rng.slot(len(seq) + 1), card)
    g = seq.index(0)
    seq.pop(g)
    return np.array(seq, dtype=np.int64), g


def distance_start_pair(n: int, d: int, rng: RandomStream, max_tries: int = 1000):
    """Two barrier configurations at insertion distance exactly d."""
    order = rng.permutation(n)
    gap = rng.slot(n + 1)
    for _ in range(max_tries):
        o2, g2 = order, gap
        for _ in range(d):
            o2, g2 = random_reinsertion(o2, g2, rng)
        if kernels.barrier_insertion_distance(order, gap, o2, g2) == d:
            return (order.copy(), gap), (o2, g2)
    raise RuntimeError(f"could not build a start pair at distance {d} in {max_tries} tries")


@dataclass
class GrowthResult:
    mean_distance: float
    stderr: float
    distances: np.ndarray
    barrier_ok: bool


def distance_growth_experiment(
    n: int, d: int, t_steps: int, replicates: int, seed: int = 0, check_barrier: bool = False, threads: int = 1
) -> GrowthResult:
    """Label-coupled barrier processes from configurations at distance d.

    Replicate r uses ``RandomStream(seed, r)``: start pair first, then t_steps labels.
    With ``check_barrier`` every step also verifies |B1 - B2| <= insertion distance.
    """
    if not 0 <= d <= n / 2:
        raise ValueError("need 0 <= d <= n/2")
    if replicates < 2:
        raise ValueError("replicates must be >= 2")

    def one(r):
        rng = RandomStream(seed, r)
        (o1, g1), (o2, g2) = distance_start_pair(n, d, rng)
        p1 = np.empty(n + 1, dtype=np.int64)
        p1[o1] = np.arange(n)
        p2 = np.empty(n + 1, dtype=np.int64)
        p2[o2] = np.arange(n)
        labels = rng.slots(n, t_steps) + 1
        flags = np.ones(t_steps, dtype=np.bool_)
        g1, g2 = kernels.label_coupled_barrier_run(o1, p1, g1, o2, p2, g2, 1, labels, flags, check_barrier)
        return kernels.barrier_insertion_distance(o1, g1, o2, g2), bool(flags.all())

    out = map_replicates(one, replicates, threads)
    dist = np.array([d_ for d_, _ in out], dtype=np.int64)
    barrier_ok = all(ok for _, ok in out)
    return GrowthResult(float(dist.mean()), float(dist.std(ddof=1) / math.sqrt(replicates)), dist, barrier_ok)


def coupling_replicates(n: int, i: int, j: int, replicates: int, seed: int = 0, engine: str = "deck", threads: int = 1) -> dict:
    """Per-replicate counters (and rho for the deck engine); replicate r uses
    ``RandomStream(seed, r)``."""
    _check_pair(n, i, j)
    if engine == "deck":
        def one(r):
            res = three_stage_run(n, i, j, RandomStream(seed, r))
            return res.count_A, res.count_B, res.rho, res.stage1_ok
    elif engine == "counter":
        def one(r):
            a, b = counter_chain_run(n, i, j, RandomStream(seed, r))
            return a, b, -1, True
    else:
        raise ValueError(f"unknown engine {engine!r}")
    rows = np.array(map_replicates(one, replicates, threads), dtype=np.int64).reshape(-1, 4)
    return {
        "count_A": rows[:, 0],
        "count_B": rows[:, 1],
        "rho": rows[:, 2],
        "stage1_ok": rows[:, 3].astype(bool),
    }


def mean_and_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.shape[0]))
