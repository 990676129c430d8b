"""Lower-bound distinguishing statistic, Hoeffding bound, and total variation
estimates (Monte Carlo and exact for tiny decks)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from itertools import permutations

import numpy as np

from . import kernels
from .barrier import BarrierDeck, startup_deck
from .constants import ConstantsBundle, constants_bundle
from .rng import RandomStream, map_replicates
from .shuffle import Deck, all_decks, step_matrices

MAX_EXACT_N = 6


@dataclass(frozen=True)
class LowerBoundPlan:
    """Everything the detection test needs, fixed before any sampling.

    ``T`` counts shuffle steps after the startup round, so the chain is observed
    at clock time ``t_obs = n + T`` and ``x = t_obs / n``. ``negative_case`` is
    True when sin(b x) <= 0: cards in I were inserted while f was high and Y
    counts I-cards below ``pos_threshold``; otherwise the mirrored trough
    window is used and Y counts I-cards above it.
    """

    n: int
    c: float
    T: int
    t_obs: int
    x: float
    k: int
    x1: float
    x2: float
    negative_case: bool
    I: tuple[int, ...]
    m: int
    pos_threshold: float
    count_threshold: float
    a: float
    b: float
    beta: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["I"] = list(self.I)
        return d

    @property
    def shift(self) -> float:
        """Excess over the uniform mean that the count threshold demands."""
        return self.beta / 4 * self.m * self.n ** (-self.a * self.c)


def build_plan(n: int, c: float, constants: ConstantsBundle | None = None) -> LowerBoundPlan:
    constants = constants or constants_bundle()
    a, b, beta = constants.a, constants.b, constants.beta
    if not 0 < c < constants.c0:
        raise ValueError(f"c must lie in (0, c0={constants.c0:.9f}), got {c}")
    T = math.floor(c * n * math.log(n))
    if T < 1:
        raise ValueError(f"n={n} too small: c n ln n < 1")
    t_obs = n + T
    x = t_obs / n
    neg = math.sin(b * x) <= 0
    lo, hi = (math.pi / 4, 3 * math.pi / 4) if neg else (5 * math.pi / 4, 7 * math.pi / 4)
    k = math.floor((b * x - hi) / (2 * math.pi)) + 1
    while (2 * math.pi * k + hi) / b >= x:
        k -= 1
    x1 = (2 * math.pi * k + lo) / b
    x2 = (2 * math.pi * k + hi) / b
    if not x - 1 < x1 < x2 < x:
        raise RuntimeError(f"no window inside (x-1, x) for x={x}")
    t_lo = math.floor(n * x1) + 1
    t_hi = math.ceil(n * x2) - 1
    I = tuple(sorted({(t - 1) % n + 1 for t in range(t_lo, t_hi + 1)}))
    m = len(I)
    if m < 1:
        raise RuntimeError("empty label set I")
    eps = n ** (-a * c)
    pos_threshold = n / 2 + beta / 4 * n * eps if neg else n / 2 - beta / 4 * n * eps
    return LowerBoundPlan(
        n=n, c=c, T=T, t_obs=t_obs, x=x, k=k, x1=x1, x2=x2, negative_case=neg,
        I=I, m=m, pos_threshold=pos_threshold,
        count_threshold=m / 2 + beta / 2 * m * eps, a=a, b=b, beta=beta,
    )


def _positions(deck) -> np.ndarray:
    if isinstance(deck, BarrierDeck):
        deck = deck.deck
    return deck.pos


def lower_bound_statistic(plan: LowerBoundPlan, deck) -> int:
    """Y: number of I-labels whose 1-based position is below the threshold
    (above it in the mirrored case)."""
    if not plan.I:
        return 0
    pos = _positions(deck)
    if pos.shape[0] != plan.n + 1:
        raise ValueError("deck size does not match plan")
    p = pos[np.asarray(plan.I)] + 1
    if plan.negative_case:
        return int(np.count_nonzero(p < plan.pos_threshold))
    return int(np.count_nonzero(p > plan.pos_threshold))


def uniform_mean_Y(plan: LowerBoundPlan) -> float:
    """E[Y] for a uniform deck: m times the fraction of qualifying positions."""
    th = plan.pos_threshold
    if plan.negative_case:
        good = math.ceil(th) - 1
    else:
        good = plan.n - math.floor(th)
    good = min(max(good, 0), plan.n)
    return plan.m * good / plan.n


def hoeffding_bound(k_samples: int, shift: float) -> float:
    """P(sum - k p >= shift) <= exp(-2 shift^2 / k) for 0/1 samples, with or
    without replacement."""
    if k_samples < 1 or shift < 0:
        raise ValueError("need k_samples >= 1 and shift >= 0")
    return math.exp(-2.0 * shift * shift / k_samples)


def plan_hoeffding_bound(plan: LowerBoundPlan) -> float:
    return hoeffding_bound(plan.m, plan.shift)


def chain_sample(plan: LowerBoundPlan, rng: RandomStream, profile=None) -> Deck:
    """Startup round, then plan.T shuffle steps from clock n + 1."""
    bd = startup_deck(plan.n, profile, rng)
    deck = bd.deck
    kernels.run_steps(deck.order, deck.pos, plan.n + 1, rng.slots(plan.n, plan.T))
    return deck


def uniform_sample(n: int, rng: RandomStream) -> Deck:
    return Deck(rng.permutation(n))


@dataclass
class LowerBoundResult:
    plan: LowerBoundPlan
    y_chain: np.ndarray
    y_uniform: np.ndarray

    @property
    def replicates(self) -> int:
        return self.y_chain.shape[0]

    def mean_gap(self) -> tuple[float, float]:
        """Difference of sample means and its pooled standard error."""
        r1, r2 = self.y_chain.shape[0], self.y_uniform.shape[0]
        diff = self.y_chain.mean() - self.y_uniform.mean()
        se = math.sqrt(self.y_chain.var(ddof=1) / r1 + self.y_uniform.var(ddof=1) / r2)
        return float(diff), se

    def exceed_fractions(self) -> tuple[float, float]:
        ct = self.plan.count_threshold
        return float(np.mean(self.y_chain > ct)), float(np.mean(self.y_uniform > ct))

    def tv_lower(self) -> tuple[float, float]:
        p1, p2 = self.exceed_fractions()
        se = math.sqrt(p1 * (1 - p1) / self.y_chain.shape[0] + p2 * (1 - p2) / self.y_uniform.shape[0])
        return p1 - p2, se

    def tv_best_threshold(self) -> float:
        """max over y of |P(Y_chain > y) - P(Y_uniform > y)| on the pooled sample support."""
        ys = np.union1d(self.y_chain, self.y_uniform)
        sc = np.sort(self.y_chain)
        su = np.sort(self.y_uniform)
        fc = 1.0 - np.searchsorted(sc, ys, side="right") / sc.shape[0]
        fu = 1.0 - np.searchsorted(su, ys, side="right") / su.shape[0]
        return float(np.max(np.abs(fc - fu)))

    def uniform_exceed_se(self) -> float:
        p = self.exceed_fractions()[1]
        return math.sqrt(p * (1 - p) / self.y_uniform.shape[0])


def lower_bound_experiment(n: int, c: float, replicates: int, seed: int = 0, constants=None, chain=True, threads: int = 1) -> LowerBoundResult:
    """Y under the chain and under uniform decks.

    Chain replicate r uses ``RandomStream(seed, r)``; uniform replicate r uses
    ``RandomStream(seed, replicates + r)``. ``chain=False`` replaces the chain by
    the uniform sampler on both sides (null check).
    """
    plan = build_plan(n, c, constants)

    def chain_y(r):
        rng = RandomStream(seed, r)
        return lower_bound_statistic(plan, chain_sample(plan, rng) if chain else uniform_sample(n, rng))

    def uniform_y(r):
        return lower_bound_statistic(plan, uniform_sample(n, RandomStream(seed, replicates + r)))

    yc = np.array(map_replicates(chain_y, replicates, threads), dtype=np.int64)
    yu = np.array(map_replicates(uniform_y, replicates, threads), dtype=np.int64)
    return LowerBoundResult(plan, yc, yu)


def tv_lower_estimate(n: int, c: float, replicates: int, seed: int = 0, chain=True, threads: int = 1):
    """(tv_lb, stderr, best_threshold_tv) for the threshold test at count_threshold."""
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    res = lower_bound_experiment(n, c, replicates, seed, chain=chain, threads=threads)
    tv, se = res.tv_lower()
    return tv, se, res.tv_best_threshold()


def _check_exact_n(n):
    if n > MAX_EXACT_N:
        raise ValueError(f"exact computations limited to n <= {MAX_EXACT_N}, got {n}")


def point_mass(n: int, deck: Deck | None = None) -> np.ndarray:
    _check_exact_n(n)
    states = all_decks(n)
    key = deck.as_tuple() if deck is not None else tuple(range(1, n + 1))
    p = np.zeros(len(states))
    p[states.index(key)] = 1.0
    return p


def exact_distributions(n: int, initial: np.ndarray, rounds: int) -> list[np.ndarray]:
    """Exact distribution over S_n (lexicographic order) after 0..rounds rounds."""
    _check_exact_n(n)
    mats = step_matrices(n)
    p = np.asarray(initial, dtype=float)
    if p.shape != (math.factorial(n),):
        raise ValueError("initial distribution has the wrong length")
    out = [p]
    for _ in range(rounds):
        for P in mats:
            p = p @ P
        out.append(p)
    return out


def tv_to_uniform(p: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - 1.0 / p.shape[0]).sum())


def exact_tv(n: int, initial: np.ndarray, rounds: int) -> float:
    return tv_to_uniform(exact_distributions(n, initial, rounds)[-1])


def perm_index(n: int) -> dict[tuple, int]:
    return {s: k for k, s in enumerate(permutations(range(1, n + 1)))}


def plugin_tv(n: int, rounds: int, replicates: int, seed: int = 0, start: Deck | None = None) -> float:
    """Plug-in TV of the empirical histogram after ``rounds`` rounds from ``start``."""
    _check_exact_n(n)
    start = start or Deck.identity(n)
    index = perm_index(n)
    counts = np.zeros(len(index))
    for r in range(replicates):
        o = start.order.copy()
        p = start.pos.copy()
        kernels.run_steps(o, p, 1, RandomStream(seed, r).slots(n, rounds * n))
        counts[index[tuple(int(c) for c in o)]] += 1
    return tv_to_uniform(counts / replicates)


def expected_plugin_tv(p: np.ndarray, replicates: int) -> float:
    """Exact expectation of the plug-in TV for a multinomial sample of size
    ``replicates`` from ``p`` (cell-wise binomial sums)."""
    from scipy.stats import binom

    u = 1.0 / p.shape[0]
    k = np.arange(replicates + 1)
    total = 0.0
    for pk in p:
        total += float(np.dot(binom.pmf(k, replicates, pk), np.abs(k / replicates - u)))
    return 0.5 * total
