"""The profile f, its discrete moving-average counterpart g, and related bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ConstantsBundle, constants_bundle


@dataclass(frozen=True)
class ProfileF:
    """f(x) = 1/2 + 1/2 e^{-ax} sin(bx)."""

    a: float
    b: float

    @classmethod
    def from_constants(cls, bundle: ConstantsBundle | None = None) -> ProfileF:
        bundle = bundle or constants_bundle()
        return cls(bundle.a, bundle.b)

    def __call__(self, x):
        return f_eval(self, x)

    def derivative(self, x):
        e = np.exp(-self.a * x)
        return 0.5 * e * (self.b * np.cos(self.b * x) - self.a * np.sin(self.b * x))


def f_eval(profile: ProfileF, x):
    return 0.5 + 0.5 * np.exp(-profile.a * x) * np.sin(profile.b * x)


def simpson(func, lo: float, hi: float, panels: int) -> float:
    if panels < 2 or panels % 2:
        raise ValueError("composite Simpson needs an even number of panels >= 2")
    xs = np.linspace(lo, hi, panels + 1)
    ys = func(xs)
    h = (hi - lo) / panels
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum()))


def f_flow_residuals(profile: ProfileF, x: float, quad_steps: int = 256) -> tuple[float, float]:
    """Residuals of f'(x) = f(x) - f(x-1) and f(x) = integral of f over [x-1, x]."""
    if quad_steps < 16:
        raise ValueError("quad_steps must be at least 16")
    fx = float(f_eval(profile, x))
    deriv = abs(float(profile.derivative(x)) - (fx - float(f_eval(profile, x - 1.0))))
    integ = abs(fx - simpson(lambda s: f_eval(profile, s), x - 1.0, x, quad_steps))
    return deriv, integ


@dataclass
class GSequence:
    """g(1..max_t) stored 0-based: ``values[t - 1] = g(t)``.

    ``recursion`` holds the same sequence produced by the two-term recursion
    (equal to ``values`` for t <= n + 1).
    """

    n: int
    values: np.ndarray
    recursion: np.ndarray

    def __call__(self, t: int) -> float:
        return float(self.values[t - 1])

    @property
    def max_t(self) -> int:
        return self.values.shape[0]

    def max_discrepancy(self) -> float:
        return float(np.max(np.abs(self.values - self.recursion)))


def g_sequence(n: int, max_t: int, profile: ProfileF | None = None) -> GSequence:
    """Expected barrier fraction g(t) for t = 1..max_t.

    The reference values use the exact window average (``math.fsum`` over the
    previous n entries); the recursion g(t+1) = (1 + 1/n) g(t) - g(t-n)/n is run
    alongside from g(n+1) as an independent check.
    """
    if n < 1 or max_t < n + 1:
        raise ValueError("need n >= 1 and max_t >= n + 1")
    profile = profile or ProfileF.from_constants()
    g = [float(v) for v in f_eval(profile, np.arange(1, n + 1) / n)]
    for t in range(n + 1, max_t + 1):
        g.append(math.fsum(g[t - 1 - n : t - 1]) / n)
    values = np.array(g)

    rec = values.copy()
    for t in range(n + 1, max_t):
        # rec index t is g(t+1); g(t) at t-1, g(t-n) at t-n-1
        rec[t] = (1.0 + 1.0 / n) * rec[t - 1] - rec[t - n - 1] / n
    return GSequence(n, values, rec)


def g_f_gap(gseq: GSequence, profile: ProfileF | None = None) -> np.ndarray:
    """|g(t) - f(t/n)| for t = 1..max_t."""
    profile = profile or ProfileF.from_constants()
    t = np.arange(1, gseq.max_t + 1)
    return np.abs(gseq.values - f_eval(profile, t / gseq.n))


def g_f_gap_bound(n: int, t, C_fit: float):
    """(C / 2n) e^{2(t+1)/n}."""
    return C_fit / (2.0 * n) * np.exp(2.0 * (np.asarray(t) + 1.0) / n)


def fit_gap_constant(n: int, max_t: int, profile: ProfileF | None = None) -> float:
    """Smallest C with |g(t) - f(t/n)| <= (C / 2n) e^{2(t+1)/n} for all t <= max_t."""
    gseq = g_sequence(n, max_t, profile)
    t = np.arange(1, max_t + 1)
    return float(np.max(g_f_gap(gseq, profile) / g_f_gap_bound(n, t, 1.0)))


def deviation_bound(x: float, n: int, c: float) -> float:
    """min(1, 2 exp(-x^2 n^{1-2c})): concentration of B_T / n around g(T)."""
    if x < 0:
        raise ValueError("x must be non-negative")
    return min(1.0, 2.0 * math.exp(-x * x * n ** (1.0 - 2.0 * c)))
