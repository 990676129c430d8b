"""Profile parameters (a, b) and the constants derived from them."""
from __future__ import annotations

import math
from dataclasses import dataclass

BRACKET = (2 * math.pi + math.pi / 4, 2 * math.pi + math.pi / 2)
DEFAULT_TOLERANCE = 1e-12
MAX_ITER = 200


class RootNotBracketed(ArithmeticError):
    pass


def profile_residual(b: float) -> float:
    """ln(sin b / b) - (1 - b cos b / sin b), zero at the profile frequency."""
    s = math.sin(b)
    assert s > 0, "sin b must stay positive on the bracket"
    return math.log(s / b) - (1.0 - b * math.cos(b) / s)


def decay_from_frequency(b: float) -> float:
    s = math.sin(b)
    assert s > 0
    return math.log(b / s)


def system_residuals(a: float, b: float) -> tuple[float, float]:
    """Residuals of b = e^a sin b and a = e^a cos b - 1."""
    ea = math.exp(a)
    return b - ea * math.sin(b), a - (ea * math.cos(b) - 1.0)


def solve_profile_roots(tolerance: float = DEFAULT_TOLERANCE) -> tuple[float, float]:
    """Bisect the one-variable residual in b, then recover a = ln(b / sin b).

    Iterates until both equations of the original 2x2 system hold to
    ``tolerance`` (or the bracket collapses to adjacent floats).
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance!r}")
    lo, hi = BRACKET
    f_lo, f_hi = profile_residual(lo), profile_residual(hi)
    if f_lo == 0.0:
        return decay_from_frequency(lo), lo
    if f_hi == 0.0:
        return decay_from_frequency(hi), hi
    if (f_lo > 0) == (f_hi > 0):
        raise RootNotBracketed(f"residual has equal signs at {lo} ({f_lo}) and {hi} ({f_hi})")

    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = profile_residual(mid)
        a = decay_from_frequency(mid)
        r1, r2 = system_residuals(a, mid)
        if max(abs(f_mid), abs(r1), abs(r2)) <= tolerance or mid in (lo, hi):
            if max(abs(r1), abs(r2)) > tolerance:
                break
            return a, mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    raise RuntimeError(f"bisection did not reach tolerance {tolerance:g} in {MAX_ITER} iterations")


@dataclass(frozen=True)
class ConstantsBundle:
    a: float
    b: float
    c0: float
    C_upper: float
    alpha: float
    beta: float
    tolerance: float

    @property
    def residuals(self) -> tuple[float, float]:
        return system_residuals(self.a, self.b)

    def to_dict(self) -> dict:
        r1, r2 = self.residuals
        return {
            "a": self.a,
            "b": self.b,
            "c0": self.c0,
            "C_upper": self.C_upper,
            "alpha": self.alpha,
            "beta": self.beta,
            "residuals": [r1, r2],
        }


def contraction_exponent() -> float:
    return 2.0 * (math.log(2.0) - math.log(math.e - 1.0))


def upper_rate_constant() -> float:
    return 1.0 / (math.log(2.0) - math.log(math.e - 1.0))


def constants_bundle(tolerance: float = DEFAULT_TOLERANCE) -> ConstantsBundle:
    a, b = solve_profile_roots(tolerance)
    return ConstantsBundle(
        a=a,
        b=b,
        c0=1.0 / (2.0 + 2.0 * a),
        C_upper=upper_rate_constant(),
        alpha=contraction_exponent(),
        beta=0.5 * math.sin(math.pi / 4),
        tolerance=tolerance,
    )


def tmix_upper_bound(n: int, eps: float, bundle: ConstantsBundle | None = None) -> float:
    """C (n ln n - 2 n ln eps), the path-coupling mixing-time bound in steps."""
    if n < 4:
        raise ValueError("n must be at least 4")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    C = upper_rate_constant() if bundle is None else bundle.C_upper
    return C * (n * math.log(n) - 2.0 * n * math.log(eps))
