"""Acceptance gate. Each check records a PASS/FAIL line through the ``accept``
fixture; the lines are echoed in the terminal summary after the run.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from cctrlab.analysis import ProfileF, f_flow_residuals, g_f_gap, g_sequence
from cctrlab.barrier import BarrierDeck, barrier_insert, empirical_g
from cctrlab.cli import main
from cctrlab.constants import constants_bundle
from cctrlab.coupling import (
    closed_form_eab,
    contraction_certificate,
    coupling_replicates,
    distance_growth_experiment,
    mean_and_stderr,
    three_stage_run,
)
from cctrlab.rng import RandomStream
from cctrlab.shuffle import Deck
from cctrlab.stats import exact_distributions, exact_tv, lower_bound_experiment, plan_hoeffding_bound, plugin_tv, point_mass

# reference numerics (four-decimal a and b, and the c0 derived from them)
PUB_B, PUB_A, PUB_C0, PUB_C_UPPER = 7.4615, 2.0888, 0.161875162, 6.58664655
SPEC_CONTRACTION = 0.738233


# ---- AC1 --------------------------------------------------------------------

def test_ac1_solver_values(accept):
    t0 = time.perf_counter()
    k = constants_bundle()
    dt = time.perf_counter() - t0
    accept("AC1", "b", abs(k.b - PUB_B) <= 5e-4, f"b={k.b:.10f}")
    accept("AC1", "a", abs(k.a - PUB_A) <= 5e-4, f"a={k.a:.10f}")
    accept("AC1", "C_upper", abs(k.C_upper - PUB_C_UPPER) <= 1e-7, f"C_upper={k.C_upper:.10f}")
    accept("AC1", "runtime", dt < 1.0, f"{dt:.3f}s < 1s")


def test_ac1_c0(accept):
    k = constants_bundle()
    accept("AC1", "c0", abs(k.c0 - PUB_C0) <= 1e-8, f"c0={k.c0:.12f} vs {PUB_C0}, diff {k.c0 - PUB_C0:.2e}")


# ---- AC2 --------------------------------------------------------------------

def test_ac2_profile_identities(accept):
    t0 = time.perf_counter()
    prof = ProfileF.from_constants()
    res = np.array([f_flow_residuals(prof, k / 10, 256) for k in range(101)])
    dt = time.perf_counter() - t0
    accept("AC2", "derivative", res[:, 0].max() <= 1e-10, f"max residual {res[:, 0].max():.2e}")
    accept("AC2", "integral", res[:, 1].max() <= 1e-8, f"max residual {res[:, 1].max():.2e}")
    accept("AC2", "runtime", dt < 1.0, f"{dt:.3f}s < 1s")


# ---- AC3 --------------------------------------------------------------------

def test_ac3_gap_scaling(accept):
    t0 = time.perf_counter()

    def peak(n):
        return float(g_f_gap(g_sequence(n, 3 * n))[: 3 * n].max())

    ok, parts = True, []
    for n in (100, 300, 1000):
        lo, hi = peak(n), peak(3 * n)
        ratio = hi / lo
        ok &= math.isfinite(lo) and math.isfinite(hi) and 0.2 <= ratio <= 0.5
        parts.append(f"n={n}: {lo:.3e} -> {hi:.3e} ratio {ratio:.3f}")
    dt = time.perf_counter() - t0
    accept("AC3", "ratio", ok, "; ".join(parts))
    accept("AC3", "runtime", dt < 5.0, f"{dt:.2f}s < 5s")


# ---- AC4 --------------------------------------------------------------------

def test_ac4_barrier_law(accept):
    t0 = time.perf_counter()
    n = 500
    mean, se = empirical_g(n, 3 * n, 2000, seed=0)
    g = g_sequence(n, 3 * n).values
    excess = np.abs(mean - g) - (3 * se + 0.01)
    accept("AC4", "mean vs g", bool(np.all(excess <= 0)), f"worst margin {excess.max():.4f} (<= 0 required)")

    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(100):
        bd = BarrierDeck(Deck(rng.permutation(6) + 1), int(rng.integers(0, 7)))
        t = int(rng.integers(1, 100))
        lefts = sum(barrier_insert(bd, t, s)[1] for s in range(6))
        bad += Fraction(lefts, 6) != Fraction(bd.barrier_gap, 6)
    accept("AC4", "P(left|B)=B/n", bad == 0, f"{bad} of 100 states violate")
    dt = time.perf_counter() - t0
    accept("AC4", "runtime", dt < 120, f"{dt:.1f}s < 120s")


# ---- AC5 --------------------------------------------------------------------

def lattice(n, parts=5):
    stride = n // parts
    idx = sorted(set(range(1, n + 1, stride)) | {n})
    return [(n, i, j) for i in idx for j in idx if i < j]


# regular (i, j) lattice, as in the coupling-sweep command
AC5_TRIPLES = lattice(20) + lattice(100)


def test_ac5_contraction(accept):
    t0 = time.perf_counter()
    worst, misses = 0.0, []
    for k, (n, i, j) in enumerate(AC5_TRIPLES):
        out = coupling_replicates(n, i, j, 10_000, seed=k, engine="deck")
        m, se = mean_and_stderr(out["count_A"] * out["count_B"])
        cf = closed_form_eab(n, i, j)
        z = abs(m - cf) / se if se > 0 else (0.0 if m == cf else math.inf)
        worst = max(worst, z)
        if z > 3:
            misses.append(f"({n},{i},{j}) z={z:.2f}")
    accept("AC5", "(a) MC vs closed form", not misses,
           f"{len(AC5_TRIPLES)} triples, max |z| {worst:.2f}" + (", misses " + ", ".join(misses) if misses else ""))

    n = 100
    cap = SPEC_CONTRACTION * (1 + 2 / n)
    top = max(closed_form_eab(n, i, j) for i in range(1, n) for j in range(i + 1, n + 1))
    accept("AC5", "(b) closed form cap", top <= cap, f"max {top:.6f} <= {cap:.6f}")

    n, runs = 50, 100_000
    violations, rhos = 0, np.empty(runs)
    for r in range(runs):
        rng = RandomStream(50, r)
        i, j = sorted(int(v) for v in rng.gen.choice(np.arange(1, n + 1), 2, replace=False))
        res = three_stage_run(n, i, j, rng)
        violations += not res.inequality_ok
        rhos[r] = res.rho
    accept("AC5", "(c) rho <= AB", violations == 0, f"{violations} violations in {runs} runs at n={n}")
    m, se = mean_and_stderr(rhos)
    bound = math.exp(-constants_bundle().alpha)
    accept("AC5", "(d) E[rho] <= e^-alpha", m <= bound + 3 * se, f"mean rho {m:.4f} +- {se:.4f} vs {bound:.6f}")
    dt = time.perf_counter() - t0
    accept("AC5", "runtime", dt < 300, f"{dt:.1f}s < 300s")


# ---- AC6 --------------------------------------------------------------------

def test_ac6_distance_growth(accept):
    t0 = time.perf_counter()
    n, parts, ok = 200, [], True
    for d in (1, 5):
        for t in (n, 2 * n):
            res = distance_growth_experiment(n, d, t, 10_000, seed=1000 * d + t)
            bound = d * (1 + 1 / n) ** t
            ok &= res.mean_distance <= bound + 3 * res.stderr
            parts.append(f"d={d},t={t}: {res.mean_distance:.3f} <= {bound:.3f}")
    dt = time.perf_counter() - t0
    accept("AC6", "growth bound", ok, "; ".join(parts))
    accept("AC6", "runtime", dt < 120, f"{dt:.1f}s < 120s")


# ---- AC7 --------------------------------------------------------------------

@pytest.fixture(scope="module")
def ac7_timer():
    return {"t": 0.0}


@pytest.mark.parametrize("rounds", [1, 2, 3])
def test_ac7_plugin_vs_exact(accept, rounds, ac7_timer):
    t0 = time.perf_counter()
    n = 5
    exact = exact_tv(n, point_mass(n), rounds)
    est = plugin_tv(n, rounds, 100_000, seed=0)
    ac7_timer["t"] += time.perf_counter() - t0
    accept("AC7", f"round {rounds}", abs(est - exact) <= 0.01, f"plug-in {est:.5f} vs exact {exact:.5f}, diff {est - exact:+.5f}")


def test_ac7_monotone(accept, ac7_timer):
    t0 = time.perf_counter()
    tvs = [exact_tv(5, point_mass(5), r) for r in range(7)]
    mono = all(b <= a for a, b in zip(tvs, tvs[1:]))
    ac7_timer["t"] += time.perf_counter() - t0
    accept("AC7", "exact TV non-increasing", mono, ", ".join(f"{v:.5f}" for v in tvs))
    accept("AC7", "runtime", ac7_timer["t"] < 120, f"{ac7_timer['t']:.1f}s < 120s")


# ---- AC8 --------------------------------------------------------------------

def test_ac8_lower_bound(accept):
    t0 = time.perf_counter()
    res = lower_bound_experiment(10_000, 0.1, 1000, seed=0)
    gap, gse = res.mean_gap()
    accept("AC8", "mean separation", gap >= 3 * gse, f"mean gap {gap:.2f}, pooled se {gse:.2f}")
    tv, tse = res.tv_lower()
    accept("AC8", "tv_lower > 0", tv > 3 * tse, f"tv_lb {tv:.3f} +- {tse:.3f}")
    p_u = res.exceed_fractions()[1]
    hb = plan_hoeffding_bound(res.plan)
    accept("AC8", "uniform tail vs Hoeffding", p_u <= hb + 3 * res.uniform_exceed_se(),
           f"P_uniform {p_u:.3f} <= {hb:.3f} + 3*{res.uniform_exceed_se():.3f}")
    dt = time.perf_counter() - t0
    accept("AC8", "runtime", dt < 600, f"{dt:.1f}s < 600s")


# ---- AC9 --------------------------------------------------------------------

def test_ac9_consistency(accept, tmp_path):
    k = constants_bundle()
    sup = contraction_certificate(100)[0]
    accept("AC9", "e^-alpha vs certificate", abs(math.exp(-k.alpha) - sup) <= 1e-6,
           f"{math.exp(-k.alpha):.10f} vs {sup:.10f}")

    out = tmp_path / "c.json"
    code = main(["constants", "--n", "100", "--eps", "0.25", "--out", str(out)])
    import json

    got = json.loads(out.read_text())["tmix_upper_bound"]
    C = 1 / (math.log(2) - math.log(math.e - 1))
    hand = C * (100 * math.log(100) - 2 * 100 * math.log(0.25))
    accept("AC9", "CLI t_mix bound", code == 0 and abs(got - hand) <= 1e-9, f"cli {got!r} vs hand {hand!r}")


# ---- AC10 -------------------------------------------------------------------

AC10_RUNS = [
    ["constants", "--n", "50", "--eps", "0.1"],
    ["trace-barrier", "--n", "30", "--steps", "60", "--replicates", "40", "--seed", "7"],
    ["compare-gf", "--n", "40", "--max-t", "200"],
    ["lower-bound", "--n", "500", "--c", "0.1", "--replicates", "100", "--seed", "3"],
    ["coupling", "--n", "30", "--i", "4", "--j", "20", "--replicates", "300", "--seed", "1"],
    ["coupling-sweep", "--n", "30", "--replicates", "200", "--stride", "7", "--seed", "2"],
    ["distance-growth", "--n", "60", "--d", "3", "--steps", "120", "--replicates", "100", "--seed", "4"],
    ["exact-tv", "--n", "5", "--rounds", "3"],
]


def test_ac10_determinism(accept, tmp_path):
    bad = []
    for k, args in enumerate(AC10_RUNS):
        outs = []
        for rep in range(2):
            path = tmp_path / f"{k}_{rep}.out"
            assert main([*args, "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            bad.append(args[0])
    accept("AC10", "byte-identical reruns", not bad, f"{len(AC10_RUNS)} experiment kinds" + (f", differing: {bad}" if bad else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
