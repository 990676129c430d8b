"""Command line front end: validate a spec, run it, write CSV or JSON.

Exit codes: 0 success, 2 invalid spec, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import SPEC_VERSION, __version__
from .analysis import ProfileF, f_eval, fit_gap_constant, g_f_gap, g_f_gap_bound, g_sequence
from .barrier import empirical_g
from .constants import constants_bundle, tmix_upper_bound
from .coupling import closed_form_eab, coupling_replicates, distance_growth_experiment, mean_and_stderr
from .stats import exact_tv, lower_bound_experiment, plan_hoeffding_bound, point_mass

KINDS = (
    "constants", "trace-barrier", "compare-gf", "lower-bound",
    "coupling", "coupling-sweep", "distance-growth", "exact-tv",
)
EXIT_INVALID = 2
EXIT_IO = 3


class InvalidSpec(ValueError):
    pass


@dataclass
class ExperimentSpec:
    kind: str
    n: int | None = None
    steps: int | None = None
    rounds: int | None = None
    max_t: int | None = None
    c: float | None = None
    i: int | None = None
    j: int | None = None
    d: int | None = None
    replicates: int | None = None
    seed: int = 0
    stride: int | None = None
    engine: str = "counter"
    eps: float | None = None
    output_path: str | None = None
    output_format: str = "csv"
    threads: int = 1

    def to_dict(self) -> dict:
        # threads and output location do not affect results
        return {k: v for k, v in asdict(self).items() if k not in ("threads", "output_path") and v is not None}

    def validate(self) -> ExperimentSpec:
        def need(name, cond, msg):
            if getattr(self, name) is None:
                raise InvalidSpec(f"{name}: required for kind {self.kind}")
            if not cond(getattr(self, name)):
                raise InvalidSpec(f"{name}: {msg} (got {getattr(self, name)!r})")

        if self.kind not in KINDS:
            raise InvalidSpec(f"kind: must be one of {', '.join(KINDS)}")
        if self.output_format not in ("csv", "json"):
            raise InvalidSpec("output_format: must be csv or json")
        if self.seed < 0:
            raise InvalidSpec("seed: must be non-negative")
        if self.threads < 1:
            raise InvalidSpec("threads: must be >= 1")
        k = self.kind
        if k == "constants":
            if (self.n is None) != (self.eps is None):
                raise InvalidSpec("n, eps: give both or neither for the mixing-time bound")
            if self.n is not None:
                need("n", lambda v: v >= 4, "must be >= 4")
                need("eps", lambda v: 0 < v < 1, "must lie in (0, 1)")
        elif k == "trace-barrier":
            need("n", lambda v: v >= 2, "must be >= 2")
            need("steps", lambda v: v >= 1, "must be >= 1")
            need("replicates", lambda v: v >= 2, "must be >= 2")
        elif k == "compare-gf":
            need("n", lambda v: v >= 1, "must be >= 1")
            need("max_t", lambda v: v >= self.n + 1, "must be >= n + 1")
        elif k == "lower-bound":
            need("n", lambda v: v >= 2, "must be >= 2")
            c0 = constants_bundle().c0
            need("c", lambda v: 0 < v < c0, f"must lie in (0, c0={c0:.9f})")
            need("replicates", lambda v: v >= 100, "must be >= 100")
        elif k in ("coupling", "coupling-sweep"):
            need("n", lambda v: v >= 4, "must be >= 4")
            need("replicates", lambda v: v >= 2, "must be >= 2")
            if self.engine not in ("deck", "counter"):
                raise InvalidSpec("engine: must be deck or counter")
            if k == "coupling":
                need("i", lambda v: 1 <= v < self.n, "need 1 <= i < n")
                need("j", lambda v: self.i < v <= self.n, "need i < j <= n")
            elif self.stride is not None:
                need("stride", lambda v: v >= 1, "must be >= 1")
        elif k == "distance-growth":
            need("n", lambda v: v >= 2, "must be >= 2")
            need("d", lambda v: 0 <= v <= self.n / 2, "need 0 <= d <= n/2")
            need("steps", lambda v: v >= 1, "must be >= 1")
            need("replicates", lambda v: v >= 2, "must be >= 2")
        elif k == "exact-tv":
            need("n", lambda v: 2 <= v <= 6, "need 2 <= n <= 6")
            need("rounds", lambda v: v >= 0, "must be >= 0")
        return self


@dataclass
class ResultTable:
    header: dict
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    record: dict | None = None  # flat key/value view merged into JSON output


def _header(spec: ExperimentSpec, extra: dict | None = None) -> dict:
    h = {
        "artifact": "cctrlab",
        "version": __version__,
        "spec_version": SPEC_VERSION,
        "spec": spec.to_dict(),
        "constants": constants_bundle().to_dict(),
    }
    if extra:
        h.update(extra)
    return h


def _constants(spec):
    bundle = constants_bundle()
    d = bundle.to_dict()
    cols = ["a", "b", "c0", "C_upper", "alpha", "beta"]
    row = [d[c] for c in cols]
    if spec.n is not None:
        cols += ["n", "eps", "tmix_upper_bound"]
        row += [spec.n, spec.eps, tmix_upper_bound(spec.n, spec.eps, bundle)]
    record = dict(zip(cols, row))
    record["residuals"] = d["residuals"]
    return ResultTable(_header(spec), cols, [tuple(row)], {"residuals": d["residuals"]}, record)


def _trace_barrier(spec):
    n = spec.n
    max_t = n + spec.steps
    mean, se = empirical_g(n, max_t, spec.replicates, spec.seed, threads=spec.threads)
    g = g_sequence(n, max(max_t, n + 1))
    prof = ProfileF.from_constants()
    rows = []
    z = 0.0
    for t in range(1, max_t + 1):
        gt = g(t)
        rows.append((t, mean[t - 1], se[t - 1], float(f_eval(prof, t / n)), gt))
        if se[t - 1] > 0:
            z = max(z, abs(mean[t - 1] - gt) / se[t - 1])
    cols = ["t", "mean_B_over_n", "stderr", "f_of_t_over_n", "g_of_t"]
    return ResultTable(_header(spec), cols, rows, {"max_abs_z_vs_g": z})


def _compare_gf(spec):
    n, max_t = spec.n, spec.max_t
    prof = ProfileF.from_constants()
    g = g_sequence(n, max_t, prof)
    gap = g_f_gap(g, prof)
    C_fit = fit_gap_constant(n, max_t, prof)
    t = np.arange(1, max_t + 1)
    bound = g_f_gap_bound(n, t, C_fit)
    f = f_eval(prof, t / n)
    rows = [(int(t[k]), float(g.values[k]), float(f[k]), float(gap[k]), float(bound[k])) for k in range(max_t)]
    cols = ["t", "g", "f_of_t_over_n", "abs_gap", "gap_bound_with_fitted_C"]
    return ResultTable(
        _header(spec), cols, rows,
        {"C_fit": C_fit, "max_abs_gap": float(gap.max()), "recursion_discrepancy": g.max_discrepancy()},
    )


def _lower_bound(spec):
    res = lower_bound_experiment(spec.n, spec.c, spec.replicates, spec.seed, threads=spec.threads)
    rows = [("chain", r, int(y)) for r, y in enumerate(res.y_chain)]
    rows += [("uniform", r, int(y)) for r, y in enumerate(res.y_uniform)]
    diff, diff_se = res.mean_gap()
    tv, tv_se = res.tv_lower()
    p_chain, p_unif = res.exceed_fractions()
    summary = {
        "mean_Y_chain": float(res.y_chain.mean()),
        "mean_Y_uniform": float(res.y_uniform.mean()),
        "mean_gap": diff,
        "mean_gap_stderr": diff_se,
        "p_chain_exceed": p_chain,
        "p_uniform_exceed": p_unif,
        "tv_lb": tv,
        "tv_lb_stderr": tv_se,
        "tv_best_threshold": res.tv_best_threshold(),
        "hoeffding_bound": plan_hoeffding_bound(res.plan),
    }
    return ResultTable(_header(spec, {"plan": res.plan.to_dict()}), ["side", "replicate", "Y"], rows, summary)


def _coupling(spec):
    out = coupling_replicates(spec.n, spec.i, spec.j, spec.replicates, spec.seed, "deck", spec.threads)
    a, b, rho = out["count_A"], out["count_B"], out["rho"]
    ok = rho <= a * b
    rows = [(int(a[r]), int(b[r]), int(rho[r]), bool(ok[r])) for r in range(a.shape[0])]
    m, se = mean_and_stderr(a * b)
    summary = {
        "mean_AB": m,
        "mean_AB_stderr": se,
        "mean_rho": float(rho.mean()),
        "closed_form": closed_form_eab(spec.n, spec.i, spec.j),
        "inequality_all_ok": bool(ok.all()),
        "stage1_all_ok": bool(out["stage1_ok"].all()),
    }
    return ResultTable(_header(spec), ["count_A", "count_B", "rho", "inequality_ok"], rows, summary)


def sweep_pairs(n: int, stride: int) -> list[tuple[int, int]]:
    idx = sorted(set(range(1, n + 1, stride)) | {n})
    return [(i, j) for i in idx for j in idx if i < j]


def _coupling_sweep(spec):
    n = spec.n
    stride = spec.stride or max(1, n // 10)
    rows = []
    zmax = 0.0
    for pid, (i, j) in enumerate(sweep_pairs(n, stride)):
        # pair pid uses seeds offset so pairs do not share streams
        out = coupling_replicates(n, i, j, spec.replicates, spec.seed * 1_000_003 + pid, spec.engine, spec.threads)
        m, se = mean_and_stderr(out["count_A"] * out["count_B"])
        cf = closed_form_eab(n, i, j)
        z = (m - cf) / se if se > 0 else (0.0 if m == cf else math.inf)
        zmax = max(zmax, abs(z))
        rows.append((i, j, m, se, cf, z))
    cols = ["i", "j", "mc_mean_AB", "stderr", "closed_form", "z_score"]
    return ResultTable(_header(spec), cols, rows, {"max_abs_z": zmax, "pairs": len(rows)})


def _distance_growth(spec):
    res = distance_growth_experiment(spec.n, spec.d, spec.steps, spec.replicates, spec.seed, threads=spec.threads)
    bound = spec.d * (1.0 + 1.0 / spec.n) ** spec.steps
    rows = [(r, int(v)) for r, v in enumerate(res.distances)]
    summary = {
        "mean_distance": res.mean_distance,
        "stderr": res.stderr,
        "growth_bound": bound,
        "within_bound": res.mean_distance <= bound + 3 * res.stderr,
    }
    return ResultTable(_header(spec), ["replicate", "distance"], rows, summary)


def _exact_tv(spec):
    n = spec.n
    rows = [(r, exact_tv(n, point_mass(n), r)) for r in range(spec.rounds + 1)]
    return ResultTable(_header(spec), ["rounds", "tv"], rows, {"start": "identity"})


DISPATCH = {
    "constants": _constants,
    "trace-barrier": _trace_barrier,
    "compare-gf": _compare_gf,
    "lower-bound": _lower_bound,
    "coupling": _coupling,
    "coupling-sweep": _coupling_sweep,
    "distance-growth": _distance_growth,
    "exact-tv": _exact_tv,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    spec.validate()
    table = DISPATCH[spec.kind](spec)
    table.header["summary"] = table.summary
    return table


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def emit_results(table: ResultTable, fmt: str = "csv") -> bytes:
    """CSV with a ``#``-prefixed JSON header line, or a single JSON document."""
    header = _jsonable(table.header)
    if fmt == "json":
        doc = {"header": header, "columns": table.columns, "rows": _jsonable(table.rows)}
        if table.record:
            doc.update(_jsonable(table.record))
        return (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode()
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode()


def parse_csv(data: bytes) -> tuple[dict, list[str], list[list[str]]]:
    lines = data.decode().splitlines()
    header = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return header, rows[0], rows[1:]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cctrlab", description="Card-Cyclic-to-Random shuffle experiments")
    p.add_argument("--version", action="version", version=f"cctrlab {__version__} (spec {SPEC_VERSION})")
    sub = p.add_subparsers(dest="kind", required=True)

    def common(sp, seed=True, reps=True):
        sp.add_argument("--out", dest="output_path", help="output file (default: stdout)")
        sp.add_argument("--format", dest="output_format", choices=("csv", "json"), default=None)
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if reps:
            sp.add_argument("--replicates", type=int, required=True)
            sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    sp = sub.add_parser("constants", help="solve for a, b and print derived constants")
    sp.add_argument("--n", type=int, help="deck size for the mixing-time upper bound")
    sp.add_argument("--eps", type=float, help="TV target for the mixing-time upper bound")
    common(sp, seed=False, reps=False)

    sp = sub.add_parser("trace-barrier", help="empirical g(t) from barrier trajectories")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--steps", type=int, required=True, help="shuffle steps after the startup round")
    common(sp)

    sp = sub.add_parser("compare-gf", help="g(t) against f(t/n)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--max-t", dest="max_t", type=int, required=True)
    common(sp, seed=False, reps=False)

    sp = sub.add_parser("lower-bound", help="distinguishing statistic, chain vs uniform")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c", type=float, required=True)
    common(sp)

    sp = sub.add_parser("coupling", help="three-stage coupled round for one (i, j)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--j", type=int, required=True)
    common(sp)

    sp = sub.add_parser("coupling-sweep", help="Monte Carlo E[AB] vs closed form over an (i, j) grid")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--stride", type=int, help="grid spacing for i and j (default n // 10)")
    sp.add_argument("--engine", choices=("counter", "deck"), default="counter")
    common(sp)

    sp = sub.add_parser("distance-growth", help="insertion distance under label coupling")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--steps", type=int, required=True)
    common(sp)

    sp = sub.add_parser("exact-tv", help="exact TV to uniform from the identity, n <= 6")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--rounds", type=int, required=True)
    common(sp, seed=False, reps=False)
    return p


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    known = {f.name for f in fields(ExperimentSpec)}
    kw = {k: v for k, v in vars(args).items() if k in known and v is not None}
    if "output_format" not in kw:
        json_default = args.kind in ("constants", "exact-tv") or kw.get("output_path", "").endswith(".json")
        kw["output_format"] = "json" if json_default else "csv"
    return ExperimentSpec(**kw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args).validate()
        table = run_experiment(spec)
    except (InvalidSpec, ValueError) as e:
        print(f"cctrlab: invalid spec: {e}", file=sys.stderr)
        return EXIT_INVALID
    data = emit_results(table, spec.output_format)
    if spec.output_path:
        try:
            with open(spec.output_path, "wb") as fh:
                fh.write(data)
        except OSError as e:
            print(f"cctrlab: cannot write {spec.output_path}: {e}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(data.decode())
    return 0
