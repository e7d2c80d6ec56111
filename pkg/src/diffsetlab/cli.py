"""Command-line runner.

Each verb prints one JSON record.  ``run <kind>`` writes a JSON-lines file
and a CSV summary into ``--out``; those files depend only on the
configuration, so reruns are byte-identical (timings go to a separate file).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .arcs import (
    PreconditionError,
    QuadratureError,
    classify_frequency,
    gauss_sum,
    oscillatory_integral,
    verify_major_estimate,
    verify_minor_estimate,
    weyl_ratio_table,
)
from .core import (
    GridSpec,
    LabConstants,
    PointSet,
    PolynomialFamily,
    read_pointset,
    write_pointset,
)
from .diffset import (
    count_monomial_differences,
    density_bound_thm1,
    greedy_free_set,
    has_polynomial_configuration,
    max_free_set_exact,
)
from .fourier import EmbeddingGroup, balance_function, dft, save_spectrum
from .increment import (
    Random,
    Structured,
    bound_calculator,
    dichotomy,
    iterate,
    l2_mass_table,
)
from .lifting import build_lifted_set, sumset_reduce
from .planted import random_set

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_RESOURCE = 0, 2, 3, 4
SCHEMA = 1


class UsageError(Exception):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"--{field_name}: {msg}")
        self.field = field_name


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, GridSpec):
        return {"base": list(x.base), "q": x.q, "L": x.L, "sign": x.sign}
    if dataclasses.is_dataclass(x):
        return {f.name: getattr(x, f.name) for f in dataclasses.fields(x)}
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, default=_jsonable, sort_keys=True)


def _frac_list(text: str) -> list[Fraction]:
    return [Fraction(t.strip()) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    if text.startswith("@"):
        return [int(t) for t in Path(text[1:]).read_text().split()]
    return [int(t) for t in text.replace(",", " ").split()]


def _need(args, name: str):
    v = getattr(args, name.replace("-", "_"), None)
    if v is None:
        raise UsageError(name, "required for this verb")
    return v


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _constants(args, B: PointSet) -> LabConstants:
    kw = {"C_lab": args.C_lab, "c_lab": args.c_lab}
    if args.eps is not None:
        kw["eps"] = args.eps
    if args.eta is not None:
        kw["eta_override"] = args.eta
    if args.sigma is not None:
        kw["sigma_override"] = args.sigma
    try:
        return LabConstants.for_set(B, **kw)
    except ValueError as e:
        raise UsageError("eps", str(e))


def _family(args, strict=False) -> PolynomialFamily:
    try:
        return PolynomialFamily.parse(_need(args, "poly"), strict=strict)
    except ValueError as e:
        raise UsageError("poly", str(e))


def _outcome_record(out) -> dict:
    if isinstance(out, Random):
        return {"outcome": "random", "count": out.count, "threshold": out.threshold}
    if isinstance(out, Structured):
        return {"outcome": "structured", "grid": out.grid, "density_on_grid": out.density_on_grid,
                "required": out.required, "L_condition": out.L_condition, "via_margin": out.via_margin}
    return {"outcome": "undecided", "undecided": True, "diagnostics": out.diagnostics}


# ---------------------------------------------------------------------------
# single-shot verbs


def cmd_count(args):
    B = read_pointset(_need(args, "set"))
    eps = args.eps if args.eps is not None else Fraction(1)
    return {"count": count_monomial_differences(B, eps, args.backend), "eps": eps}, _file_hash(args.set)


def cmd_witness(args):
    A = _int_list(_need(args, "A"))
    w = has_polynomial_configuration(A, _family(args), d_max=args.d_max, N=args.N)
    return {"witness": None if w is None else {"d": w.d, "pairs": w.pairs}}, None


def cmd_greedy(args):
    S = greedy_free_set(_need(args, "N"), _family(args))
    return {"set": S, "size": len(S)}, None


def cmd_exact_max(args):
    r = max_free_set_exact(_need(args, "N"), _family(args), budget=args.budget)
    return {"size": r.size, "witness": r.witness, "exact": r.exact, "lower_bound_only": not r.exact,
            "nodes": r.nodes}, None


def cmd_spectrum(args):
    B = read_pointset(_need(args, "set"))
    group = EmbeddingGroup.for_box(B.M, B.k, args.eta)
    spec = dft(balance_function(B), group)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "spectrum.c16"
    save_spectrum(spec, path, B.M, args.eta)
    mags = np.abs(spec.values).ravel()
    hist, edges = np.histogram(mags, bins=args.bins)
    with open(out / "spectrum_hist.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lo", "hi", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], hist):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    return {"path": str(path), "T": group.T, "histogram": str(out / "spectrum_hist.csv")}, _file_hash(args.set)


def cmd_classify(args):
    alpha = _frac_list(_need(args, "alpha"))
    r = classify_frequency(alpha, _need(args, "eta"), _need(args, "M"), len(alpha), C_lab=args.C_lab)
    return {"major": r is not None, "q": None if r is None else r.q, "a": None if r is None else r.a}, None


def cmd_gauss(args):
    a = _int_list(_need(args, "a"))
    q = _need(args, "q")
    S = gauss_sum(a, q)
    k = len(a)
    return {"value": S, "abs": abs(S), "hua_ratio": abs(S) / q ** (1 - 1 / k)}, None


def cmd_vint(args):
    beta = [float(x) for x in _frac_list(_need(args, "beta"))]
    N = _need(args, "N")
    v = oscillatory_integral(beta, N, len(beta), args.scheme)
    other = oscillatory_integral(beta, N, len(beta), "gl" if args.scheme == "gk" else "gk")
    return {"value": v, "abs": abs(v), "cross_check": other, "difference": abs(v - other)}, None


def cmd_sweep_minor(args):
    r = verify_minor_estimate(_need(args, "eta"), _need(args, "M"), args.k, args.trials, args.seed,
                              eps=args.eps, C_lab=args.C_lab)
    d = dataclasses.asdict(r)
    d.pop("ratios")
    return d, None


def cmd_sweep_major(args):
    r = verify_major_estimate(_need(args, "q"), _need(args, "eta"), _need(args, "M"), args.k,
                              samples=args.trials, seed=args.seed, eps=args.eps)
    return dataclasses.asdict(r), None


def cmd_weyl_ratio(args):
    Ns = _int_list(_need(args, "Ns"))
    return {"rows": weyl_ratio_table(Ns, args.k, args.seed, args.trials)}, None


def cmd_dichotomy(args):
    B = read_pointset(_need(args, "set"))
    return _outcome_record(dichotomy(B, _constants(args, B))), _file_hash(args.set)


def cmd_iterate(args):
    B = read_pointset(_need(args, "set"))
    tr = iterate(B, _constants(args, B), args.max_steps)
    return {"trace": [json.loads(x) for x in tr.to_jsonl().splitlines()]}, _file_hash(args.set)


def cmd_l2table(args):
    B = read_pointset(_need(args, "set"))
    t = l2_mass_table(B, _constants(args, B))
    return t, _file_hash(args.set)


def cmd_bound(args):
    return bound_calculator(_need(args, "M"), args.k, args.C), None


def cmd_lift(args):
    A = _int_list(_need(args, "A"))
    P = _family(args, strict=True)
    r = build_lifted_set(A, P, N=args.N)
    rec = {"m": r.m, "N_prime": r.N_prime, "size": r.B.cardinality, "certificate": r.certificate,
           "rank": r.decomp.r, "selection": r.decomp.selection, "D": r.decomp.D}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = Path(args.out) / "lifted.pts"
        write_pointset(r.B, path)
        rec["pointset"] = str(path)
    return rec, None


def cmd_sumset_reduce(args):
    r = sumset_reduce(_int_list(_need(args, "A")), _int_list(_need(args, "Bset")), args.N)
    return {"m": r.m, "D": r.D, "size": len(r.D), "bound": r.bound, "containment": r.containment,
            "total": r.total}, None


# ---------------------------------------------------------------------------
# run <kind>


RUN_KINDS = ("count", "dichotomy", "iterate", "sweep-minor", "sweep-major", "lift", "extremal", "bound")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    set: str | None = None
    poly: str | None = None
    A: str | None = None
    M: int | None = None
    N: int | None = None
    k: int = 2
    delta: Fraction | None = None
    eps: Fraction | None = None
    eta: Fraction | None = None
    sigma: Fraction | None = None
    q: int | None = None
    C_lab: Fraction = Fraction(1)
    c_lab: Fraction = Fraction(1)
    C: Fraction = Fraction(1)
    seed: int = 0
    trials: int = 1
    max_steps: int = 32
    budget: int = 5_000_000

    def validate(self):
        if self.kind not in RUN_KINDS:
            raise UsageError("kind", f"must be one of {', '.join(RUN_KINDS)}")
        need = {
            "count": ["set"], "dichotomy": [], "iterate": ["set"], "sweep-minor": ["M", "eta"],
            "sweep-major": ["M", "eta", "q"], "lift": ["A", "poly"], "extremal": ["N", "poly"], "bound": ["M"],
        }[self.kind]
        for f in need:
            if getattr(self, f) is None:
                raise UsageError(f, f"required by run {self.kind}")
        if self.kind == "dichotomy" and self.set is None and (self.M is None or self.delta is None):
            raise UsageError("set", "run dichotomy needs --set or both --M and --delta")
        if self.k < 2:
            raise UsageError("k", "must be at least 2")
        if self.trials < 1:
            raise UsageError("trials", "must be positive")
        for f in ("M", "N", "q"):
            v = getattr(self, f)
            if v is not None and v < 1:
                raise UsageError(f, "must be positive")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise UsageError("delta", "must lie in (0, 1]")
        if self.eps is not None:
            top = Fraction(1, 10 * self.k) if self.kind in ("dichotomy", "iterate") else Fraction(1)
            if not 0 < self.eps <= top:
                raise UsageError("eps", f"must lie in (0, {top}] for run {self.kind}")
        if self.eta is not None and not 0 < self.eta <= 1:
            raise UsageError("eta", "must lie in (0, 1]")

    def canonical(self) -> dict:
        d = dataclasses.asdict(self)
        if self.set is not None:
            d["set"] = _file_hash(self.set)
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in d.items()}

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()[:16]


def _config_from_args(args) -> ExperimentConfig:
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        unknown = set(raw) - fields
        if unknown:
            raise UsageError(sorted(unknown)[0], "unknown config field")
        kw.update(raw)
    for f in fields - {"kind"}:
        v = getattr(args, f, None)
        if v is not None and not (f in kw and v == PARSER_DEFAULTS.get(f)):
            kw[f] = v
    kw["kind"] = args.kind
    for f in ("delta", "eps", "eta", "sigma", "C_lab", "c_lab", "C"):
        if f in kw and kw[f] is not None:
            kw[f] = Fraction(str(kw[f]))
    cfg = ExperimentConfig(**kw)
    cfg.validate()
    return cfg


def _run_rows(cfg: ExperimentConfig):
    """Yield result records for an experiment; every record is a flat-ish dict."""
    consts_kw = {"C_lab": cfg.C_lab, "c_lab": cfg.c_lab}
    if cfg.eps is not None:
        consts_kw["eps"] = cfg.eps
    if cfg.eta is not None:
        consts_kw["eta_override"] = cfg.eta
    if cfg.sigma is not None:
        consts_kw["sigma_override"] = cfg.sigma
    if cfg.kind == "count":
        B = read_pointset(cfg.set)
        yield {"count": count_monomial_differences(B, cfg.eps or 1), "size": B.cardinality}
    elif cfg.kind == "dichotomy":
        sets = ([(cfg.seed, read_pointset(cfg.set))] if cfg.set else
                [(s, random_set(cfg.M, cfg.k, float(cfg.delta), s)) for s in range(cfg.seed, cfg.seed + cfg.trials)])
        for s, B in sets:
            rec = _outcome_record(dichotomy(B, LabConstants.for_set(B, **consts_kw), with_l2=False))
            rec.pop("diagnostics", None)
            yield {"set_seed": s, "size": B.cardinality, **rec}
    elif cfg.kind == "iterate":
        B = read_pointset(cfg.set)
        tr = iterate(B, LabConstants.for_set(B, **consts_kw), cfg.max_steps)
        for line in tr.to_jsonl().splitlines():
            yield json.loads(line)
    elif cfg.kind == "sweep-minor":
        r = verify_minor_estimate(cfg.eta, cfg.M, cfg.k, cfg.trials, cfg.seed, eps=cfg.eps, C_lab=cfg.C_lab)
        yield {"k": cfg.k, "M_or_N": cfg.M, "q": "", "eta": cfg.eta, "quantity": "minor_ratio",
               "empirical_constant": r.max_ratio, "n_minor": r.n_minor, "n_major": r.n_major,
               "calibration_events": r.calibration_events}
    elif cfg.kind == "sweep-major":
        r = verify_major_estimate(cfg.q, cfg.eta, cfg.M, cfg.k, samples=cfg.trials, seed=cfg.seed, eps=cfg.eps)
        yield {"k": cfg.k, "M_or_N": cfg.M, "q": cfg.q, "eta": cfg.eta, "quantity": "major_ratio",
               "empirical_constant": r.max_ratio}
        yield {"k": cfg.k, "M_or_N": cfg.M, "q": cfg.q, "eta": cfg.eta, "quantity": "major_ratio_refined",
               "empirical_constant": r.max_ratio_refined}
    elif cfg.kind == "lift":
        A = _int_list(cfg.A)
        P = PolynomialFamily.parse(cfg.poly)
        r = build_lifted_set(A, P, N=cfg.N)
        yield {"m": r.m, "N_prime": r.N_prime, "size": r.B.cardinality, "certificate": r.certificate}
    elif cfg.kind == "extremal":
        P = PolynomialFamily.parse(cfg.poly, strict=False)
        for n in range(1, cfg.N + 1):
            ex = max_free_set_exact(n, P, cfg.budget)
            g = greedy_free_set(n, P)
            bound = density_bound_thm1(n, P, cfg.C) if n >= 16 and P.k >= 2 else ""
            yield {"N": n, "exact_max": ex.size, "exact": ex.exact, "greedy": len(g),
                   "density": ex.size / n, "thm1_bound": bound}
    elif cfg.kind == "bound":
        yield bound_calculator(cfg.M, cfg.k, cfg.C)


def _cell(v):
    if isinstance(v, (dict, list, tuple, GridSpec)):
        return _dumps(v)
    return str(v) if isinstance(v, Fraction) else v


def cmd_run(args):
    cfg = _config_from_args(args)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    prov = {"config_hash": h, "version": __version__, "seed": cfg.seed, "schema": SCHEMA}
    t0 = time.perf_counter()
    rows = [{**r, **prov} for r in _run_rows(cfg)]
    elapsed = time.perf_counter() - t0
    stem = cfg.kind.replace("-", "_")
    (out / f"{stem}.jsonl").write_text("".join(_dumps(r) + "\n" for r in rows))
    keys = list(dict.fromkeys(key for r in rows for key in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({key: _cell(v) for key, v in r.items()})
    (out / f"{stem}.csv").write_text(buf.getvalue())
    (out / f"{stem}.config.json").write_text(json.dumps(cfg.canonical(), sort_keys=True, indent=1) + "\n")
    with open(out / "timings.jsonl", "a") as fh:
        fh.write(json.dumps({"config_hash": h, "kind": cfg.kind, "runtime": elapsed}) + "\n")
    undecided = any(r.get("outcome") == "undecided" for r in rows)
    return {"kind": cfg.kind, "rows": len(rows), "out": str(out), "config_hash": h, "undecided": undecided,
            "runtime": elapsed}, None


COMMANDS = {
    "count": cmd_count, "witness": cmd_witness, "greedy": cmd_greedy, "exact-max": cmd_exact_max,
    "spectrum": cmd_spectrum, "classify": cmd_classify, "gauss": cmd_gauss, "vint": cmd_vint,
    "sweep-minor": cmd_sweep_minor, "sweep-major": cmd_sweep_major, "weyl-ratio": cmd_weyl_ratio,
    "dichotomy": cmd_dichotomy, "iterate": cmd_iterate, "l2table": cmd_l2table, "bound": cmd_bound,
    "lift": cmd_lift, "sumset-reduce": cmd_sumset_reduce, "run": cmd_run,
}

PARSER_DEFAULTS = {"k": 2, "seed": 0, "trials": 1, "max_steps": 32, "budget": 5_000_000,
                   "C_lab": Fraction(1), "c_lab": Fraction(1), "C": Fraction(1)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diffsetlab", description="Difference-set laboratory.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--set", help="PointSet file ('k M mode' header)")
    g.add_argument("--poly", help="polynomial family, e.g. 'd^2' or 'd, 2*d^2 - d'")
    g.add_argument("--A", help="integers, comma separated or @file")
    g.add_argument("--Bset", help="second integer set for sumset-reduce")
    g.add_argument("--M", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--Ns", help="comma separated list of N")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--q", type=int)
    g.add_argument("--a", help="integer vector for gauss")
    g.add_argument("--alpha", help="frequency, comma separated rationals")
    g.add_argument("--beta", help="oscillatory-integral coefficients")
    g.add_argument("--delta", type=Fraction)
    g.add_argument("--d-max", type=int)
    c = common.add_argument_group("constants")
    c.add_argument("--eps", type=Fraction)
    c.add_argument("--eta", type=Fraction)
    c.add_argument("--sigma", type=Fraction)
    c.add_argument("--c-lab", dest="c_lab", type=Fraction, default=Fraction(1))
    c.add_argument("--C-lab", dest="C_lab", type=Fraction, default=Fraction(1))
    c.add_argument("--C", type=Fraction, default=Fraction(1))
    r = common.add_argument_group("run control")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--threads", type=int, default=1, help="accepted; computation is vectorized and sequential")
    r.add_argument("--out")
    r.add_argument("--config", help="JSON file with ExperimentConfig fields (run only)")
    r.add_argument("--max-steps", type=int, default=32)
    r.add_argument("--budget", type=int, default=5_000_000)
    r.add_argument("--backend", default="direct", choices=["direct", "fft"])
    r.add_argument("--scheme", default="gk", choices=["gk", "gl"])
    r.add_argument("--bins", type=int, default=32)
    sub = p.add_subparsers(dest="verb", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "run":
            sp.add_argument("kind", choices=RUN_KINDS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        result, input_hash = COMMANDS[args.verb](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (MemoryError, QuadratureError) as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PreconditionError, ValueError, FileNotFoundError) as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    params = {k: v for k, v in vars(args).items() if v is not None and k not in ("verb",)}
    print(_dumps({"verb": args.verb, "input_hash": input_hash, "parameters": params, "result": result,
                  "runtime": time.perf_counter() - t0, "version": __version__}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
