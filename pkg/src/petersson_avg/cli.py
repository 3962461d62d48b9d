"""``avg`` command line front end.

Exit codes: 0 all verdicts pass, 1 usage/config/hypothesis error, 2 computation
error, 3 at least one fail verdict, 4 inconclusive verdicts only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from . import __version__
from .bounds import FAIL, INCONCLUSIVE, PASS, f_delta_scan, scan_levels, verdict, verify_theorem
from .characters import character, conductor, is_primitive
from .kloosterman import kloosterman_sum, weil_bound
from .petersson import (
    WORKERS_ENV,
    AveragingParams,
    TheoremHypothesisError,
    TruncationPolicy,
    inner_product,
    inner_product_bound,
    sigma_from_rule,
)

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for computation errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    N: int | None = None
    m: int | None = None
    n: int | None = None
    c: int | None = None
    q: int = 1
    chi_index: int = 0
    sigma: float | None = None
    sigma_rule: str | None = None
    levels: list[int] = field(default_factory=list)
    delta: float | None = None
    m_max: int | None = None
    n_max: int | None = None
    b_max: int | None = None
    rel_tol: float | None = None
    mode: str = "shared"
    format: str = "text"
    output: str | None = None
    workers: int = 1

    def policy(self, default_rel_tol: float = 1e-18, default_b_max: int = 16) -> TruncationPolicy:
        return TruncationPolicy(
            n_max=self.n_max,
            b_max=self.b_max if self.b_max is not None else default_b_max,
            mode=self.mode,
            rel_tol=self.rel_tol if self.rel_tol is not None else default_rel_tol,
        )

    def sigma_value(self, N: int) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        return sigma_from_rule(self.sigma_rule or "q-squared", N, self.q)


# ---------------------------------------------------------------- deterministic JSON


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and complex numbers as {re, im}."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return to_json({"re": obj.real, "im": obj.imag}, indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return to_json(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _sum_with_tail(s) -> dict:
    return {"value": s.value, "tail_radius": s.tail_radius}


def _exit_for(verdicts: dict[str, str]) -> int:
    vs = set(verdicts.values())
    if FAIL in vs:
        return EXIT_FAIL
    if INCONCLUSIVE in vs:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------- subcommands


def _cmd_kloosterman(cfg: RunConfig):
    v = kloosterman_sum(cfg.m, cfg.n, cfg.c)
    res = {"S": v, "weil_bound": weil_bound(cfg.m, cfg.n, cfg.c)}
    return res, {}, f"{v:.12g}"


def _cmd_char(cfg: RunConfig):
    chi = character(cfg.q, cfg.chi_index)
    vals = [chi(k) for k in range(cfg.q)]
    res = {"q": cfg.q, "index": chi.index, "exponents": list(chi.exponents), "order": chi.order,
           "conductor": conductor(chi), "primitive": is_primitive(chi), "values": vals}
    lines = [f"chi mod {cfg.q}, index {chi.index}: order {chi.order}, conductor {res['conductor']}"]
    lines += [f"  chi({k}) = {z.real:.12g} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.12g}i" for k, z in enumerate(vals)]
    return res, {}, "\n".join(lines)


def _cmd_innerprod(cfg: RunConfig):
    pol = cfg.policy()
    r = inner_product(cfg.m, cfg.n, cfg.N, pol)
    bound = inner_product_bound(cfg.m, cfg.n, cfg.N)
    diag = 4 * math.pi * math.sqrt(cfg.m * cfg.n) if cfg.m == cfg.n else 0.0
    dev = abs(r.value - diag)
    v = verdict(dev, r.tail_radius, bound)
    res = {"inner_product": _sum_with_tail(r), "diagonal": diag, "deviation": dev, "bound": bound}
    text = f"(a_{cfg.m}, a_{cfg.n}) at N={cfg.N}: {r.value.real:.15g} +/- {r.tail_radius:.3g}; |dev| = {dev:.6g} vs bound {bound:.6g} [{v}]"
    return res, {"lemma": v}, text


def _params(cfg: RunConfig, N: int, m: int) -> AveragingParams:
    return AveragingParams(N, m, character(cfg.q, cfg.chi_index), cfg.sigma_value(N))


def _cmd_theorem(cfg: RunConfig):
    cert = verify_theorem(_params(cfg, cfg.N, cfg.m), cfg.policy(), cfg.workers)
    res = {
        "N": cert.N, "m": cert.m, "q": cert.q, "chi_index": cert.chi_index, "conductor": cert.conductor,
        "sigma": cert.sigma, "A": cert.A, "n_max": cert.n_max, "b_max": cert.b_max,
        "hypotheses": cert.hypotheses,
        "main_term": cert.main_term,
        "average": _sum_with_tail(cert.average),
        "deviation": cert.deviation,
        "identity_residual": cert.identity_residual,
        "identity_tolerance": cert.identity_tolerance,
        "e2_self_check": cert.e2_self_check,
        "terms": [{"name": c.name, "value_abs": c.value_abs, "tail_radius": c.tail_radius,
                   "computed_upper": c.computed_upper, "compared": c.lhs, "bound": c.bound, "verdict": c.verdict} for c in cert.checks],
        "bounds": cert.bounds.as_dict(),
        "L_enclosure": _sum_with_tail(cert.L_enclosure),
        "coverage": cert.coverage,
    }
    lines = [f"N={cert.N} m={cert.m} q={cert.q} chi={cert.chi_index} sigma={cert.sigma:g} "
             f"(n_max={cert.n_max}, b_max={cert.b_max})",
             f"  main term        {cert.main_term.real:.12g} {cert.main_term.imag:+.12g}i",
             f"  average          {cert.average.value.real:.12g} {cert.average.value.imag:+.12g}i +/- {cert.average.tail_radius:.4g}",
             f"  identity resid.  {cert.identity_residual:.3e} (tol {cert.identity_tolerance:.1e})"]
    for c in cert.checks:
        lines.append(f"  {c.name:<5} |v| = {c.value_abs:.6g}  tail = {c.tail_radius:.4g}  compared = {c.lhs:.6g}"
                     f"  bound = {c.bound:.6g}  [{c.verdict}]")
    lines.append(f"  overall: {cert.overall}")
    return res, cert.verdicts, "\n".join(lines)


_SCAN_FIELDS = ("N", "sigma", "deviation", "tail_radius", "theorem_bound_total", "N_times_deviation", "error")


def _cmd_scan(cfg: RunConfig):
    chi = character(cfg.q, cfg.chi_index)
    rule = cfg.sigma if cfg.sigma is not None else (cfg.sigma_rule or "q-squared")
    rows = scan_levels(cfg.levels, cfg.m, chi, rule, cfg.policy(default_rel_tol=1e-12), cfg.workers)
    res = {"rows": [asdict(r) for r in rows]}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_SCAN_FIELDS)
    for r in rows:
        w.writerow([_fmt_float(x) if isinstance(x, float) else x for x in (getattr(r, f) for f in _SCAN_FIELDS)])
    verdicts = {f"N={r.N}": (FAIL if r.error else PASS) for r in rows}
    return res, verdicts, buf.getvalue().rstrip("\n")


def _cmd_fdelta(cfg: RunConfig):
    chi = character(cfg.q, cfg.chi_index)
    rule = cfg.sigma if cfg.sigma is not None else (cfg.sigma_rule or "q-squared")
    out = f_delta_scan(cfg.N, cfg.delta, chi, rule, cfg.policy(), cfg.m_max or 10, cfg.workers)
    res = {"N": out.N, "delta": out.delta, "m_star": out.m_star, "marker": out.marker,
           "trail": [asdict(s) for s in out.trail]}
    verdicts = {"f_delta": PASS if out.marker == "range exhausted" else INCONCLUSIVE}
    return res, verdicts, f"m* = {out.m_star} ({out.marker})"


def _cmd_selftest(cfg: RunConfig):
    from .selftest import run_selftest

    results = run_selftest(seed=0)
    verdicts = {k: (PASS if ok else FAIL) for k, (ok, _) in results.items()}
    text = "\n".join(f"{'PASS' if ok else 'FAIL'} {k}: {msg}" for k, (ok, msg) in results.items())
    return {k: {"ok": ok, "detail": msg} for k, (ok, msg) in results.items()}, verdicts, text


_COMMANDS = {
    "kloosterman": _cmd_kloosterman,
    "char": _cmd_char,
    "innerprod": _cmd_innerprod,
    "theorem": _cmd_theorem,
    "scan": _cmd_scan,
    "fdelta": _cmd_fdelta,
    "selftest": _cmd_selftest,
}


# ---------------------------------------------------------------- parsing


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _levels(s: str) -> list[int]:
    try:
        return [_positive_int(t) for t in s.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="avg", description="Averages of twisted special values via the Petersson formula.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, fmt="text"):
        sp.add_argument("--format", choices=("json", "csv", "text"), default=fmt)
        sp.add_argument("--output", "-o", default=None, help="write to this path instead of stdout")
        sp.add_argument("--workers", type=_positive_int, default=None,
                        help=f"worker threads (default: ${WORKERS_ENV} or 1)")

    def policy(sp):
        sp.add_argument("--n-max", type=_positive_int, default=None)
        sp.add_argument("--b-max", type=_positive_int, default=None)
        sp.add_argument("--rel-tol", type=float, default=None)
        sp.add_argument("--mode", choices=("shared", "adaptive"), default="shared")

    def character_args(sp):
        sp.add_argument("--q", type=_positive_int, default=1, help="character modulus")
        sp.add_argument("--chi-index", type=int, default=0)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--sigma", type=float, default=None)
        g.add_argument("--sigma-rule", default=None, help="q-squared | max-window | min-window | <number>")

    sp = sub.add_parser("kloosterman", help="S(m, n; c)")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c", type=_positive_int, required=True)
    common(sp)

    sp = sub.add_parser("char", help="Dirichlet character table")
    sp.add_argument("--q", type=_positive_int, required=True)
    sp.add_argument("--index", dest="chi_index", type=int, default=0)
    common(sp)

    sp = sub.add_parser("innerprod", help="(a_m, a_n) at level N")
    sp.add_argument("--m", type=_positive_int, required=True)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--level", dest="N", type=_positive_int, required=True)
    policy(sp)
    common(sp)

    sp = sub.add_parser("theorem", help="certificate for one parameter point")
    sp.add_argument("--level", dest="N", type=_positive_int, required=True)
    sp.add_argument("--m", type=_positive_int, default=1)
    character_args(sp)
    policy(sp)
    common(sp)

    sp = sub.add_parser("scan", help="deviation across levels")
    sp.add_argument("--levels", type=_levels, required=True, help="comma separated, e.g. 400,600,800")
    sp.add_argument("--m", type=_positive_int, default=1)
    character_args(sp)
    policy(sp)
    common(sp, fmt="csv")

    sp = sub.add_parser("fdelta", help="largest certified m with |(a_m, L) - 4 pi chi(m)| <= delta")
    sp.add_argument("--level", dest="N", type=_positive_int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--m-max", type=_positive_int, default=10)
    character_args(sp)
    policy(sp)
    common(sp)

    sp = sub.add_parser("selftest", help="invariant suite with fixed seeds")
    common(sp)
    return p


def parse_config(argv: list[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    workers = ns.pop("workers", None)
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    cfg = RunConfig(subcommand=ns.pop("subcommand"), workers=max(1, workers))
    for k, v in ns.items():
        setattr(cfg, k, v)
    if cfg.subcommand == "scan" and not cfg.levels:
        raise UsageError("avg scan: --levels must list at least one level")
    if cfg.subcommand == "fdelta" and not cfg.delta > 0:
        raise UsageError("avg fdelta: --delta must be positive")
    return cfg


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    return {k: v for k, v in d.items() if v is not None and v != []}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    t0 = time.perf_counter()
    try:
        results, verdicts, text = _COMMANDS[cfg.subcommand](cfg)
    except TheoremHypothesisError as exc:
        print(f"avg {cfg.subcommand}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"avg {cfg.subcommand}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, MemoryError) as exc:
        print(f"avg {cfg.subcommand}: computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    elapsed = time.perf_counter() - t0

    if cfg.format == "json":
        doc = {"config": _config_dict(cfg), "results": results, "verdicts": verdicts,
               "timings": {"wall_seconds": elapsed}}
        _emit(to_json(doc), cfg.output)
    elif cfg.format == "csv" and cfg.subcommand != "scan":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(results):
            w.writerow([k, _fmt_float(v) if isinstance(v, float) else v])
        _emit(buf.getvalue().rstrip("\n"), cfg.output)
    else:
        _emit(text, cfg.output)
    return _exit_for(verdicts)


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    elif isinstance(obj, complex):
        yield f"{prefix}.re", obj.real
        yield f"{prefix}.im", obj.imag
    else:
        yield prefix, obj


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
