"""Command-line surface: single evaluations, sweeps, figure presets, and a
self-contained validation harness.  All numeric output is CSV.

λ values cross this boundary in dB and are converted to linear scale before
touching the library (λ_E = 9 dB means 10^0.9 ≈ 7.943).  Correlation is only
meaningful to the Monte Carlo method; requesting any closed-form or
quadrature method with a nonzero ρ is a usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .channel_model import CorrelationConfig, SystemConfig
from .errors import SelectionModelError
from .esr_engine import (
    esr_asymptotic,
    esr_os_exact,
    esr_os_highsnr,
    esr_ss_exact,
    esr_ss_highsnr,
)
from .simulation import estimate_esr, quadrature_esr

CSV_HEADER = (
    "scheme,method,K,L,M_D,M_E,lambda_d_db,lambda_e_db,rho_s,rho_d,rho_e,"
    "esr_bpcu,stderr,term_count,max_log_term,trials,seed"
)

_SWEEP_VARS = (
    "lambda_d_db",
    "lambda_e_db",
    "m_d",
    "m_e",
    "k",
    "l",
    "rho_s",
    "rho_d",
    "rho_e",
)
_INT_VARS = {"m_d", "m_e", "k", "l"}
_METHODS = ("exact", "highsnr", "asymptotic", "quadrature", "mc")

_DEFAULTS: Dict[str, object] = {
    "scheme": "both",
    "method": "exact",
    "k": 1,
    "l": 1,
    "md": 1,
    "me": 1,
    "lambda_d_db": 10.0,
    "lambda_e_db": 0.0,
    "rho_s": 0.0,
    "rho_d": 0.0,
    "rho_e": 0.0,
    "trials": 100_000,
    "seed": 12345,
    "out": None,
}

_CONFIG_TYPES = {
    "scheme": str,
    "method": str,
    "k": int,
    "l": int,
    "md": int,
    "me": int,
    "lambda_d_db": float,
    "lambda_e_db": float,
    "rho_s": float,
    "rho_d": float,
    "rho_e": float,
    "trials": int,
    "seed": int,
    "var": str,
    "from": float,
    "to": float,
    "step": float,
    "out": str,
}


@dataclass(frozen=True)
class RowSpec:
    """One CSV row to compute: a scheme/method at a full parameter point."""

    scheme: str  # "os" | "ss"
    method: str  # one of _METHODS
    k: int
    l: int
    m_d: int
    m_e: int
    lambda_d_db: float
    lambda_e_db: float
    rho_s: float
    rho_d: float
    rho_e: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ExperimentSpec:
    """A parsed experiment: base point, scheme/method selections, optional
    sweep, and output destination."""

    scheme: str
    method: str
    base: RowSpec
    sweep: Optional[Tuple[str, float, float, float]]
    out: Optional[str]


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _fmt(value, spec: str = "%.12g") -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return spec % value


def compute_row(row: RowSpec) -> List[str]:
    """Evaluate one RowSpec and render the CSV fields (shared by workers)."""
    cfg = SystemConfig(
        K=row.k,
        L=row.l,
        M_D=row.m_d,
        M_E=row.m_e,
        lambda_D=_db_to_linear(row.lambda_d_db),
        lambda_E=_db_to_linear(row.lambda_e_db),
    )
    scheme_uc = row.scheme.upper()
    stderr = term_count = max_log_term = trials = seed = None
    if row.method == "mc":
        corr = CorrelationConfig(rho_S=row.rho_s, rho_D=row.rho_d, rho_E=row.rho_e)
        est = estimate_esr(cfg, corr, scheme_uc, row.trials, row.seed)
        value = est.mean
        stderr, trials, seed = est.stderr, est.trials, est.seed
    else:
        if row.method == "exact":
            res = esr_os_exact(cfg) if scheme_uc == "OS" else esr_ss_exact(cfg)
        elif row.method == "highsnr":
            res = esr_os_highsnr(cfg) if scheme_uc == "OS" else esr_ss_highsnr(cfg)
        elif row.method == "asymptotic":
            res = esr_asymptotic(cfg, scheme_uc)
        elif row.method == "quadrature":
            res = quadrature_esr(cfg, scheme_uc)
        else:
            raise SelectionModelError(f"unknown method {row.method!r}")
        value = res.value
        term_count, max_log_term = res.term_count, res.max_log_term
    return [
        row.scheme,
        row.method,
        str(row.k),
        str(row.l),
        str(row.m_d),
        str(row.m_e),
        _fmt(row.lambda_d_db, "%g"),
        _fmt(row.lambda_e_db, "%g"),
        _fmt(row.rho_s, "%g"),
        _fmt(row.rho_d, "%g"),
        _fmt(row.rho_e, "%g"),
        _fmt(value),
        _fmt(stderr, "%.6g"),
        _fmt(term_count),
        _fmt(max_log_term, "%.6g"),
        _fmt(trials),
        _fmt(seed),
    ]


# ---------------------------------------------------------------------------
# argument plumbing


def _add_point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=["os", "ss", "both"], default=None)
    p.add_argument(
        "--method",
        choices=list(_METHODS) + ["all"],
        default=None,
        help="evaluation route; 'all' expands to every method",
    )
    p.add_argument("--k", type=int, default=None, help="number of transmitters K")
    p.add_argument("--l", type=int, default=None, help="number of destinations L")
    p.add_argument("--md", type=int, default=None, help="destination paths M_D")
    p.add_argument("--me", type=int, default=None, help="eavesdropper paths M_E")
    p.add_argument(
        "--lambda-d-db",
        type=float,
        default=None,
        dest="lambda_d_db",
        help="destination per-path SNR in dB (10^(dB/10) linear inside)",
    )
    p.add_argument(
        "--lambda-e-db",
        type=float,
        default=None,
        dest="lambda_e_db",
        help="eavesdropper per-path SNR in dB (9 dB = 7.943 linear)",
    )
    p.add_argument("--rho-s", type=float, default=None, dest="rho_s",
                   help="transmitter correlation (mc only)")
    p.add_argument("--rho-d", type=float, default=None, dest="rho_d",
                   help="destination path correlation (mc only)")
    p.add_argument("--rho-e", type=float, default=None, dest="rho_e",
                   help="eavesdropper path correlation (mc only)")
    p.add_argument("--trials", type=int, default=None, help="mc trial count")
    p.add_argument("--seed", type=int, default=None, help="mc seed (64-bit)")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--config", default=None,
                   help="key=value file supplying defaults; flags override")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for multi-row runs")


def _read_config(path: str, parser: argparse.ArgumentParser) -> Dict[str, object]:
    out: Dict[str, object] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    for ln, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_TYPES:
            parser.error(f"{path}:{ln}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_TYPES[key](value.strip())
        except ValueError:
            parser.error(f"{path}:{ln}: bad value for {key}: {value.strip()!r}")
    return out


def _merged(args: argparse.Namespace, parser: argparse.ArgumentParser) -> Dict[str, object]:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(_read_config(args.config, parser))
    for key in _DEFAULTS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    return merged


def _validate_point(m: Dict[str, object], parser: argparse.ArgumentParser) -> None:
    for key in ("k", "l", "md", "me"):
        if int(m[key]) < 1:
            parser.error(f"--{key} must be a positive integer")
    for key in ("rho_s", "rho_d", "rho_e"):
        if not 0.0 <= float(m[key]) < 1.0:
            parser.error(f"--{key.replace('_', '-')} must lie in [0, 1)")
    if int(m["trials"]) < 1000:
        parser.error("--trials must be at least 1000")


def _methods_of(m: Dict[str, object]) -> List[str]:
    method = str(m["method"])
    return list(_METHODS) if method == "all" else [method]


def _schemes_of(m: Dict[str, object]) -> List[str]:
    scheme = str(m["scheme"])
    return ["os", "ss"] if scheme == "both" else [scheme]


def _base_row(m: Dict[str, object]) -> RowSpec:
    return RowSpec(
        scheme="os",
        method="exact",
        k=int(m["k"]),
        l=int(m["l"]),
        m_d=int(m["md"]),
        m_e=int(m["me"]),
        lambda_d_db=float(m["lambda_d_db"]),
        lambda_e_db=float(m["lambda_e_db"]),
        rho_s=float(m["rho_s"]),
        rho_d=float(m["rho_d"]),
        rho_e=float(m["rho_e"]),
        trials=int(m["trials"]),
        seed=int(m["seed"]),
    )


def _check_corr_vs_methods(
    rows: Sequence[RowSpec], parser: argparse.ArgumentParser
) -> None:
    for row in rows:
        if row.method != "mc" and (row.rho_s or row.rho_d or row.rho_e):
            parser.error(
                "correlation (ρ ≠ 0) is only supported by --method mc; "
                "closed forms and quadrature assume i.i.d. channels"
            )


def _sweep_values(
    var: str, start: float, stop: float, step: float, parser: argparse.ArgumentParser
) -> List[float]:
    if var not in _SWEEP_VARS:
        parser.error(f"--var must be one of {', '.join(_SWEEP_VARS)}")
    if stop < start:
        parser.error("--from must not exceed --to")
    if step <= 0:
        parser.error("--step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [start + i * step for i in range(count)]
    if var in _INT_VARS:
        for v in values:
            if abs(v - round(v)) > 1e-9:
                parser.error(f"sweep of {var} requires integer values, got {v}")
    return values


def _apply_var(row: RowSpec, var: str, value: float) -> RowSpec:
    field = {
        "lambda_d_db": "lambda_d_db",
        "lambda_e_db": "lambda_e_db",
        "m_d": "m_d",
        "m_e": "m_e",
        "k": "k",
        "l": "l",
        "rho_s": "rho_s",
        "rho_d": "rho_d",
        "rho_e": "rho_e",
    }[var]
    if var in _INT_VARS:
        return replace(row, **{field: int(round(value))})
    return replace(row, **{field: float(value)})


def _emit(rows: Sequence[RowSpec], out: Optional[str], jobs: int) -> int:
    if jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rendered = list(pool.map(compute_row, rows))
    else:
        rendered = [compute_row(r) for r in rows]
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        writer.writerows(rendered)
    finally:
        if out:
            fh.close()
    return 0


# ---------------------------------------------------------------------------
# subcommands


def _cmd_esr(args, parser) -> int:
    m = _merged(args, parser)
    _validate_point(m, parser)
    base = _base_row(m)
    rows = [
        replace(base, scheme=s, method=meth)
        for s in _schemes_of(m)
        for meth in _methods_of(m)
    ]
    _check_corr_vs_methods(rows, parser)
    return _emit(rows, m.get("out"), args.jobs)


def _cmd_sweep(args, parser) -> int:
    m = _merged(args, parser)
    _validate_point(m, parser)
    var = args.var if args.var is not None else m.get("var")
    start = args.start if args.start is not None else m.get("from")
    stop = args.stop if args.stop is not None else m.get("to")
    step = args.step if args.step is not None else m.get("step")
    if var is None or start is None or stop is None or step is None:
        parser.error("sweep requires --var, --from, --to, --step")
    values = _sweep_values(str(var), float(start), float(stop), float(step), parser)
    base = _base_row(m)
    rows = [
        replace(_apply_var(base, str(var), v), scheme=s, method=meth)
        for v in values
        for s in _schemes_of(m)
        for meth in _methods_of(m)
    ]
    _check_corr_vs_methods(rows, parser)
    return _emit(rows, m.get("out"), args.jobs)


_FIG5_RHO_SETS = (
    (0.0, 0.0, 0.0),
    (0.9, 0.0, 0.0),
    (0.0, 0.9, 0.0),
    (0.9, 0.9, 0.0),
    (0.0, 0.0, 0.9),
    (0.9, 0.0, 0.9),
)


def figure_preset(name: str, trials: int = 100_000, seed: int = 12345) -> List[RowSpec]:
    """Parameter rows reproducing the reference performance figures."""
    rows: List[RowSpec] = []
    lam_sweep = [float(v) for v in range(0, 41, 2)]
    if name == "fig2":
        for k, l in ((1, 1), (1, 3), (3, 1), (3, 3)):
            for v in lam_sweep:
                for scheme in ("os", "ss"):
                    for method in ("exact", "highsnr"):
                        rows.append(
                            RowSpec(scheme, method, k, l, 3, 3, v, 9.0,
                                    0.0, 0.0, 0.0, trials, seed)
                        )
    elif name == "fig3":
        for kl in (1, 2):
            for m in (1, 2):
                for v in lam_sweep:
                    for scheme in ("os", "ss"):
                        for method in ("highsnr", "asymptotic"):
                            rows.append(
                                RowSpec(scheme, method, kl, kl, m, m, v, 9.0,
                                        0.0, 0.0, 0.0, trials, seed)
                            )
    elif name == "fig4":
        for m_e in (1, 2, 3):
            for m_d in range(1, 7):
                for scheme in ("os", "ss"):
                    rows.append(
                        RowSpec(scheme, "exact", 2, 2, m_d, m_e, 20.0, 0.0,
                                0.0, 0.0, 0.0, trials, seed)
                    )
    elif name == "fig5":
        for rho_s, rho_d, rho_e in _FIG5_RHO_SETS:
            for v in [float(x) for x in range(0, 21, 2)]:
                for scheme in ("os", "ss"):
                    rows.append(
                        RowSpec(scheme, "mc", 4, 4, 4, 4, v, 9.0,
                                rho_s, rho_d, rho_e, trials, seed)
                    )
    else:
        raise SelectionModelError(f"unknown figure preset {name!r}")
    return rows


def _cmd_figure(args, parser) -> int:
    m = _merged(args, parser)
    rows = figure_preset(args.name, trials=int(m["trials"]), seed=int(m["seed"]))
    return _emit(rows, m.get("out"), args.jobs)


def _validate_one(task: Tuple[int, int, int, int, float, float, str]) -> Tuple[str, bool]:
    k, l, m_d, m_e, ld_db, le_db, scheme = task
    cfg = SystemConfig(k, l, m_d, m_e, _db_to_linear(ld_db), _db_to_linear(le_db))
    closed = esr_os_exact(cfg) if scheme == "os" else esr_ss_exact(cfg)
    oracle = quadrature_esr(cfg, scheme.upper())
    err = abs(closed.value - oracle.value)
    tol = max(1e-6 * abs(oracle.value), 1e-8)
    ok = err <= tol
    line = (
        f"{'PASS' if ok else 'FAIL'} scheme={scheme} K={k} L={l} M_D={m_d} "
        f"M_E={m_e} lambda_d_db={ld_db:g} lambda_e_db={le_db:g} "
        f"closed={closed.value:.10g} oracle={oracle.value:.10g} abs_err={err:.3e}"
    )
    return line, ok


def _cmd_validate(args, parser) -> int:
    if args.grid == "small":
        kl_vals, m_vals, ld_vals, le_vals = (1, 2), (1, 2), (0.0, 10.0), (0.0, 9.0)
    else:
        kl_vals, m_vals, ld_vals, le_vals = (1, 2, 3), (1, 2, 3), (0.0, 10.0, 20.0), (0.0, 9.0)
    tasks = [
        (k, l, m_d, m_e, ld, le, scheme)
        for k in kl_vals
        for l in kl_vals
        for m_d in m_vals
        for m_e in m_vals
        for ld in ld_vals
        for le in le_vals
        for scheme in ("os", "ss")
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_validate_one, tasks))
    else:
        results = [_validate_one(t) for t in tasks]
    failures = 0
    for line, ok in results:
        print(line)
        failures += 0 if ok else 1
    # one Monte Carlo concordance spot check ties all three routes together
    cfg = SystemConfig(2, 2, 2, 2, _db_to_linear(10.0), 1.0)
    corr = CorrelationConfig()
    for scheme in ("os", "ss"):
        closed = esr_os_exact(cfg) if scheme == "os" else esr_ss_exact(cfg)
        est = estimate_esr(cfg, corr, scheme.upper(), 200_000, 20240501)
        ok = abs(est.mean - closed.value) <= 6.0 * est.stderr
        print(
            f"{'PASS' if ok else 'FAIL'} scheme={scheme} mc_vs_closed "
            f"closed={closed.value:.8g} mc={est.mean:.8g} stderr={est.stderr:.3g}"
        )
        failures += 0 if ok else 1
    total = len(results) + 2
    print(f"SUMMARY pass={total - failures} fail={failures} total={total}")
    return 0 if failures == 0 else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="esrsel",
        description=(
            "Ergodic secrecy rate of optimal/sub-optimal source-destination "
            "pair selection over frequency-selective fading. Emits CSV."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_esr = sub.add_parser("esr", help="evaluate a single parameter point")
    _add_point_flags(p_esr)

    p_sweep = sub.add_parser("sweep", help="sweep one variable, CSV per point")
    _add_point_flags(p_sweep)
    p_sweep.add_argument("--var", choices=_SWEEP_VARS, default=None)
    p_sweep.add_argument("--from", dest="start", type=float, default=None)
    p_sweep.add_argument("--to", dest="stop", type=float, default=None)
    p_sweep.add_argument("--step", dest="step", type=float, default=None)

    p_fig = sub.add_parser("figure", help="emit data for a reference figure")
    p_fig.add_argument("name", choices=["fig2", "fig3", "fig4", "fig5"])
    _add_point_flags(p_fig)

    p_val = sub.add_parser("validate", help="closed forms vs quadrature vs mc")
    p_val.add_argument("--grid", choices=["small", "full"], default="small")
    p_val.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)
    active_parser = {
        "esr": p_esr,
        "sweep": p_sweep,
        "figure": p_fig,
        "validate": p_val,
    }[args.command]
    try:
        if args.command == "esr":
            return _cmd_esr(args, active_parser)
        if args.command == "sweep":
            return _cmd_sweep(args, active_parser)
        if args.command == "figure":
            return _cmd_figure(args, active_parser)
        return _cmd_validate(args, active_parser)
    except SelectionModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
