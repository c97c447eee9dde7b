"""Command-line front end.

Every command writes one payload (JSON or CSV) carrying a provenance header,
to --output atomically or to stdout.  Exit codes: 0 success, 2 invalid
input, 3 numerical-contract violation (including failed acceptance criteria).

CSV schemas
  birkhoff-verify  m,q_m,sup,bound
  lyapunov         E,le_raw,le_regularized
  butterfly        p,q,band_index,E_min,E_max
  winding --f-csv  theta,f
Floats in CSV are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from ._util import NumericalContractError, thread_count

COMMANDS = ("classify", "winding", "birkhoff-verify", "lyapunov", "butterfly", "probe", "duality-check", "verify-all")

PRESETS = {
    "classify": {"l1": 0.3, "l2": 0.5, "l3": 0.2},
    "winding": {"l1": 0.2, "l2": 1.0, "l3": 1.0, "alpha": "golden", "grid": 4096},
    "birkhoff-verify": {"alpha_cf": "golden", "f": "builtin:sin1+0.5sin2", "levels": 16},
    "lyapunov": {"l1": 0.0, "l2": 0.5, "l3": 0.0, "alpha": "golden", "emin": -3.0, "emax": 3.0,
                 "esteps": 61, "n": 100_000},
    "butterfly": {"l1": 0.0, "l2": 1.0, "l3": 0.0, "qmax": 21},
    "probe": {"l1": 1.0, "l2": 1.0, "l3": 1.0, "alpha": "golden", "theta_rational": "1,0",
              "theta": "0.1234", "N": "1000,2000,4000"},
    "duality-check": {"l1": 0.1, "l2": 0.4, "l3": 0.2, "alpha": "golden", "theta": "0.3",
                      "from_truncation": 3000},
    "verify-all": {},
}

DEFAULTS = {
    "alpha": "golden", "levels": 16, "n": 100_000, "samples": 8, "cocycle": "operator",
    "esteps": 41, "seed": 0, "f": "builtin:sin1+0.5sin2", "alpha_cf": "golden",
}
COMMAND_DEFAULTS = {"winding": {"grid": 4096}}

PARAMS = {
    "classify": {"l1", "l2", "l3"},
    "winding": {"l1", "l2", "l3", "alpha", "grid", "f_csv"},
    "birkhoff-verify": {"alpha_cf", "f", "levels", "beta", "tail_start"},
    "lyapunov": {"l1", "l2", "l3", "alpha", "emin", "emax", "esteps", "n", "samples", "seed", "cocycle"},
    "butterfly": {"l1", "l2", "l3", "qmax"},
    "probe": {"l1", "l2", "l3", "alpha", "theta_rational", "theta", "N"},
    "duality-check": {"l1", "l2", "l3", "alpha", "theta", "from_truncation", "grid"},
    "verify-all": {"only"},
}

REQUIRED = {
    "classify": ("l1", "l2", "l3"),
    "winding": ("l1", "l2", "l3"),
    "lyapunov": ("l1", "l2", "l3", "emin", "emax"),
    "butterfly": ("l1", "l2", "l3", "qmax"),
    "probe": ("l1", "l2", "l3", "N"),
    "duality-check": ("l1", "l2", "l3", "theta", "from_truncation"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "json"
    threads: int | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        unknown = set(self.parameters) - PARAMS[self.command]
        if unknown:
            raise ConfigError(f"unknown parameters for {self.command}: {sorted(unknown)}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.preset not in (None, "paper"):
            raise ConfigError(f"unknown preset {self.preset!r}")

    def resolved(self) -> dict:
        p = {}
        if self.preset == "paper":
            p.update(PRESETS[self.command])
        p.update({k: v for k, v in self.parameters.items() if v is not None})
        defaults = {**DEFAULTS, **COMMAND_DEFAULTS.get(self.command, {})}
        for k in PARAMS[self.command]:
            if k not in p and k in defaults:
                p[k] = defaults[k]
        missing = [k for k in REQUIRED.get(self.command, ()) if p.get(k) is None]
        if missing:
            raise ConfigError(f"missing required parameters: {', '.join('--' + m.replace('_', '-') for m in missing)}")
        return p


# --------------------------------------------------------------------------
# parsing helpers


def parse_alpha(s) -> float:
    if isinstance(s, (int, float)):
        return float(s)
    s = str(s).strip()
    if s == "golden":
        from .contfrac import golden_mean

        return golden_mean()
    if "/" in s:
        return float(Fraction(s))
    return float(s)


def _float_list(s) -> list[float]:
    if s is None or s == "":
        return []
    return [float(v) for v in str(s).split(",")]


def _int_list(s) -> list[int]:
    return [int(v) for v in str(s).split(",")] if s not in (None, "") else []


def _lam(p):
    from .model import CouplingTriple

    return CouplingTriple(float(p["l1"]), float(p["l2"]), float(p["l3"]))


def _parse_cf(spec: str, levels: int):
    from . import contfrac

    spec = str(spec)
    if spec == "golden":
        return contfrac.cf_expand(contfrac.golden_mean(), max_terms=levels + 1)
    if spec.startswith("liouville"):
        return contfrac.cf_from_terms(contfrac.liouville_terms(levels))
    if spec.startswith("terms:"):
        return contfrac.cf_from_terms(_int_list(spec[6:]))
    return contfrac.cf_expand(parse_alpha(spec), max_terms=levels + 1)


def _parse_function(spec: str):
    from .birkhoff import AnalyticTorusFunction, parse_builtin

    if spec.startswith("builtin:"):
        return parse_builtin(spec[8:])
    if spec.startswith("file:"):
        rows = np.loadtxt(spec[5:], delimiter=",", ndmin=2, comments="#")
        n = rows[:, 0].astype(int)
        N = int(np.abs(n).max())
        coeffs = np.zeros(2 * N + 1, dtype=complex)
        coeffs[n + N] = rows[:, 1] + 1j * (rows[:, 2] if rows.shape[1] > 2 else 0.0)
        return AnalyticTorusFunction.from_coefficients(coeffs)
    raise ConfigError(f"cannot parse function spec {spec!r}")


# --------------------------------------------------------------------------
# commands: each returns (payload, csv_header or None, csv_rows or None)


def cmd_classify(p, threads):
    from .model import classify, dual_has_singularity, sigma

    lam = _lam(p)
    lab = classify(lam)
    return {
        "couplings": list(lam.as_tuple()),
        "region": lab.region,
        "flags": sorted(lab.boundary_flags),
        "interior": lab.interior,
        "sigma": list(sigma(lam).as_tuple()),
        "dual_singularity": dual_has_singularity(lam),
    }, None, None


def cmd_winding(p, threads):
    from .winding import factorize, verify_factorization

    w = factorize(_lam(p), parse_alpha(p["alpha"]), int(p["grid"]))
    chk = verify_factorization(w)
    if chk.max_residual > 1e-8:
        raise NumericalContractError(f"factorization residual {chk.max_residual}")
    if p.get("f_csv"):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["theta", "f"])
        for t, v in zip(w.grid, w.f_samples):
            wr.writerow([_g(t), _g(v)])
        _atomic_write(p["f_csv"], buf.getvalue())
    payload = {
        "roots": [[y.real, y.imag] for y in w.roots],
        "winding": w.winding,
        "delta0": w.delta0,
        "c_bound": w.c_bound,
        "mean_f": chk.mean_f,
        "max_residual": chk.max_residual,
    }
    rows = [[_g(t), _g(v)] for t, v in zip(w.grid, w.f_samples)]
    return payload, ["theta", "f"], rows


def cmd_birkhoff(p, threads):
    from .birkhoff import verify_uniform_lemma
    from .contfrac import estimate_beta, select_subsequence

    levels = int(p["levels"])
    cf = _parse_cf(p["alpha_cf"], levels)
    f = _parse_function(str(p["f"]))
    if abs(f.mean) > 1e-14:
        raise ConfigError("function must have zero mean")
    tail = int(p.get("tail_start") or 0)
    beta = p.get("beta")
    if beta is None:
        beta = estimate_beta(cf, tail).beta if str(p["alpha_cf"]).startswith("liouville") else 0.0
    sub = select_subsequence(cf, float(beta), tail)
    rep = verify_uniform_lemma(f, cf, sub)
    rows = [[r.m, r.q, _g(r.sup_grid), _g(r.exact_bound)] for r in rep.rows]
    payload = {
        "rule": rep.rule,
        "beta": float(beta),
        "rows": [{"m": r.m, "q_m": r.q, "sup": r.sup_grid, "sup_certified": r.sup_certified,
                  "bound": r.exact_bound, "stylized_bound": r.stylized_bound} for r in rep.rows],
        "decreasing": rep.decreasing(),
    }
    return payload, ["m", "q_m", "sup", "bound"], rows


def cmd_lyapunov(p, threads):
    from ._util import parallel_map
    from .cocycle import lyapunov

    lam = _lam(p)
    alpha = parse_alpha(p["alpha"])
    es = np.linspace(float(p["emin"]), float(p["emax"]), int(p["esteps"]))
    res = parallel_map(
        lambda E: lyapunov(lam, float(E), alpha, n=int(p["n"]), samples=int(p["samples"]),
                           seed=int(p["seed"]), cocycle=p["cocycle"]),
        es, threads,
    )
    rows = [[_g(r.energy), _g(r.le_raw), _g(r.le_regularized)] for r in res]
    payload = {"rows": [{"E": r.energy, "le_raw": r.le_raw, "le_regularized": r.le_regularized} for r in res],
               "log_mean_abs_c": res[0].log_mean_abs_c if res else None}
    return payload, ["E", "le_raw", "le_regularized"], rows


def cmd_butterfly(p, threads):
    from .spectral import butterfly

    rows = butterfly(_lam(p), int(p["qmax"]), threads=threads)
    out = [[pp, q, i, _g(a), _g(b)] for pp, q, i, a, b in rows]
    payload = {"rows": [dict(zip(["p", "q", "band_index", "E_min", "E_max"], r)) for r in rows]}
    return payload, ["p", "q", "band_index", "E_min", "E_max"], out


def cmd_probe(p, threads):
    from .model import Phase
    from .spectral import point_spectrum_probe

    alpha = parse_alpha(p["alpha"])
    phases = []
    if p.get("theta_rational"):
        for item in str(p["theta_rational"]).split(";"):
            j, k = _int_list(item)
            phases.append(Phase.alpha_rational(j, k, alpha))
    phases += [Phase.generic(t) for t in _float_list(p.get("theta"))]
    if not phases:
        raise ConfigError("no phases given")
    rep = point_spectrum_probe(_lam(p), alpha, phases, _int_list(p["N"]), threads=threads)
    return rep.as_dict(), None, None


def cmd_duality(p, threads):
    from .duality import (
        conjugacy_residual, det_identity_check, dual_equation_residual,
        localized_test_vector, sequence_to_torus,
    )
    from .model import Phase

    lam = _lam(p)
    alpha = parse_alpha(p["alpha"])
    theta = Phase.generic(float(p["theta"]))
    N = int(p["from_truncation"])
    E, v = localized_test_vector(lam, alpha, theta, N)
    G = int(p.get("grid") or (1 << (2 * (2 * N + 1) - 1).bit_length()))
    u = sequence_to_torus(v, G)
    r = dual_equation_residual(lam, alpha, theta, E, u)
    conj, excluded = conjugacy_residual(lam, alpha, theta, E, u, return_excluded=True)
    rep = det_identity_check(lam, alpha, theta, u)
    return {
        "E": E, "r1": r["r1"], "r2": r["r2"], "conjugacy_residual": conj, "excluded_points": excluded,
        "b_estimate": rep.b_estimate, "relative_variation": rep.relative_variation, "grid_size": G,
    }, None, None


def cmd_verify_all(p, threads):
    from .acceptance import run

    only = _int_list(p.get("only")) or None
    results = run(only, threads=threads)
    for r in results:
        print(r.line(), file=sys.stderr)
    payload = {"criteria": [{"number": r.number, "name": r.name, "status": r.status,
                             "seconds": r.seconds, "detail": r.detail} for r in results]}
    rows = [[r.number, r.name, r.status] for r in results]
    failed = [r.number for r in results if not r.passed]
    return payload, ["criterion", "name", "status"], rows, failed


HANDLERS = {
    "classify": cmd_classify,
    "winding": cmd_winding,
    "birkhoff-verify": cmd_birkhoff,
    "lyapunov": cmd_lyapunov,
    "butterfly": cmd_butterfly,
    "probe": cmd_probe,
    "duality-check": cmd_duality,
    "verify-all": cmd_verify_all,
}


# --------------------------------------------------------------------------
# output


def _g(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        v = float(o)
        return v if math.isfinite(v) else str(v)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ehm-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render(cfg: RunConfig, params: dict, payload, header, rows) -> str:
    prov = {"version": __version__, "command": cfg.command, "parameters": params,
            "seed": params.get("seed", 0)}
    if cfg.format == "json" or header is None:
        return json.dumps(_jsonable({"provenance": prov, "result": payload}), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# provenance: " + json.dumps(_jsonable(prov), sort_keys=True) + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    try:
        params = cfg.resolved()
        out = HANDLERS[cfg.command](params, thread_count(cfg.threads))
    except NumericalContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = out[3] if len(out) > 3 else []
    text = render(cfg, params, *out[:3])
    if cfg.output:
        _atomic_write(cfg.output, text)
    else:
        sys.stdout.write(text)
    if failed:
        print(f"failed criteria: {failed}", file=sys.stderr)
        return 3
    return 0


# --------------------------------------------------------------------------
# argparse


def _add_lam(sp):
    sp.add_argument("--l1", type=float)
    sp.add_argument("--l2", type=float)
    sp.add_argument("--l3", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ehm", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="output file (written atomically); stdout if omitted")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", type=int, default=None, help="worker cap (fallback: EHM_THREADS)")
    common.add_argument("--preset", choices=("paper",), default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", parents=[common], help="region label and dual couplings")
    _add_lam(sp)

    sp = sub.add_parser("winding", parents=[common], help="zero-mean phase of the dual symbol")
    _add_lam(sp)
    sp.add_argument("--alpha")
    sp.add_argument("--grid", type=int)
    sp.add_argument("--f-csv", dest="f_csv", help="also write theta,f samples to this CSV")

    sp = sub.add_parser("birkhoff-verify", parents=[common], help="Birkhoff sums along convergents (CSV m,q_m,sup,bound)")
    sp.add_argument("--alpha-cf", dest="alpha_cf", help="golden | liouville | terms:a1,a2,... | number")
    sp.add_argument("--f", help="builtin:sin1+0.5sin2 | file:coeffs.csv (rows n,re,im)")
    sp.add_argument("--levels", type=int, help="Liouville levels, or number of partial quotients")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--tail-start", dest="tail_start", type=int)

    sp = sub.add_parser("lyapunov", parents=[common], help="Lyapunov exponents over an energy range (CSV E,le_raw,le_regularized)")
    _add_lam(sp)
    sp.add_argument("--alpha")
    sp.add_argument("--emin", type=float)
    sp.add_argument("--emax", type=float)
    sp.add_argument("--esteps", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--cocycle", choices=("operator", "dual"))

    sp = sub.add_parser("butterfly", parents=[common], help="approximant bands (CSV p,q,band_index,E_min,E_max)")
    _add_lam(sp)
    sp.add_argument("--qmax", type=int)

    sp = sub.add_parser("probe", parents=[common], help="IPR point-spectrum probe")
    _add_lam(sp)
    sp.add_argument("--alpha")
    sp.add_argument("--theta-rational", dest="theta_rational", help="j,k pairs separated by ';'")
    sp.add_argument("--theta", help="comma-separated generic phases")
    sp.add_argument("--N", help="comma-separated half-widths")

    sp = sub.add_parser("duality-check", parents=[common], help="dual equations and determinant identity")
    _add_lam(sp)
    sp.add_argument("--alpha")
    sp.add_argument("--theta")
    sp.add_argument("--from-truncation", dest="from_truncation", type=int)
    sp.add_argument("--grid", type=int)

    sp = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def config_from_args(argv=None) -> RunConfig:
    ap = build_parser()
    ns = vars(ap.parse_args(argv))
    command = ns.pop("command")
    meta = {k: ns.pop(k) for k in ("output", "format", "threads", "preset")}
    fmt = meta["format"] or ("csv" if command in ("birkhoff-verify", "lyapunov", "butterfly") else "json")
    return RunConfig(command, {k: v for k, v in ns.items() if v is not None}, meta["output"], fmt,
                     meta["threads"], meta["preset"])


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
