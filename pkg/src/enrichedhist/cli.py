"""Command-line driver: convergence tables, beta curves, optimization, unisolvence checks.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .bases import ConstructionError, make_bundle, CONFIGS
from .geometry import GeometryError, Simplex, reference_simplex
from .histopolation import SCHEMES, convergence_study
from .mesh import MeshError
from .moments import IntegrabilityError, WeightKind, WeightSpec
from .momentsystem import assemble, regularized_beta, stability, unisolvence
from .optimizer import Mode, ParamVector, evaluate, optimize

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


def parse_float_list(text: str) -> list[float]:
    """``a,b,c`` or ``start:step:stop`` (inclusive)."""
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ConfigError("range step must be positive")
            k = int(math.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 12) for i in range(k + 1)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad number list {text!r}") from exc


def parse_weight(text: str, d: int = 3) -> WeightSpec:
    try:
        w = WeightSpec.parse(text, d)
    except ValueError as exc:
        raise ConfigError(f"bad weight {text!r}: {exc}") from exc
    if w.dim != d:
        raise ConfigError(f"weight {text!r} is not {d}-dimensional")
    return w


def parse_vertices(text: str | None) -> Simplex:
    if not text:
        return reference_simplex(3)
    try:
        pts = [[float(x) for x in row.split(",")] for row in text.split(";")]
        return Simplex(np.array(pts))
    except (ValueError, GeometryError) as exc:
        raise ConfigError(f"bad vertices {text!r}: {exc}") from exc


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow(["" if isinstance(r[c], float) and math.isnan(r[c]) else
                     (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in columns])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


# commands ---------------------------------------------------------------------

def cmd_convergence(args) -> int:
    w = parse_weight(args.weight)
    ns = parse_int_list(args.n)
    if not ns or min(ns) < 2:
        raise ConfigError("mesh sizes must be >= 2")
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if any(s not in SCHEMES for s in schemes):
        raise ConfigError(f"schemes must be among {SCHEMES}")
    if not 1 <= args.f <= 9:
        raise ConfigError("--f must be in 1..9")
    if not 0.0 <= args.delta <= 0.25:
        raise ConfigError("--delta must be in [0, 0.25]")
    rows = convergence_study(args.f, w, ns, schemes, args.mesh, args.delta, args.seed,
                             quad_order=args.quad_order, data_order=args.data_order)
    _emit(_csv(rows, ["n", "h", "scheme", "weight", "error", "order"]), args.out)
    return EXIT_OK


def beta_curve_rows(alphas, alpha_reg: float = 0.0, bases: str = "raw", d: int = 3) -> list[dict]:
    s = reference_simplex(d)
    rows = []
    for a in alphas:
        w = WeightSpec.dirichlet([a] * (d + 1))
        sys_ = assemble(s, w, make_bundle(s, w, bases))
        rep = stability(sys_)
        breg = regularized_beta(sys_, alpha_reg, rep)
        rows.append({"alpha": float(a), "beta": rep.beta, "beta_reg": breg})
    return rows


def cmd_beta_curve(args) -> int:
    alphas = parse_float_list(args.alphas)
    if not alphas or min(alphas) <= 0:
        raise ConfigError("alphas must be positive")
    if args.alpha_reg < 0:
        raise ConfigError("--alpha-reg must be non-negative")
    rows = beta_curve_rows(alphas, args.alpha_reg, args.bases)
    _emit(_csv(rows, ["alpha", "beta", "beta_reg"]), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    alpha = parse_float_list(args.alpha)
    if len(alpha) == 1:
        alpha = alpha * 4
    if len(alpha) != 4:
        raise ConfigError("--alpha needs 1 or 4 values")
    if args.budget < 0:
        raise ConfigError("--budget must be non-negative")
    p0 = ParamVector.initial(alpha)
    res = optimize(p0, args.mode, args.budget, bases=args.bases)
    start = evaluate(p0, args.bases)
    end = evaluate(res.p_star, args.bases)
    report = {
        "mode": Mode(args.mode).value,
        "bases": args.bases,
        "budget": args.budget,
        "nfev": res.nfev,
        "p0": p0.as_dict(),
        "p_star": res.p_star.as_dict(),
        "start": start,
        "end": end,
        "objective_trace": res.trace,
    }
    _emit(_json(report), args.out)
    return EXIT_OK


def unisolvence_report(s: Simplex, w: WeightSpec, config: str = "split",
                       duplicate_psi: bool = False) -> dict:
    if duplicate_psi:
        bundle = make_bundle(s, w, "raw")
        psi = list(bundle.psi)
        psi[1] = psi[0]
        bundle = replace(bundle, psi=tuple(psi), label="debug-duplicate-psi")
    else:
        bundle = make_bundle(s, w, config)
    sys_ = assemble(s, w, bundle)
    rep = unisolvence(sys_)
    beta = stability(sys_).beta if rep.unisolvent else float("nan")
    out = {
        "weight": str(w),
        "config": bundle.label,
        "detA": rep.detA,
        "detT": rep.detT,
        "detH": rep.detH,
        "beta": beta,
        "verdict": rep.unisolvent,
        "diagnosis": rep.diagnosis,
    }
    if w.kind in (WeightKind.DIRICHLET, WeightKind.CONSTANT):
        al = np.array(w.alpha)
        S = al.sum()
        out["detA_formula"] = float((-1) ** w.dim * w.dim * np.prod(al / (S - al)))
    return out


def cmd_unisolvence(args) -> int:
    w = parse_weight(args.weight)
    s = parse_vertices(args.vertices)
    if s.dim != 3 or s.ambient_dim != 3:
        raise ConfigError("vertices must describe a tetrahedron in R^3")
    _emit(_json(unisolvence_report(s, w, args.config, args.debug_duplicate_psi)), args.out)
    return EXIT_OK


# parser ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="enrichedhist", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convergence", help="L2 errors of linear and quadratic histopolation")
    c.add_argument("--f", type=int, default=1, help="test function id 1..9")
    c.add_argument("--n", default="5,9,13", help="comma-separated grid sizes")
    c.add_argument("--weight", default="dirichlet:1,1,1,1")
    c.add_argument("--schemes", default="linear,quadratic")
    c.add_argument("--mesh", choices=("uniform", "quasi"), default="uniform")
    c.add_argument("--delta", type=float, default=0.2)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--quad-order", type=int, default=6)
    c.add_argument("--data-order", type=int, default=5)
    c.add_argument("--out")
    c.set_defaults(func=cmd_convergence)

    b = sub.add_parser("beta-curve", help="beta for symmetric Dirichlet weights on the reference tet")
    b.add_argument("--alphas", default="2:0.5:5", help="list a,b,c or range start:step:stop")
    b.add_argument("--alpha-reg", type=float, default=0.0)
    b.add_argument("--bases", choices=CONFIGS, default="raw")
    b.add_argument("--out")
    b.set_defaults(func=cmd_beta_curve)

    o = sub.add_parser("optimize", help="tune (alpha, theta, upsilon)")
    o.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.MAX_BETA.value)
    o.add_argument("--alpha", default="3")
    o.add_argument("--budget", type=int, default=200)
    o.add_argument("--bases", choices=CONFIGS, default="raw")
    o.add_argument("--out")
    o.set_defaults(func=cmd_optimize)

    u = sub.add_parser("unisolvence", help="single-simplex unisolvence and stability report")
    u.add_argument("--weight", default="dirichlet:1,1,1,1")
    u.add_argument("--vertices", help="x,y,z;x,y,z;x,y,z;x,y,z (default: reference tet)")
    u.add_argument("--config", choices=CONFIGS, default="split")
    u.add_argument("--debug-duplicate-psi", action="store_true",
                   help="replace psi_1 by psi_0 to exercise the failure path")
    u.add_argument("--out")
    u.set_defaults(func=cmd_unisolvence)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (np.linalg.LinAlgError, ConstructionError, MeshError, IntegrabilityError,
            FloatingPointError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
