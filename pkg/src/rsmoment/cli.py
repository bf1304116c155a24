"""Batch experiment driver: config, command dispatch, CSV + manifest output.

Commands mirror the verification surfaces: trace-check (trace-formula
cross-validation), afe (central values + G-independence), kloosterman,
rhs-nf, units, moment, scan, recover.  Every run writes a manifest (config
echo, package and interpreter versions, certificates) next to its CSV so a
run can be reproduced byte-for-byte from the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from . import __version__
from .numfield import get_field
from .modforms import eigenforms, load_newform, newform_from_eigenform, write_newform
from .rankin import DEFAULT_G_SCALE, DEFAULT_CONTOUR, UncertifiedError, central_value
from .tracefmla import (TraceRHSParams, kloosterman_nf, kloosterman_q,
                        KloostermanQuery, petersson_rhs_nf, petersson_rhs_q,
                        unit_sum_tail)
from . import moments


@dataclass
class RunConfig:
    """Plain key=value configuration with CLI-flag override."""

    field: str = "Q"
    precision_bits: int = 64
    afe_tol: float = 1e-8
    e_tol: float = 1e-6
    g_scale: float = DEFAULT_G_SCALE
    contour: float = DEFAULT_CONTOUR
    newform: str = ""
    outdir: str = "."
    seed: int = 0

    def validate(self):
        if self.precision_bits < 64:
            raise ValueError("precision_bits must be >= 64")
        for name in ("afe_tol", "e_tol", "g_scale", "contour"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path:
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            cur = getattr(cfg, key)
            setattr(cfg, key, type(cur)(val) if not isinstance(cur, bool) else val == "true")
    return cfg


def _apply_overrides(cfg: RunConfig, args):
    for name in ("field", "g_scale", "contour", "outdir", "seed", "afe_tol", "e_tol"):
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "g", None):
        cfg.newform = args.g
    cfg.validate()
    return cfg


def _write_outputs(cfg: RunConfig, command: str, csv_text: str, certs: dict,
                   stem: str) -> Path:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    csv_path.write_text(csv_text)
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "versions": {"rsmoment": __version__,
                     "python": sys.version.split()[0],
                     "numpy": np.__version__},
        "certificates": certs,
    }
    (outdir / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return csv_path


def _load_g(cfg: RunConfig) -> "NewformRecord":
    if not cfg.newform:
        raise ValueError("a newform file is required (--g PATH)")
    return load_newform(cfg.newform)


def _parse_krange(spec: str) -> list[int]:
    if ":" in spec:
        parts = [int(x) for x in spec.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 2
        return list(range(lo, hi + 1, step))
    return [int(x) for x in spec.split(",")]


def cmd_kloosterman(cfg: RunConfig, args) -> int:
    field = get_field(cfg.field)
    if field.degree == 1:
        val = kloosterman_q(args.m, args.n, args.c)
        cert = 0.0
    else:
        q = KloostermanQuery(alpha=field.element(args.m), beta=field.element(args.n),
                             c=field.element(args.c, args.c2))
        val = kloosterman_nf(q)
        cert = 0.0
    csv = "field,m,n,c,value\n" + f"{cfg.field},{args.m},{args.n},{args.c},{val:.15g}\n"
    _write_outputs(cfg, "kloosterman", csv, {"certificate": cert}, "kloosterman")
    print(f"{val:.15g}")
    return 0


def cmd_rhs_nf(cfg: RunConfig, args) -> int:
    field = get_field(cfg.field)
    if field.degree != 2:
        raise ValueError("rhs-nf requires a quadratic field (--field Q_sqrt5 or Q_sqrt2)")
    kvec = tuple(int(x) for x in args.k.split(","))
    params = TraceRHSParams(weight_vec=kvec, c_norm_bound=args.cmax,
                            unit_height_bound=args.B, tol=args.tol)
    rv = petersson_rhs_nf(field.element(args.nu), field.element(args.xi), params)
    csv = ("field,k1,k2,nu,xi,cmax,B,value,certificate\n"
           f"{cfg.field},{kvec[0]},{kvec[1]},{args.nu},{args.xi},"
           f"{args.cmax},{args.B},{rv.value:.15g},{rv.certificate:.6g}\n")
    _write_outputs(cfg, "rhs-nf", csv, {"certificate": rv.certificate}, "rhs_nf")
    print(f"{rv.value:.15g} (certificate {rv.certificate:.3g})")
    return 0


def cmd_units(cfg: RunConfig, args) -> int:
    field = get_field(cfg.field)
    rows = ["field,lambda0,height_exponent,partial_sum,tail_certificate"]
    eps1 = float(field.embed_omega(64)[0] * field.fundamental_unit[1]
                 + field.fundamental_unit[0])
    certs = {}
    for t in range(2, args.tmax + 1, 2):
        us = unit_sum_tail(field, args.lam, eps1 ** t)
        rows.append(f"{cfg.field},{args.lam},{t},{us.value:.15g},{us.certificate:.6g}")
        certs[f"height_eps^{t}"] = us.certificate
    _write_outputs(cfg, "units", "\n".join(rows) + "\n", certs, "units")
    print("\n".join(rows))
    return 0


def cmd_trace_check(cfg: RunConfig, args) -> int:
    rows = ["k,pair,lhs,rhs,abs_error,tolerance"]
    worst = 0.0
    for k in _parse_krange(args.k):
        ow = moments.omega_weights(k)
        forms = eigenforms(k, 64)
        for (m, n) in ((2, 3), (3, 5), (4, 9), (2, 8)):
            lhs = float(sum(w * f.c(m) * f.c(n) for w, f in zip(ow.omega, forms)))
            rv = petersson_rhs_q(m, n, k)
            err = abs(lhs - rv.value)
            worst = max(worst, err / max(1.0, abs(rv.value)))
            rows.append(f"{k},({m};{n}),{lhs:.15g},{rv.value:.15g},{err:.3g},1e-08")
    _write_outputs(cfg, "trace-check", "\n".join(rows) + "\n",
                   {"worst_relative_error": worst}, "trace_check")
    print("\n".join(rows))
    print(f"worst relative error: {worst:.3g}")
    return 0 if worst <= 1e-8 else 3


def cmd_afe(cfg: RunConfig, args) -> int:
    g = _load_g(cfg)
    rows = ["k,index,g_scale,contour,L,certificate"]
    certs = {}
    spread_max = 0.0
    for k in _parse_krange(args.k):
        forms = eigenforms(k, 8)
        for f in forms:
            vals = []
            for cg in (0.5 * cfg.g_scale, cfg.g_scale, 2.0 * cfg.g_scale):
                vp_cut = None
                cv = central_value(eigenforms(k, _afe_len(k, g, cg))[f.index], g,
                                   g_scale=cg, contour=cfg.contour, tol=cfg.afe_tol)
                vals.append(cv.value)
                rows.append(f"{k},{f.index},{cg},{cfg.contour},{cv.value:.15g},"
                            f"{cv.certificate:.3g}")
                certs[f"k{k}f{f.index}cg{cg}"] = cv.certificate
            spread_max = max(spread_max, max(vals) - min(vals))
    rows.append(f"# max spread across g_scale values: {spread_max:.3g}")
    _write_outputs(cfg, "afe", "\n".join(rows) + "\n", certs, "afe")
    print("\n".join(rows))
    return 0


def _afe_len(k: int, g, cg: float) -> int:
    from .rankin import VParams, effective_cutoff
    return effective_cutoff(VParams((k,), (g.weight,), conductor=float(g.level),
                                    g_scale=cg), 1e-9)


def cmd_moment(cfg: RunConfig, args) -> int:
    g = _load_g(cfg)
    rep = moments.moment_report(g, args.p, args.kw, g_scale=cfg.g_scale,
                                afe_tol=cfg.afe_tol,
                                e_trunc=moments.ETruncation(tol=cfg.e_tol))
    csv = moments.CSV_HEADER + "\n" + moments.report_csv_row(rep) + "\n"
    _write_outputs(cfg, "moment", csv, {"cert_total": rep.cert_total}, "moment")
    print(csv, end="")
    if abs(rep.identity_residual) > rep.cert_total:
        print(f"identity residual {rep.identity_residual:.3g} exceeds certificate "
              f"{rep.cert_total:.3g}", file=sys.stderr)
        return 3
    return 0


def cmd_scan(cfg: RunConfig, args) -> int:
    g = _load_g(cfg)
    ks = _parse_krange(args.k)
    result = moments.asymptotic_scan(g, args.p, ks, g_scale=cfg.g_scale,
                                     afe_tol=cfg.afe_tol, e_tol=cfg.e_tol)
    csv = moments.scan_to_csv(result)
    certs = {"fitted_slope": result.slope,
             "theoretical_slope": result.slope_theoretical,
             "max_residual_from_fit": result.max_abs_residual_from_fit}
    path = _write_outputs(cfg, "scan", csv, certs, f"scan_p{args.p}")
    print(csv, end="")
    print(f"fitted slope {result.slope:.6f} vs theoretical "
          f"{result.slope_theoretical:.6f}; csv at {path}")
    return 0


def cmd_recover(cfg: RunConfig, args) -> int:
    g = _load_g(cfg)
    rows = ["k,p,recovered_C,reference_C,abs_error"]
    worst = 0.0
    for k in _parse_krange(args.k):
        rec = moments.recover_coefficient(g, args.p, k, g_scale=cfg.g_scale)
        ref = g.c(args.p)
        worst = max(worst, abs(rec - ref))
        rows.append(f"{k},{args.p},{rec:.15g},{ref:.15g},{abs(rec - ref):.3g}")
    _write_outputs(cfg, "recover", "\n".join(rows) + "\n",
                   {"worst_abs_error": worst}, "recover")
    print("\n".join(rows))
    return 0


def cmd_make_newform(cfg: RunConfig, args) -> int:
    forms = eigenforms(args.kw, args.count)
    rec = newform_from_eigenform(forms[args.index])
    write_newform(rec, args.out)
    print(f"wrote {args.out} (weight {args.kw}, {args.count} coefficients)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS defaults: flags may appear before or after the subcommand,
    # and a subparser must not reset what the main parser already consumed
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="key=value config file")
    common.add_argument("--field", default=argparse.SUPPRESS,
                        help="Q | Q_sqrt5 | Q_sqrt2")
    common.add_argument("--outdir", default=argparse.SUPPRESS)
    common.add_argument("--g-scale", dest="g_scale", type=float,
                        default=argparse.SUPPRESS)
    common.add_argument("--contour", type=float, default=argparse.SUPPRESS)
    common.add_argument("--afe-tol", dest="afe_tol", type=float,
                        default=argparse.SUPPRESS)
    common.add_argument("--e-tol", dest="e_tol", type=float,
                        default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="rsmoment", allow_abbrev=False,
                                 parents=[common],
                                 description="moment-identity verification driver")
    sub = ap.add_subparsers(dest="command")

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], allow_abbrev=False, **kw)

    p = add("kloosterman", help="single Kloosterman sum, one CSV row")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--c2", type=int, default=0, help="omega-coordinate of c (degree 2)")

    for alias in ("rhs-nf", "rhs"):
        p = add(alias, help="degree-2 trace formula right-hand side")
        p.add_argument("--k", required=True, help="k1,k2")
        p.add_argument("--nu", type=int, default=1)
        p.add_argument("--xi", type=int, default=1)
        p.add_argument("--cmax", type=int, default=300)
        p.add_argument("--B", type=float, default=50.0)
        p.add_argument("--tol", type=float, default=1e-6)

    p = add("units", help="unit-sum convergence table")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--tmax", type=int, default=20)

    p = add("trace-check", help="omega solve + held-out cross-validation")
    p.add_argument("--k", default="12,16,18,20,22,24,26,28,32,36")

    p = add("afe", help="central values and G-independence report")
    p.add_argument("--g", required=True)
    p.add_argument("--k", default="16,18,20")

    p = add("moment", help="single moment report")
    p.add_argument("--g", required=True)
    p.add_argument("--k", dest="kw", type=int, required=True)
    p.add_argument("--p", type=int, default=1)

    p = add("scan", help="asymptotic weight scan")
    p.add_argument("--g", required=True)
    p.add_argument("--k", default="14:60:2")
    p.add_argument("--p", type=int, default=1)

    p = add("recover", help="coefficient recovery")
    p.add_argument("--g", required=True)
    p.add_argument("--k", default="20,30")
    p.add_argument("--p", type=int, default=2)

    p = add("make-newform", help="write a newform coefficient file")
    p.add_argument("--k", dest="kw", type=int, required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--out", required=True)
    return ap


_COMMANDS = {
    "kloosterman": cmd_kloosterman,
    "rhs-nf": cmd_rhs_nf,
    "rhs": cmd_rhs_nf,
    "units": cmd_units,
    "trace-check": cmd_trace_check,
    "afe": cmd_afe,
    "moment": cmd_moment,
    "scan": cmd_scan,
    "recover": cmd_recover,
    "make-newform": cmd_make_newform,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not getattr(args, "command", None):
        ap.print_usage()
        return 2
    cfg = _apply_overrides(load_config(getattr(args, "config", None)), args)
    np.random.seed(cfg.seed)
    try:
        return _COMMANDS[args.command](cfg, args)
    except UncertifiedError as exc:
        print(f"uncertified result: {exc} (certificate {exc.certificate})",
              file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
