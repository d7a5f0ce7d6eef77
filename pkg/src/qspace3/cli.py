"""Command-line front end: tabulation, verification, spectra and transforms.

Reports are deterministic (no timestamps); identical configuration produces
byte-identical bodies.  Exit codes: 0 all checks pass, 2 verification
failure, 3 domain/configuration error, 4 precision (non-convergence) error.
"""

import argparse
import io
import json
import os
import sys

from .context import QContext
from .errors import DomainError, PrecisionError
from . import qspecial
from .qarith import _qnum
from .basistrans import build_transform, completeness_check
from .relations import default_families, verify_relations, RELATION_GROUPS
from .repspace import t2_block_levels

SCHEMA = "qspace3/1"


def _golden_forms(q):
    two = _qnum(2, q)
    three = _qnum(3, q)
    four = _qnum(4, q)
    five = _qnum(5, q)
    return {
        (0, 0): lambda x: 1.0,
        (1, 0): lambda x: x,
        (2, 0): lambda x: (three * x * x - q**-2) / (q * two),
        (3, 0): lambda x: x * (five * q * q * x * x - three) / (q**5 * two),
        (1, 1): lambda x: 1.0,
        (2, 1): lambda x: x,
        (3, 1): lambda x: (q**4 * five * x * x - 1.0) / (q**5 * four),
    }


def _common(sub):
    sub.add_argument("--q", type=float, default=1.5,
                     help="deformation parameter (> 1)")
    sub.add_argument("--tol", type=float, default=None,
                     help="pass/fail tolerance (verb-specific default)")
    sub.add_argument("--depth", type=int, default=60,
                     help="lattice depth per truncated direction")
    sub.add_argument("--lmax", type=int, default=40,
                     help="largest Casimir label")
    sub.add_argument("--kwidth", type=int, default=60,
                     help="width of the m_k direction")
    sub.add_argument("--format", choices=("json", "csv", "text"),
                     default="json")
    sub.add_argument("--out", default=None, help="output path (default stdout)")


def _build_parser():
    p = argparse.ArgumentParser(
        prog="qspace3",
        description="q-deformed special functions and operator verification "
                    "for the three-dimensional quantum Euclidean space")
    sp = p.add_subparsers(dest="verb", required=True)

    poly = sp.add_parser("poly", help="tabulate the polynomials and their "
                                      "weighted forms")
    poly.add_argument("--l", type=int, required=True)
    poly.add_argument("--m", type=int, required=True)
    poly.add_argument("--x", type=str, default=None,
                      help="comma-separated evaluation points")
    poly.add_argument("--lattice", action="store_true",
                      help="evaluate on the support lattice instead of --x")
    poly.add_argument("--nmin", type=int, default=-10,
                      help="deepest lattice index with --lattice")
    poly.add_argument("--golden", action="store_true",
                      help="compare degree <= 3 values against closed forms")
    _common(poly)

    ver = sp.add_parser("verify", help="run the relation suite")
    ver.add_argument("--relations", default="all",
                     help="all or comma-separated groups: "
                          + ",".join(RELATION_GROUPS))
    _common(ver)

    spect = sp.add_parser("spectrum", help="emit eigenvalue tables")
    spect.add_argument("observable", choices=("x3", "r2", "t3", "t2"))
    spect.add_argument("--M", type=int, default=0)
    spect.add_argument("--z0", type=float, default=1.0)
    spect.add_argument("--sigma", type=int, default=1, choices=(1, -1))
    spect.add_argument("--m", type=int, default=0,
                       help="fixed total weight for the t2 block")
    _common(spect)

    tr = sp.add_parser("transform", help="build a basis-transform table")
    tr.add_argument("--direction", type=int, required=True, choices=(1, 2))
    tr.add_argument("--m", type=int, required=True)
    tr.add_argument("--M", type=int, default=0)
    tr.add_argument("--z0", type=float, default=1.0)
    _common(tr)

    ortho = sp.add_parser("ortho", help="orthonormality defects of the "
                                        "weighted functions")
    ortho.add_argument("--m", type=int, required=True)
    ortho.add_argument("--lspan", type=int, default=6,
                       help="check degrees l, l' in [|m|, |m| + lspan]")
    _common(ortho)

    comp = sp.add_parser("complete", help="completeness defects of the "
                                          "weighted functions")
    comp.add_argument("--m", type=int, required=True)
    _common(comp)
    return p


def _ctx(args):
    precision = os.environ.get("QSPACE3_PRECISION", "double")
    if precision not in ("double", "extended"):
        raise DomainError(
            f"QSPACE3_PRECISION must be double or extended, got {precision!r}")
    return QContext(q=args.q, tol_rel=args.tol if args.tol else 1e-10,
                    precision=precision)


def _emit(args, report, rows_key="rows"):
    body = _render(args.format, report, rows_key)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def _render(fmt, report, rows_key):
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    rows = report.get(rows_key, [])
    if fmt == "csv":
        out = io.StringIO()
        import csv as _csv
        w = _csv.writer(out)
        if rows:
            cols = list(rows[0].keys())
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt_cell(r.get(c)) for c in cols])
        return out.getvalue()
    lines = []
    for k, v in report.items():
        if k == rows_key or isinstance(v, (list, dict)):
            continue
        lines.append(f"{k}: {_fmt_cell(v)}")
    if rows:
        cols = list(rows[0].keys())
        lines.append("\t".join(cols))
        for r in rows:
            lines.append("\t".join(_fmt_cell(r.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def _fmt_cell(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _cmd_poly(args):
    ctx = _ctx(args)
    q = float(ctx.q)
    if args.lattice:
        xs = [s * q**(2 * (n - args.m - 1))
              for n in range(0, args.nmin - 1, -1) for s in (1, -1)]
    elif args.x:
        xs = [float(t) for t in args.x.split(",")]
    else:
        raise DomainError("poly needs --x or --lattice")
    tol = args.tol if args.tol else 1e-12
    golden = _golden_forms(q) if args.golden else None
    if golden is not None and (args.l, args.m) not in golden:
        raise DomainError(
            f"--golden covers degree <= 3 table entries, not "
            f"(l={args.l}, m={args.m})")
    rows = []
    worst = 0.0
    for x in xs:
        P = qspecial.p_lm(args.l, args.m, x, ctx)
        try:
            Pt = qspecial.p_tilde(args.l, args.m, x, ctx)
        except DomainError:
            Pt = None
        row = {"x": float(x), "P": float(P)}
        row["P_tilde"] = None if Pt is None else float(Pt)
        if golden is not None:
            g = float(golden[(args.l, args.m)](x))
            err = abs(float(P) - g) / max(1.0, abs(g))
            worst = max(worst, err)
            row["golden"] = g
            row["golden_rel_err"] = err
        rows.append(row)
    report = {"schema": SCHEMA, "verb": "poly", "q": q, "l": args.l,
              "m": args.m, "rows": rows}
    if golden is not None:
        report["max_golden_rel_err"] = worst
        report["pass"] = bool(worst < tol)
    _emit(args, report)
    if golden is not None and worst >= tol:
        return 2
    return 0


def _cmd_verify(args):
    ctx = _ctx(args)
    groups = "all" if args.relations == "all" \
        else tuple(args.relations.split(","))
    suite = default_families(ctx, n_depth=args.depth, k_width=args.kwidth)
    rep = verify_relations(suite, groups, ctx)
    report = rep.to_dict()
    report["verb"] = "verify"
    report["config"] = {"depth": args.depth, "kwidth": args.kwidth,
                        "groups": list(RELATION_GROUPS) if groups == "all"
                        else list(groups)}
    report["rows"] = report.pop("relations")
    _emit(args, report)
    return 0 if rep.passed else 2


def _cmd_spectrum(args):
    ctx = _ctx(args)
    q = float(ctx.q)
    rows = []
    if args.observable == "x3":
        for k in range(args.depth + 1):
            nu = args.M - k
            rows.append({"nu": nu,
                         "eigenvalue": args.sigma * abs(args.z0) * q**(2 * nu)})
    elif args.observable == "r2":
        for k in range(args.depth + 1):
            nu = args.M - k
            rows.append({"nu": nu,
                         "eigenvalue": q**(4 * args.M + 2) * args.z0**2})
    elif args.observable == "t3":
        lam = ctx.lam
        for mtot in range(-args.depth, args.kwidth + 1):
            rows.append({"m": mtot, "eigenvalue": (1 - q**(-4 * mtot)) / lam})
    else:
        from .repspace import casimir_eigenvalue
        levels = t2_block_levels(args.m, args.depth, ctx,
                                 n_levels=max(1, (args.lmax - abs(args.m)) // 2))
        for l, ev, rel in levels:
            rows.append({"l": l, "eigenvalue": ev,
                         "target": casimir_eigenvalue(l, ctx),
                         "rel_err": rel})
    report = {"schema": SCHEMA, "verb": "spectrum",
              "observable": args.observable, "q": q, "M": args.M,
              "z0": args.z0, "rows": rows}
    _emit(args, report)
    return 0


def _cmd_transform(args):
    ctx = _ctx(args)
    tol = args.tol if args.tol else 1e-6
    table = build_transform(args.direction, args.m, ctx, M=args.M,
                            l_max=args.lmax, depth=args.depth, z0=args.z0)
    summary = table.to_json_dict()
    summary["verb"] = "transform"
    summary["pass"] = bool(table.gram_defect < tol
                           and table.congruence_defect < tol)
    if args.out:
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        with open(args.out + ".csv", "w", encoding="utf-8", newline="") as fh:
            table.write_csv(fh)
        sys.stdout.write(json.dumps(
            {"gram_defect": table.gram_defect,
             "congruence_defect": table.congruence_defect,
             "files": [args.out + ".json", args.out + ".csv"]},
            sort_keys=True) + "\n")
    else:
        sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return 0 if summary["pass"] else 2


def _cmd_ortho(args):
    ctx = _ctx(args)
    tol = args.tol if args.tol else 1e-8
    am = abs(args.m)
    if args.m < 0:
        raise DomainError("orthonormality tables are indexed by m >= 0")
    ls = list(range(am, am + args.lspan + 1))
    worst = 0.0
    rows = []
    for l in ls:
        for lp in ls:
            s = float(qspecial.orthonormality_sum(l, lp, args.m, ctx,
                                                  n_min=-args.depth))
            d = abs(s - (1.0 if l == lp else 0.0))
            worst = max(worst, d)
            rows.append({"l": l, "lp": lp, "sum": s, "defect": d})
    report = {"schema": SCHEMA, "verb": "ortho", "q": float(ctx.q),
              "m": args.m, "n_min": -args.depth, "max_defect": worst,
              "pass": bool(worst < tol), "rows": rows}
    _emit(args, report)
    return 0 if worst < tol else 2


def _cmd_complete(args):
    ctx = _ctx(args)
    tol = args.tol if args.tol else 1e-5
    rep = completeness_check(args.m, ctx, l_max=args.lmax)
    rep["verb"] = "complete"
    rep["pass"] = bool(rep["max_defect"] < tol)
    rep["rows"] = rep.pop("samples")
    _emit(args, rep)
    return 0 if rep["pass"] else 2


_DISPATCH = {
    "poly": _cmd_poly,
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
    "transform": _cmd_transform,
    "ortho": _cmd_ortho,
    "complete": _cmd_complete,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 3
    try:
        return _DISPATCH[args.verb](args)
    except DomainError as e:
        sys.stderr.write(f"domain error: {e}\n")
        return 3
    except PrecisionError as e:
        sys.stderr.write(f"precision error: {e}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
