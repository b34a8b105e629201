"""Command-line front door: ``wcmatrix <command> SPEC [flags]``.

Exit codes: 0 for success or a reported finding, 2 for input errors,
3 for numerical or invariant failures.
"""
import json
import os
import sys
from fractions import Fraction

import click
import numpy as np

from . import almost_periodic as ap
from .covering import compactness_profile
from .envelopes import extend_function
from .expr import ExpressionError
from .fubini import double_limit_gap, remark2_gallery
from .semigroup import (SemigroupDefectError, extend_operator, renormalize,
                        verify_extension, weak_identity_check)
from .specs import (SpecError, dump_json, function_from_spec, kernel_family_from_spec,
                    kernel_from_spec, load_json, parse_list, parse_sequence, parse_times,
                    semigroup_from_spec, write_csv)

EXIT_INPUT = 2
EXIT_NUMERIC = 3
DEFAULT_SEED = 0


class NumericalFailure(Exception):
    """A violated numerical precondition or invariant (exit 3)."""


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _run(fn):
    """Map library exceptions onto the exit-code contract."""
    try:
        fn()
    except SpecError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except SemigroupDefectError as exc:
        click.echo(f"invariant failure (semigroup defect): {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except NumericalFailure as exc:
        click.echo(f"invariant failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


def _parse_levels(text):
    levels = parse_list(text, "--levels", cast=int)
    if levels is not None and any(n < 1 for n in levels):
        raise SpecError("--levels", "levels must be positive")
    return levels


def _parse_eps(text):
    eps = parse_list(text, "--eps")
    if any(e < 0 for e in eps):
        raise SpecError("--eps", "epsilons must be nonnegative")
    eps = sorted(set(eps), reverse=True)
    return eps


def _profile_rows(profiles, prefix=()):
    """CSV rows (epsilon, level, row_count, col_count, classification)."""
    ref = next(p for p in profiles.values() if p is not None)
    rows = []
    label = _joint_label(profiles)
    for i, eps in enumerate(ref.epsilons):
        for j, level in enumerate(ref.levels):
            rc = profiles.get("rows")
            cc = profiles.get("cols")
            rows.append(list(prefix) + [eps, _level(level),
                                        "" if rc is None else int(rc.counts[i, j]),
                                        "" if cc is None else int(cc.counts[i, j]),
                                        label])
    return rows


def _joint_label(profiles):
    labels = {p.classification for p in profiles.values() if p is not None}
    if len(labels) == 1:
        return labels.pop()
    return ";".join(f"{k}={p.classification}" for k, p in profiles.items() if p is not None)


GROUPING_LABELS = {"L|IJ": "z|(x,y)", "J|IL": "y|(x,z)", "I|JL": "x|(y,z)"}


def _level(v):
    return int(v) if float(v).is_integer() else v


PROFILE_HEADER = ["epsilon", "level", "row_count", "col_count", "classification"]


@click.group()
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int,
              help="Seed for every randomized step.")
@click.pass_context
def main(ctx, seed):
    """Compactness, double-limit, envelope and semigroup-extension diagnostics."""
    ctx.obj = {"seed": seed}


@main.command()
@click.argument("spec", type=click.Path())
@click.option("--eps", default="0.5,0.1", show_default=True, help="Comma-separated radii.")
@click.option("--levels", default=None, help="Grid sizes overriding the grid n in the kernel file.")
@click.option("--orientation", type=click.Choice(["rows", "cols", "both"]), default="both",
              show_default=True)
@click.option("--out", type=click.Path(), default=None)
def covering(spec, eps, levels, orientation, out):
    """Covering-number profile of a kernel across refinement levels."""
    def body():
        data = load_json(spec)
        epsilons = _parse_eps(eps)
        lv = _parse_levels(levels)
        kernels = kernel_family_from_spec(data, lv) if lv else [kernel_from_spec(data)]
        orients = ["rows", "cols"] if orientation == "both" else [orientation]
        profiles = {o: None for o in ("rows", "cols")}
        for o in orients:
            profiles[o] = compactness_profile(kernels, epsilons, o)
        profiles = {k: v for k, v in profiles.items() if v is not None}
        trailer = [f"{o}: {p.classification}" for o, p in profiles.items()]
        trailer.append(f"classification: {_joint_label(profiles)}")
        _emit(write_csv(PROFILE_HEADER, _profile_rows(profiles), trailer), out)
    _run(body)


@main.command("double-limit")
@click.argument("spec", type=click.Path())
@click.option("--rows", "rows_seq", default=None, help="Row id sequence: 'a,b,c' or 'start:stop[:step]'.")
@click.option("--cols", "cols_seq", default=None, help="Column id sequence.")
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--out", type=click.Path(), default=None)
def double_limit(spec, rows_seq, cols_seq, tol, out):
    """Iterated limits of a kernel along row and column sequences."""
    def body():
        k = kernel_from_spec(load_json(spec))
        r = list(k.rows.ids) if rows_seq is None else parse_sequence(rows_seq, k.rows, "--rows")
        c = list(k.cols.ids) if cols_seq is None else parse_sequence(cols_seq, k.cols, "--cols")
        if len(r) < 8 or len(c) < 8:
            raise SpecError("--rows/--cols", "sequences need at least 8 entries")
        rep = double_limit_gap(k, r, c, tol)
        _emit(dump_json({"report": "double_limit", "tol": tol, **rep.to_dict()}), out)
    _run(body)


ENVELOPE_HEADER = ["t", "upper", "lower", "gap", "converged", "value_or_flag"]


@main.command()
@click.argument("spec", type=click.Path())
@click.option("--targets", required=True, help="Comma-separated points; fractions like 1/3 allowed.")
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--out", type=click.Path(), default=None)
def envelope(spec, targets, tol, out):
    """Upper/lower envelopes and continuous extension at target points."""
    def body():
        f = function_from_spec(load_json(spec))
        ts = [float(Fraction(v)) for v in parse_list(targets, "--targets", cast=Fraction)]
        for t in ts:
            if not f.in_closure(t):
                raise SpecError("--targets", f"{t} lies outside the domain closure")
        rows = []
        for p in extend_function(f, ts, tol):
            ev = p.envelope
            if f.contains(p.t):
                shown = float(f.value_at(p.t))
            else:
                shown = p.value if p.ok else p.flag
            rows.append([p.t, ev.upper, ev.lower, ev.gap, ev.converged, shown])
        _emit(write_csv(ENVELOPE_HEADER, rows), out)
    _run(body)


@main.command("extend-semigroup")
@click.argument("spec", type=click.Path())
@click.option("--times", required=True, help="Comma-separated times; fractions like 1/3 allowed.")
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--verify-pairs", default=20, show_default=True, type=int)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def extend_semigroup(ctx, spec, times, tol, verify_pairs, out):
    """Extend a dyadically sampled semigroup to the requested times."""
    seed = ctx.obj["seed"]

    def body():
        g = semigroup_from_spec(load_json(spec), seed=seed)
        ts = parse_times(times)
        for t in ts:
            if not 0 < t <= g.t_max:
                raise SpecError("--times", f"{t} is outside (0, {g.t_max}]")
        r = renormalize(g, seed=seed, tol=tol)
        if not r.contractive:
            raise NumericalFailure(f"renormalized operator norms exceed 1 + {tol} "
                                   f"(max {r.op_norms.max():.6g})")
        idc = weak_identity_check(g, tol=tol)
        if not idc.passed:
            raise NumericalFailure("weak identity invariant: rho(T_s x) does not tend to rho(x) "
                                   f"as s -> 0 (worst deviation {idc.worst_deviation:.3e})")
        g._identity_check = idc
        results = [extend_operator(g, t, tol) for t in ts]
        verification = None
        if verify_pairs > 0 and len(results) >= 2 and all(x.ok for x in results):
            verification = verify_extension(g, results, pair_budget=verify_pairs, tol=tol)
        payload = {
            "report": "semigroup_extension",
            "dimension": g.dimension,
            "t_max": str(g.t_max),
            "depth": g.depth,
            "seed": seed,
            "construction_defect": g.defect,
            "renormalized_max_norm": float(r.op_norms.max()),
            "weak_identity": {"passed": idc.passed, "worst_deviation": idc.worst_deviation},
            "extensions": [x.to_dict() for x in results],
            "verification": verification,
            "ok": all(x.ok for x in results),
        }
        _emit(dump_json(payload), out)
    _run(body)


@main.command("ap")
@click.argument("function")
@click.option("--group", "group_op", type=click.Choice(sorted(ap.GROUP_OPS)), default="add",
              show_default=True)
@click.option("--windows", default="8,16,32", show_default=True)
@click.option("--eps", default="0.5", show_default=True)
@click.option("--density", default=8, show_default=True, type=int)
@click.option("--triple/--no-triple", default=False, show_default=True,
              help="Also profile the three groupings of f(x.y.z).")
@click.option("--triple-density", default=4, show_default=True, type=int)
@click.option("--out", type=click.Path(), default=None)
def ap_command(function, group_op, windows, eps, density, triple, triple_density, out):
    """Almost-periodicity profile of f(x . y) over growing windows."""
    def body():
        ws = parse_list(windows, "--windows")
        epsilons = _parse_eps(eps)
        try:
            prof = ap.ap_profile(function, ws, density, epsilons, group_op)
        except ExpressionError as exc:
            raise SpecError("function", str(exc)) from None
        rows = _profile_rows({"rows": prof.profile, "cols": None}, prefix=["x|y"])
        rows = [r[:-1] + [prof.classification] for r in rows]
        trailer = [f"x|y: {prof.classification}"]
        if triple:
            sets = [(s, s, s) for s in (ap.window_sampling(w, triple_density, group_op) for w in ws)]
            for name, p in ap.triple_grouping_check(function, sets, group_op, epsilons, ws).items():
                label = GROUPING_LABELS[name]
                part = _profile_rows({"rows": p.profile, "cols": None}, prefix=[label])
                rows += [r[:-1] + [p.classification] for r in part]
                trailer.append(f"{label}: {p.classification}")
        _emit(write_csv(["grouping"] + PROFILE_HEADER, rows, trailer), out)
    _run(body)


def _gallery_remark2(dim, seed):
    kernels, witness, others = remark2_gallery(dim, seed=seed)
    files = {}
    for name, k in kernels.items():
        slug = name.replace("(", "").replace(")", "").replace(",", "").replace("|", "_")
        files[f"remark2_{slug}.json"] = {
            "rows": {"points": k.rows.coords.tolist(), "ids": [_id_str(i) for i in k.rows.ids]},
            "cols": {"points": k.cols.coords.tolist(), "ids": [_id_str(i) for i in k.cols.ids]},
            "matrix": k.values.tolist(),
            "bound": 1.0,
        }
    expected = {
        "fixture": "remark2",
        "dim": dim,
        "witness": {"grouping": "(x,y)|A", **witness.to_dict()},
        "others": {k: v.to_dict() for k, v in others.items()},
    }
    return files, expected


def _id_str(i):
    return "/".join(i) if isinstance(i, tuple) else str(i)


def _gallery_indicator(dim, seed):
    n = max(dim, 8)
    spec = {"rows": {"grid": {"from": 0, "to": 1, "n": n}},
            "cols": {"grid": {"from": 0, "to": 1, "n": n}},
            "expr": "indicator(y <= x)", "bound": 1}
    k = kernel_from_spec(spec)
    rep = double_limit_gap(k, list(k.rows.ids), list(k.cols.ids))
    return {"indicator.json": spec}, {"fixture": "indicator", "expected_gap": 1.0, **rep.to_dict()}


def _gallery_sin_inv(dim, seed):
    spec = {"expr": "sin(1/s)", "domain": {"from": 0, "to": 1, "closed": [False, True]},
            "depth": 16, "bound": 1}
    return {"sin_inv.json": spec}, {"fixture": "sin-inv", "target": 0.0,
                                    "upper": 1.0, "lower": -1.0, "gap": 2.0,
                                    "flag": "gap"}


GALLERY = {"remark2": _gallery_remark2, "indicator": _gallery_indicator, "sin-inv": _gallery_sin_inv}


@main.command()
@click.option("--name", type=click.Choice(sorted(GALLERY)), required=True)
@click.option("--dim", default=8, show_default=True, type=int)
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Directory receiving the fixture's JSON files.")
@click.pass_context
def gallery(ctx, name, dim, out):
    """Write a named fixture's spec files and its expected results."""
    def body():
        if dim < 4:
            raise SpecError("--dim", "must be at least 4")
        files, expected = GALLERY[name](dim, ctx.obj["seed"])
        os.makedirs(out, exist_ok=True)
        expected_name = f"{name.replace('-', '_')}_expected.json"
        for fname, content in files.items():
            with open(os.path.join(out, fname), "w") as fh:
                json.dump(content, fh, indent=2)
                fh.write("\n")
        with open(os.path.join(out, expected_name), "w") as fh:
            fh.write(dump_json(expected))
        for fname in list(files) + [expected_name]:
            click.echo(os.path.join(out, fname))
    _run(body)


if __name__ == "__main__":
    main()
