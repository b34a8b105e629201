"""JSON spec files and CSV/JSON report emission."""
import csv
import io
import json
import math
from fractions import Fraction

import numpy as np

from .envelopes import GridFunction
from .expr import ExpressionError
from .kernel import IndexSampling, build_kernel
from .semigroup import SampledSemigroup, as_time

__all__ = [
    "SpecError",
    "SCHEMA_VERSION",
    "load_json",
    "parse_sampling",
    "kernel_from_spec",
    "kernel_family_from_spec",
    "function_from_spec",
    "semigroup_from_spec",
    "parse_list",
    "parse_times",
    "parse_sequence",
    "write_csv",
    "dump_json",
]

SCHEMA_VERSION = 1


class SpecError(ValueError):
    """Malformed spec file or flag value; carries the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def load_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(str(path), f"cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(str(path), f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _number(value, field):
    try:
        if isinstance(value, str):
            return float(Fraction(value))
        out = float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise SpecError(field, f"expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise SpecError(field, "must be finite")
    return out


def parse_sampling(node, field, n_override=None):
    if isinstance(node, list):
        node = {"points": node}
    if not isinstance(node, dict):
        raise SpecError(field, "expected a grid object or a point list")
    if "grid" in node:
        g = node["grid"]
        if not isinstance(g, dict):
            raise SpecError(f"{field}.grid", "expected an object with from/to/n")
        for key in ("from", "to", "n"):
            if key not in g:
                raise SpecError(f"{field}.grid.{key}", "missing")
        a = _number(g["from"], f"{field}.grid.from")
        b = _number(g["to"], f"{field}.grid.to")
        n = g["n"] if n_override is None else n_override
        if not isinstance(n, int) or n < 1:
            raise SpecError(f"{field}.grid.n", f"expected a positive integer, got {n!r}")
        return IndexSampling.grid(a, b, n, level=int(node.get("level", 0)),
                                  metric=node.get("metric", "sup"))
    if "points" in node:
        if n_override is not None:
            raise SpecError(field, "--levels needs grid samplings")
        pts = node["points"]
        if not isinstance(pts, list) or not pts:
            raise SpecError(f"{field}.points", "expected a nonempty list")
        try:
            coords = np.array([[_number(c, f"{field}.points") for c in (p if isinstance(p, list) else [p])]
                               for p in pts])
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"{field}.points", "points must share one dimension") from None
        ids = node.get("ids")
        if ids is not None and len(ids) != len(pts):
            raise SpecError(f"{field}.ids", "one id per point")
        try:
            return IndexSampling.from_points(coords, ids=ids, level=int(node.get("level", 0)),
                                             metric=node.get("metric", "sup"))
        except ValueError as exc:
            raise SpecError(field, str(exc)) from None
    raise SpecError(field, "expected 'grid' or 'points'")


def kernel_from_spec(spec, n_override=None):
    if not isinstance(spec, dict):
        raise SpecError("<root>", "kernel spec must be a JSON object")
    for key in ("rows", "cols"):
        if key not in spec:
            raise SpecError(key, "missing")
    rows = parse_sampling(spec["rows"], "rows", n_override)
    cols = parse_sampling(spec["cols"], "cols", n_override)
    if ("expr" in spec) == ("matrix" in spec):
        raise SpecError("expr", "give exactly one of 'expr' or 'matrix'")
    bound = spec.get("bound")
    if bound is not None:
        bound = _number(bound, "bound")
    source = spec["expr"] if "expr" in spec else spec["matrix"]
    if "expr" in spec and not isinstance(source, str):
        raise SpecError("expr", "expected a string")
    try:
        return build_kernel(source, rows, cols, bound)
    except ExpressionError as exc:
        raise SpecError("expr", str(exc)) from None
    except ValueError as exc:
        raise SpecError("matrix" if "matrix" in spec else "expr", str(exc)) from None


def kernel_family_from_spec(spec, levels):
    return [kernel_from_spec(spec, n) for n in levels]


def function_from_spec(spec):
    """Envelope function spec: ``expr`` in s, ``domain``, ``depth``, optional ``exclude``/``bound``."""
    if not isinstance(spec, dict):
        raise SpecError("<root>", "function spec must be a JSON object")
    if "expr" not in spec or not isinstance(spec["expr"], str):
        raise SpecError("expr", "missing or not a string")
    dom = spec.get("domain", {"from": 0, "to": 1})
    if not isinstance(dom, dict):
        raise SpecError("domain", "expected an object with from/to")
    a = _number(dom.get("from", 0), "domain.from")
    b = _number(dom.get("to", 1), "domain.to")
    closed = dom.get("closed", [False, True])
    if not (isinstance(closed, list) and len(closed) == 2):
        raise SpecError("domain.closed", "expected [bool, bool]")
    depth = spec.get("depth", 16)
    if not isinstance(depth, int) or not 0 <= depth <= 40:
        raise SpecError("depth", "expected an integer in [0, 40]")
    exclude = [_number(e, "exclude") for e in spec.get("exclude", [])]
    bound = spec.get("bound")
    try:
        return GridFunction.dyadic(spec["expr"], (a, b), depth, closed=tuple(bool(c) for c in closed),
                                   exclude=exclude, bound=None if bound is None else _number(bound, "bound"))
    except ExpressionError as exc:
        raise SpecError("expr", str(exc)) from None
    except ValueError as exc:
        raise SpecError("expr", str(exc)) from None


def _perturbed(provider, perturb, d):
    items = []
    for k, p in enumerate(perturb):
        field = f"perturb[{k}]"
        if not isinstance(p, dict) or not {"time", "entry", "delta"} <= set(p):
            raise SpecError(field, "expected {time, entry, delta}")
        t = float(as_time(str(p["time"])))
        i, j = p["entry"]
        if not (0 <= i < d and 0 <= j < d):
            raise SpecError(f"{field}.entry", "index out of range")
        items.append((t, int(i), int(j), _number(p["delta"], f"{field}.delta")))

    def wrapped(s):
        out = np.array(provider(s), dtype=float)
        s = np.asarray(s, dtype=float)
        for t, i, j, delta in items:
            out[s == t, i, j] += delta
        return out
    return wrapped


def semigroup_from_spec(spec, seed=0):
    """Semigroup spec: ``dimension``, ``t_max``, ``depth`` and ``generator`` or ``entries_expr``.

    Optional ``norm`` ("sup" or "euclidean") and ``perturb`` (list of
    ``{time, entry, delta}`` edits applied to the provider).
    """
    if not isinstance(spec, dict):
        raise SpecError("<root>", "semigroup spec must be a JSON object")
    if "dimension" not in spec:
        raise SpecError("dimension", "missing")
    d = spec["dimension"]
    if not isinstance(d, int) or d < 1:
        raise SpecError("dimension", "expected a positive integer")
    try:
        t_max = as_time(str(spec.get("t_max", 2)))
    except (ValueError, ZeroDivisionError):
        raise SpecError("t_max", "expected a number") from None
    depth = spec.get("depth", 14)
    if not isinstance(depth, int) or not 1 <= depth <= 24:
        raise SpecError("depth", "expected an integer in [1, 24]")
    norm = spec.get("norm", "sup")
    if norm not in ("sup", "euclidean"):
        raise SpecError("norm", "expected 'sup' or 'euclidean'")
    if ("generator" in spec) == ("entries_expr" in spec):
        raise SpecError("generator", "give exactly one of 'generator' or 'entries_expr'")
    if "generator" in spec:
        a = np.array(spec["generator"], dtype=float) if _is_matrix(spec["generator"], d) else None
        if a is None:
            raise SpecError("generator", f"expected a {d}x{d} numeric matrix")
        from .expm import expm_times
        provider = lambda s: expm_times(a, s)  # noqa: E731
    else:
        entries = spec["entries_expr"]
        if not (isinstance(entries, list) and len(entries) == d
                and all(isinstance(r, list) and len(r) == d for r in entries)):
            raise SpecError("entries_expr", f"expected a {d}x{d} list of expressions")
        try:
            provider = SampledSemigroup.from_entries(entries, t_max, depth).provider
        except ExpressionError as exc:
            raise SpecError("entries_expr", str(exc)) from None
    if spec.get("perturb"):
        provider = _perturbed(provider, spec["perturb"], d)
    if (t_max * 2 ** depth).denominator != 1:
        raise SpecError("t_max", "must be a multiple of 2**-depth")
    return SampledSemigroup(provider, d, t_max, depth, norm_kind=norm, seed=seed)


def _is_matrix(node, d):
    try:
        a = np.array(node, dtype=float)
    except (TypeError, ValueError):
        return False
    return a.shape == (d, d) and np.all(np.isfinite(a))


def parse_list(text, name, cast=float):
    if text is None:
        return None
    try:
        out = [cast(v.strip()) for v in str(text).split(",") if v.strip()]
    except (ValueError, ZeroDivisionError):
        raise SpecError(name, f"cannot parse list {text!r}") from None
    if not out:
        raise SpecError(name, "empty list")
    return out


def parse_times(text, name="--times"):
    return parse_list(text, name, cast=as_time)


def parse_sequence(text, sampling, name):
    """Id sequence from ``"0,1,2"``, a range ``"a:b[:step]"`` or id strings."""
    text = str(text).strip()
    if ":" in text and "," not in text:
        try:
            parts = [int(p) for p in text.split(":")]
        except ValueError:
            raise SpecError(name, f"bad range {text!r}") from None
        raw = list(range(*parts))
    else:
        raw = [p.strip() for p in text.split(",") if p.strip()]
    out = []
    for item in raw:
        candidates = [item]
        if isinstance(item, str):
            try:
                candidates.insert(0, int(item))
            except ValueError:
                pass
        for c in candidates:
            try:
                sampling.index(c)
            except KeyError:
                continue
            out.append(c)
            break
        else:
            raise SpecError(name, f"unknown id {item!r}")
    return out


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(header, rows, trailer=()):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, np.generic):
        return _clean(o.item())
    return o


def dump_json(payload):
    body = {"schema_version": SCHEMA_VERSION}
    body.update(payload)
    return json.dumps(_clean(body), indent=2, default=_default) + "\n"
