"""JSON instances and solutions.

Instance layout::

    {"blocks": [{"nx": 1, "nz": 1,
                 "bounds_x": [[0, 2]], "bounds_z": [[0, 1]],
                 "ineqs": [{"coeffs": [1], "rhs": 1.5}],
                 "terms": [{"kind": "power", "q": [1, -1], "r": 0, "p": 2, "w": 1},
                           {"kind": "affine", "a": [0, 1], "c": 0},
                           {"kind": "abs", "q": [1, 0], "r": 0.5, "w": 1}]}],
     "coupling": {"triplets": [[0, 0, 1.0]], "rhs": [1.0]},
     "coupling_z": {"triplets": [[0, 0, 2.0]]},
     "penalty": 10000.0}

``coupling_z`` (optional) holds integer entries of the coupling rows; they are
moved onto continuous copies with an absolute-value penalty on load.
"""
from __future__ import annotations

import json
import json.decoder
import json.scanner
from pathlib import Path

import numpy as np

from .model import (
    DEFAULT_PENALTY,
    AbsL1,
    Affine,
    BlockSpec,
    CouplingConstraint,
    Power,
    StructuredMicp,
    reformulate_integer_coupling,
    validate,
)


class InstanceError(ValueError):
    """Malformed instance; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        self.detail = message
        where = f"{source or '<instance>'}:{line}: " if line else f"{source or '<instance>'}: "
        super().__init__(where + message)


class _Obj(dict):
    line = None


class _Arr(list):
    line = None


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


class _LocatingDecoder(json.JSONDecoder):
    """Decoder whose objects and arrays remember the line they start on."""

    def __init__(self):
        super().__init__()
        base_obj, base_arr = self.parse_object, self.parse_array

        def parse_object(s_and_end, *args):
            s, end = s_and_end
            value, stop = base_obj(s_and_end, *args)
            out = _Obj(value)
            out.line = _line_of(s, end - 1)
            return out, stop

        def parse_array(s_and_end, scan_once):
            s, end = s_and_end
            value, stop = base_arr(s_and_end, scan_once)
            out = _Arr(value)
            out.line = _line_of(s, end - 1)
            return out, stop

        self.parse_object = parse_object
        self.parse_array = parse_array
        self.scan_once = json.scanner.py_make_scanner(self)


def _need(obj, key, kind, line_hint=None):
    if not isinstance(obj, dict) or key not in obj:
        raise InstanceError(f"missing field {key!r}", getattr(obj, "line", line_hint))
    val = obj[key]
    if kind is list and not isinstance(val, list):
        raise InstanceError(f"field {key!r} must be a list", getattr(obj, "line", line_hint))
    return val


def _vec(obj, key, size=None):
    val = _need(obj, key, list)
    try:
        arr = np.array(val, dtype=float).ravel()
    except (TypeError, ValueError):
        raise InstanceError(f"field {key!r} must hold numbers", getattr(val, "line", obj.line)) from None
    if size is not None and arr.size != size:
        raise InstanceError(f"field {key!r} needs {size} entries, got {arr.size}", getattr(val, "line", obj.line))
    return arr


def _num(obj, key, default=None):
    if key not in obj:
        if default is None:
            raise InstanceError(f"missing field {key!r}", obj.line)
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceError(f"field {key!r} must be a number", obj.line)
    return float(v)


def _bounds(obj, key, n):
    pairs = _need(obj, key, list)
    if len(pairs) != n:
        raise InstanceError(f"{key} needs {n} [lo, hi] pairs, got {len(pairs)}", getattr(pairs, "line", obj.line))
    lo, hi = np.zeros(n), np.zeros(n)
    for k, pr in enumerate(pairs):
        if not isinstance(pr, list) or len(pr) != 2:
            raise InstanceError(f"{key}[{k}] must be [lo, hi]", getattr(pr, "line", obj.line))
        lo[k], hi[k] = _as_bound(pr[0]), _as_bound(pr[1])
    return lo, hi


def _as_bound(v) -> float:
    if v is None:
        return np.inf
    if isinstance(v, str) and v.lower() in ("inf", "+inf", "-inf"):
        return float(v)
    return float(v)


def _term(obj, size):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "affine":
        return Affine(_vec(obj, "a", size), _num(obj, "c", 0.0))
    if kind == "power":
        p = _num(obj, "p", 2.0)
        if p != int(p) or int(p) % 2:
            raise InstanceError(f"power exponent must be even, got {p:g}", obj.line)
        w = _num(obj, "w", 1.0)
        if w < 0:
            raise InstanceError("term weight must be nonnegative", obj.line)
        return Power(_vec(obj, "q", size), _num(obj, "r", 0.0), int(p), w)
    if kind == "abs":
        w = _num(obj, "w", 1.0)
        if w < 0:
            raise InstanceError("term weight must be nonnegative", obj.line)
        return AbsL1(_vec(obj, "q", size), _num(obj, "r", 0.0), w)
    raise InstanceError(f"unknown term kind {kind!r}", getattr(obj, "line", None))


def _block(obj):
    if not isinstance(obj, dict):
        raise InstanceError("block must be an object")
    nx, nz = int(_num(obj, "nx")), int(_num(obj, "nz"))
    lbx, ubx = _bounds(obj, "bounds_x", nx)
    lbz, ubz = _bounds(obj, "bounds_z", nz)
    ineqs = obj.get("ineqs", [])
    C = np.zeros((len(ineqs), nx))
    d = np.zeros(len(ineqs))
    for k, row in enumerate(ineqs):
        C[k] = _vec(row, "coeffs", nx)
        d[k] = _num(row, "rhs")
    terms = tuple(_term(t, nx + nz) for t in _need(obj, "terms", list))
    return BlockSpec(nx, nz, lbx, ubx, lbz, ubz, C, d, terms)


def _triplets(obj, key="triplets"):
    out = []
    for k, t in enumerate(_need(obj, key, list)):
        if not isinstance(t, list) or len(t) != 3:
            raise InstanceError(f"{key}[{k}] must be [row, col, value]", getattr(t, "line", obj.line))
        out.append((int(t[0]), int(t[1]), float(t[2])))
    return out


def problem_from_dict(data) -> StructuredMicp:
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object", getattr(data, "line", 1))
    raw_blocks = _need(data, "blocks", list)
    if not raw_blocks:
        raise InstanceError("instance needs at least one block", getattr(raw_blocks, "line", None))
    blocks = []
    for k, b in enumerate(raw_blocks):
        try:
            blocks.append(_block(b))
        except InstanceError:
            raise
        except ValueError as exc:
            raise InstanceError(f"block {k}: {exc}", getattr(b, "line", None)) from None
    cp = data.get("coupling")
    if cp is None:
        coupling = CouplingConstraint.empty()
    else:
        try:
            coupling = CouplingConstraint.from_triplets(_triplets(cp), _vec(cp, "rhs"))
        except InstanceError:
            raise
        except ValueError as exc:
            raise InstanceError(f"coupling: {exc}", getattr(cp, "line", None)) from None
    try:
        problem = StructuredMicp(tuple(blocks), coupling)
    except ValueError as exc:
        raise InstanceError(str(exc), getattr(cp, "line", None)) from None
    cz = data.get("coupling_z")
    if cz is not None:
        try:
            problem = reformulate_integer_coupling(problem, _triplets(cz), _num(data, "penalty", DEFAULT_PENALTY))
        except ValueError as exc:
            raise InstanceError(f"coupling_z: {exc}", getattr(cz, "line", None)) from None
    return problem


def _bound_out(v: float):
    return float(v) if np.isfinite(v) else ("inf" if v > 0 else "-inf")


def _term_dict(t) -> dict:
    if isinstance(t, Affine):
        return {"kind": "affine", "a": t.a.tolist(), "c": t.c}
    if isinstance(t, Power):
        return {"kind": "power", "q": t.q.tolist(), "r": t.r, "p": t.p, "w": t.w}
    return {"kind": "abs", "q": t.q.tolist(), "r": t.r, "w": t.w}


def problem_to_dict(problem: StructuredMicp) -> dict:
    blocks = []
    for b in problem.blocks:
        blocks.append({
            "nx": b.nx,
            "nz": b.nz,
            "bounds_x": [[_bound_out(lo), _bound_out(hi)] for lo, hi in zip(b.lb_x, b.ub_x)],
            "bounds_z": [[float(lo), float(hi)] for lo, hi in zip(b.lb_z, b.ub_z)],
            "ineqs": [{"coeffs": row.tolist(), "rhs": float(r)} for row, r in zip(b.C, b.d)],
            "terms": [_term_dict(t) for t in b.terms],
        })
    cp = problem.coupling
    return {
        "blocks": blocks,
        "coupling": {"triplets": [[r, c, v] for r, c, v in cp.triplets()], "rhs": cp.rhs.tolist()},
    }


def loads_problem(text: str, source: str | None = None) -> StructuredMicp:
    try:
        data = _LocatingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(exc.msg, exc.lineno, source) from None
    try:
        return problem_from_dict(data)
    except InstanceError as exc:
        raise InstanceError(exc.detail, exc.line, source) from None


def load_problem(path) -> StructuredMicp:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"cannot read instance: {exc.strerror}", None, str(path)) from None
    return loads_problem(text, str(path))


def dumps_problem(problem: StructuredMicp) -> str:
    return json.dumps(problem_to_dict(problem), indent=1)


def save_problem(problem: StructuredMicp, path) -> None:
    Path(path).write_text(dumps_problem(problem) + "\n", encoding="utf-8")


def block_lines(text: str) -> list[int | None]:
    """Source line of every block object, for anchoring validation messages."""
    try:
        data = _LocatingDecoder().decode(text)
        return [getattr(b, "line", None) for b in data.get("blocks", [])]
    except (json.JSONDecodeError, AttributeError):
        return []


def validation_messages(problem: StructuredMicp, text: str | None = None, source: str | None = None) -> list[str]:
    report = validate(problem)
    lines = block_lines(text) if text is not None else []
    out = []
    for chk in report.failures:
        line = lines[chk.block] if chk.block is not None and chk.block < len(lines) else None
        where = f"{source or '<instance>'}:{line}: " if line else f"{source or '<instance>'}: "
        out.append(f"{where}block {chk.block}: {chk.message or chk.name}")
    return out


def solution_dict(result, wall_ms: float) -> dict:
    return {
        "value": None if result.x is None else float(result.value),
        "x": None if result.x is None else np.asarray(result.x, dtype=float).tolist(),
        "z": None if result.z is None else [int(round(v)) for v in result.z],
        "status": result.status.value,
        "iters": int(result.iterations),
        "wall_ms": float(wall_ms),
    }
