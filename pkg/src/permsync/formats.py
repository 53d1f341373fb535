"""Readers and writers for problem JSON, QUBO text v1 and sparsity bitmaps.

View and variable indices are 1-based on disk.  Permutation maps inside
problem JSON are positional arrays and keep 0-based values.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .encoder import GaugeInfo, QuboProblem
from .errors import ParseError, PermSyncError
from .model import ObservationGraph, Permutation, validate_graph

QUBO_MAGIC = "c permsync-qubo v1"


def graph_to_dict(g: ObservationGraph) -> dict:
    return {
        "n": g.n,
        "m": g.m,
        "edges": [{"i": i + 1, "j": j + 1, "map": list(p.map)} for (i, j), p in g.edges.items() if i < j],
    }


def graph_from_dict(data) -> ObservationGraph:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    for key in ("n", "m", "edges"):
        if key not in data:
            raise ParseError("missing field", where=key)
    n, m = data["n"], data["m"]
    if not isinstance(n, int) or not isinstance(m, int) or n < 1 or m < 1:
        raise ParseError("must be positive integers", where="n/m")
    if not isinstance(data["edges"], list):
        raise ParseError("must be a list", where="edges")
    edges = {}
    for k, e in enumerate(data["edges"]):
        where = f"edges[{k}]"
        if not isinstance(e, dict) or not {"i", "j", "map"} <= e.keys():
            raise ParseError("expected an object with i, j, map", where=where)
        i, j, mp = e["i"], e["j"], e["map"]
        if not isinstance(i, int) or not isinstance(j, int) or not (1 <= i <= m and 1 <= j <= m) or i == j:
            raise ParseError(f"view indices must be distinct integers in 1..{m}", where=where)
        if not isinstance(mp, list) or len(mp) != n or not all(isinstance(c, int) for c in mp):
            raise ParseError(f"map must be a list of {n} integers", where=f"{where}.map")
        try:
            p = Permutation(tuple(mp))
        except PermSyncError as exc:
            raise ParseError(str(exc), where=f"{where}.map") from None
        key = (i - 1, j - 1)
        if key in edges and edges[key] != p:
            raise ParseError("duplicate edge with a different map", where=where)
        edges[key] = p
    return validate_graph(ObservationGraph(n, m, edges))


def export_problem(g: ObservationGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2) + "\n", encoding="utf-8")


def import_problem(path) -> ObservationGraph:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, where=f"line {exc.lineno}") from None
    return graph_from_dict(data)


def _num(x: float) -> str:
    return "%.17g" % x


def qubo_to_text(q: QuboProblem) -> str:
    """Upper-triangle listing; diagonal lines carry ``Q_aa + s_a``, off-diagonal ``2 Q_ab``."""
    lines = [QUBO_MAGIC, f"offset {_num(q.offset)}", f"c nvars {q.nvars}"]
    if q.n is not None and q.m is not None:
        lines.append(f"c layout n={q.n} m={q.m} gauge={0 if q.gauge is None else 1}")
    lines.extend(f"{a + 1} {b + 1} {_num(c)}" for a, b, c in q.triplets())
    return "\n".join(lines) + "\n"


_LAYOUT = re.compile(r"^c layout n=(\d+) m=(\d+) gauge=([01])$")


def qubo_from_text(text: str) -> QuboProblem:
    lines = text.splitlines()
    if not lines or lines[0].strip() != QUBO_MAGIC:
        raise ParseError(f"first line must be '{QUBO_MAGIC}'", where="line 1")
    offset = None
    nvars = None
    layout = None
    coeffs: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        where = f"line {lineno}"
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 3 and parts[1] == "nvars":
                try:
                    nvars = int(parts[2])
                except ValueError:
                    raise ParseError("bad variable count", where=where) from None
            elif (mt := _LAYOUT.match(line)) is not None:
                layout = tuple(int(v) for v in mt.groups())
            continue
        parts = line.split()
        if parts[0] == "offset":
            if len(parts) != 2 or offset is not None:
                raise ParseError("expected a single 'offset <value>' line", where=where)
            try:
                offset = float(parts[1])
            except ValueError:
                raise ParseError("bad offset value", where=where) from None
            continue
        if len(parts) != 3:
            raise ParseError("expected '<a> <b> <coeff>'", where=where)
        try:
            a, b, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("expected '<a> <b> <coeff>'", where=where) from None
        if a < 1 or b < a:
            raise ParseError("indices must satisfy 1 <= a <= b", where=where)
        coeffs.append((a - 1, b - 1, c))
    if offset is None:
        raise ParseError("missing offset line", where="header")
    size = max([b + 1 for _, b, _ in coeffs], default=0)
    if nvars is None:
        nvars = size
    elif size > nvars:
        raise ParseError(f"index {size} exceeds nvars {nvars}", where="body")
    Q = np.zeros((nvars, nvars))
    for a, b, c in coeffs:
        if a == b:
            Q[a, a] += c
        else:
            Q[a, b] += c / 2.0
            Q[b, a] += c / 2.0
    kw = {}
    if layout is not None:
        n, m, gauged = layout
        kw = {"n": n, "m": m, "gauge": GaugeInfo(0, n, m) if gauged else None}
    return QuboProblem(Q, np.zeros(nvars), offset, **kw)


def export_qubo(q: QuboProblem, path) -> None:
    Path(path).write_text(qubo_to_text(q), encoding="utf-8")


def import_qubo(path) -> QuboProblem:
    return qubo_from_text(Path(path).read_text(encoding="utf-8"))


def qubo_to_dict(q: QuboProblem) -> dict:
    """JSON-friendly form of the same coefficients (1-based indices)."""
    out = {"nvars": q.nvars, "offset": q.offset, "terms": [[a + 1, b + 1, c] for a, b, c in q.triplets()]}
    if q.n is not None:
        out["layout"] = {"n": q.n, "m": q.m, "gauge": q.gauge is not None}
    return out


def qubo_from_dict(data: dict) -> QuboProblem:
    try:
        lines = [QUBO_MAGIC, f"offset {_num(float(data['offset']))}", f"c nvars {int(data['nvars'])}"]
        if "layout" in data:
            lay = data["layout"]
            lines.append(f"c layout n={int(lay['n'])} m={int(lay['m'])} gauge={int(bool(lay['gauge']))}")
        lines.extend(f"{int(a)} {int(b)} {_num(float(c))}" for a, b, c in data["terms"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed QUBO object ({exc})") from None
    return qubo_from_text("\n".join(lines))


def write_sparsity_pbm(q: QuboProblem, path) -> None:
    """Plain PBM (P1) of the nonzero pattern of ``Q``; 1 marks a nonzero coefficient."""
    mask = (q.Q != 0).astype(int)
    rows = [" ".join(str(v) for v in row) for row in mask]
    Path(path).write_text(f"P1\n{q.nvars} {q.nvars}\n" + "\n".join(rows) + "\n", encoding="ascii")
