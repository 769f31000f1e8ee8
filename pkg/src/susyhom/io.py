"""File formats: graph edge lists, point-cloud CSV, Pauli sums, serialised complexes."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .complex import CochainComplex
from .graph_complex import Graph, PointCloud
from .operators import operator_to_text, parse_coefficient
from .reduction import PauliHamiltonian


class InputError(ValueError):
    """Malformed input file; the message names the offending line."""


def _read(src: Union[str, Path]) -> tuple[str, str]:
    p = Path(src)
    try:
        return p.read_text(), str(p)
    except OSError as exc:
        raise InputError(f"cannot read {src}: {exc.strerror}") from None


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_graph(text: str, name: str = "<graph>") -> Graph:
    """First data line ``n``; then one ``u v`` pair per line (0-indexed)."""
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise InputError(f"{name}:{lineno}: expected integers, got {line!r}") from None
        if n is None:
            if len(nums) != 1 or nums[0] < 0:
                raise InputError(f"{name}:{lineno}: first line must be the vertex count")
            n = nums[0]
            continue
        if len(nums) != 2:
            raise InputError(f"{name}:{lineno}: expected 'u v', got {line!r}")
        u, v = nums
        if u == v:
            raise InputError(f"{name}:{lineno}: self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"{name}:{lineno}: vertex out of range 0..{n - 1}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise InputError(f"{name}:{lineno}: duplicate edge ({u}, {v})")
        seen.add(key)
        edges.append(key)
    if n is None:
        raise InputError(f"{name}: missing vertex count")
    return Graph(n, frozenset(edges))


def read_graph(path) -> Graph:
    text, name = _read(path)
    return parse_graph(text, name)


def format_graph(G: Graph) -> str:
    return f"{G.n}\n" + "".join(f"{u} {v}\n" for u, v in G.sorted_edges())


def parse_points(text: str, name: str = "<points>") -> PointCloud:
    rows = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError:
            raise InputError(f"{name}:{lineno}: expected comma-separated numbers, got {line!r}") from None
        if not all(math.isfinite(v) for v in row):
            raise InputError(f"{name}:{lineno}: non-finite coordinate")
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise InputError(f"{name}:{lineno}: expected {dim} coordinates, got {len(row)}")
        rows.append(row)
    return PointCloud(np.array(rows, dtype=float).reshape(len(rows), dim or 0))


def read_points(path) -> PointCloud:
    text, name = _read(path)
    return parse_points(text, name)


def parse_pauli(text: str, name: str = "<pauli>", n: int = None) -> PauliHamiltonian:
    """Lines ``coef P q [P q ...]`` with ``P`` in ``XYZ``, or ``coef I``.

    The qubit count is ``1 + max index`` unless a ``# qubits N`` line or the
    ``n`` argument fixes it.
    """
    terms = []
    top = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            parts = stripped[1:].split()
            if len(parts) == 2 and parts[0] == "qubits" and n is None:
                try:
                    n = int(parts[1])
                except ValueError:
                    raise InputError(f"{name}:{lineno}: bad qubit count") from None
            continue
        line = _strip(raw)
        if not line:
            continue
        tok = line.split()
        try:
            coef = parse_coefficient(tok[0])
        except ValueError:
            raise InputError(f"{name}:{lineno}: bad coefficient {tok[0]!r}") from None
        if isinstance(coef, complex):
            raise InputError(f"{name}:{lineno}: coefficients must be real")
        rest = tok[1:]
        if rest == ["I"]:
            terms.append((coef, ()))
            continue
        if not rest or len(rest) % 2:
            raise InputError(f"{name}:{lineno}: expected 'coef P q [P q ...]' or 'coef I'")
        string = []
        for p, q in zip(rest[::2], rest[1::2]):
            if p not in ("X", "Y", "Z"):
                raise InputError(f"{name}:{lineno}: unknown Pauli letter {p!r}")
            if not q.isdigit():
                raise InputError(f"{name}:{lineno}: bad qubit index {q!r}")
            string.append((int(q), p))
            top = max(top, int(q))
        if len({q for q, _ in string}) != len(string):
            raise InputError(f"{name}:{lineno}: a qubit appears twice")
        terms.append((coef, tuple(string)))
    n = top + 1 if n is None else n
    if top >= n:
        raise InputError(f"{name}: qubit index {top} exceeds the declared count {n}")
    return PauliHamiltonian(n, tuple(terms))


def read_pauli(path) -> PauliHamiltonian:
    text, name = _read(path)
    return parse_pauli(text, name)


def format_pauli(A: PauliHamiltonian) -> str:
    lines = [f"# qubits {A.n}"]
    for c, s in A.terms:
        body = " ".join(f"{p} {q}" for q, p in s) if s else "I"
        lines.append(f"{c} {body}")
    return "\n".join(lines) + "\n"


def complex_to_json(c: CochainComplex) -> dict:
    return {
        "modes": c.m,
        "constraints": c.space.constraints.to_json(),
        "operator": operator_to_text(c.d),
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)
