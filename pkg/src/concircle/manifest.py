"""JSON manifest describing a chart, its metric and its sampling box."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .dsl import Expr, FUNCTIONS, free_symbols, is_zero, parse_expr, to_source
from .errors import ManifestError, ParseError

DEFAULT_TOLERANCE = 1e-7
DEFAULT_SEED = 42
DEFAULT_POINTS = 32
STRUCTURE_TYPES = ("warped", "grw", "ssst")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Structure:
    """Warped-product layout of a chart.

    ``base_dimension`` is the dimension of the factor the warping function
    lives on.  For ``warped`` and ``grw`` charts that factor's coordinates come
    first; for ``ssst`` the time coordinate comes first and the remaining
    ``base_dimension`` spatial coordinates form the base.
    """

    kind: str
    base_dimension: int
    warping: str

    def base_indices(self, n: int) -> tuple[int, ...]:
        if self.kind == "ssst":
            return tuple(range(1, n))
        return tuple(range(self.base_dimension))

    def fiber_indices(self, n: int) -> tuple[int, ...]:
        if self.kind == "ssst":
            return (0,)
        return tuple(range(self.base_dimension, n))


@dataclass(frozen=True)
class Manifest:
    name: str
    dimension: int
    coordinates: tuple[str, ...]
    metric: tuple[tuple[Expr, ...], ...]
    sample_box: tuple[tuple[float, float], ...]
    fields: dict[str, Expr] = field(default_factory=dict)
    structure: Structure | None = None
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = DEFAULT_SEED
    points: int = DEFAULT_POINTS

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.coordinates + tuple(self.fields)

    def to_document(self) -> dict[str, Any]:
        """Canonical JSON-ready document (full metric matrix, printed expressions)."""
        doc: dict[str, Any] = {
            "name": self.name,
            "dimension": self.dimension,
            "coordinates": list(self.coordinates),
            "metric": [[to_source(e) for e in row] for row in self.metric],
            "sample_box": {c: [lo, hi] for c, (lo, hi) in zip(self.coordinates, self.sample_box)},
            "tolerance": self.tolerance,
            "seed": self.seed,
            "points": self.points,
        }
        if self.fields:
            doc["fields"] = {k: to_source(v) for k, v in self.fields.items()}
        if self.structure is not None:
            doc["structure"] = {"type": self.structure.kind,
                                "base_dimension": self.structure.base_dimension,
                                "warping": self.structure.warping}
        return doc

    def digest(self) -> str:
        text = json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def load_manifest(document, *, min_dimension: int = 2) -> Manifest:
    """Validate a manifest given as JSON text or an already-decoded object.

    Collects every violation before raising :class:`ManifestError`.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ManifestError([f"malformed JSON: {exc}"]) from None
    else:
        doc = document
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ManifestError(["manifest must be a JSON object"])

    known = {"name", "dimension", "coordinates", "metric", "sample_box", "fields",
             "structure", "tolerance", "seed", "points"}
    for key in sorted(set(doc) - known):
        errors.append(f"unknown key {key!r}")
    for key in ("name", "dimension", "coordinates", "metric", "sample_box"):
        if key not in doc:
            errors.append(f"missing field {key!r}")

    name = doc.get("name", "")
    if "name" in doc and not isinstance(name, str):
        errors.append("name must be a string")

    n = doc.get("dimension")
    if "dimension" in doc and (not _is_int(n) or n < min_dimension):
        errors.append(f"dimension must be an integer >= {min_dimension}")
        n = None

    coords = doc.get("coordinates")
    coord_ok = False
    if isinstance(coords, list) and all(isinstance(c, str) for c in coords):
        bad = [c for c in coords if not _IDENT.match(c) or c in FUNCTIONS]
        for c in bad:
            errors.append(f"invalid coordinate name {c!r}")
        if len(set(coords)) != len(coords):
            errors.append("duplicate coordinate names")
        if n is not None and len(coords) != n:
            errors.append(f"expected {n} coordinates, got {len(coords)}")
        coord_ok = not bad and len(set(coords)) == len(coords) and (n is None or len(coords) == n)
    elif "coordinates" in doc:
        errors.append("coordinates must be an array of strings")
    if n is None and coord_ok:
        n = len(coords)
    coords = tuple(coords) if coord_ok else ()

    # fields share the coordinate namespace and may reference coordinates only
    fields: dict[str, Expr] = {}
    raw_fields = doc.get("fields", {})
    if not isinstance(raw_fields, dict):
        errors.append("fields must be an object")
        raw_fields = {}
    for fname, src in raw_fields.items():
        if not _IDENT.match(fname) or fname in FUNCTIONS:
            errors.append(f"invalid field name {fname!r}")
            continue
        if fname in coords:
            errors.append(f"field {fname!r} shadows a coordinate")
            continue
        if not isinstance(src, str):
            errors.append(f"field {fname!r} must be an expression string")
            continue
        try:
            fields[fname] = parse_expr(src, coords)
        except ParseError as exc:
            errors.append(f"field {fname!r}: {exc}")

    symbols = coords + tuple(fields)
    metric = _load_metric(doc.get("metric"), n, symbols, errors) if "metric" in doc else None

    box = []
    raw_box = doc.get("sample_box")
    if "sample_box" in doc:
        if not isinstance(raw_box, dict):
            errors.append("sample_box must be an object")
        else:
            for c in coords:
                iv = raw_box.get(c)
                if iv is None:
                    errors.append(f"sample_box missing coordinate {c!r}")
                    continue
                if (not isinstance(iv, list) or len(iv) != 2 or not all(_is_number(v) for v in iv)
                        or not all(math.isfinite(v) for v in iv)):
                    errors.append(f"sample_box[{c!r}] must be a finite [lo, hi] pair")
                    continue
                if not iv[0] < iv[1]:
                    errors.append(f"sample_box[{c!r}] is degenerate")
                    continue
                box.append((float(iv[0]), float(iv[1])))
            for extra in sorted(set(raw_box) - set(coords)):
                errors.append(f"sample_box has unknown coordinate {extra!r}")

    structure = None
    if "structure" in doc:
        structure = _load_structure(doc["structure"], n, coords, fields, metric, errors)

    tol = doc.get("tolerance", DEFAULT_TOLERANCE)
    if not _is_number(tol) or not (math.isfinite(tol) and tol > 0):
        errors.append("tolerance must be a positive number")
    seed = doc.get("seed", DEFAULT_SEED)
    if not _is_int(seed) or seed < 0:
        errors.append("seed must be a non-negative integer")
    points = doc.get("points", DEFAULT_POINTS)
    if not _is_int(points) or points < 1:
        errors.append("points must be a positive integer")

    if errors:
        raise ManifestError(errors)
    return Manifest(name=name, dimension=n, coordinates=coords, metric=metric,
                    sample_box=tuple(box), fields=fields, structure=structure,
                    tolerance=float(tol), seed=seed, points=points)


def _norm(src: str) -> str:
    return "".join(src.split())


def _load_metric(raw, n, symbols, errors):
    if n is None:
        return None
    rows: list[list] = [[None] * n for _ in range(n)]
    if isinstance(raw, dict):
        if raw.get("symmetric") is not True:
            errors.append("object-form metric must set \"symmetric\": true")
            return None
        upper = raw.get("upper")
        if (not isinstance(upper, list) or len(upper) != n
                or any(not isinstance(r, list) or len(r) != n - i for i, r in enumerate(upper))):
            errors.append("metric.upper must list rows of lengths n, n-1, ..., 1")
            return None
        for i, r in enumerate(upper):
            for k, src in enumerate(r):
                rows[i][i + k] = src
                rows[i + k][i] = src
    elif isinstance(raw, list):
        if len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
            errors.append(f"metric must be a {n}x{n} matrix")
            return None
        rows = [list(r) for r in raw]
    else:
        errors.append("metric must be a matrix or a symmetric upper-triangle object")
        return None

    parsed: list[list] = [[None] * n for _ in range(n)]
    ok = True
    for i in range(n):
        for j in range(n):
            src = rows[i][j]
            if not isinstance(src, str):
                errors.append(f"metric[{i}][{j}] must be an expression string")
                ok = False
                continue
            if j < i:
                continue
            try:
                parsed[i][j] = parse_expr(src, symbols)
            except ParseError as exc:
                errors.append(f"metric[{i}][{j}]: {exc}")
                ok = False
    for i in range(n):
        for j in range(i + 1, n):
            a, b = rows[i][j], rows[j][i]
            if isinstance(a, str) and isinstance(b, str) and _norm(a) != _norm(b):
                errors.append(f"asymmetric at ({i},{j})")
                ok = False
            parsed[j][i] = parsed[i][j]
    if not ok:
        return None
    return tuple(tuple(r) for r in parsed)


def _load_structure(raw, n, coords, fields, metric, errors):
    if not isinstance(raw, dict):
        errors.append("structure must be an object")
        return None
    kind = raw.get("type")
    n1 = raw.get("base_dimension")
    warp = raw.get("warping")
    bad = False
    if kind not in STRUCTURE_TYPES:
        errors.append(f"structure.type must be one of {list(STRUCTURE_TYPES)}")
        bad = True
    if not _is_int(n1) or n1 < 1:
        errors.append("structure.base_dimension must be a positive integer")
        bad = True
    if not isinstance(warp, str) or warp not in fields:
        errors.append("structure.warping must name a declared field")
        bad = True
    if bad or n is None:
        return None
    if kind == "warped" and not 2 <= n1 <= n - 2:
        errors.append("warped structure needs base and fiber dimensions >= 2")
        return None
    if kind == "grw" and n1 != 1:
        errors.append("grw structure needs base_dimension 1 (the time line)")
        return None
    if kind == "ssst" and n1 != n - 1:
        errors.append("ssst structure needs base_dimension n-1 (the spatial factor)")
        return None
    st = Structure(kind, n1, warp)
    if coords:
        base_names = {coords[i] for i in st.base_indices(n)}
        stray = sorted(free_symbols(fields[warp]) - base_names)
        if stray:
            errors.append(f"warping function depends on non-base coordinates {stray}")
    if metric is not None:
        base, fib = st.base_indices(n), st.fiber_indices(n)
        for i in base:
            for j in fib:
                if not is_zero(metric[i][j]):
                    errors.append(f"structure requires metric[{i}][{j}] = 0")
    return st
