"""Built-in manifests: model spaces and warped-product space-times.

Curvature conventions: ``sphere(n, r)`` has constant curvature ``1/r^2`` and
``hyperbolic_halfspace(n, r)`` has ``-1/r^2``.  Angular boxes stay inside
[0.3, 2.8] to avoid the polar coordinate singularities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import ArgumentError
from .manifest import Manifest, load_manifest
from .warped import WarpedSpec, product_metric, time_line

ANGLE_BOX = [0.3, 2.8]
PHI_BOX = [0.0, 6.2]


def _num(x: float) -> str:
    return repr(float(x))


def _int_param(params, key, lo=1) -> int:
    v = params[key]
    if isinstance(v, str) or float(v) != int(float(v)) or int(float(v)) < lo:
        raise ArgumentError(f"parameter {key!r} must be an integer >= {lo}, got {v!r}")
    return int(float(v))


def _pos_param(params, key) -> float:
    v = params[key]
    if isinstance(v, str) or not float(v) > 0:
        raise ArgumentError(f"parameter {key!r} must be a positive number, got {v!r}")
    return float(v)


def _diag_doc(name, coords, diag, box, **extra):
    n = len(coords)
    upper = [[diag[i] if k == 0 else "0" for k in range(n - i)] for i in range(n)]
    doc = {"name": name, "dimension": n, "coordinates": list(coords),
           "metric": {"symmetric": True, "upper": upper},
           "sample_box": {c: list(b) for c, b in zip(coords, box)}}
    doc.update(extra)
    return doc


def _cartesian_names(n: int) -> list[str]:
    return ["x", "y", "z"][:n] if n <= 3 else [f"x{i + 1}" for i in range(n)]


def euclidean(params) -> Manifest:
    n = _int_param(params, "n")
    coords = _cartesian_names(n)
    return load_manifest(_diag_doc(f"euclidean{n}", coords, ["1"] * n, [[-1.0, 1.0]] * n),
                         min_dimension=1)


def minkowski(params) -> Manifest:
    n = _int_param(params, "n", 2)
    coords = ["t"] + _cartesian_names(n - 1)
    return load_manifest(_diag_doc(f"minkowski{n}", coords, ["-1"] + ["1"] * (n - 1),
                                   [[-1.0, 1.0]] * n))


def _sphere_names(n: int) -> list[str]:
    if n == 2:
        return ["theta", "phi"]
    if n == 3:
        return ["chi", "theta", "phi"]
    return [f"th{i + 1}" for i in range(n - 1)] + ["phi"]


def sphere(params) -> Manifest:
    n = _int_param(params, "n", 2)
    r = _pos_param(params, "r")
    coords = _sphere_names(n)
    r2 = _num(r * r)
    diag = []
    for i in range(n):
        factors = [r2] + [f"sin({coords[j]})^2" for j in range(i)]
        diag.append("*".join(factors) if r != 1.0 else "*".join(factors[1:]) or "1")
    box = [ANGLE_BOX] * (n - 1) + [PHI_BOX]
    return load_manifest(_diag_doc(f"sphere{n}", coords, diag, box))


def hyperbolic_halfspace(params) -> Manifest:
    n = _int_param(params, "n", 2)
    r = _pos_param(params, "r")
    coords = _cartesian_names(n) if n <= 3 else [f"x{i + 1}" for i in range(n - 1)] + ["z"]
    z = coords[-1]
    diag = [f"{_num(r * r)}/{z}^2"] * n
    box = [[-1.0, 1.0]] * (n - 1) + [[0.2, 2.0]]
    return load_manifest(_diag_doc(f"hyperbolic{n}", coords, diag, box))


def schwarzschild(params) -> Manifest:
    m = _pos_param(params, "m")
    h = f"(1 - {_num(2 * m)}/r)"
    diag = [f"-{h}", f"1/{h}", "r^2", "r^2*sin(theta)^2"]
    box = [[0.0, 1.0], [3 * m, 6 * m], [0.6, 2.5], PHI_BOX]
    return load_manifest(_diag_doc("schwarzschild", ["t", "r", "theta", "phi"], diag, box))


def perturbed3(params) -> Manifest:
    eps = float(params["eps"])
    return load_manifest(_diag_doc("perturbed3", ["x", "y", "z"],
                                   ["1", f"1 + {_num(eps)}*x^2", "1"], [[-1.0, 1.0]] * 3))


MODEL_SPACES = {"euclidean": euclidean, "sphere": sphere,
                "hyperbolic_halfspace": hyperbolic_halfspace, "minkowski": minkowski}


def _factor(kind: str, params: dict) -> Manifest:
    try:
        gen = MODEL_SPACES[kind]
    except KeyError:
        raise ArgumentError(f"unknown factor {kind!r}; choose from {sorted(MODEL_SPACES)}") from None
    spec = ENTRIES[kind]
    merged = dict(spec.defaults)
    merged.update(params)
    return gen(merged)


def _validated(m: Manifest) -> Manifest:
    return load_manifest(m.to_document())


def _with_box(m: Manifest, coord: str, box) -> Manifest:
    doc = m.to_document()
    doc["sample_box"][coord] = list(box)
    return load_manifest(doc, min_dimension=1)


def _split(params, prefix):
    return {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}


def grw(params) -> Manifest:
    fiber = _factor(str(params["fiber"]), _split(params, "fiber_"))
    line = time_line("t", (float(params["t0"]), float(params["t1"])))
    return _validated(product_metric(WarpedSpec(line, fiber, str(params["f"]), "grw",
                                                params.get("name", "grw"))))


def ssst(params) -> Manifest:
    spatial = _factor(str(params["spatial"]), _split(params, "spatial_"))
    line = time_line("t", (float(params["t0"]), float(params["t1"])))
    return _validated(product_metric(WarpedSpec(spatial, line, str(params["f"]), "ssst",
                                                params.get("name", "ssst"))))


def warped(params) -> Manifest:
    base = _factor(str(params["base"]), _split(params, "base_"))
    fiber = _factor(str(params["fiber"]), _split(params, "fiber_"))
    return _validated(product_metric(WarpedSpec(base, fiber, str(params["f"]), "warped",
                                                params.get("name", "warped"))))


def einstein_static(params) -> Manifest:
    return ssst({"f": "1", "spatial": "sphere", "spatial_n": 3, "t0": 0.0, "t1": 1.0,
                 "name": "einstein_static"})


def de_sitter(params) -> Manifest:
    return grw({"f": "cosh(t)", "fiber": "sphere", "fiber_n": 3, "t0": -1.0, "t1": 1.0,
                "name": "de_sitter"})


def linear_grw(params) -> Manifest:
    a, b = float(params["a"]), float(params["b"])
    if a == 0 or b <= 0 or b - abs(a) <= 0:
        raise ArgumentError("linear_grw needs a != 0 and a*t + b > 0 on t in [0, 1]")
    return grw({"f": f"{_num(a)}*t + {_num(b)}", "fiber": "hyperbolic_halfspace",
                "fiber_n": 3, "fiber_r": 1.0 / abs(a), "t0": 0.0, "t1": 1.0,
                "name": "linear_grw"})


def grw_quadratic(params) -> Manifest:
    return grw({"f": "t^2 + 1", "fiber": "sphere", "fiber_n": 3, "t0": 0.0, "t1": 1.0,
                "name": "grw_quadratic"})


def sphere_product(params) -> Manifest:
    return warped({"base": "sphere", "base_n": 3, "fiber": "sphere", "fiber_n": 3, "f": "1",
                   "name": "sphere_product"})


def warped_exp_sphere(params) -> Manifest:
    return warped({"base": "euclidean", "base_n": 2, "fiber": "sphere", "fiber_n": 2,
                   "f": "exp(x)", "name": "warped_exp_sphere"})


def rindler(params) -> Manifest:
    spatial = _with_box(euclidean({"n": 3}), "x", (0.5, 2.0))
    line = time_line("t", (0.0, 1.0))
    return _validated(product_metric(WarpedSpec(spatial, line, "x", "ssst", "rindler")))


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    generator: Callable[[dict], Manifest]
    defaults: dict = field(default_factory=dict)
    help: str = ""
    open_params: bool = False   # accepts prefixed factor parameters


ENTRIES: dict[str, CatalogEntry] = {e.name: e for e in [
    CatalogEntry("euclidean", euclidean, {"n": 3}, "flat R^n, box [-1, 1]^n"),
    CatalogEntry("minkowski", minkowski, {"n": 4}, "flat Lorentzian diag(-1, 1, ...)"),
    CatalogEntry("sphere", sphere, {"n": 3, "r": 1.0}, "round S^n of radius r, curvature 1/r^2"),
    CatalogEntry("hyperbolic_halfspace", hyperbolic_halfspace, {"n": 3, "r": 1.0},
                 "upper half-space r^2 |dx|^2 / z^2, curvature -1/r^2, z in [0.2, 2]"),
    CatalogEntry("schwarzschild", schwarzschild, {"m": 1.0},
                 "static exterior chart, r in [3m, 6m]"),
    CatalogEntry("perturbed3", perturbed3, {"eps": 0.3}, "diag(1, 1 + eps x^2, 1) on [-1, 1]^3"),
    CatalogEntry("grw", grw, {"f": "cosh(t)", "fiber": "sphere", "t0": -1.0, "t1": 1.0},
                 "-dt^2 + f(t)^2 g_fiber; fiber_* parameters go to the fiber", True),
    CatalogEntry("ssst", ssst, {"f": "1", "spatial": "sphere", "t0": 0.0, "t1": 1.0},
                 "-f^2 dt^2 + g_spatial; spatial_* parameters go to the spatial factor", True),
    CatalogEntry("warped", warped, {"base": "euclidean", "base_n": 2, "fiber": "sphere",
                                    "fiber_n": 2, "f": "exp(x)"},
                 "g_base + f^2 g_fiber; base_* and fiber_* parameters go to the factors", True),
    CatalogEntry("einstein_static", einstein_static, {}, "ssst with f = 1 over unit S^3"),
    CatalogEntry("de_sitter", de_sitter, {}, "grw with f = cosh t over unit S^3, t in [-1, 1]"),
    CatalogEntry("linear_grw", linear_grw, {"a": 0.7, "b": 2.0},
                 "grw with f = a t + b over the half-space of curvature -a^2 (flat)"),
    CatalogEntry("grw_quadratic", grw_quadratic, {}, "grw with f = t^2 + 1 over unit S^3"),
    CatalogEntry("sphere_product", sphere_product, {}, "unit S^3 x S^3 with f = 1"),
    CatalogEntry("warped_exp_sphere", warped_exp_sphere, {}, "E^2 x_f S^2 with f = exp(x)"),
    CatalogEntry("rindler", rindler, {}, "ssst with f = x over E^3, x in [0.5, 2] (flat)"),
]}


def entry_names() -> list[str]:
    return sorted(ENTRIES)


def build(name: str, params: dict | None = None) -> Manifest:
    """Generate a catalog manifest, overriding defaults with ``params``."""
    try:
        entry = ENTRIES[name]
    except KeyError:
        raise ArgumentError(f"unknown catalog entry {name!r}; valid entries: "
                            f"{', '.join(entry_names())}") from None
    params = dict(params or {})
    unknown = [k for k in params if k not in entry.defaults
               and not (entry.open_params and "_" in k)]
    if unknown:
        raise ArgumentError(f"unknown parameters {sorted(unknown)} for {name!r}; "
                            f"valid: {sorted(entry.defaults)}")
    merged = dict(entry.defaults)
    merged.update(params)
    try:
        return entry.generator(merged)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise ArgumentError(f"bad parameters for {name!r}: {exc}") from None
