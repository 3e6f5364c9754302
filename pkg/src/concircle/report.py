"""Sampling, per-point diagnostics, verdict aggregation and canonical JSON."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .curvature import (bianchi_contraction, build_frame, codazzi_defect, concircular,
                        derivation_action, divergence_04, identity_defects, k_divergence_identity,
                        k_tensor, kretschmann, metric_compatibility, model_tensor,
                        nabla, raise_last, ricci_scalar, riemann, stress_energy)
from .errors import ArgumentError, DomainError
from .manifest import Manifest
from .tensor import residual
from . import warped as wp

K_COEFFS = (1.0, 0.2, -0.3, 0.5)
VERDICT_KEYS = {
    "flat": "flat",
    "concircularly_flat": "concircular",
    "einstein": "einstein",
    "constant_curvature": "constant_curvature",
    "locally_symmetric": "nabla_R",
    "concircularly_symmetric": "nabla_C",
    "divergence_free_C": "div_C",
    "ricci_codazzi": "codazzi",
    "pseudo_symmetric": "pseudo_symmetric",
    "semi_symmetric": "semi_symmetric",
}
AUX_KEYS = {"semi_symmetric_C": "semi_symmetric_C", "pseudo_symmetric_CR": "pseudo_symmetric_CR"}
IDENTITY_KEYS = ("R.C-R.R", "C.R-pseudo", "C.C-pseudo", "R.G", "bianchi_contraction",
                 "metric_compatibility", "riemann_symmetries", "k_divergence",
                 "stress_divergence")


# ---------------------------------------------------------------------------
# sampling

def sample_points(m: Manifest, count: int, seed: int) -> np.ndarray:
    """Uniform points in the sample box from numpy's PCG64 ``default_rng(seed)``.

    One ``random((count, n))`` draw is scaled affinely into the box, so the
    sequence is fixed by (seed, count, box).
    """
    if count < 1:
        raise ArgumentError("point count must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random((count, m.dimension))
    lo = np.array([b[0] for b in m.sample_box])
    hi = np.array([b[1] for b in m.sample_box])
    return lo + u * (hi - lo)


# ---------------------------------------------------------------------------
# per-point diagnostics

def _riemann_symmetries(R: np.ndarray) -> float:
    parts = (R + R.transpose(1, 0, 2, 3), R + R.transpose(0, 1, 3, 2),
             R - R.transpose(2, 3, 0, 1),
             R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3))
    return max(residual(p, R) for p in parts)


def point_diagnostics(m: Manifest, point) -> dict[str, Any]:
    """All residuals and scalar values of the generic pipeline at one point."""
    fr = build_frame(m, point)
    n = fr.n
    res: dict[str, float] = {}
    val: dict[str, float] = {}
    Rop, R = riemann(fr)
    ric, tau = ricci_scalar(fr)
    t = float(tau.value)
    val["tau"] = t
    val["kretschmann"] = kretschmann(fr)
    res["metric_compatibility"] = metric_compatibility(fr)
    res["riemann_symmetries"] = _riemann_symmetries(R.value)
    res["flat"] = residual(R)
    lam = t / n
    res["einstein"] = residual(ric.value - lam * fr.g.value, ric)
    val["einstein_factor"] = lam
    G = model_tensor(fr)
    kappa = float(np.sum(R.value * G.value) / np.sum(G.value * G.value))
    res["constant_curvature"] = residual(R.value - kappa * G.value, R)
    val["kappa"] = kappa
    dR = nabla(fr, R)
    res["nabla_R"] = residual(dR)
    res["codazzi"] = residual(codazzi_defect(fr))
    divR = divergence_04(fr, R)
    bc = bianchi_contraction(fr)
    res["bianchi_contraction"] = residual(divR.value - bc.value, divR, bc)
    RR = derivation_action(Rop, R)
    res["semi_symmetric"] = residual(RR)
    _, _, res["k_divergence"] = k_divergence_identity(fr, *K_COEFFS)
    _, res["stress_divergence"] = stress_energy(fr, 0.0, 1.0, warn=False)
    if n >= 3:
        C = concircular(fr)
        res["concircular"] = residual(C)
        res["nabla_C"] = residual(nabla(fr, C))
        res["div_C"] = residual(divergence_04(fr, C))
        Cop = raise_last(fr, C)
        CC = derivation_action(Cop, C)
        res["pseudo_symmetric"] = residual(CC)
        res["semi_symmetric_C"] = residual(derivation_action(Rop, C))
        res["pseudo_symmetric_CR"] = residual(derivation_action(Cop, R))
        res.update(identity_defects(fr))
        c = t / (n * (n - 1))
        K, _ = k_tensor(fr, 2.0, 0.0, -2.0 * c, 2.0 * c)
        res["k_multiple_of_C"] = residual(K.value - 2.0 * C.value, K, C)
    else:
        res["R.G"] = identity_defects_rg(fr)
    return {"residuals": res, "values": val}


def identity_defects_rg(fr) -> float:
    Rop, _ = riemann(fr)
    return residual(derivation_action(Rop, model_tensor(fr)))


def structured_diagnostics(m: Manifest, point) -> dict[str, Any]:
    pf = wp.product_frames(m, point)
    return {
        "oracle": wp.oracle_agreement(pf),
        "flatness": wp.flatness_residuals(pf),
        "symmetry": wp.symmetry_residuals(pf),
        "divfree": wp.divfree_residuals(pf),
        "structure_defect": wp.structure_defect(m, pf.ambient.point),
    }


def _evaluate(m: Manifest, point, structured: bool) -> dict[str, Any]:
    rec: dict[str, Any] = {"point": [float(x) for x in point], "skipped": None}
    try:
        rec.update(point_diagnostics(m, point))
        if structured:
            rec["structured"] = structured_diagnostics(m, point)
    except DomainError as err:
        rec = {"point": rec["point"], "skipped": str(err)}
    return rec


def _threads() -> int:
    raw = os.environ.get("CONCIRCLE_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        k = int(raw)
    except ValueError:
        raise ArgumentError(f"CONCIRCLE_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ArgumentError("CONCIRCLE_THREADS must be >= 1")
    return k


def evaluate_points(m: Manifest, points, structured: bool) -> list[dict]:
    """Evaluate points concurrently; the result is ordered by point index."""
    k = _threads()
    if k == 1 or len(points) == 1:
        recs = [_evaluate(m, p, structured) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            recs = list(pool.map(lambda p: _evaluate(m, p, structured), points))
    for i, r in enumerate(recs):
        r["index"] = i
    return recs


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class Options:
    points: int | None = None
    seed: int | None = None
    tol: float | None = None
    flag_tol: dict = field(default_factory=dict)


def _verdict(recs, key, tol):
    live = [r for r in recs if r["skipped"] is None]
    if not live or key not in live[0]["residuals"]:
        return "not_applicable" if live else "indeterminate"
    if any(r["residuals"][key] >= tol for r in live):
        return False
    return "indeterminate" if len(live) < len(recs) else True


def _max(recs, section, key):
    vals = [r[section][key] for r in recs if r["skipped"] is None and key in r[section]]
    return max(vals) if vals else None


def _implies(a, b):
    if not isinstance(a, bool) or not isinstance(b, bool):
        return "unchecked"
    return "holds" if (not a or b) else "violated"


def _iff(a, b):
    if not isinstance(a, bool) or not isinstance(b, bool):
        return "unchecked"
    return "holds" if a == b else "violated"


def _both(a, b):
    if isinstance(a, bool) and isinstance(b, bool):
        return a and b
    return None


def _stat(vals):
    if not vals:
        return None
    return {"mean": float(np.mean(vals)), "min": float(min(vals)), "max": float(max(vals))}


def _tolerances(m: Manifest, opts: Options) -> tuple[float, dict]:
    tol = m.tolerance if opts.tol is None else float(opts.tol)
    if not (math.isfinite(tol) and tol > 0):
        raise ArgumentError("tolerance must be positive")
    unknown = set(opts.flag_tol) - set(VERDICT_KEYS) - set(AUX_KEYS)
    if unknown:
        raise ArgumentError(f"unknown flags for --flag-tol: {sorted(unknown)}")
    return tol, {k: float(opts.flag_tol.get(k, tol)) for k in list(VERDICT_KEYS) + list(AUX_KEYS)}


def run_analyze(m: Manifest, opts: Options | None = None) -> dict[str, Any]:
    opts = opts or Options()
    tol, ftol = _tolerances(m, opts)
    count = m.points if opts.points is None else int(opts.points)
    seed = m.seed if opts.seed is None else int(opts.seed)
    pts = sample_points(m, count, seed)
    structured = m.structure is not None
    if structured:
        wp.check_warping_positive(m)
    recs = evaluate_points(m, pts, structured)
    live = [r for r in recs if r["skipped"] is None]
    warnings = []
    skipped = len(recs) - len(live)
    if skipped:
        warnings.append(f"{skipped} of {len(recs)} sample points skipped (domain errors)")
    if m.dimension != 4:
        warnings.append(f"Einstein-equation diagnostics evaluated in dimension {m.dimension}")
    if m.dimension < 3:
        warnings.append("concircular diagnostics need dimension >= 3")

    verdicts: dict[str, Any] = {k: _verdict(recs, key, ftol[k]) for k, key in VERDICT_KEYS.items()}
    aux = {k: _verdict(recs, key, ftol[k]) for k, key in AUX_KEYS.items()}
    lams = [r["values"]["einstein_factor"] for r in live]
    kaps = [r["values"]["kappa"] for r in live]
    verdicts["einstein"] = {"holds": verdicts["einstein"],
                            "factor": float(np.mean(lams)) if lams else None}
    verdicts["constant_curvature"] = {"holds": verdicts["constant_curvature"],
                                      "kappa": float(np.mean(kaps)) if kaps else None}

    def flag(name):
        v = verdicts[name]
        return v["holds"] if isinstance(v, dict) else v

    implications = {
        "concircularly_flat_implies_constant_curvature":
            _implies(flag("concircularly_flat"), flag("constant_curvature")),
        "locally_symmetric_iff_concircularly_symmetric":
            _iff(flag("locally_symmetric"), flag("concircularly_symmetric")),
        "semi_symmetric_iff_R.C_zero": _iff(flag("semi_symmetric"), aux["semi_symmetric_C"]),
        "pseudo_symmetric_iff_C.R_zero":
            _iff(flag("pseudo_symmetric"), aux["pseudo_symmetric_CR"]),
        "semi_symmetric_codazzi_implies_concircularly_symmetric":
            _implies(_both(flag("semi_symmetric"), flag("ricci_codazzi")),
                     flag("concircularly_symmetric")),
    }
    identity = {k: _max(recs, "residuals", k) for k in IDENTITY_KEYS
                if _max(recs, "residuals", k) is not None}
    identity_ok = all(v < tol for v in identity.values())
    implications["identity_suite_vanishes"] = "holds" if identity_ok else "violated"

    report: dict[str, Any] = {
        "manifest": {"name": m.name, "sha256": m.digest(), "dimension": m.dimension,
                     "coordinates": list(m.coordinates),
                     "structure": None if m.structure is None else m.structure.kind},
        "seed": seed, "tolerance": tol, "point_count": count,
        "flag_tolerances": {k: v for k, v in ftol.items() if v != tol},
        "records": [{k: r[k] for k in ("index", "point", "skipped", "residuals", "values",
                                       "structured") if k in r} for r in recs],
        "verdicts": verdicts,
        "auxiliary_verdicts": aux,
        "scalar_curvature": _stat([r["values"]["tau"] for r in live]),
        "identity_suite": identity,
        "oracle_agreement": None,
        "structured": None,
    }
    if structured and live:
        report["oracle_agreement"] = _oracle_section(live, tol)
        section, checks, more = _structured_section(m, live, tol)
        report["structured"] = section
        warnings.extend(more)
        for c in checks:
            implications[c.name] = "holds" if c.holds else "violated"
    elif structured:
        warnings.append("no evaluable points for the structured analysis")
    report["implications"] = implications
    report["consistent"] = all(v != "violated" for v in implications.values())
    report["warnings"] = warnings
    return report


def _oracle_section(live, tol) -> dict[str, Any]:
    blocks = sorted(live[0]["structured"]["oracle"])
    worst = {b: max(r["structured"]["oracle"][b] for r in live) for b in blocks}
    return {"blocks": worst, "max": max(worst.values()), "pass": all(v < tol for v in worst.values())}


def _structured_section(m: Manifest, live, tol):
    st = m.structure
    n = m.dimension
    n1 = len(st.base_indices(n))
    n2 = n - n1
    per = []
    for r in live:
        s = r["structured"]
        per.append({"flatness": s["flatness"], "symmetry": s["symmetry"], "divfree": s["divfree"],
                     "concircular": r["residuals"].get("concircular", 0.0)})
    maxima = {sec: {k: max(p[sec][k] for p in per) for k in per[0][sec]}
              for sec in ("flatness", "symmetry", "divfree")}
    # f_sharp is a value, not a residual
    maxima["flatness"].pop("f_sharp", None)
    checks = wp.structure_checks(st.kind, n1, n2, per, tol)
    flat_flag = all(wp.flatness_flag(p["flatness"], st.kind, tol) for p in per)
    warnings = []
    gap = max(abs(p["divfree"]["mixed_equation"] - p["divfree"]["mixed_equation_fiber_ric"])
              for p in per)
    if gap > tol:
        warnings.append(f"mixed equation: ambient and fiber Ricci readings disagree "
                        f"(max gap {gap:.3e})")
    sd = max(r["structured"]["structure_defect"] for r in live)
    if sd > tol:
        warnings.append(f"chart is not a warped product in the tagged layout "
                        f"(defect {sd:.3e})")
    section = {
        "kind": st.kind, "base_dimension": n1, "fiber_dimension": n2,
        "concircularly_flat_by_conditions": flat_flag,
        "structure_defect": sd,
        "maxima": maxima,
        "structure_checks": {c.name: {"premise": c.premise, "conclusion": c.conclusion,
                                    "holds": c.holds} for c in checks},
    }
    return section, checks, warnings


def run_compare_oracle(m: Manifest, opts: Options | None = None) -> dict[str, Any]:
    if m.structure is None:
        raise ArgumentError(wp.NO_STRUCTURE)
    opts = opts or Options()
    tol, _ = _tolerances(m, opts)
    count = m.points if opts.points is None else int(opts.points)
    seed = m.seed if opts.seed is None else int(opts.seed)
    wp.check_warping_positive(m)
    pts = sample_points(m, count, seed)

    def one(p):
        try:
            return {"point": [float(x) for x in p], "skipped": None,
                    "blocks": wp.oracle_agreement(m, p)}
        except DomainError as err:
            return {"point": [float(x) for x in p], "skipped": str(err)}

    k = _threads()
    if k > 1:
        with ThreadPoolExecutor(max_workers=k) as pool:
            recs = list(pool.map(one, pts))
    else:
        recs = [one(p) for p in pts]
    for i, r in enumerate(recs):
        r["index"] = i
    live = [r for r in recs if r["skipped"] is None]
    blocks = sorted(live[0]["blocks"]) if live else []
    worst = {b: max(r["blocks"][b] for r in live) for b in blocks}
    passed = bool(live) and all(v < tol for v in worst.values())
    return {
        "manifest": {"name": m.name, "sha256": m.digest(), "structure": m.structure.kind},
        "seed": seed, "tolerance": tol, "point_count": count,
        "records": recs,
        "oracle_agreement": {"blocks": worst, "max": max(worst.values()) if worst else None,
                             "pass": passed if len(live) == len(recs) else
                             ("indeterminate" if passed else False)},
        "consistent": True,
    }


# ---------------------------------------------------------------------------
# canonical JSON

def _emit(obj, indent: int, out: list[str]):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        out.append("%.12e" % x if math.isfinite(x) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj, key=str)
        for i, k in enumerate(keys):
            out.append(pad + "  " + json.dumps(str(k), ensure_ascii=False) + ": ")
            _emit(obj[k], indent + 1, out)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in items):
            parts: list[str] = []
            for x in items:
                _emit(x, 0, parts)
                parts.append(", ")
            out.append("[" + "".join(parts[:-1]) + "]")
            return
        out.append("[\n")
        for i, x in enumerate(items):
            out.append(pad + "  ")
            _emit(x, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    out: list[str] = []
    _emit(obj, 0, out)
    return "".join(out) + "\n"


def write_report(report: dict, path) -> None:
    """Write canonical JSON (sorted keys, %.12e floats, LF endings)."""
    text = canonical_json(report)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from None
