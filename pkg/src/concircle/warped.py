"""Warped products, generalized Robertson-Walker and standard static charts.

The closed-form concircular blocks here are evaluated from factor frames
(base and fiber metrics seeded on their own coordinates) plus the ambient
scalar curvature.  They never read the product connection, so comparing them
with the generic pipeline is an independent check of both.

Sign conventions follow :mod:`concircle.curvature`; in particular
``G(X,Y)Z = g(X,Z)Y - g(Y,Z)X`` and constant curvature ``k`` means ``R = kG``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import (PointFrame, _concircular_any_dim, build_frame, codazzi_defect,
                        concircular, divergence_04, frame_from_exprs, model_tensor, nabla,
                        raise_last, ricci_scalar, riemann, scalar_calculus)
from .dsl import Bin, Expr, Neg, Num, Pow, Var, eval_expr, free_symbols, parse_expr, rename
from .errors import ArgumentError, ConcircleError, DomainError
from .jets import Jet3
from .manifest import Manifest, Structure
from .tensor import DOWN, Tensor, contract, partial, residual

NO_STRUCTURE = "no structure tag"
KINDS = ("warped", "grw", "ssst")


@dataclass(frozen=True)
class WarpedSpec:
    """Two factor charts and a warping function on the base.

    For ``grw`` the base is a one-dimensional time chart with metric ``-1``;
    for ``ssst`` the fiber is that time chart and ``f`` lives on the spatial
    base.  Use :func:`time_line` to build the interval factor.
    """

    base: Manifest
    fiber: Manifest
    warping: str
    kind: str = "warped"
    name: str = ""


def time_line(name: str = "t", interval=(0.0, 1.0)) -> Manifest:
    return Manifest(name="time", dimension=1, coordinates=(name,), metric=((Num(-1.0),),),
                    sample_box=((float(interval[0]), float(interval[1])),))


def _fresh(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    cand = f"{name}_2"
    if cand in taken:
        raise ConcircleError(f"cannot resolve name collision for {name!r}")
    return cand


def _times_square(e: Expr, fname: str) -> Expr:
    f2 = Pow(Var(fname), 2)
    if isinstance(e, Num):
        if e.value == 0.0:
            return e
        if e.value == 1.0:
            return f2
        if e.value == -1.0:
            return Neg(f2)
    return Bin("*", f2, e)


def product_metric(spec: WarpedSpec, *, check_positive: bool = True) -> Manifest:
    """Block-diagonal product chart carrying a structure tag."""
    if spec.kind not in KINDS:
        raise ArgumentError(f"unknown product kind {spec.kind!r}")
    base, fiber = spec.base, spec.fiber
    if spec.kind == "grw" and base.dimension != 1:
        raise ArgumentError("grw base must be the one-dimensional time chart")
    if spec.kind == "ssst" and fiber.dimension != 1:
        raise ArgumentError("ssst fiber must be the one-dimensional time chart")
    if spec.kind == "warped" and (base.dimension < 2 or fiber.dimension < 2):
        raise ArgumentError("warped factors need dimension >= 2")

    taken = set(base.coordinates) | set(base.fields)
    fmap = {}
    for c in fiber.coordinates + tuple(fiber.fields):
        new = _fresh(c, taken)
        fmap[c] = new
        taken.add(new)
    fname = _fresh("f", taken)
    taken.add(fname)
    warp = parse_expr(spec.warping, base.coordinates + tuple(base.fields)) \
        if isinstance(spec.warping, str) else spec.warping
    stray = free_symbols(warp) - set(base.coordinates) - set(base.fields)
    if stray:
        raise ArgumentError(f"warping function uses non-base symbols {sorted(stray)}")

    fields = dict(base.fields)
    fields.update({fmap[k]: rename(v, fmap) for k, v in fiber.fields.items()})
    # base-field references are inlined so the warping field does not chain
    fields[fname] = _inline(warp, base.fields)

    fiber_coords = tuple(fmap[c] for c in fiber.coordinates)
    fiber_block = [[_times_square(rename(e, fmap), fname) for e in row] for row in fiber.metric]
    base_block = [list(row) for row in base.metric]
    if spec.kind == "ssst":
        coords = fiber_coords + base.coordinates
        first, second = fiber_block, base_block
        box = fiber.sample_box + base.sample_box
    else:
        coords = base.coordinates + fiber_coords
        first, second = base_block, fiber_block
        box = base.sample_box + fiber.sample_box
    n1, n2 = len(first), len(second)
    n = n1 + n2
    zero = Num(0.0)
    metric = [[zero] * n for _ in range(n)]
    for i in range(n1):
        for j in range(n1):
            metric[i][j] = first[i][j]
    for i in range(n2):
        for j in range(n2):
            metric[n1 + i][n1 + j] = second[i][j]
    bdim = 1 if spec.kind == "grw" else base.dimension
    m = Manifest(name=spec.name or f"{spec.kind}_product", dimension=n, coordinates=coords,
                 metric=tuple(tuple(r) for r in metric), sample_box=box, fields=fields,
                 structure=Structure(spec.kind, bdim, fname))
    if check_positive:
        check_warping_positive(m)
    return m


def _inline(e: Expr, fields) -> Expr:
    if isinstance(e, Var):
        return fields.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(_inline(e.arg, fields), e.span)
    if isinstance(e, Pow):
        return Pow(_inline(e.base, fields), e.exp, e.span)
    if hasattr(e, "fn"):
        return type(e)(e.fn, _inline(e.arg, fields), e.span)
    return Bin(e.op, _inline(e.left, fields), _inline(e.right, fields), e.span)


def check_warping_positive(m: Manifest, samples: int = 64, seed: int = 0):
    """f > 0 on a corner grid and random points of the base box."""
    st = _structure(m)
    base = st.base_indices(m.dimension)
    rng = np.random.default_rng(seed)
    lo = np.array([m.sample_box[i][0] for i in base])
    hi = np.array([m.sample_box[i][1] for i in base])
    grid = np.array(np.meshgrid(*[(a, 0.5 * (a + b), b) for a, b in zip(lo, hi)],
                                indexing="ij")).reshape(len(base), -1).T
    pts = np.vstack([grid, lo + rng.random((samples, len(base))) * (hi - lo)])
    expr = m.fields[st.warping]
    for p in pts:
        env = {m.coordinates[i]: Jet3.constant(x, 1) for i, x in zip(base, p)}
        env.update({m.coordinates[i]: Jet3.constant(0.5 * sum(m.sample_box[i]), 1)
                    for i in range(m.dimension) if i not in base})
        val = eval_expr(expr, env).value
        if not val > 0:
            raise DomainError(f"warping function must be positive, got {val:.6g}",
                              func=st.warping, value=val, point=p)


def _structure(m: Manifest) -> Structure:
    if not isinstance(m, Manifest):
        raise ArgumentError("expected a manifest")
    if m.structure is None:
        raise ArgumentError(NO_STRUCTURE)
    return m.structure


def as_manifest(obj) -> Manifest:
    if isinstance(obj, WarpedSpec):
        return product_metric(obj)
    _structure(obj)
    return obj


# ---------------------------------------------------------------------------
# factor frames

def _divide_square(e: Expr, fname: str) -> Expr:
    f2 = Pow(Var(fname), 2)
    if e == f2:
        return Num(1.0)
    if isinstance(e, Neg):
        return Neg(_divide_square(e.arg, fname))
    if isinstance(e, Bin) and e.op == "*":
        if e.left == f2:
            return e.right
        if e.right == f2:
            return e.left
    if isinstance(e, Num) and e.value == 0.0:
        return e
    return Bin("/", e, f2)


@dataclass(frozen=True, eq=False)
class ProductFrames:
    ambient: PointFrame
    base: PointFrame
    fiber: PointFrame
    structure: Structure
    base_idx: tuple[int, ...]
    fiber_idx: tuple[int, ...]

    @property
    def f(self) -> Tensor:
        return self.base.fields[self.structure.warping]

    @property
    def n(self) -> int:
        return self.ambient.n


def product_frames(m: Manifest, point, *, check_box: bool = True) -> ProductFrames:
    st = _structure(m)
    n = m.dimension
    B, F = st.base_indices(n), st.fiber_indices(n)
    ambient = build_frame(m, point, check_box=check_box)
    p = ambient.point
    base_metric = [[m.metric[i][j] for j in B] for i in B]
    fiber_metric = [[_divide_square(m.metric[i][j], st.warping) for j in F] for i in F]
    base = frame_from_exprs(m.coordinates, p, B, base_metric, m.fields)
    fval = base.fields[st.warping].value
    if not float(fval) > 0:
        raise DomainError(f"warping function must be positive, got {float(fval):.6g}",
                          func=st.warping, value=float(fval), point=p)
    fiber = frame_from_exprs(m.coordinates, p, F, fiber_metric, m.fields)
    return ProductFrames(ambient, base, fiber, st, B, F)


def structure_defect(m: Manifest, point) -> float:
    """How far the chart is from a genuine warped product at ``point``.

    Measures base-block dependence on fiber coordinates and dependence of
    the fiber block divided by ``f^2`` on base coordinates.
    """
    st = _structure(m)
    n = m.dimension
    B, F = st.base_indices(n), st.fiber_indices(n)
    point = np.asarray(point, dtype=float)
    full = frame_from_exprs(m.coordinates, point, range(n), m.metric, m.fields)
    dg = full.g.parts[1]
    fjet = full.fields[st.warping]
    f0, df = float(fjet.value), fjet.parts[1]
    worst = 0.0
    for i in B:
        for j in B:
            worst = max(worst, float(np.max(np.abs(dg[i, j, list(F)]))))
    for i in F:
        for j in F:
            # ∂(g_ij / f^2) = ∂g_ij / f^2 - 2 g_ij ∂f / f^3
            d = dg[i, j] / f0**2 - 2.0 * full.g.value[i, j] * df / f0**3
            worst = max(worst, float(np.max(np.abs(d[list(B)]))))
    return worst / max(1.0, float(np.max(np.abs(dg))))


# ---------------------------------------------------------------------------
# small helpers

def _model_op(g: np.ndarray) -> np.ndarray:
    """G[s,p,q,r] = g_pr δ^s_q - g_qr δ^s_p."""
    eye = np.eye(g.shape[0])
    return np.einsum("pr,sq->spqr", g, eye) - np.einsum("qr,sp->spqr", g, eye)


def _model_down(g: np.ndarray) -> np.ndarray:
    return np.einsum("ik,jl->ijkl", g, g) - np.einsum("jk,il->ijkl", g, g)


def _defect(a: np.ndarray, *refs: np.ndarray) -> float:
    return residual(np.asarray(a), *refs)


@dataclass(frozen=True)
class FactorData:
    n: int
    n1: int
    n2: int
    kappa: float
    tau: float
    f: float
    df: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    lap: float
    norm2: float
    nabla_grad: np.ndarray   # [s, p] = (∇_p grad f)^s
    g1: np.ndarray
    g2: np.ndarray
    R1op: np.ndarray
    R2op: np.ndarray
    R1: np.ndarray
    R2: np.ndarray


def factor_data(pf: ProductFrames) -> FactorData:
    n = pf.n
    _, tau = ricci_scalar(pf.ambient)
    tau = float(tau.value)
    base, fiber = pf.base, pf.fiber
    grad, hess, lap = scalar_calculus(base, pf.structure.warping)
    f = pf.f
    R1op, R1 = riemann(base)
    R2op, R2 = riemann(fiber)
    df = f.parts[1]
    return FactorData(
        n=n, n1=base.n, n2=fiber.n, kappa=tau / (n * (n - 1)), tau=tau,
        f=float(f.value), df=df, grad=grad.value, hess=hess.value, lap=float(lap.value),
        norm2=float(df @ grad.value),
        nabla_grad=np.einsum("sa,pa->sp", base.g_inv.value, hess.value),
        g1=base.g.value, g2=fiber.g.value, R1op=R1op.value, R2op=R2op.value,
        R1=R1.value, R2=R2.value)


# ---------------------------------------------------------------------------
# oracles

def _embed(n: int, rows, block: np.ndarray) -> np.ndarray:
    out = np.zeros((n,) + block.shape[1:])
    out[list(rows)] = block
    return out


def _general_blocks(pf: ProductFrames) -> dict[str, tuple]:
    d = factor_data(pf)
    B, F, n = pf.base_idx, pf.fiber_idx, pf.n
    k, f = d.kappa, d.f
    e1, e2 = np.eye(d.n1), np.eye(d.n2)
    cc1 = d.R1op - k * _model_op(d.g1)
    cc2 = np.einsum("qr,sp->spqr", d.hess / f + k * d.g1, e2)
    cc3 = np.einsum("qr,sp->spqr", f * d.g2, d.nabla_grad + k * f * e1)
    cc4 = d.R2op - (d.norm2 + k * f * f) * _model_op(d.g2)
    return {
        "C(X1,Y1)Z1": (_embed(n, B, cc1), B, B, B),
        "C(X2,Y1)Z1": (_embed(n, F, cc2), F, B, B),
        "C(X1,Y2)Z2": (_embed(n, B, cc3), B, F, F),
        "C(X2,Y2)Z2": (_embed(n, F, cc4), F, F, F),
    }


def _grw_blocks(pf: ProductFrames) -> dict[str, tuple]:
    if pf.structure.kind != "grw":
        raise ArgumentError("grw oracle needs a grw structure")
    n = pf.n
    T, F = pf.base_idx, pf.fiber_idx
    _, tau = ricci_scalar(pf.ambient)
    kb = float(tau.value) / (n * (n - 1))
    fj = pf.f
    f, fd, fdd = float(fj.value), float(fj.parts[1][0]), float(fj.parts[2][0, 0])
    g = pf.fiber.g.value
    Rop = riemann(pf.fiber)[0].value
    m = len(F)
    ttt = np.zeros((n, 1, 1, 1))
    xtt = _embed(n, F, np.einsum("sp,qr->spqr", np.eye(m), np.full((1, 1), fdd / f - kb)))
    txy = _embed(n, T, (f * (kb * f - fdd) * g)[None, None])
    xyz = _embed(n, F, Rop + (fd * fd - kb * f * f) * _model_op(g))
    return {
        "C(dt,dt)dt": (ttt, T, T, T),
        "C(X,dt)dt": (xtt, F, T, T),
        "C(dt,X)Y": (txy, T, F, F),
        "C(X,Y)Z": (xyz, F, F, F),
    }


def _ssst_blocks(pf: ProductFrames) -> dict[str, tuple]:
    if pf.structure.kind != "ssst":
        raise ArgumentError("ssst oracle needs an ssst structure")
    n = pf.n
    S, T = pf.base_idx, pf.fiber_idx
    _, tau = ricci_scalar(pf.ambient)
    kb = float(tau.value) / (n * (n - 1))
    grad, hess, _ = scalar_calculus(pf.base, pf.structure.warping)
    f = float(pf.f.value)
    g = pf.base.g.value
    ng = np.einsum("sa,pa->sp", pf.base.g_inv.value, hess.value)
    Rop = riemann(pf.base)[0].value
    m = len(S)
    xtt = _embed(n, S, (-f * (ng + kb * f * np.eye(m)))[:, :, None, None])
    txy = _embed(n, T, (hess.value / f + kb * g)[None, None])
    xyz = _embed(n, S, Rop - kb * _model_op(g))
    return {
        "C(X,dt)dt": (xtt, S, T, T),
        "C(dt,X)Y": (txy, T, S, S),
        "C(X,Y)Z": (xyz, S, S, S),
    }


def _as_frames(obj, point) -> ProductFrames:
    """Frames at ``point``, or at the centre of the sample box when omitted."""
    if isinstance(obj, ProductFrames):
        return obj
    m = as_manifest(obj)
    if point is None:
        point = [0.5 * (lo + hi) for lo, hi in m.sample_box]
    return product_frames(m, point)


def warped_concircular_oracle(spec, point=None) -> dict[str, np.ndarray]:
    """Blocks ``[s, p, q, r]`` = s-th component of C(∂p, ∂q)∂r over factor indices."""
    pf = _as_frames(spec, point)
    return {k: v[0] for k, v in _general_blocks(pf).items()}


def grw_concircular_oracle(spec, point=None) -> dict[str, np.ndarray]:
    pf = _as_frames(spec, point)
    return {k: v[0] for k, v in _grw_blocks(pf).items()}


def ssst_concircular_oracle(spec, point=None) -> dict[str, np.ndarray]:
    pf = _as_frames(spec, point)
    return {k: v[0] for k, v in _ssst_blocks(pf).items()}


def pipeline_operator(frame: PointFrame) -> np.ndarray:
    return raise_last(frame, _concircular_any_dim(frame)).value


def oracle_agreement(spec, point=None) -> dict[str, float]:
    """Normalised defect of every oracle block against the generic pipeline.

    ``warped`` charts are checked with the general blocks; ``grw`` and
    ``ssst`` charts with both their specialised blocks and the general ones.
    """
    pf = _as_frames(spec, point)
    cop = pipeline_operator(pf.ambient)
    tables = [("", _general_blocks(pf))]
    if pf.structure.kind == "grw":
        tables.append(("grw:", _grw_blocks(pf)))
    elif pf.structure.kind == "ssst":
        tables.append(("ssst:", _ssst_blocks(pf)))
    out = {}
    for prefix, table in tables:
        for name, (orc, P, Q, R) in table.items():
            pipe = cop[:, list(P)][:, :, list(Q)][:, :, :, list(R)]
            out[prefix + name] = _defect(pipe - orc, pipe, orc)
    return out


# ---------------------------------------------------------------------------
# condition residuals

FLATNESS_KEYS = {
    "warped": ("base_constant_curvature", "hessian_condition", "fiber_constant_curvature"),
    "grw": ("grw_time_condition", "grw_fiber_curvature"),
    "ssst": ("ssst_hessian_condition", "ssst_spatial_curvature"),
}


def _scalar_defect(*terms: float) -> float:
    return abs(sum(terms)) / max(1.0, *(abs(t) for t in terms))


def flatness_residuals(spec, point=None) -> dict[str, float]:
    """Residuals of the concircular-flatness conditions and their corollaries.

    ``f_sharp`` is reported as a value, not a residual.
    """
    if isinstance(spec, Manifest) and spec.structure is None:
        return {"not_applicable": NO_STRUCTURE}
    pf = _as_frames(spec, point)
    d = factor_data(pf)
    k = d.kappa
    out = {}
    out["base_constant_curvature"] = _defect(d.R1 - k * _model_down(d.g1), d.R1) if d.n1 > 1 else 0.0
    F = d.hess / d.f
    out["hessian_condition"] = _defect(F + k * d.g1, F, k * d.g1)
    k2 = k * d.f ** 2 + d.norm2
    out["fiber_constant_curvature"] = (_defect(d.R2 - k2 * _model_down(d.g2), d.R2)
                                       if d.n2 > 1 else 0.0)
    out["hessian_type"] = _defect(d.hess + k * d.f * d.g1, d.hess, k * d.f * d.g1)
    out["laplacian_condition"] = _scalar_defect(d.lap, d.n1 * k * d.f)
    out["f_sharp"] = d.f * d.lap + (d.n2 - 1) * d.norm2
    kind = pf.structure.kind
    if kind == "grw":
        fj = pf.f
        f, fd, fdd = d.f, float(fj.parts[1][0]), float(fj.parts[2][0, 0])
        out["grw_time_condition"] = _scalar_defect(fdd, -k * f)
        kf = f * fdd - fd * fd
        out["grw_fiber_curvature"] = _defect(d.R2 - kf * _model_down(d.g2), d.R2)
    elif kind == "ssst":
        out["ssst_hessian_condition"] = _defect(d.nabla_grad + k * d.f * np.eye(d.n1),
                                                d.nabla_grad)
        out["ssst_spatial_curvature"] = _defect(d.R1 - k * _model_down(d.g1), d.R1)
    return out


def flatness_flag(res: dict, kind: str, tol: float) -> bool:
    return all(res[k] < tol for k in FLATNESS_KEYS[kind])


def concircular_field_defect(m, field_components, point):
    """∇ζ - id, the mean dilation ρ̂ = tr(∇ζ)/n and the concircular defect.

    ``field_components`` are expression strings (or parsed expressions), one
    per coordinate, over the chart's coordinates and fields.
    """
    m = product_metric(m) if isinstance(m, WarpedSpec) else m
    if len(field_components) != m.dimension:
        raise ArgumentError(f"vector field needs {m.dimension} components")
    exprs = [parse_expr(c, m.symbols) if isinstance(c, str) else c for c in field_components]
    frame = build_frame(m, point)
    n = m.dimension
    env = {c: Jet3.variable(i, frame.point[i], n) for i, c in enumerate(m.coordinates)}
    env.update({k: eval_expr(e, env) for k, e in m.fields.items()})
    try:
        jets = [eval_expr(e, env) for e in exprs]
    except DomainError as err:
        raise err.with_context(point=frame.point) from None
    zeta = np.array([j.value for j in jets])
    dzeta = np.array([j.derivative_arrays()[1] for j in jets])   # [a, b] = ∂_b ζ^a
    cov = dzeta + np.einsum("abc,c->ab", frame.gamma.value, zeta)
    eye = np.eye(n)
    rho = float(np.trace(cov)) / n
    concurrent = Tensor(("u", DOWN), (cov - eye,), n, "none", max(1.0, float(np.max(np.abs(cov)))))
    return concurrent, rho, _defect(cov - rho * eye, cov)


def symmetry_residuals(spec, point=None) -> dict[str, float]:
    pf = _as_frames(spec, point)
    d = factor_data(pf)
    base, fiber = pf.base, pf.fiber
    out = {}
    out["base_nabla_R"] = residual(nabla(base, riemann(base)[1])) if d.n1 > 1 else 0.0
    out["fiber_nabla_R"] = residual(nabla(fiber, riemann(fiber)[1])) if d.n2 > 1 else 0.0

    fj = pf.f
    inv = Tensor((), (1.0 / fj.parts[0], -fj.parts[1] / fj.parts[0] ** 2), base.n)
    _, hess, _ = scalar_calculus(base, pf.structure.warping)
    Ften = contract(",ij->ij", inv, hess, variance=(DOWN, DOWN), order=1)
    out["parallel_F"] = residual(nabla(base, Ften))

    F = d.hess / d.f
    lhs = np.einsum("sayz,a->syz", d.R1op, d.grad)
    rhs = (np.einsum("zy,s->syz", F, d.grad)
           - np.einsum("z,sy->syz", d.df / d.f, d.nabla_grad))
    out["grad_f_relation"] = _defect(lhs - rhs, lhs, rhs)

    if d.n2 > 1:
        coeff = d.df * d.norm2 - d.f ** 2 * (F @ d.grad)
        G2 = _model_op(d.g2)   # [s, zeta, y, z]
        left = np.einsum("x,szyw->xszyw", d.df, d.R2op)
        right = np.einsum("x,szyw->xszyw", coeff, G2)
        out["fiber_relation"] = _defect(left - right, left, right)
        k2 = float(ricci_scalar(fiber)[1].value) / (d.n2 * (d.n2 - 1))
        out["fiber_constant_curvature"] = _defect(d.R2 - k2 * _model_down(d.g2), d.R2)
    else:
        out["fiber_relation"] = 0.0
        out["fiber_constant_curvature"] = 0.0
    out["ambient_nabla_C"] = residual(nabla(pf.ambient, _concircular_any_dim(pf.ambient)))
    return out


SYMMETRY_CONSEQUENCES = ("base_nabla_R", "fiber_nabla_R", "parallel_F", "grad_f_relation",
                         "fiber_relation")


def _div_C(frame: PointFrame) -> float:
    if frame.n < 2:
        return 0.0
    return residual(divergence_04(frame, _concircular_any_dim(frame)))


def divfree_residuals(spec, point=None) -> dict[str, float]:
    """Residuals for the divergence-free analysis.

    The mixed equation is reported in the form that follows from the
    product Ricci tensor, ``X(f)Ric(V,W) + f(X(f#) + f Ric(X, grad f)) g2(V,W)``,
    and again with the fiber Ricci tensor in place of the ambient one.
    """
    pf = _as_frames(spec, point)
    d = factor_data(pf)
    amb, base, fiber = pf.ambient, pf.base, pf.fiber
    B, Fi = list(pf.base_idx), list(pf.fiber_idx)
    out = {}
    out["ambient_div_C"] = _div_C(amb)
    out["ambient_codazzi"] = residual(codazzi_defect(amb))
    ric, tau = ricci_scalar(amb)
    dtau = tau.parts[1]
    out["ambient_grad_tau"] = residual(dtau, np.array([tau.value]))

    F = d.hess / d.f
    if d.n1 > 1:
        T1 = codazzi_defect(base).value
        Rg = np.einsum("xyaz,a->xyz", d.R1, d.grad)
        rhs = (d.n2 / d.f) * (np.einsum("y,xz->xyz", d.df, F) - np.einsum("x,yz->xyz", d.df, F)
                              - Rg)
        out["T1_formula"] = _defect(T1 - rhs, T1, rhs)
    else:
        out["T1_formula"] = 0.0

    # f# = f Δf + (n2 - 1) |grad f|^2 carried as a jet on the base
    grad, hess, lap = scalar_calculus(base, pf.structure.warping)
    fj = pf.f
    norm2 = contract("i,i->", partial(fj), grad, variance=(), order=1)
    fsharp = contract(",->", fj, lap, variance=(), order=1) + (d.n2 - 1) * norm2
    dfs = fsharp.parts[1]
    R = ric.value
    ric_vw = R[np.ix_(Fi, Fi)]
    ric_xg = R[np.ix_(B, B)] @ d.grad
    rhs = np.einsum("x,vw->xvw", d.f * (dfs + d.f * ric_xg), d.g2)
    amb_form = np.einsum("x,vw->xvw", d.df, ric_vw)
    out["mixed_equation"] = _defect(amb_form + rhs, amb_form, rhs)
    if d.n2 > 1:
        ric2 = ricci_scalar(fiber)[0].value
        fib_form = np.einsum("x,vw->xvw", d.df, ric2)
        out["mixed_equation_fiber_ric"] = _defect(fib_form + rhs, fib_form, rhs)
        out["fiber_codazzi"] = residual(codazzi_defect(fiber))
        out["fiber_div_C"] = _div_C(fiber)
        lam = float(ricci_scalar(fiber)[1].value) / d.n2
        out["fiber_einstein"] = _defect(ric2 - lam * d.g2, ric2)
        c = d.norm2
        out["fiber_einstein_factor_direct"] = _defect(ric2 - c * d.g2, ric2, c * d.g2)
        out["fiber_einstein_factor_sectional"] = _defect(ric2 - (d.n2 - 1) * c * d.g2, ric2,
                                                         (d.n2 - 1) * c * d.g2)
    else:
        out["mixed_equation_fiber_ric"] = out["mixed_equation"]
        for key in ("fiber_codazzi", "fiber_div_C", "fiber_einstein",
                    "fiber_einstein_factor_direct", "fiber_einstein_factor_sectional"):
            out[key] = 0.0
    out["base_div_C"] = _div_C(base) if d.n1 > 1 else 0.0
    out["grad_f_max"] = float(np.max(np.abs(d.grad)))
    out["hessian_max"] = float(np.max(np.abs(d.hess)))
    return out


# ---------------------------------------------------------------------------
# structure checks over a sample

@dataclass(frozen=True)
class Check:
    name: str
    premise: bool
    conclusion: bool

    @property
    def holds(self) -> bool:
        return (not self.premise) or self.conclusion


def structure_checks(kind: str, n1: int, n2: int, records: list[dict], tol: float) -> list[Check]:
    """Evaluate the stated implications over sampled per-point residual maps.

    Each record holds ``flatness``, ``symmetry`` and ``divfree`` maps plus the
    ambient ``concircular`` residual.  Global premises (``f`` constant,
    ``H^f = 0``) are decided from the maxima over the sample.
    """
    if not records:
        return []

    def mx(section, key):
        return max(r[section][key] for r in records)

    checks = []
    f_const = mx("divfree", "grad_f_max") < tol
    h_zero = mx("divfree", "hessian_max") < tol
    no_two = n1 != 2 and n2 != 2

    flat_pts = [flatness_flag(r["flatness"], kind, tol) for r in records]
    c_pts = [r["concircular"] < tol for r in records]
    checks.append(Check("flatness_conditions_match_pipeline", True, flat_pts == c_pts))
    all_flat = all(c_pts)
    checks.append(Check("flat_implies_hessian_type", all_flat,
                        max(mx("flatness", "hessian_type"), mx("flatness", "laplacian_condition"))
                        < max(tol, 1e-6)))

    sym = mx("symmetry", "ambient_nabla_C") < tol
    checks.append(Check("concircular_symmetry_implies_factor_conditions", sym,
                        all(mx("symmetry", k) < tol for k in SYMMETRY_CONSEQUENCES)))
    checks.append(Check("concircular_symmetry_nonconstant_f_implies_fiber_constant_curvature",
                        sym and not f_const and n2 > 1,
                        mx("symmetry", "fiber_constant_curvature") < tol))

    div_pts = [r["divfree"]["ambient_div_C"] < tol for r in records]
    harm_pts = [r["divfree"]["ambient_codazzi"] < tol and r["divfree"]["ambient_grad_tau"] < tol
                for r in records]
    checks.append(Check("div_C_iff_codazzi_and_constant_tau", True, div_pts == harm_pts))
    codazzi = mx("divfree", "ambient_codazzi") < tol
    checks.append(Check("codazzi_implies_T1_formula", codazzi, mx("divfree", "T1_formula") < tol))
    checks.append(Check("codazzi_implies_mixed_equation", codazzi,
                        mx("divfree", "mixed_equation") < tol))
    div = all(div_pts)
    checks.append(Check("div_C_implies_fiber_codazzi", div, mx("divfree", "fiber_codazzi") < tol))
    checks.append(Check("div_C_implies_f_constant_or_fiber_einstein", div,
                        f_const or mx("divfree", "fiber_einstein") < tol))
    checks.append(Check("f_constant_and_factor_div_C_imply_div_C",
                        f_const and no_two and mx("divfree", "base_div_C") < tol
                        and mx("divfree", "fiber_div_C") < tol, div))
    checks.append(Check("hessian_zero_and_einstein_factor_imply_div_C",
                        h_zero and no_two and mx("divfree", "base_div_C") < tol
                        and mx("divfree", "fiber_einstein_factor_sectional") < tol, div))
    if kind == "grw":
        checks.append(Check("grw_div_C_implies_fiber_div_C", div,
                            mx("divfree", "fiber_div_C") < tol))
        checks.append(Check("grw_div_C_and_linear_f_imply_fiber_einstein", div and h_zero,
                            mx("divfree", "fiber_einstein") < tol))
    if kind == "ssst" and h_zero and n1 != 2:
        checks.append(Check("ssst_hessian_zero_div_C_iff_spatial_div_C", True,
                            div == (mx("divfree", "base_div_C") < tol)))
    return checks
