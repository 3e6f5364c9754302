"""Pointwise curvature objects of a pseudo-Riemannian chart.

Sign convention: the curvature operator is ``R(X,Y)Z = ∇_Y∇_X Z - ∇_X∇_Y Z
+ ∇_[X,Y] Z`` and ``R(X,Y,Z,V) = g(R(X,Y)Z, V)``.  With it a space of
constant curvature ``k`` has ``R_ijkl = k (g_ik g_jl - g_jk g_il)``, Ricci is
``Ric_jl = g^ik R_ijkl`` and ``tau = g^jl Ric_jl``.

Operator-valued tensors (variance ``u,d,d,d``) store ``A[l, i, j, k]``, the
``l``-th component of the vector ``A(∂_i, ∂_j) ∂_k``.

Jet budget: g is carried to order 3, Christoffel symbols to order 2, every
curvature tensor to order 1 and covariant derivatives of curvature to order 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dsl import Expr, eval_expr
from .errors import (ArgumentError, DegenerateMetricError, DomainError, JetOrderError,
                     UnsupportedDimensionError)
from .jets import Jet3
from .manifest import Manifest
from .tensor import DOWN, UP, Tensor, constant_tensor, contract, inverse_matrix, partial, residual

DET_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PointFrame:
    point: np.ndarray
    n: int
    g: Tensor
    g_inv: Tensor
    gamma: Tensor
    det_g: float
    fields: Mapping[str, Tensor]
    coordinates: tuple[str, ...]
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def memo(self, key, fn):
        try:
            return self._memo[key]
        except KeyError:
            val = self._memo[key] = fn()
            return val


def _scalar_tensor(jet: Jet3) -> Tensor:
    return Tensor((), tuple(jet.derivative_arrays()), jet.dim)


def frame_from_exprs(coordinates: Sequence[str], point, active: Sequence[int],
                     metric: Sequence[Sequence[Expr]], fields: Mapping[str, Expr]) -> PointFrame:
    """Build a frame seeding only the ``active`` coordinates as jet variables.

    ``metric`` is the block of component expressions over the active slots;
    inactive coordinates enter as constants.  This is how factor frames of a
    product chart are obtained without touching the product connection.
    """
    point = np.asarray(point, dtype=float)
    dim = len(active)
    env: dict[str, Jet3] = {}
    slot = {c: k for k, c in enumerate(active)}
    for i, name in enumerate(coordinates):
        if i in slot:
            env[name] = Jet3.variable(slot[i], point[i], dim)
        else:
            env[name] = Jet3.constant(point[i], dim)
    try:
        field_jets = {k: eval_expr(e, env) for k, e in fields.items()}
        env.update(field_jets)
        comps = [[None] * dim for _ in range(dim)]
        for a in range(dim):
            for b in range(a, dim):
                comps[a][b] = comps[b][a] = eval_expr(metric[a][b], env)
    except DomainError as err:
        raise err.with_context(point=point) from None

    parts = []
    for k in range(4):
        arr = np.empty((dim, dim) + (dim,) * k)
        for a in range(dim):
            for b in range(dim):
                arr[a, b] = comps[a][b].derivative_arrays()[k]
        parts.append(arr)
    g = Tensor((DOWN, DOWN), tuple(parts), dim, "sym(0,1)")
    det = float(np.linalg.det(parts[0]))
    if not abs(det) > DET_FLOOR:
        raise DegenerateMetricError(f"metric is degenerate (det = {det:.3e})",
                                    func="det", value=det, point=point)
    g_inv = inverse_matrix(g)
    dg = partial(g)   # dg[m, i, j] = ∂_m g_ij
    s = (contract("bdc->dbc", dg, variance=(DOWN,) * 3)
         + contract("cdb->dbc", dg, variance=(DOWN,) * 3)
         - contract("dbc->dbc", dg, variance=(DOWN,) * 3))
    gamma = 0.5 * contract("ad,dbc->abc", g_inv, s, variance=(UP, DOWN, DOWN),
                           symmetry="sym(1,2)")
    return PointFrame(point=point, n=dim, g=g, g_inv=g_inv, gamma=gamma, det_g=det,
                      fields={k: _scalar_tensor(v) for k, v in field_jets.items()},
                      coordinates=tuple(coordinates[i] for i in active))


def build_frame(m: Manifest, point, *, check_box: bool = True) -> PointFrame:
    point = np.asarray(point, dtype=float)
    if point.shape != (m.dimension,):
        raise ArgumentError(f"point must have {m.dimension} coordinates")
    if check_box:
        for x, (lo, hi), c in zip(point, m.sample_box, m.coordinates):
            if not lo <= x <= hi:
                raise ArgumentError(f"coordinate {c}={x} outside sample box [{lo}, {hi}]")
    return frame_from_exprs(m.coordinates, point, range(m.dimension), m.metric, m.fields)


# ---------------------------------------------------------------------------
# curvature

def _riemann(frame: PointFrame):
    gam = frame.gamma
    n = frame.n
    v4 = (UP, DOWN, DOWN, DOWN)
    dgam = partial(gam)   # dgam[m, a, b, c] = ∂_m Γ^a_bc
    # textbook R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb
    std = (contract("cadb->abcd", dgam, variance=v4)
           - contract("dacb->abcd", dgam, variance=v4)
           + contract("ace,edb->abcd", gam, gam, variance=v4, order=1)
           - contract("ade,ecb->abcd", gam, gam, variance=v4, order=1))
    down = contract("ae,ebcd->abcd", frame.g, std, variance=(DOWN,) * 4, order=1,
                    symmetry="riemann")
    op = contract("la,ijka->lijk", frame.g_inv, down, variance=v4, order=1)
    return op, down


def riemann(frame: PointFrame) -> tuple[Tensor, Tensor]:
    """Curvature operator (u,d,d,d) and fully covariant Riemann tensor."""
    return frame.memo("riemann", lambda: _riemann(frame))


def ricci_scalar(frame: PointFrame) -> tuple[Tensor, Tensor]:
    def compute():
        _, down = riemann(frame)
        ric = contract("ik,ijkl->jl", frame.g_inv, down, variance=(DOWN, DOWN), order=1,
                       symmetry="sym(0,1)")
        tau = contract("jl,jl->", frame.g_inv, ric, variance=(), order=1)
        return ric, tau
    return frame.memo("ricci", compute)


def _check_symmetric(t: Tensor, what: str):
    v = t.value
    if t.rank != 2 or np.max(np.abs(v - v.T), initial=0.0) > 1e-10 * max(1.0, t.max_abs()):
        raise ArgumentError(f"{what} must be a symmetric 2-tensor")


def kulkarni_nomizu(h: Tensor, k: Tensor, order: int | None = None) -> Tensor:
    """(h∧k)_ijkl = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il."""
    _check_symmetric(h, "h")
    _check_symmetric(k, "k")
    v = (DOWN,) * 4
    out = (contract("ik,jl->ijkl", h, k, variance=v, order=order)
           + contract("jl,ik->ijkl", h, k, variance=v, order=order)
           - contract("il,jk->ijkl", h, k, variance=v, order=order)
           - contract("jk,il->ijkl", h, k, variance=v, order=order))
    return out.with_symmetry("riemann")


def model_tensor(frame: PointFrame, order: int = 1) -> Tensor:
    """G = ½ g∧g, i.e. G_ijkl = g_ik g_jl - g_jk g_il."""
    return frame.memo(("G", order), lambda: 0.5 * kulkarni_nomizu(frame.g, frame.g, order=order))


def raise_last(frame: PointFrame, t: Tensor) -> Tensor:
    """Operator form A[l,i,j,k] = g^la t_ijka of a (0,4) tensor."""
    return contract("la,ijka->lijk", frame.g_inv, t, variance=(UP, DOWN, DOWN, DOWN),
                    order=min(t.order, frame.g_inv.order))


def _concircular_any_dim(frame: PointFrame) -> Tensor:
    def compute():
        n = frame.n
        _, down = riemann(frame)
        _, tau = ricci_scalar(frame)
        G = model_tensor(frame)
        coeff = contract(",ijkl->ijkl", tau, G, variance=(DOWN,) * 4, order=1)
        return (down - (1.0 / (n * (n - 1))) * coeff).with_symmetry("riemann")
    return frame.memo("concircular", compute)


def concircular(frame: PointFrame) -> Tensor:
    """C_ijkl = R_ijkl - tau/(n(n-1)) (g_ik g_jl - g_jk g_il)."""
    if frame.n < 3:
        raise UnsupportedDimensionError(f"concircular tensor needs n >= 3, got {frame.n}")
    return _concircular_any_dim(frame)


def k_tensor(frame: PointFrame, a0: float, a1: float, a2: float, a3: float):
    """K_ijkl = a0 R_ijkl + a1 g_ij g_kl + a2 g_ik g_jl + a3 g_jk g_il and its contraction."""
    if a0 == 0:
        raise ArgumentError("a0 must be non-zero")
    _, down = riemann(frame)
    v = (DOWN,) * 4
    g = frame.g
    K = (a0 * down
         + a1 * contract("ij,kl->ijkl", g, g, variance=v, order=1)
         + a2 * contract("ik,jl->ijkl", g, g, variance=v, order=1)
         + a3 * contract("jk,il->ijkl", g, g, variance=v, order=1))
    K2 = contract("ik,ijkl->jl", frame.g_inv, K, variance=(DOWN, DOWN), order=1)
    return K, K2


def scalar_calculus(frame: PointFrame, name: str):
    """Gradient (order 2), Hessian (order 1) and Laplacian (order 1) of a field."""
    if name not in frame.fields:
        raise ArgumentError(f"unknown field {name!r}")

    def compute():
        f = frame.fields[name]
        df = partial(f)
        grad = contract("ij,j->i", frame.g_inv, df, variance=(UP,))
        hess = (partial(df) - contract("lmj,l->mj", frame.gamma, df, variance=(DOWN, DOWN),
                                       order=min(frame.gamma.order, df.order)))
        hess = hess.truncate(1).with_symmetry("sym(0,1)")
        lap = contract("jk,jk->", frame.g_inv, hess, variance=(), order=1)
        return grad, hess, lap
    return frame.memo(("scalar", name), compute)


def nabla(frame: PointFrame, t: Tensor) -> Tensor:
    """Levi-Civita covariant derivative; the derivative slot comes first."""
    if t.order < 1:
        raise JetOrderError("covariant derivative needs components with jet order >= 1")
    letters = "abcdefgh"[: t.rank]
    out_order = min(t.order - 1, frame.gamma.order)
    d = partial(t).truncate(out_order)
    total = d
    scale = d.max_abs()
    variance = (DOWN,) + t.variance
    for s, kind in enumerate(t.variance):
        free = letters[s]
        swapped = letters[:s] + "z" + letters[s + 1:]
        if kind == DOWN:
            term = contract(f"zm{free},{swapped}->m{letters}", frame.gamma, t, variance=variance,
                            order=out_order)
            total = total - term
        else:
            term = contract(f"{free}mz,{swapped}->m{letters}", frame.gamma, t, variance=variance,
                            order=out_order)
            total = total + term
        scale = max(scale, term.max_abs())
    return Tensor(variance, total.parts, frame.n, "none", scale)


def divergence_04(frame: PointFrame, t: Tensor) -> Tensor:
    """(div t)_jkl = g^im (∇t)_m;ijkl."""
    if t.rank != 4 or any(v != DOWN for v in t.variance):
        raise ArgumentError("divergence_04 needs a (0,4) tensor")
    dt = nabla(frame, t)
    div = contract("im,mijkl->jkl", frame.g_inv, dt, variance=(DOWN,) * 3, order=0)
    return Tensor(div.variance, div.parts, frame.n, "none", max(dt.scale, div.max_abs()))


def nabla_ricci(frame: PointFrame) -> Tensor:
    return frame.memo("nabla_ric", lambda: nabla(frame, ricci_scalar(frame)[0]))


def bianchi_contraction(frame: PointFrame) -> Tensor:
    """∇_k Ric_jl - ∇_l Ric_jk, indexed [j, k, l]."""
    d = nabla_ricci(frame)
    v = (DOWN,) * 3
    return contract("kjl->jkl", d, variance=v) - contract("ljk->jkl", d, variance=v)


def codazzi_defect(frame: PointFrame) -> Tensor:
    """T(X,Y,Z) = (∇_X Ric)(Y,Z) - (∇_Y Ric)(X,Z)."""
    def compute():
        d = nabla_ricci(frame)
        v = (DOWN,) * 3
        t = contract("xyz->xyz", d, variance=v) - contract("yxz->xyz", d, variance=v)
        return Tensor(t.variance, t.parts, t.n, "antisym(0,1)", max(t.scale, d.scale))
    return frame.memo("codazzi", compute)


def derivation_action(op: Tensor, t: Tensor) -> Tensor:
    """(A(X,Y)·t)(Z1..Z4) = -Σ t(.., A(X,Y)Z_i, ..), indexed [x, y, z1..z4]."""
    if op.variance != (UP, DOWN, DOWN, DOWN):
        raise ArgumentError("derivation operator must have variance (u,d,d,d)")
    if t.rank != 4 or any(v != DOWN for v in t.variance):
        raise ArgumentError("derivation action applies to (0,4) tensors")
    A, T = op.value, t.value
    terms = (
        np.einsum("lxya,lbcd->xyabcd", A, T),
        np.einsum("lxyb,alcd->xyabcd", A, T),
        np.einsum("lxyc,abld->xyabcd", A, T),
        np.einsum("lxyd,abcl->xyabcd", A, T),
    )
    total = -(terms[0] + terms[1] + terms[2] + terms[3])
    scale = max(float(np.max(np.abs(x))) if x.size else 0.0 for x in terms)
    return Tensor((DOWN,) * 6, (total,), op.n, "none", scale)


def model_operator(frame: PointFrame) -> Tensor:
    """G(X,Y)Z = g(X,Z)Y - g(Y,Z)X as an operator tensor."""
    def compute():
        g = frame.g.value
        eye = np.eye(frame.n)
        val = np.einsum("xk,ly->lxyk", g, eye) - np.einsum("yk,lx->lxyk", g, eye)
        return Tensor((UP, DOWN, DOWN, DOWN), (val,), frame.n)
    return frame.memo("G_op", compute)


def _tensor_from(value: np.ndarray, n: int) -> Tensor:
    return Tensor((DOWN,) * value.ndim, (value,), n)


def identity_defects(frame: PointFrame) -> dict[str, float]:
    """Normalised defects of the metric-independent derivation identities."""
    def compute():
        n = frame.n
        kappa = float(ricci_scalar(frame)[1].value) / (n * (n - 1))
        Rop, Rd = riemann(frame)
        C = concircular(frame)
        Cop = raise_last(frame, C)
        G = model_tensor(frame)
        Gop = model_operator(frame)
        RR = derivation_action(Rop, Rd)
        RC = derivation_action(Rop, C)
        CR = derivation_action(Cop, Rd)
        CC = derivation_action(Cop, C)
        GR = derivation_action(Gop, Rd)
        RG = derivation_action(Rop, G)
        pseudo = RR.value - kappa * GR.value
        return {
            "R.C-R.R": residual(RC.value - RR.value, RC, RR),
            "C.R-pseudo": residual(CR.value - pseudo, CR, RR, kappa * GR.value),
            "C.C-pseudo": residual(CC.value - pseudo, CC, RR, kappa * GR.value),
            "R.G": residual(RG),
        }
    return frame.memo("identity_defects", compute)


def stress_energy(frame: PointFrame, cosmological: float, k: float, *, warn: bool = True):
    """T_ij = (Ric_ij - tau/2 g_ij + Λ g_ij)/k and the size of ∇_i T^i_j."""
    if k == 0:
        raise ArgumentError("coupling constant k must be non-zero")
    if warn and frame.n != 4:
        warnings.warn(f"Einstein equation evaluated in dimension {frame.n}", stacklevel=2)
    ric, tau = ricci_scalar(frame)
    g = frame.g.truncate(1)
    tg = contract(",ij->ij", tau, g, variance=(DOWN, DOWN))
    T = (1.0 / k) * (ric - 0.5 * tg + cosmological * g)
    dT = nabla(frame, T)
    div = contract("mi,mij->j", frame.g_inv, dT, variance=(DOWN,), order=0)
    return T, residual(div, dT)


def k_divergence_identity(frame: PointFrame, a0: float, a1: float, a2: float, a3: float):
    """Both sides of ∇_i K^i_j = (a0/2) ∇_j tau and their normalised gap."""
    _, K2 = k_tensor(frame, a0, a1, a2, a3)
    dK = nabla(frame, K2)
    lhs = np.einsum("mi,mij->j", frame.g_inv.value, dK.value)
    tau = ricci_scalar(frame)[1]
    rhs = 0.5 * a0 * tau.parts[1]
    return lhs, rhs, residual(lhs - rhs, lhs, rhs, dK)


def kretschmann(frame: PointFrame) -> float:
    _, down = riemann(frame)
    gi = frame.g_inv.value
    up = np.einsum("ai,bj,ck,dl,ijkl->abcd", gi, gi, gi, gi, down.value, optimize=True)
    return float(np.einsum("abcd,abcd->", up, down.value))


def metric_compatibility(frame: PointFrame) -> float:
    return residual(nabla(frame, frame.g))
