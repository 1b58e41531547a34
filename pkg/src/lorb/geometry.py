"""Concrete plane-wave model space: group law, projection, action, Exp.

The transvection group is R^{2n-2} with coordinates (t, p, q, r), a
semidirect product of R acting on a weighted Heisenberg group.  Points of
the space M = G/K are written in global coordinates (t, x_1..x_{n-2}, v).

Every formula is sign-uniform in the weights through the helper pair
``curv_sin``/``curv_cos``: sin/cos of t*sqrt(lambda) for lambda > 0 and
sinh/cosh of t*sqrt(-lambda) for lambda < 0.  All core routines broadcast
over leading array axes so quadrature grids evaluate in single numpy calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import CWParams

__all__ = [
    "CWParams",
    "GroupElem",
    "PointM",
    "TangentM",
    "group_identity",
    "group_mul",
    "group_inverse",
    "project_pi",
    "section",
    "act",
    "symmetry",
    "metric",
    "exp_map",
    "exp_map_origin",
    "geodesic_ode",
    "exp_jacobian_det",
    "exp_group",
    "curv_sin",
    "curv_cos",
    "curv_sinc",
    "curv_dcos",
    "curv_dsinc",
]


# --- sign-uniform trig helpers ------------------------------------------------
# One point of truth for the convention: lambda > 0 is oscillatory, lambda < 0
# hyperbolic.  z is the bare argument (e.g. t or b0); the sqrt(|lambda|) factor
# is applied internally.

_SMALL = 1e-4  # below this |z*sqrt(|lam|)| the series forms take over


def curv_sin(lam: float, z):
    s = np.sqrt(abs(lam))
    return np.sin(z * s) if lam > 0 else np.sinh(z * s)


def curv_cos(lam: float, z):
    s = np.sqrt(abs(lam))
    return np.cos(z * s) if lam > 0 else np.cosh(z * s)


def curv_sinc(lam: float, z):
    """curv_sin(lam, z) / (z*sqrt(|lam|)), continuous value 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    s = np.sqrt(abs(lam))
    w = z * s
    sign = 1.0 if lam > 0 else -1.0
    w2 = w * w
    # degree-8 Taylor of sin(w)/w resp. sinh(w)/w
    series = 1.0 + w2 * (-sign / 6.0 + w2 * (1.0 / 120.0 + w2 * (-sign / 5040.0 + w2 / 362880.0)))
    small = np.abs(w) < _SMALL
    wsafe = np.where(small, 1.0, w)
    direct = np.where(small, 1.0, curv_sin(lam, z) / wsafe)
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def curv_dcos(lam: float, z):
    """(curv_cos(lam, z) - 1) / z^2, continuous value -lambda/2 at z = 0.

    Uses cos(w) - 1 = -2 sin^2(w/2) (and the sinh analogue), which is exact
    and cancellation-free, then divides by z^2 via the sinc form.
    """
    z = np.asarray(z, dtype=float)
    sign = 1.0 if lam > 0 else -1.0
    half = curv_sinc(lam, z / 2.0)
    out = -sign * abs(lam) / 2.0 * np.asarray(half) ** 2
    return out if np.ndim(out) else float(out)


def curv_dsinc(lam: float, z):
    """(curv_sinc(lam, z) - 1) / z^2, continuous value -lambda/6 at z = 0."""
    z = np.asarray(z, dtype=float)
    s = np.sqrt(abs(lam))
    w = z * s
    sign = 1.0 if lam > 0 else -1.0
    w2 = w * w
    series = abs(lam) * (
        -sign / 6.0 + w2 * (1.0 / 120.0 + w2 * (-sign / 5040.0 + w2 / 362880.0))
    )
    small = np.abs(w) < _SMALL
    zsafe = np.where(small, 1.0, z)
    direct = np.where(small, 0.0, (curv_sinc(lam, z) - 1.0) / (zsafe * zsafe))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


# --- data types ---------------------------------------------------------------

@dataclass(frozen=True)
class GroupElem:
    """Transvection-group element (t, p, q, r)."""

    space: CWParams
    t: float
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    r: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != (self.space.k,) or q.shape != (self.space.k,):
            raise ValueError(f"p and q must have length {self.space.k}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class PointM:
    """Point of M in global coordinates (t, x, v)."""

    space: CWParams
    t: float
    x: np.ndarray = field(repr=False)
    v: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (self.space.k,):
            raise ValueError(f"x must have length {self.space.k}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "v", float(self.v))

    def coords(self) -> np.ndarray:
        return np.concatenate([[self.t], self.x, [self.v]])

    @staticmethod
    def from_coords(space: CWParams, c) -> "PointM":
        c = np.asarray(c, dtype=float)
        return PointM(space, c[0], c[1:-1], c[-1])

    @staticmethod
    def origin(space: CWParams) -> "PointM":
        return PointM(space, 0.0, np.zeros(space.k), 0.0)


@dataclass(frozen=True)
class TangentM:
    """Tangent vector (b0, b, b') based at a point of M."""

    base: PointM
    b0: float
    b: np.ndarray = field(repr=False)
    bprime: float

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.base.space.k,):
            raise ValueError(f"b must have length {self.base.space.k}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b0", float(self.b0))
        object.__setattr__(self, "bprime", float(self.bprime))


# --- array-level core ----------------------------------------------------------
# Internal functions work on raw arrays shaped (..., k) for p/q/x/b and (...)
# for scalars, broadcasting freely; the dataclass API wraps them.

def _phi_t(lam: np.ndarray, t, p, q):
    """Automorphism phi_t of the weighted Heisenberg piece, per coordinate."""
    t = np.asarray(t, dtype=float)[..., None]
    c = np.empty(np.broadcast_shapes(t.shape, p.shape))
    s = np.empty_like(c)
    for i, l in enumerate(lam):
        c[..., i] = curv_cos(l, t[..., 0])
        s[..., i] = curv_sin(l, t[..., 0])
    root = np.sqrt(np.abs(lam))
    p_new = c * p - s / root * q
    q_new = (lam / root) * s * p + c * q
    return p_new, q_new


def _mul_arrays(lam, t1, p1, q1, r1, t2, p2, q2, r2):
    pp, qq = _phi_t(lam, t1, p2, q2)
    t = np.asarray(t1) + np.asarray(t2)
    p = p1 + pp
    q = q1 + qq
    r = r1 + r2 + 0.5 * np.sum(lam * (q1 * pp - qq * p1), axis=-1)
    return t, p, q, r


def _pi_arrays(lam, t, p, q, r):
    t = np.asarray(t, dtype=float)
    tb = t[..., None]
    root = np.sqrt(np.abs(lam))
    c = np.empty(np.broadcast_shapes(tb.shape, p.shape))
    s = np.empty_like(c)
    for i, l in enumerate(lam):
        c[..., i] = curv_cos(l, t)
        s[..., i] = curv_sin(l, t)
    x = (lam / root) * s * p - c * q
    v = r + np.sum(0.5 * lam * x * (p * c + q * s / root), axis=-1)
    return t, x, v


def _section_arrays(lam, t, x, v):
    """One right inverse of the projection: per coordinate use the p-channel
    when |curv_sin| >= |curv_cos| (ties included), else the q-channel."""
    t = np.asarray(t, dtype=float)
    root = np.sqrt(np.abs(lam))
    shape = np.broadcast_shapes(t[..., None].shape, x.shape)
    c = np.empty(shape)
    s = np.empty_like(c)
    for i, l in enumerate(lam):
        c[..., i] = curv_cos(l, t)
        s[..., i] = curv_sin(l, t)
    use_p = np.abs(s) >= np.abs(c)
    csafe = np.where(use_p, 1.0, c)
    ssafe = np.where(use_p, s, 1.0)
    p = np.where(use_p, x * root / (lam * ssafe), 0.0)
    q = np.where(use_p, 0.0, -x / csafe)
    r = v - np.sum(0.5 * lam * x * (p * c + q * s / root), axis=-1)
    return t, p, q, np.asarray(r)


def _act_arrays(lam, g, t, x, v):
    """Action of a fixed group element on arrays of points."""
    st, sp, sq, sr = _section_arrays(lam, t, x, v)
    gt, gp, gq, gr = g
    mt, mp, mq, mr = _mul_arrays(lam, gt, gp, gq, gr, st, sp, sq, sr)
    return _pi_arrays(lam, mt, mp, mq, mr)


def _exp_arrays(lam, t0, x0, v0, b0, b, bprime):
    """Exponential map, stable through b0 = 0.

    The closed form with b0 != 0 rearranges exactly into

        t = t0 + b0
        x_i = sinc_i(b0) b_i + cos_i(b0) x0_i
        v = v0 + b' + sum_i 2 b0 [ dsinc_i(2 b0) (b_i^2 - b0^2 lam_i x0_i^2)
                                   + dcos_i(2 b0) b_i x0_i ]

    whose limit at b0 = 0 is the pure translation branch.
    """
    b0 = np.asarray(b0, dtype=float)
    t = t0 + b0
    b0b = b0[..., None]
    shape = np.broadcast_shapes(b0b.shape, b.shape, np.shape(x0))
    x = np.empty(shape)
    vsum = 0.0
    for i, l in enumerate(lam):
        sinc = curv_sinc(l, b0)
        cosf = curv_cos(l, b0)
        x[..., i] = sinc * b[..., i] + cosf * (x0[..., i] if np.ndim(x0) else x0)
        x0i = x0[..., i] if np.ndim(x0) else x0
        vsum = vsum + 2.0 * b0 * (
            curv_dsinc(l, 2.0 * b0) * (b[..., i] ** 2 - b0 ** 2 * l * x0i ** 2)
            + curv_dcos(l, 2.0 * b0) * b[..., i] * x0i
        )
    v = v0 + bprime + vsum
    return t, x, v


def _exp0_arrays(lam, b0, b, bprime):
    return _exp_arrays(lam, 0.0, np.zeros(len(lam)), 0.0, b0, b, bprime)


# --- public wrappers -------------------------------------------------------------

def group_identity(space: CWParams) -> GroupElem:
    return GroupElem(space, 0.0, np.zeros(space.k), np.zeros(space.k), 0.0)


def group_mul(g: GroupElem, h: GroupElem) -> GroupElem:
    if g.space.lambdas != h.space.lambdas:
        raise ValueError("group elements over different weight tuples")
    lam = g.space.lam()
    t, p, q, r = _mul_arrays(lam, g.t, g.p, g.q, g.r, h.t, h.p, h.q, h.r)
    return GroupElem(g.space, float(t), p, q, float(r))


def group_inverse(g: GroupElem) -> GroupElem:
    lam = g.space.lam()
    p, q = _phi_t(lam, -g.t, -g.p[None, :], -g.q[None, :])
    return GroupElem(g.space, -g.t, p[0], q[0], -g.r)


def project_pi(g: GroupElem) -> PointM:
    lam = g.space.lam()
    t, x, v = _pi_arrays(lam, g.t, g.p, g.q, g.r)
    return PointM(g.space, float(t), x, float(v))


def section(m: PointM) -> GroupElem:
    """A right inverse of the projection (not continuous across channel
    switches; only pi(section(m)) = m is contractual)."""
    lam = m.space.lam()
    t, p, q, r = _section_arrays(lam, m.t, m.x, m.v)
    return GroupElem(m.space, float(t), p, q, float(r))


def act(g: GroupElem, m: PointM) -> PointM:
    """Left action of the transvection group on M."""
    lam = g.space.lam()
    t, x, v = _act_arrays(lam, (g.t, g.p, g.q, g.r), m.t, m.x, m.v)
    return PointM(g.space, float(t), x, float(v))


def symmetry(y: PointM, m: PointM) -> PointM:
    """Point symmetry centered at y, via the group involution
    (t, p, q, r) -> (-t, p, -q, -r)."""
    g = section(y)
    h = section(m)
    rel = group_mul(group_inverse(g), h)
    flipped = GroupElem(y.space, -rel.t, rel.p, -rel.q, -rel.r)
    return project_pi(group_mul(g, flipped))


def metric(m: PointM, u, w) -> float:
    """Lorentzian metric at m applied to tangent components (a0, a, a')."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    lam = m.space.lam()
    coef = float(np.dot(lam, m.x * m.x))
    return float(
        coef * u[0] * w[0] + u[0] * w[-1] + u[-1] * w[0] - np.dot(u[1:-1], w[1:-1])
    )


def exp_map(X: TangentM) -> PointM:
    """Geodesic exponential at the base point of X (closed form)."""
    space = X.base.space
    lam = space.lam()
    t, x, v = _exp_arrays(
        lam, X.base.t, X.base.x, X.base.v, X.b0, X.b[None, :], X.bprime
    )
    return PointM(space, float(t), x[0], float(v))


def exp_map_origin(space: CWParams, b0: float, b, bprime: float) -> PointM:
    X = TangentM(PointM.origin(space), b0, np.asarray(b, dtype=float), bprime)
    return exp_map(X)


def geodesic_ode(X: TangentM, steps: int = 2048) -> PointM:
    """Endpoint at s=1 of the geodesic with initial data X, by classical
    fixed-step 4th-order integration of

        t'' = 0,   x_i'' = -lam_i x_i (t')^2,   v'' = -2 sum lam_i x_i t' x_i'.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    space = X.base.space
    lam = space.lam()
    k = space.k

    def rhs(state):
        pos = state[: k + 2]
        vel = state[k + 2 :]
        acc = np.empty(k + 2)
        tdot = vel[0]
        xs = pos[1 : 1 + k]
        xdots = vel[1 : 1 + k]
        acc[0] = 0.0
        acc[1 : 1 + k] = -lam * xs * tdot ** 2
        acc[k + 1] = -2.0 * float(np.dot(lam, xs * tdot * xdots))
        return np.concatenate([vel, acc])

    state = np.concatenate(
        [[X.base.t], X.base.x, [X.base.v], [X.b0], X.b, [X.bprime]]
    )
    h = 1.0 / steps
    for _ in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return PointM(space, state[0], state[1 : 1 + k], state[k + 1])


def exp_jacobian_det(X: TangentM) -> float:
    """|det d(Exp_y)| at X: product of |sinc_i(b0)| (1 when b0 = 0)."""
    lam = X.base.space.lam()
    det = 1.0
    for l in lam:
        det *= abs(float(curv_sinc(l, X.b0)))
    return det


def exp_group(space: CWParams, b0: float, b, bprime: float) -> GroupElem:
    """Group exponential of the p-part element b0*U + sum b_i W_i + b'*Z.

    Closed form of the one-parameter subgroup; satisfies
    pi(exp_group(X)) = Exp_origin(X) exactly.
    """
    lam = space.lam()
    b = np.asarray(b, dtype=float)
    p = np.empty(space.k)
    q = np.empty(space.k)
    rsum = float(bprime)
    for i, l in enumerate(lam):
        p[i] = -b[i] * b0 * float(curv_dcos(l, b0)) / l
        q[i] = -b[i] * float(curv_sinc(l, b0))
        rsum += 0.5 * b[i] ** 2 * b0 * float(curv_dsinc(l, b0))
    return GroupElem(space, b0, p, q, rsum)
