"""Isotropy-orbit classification and numerical orbital integrals.

The orbital integral of a compactly supported f at y over the orbit labeled
(r, b0) reduces to an (n-2)-dimensional integral

    (1/|b0|^(n-2)) int f( g . Exp_0(b0, b, (+-r^2 + |b|^2)/(2 b0)) ) db

with g any group element projecting to y.  Everything here works in
s = r^2, in which the integral is a smooth function through s = 0.

Two structural facts drive the numerics:

* at fixed (y, b0) the image point's x-coordinates are affine in the
  corresponding b-coordinate alone, so an exact truncation box outside
  which the integrand vanishes comes from two evaluations per axis;
* s enters only as the additive offset sign*s/(2 b0) on the image point's
  v-coordinate, so a whole s-grid shares one geometry evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import CWParams
from .geometry import (
    GroupElem,
    PointM,
    _act_arrays,
    _exp0_arrays,
    _mul_arrays,
    curv_dsinc,
    curv_sinc,
    group_identity,
    section,
)
from .riesz import gl_nodes
from .util import pmap

__all__ = [
    "QuadratureConfig",
    "OrbitClass",
    "OrbitalCurve",
    "b0_admissible",
    "check_admissible",
    "classify_orbit",
    "adjoint_k_action",
    "orbital_integral",
    "orbital_integral_k_oracle",
    "sample_orbital_curve",
    "OrbitalEvaluator",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for the tensorized Gauss-Legendre quadrature."""

    rel_tol: float = 1e-7
    abs_tol: float = 1e-13
    base_nodes: int = 12
    max_refine: int = 5
    b0_clearance: float = 1e-3
    max_points: int = 4_000_000
    threads: int = 1


@dataclass(frozen=True)
class OrbitClass:
    """One isotropy orbit in the tangent space at the base point."""

    kind: str  # 'surface' (two-parameter), 'line' (affine), 'point' (fixed)
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[np.ndarray] = None
    betaprime: Optional[float] = None


@dataclass(frozen=True)
class OrbitalCurve:
    """Sampled orbital-integral values on a (b0, s) grid, b0 outer."""

    space: CWParams
    y: PointM
    b0_grid: np.ndarray
    s_grid: np.ndarray
    sign: int
    values: np.ndarray = field(repr=False)
    quad_error: np.ndarray = field(repr=False)


def _parse_sign(sign) -> int:
    if sign in (1, +1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def b0_admissible(space: CWParams, b0: float, clearance: float = 1e-3) -> bool:
    """b0 is admissible when nonzero and, for every positive weight,
    b0*sqrt(lam) keeps `clearance` away from nonzero multiples of pi."""
    if abs(b0) < clearance:
        return False
    for lam in space.lambdas:
        if lam > 0:
            w = abs(b0) * math.sqrt(lam)
            nearest = round(w / math.pi)
            dist = abs(w - nearest * math.pi) if nearest != 0 else math.pi - w
            if dist < clearance:
                return False
    return True


def check_admissible(space: CWParams, b0: float, clearance: float = 1e-3):
    if not b0_admissible(space, b0, clearance):
        raise ValueError(
            f"b0={b0} is inadmissible (too close to 0 or to pi*Z_0/sqrt(lambda_i))"
        )


def classify_orbit(space: CWParams, b0: float, b, bprime: float) -> OrbitClass:
    """Sort a tangent vector at the base point into its adjoint-orbit class."""
    b = np.asarray(b, dtype=float)
    if b0 != 0.0:
        return OrbitClass(
            kind="surface", beta=float(b0), alpha=float(2.0 * b0 * bprime - np.dot(b, b))
        )
    if np.any(b != 0.0):
        return OrbitClass(kind="line", gamma=b.copy())
    return OrbitClass(kind="point", betaprime=float(bprime))


def adjoint_k_action(space: CWParams, p, X):
    """Isotropy adjoint action on a tangent vector X = (b0, b, b').

    Preserves b0 and the orbit invariant 2 b0 b' - |b|^2.
    """
    p = np.asarray(p, dtype=float)
    b0, b, bprime = X
    b = np.asarray(b, dtype=float)
    lam = space.lam()
    b_new = b - lam * p * b0
    bp_new = bprime + 0.5 * b0 * float(np.sum(lam ** 2 * p ** 2)) - float(np.sum(lam * p * b))
    return (b0, b_new, bp_new)


def _require_supported(f):
    radius = getattr(f, "support_radius", None)
    if radius is None or not (radius > 0):
        raise ValueError("f must declare a positive support_radius")
    return float(radius)


class _BatchedIntegral:
    """Common engine: integrate f(image(grid)) over an axis-aligned box,
    where image = (t const, affine x per axis, base v + sign*s/(2 b0)).
    """

    def __init__(self, space: CWParams, f, sign: int, b0: float, cfg: QuadratureConfig,
                 image_fn, weight: float, dim: int):
        self.space = space
        self.f = f
        self.sign = sign
        self.b0 = b0
        self.cfg = cfg
        self.image_fn = image_fn  # (pts (N,k)) -> (t, x (N,k), v (N,))
        self.weight = weight
        self.dim = dim
        self.radius = _require_supported(f)
        self.box = self._truncation_box()

    def _truncation_box(self):
        k = self.space.k
        R = self.radius
        zero = np.zeros((1, k))
        t0, x0, v0 = self.image_fn(zero)
        if abs(float(np.asarray(t0).ravel()[0])) > R:
            return None  # t-slice misses the support entirely
        lo = np.empty(k)
        hi = np.empty(k)
        for i in range(k):
            e = np.zeros((1, k))
            e[0, i] = 1.0
            _, x1, _ = self.image_fn(e)
            c = float(x0[0, i])
            a = float(x1[0, i]) - c
            if a == 0.0:
                raise ArithmeticError(
                    f"degenerate image slope on axis {i}; b0 too close to the excluded set"
                )
            e2 = np.zeros((1, k))
            e2[0, i] = 2.0
            _, x2, _ = self.image_fn(e2)
            drift = abs(float(x2[0, i]) - (c + 2.0 * a))
            if drift > 1e-8 * (abs(a) + abs(c) + 1.0):
                raise AssertionError("image x-coordinate is not affine along its axis")
            ends = sorted(((-R - c) / a, (R - c) / a))
            if ends[0] >= ends[1]:
                return None
            # slight padding: the integrand then vanishes identically at the
            # box boundary, which also makes trapezoid rules superalgebraic
            mid = 0.5 * (ends[0] + ends[1])
            half = 0.5 * (ends[1] - ends[0]) * 1.02
            lo[i], hi[i] = mid - half, mid + half
        return lo, hi

    def _grid(self, panels: int):
        lo, hi = self.box
        xs, ws = gl_nodes(self.cfg.base_nodes)
        axes_pts = []
        axes_wts = []
        for i in range(self.space.k):
            edges = np.linspace(lo[i], hi[i], panels + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * (edges[1:] - edges[:-1])
            pts = (mid[:, None] + half[:, None] * xs[None, :]).ravel()
            wts = (half[:, None] * ws[None, :]).ravel()
            axes_pts.append(pts)
            axes_wts.append(wts)
        mesh = np.meshgrid(*axes_pts, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*axes_wts, indexing="ij")
        wts = np.ones(grid.shape[0])
        for wm in wmesh:
            wts = wts * wm.ravel()
        return grid, wts

    def _values_at_level(self, s_arr: np.ndarray, panels: int) -> np.ndarray:
        grid, wts = self._grid(panels)
        t_im, x_im, v_im = self.image_fn(grid)
        t_col = np.broadcast_to(np.asarray(t_im, dtype=float), (grid.shape[0],))
        pts = np.empty((grid.shape[0], self.dim))
        pts[:, 0] = t_col
        pts[:, 1:-1] = x_im
        offset = self.sign / (2.0 * self.b0)
        out = np.empty(len(s_arr))
        for j, s in enumerate(s_arr):
            pts[:, -1] = v_im + offset * s
            out[j] = float(np.dot(wts, self.f(pts)))
        return self.weight * out

    def values(self, s_arr) -> tuple[np.ndarray, np.ndarray]:
        """Batched values and error estimates over an s-grid."""
        s_arr = np.asarray(s_arr, dtype=float)
        if self.box is None:
            z = np.zeros(s_arr.shape)
            return z, z.copy()
        prev = None
        err = np.full(s_arr.shape, np.inf)
        for level in range(0, self.cfg.max_refine + 1):
            panels = 2 ** level
            npts = (panels * self.cfg.base_nodes) ** self.space.k
            if prev is not None and npts > self.cfg.max_points:
                break
            cur = self._values_at_level(s_arr, panels)
            if prev is not None:
                err = np.abs(cur - prev)
                scale = np.max(np.abs(cur)) + self.cfg.abs_tol
                prev = cur
                if np.max(err) <= self.cfg.rel_tol * scale + self.cfg.abs_tol:
                    break
            else:
                prev = cur
        return prev, err

    def values_trapezoid(self, s_arr, nodes_per_axis: int) -> np.ndarray:
        """Uniform-trapezoid evaluation on the same box (oracle path)."""
        s_arr = np.asarray(s_arr, dtype=float)
        if self.box is None:
            return np.zeros(s_arr.shape)
        lo, hi = self.box
        axes = [np.linspace(lo[i], hi[i], nodes_per_axis) for i in range(self.space.k)]
        steps = [(hi[i] - lo[i]) / (nodes_per_axis - 1) for i in range(self.space.k)]
        wts1d = []
        for i in range(self.space.k):
            w = np.full(nodes_per_axis, steps[i])
            w[0] *= 0.5
            w[-1] *= 0.5
            wts1d.append(w)
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*wts1d, indexing="ij")
        wts = np.ones(grid.shape[0])
        for wm in wmesh:
            wts = wts * wm.ravel()
        t_im, x_im, v_im = self.image_fn(grid)
        pts = np.empty((grid.shape[0], self.dim))
        pts[:, 0] = np.broadcast_to(np.asarray(t_im, dtype=float), (grid.shape[0],))
        pts[:, 1:-1] = x_im
        offset = self.sign / (2.0 * self.b0)
        out = np.empty(len(s_arr))
        for j, s in enumerate(s_arr):
            pts[:, -1] = v_im + offset * s
            out[j] = float(np.dot(wts, self.f(pts)))
        return self.weight * out


def _lemma_image_fn(space: CWParams, g: GroupElem, b0: float):
    """image(b) = act(g, Exp_0(b0, b, |b|^2/(2 b0))); the s-term is applied
    later as a v-offset."""
    lam = space.lam()
    gt = (g.t, g.p, g.q, g.r)

    def image_fn(bgrid: np.ndarray):
        sumb2 = np.sum(bgrid * bgrid, axis=-1)
        bprime = sumb2 / (2.0 * b0)
        t, x, v = _exp0_arrays(lam, b0, bgrid, bprime)
        return _act_arrays(lam, gt, t, x, v)

    return image_fn


def _k_oracle_image_fn(space: CWParams, g: GroupElem, b0: float):
    """image(p) = act(g * exp(sum p_i K_i), Exp_0(b0, 0, 0)); exp of the
    isotropy algebra element with parameter p is the group element (0,-p,0,0).
    """
    lam = space.lam()
    k = space.k
    x_pt = _exp0_arrays(lam, b0, np.zeros((1, k)), np.array([0.0]))

    def image_fn(pgrid: np.ndarray):
        zeros = np.zeros(pgrid.shape)
        rzeros = np.zeros(pgrid.shape[0])
        t, p, q, r = _mul_arrays(
            lam, g.t, g.p, g.q, g.r, np.zeros(pgrid.shape[0]), -pgrid, zeros, rzeros
        )
        gt = (t, p, q, r)
        tt = np.broadcast_to(x_pt[0], (pgrid.shape[0],))
        xx = np.broadcast_to(x_pt[1], pgrid.shape)
        vv = np.broadcast_to(x_pt[2], (pgrid.shape[0],))
        return _act_arrays(lam, gt, tt, xx, vv)

    return image_fn


class OrbitalEvaluator:
    """Reusable batched evaluator of s -> M(s, b0) at fixed (f, y, b0, sign)."""

    def __init__(self, f, y: PointM, b0: float, sign, cfg: QuadratureConfig = QuadratureConfig()):
        space = y.space
        check_admissible(space, b0, cfg.b0_clearance)
        self.sign = _parse_sign(sign)
        g = section(y)
        weight = 1.0 / abs(b0) ** space.k
        self._engine = _BatchedIntegral(
            space, f, self.sign, b0, cfg, _lemma_image_fn(space, g, b0), weight, space.n
        )

    def values(self, s_arr):
        return self._engine.values(s_arr)


def orbital_integral(f, y: PointM, s: float, b0: float, sign, cfg: QuadratureConfig = QuadratureConfig()):
    """Orbital integral at pseudo-radius-squared s = r^2; returns (value, error)."""
    if s < 0:
        raise ValueError("s = r^2 must be nonnegative")
    ev = OrbitalEvaluator(f, y, b0, sign, cfg)
    vals, errs = ev.values([s])
    return float(vals[0]), float(errs[0])


def orbital_integral_k_oracle(f, y: PointM, s: float, b0: float, sign,
                              cfg: QuadratureConfig = QuadratureConfig(),
                              nodes_per_axis: Optional[int] = None):
    """Independent evaluation path straight from the defining integral over
    the isotropy group with its invariant measure prod|lam_i| dp.

    Uses a dense uniform trapezoid rule (default 4x the finest dyadic
    Gauss-Legendre resolution) so the two routes share no quadrature nodes.
    """
    space = y.space
    check_admissible(space, b0, cfg.b0_clearance)
    sgn = _parse_sign(sign)
    g = section(y)
    weight = float(np.prod(np.abs(space.lam())))
    engine = _BatchedIntegral(
        space, f, sgn, b0, cfg, _k_oracle_image_fn(space, g, b0), weight, space.n
    )
    if nodes_per_axis is None:
        nodes_per_axis = 4 * cfg.base_nodes * 2 ** cfg.max_refine
        while nodes_per_axis ** space.k > cfg.max_points and nodes_per_axis > 32:
            nodes_per_axis //= 2
    vals = engine.values_trapezoid([s], nodes_per_axis)
    return float(vals[0])


def sample_orbital_curve(f, y: PointM, b0_grid, s_grid, sign,
                         cfg: QuadratureConfig = QuadratureConfig()) -> OrbitalCurve:
    """Materialize the orbital curve on a (b0, s) grid; rows are independent
    and evaluated in parallel when cfg.threads > 1."""
    b0_grid = np.asarray(b0_grid, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    if b0_grid.size == 0 or s_grid.size == 0:
        raise ValueError("grids must be nonempty")
    sgn = _parse_sign(sign)

    def row(b0: float):
        return OrbitalEvaluator(f, y, float(b0), sgn, cfg).values(s_grid)

    rows = pmap(row, b0_grid, cfg.threads)
    values = np.stack([r[0] for r in rows])
    errors = np.stack([r[1] for r in rows])
    if not np.all(np.isfinite(values)):
        raise ArithmeticError("orbital integral produced non-finite values")
    return OrbitalCurve(
        space=y.space, y=y, b0_grid=b0_grid, s_grid=s_grid, sign=sgn,
        values=values, quad_error=errors,
    )
