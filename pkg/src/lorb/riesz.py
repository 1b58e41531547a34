"""One-dimensional regularized integral engine.

Riemann-Liouville integrals (1/Gamma(mu)) * int_0^inf F(r) r^(mu-1) dr and
their sinh-kernel counterparts, analytically continued in the complex
parameter.  The continuation splits the integral at a small window edge
delta: on [0, delta] the profile is represented by a fitted polynomial whose
kernel moments have closed entire forms, and on [delta, R] the integral is
regular and handled by panel Gauss-Legendre quadrature.  The unfitted window
remainder is not integrated against the (possibly divergent) kernel; it is
folded into the reported residual estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.interpolate import make_interp_spline
from scipy.special import gamma as cgamma
from scipy.special import rgamma as crgamma

__all__ = [
    "GammaPoleError",
    "RadialProfile",
    "ContinuationResult",
    "h_factor",
    "riesz_prefactor",
    "rl_power",
    "rl_sinh",
    "limit_at_zero",
    "analytic_circle_mean",
]


class GammaPoleError(ArithmeticError):
    """A gamma factor was evaluated at (or too near) a pole."""

    def __init__(self, where: complex, what: str = "gamma factor"):
        super().__init__(f"{what} has a pole at {where}")
        self.where = where


def _near_nonpositive_int(z: complex, tol: float = 1e-12) -> bool:
    return abs(z - round(z.real)) < tol and round(z.real) <= 0 and abs(z.imag) < tol


def h_factor(dim: int, lam: complex) -> complex:
    """Normalizing factor 2^(l-1) pi^((d-2)/2) Gamma(l/2) Gamma((l+2-d)/2)."""
    lam = complex(lam)
    for arg in (lam / 2.0, (lam + 2.0 - dim) / 2.0):
        if _near_nonpositive_int(arg):
            raise GammaPoleError(arg)
    return (
        2.0 ** (lam - 1.0)
        * math.pi ** ((dim - 2) / 2.0)
        * cgamma(lam / 2.0)
        * cgamma((lam + 2.0 - dim) / 2.0)
    )


def riesz_prefactor(dim: int, lam: complex) -> complex:
    """Gamma(mu)/H_dim(lam) with mu = lam - dim + 2, in a pole-safe form.

    Legendre duplication turns the ratio into
    Gamma((mu+1)/2)/Gamma(lam/2) * 2^(mu-lam) * pi^(-(dim-1)/2); for odd dim
    the two gamma arguments differ by an integer and the ratio collapses to
    an explicit rational function of lam.
    """
    lam = complex(lam)
    mu = lam - dim + 2.0
    scale = 2.0 ** (mu - lam) * math.pi ** (-(dim - 1) / 2.0)
    if dim % 2 == 1:
        m = (dim - 3) // 2
        denom = 1.0 + 0.0j
        for j in range(1, m + 1):
            factor = lam / 2.0 - j
            if abs(factor) < 1e-12:
                raise GammaPoleError(lam, "Riesz prefactor")
            denom *= factor
        return scale / denom
    a = (mu + 1.0) / 2.0
    if _near_nonpositive_int(a):
        if not _near_nonpositive_int(lam / 2.0):
            raise GammaPoleError(lam, "Riesz prefactor")
    return scale * cgamma(a) * crgamma(lam / 2.0)


@dataclass(frozen=True)
class RadialProfile:
    """A radial function F on [0, infinity), zero beyond ``support``.

    ``smooth_at_zero_order`` states how many derivatives at 0+ the caller
    vouches for; the continuation refuses requests needing more than that.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    support: float
    smooth_at_zero_order: int = 16

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.support
        vals = np.zeros(r.shape)
        if np.any(inside):
            vals = np.where(inside, self.fn(np.where(inside, r, 0.5 * self.support)), 0.0)
        return vals if vals.ndim else float(vals)

    @staticmethod
    def from_samples(r, values, support: Optional[float] = None, k: int = 3) -> "RadialProfile":
        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=float)
        spline = make_interp_spline(r, values, k=k)
        sup = float(support if support is not None else r[-1])
        lo, hi = float(r[0]), float(r[-1])

        def fn(x):
            return spline(np.clip(x, lo, hi))

        return RadialProfile(fn=fn, support=sup)

    @staticmethod
    def from_callable(fn, support: float, smooth_at_zero_order: int = 16) -> "RadialProfile":
        return RadialProfile(fn=fn, support=float(support), smooth_at_zero_order=smooth_at_zero_order)


@dataclass(frozen=True)
class ContinuationResult:
    value: complex
    mu: complex
    regularization_order: int
    residual_estimate: float

    def __post_init__(self):
        if self.residual_estimate < 0:
            raise ValueError("residual_estimate must be >= 0")


# --- quadrature helpers --------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = npleg.leggauss(n)
    return _GL_CACHE[n]


def _panel_edges(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """Geometrically growing panel edges from lo to hi."""
    edges = [lo]
    width = lo
    while edges[-1] + width < hi:
        edges.append(edges[-1] + width)
        width *= ratio
    edges.append(hi)
    return np.asarray(edges)


def _integrate_profile(values_at, lo, hi, nodes: int) -> complex:
    """Composite Gauss-Legendre of a callable on [lo, hi] with geometric panels."""
    edges = _panel_edges(lo, hi)
    xs, ws = gl_nodes(nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * xs[None, :]
    vals = values_at(pts.ravel()).reshape(pts.shape)
    return complex(np.sum(vals * (half[:, None] * ws[None, :])))


def _entire_recip(mu: complex, j: int) -> complex:
    """1/(Gamma(mu) (mu+j)) in its entire form prod_{i<j}(mu+i)/Gamma(mu+j+1)."""
    prod = 1.0 + 0.0j
    for i in range(j):
        prod *= mu + i
    return prod * crgamma(mu + j + 1.0)


def _chebyshev_window(delta: float, count: int) -> np.ndarray:
    """Chebyshev-spaced nodes on (0, delta], densest near 0, excluding 0."""
    k = np.arange(1, count + 1)
    return delta * 0.5 * (1.0 - np.cos(np.pi * k / (count + 0.5)))


def _window_design(rw: np.ndarray, delta: float, degree: int, with_log: bool):
    """Design matrix on the window: columns (r/d)^j and (r/d)^j ln(r/d).

    The log columns capture the r^j log r terms that pseudo-spherical means
    develop at the light cone; their kernel moments stay closed-form.
    Returns (matrix, descriptors) with descriptors (j, is_log).
    """
    tau = rw / delta
    cols = []
    desc = []
    for j in range(degree + 1):
        cols.append(tau ** j)
        desc.append((j, False))
    if with_log:
        ln = np.log(tau)
        lscale = float(np.max(np.abs(ln)))
        for j in range(1, degree + 1):
            cols.append(tau ** j * ln / lscale)
            desc.append((j, 1.0 / lscale))
    return np.stack(cols, axis=-1), desc


def _window_moment(mu: complex, j: int, is_log) -> complex:
    """(1/Gamma(mu)) int_0^delta basis(r) r^(mu-1) dr, divided by delta^mu.

    Power column: E(mu, j) = 1/(Gamma(mu)(mu+j)) in its entire form.
    Log column: -E(mu, j)/(mu+j), a simple pole at mu = -j (the caller drops
    log columns near their pole; a genuinely nonzero coefficient there would
    mean the continued integral itself diverges).
    """
    e = _entire_recip(mu, j)
    if not is_log:
        return e
    return -e / (mu + j) * is_log


def rl_power(F: RadialProfile, mu: complex, order: Optional[int] = None,
             tail_nodes: int = 24, with_log: bool = True) -> ContinuationResult:
    """Analytic continuation of (1/Gamma(mu)) int_0^inf F(r) r^(mu-1) dr.

    Entire in mu; the value at mu = 0 is F(0+).  ``order`` is the number of
    leading terms matched at 0 and must exceed -Re(mu).  The window fit uses
    powers and (optionally) power*log terms; profile samples are shared
    between the two fit degrees whose difference feeds the residual.
    """
    mu = complex(mu)
    if order is None:
        order = 2 + max(0, math.ceil(-mu.real))
    if order < 1 or order + mu.real <= 0:
        raise ValueError(f"regularization order {order} insufficient for Re(mu)={mu.real}")
    if order > F.smooth_at_zero_order:
        raise ValueError(
            f"profile vouches for {F.smooth_at_zero_order} derivatives at 0, order {order} needed"
        )
    support = F.support
    delta = 0.1 * min(1.0, support)
    degree = order + 3
    rw = _chebyshev_window(delta, max(4 * (degree + 1), 28))
    fw = np.asarray(F(rw))
    if not np.iscomplexobj(fw):
        fw = fw.astype(float)

    def integrand(r):
        return F(r) * np.exp((mu - 1.0) * np.log(r))

    tail_lo = _integrate_profile(integrand, delta, support, tail_nodes)
    tail_hi = _integrate_profile(integrand, delta, support, 2 * tail_nodes)
    rg = crgamma(mu)
    dpow = delta ** mu

    def assemble(deg: int):
        X, desc = _window_design(rw, delta, deg, with_log)
        keep = [
            i
            for i, (j, is_log) in enumerate(desc)
            if not (is_log and abs(mu + j) < 0.4)
        ]
        Xk = X[:, keep]
        coef, *_ = np.linalg.lstsq(Xk, fw, rcond=None)
        fit_res = float(np.max(np.abs(Xk @ coef - fw)))
        moments = dpow * sum(
            coef[i] * _window_moment(mu, desc[k][0], desc[k][1])
            for i, k in enumerate(keep)
        )
        return complex(moments + rg * tail_hi), fit_res

    v1, _ = assemble(degree - 1)
    v2, fit_res = assemble(degree)
    quad_res = abs(rg) * abs(tail_hi - tail_lo)
    expo = max(order + mu.real, 0.25)
    window_res = abs(rg) * 3.0 * fit_res * delta ** (mu.real) * delta ** order / expo
    residual = abs(v1 - v2) + quad_res + window_res
    return ContinuationResult(value=v2, mu=mu, regularization_order=order, residual_estimate=residual)


def rl_sinh(F: RadialProfile, lam: complex, dim: int, order: Optional[int] = None) -> ContinuationResult:
    """Analytic continuation of (1/H_dim(lam)) int_0^inf F(r) sinh^(lam-1)(r) dr.

    F may blow up like r^(2-dim) at 0: only the regularized combination
    sinh(r)^(dim-2) F(r) must extend smoothly to 0.  Writing
    sinh^(lam-1) = sinh^(dim-2) * (r^(mu-1)) * (sinh r / r)^(mu-1) with
    mu = lam - dim + 2 reduces everything to the power kernel.
    """
    lam = complex(lam)
    mu = lam - dim + 2.0
    if order is None:
        order = 2 + max(0, math.ceil(-mu.real))
    pref = riesz_prefactor(dim, lam)

    def regularized(r):
        r = np.asarray(r, dtype=float)
        ratio = np.where(r > 1e-8, np.sinh(r) / np.where(r > 1e-8, r, 1.0), 1.0 + r * r / 6.0)
        return F(r) * np.sinh(r) ** (dim - 2) * np.exp((mu - 1.0) * np.log(ratio))

    G = RadialProfile(fn=regularized, support=F.support, smooth_at_zero_order=F.smooth_at_zero_order)
    core = rl_power(G, mu, order)
    return ContinuationResult(
        value=pref * core.value,
        mu=mu,
        regularization_order=core.regularization_order,
        residual_estimate=abs(pref) * core.residual_estimate,
    )


def limit_at_zero(F: RadialProfile, h0: Optional[float] = None, max_residual: Optional[float] = None):
    """Richardson-extrapolated 0+ limit from samples at h, h/2, h/4, h/8.

    Assumes an even-order error expansion F(h) = L + a2 h^2 + a4 h^4 + ...;
    an odd term degrades the result and inflates the reported residual.
    """
    if h0 is None:
        h0 = 0.05 * F.support
    hs = h0 / 2.0 ** np.arange(4)
    table = [list(np.asarray(F(hs), dtype=float))]
    for j in range(1, 4):
        prev = table[-1]
        fac = 4.0 ** j
        table.append([(fac * prev[i + 1] - prev[i]) / (fac - 1.0) for i in range(len(prev) - 1)])
    value = table[3][0]
    residual = abs(table[3][0] - table[2][0]) + abs(table[2][1] - table[3][0])
    if max_residual is not None and residual > max_residual:
        raise ArithmeticError(f"extrapolation residual {residual:.3e} above {max_residual:.3e}")
    return value, residual


def analytic_circle_mean(fn, center: complex, radius: float, points: int = 16) -> complex:
    """Mean of an analytic function over a circle = its value at the center."""
    thetas = 2.0 * math.pi * np.arange(points) / points
    vals = [fn(center + radius * complex(math.cos(th), math.sin(th))) for th in thetas]
    return complex(np.mean(vals))
