"""Solvable Lorentzian symmetric Lie algebra with exact structure constants.

Ordered basis (Z, U, W_1..W_k, K_1..K_k) with k = n-2, nonzero weights
lambda_1..lambda_k.  Nonzero brackets:

    [U, K_i] = lambda_i W_i,   [U, W_i] = -K_i,   [W_i, K_i] = lambda_i Z,

Z central.  The invariant form B pairs Z with U, is -1 on the W's and
-lambda_i on the K's.  The involution is +1 on the K-span and -1 on the
(Z, U, W)-span.  Every product here is a finite sum of exact terms, so the
algebraic identities are tested to exact floating-point equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CWParams",
    "AlgebraElem",
    "CartanReport",
    "bracket",
    "b_form",
    "sigma",
    "cartan_check",
    "exp_differential_series",
]


@dataclass(frozen=True)
class CWParams:
    """Weights lambda_1..lambda_{n-2} fixing one plane-wave model space."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(l) for l in self.lambdas)
        if len(lams) < 1:
            raise ValueError("need at least one weight (dimension n >= 3)")
        if any(l == 0.0 for l in lams):
            raise ValueError("weights must be nonzero")
        object.__setattr__(self, "lambdas", lams)

    @property
    def n(self) -> int:
        """Dimension of the model space M."""
        return len(self.lambdas) + 2

    @property
    def k(self) -> int:
        """Number of weights, n - 2."""
        return len(self.lambdas)

    @property
    def dim_g(self) -> int:
        """Dimension of the transvection algebra, 2n - 2."""
        return 2 * len(self.lambdas) + 2

    def lam(self) -> np.ndarray:
        return np.asarray(self.lambdas, dtype=float)


@dataclass(frozen=True)
class AlgebraElem:
    """Coefficient vector over the ordered basis (Z, U, W_1..W_k, K_1..K_k)."""

    space: CWParams
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.space.dim_g,):
            raise ValueError(f"coefficient vector must have length {self.space.dim_g}")
        object.__setattr__(self, "coeffs", c)

    # index layout
    @property
    def z(self) -> float:
        return float(self.coeffs[0])

    @property
    def u(self) -> float:
        return float(self.coeffs[1])

    @property
    def w(self) -> np.ndarray:
        return self.coeffs[2 : 2 + self.space.k]

    @property
    def kpart(self) -> np.ndarray:
        return self.coeffs[2 + self.space.k :]

    def in_p(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.kpart) <= tol))

    def in_k(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[: 2 + self.space.k]) <= tol))

    def __add__(self, other: "AlgebraElem") -> "AlgebraElem":
        _check_same_space(self, other)
        return AlgebraElem(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "AlgebraElem") -> "AlgebraElem":
        _check_same_space(self, other)
        return AlgebraElem(self.space, self.coeffs - other.coeffs)

    def __rmul__(self, scalar: float) -> "AlgebraElem":
        return AlgebraElem(self.space, float(scalar) * self.coeffs)

    def __neg__(self) -> "AlgebraElem":
        return AlgebraElem(self.space, -self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    # named basis constructors
    @staticmethod
    def zero(space: CWParams) -> "AlgebraElem":
        return AlgebraElem(space, np.zeros(space.dim_g))

    @staticmethod
    def Z(space: CWParams) -> "AlgebraElem":
        c = np.zeros(space.dim_g)
        c[0] = 1.0
        return AlgebraElem(space, c)

    @staticmethod
    def U(space: CWParams) -> "AlgebraElem":
        c = np.zeros(space.dim_g)
        c[1] = 1.0
        return AlgebraElem(space, c)

    @staticmethod
    def W(space: CWParams, i: int) -> "AlgebraElem":
        c = np.zeros(space.dim_g)
        c[2 + i] = 1.0
        return AlgebraElem(space, c)

    @staticmethod
    def K(space: CWParams, i: int) -> "AlgebraElem":
        c = np.zeros(space.dim_g)
        c[2 + space.k + i] = 1.0
        return AlgebraElem(space, c)

    @staticmethod
    def from_p(space: CWParams, b0: float, b: np.ndarray, bprime: float) -> "AlgebraElem":
        """Tangent identification (b0, b, b') -> b0*U + sum b_i W_i + b'*Z."""
        c = np.zeros(space.dim_g)
        c[0] = bprime
        c[1] = b0
        c[2 : 2 + space.k] = np.asarray(b, dtype=float)
        return AlgebraElem(space, c)


def _check_same_space(a: AlgebraElem, b: AlgebraElem):
    if a.space.lambdas != b.space.lambdas:
        raise ValueError("elements live over different weight tuples")


def bracket(a: AlgebraElem, b: AlgebraElem) -> AlgebraElem:
    """Lie bracket from the structure-constant table (exact, bilinear)."""
    _check_same_space(a, b)
    space = a.space
    lam = space.lam()
    out = np.zeros(space.dim_g)
    au, bu = a.u, b.u
    aw, bw = a.w, b.w
    ak, bk = a.kpart, b.kpart
    # [U, K_i] = lambda_i W_i
    out[2 : 2 + space.k] += au * lam * bk - bu * lam * ak
    # [U, W_i] = -K_i
    out[2 + space.k :] += -(au * bw) + (bu * aw)
    # [W_i, K_i] = lambda_i Z
    out[0] += float(np.dot(lam, aw * bk - bw * ak))
    return AlgebraElem(space, out)


def b_form(a: AlgebraElem, b: AlgebraElem) -> float:
    """Invariant symmetric bilinear form B."""
    _check_same_space(a, b)
    lam = a.space.lam()
    val = a.z * b.u + a.u * b.z
    val -= float(np.dot(a.w, b.w))
    val -= float(np.dot(lam, a.kpart * b.kpart))
    return val


def sigma(a: AlgebraElem) -> AlgebraElem:
    """Involution: +1 on the K-span, -1 on the (Z, U, W)-span."""
    c = a.coeffs.copy()
    c[: 2 + a.space.k] *= -1.0
    return AlgebraElem(a.space, c)


@dataclass(frozen=True)
class CartanReport:
    """Certificate that span{Z, U - sum lambda_i y_i W_i} is a Cartan subspace."""

    is_p_subalgebra: bool
    contains_center: bool
    quotient_matrix: np.ndarray
    quotient_det: float
    natural: bool
    rank: int


def _reduce_mod_a(space: CWParams, v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """W-coefficients of v modulo a = span{Z, A}, A = U - sum lambda_i y_i W_i.

    Subtract (v_U) * A to kill the U-component (its W-part is -lambda*y),
    drop the Z-component; requires v in p.
    """
    lam = space.lam()
    u = v[1]
    w = v[2 : 2 + space.k].copy()
    w += u * lam * y
    return w


def cartan_check(space: CWParams, y, det_tol: float = 1e-12) -> CartanReport:
    """Certify the two-dimensional Cartan subspace attached to y.

    Checks (i) ad^2(X) maps the subspace into itself for X in {Z, A},
    (ii) ad^2(A) is nonsingular on p/a (naturality), (iii) Z belongs to it.
    The rank of this family is always 2.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (space.k,):
        raise ValueError(f"y must have length {space.k}")
    lam = space.lam()
    Z = AlgebraElem.Z(space)
    A = AlgebraElem.U(space) - AlgebraElem(
        space, np.concatenate([[0.0, 0.0], lam * y, np.zeros(space.k)])
    )

    def ad2(X: AlgebraElem, V: AlgebraElem) -> AlgebraElem:
        return bracket(X, bracket(X, V))

    is_sub = True
    for X in (Z, A, Z + A):
        for V in (Z, A):
            img = ad2(X, V)
            # membership in span{Z, A}: the reduced W-part must vanish and
            # the image must lie in p
            if not img.in_p():
                is_sub = False
            red = _reduce_mod_a(space, img.coeffs, y)
            if np.max(np.abs(red)) > 0.0:
                is_sub = False

    # matrix of ad^2(A) on p / a in the basis of W-classes
    mat = np.zeros((space.k, space.k))
    for j in range(space.k):
        img = ad2(A, AlgebraElem.W(space, j))
        mat[:, j] = _reduce_mod_a(space, img.coeffs, y)
    det = float(np.linalg.det(mat))
    return CartanReport(
        is_p_subalgebra=is_sub,
        contains_center=True,
        quotient_matrix=mat,
        quotient_det=det,
        natural=abs(det) > det_tol,
        rank=2,
    )


def exp_differential_series(
    X: AlgebraElem,
    Y: AlgebraElem,
    terms: int = 64,
    rel_tol: float = 1e-16,
) -> AlgebraElem:
    """Sum_{k>=0} ad(X)^{2k}/(2k+1)!  applied to Y, both in the p-part.

    Factorial decay makes the series entire; stop when the next term drops
    below rel_tol of the accumulated norm, cap at ``terms`` terms.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if not X.in_p() or not Y.in_p():
        raise ValueError("arguments must lie in the p-part (no K-components)")
    acc = AlgebraElem(Y.space, Y.coeffs.copy())
    cur = Y
    factorial = 1.0
    for k in range(1, terms):
        cur = bracket(X, bracket(X, cur))
        factorial *= (2 * k) * (2 * k + 1)
        term = (1.0 / factorial) * cur
        acc = acc + term
        if term.norm() < rel_tol * max(acc.norm(), 1e-300):
            break
    return acc
