"""Closed-form sine-Gordon kinks, breathers and 2-solitons.

Every profile is built from ``4 arctan(u)``. Its value, its time and space
derivatives and the derivatives with respect to the shifts are evaluated from
explicit sin/cos/sinh/cosh formulas. Complex arctangents are never used as
multivalued functions: the complex kink value is assembled from a Gudermannian
form with the imaginary part of its argument reduced to ``[-π/2, π/2]``.

Half-angle convention: for ``D = 4 arctan(u)`` we take
``cos(D/2) = (1 - u²)/(1 + u²)``, which is ``-tanh`` for the kinks.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import FieldPair, Grid, differentiate

__all__ = [
    "ProfileKind",
    "RealKink",
    "SolitonParams",
    "SingularProfileError",
    "ExactSolution",
    "exact_solution",
    "eval_profile",
    "eval_exact_solution",
    "profile_derivatives",
    "half_angle",
    "shift_derivatives",
    "is_singular",
    "singular_times",
    "nearest_singular_index",
    "partner_kink",
    "lorentz_boost",
    "sg_residual",
    "EPS0",
]

#: proximity (in time / x1 units) that flags the near-singular regime
EPS0 = 0.05


class ProfileKind(enum.Enum):
    REAL_KINK = "real_kink"
    COMPLEX_KINK = "complex_kink"
    CONJUGATE_KINK = "conjugate_kink"
    BREATHER = "breather"
    TWO_KINK = "two_kink"
    KINK_ANTIKINK = "kink_antikink"

    @classmethod
    def parse(cls, value) -> "ProfileKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"b": "breather", "r": "two_kink", "a": "kink_antikink", "k": "complex_kink",
                   "q": "real_kink", "kink": "real_kink", "2kink": "two_kink",
                   "antikink": "kink_antikink"}
        return cls(aliases.get(key, key))


TWO_SOLITONS = (ProfileKind.BREATHER, ProfileKind.TWO_KINK, ProfileKind.KINK_ANTIKINK)
_COMPLEX = (ProfileKind.COMPLEX_KINK, ProfileKind.CONJUGATE_KINK)


@dataclass(frozen=True)
class SolitonParams:
    """Scaling ``beta`` and shifts ``x1, x2`` shared by the 2-soliton family."""

    beta: float
    x1: float = 0.0
    x2: float = 0.0

    def __post_init__(self):
        if not (0.0 < abs(self.beta) < 1.0):
            raise ValueError(f"need 0 < |beta| < 1, got {self.beta}")

    @cached_property
    def alpha(self) -> float:
        return float(np.sqrt(1.0 - self.beta**2))

    @cached_property
    def gamma(self) -> float:
        return float(1.0 / np.sqrt(1.0 - self.beta**2))

    def shifted(self, x1=None, x2=None) -> "SolitonParams":
        return SolitonParams(self.beta, self.x1 if x1 is None else x1, self.x2 if x2 is None else x2)


@dataclass(frozen=True)
class RealKink:
    """Kink ``4 arctan(exp(γ(x + x0)))`` travelling with speed ``beta``."""

    x0: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not abs(self.beta) < 1.0:
            raise ValueError(f"need |beta| < 1, got {self.beta}")

    @property
    def gamma(self) -> float:
        return float(1.0 / np.sqrt(1.0 - self.beta**2))


def partner_kink(p: SolitonParams) -> RealKink:
    """The real kink ``Q(x; -β, x1 + x2)`` below the 2-kink and kink-antikink."""
    return RealKink(x0=p.x1 + p.x2, beta=-p.beta)


class SingularProfileError(ValueError):
    """Raised when a complex kink is evaluated at one of its singular shifts."""

    def __init__(self, x1, alpha, k):
        self.k = int(k)
        super().__init__(
            f"complex kink is singular at x1={x1!r}: alpha*x1 = pi*(1/2 + {self.k}) with alpha={alpha}"
        )


# --------------------------------------------------------------------------
# singular shifts of the complex kink


def nearest_singular_index(x1, p: SolitonParams) -> int:
    """The ``k`` whose singular shift ``(π/α)(1/2 + k)`` is closest to ``x1``."""
    return int(np.floor(p.alpha * x1 / np.pi))


def _singular_distance(x1, p):
    period = np.pi / p.alpha
    return np.abs((x1 - 0.5 * period) - period * np.round((x1 - 0.5 * period) / period))


def is_singular(x1: float, p: SolitonParams, tol: float = EPS0) -> bool:
    """True when ``x1`` lies within ``tol`` of a shift with ``cos(α x1) = 0``."""
    return bool(_singular_distance(x1, p) < tol)


def singular_times(p: SolitonParams, window) -> list:
    """All ``t_k = -x1 + (π/α)(1/2 + k)`` inside the closed interval ``window``."""
    lo, hi = window
    period = np.pi / p.alpha
    kmin = int(np.ceil((lo + p.x1) / period - 0.5))
    kmax = int(np.floor((hi + p.x1) / period - 0.5))
    return [-p.x1 + period * (0.5 + k) for k in range(kmin, kmax + 1)]


def _check_regular(x1, p):
    x1 = np.asarray(x1, dtype=float)
    if np.any(_singular_distance(x1, p) < 1e-13 * max(1.0, np.pi / p.alpha)):
        bad = float(x1.ravel()[np.argmin(_singular_distance(x1, p).ravel())])
        raise SingularProfileError(bad, p.alpha, np.round(p.alpha * bad / np.pi - 0.5))


# --------------------------------------------------------------------------
# pointwise closed forms; every function returns values and derivatives


def _gd(z):
    return 2.0 * np.arctan(np.tanh(0.5 * z))


def _sech_tanh(X):
    """``(sech X, tanh X)`` without overflow for large ``|X|``."""
    e = np.exp(-np.abs(X))
    return 2.0 * e / (1.0 + e * e), np.tanh(X)


def _real_kink(x, x0, beta):
    g = 1.0 / np.sqrt(1.0 - beta**2)
    xi = g * (x + x0)
    sech = 1.0 / np.cosh(xi)
    return dict(D=np.pi + 2.0 * _gd(xi), D_x=2.0 * g * sech, D_1=2.0 * g * sech,
                sin_half=sech, cos_half=-np.tanh(xi))


def _complex_kink(x, p, x1, x2, sign):
    b, a = p.beta, p.alpha
    theta = b * (x + x2) + sign * 1j * a * x1
    # reduce Im(theta) to [-π/2, π/2]: exp(theta + iπk) = (-1)^k exp(theta)
    k = np.round(sign * a * x1 / np.pi)
    parity = 1.0 - 2.0 * np.mod(k, 2)
    # work with f = e^{∓θ} so that |f| <= 1; every expression below is odd under e -> 1/e
    flip = np.where(np.real(theta) > 0, -1.0, 1.0)
    f = parity * np.exp(flip * theta)
    f2 = f * f
    sech = parity * 2.0 * f / (1.0 + f2)
    # π + 2 gd(θ - iπk), with tanh((θ - iπk)/2) = (e - 1)/(e + 1)
    D = parity * (np.pi + 4.0 * flip * np.arctan((f - 1.0) / (f + 1.0)))
    return dict(D=D, D_x=2.0 * b * sech, D_1=sign * 2j * a * sech, sin_half=sech,
                cos_half=-flip * (f2 - 1.0) / (f2 + 1.0), theta=theta)


def _breather(x, p, x1, x2):
    b, a = p.beta, p.alpha
    s, c = np.sin(a * x1), np.cos(a * x1)
    X = b * (x + x2)
    # every ratio is written with sech/tanh so that no power of cosh overflows
    sech, T = _sech_tanh(X)
    r = b * b * s * s * sech * sech
    dn = a * a + r                       # (a² cosh² + b² sin²) / cosh²
    u = b * s * sech / a
    B_t = 4 * a * a * b * c * sech / dn
    B_x = -4 * a * b * b * s * T * sech / dn
    # derivatives of B_t with respect to x1 and x
    B_t1 = -4 * a**3 * b * s * sech * (dn + 2 * b * b * c * c * sech * sech) / dn**2
    B_tx = 4 * a * a * b * b * c * T * sech * (r - a * a) / dn**2
    fn = T * (r - a * a)
    fxn = b * (r - a * a * (2 * T * T + 1))
    B_txx = 4 * a * a * b * b * c * sech * (fxn * dn - 4 * a * a * b * T * fn) / dn**3
    return dict(D=4 * np.arctan(u), D_x=B_x, D_1=B_t, D_t1=B_t1, D_tx=B_tx, D_txx=B_txx,
                sin_half=2 * u / (1 + u * u), cos_half=(1 - u * u) / (1 + u * u), rate=1.0)


def _two_kink(x, p, x1, x2):
    b, g = p.beta, p.gamma
    s1, c1 = np.sinh(g * x1), np.cosh(g * x1)
    X = g * (x + x2)
    sech, T = _sech_tanh(X)
    r = c1 * c1 * sech * sech
    dn = r + b * b * T * T               # (cosh²(γx1) + b² sinh²) / cosh²
    qn = r - b * b * T * T
    R_x = 4 * b * g * c1 * sech / dn
    R_1 = -4 * b * g * s1 * T * sech / dn
    R_t = b * R_1
    R_t1 = -4 * b * b * g * g * c1 * T * sech * (dn - 2 * s1 * s1 * sech * sech) / dn**2
    R_tx = -4 * b * b * g * g * s1 * sech * qn / dn**2
    qxn = g * (T * qn - 2 * b * b * T)
    R_txx = -4 * b * b * g * g * s1 * sech * (qxn * dn - 4 * b * b * g * T * qn) / dn**3
    # arctan(b sinh X / cosh(γx1)) with sinh X = T / sech
    return dict(D=4 * np.arctan2(b * T, c1 * sech), D_x=R_x, D_1=R_1, D_t=R_t, D_t1=R_t1, D_tx=R_tx,
                D_txx=R_txx, sin_half=2 * b * c1 * T * sech / dn, cos_half=qn / dn, rate=b)


def _kink_antikink(x, p, x1, x2):
    b, g = p.beta, p.gamma
    s1, c1 = np.sinh(g * x1), np.cosh(g * x1)
    X = g * (x + x2)
    sech, T = _sech_tanh(X)
    r = s1 * s1 * sech * sech
    dn = b * b + r                       # (b² cosh² + sinh²(γx1)) / cosh²
    qn = T * (r - b * b)
    u = s1 * sech / b
    A_x = -4 * b * g * s1 * T * sech / dn
    A_1 = 4 * b * g * c1 * sech / dn
    A_t = b * A_1
    A_t1 = 4 * b * b * g * g * s1 * sech * (dn - 2 * c1 * c1 * sech * sech) / dn**2
    A_tx = 4 * b * b * g * g * c1 * sech * qn / dn**2
    qxn = g * (r - b * b - 2 * b * b * T * T)
    A_txx = 4 * b * b * g * g * c1 * sech * (qxn * dn - 4 * b * b * g * T * qn) / dn**3
    return dict(D=4 * np.arctan(u), D_x=A_x, D_1=A_1, D_t=A_t, D_t1=A_t1, D_tx=A_tx,
                D_txx=A_txx, sin_half=2 * u / (1 + u * u), cos_half=(1 - u * u) / (1 + u * u),
                rate=b)


def _closed_forms(kind, p, x, t=0.0):
    """Dictionary of closed-form fields of ``kind`` at time ``t`` (broadcasting)."""
    if isinstance(kind, RealKink):
        out = _real_kink(x, kind.x0 - kind.beta * np.asarray(t), kind.beta)
        out["D_t"] = -kind.beta * out["D_1"]
        return out
    kind = ProfileKind.parse(kind)
    if kind is ProfileKind.REAL_KINK:
        raise TypeError("pass a RealKink(x0, beta) instance for a real kink")
    if kind in _COMPLEX or kind is ProfileKind.BREATHER:
        x1 = p.x1 + np.asarray(t)
        if kind in _COMPLEX:
            out = _complex_kink(x, p, x1, p.x2, 1.0 if kind is ProfileKind.COMPLEX_KINK else -1.0)
            out["D_t"] = out["D_1"]
            return out
        out = _breather(x, p, x1, p.x2)
        out["D_t"] = out["D_1"]
        return out
    x1 = p.x1 + p.beta * np.asarray(t)
    if kind is ProfileKind.TWO_KINK:
        return _two_kink(x, p, x1, p.x2)
    return _kink_antikink(x, p, x1, p.x2)


def _regular_or_raise(kind, p, t):
    if not isinstance(kind, RealKink) and ProfileKind.parse(kind) in _COMPLEX:
        _check_regular(p.x1 + np.asarray(t), p)


# --------------------------------------------------------------------------
# public evaluators


class ExactSolution:
    """Callable ``(t, x) -> (phi, phi_t, phi_x)`` for an exact sine-Gordon solution."""

    def __init__(self, kind=None, p=None):
        self.kind = kind
        self.p = p

    def __call__(self, t, x):
        if self.kind is None:
            z = np.zeros(np.broadcast(np.asarray(t), np.asarray(x)).shape)
            return z, z.copy(), z.copy()
        out = _closed_forms(self.kind, self.p, x, t)
        return out["D"], out["D_t"], out["D_x"]

    def pair(self, t: float, grid: Grid) -> FieldPair:
        if self.kind is not None:
            _regular_or_raise(self.kind, self.p, t)
        phi, phi_t, _ = self(t, grid.x)
        return FieldPair(phi, phi_t)

    @property
    def is_complex(self) -> bool:
        return (not isinstance(self.kind, RealKink) and self.kind is not None
                and ProfileKind.parse(self.kind) in _COMPLEX)


def exact_solution(kind, p=None) -> ExactSolution:
    return ExactSolution(kind, p)


def eval_profile(kind, p, g: Grid) -> FieldPair:
    """``(D, D_t)`` at ``t = 0`` on the grid (complex for the complex kinks)."""
    return eval_exact_solution(kind, p, 0.0, g)


def eval_exact_solution(kind, p, t: float, g: Grid) -> FieldPair:
    """The exact solution of ``kind`` at time ``t`` (shifts moved by the drift law)."""
    return ExactSolution(kind, p).pair(t, g)


def profile_derivatives(kind, p, g: Grid) -> dict:
    """Closed-form ``D, D_t, D_x``; for 2-solitons also ``D_tx`` and ``D_txx``."""
    _regular_or_raise(kind, p, 0.0)
    out = _closed_forms(kind, p, g.x)
    keys = ("D", "D_t", "D_x", "D_tx", "D_txx")
    return {k: out[k] for k in keys if k in out}


def half_angle(kind, p, g: Grid):
    """``(sin(D/2), cos(D/2))`` from closed forms."""
    _regular_or_raise(kind, p, 0.0)
    out = _closed_forms(kind, p, g.x)
    return out["sin_half"], out["cos_half"]


def shift_derivatives(kind, p: SolitonParams, g: Grid, j: int) -> FieldPair:
    """``(∂_{x_j} D, ∂_{x_j} D_t)`` for the breather, 2-kink and kink-antikink."""
    kind = ProfileKind.parse(kind) if not isinstance(kind, RealKink) else kind
    if kind not in TWO_SOLITONS:
        raise ValueError(f"shift derivatives are provided for 2-solitons only, not {kind}")
    if j not in (1, 2):
        raise ValueError(f"j must be 1 or 2, got {j}")
    out = _closed_forms(kind, p, g.x)
    if j == 1:
        return FieldPair(out["D_1"], out["D_t1"])
    return FieldPair(out["D_x"], out["D_tx"])


# --------------------------------------------------------------------------
# boosts and residuals


def lorentz_boost(solution, boost_beta: float):
    """Boost an evaluator ``(t, x) -> (phi, phi_t, phi_x)`` with velocity ``boost_beta``."""
    if not abs(boost_beta) < 1.0:
        raise ValueError(f"need |boost_beta| < 1, got {boost_beta}")
    if boost_beta == 0:
        return solution
    g = 1.0 / np.sqrt(1.0 - boost_beta**2)

    def boosted(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        phi, phi_t, phi_x = solution(g * (t - boost_beta * x), g * (x - boost_beta * t))
        return phi, g * (phi_t - boost_beta * phi_x), g * (phi_x - boost_beta * phi_t)

    return boosted


def sg_residual(solution, t: float, dt_probe: float, g: Grid) -> np.ndarray:
    """``φ_tt - φ_xx + sin φ`` with a centered time difference and two grid derivatives."""
    phi = solution(t, g.x)[0]
    phi_tt = (solution(t + dt_probe, g.x)[0] - 2.0 * phi + solution(t - dt_probe, g.x)[0]) / dt_probe**2
    phi_xx = differentiate(differentiate(phi, g), g)
    return phi_tt - phi_xx + np.sin(phi)
