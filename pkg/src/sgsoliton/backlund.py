"""Bäcklund functionals, integrating factors and descent/ascent solvers.

A *level* is one Bäcklund link ``lower --a0--> upper`` between two exact
profiles. Perturbed links are solved by frozen-profile Newton iterations:

* descent: the upper field is known, the lower field and the parameter
  correction are unknown. ``F2 = 0`` is a first-order ODE for the lower field,
  ``F1 = 0`` gives its time derivative explicitly.
* ascent: the lower field and the parameter are known. ``F1 = 0`` is an ODE
  for the upper field whose homogeneous solution is the decaying factor
  ``mu``; the free multiple of ``mu`` is fixed by a linear constraint.

Both linearisations use the same coefficient
``c = cos((U+P)/2)/(2a) + a cos((U-P)/2)/2`` and a closed-form factor with
``mu_x = c mu``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .numerics import FieldPair, Grid, cumulative_integral, differentiate, integrate
from .profiles import (
    ProfileKind,
    SolitonParams,
    _check_regular,
    _closed_forms,
    partner_kink,
    shift_derivatives,
)

__all__ = [
    "BTParameter",
    "DescentResult",
    "DescentError",
    "IllPosedSolveError",
    "IntegratingFactorKind",
    "Level",
    "bt_level",
    "bt_residual",
    "integrating_factor",
    "factor_ode_residual",
    "solve_constrained_ode",
    "descend",
    "ascend",
    "descend_breather",
    "descend_kink_to_zero",
    "ascend_zero_to_kink",
    "ascend_kink_to_breather",
    "descend_2soliton",
    "ascend_2soliton",
    "ascend_breather_chain",
    "nondegeneracy_profile",
    "nondegeneracy_integral",
    "almost_orthogonality_defect",
]

PAIRING_FLOOR = 1e-8
DECAY_TOL = 1e-6
MAX_ITER = 50


class DescentError(RuntimeError):
    """A Newton descent or ascent failed to converge or produced a non-decaying field."""


class IllPosedSolveError(ValueError):
    """The nondegeneracy pairing of a constrained linear solve is too small."""


@dataclass(frozen=True)
class BTParameter:
    """Nonzero complex Bäcklund parameter with the named constructors used here."""

    value: complex

    def __post_init__(self):
        if self.value == 0:
            raise ValueError("Bäcklund parameter must be nonzero")

    def __complex__(self):
        return complex(self.value)

    @classmethod
    def of_speed(cls, beta: float) -> "BTParameter":
        """``a(β) = ((1 + β)/(1 - β))^{1/2}``: links the vacuum to the kink of speed β."""
        return cls(complex(np.sqrt((1.0 + beta) / (1.0 - beta))))

    @classmethod
    def a2(cls, beta: float) -> "BTParameter":
        return cls.of_speed(-beta)

    @classmethod
    def a3(cls, beta: float) -> "BTParameter":
        return cls(-cls.of_speed(beta).value)

    @classmethod
    def breather(cls, beta: float, sign: int = +1) -> "BTParameter":
        """``β + iα`` (``sign=+1``) or ``β - iα`` (``sign=-1``)."""
        return cls(complex(beta, sign * np.sqrt(1.0 - beta**2)))


def _a(a) -> complex:
    a = complex(a)
    if a == 0:
        raise ValueError("Bäcklund parameter must be nonzero")
    return a


def bt_residual(varphi, phi, a, grid: Grid):
    """``(F1, F2)`` for the link ``phi --a--> varphi``; derivatives by finite differences."""
    a = _a(a)
    up, up_t = varphi
    lo, lo_t = phi
    sp = np.sin(0.5 * (up + lo)) / a
    sm = a * np.sin(0.5 * (up - lo))
    F1 = differentiate(up, grid) - lo_t - sp - sm
    F2 = up_t - differentiate(lo, grid) - sp + sm
    return F1, F2


# --------------------------------------------------------------------------
# integrating factors


class IntegratingFactorKind(enum.Enum):
    MuK = "mu_K"
    MuKbar = "mu_Kbar"
    MuB = "mu_B"
    MuBbar = "mu_Bbar"
    MuR = "mu_R"
    MuA = "mu_A"
    MuQ_decaying = "mu_Q"
    MuB_inverse = "mu^B"
    MuA_inverse = "mu^A"
    MuR_inverse = "mu^R"
    MuQ_growing = "mu^Q"


_INVERSE = {
    IntegratingFactorKind.MuB_inverse: IntegratingFactorKind.MuB,
    IntegratingFactorKind.MuA_inverse: IntegratingFactorKind.MuA,
    IntegratingFactorKind.MuR_inverse: IntegratingFactorKind.MuR,
    IntegratingFactorKind.MuQ_growing: IntegratingFactorKind.MuQ_decaying,
}


def _mu(kind, p: SolitonParams, x):
    b, al, g = p.beta, p.alpha, p.gamma
    K = IntegratingFactorKind
    if kind in (K.MuK, K.MuKbar, K.MuB, K.MuBbar):
        _check_regular(p.x1, p)
        sign = 1.0 if kind in (K.MuK, K.MuB) else -1.0
        theta = b * (x + p.x2) + sign * 1j * al * p.x1
        if kind in (K.MuK, K.MuKbar):
            return 1.0 / np.cosh(theta)
        den = al**2 * np.cosh(b * (x + p.x2)) ** 2 + b**2 * np.sin(al * p.x1) ** 2
        return np.cosh(theta) / den
    num = np.cosh(g * (x + p.x1 + p.x2))
    if kind is K.MuR:
        return num / (np.cosh(g * p.x1) ** 2 + b**2 * np.sinh(g * (x + p.x2)) ** 2)
    if kind is K.MuA:
        return num / (b**2 * np.cosh(g * (x + p.x2)) ** 2 + np.sinh(g * p.x1) ** 2)
    if kind is K.MuQ_decaying:
        return 1.0 / num
    raise ValueError(f"unknown factor {kind}")


def integrating_factor(kind, p: SolitonParams, g: Grid) -> np.ndarray:
    """Closed-form integrating factor (inverse kinds are reciprocals of decaying ones)."""
    kind = IntegratingFactorKind(kind)
    if kind in _INVERSE:
        return 1.0 / _mu(_INVERSE[kind], p, g.x)
    return _mu(kind, p, g.x)


# --------------------------------------------------------------------------
# levels


@dataclass
class Level:
    """One exact link ``lower --a0--> upper`` with its closed-form data on a grid."""

    name: str
    upper: dict
    lower: dict
    a0: complex
    mu: np.ndarray
    grid: Grid
    cos_plus: np.ndarray = field(init=False)
    cos_minus: np.ndarray = field(init=False)

    def __post_init__(self):
        self.cos_plus = np.cos(0.5 * (self.upper["D"] + self.lower["D"]))
        self.cos_minus = np.cos(0.5 * (self.upper["D"] - self.lower["D"]))

    @property
    def c(self):
        """Coefficient of the linearised ODEs: ``mu_x = c mu``."""
        a = self.a0
        return self.cos_plus / (2 * a) + 0.5 * a * self.cos_minus

    @property
    def e(self):
        """Sensitivity of the explicit companion equation to the unknown field."""
        a = self.a0
        return self.cos_plus / (2 * a) - 0.5 * a * self.cos_minus

    @property
    def g(self):
        """Derivative of ``F2`` with respect to the Bäcklund parameter."""
        a = self.a0
        sp = np.sin(0.5 * (self.upper["D"] + self.lower["D"]))
        sm = np.sin(0.5 * (self.upper["D"] - self.lower["D"]))
        return sp / a**2 + sm

    def residual(self, up_pert, lo_pert, d=0.0):
        """``(F1, F2)`` of the perturbed link; profile derivatives are closed-form."""
        g = self.grid
        a = self.a0 + d
        z, w = up_pert
        u, s = lo_pert
        U = self.upper["D"] + z
        P = self.lower["D"] + u
        sp = np.sin(0.5 * (U + P)) / a
        sm = a * np.sin(0.5 * (U - P))
        F1 = self.upper["D_x"] + differentiate(z, g) - self.lower["D_t"] - s - sp - sm
        F2 = self.upper["D_t"] + w - self.lower["D_x"] - differentiate(u, g) - sp + sm
        return F1, F2

    def lower_companion(self, z, u, d):
        """Time derivative perturbation of the lower field from ``F1 = 0``."""
        a = self.a0 + d
        U = self.upper["D"] + z
        P = self.lower["D"] + u
        lo_t = (self.upper["D_x"] + differentiate(z, self.grid)
                - np.sin(0.5 * (U + P)) / a - a * np.sin(0.5 * (U - P)))
        return lo_t - self.lower["D_t"]

    def upper_companion(self, z, u, s, d):
        """Time derivative perturbation of the upper field from ``F2 = 0``."""
        a = self.a0 + d
        U = self.upper["D"] + z
        P = self.lower["D"] + u
        up_t = (self.lower["D_x"] + differentiate(u, self.grid)
                + np.sin(0.5 * (U + P)) / a - a * np.sin(0.5 * (U - P)))
        return up_t - self.upper["D_t"]


def _zero_profile(x):
    z = np.zeros_like(x)
    return dict(D=z, D_t=z, D_x=z)


def _profile(kind, p, x):
    out = _closed_forms(kind, p, x)
    return dict(D=out["D"], D_t=out["D_t"], D_x=out["D_x"])


def bt_level(name: str, p: SolitonParams, grid: Grid) -> Level:
    """Build one of the exact links of the descent diagrams.

    ``"KB"``: K --β+iα--> B, ``"KbarB"``: K̄ --β-iα--> B, ``"0K"``: 0 --β-iα--> K,
    ``"0Kbar"``: 0 --β+iα--> K̄, ``"QA"``/``"QR"``: Q(-β, x1+x2) --±a(β)--> A/R,
    ``"0Q"``: 0 --a(-β)--> Q(-β, x1+x2).
    """
    x = grid.x
    b, al = p.beta, p.alpha
    F = IntegratingFactorKind
    if name == "KB":
        return Level(name, _profile(ProfileKind.BREATHER, p, x), _profile(ProfileKind.COMPLEX_KINK, p, x),
                     complex(b, al), _mu(F.MuB, p, x), grid)
    if name == "KbarB":
        return Level(name, _profile(ProfileKind.BREATHER, p, x), _profile(ProfileKind.CONJUGATE_KINK, p, x),
                     complex(b, -al), _mu(F.MuBbar, p, x), grid)
    if name == "0K":
        return Level(name, _profile(ProfileKind.COMPLEX_KINK, p, x), _zero_profile(x),
                     complex(b, -al), _mu(F.MuK, p, x), grid)
    if name == "0Kbar":
        return Level(name, _profile(ProfileKind.CONJUGATE_KINK, p, x), _zero_profile(x),
                     complex(b, al), _mu(F.MuKbar, p, x), grid)
    q = _profile(partner_kink(p), None, x)
    ab = complex(BTParameter.of_speed(b))
    if name == "QA":
        return Level(name, _profile(ProfileKind.KINK_ANTIKINK, p, x), q, ab, _mu(F.MuA, p, x), grid)
    if name == "QR":
        return Level(name, _profile(ProfileKind.TWO_KINK, p, x), q, -ab, _mu(F.MuR, p, x), grid)
    if name == "0Q":
        return Level(name, q, _zero_profile(x), 1.0 / ab, _mu(F.MuQ_decaying, p, x), grid)
    raise ValueError(f"unknown level {name!r}")


_FACTOR_LEVEL = {
    IntegratingFactorKind.MuK: "0K",
    IntegratingFactorKind.MuKbar: "0Kbar",
    IntegratingFactorKind.MuB: "KB",
    IntegratingFactorKind.MuBbar: "KbarB",
    IntegratingFactorKind.MuR: "QR",
    IntegratingFactorKind.MuA: "QA",
    IntegratingFactorKind.MuQ_decaying: "0Q",
}


def factor_ode_residual(kind, p: SolitonParams, g: Grid) -> np.ndarray:
    """``mu_x - c mu`` for decaying factors; ``(mu_x + c mu)/mu`` for their reciprocals.

    The reciprocal factors grow exponentially, so their residual is reported
    relative to the factor itself (the ODE divided by the nowhere-zero ``mu``).
    """
    kind = IntegratingFactorKind(kind)
    base = _INVERSE.get(kind, kind)
    lev = bt_level(_FACTOR_LEVEL[base], p, g)
    mu = integrating_factor(kind, p, g)
    if kind in _INVERSE:
        return differentiate(mu, g) / mu + lev.c
    return differentiate(mu, g) - lev.c * mu


# --------------------------------------------------------------------------
# linear solves


def _split_index(mu):
    return int(np.argmax(np.abs(mu)))


def _delta_solve(mu, f, g_field, grid):
    """Select δ with ``∫ mu (f + δ g) = 0`` and integrate ``(mu u)_x = mu (f + δ g)``.

    The running integral is taken from the left edge on the left of the peak
    of ``|mu|`` and from the right edge on its right, so the division by a
    small ``mu`` never amplifies the rounding of a vanishing total.
    """
    Cf = cumulative_integral(mu * f, grid, "left")
    if g_field is None:
        delta = 0.0
        Cg = 0.0
    else:
        Cg = cumulative_integral(mu * g_field, grid, "left")
        pairing = Cg[-1]
        if abs(pairing) < PAIRING_FLOOR:
            raise IllPosedSolveError(f"selection integral is {abs(pairing):.3g}")
        delta = -Cf[-1] / pairing
    h = mu * f + (0.0 if g_field is None else delta * mu * g_field)
    left = cumulative_integral(h, grid, "left")
    right = cumulative_integral(h, grid, "right")
    k = _split_index(mu)
    C = np.concatenate([left[: k + 1], right[k + 1:]])
    return C / mu, delta


def _boundary_solve_parts(mu, f, grid):
    """Particular solution ``mu ∫_0^x f/mu`` of ``u_x - c u = f``."""
    return mu * cumulative_integral(f / mu, grid, "zero")


def solve_constrained_ode(mu, f, grid: Grid, g_field=None, mode="delta", *, c=0.0, weights=None,
                          companion=None):
    """Solve the linearised Bäcklund ODE behind a descent or an ascent step.

    ``mode="delta"``: ``u_x + c u = f + δ g`` (``mu_x = c mu``); δ makes
    ``∫ mu (f + δ g) = 0`` so that ``u = (1/mu) ∫_{-∞}^x mu (f + δ g)`` decays.
    Returns ``(u, δ)``.

    ``mode="boundary"``: ``u_x - c u = f``, i.e.
    ``u = (mu/mu(0)) u(0) + mu ∫_0^x f/mu``. The free value is fixed by the
    linear functional ``∫ u W1 + ∫ s W2 = c`` where ``weights = (W1, W2)`` and
    the companion ``s = s0 + e u`` is given as ``companion = (s0, e)``.
    Returns ``(u, u(0))``.
    """
    mu = np.asarray(mu)
    f = np.asarray(f)
    if mode == "delta":
        return _delta_solve(mu, f, g_field, grid)
    if mode != "boundary":
        raise ValueError(f"unknown mode {mode!r}")
    if weights is None:
        raise ValueError("boundary mode needs constraint weights")
    W1, W2 = weights
    s0, e = companion if companion is not None else (0.0, 0.0)
    part = _boundary_solve_parts(mu, f, grid)
    kernel = W1 + e * W2
    pairing = integrate(mu * kernel, grid)
    if abs(pairing) < PAIRING_FLOOR:
        raise IllPosedSolveError(f"constraint pairing is {abs(pairing):.3g}")
    current = integrate(part * kernel, grid) + integrate(s0 * W2, grid)
    lam = (c - current) / pairing
    u = part + lam * mu
    return u, u[grid.center_index]


# --------------------------------------------------------------------------
# nonlinear solvers


@dataclass
class DescentResult:
    """Perturbation ``(u, s)`` at the solved level and the parameter correction."""

    u: np.ndarray
    s: np.ndarray
    param_correction: complex
    residual_norm: float
    iterations: int
    level: str = ""
    constraint: complex = 0.0

    @property
    def pair(self) -> FieldPair:
        return FieldPair(self.u, self.s)


def _l2(f, grid):
    return float(np.sqrt(max(float(np.real(integrate(np.abs(f) ** 2, grid))), 0.0)))


def _check_decay(u, name):
    n = max(1, int(round(0.01 * len(u))))
    edge = max(np.max(np.abs(u[:n])), np.max(np.abs(u[-n:])))
    if not edge < DECAY_TOL:
        raise DescentError(f"{name}: solution does not decay at the grid edges (|u| = {edge:.3g})")


def descend(level: Level, z, w, tol: float = 1e-10, max_iter: int = MAX_ITER) -> DescentResult:
    """Find the lower perturbation and parameter correction for upper data ``(z, w)``."""
    grid = level.grid
    z = np.asarray(z)
    w = np.asarray(w)
    mu, gf = level.mu, level.g
    u = np.zeros(grid.N, dtype=complex)
    d = 0.0 + 0.0j
    zeros = np.zeros(grid.N)
    r = level.residual((z, w), (u, zeros), d)[1]
    res = _l2(r, grid)
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        du, dd = _delta_solve(mu, r, gf, grid)
        step = 1.0
        for _ in range(20):
            u_new, d_new = u + step * du, d + step * dd
            r_new = level.residual((z, w), (u_new, zeros), d_new)[1]
            res_new = _l2(r_new, grid)
            if np.isfinite(res_new) and res_new < res:
                break
            step *= 0.5
        else:
            raise DescentError(f"{level.name}: descent stalled at residual {res:.3g}")
        u, d, r, res = u_new, d_new, r_new, res_new
    if res >= tol:
        raise DescentError(f"{level.name}: no convergence in {max_iter} iterations (residual {res:.3g})")
    _check_decay(u, level.name)
    s = level.lower_companion(z, u, d)
    return DescentResult(u, s, complex(d), res, it, level.name)


def ascend(level: Level, u, s, d, weights, c=0.0, tol: float = 1e-10,
           max_iter: int = MAX_ITER) -> DescentResult:
    """Find the upper perturbation for lower data ``(u, s)`` and parameter ``a0 + d``.

    The free multiple of the homogeneous solution is fixed by
    ``∫ z W1 + ∫ w W2 = c`` with ``weights = (W1, W2)``.
    """
    grid = level.grid
    u = np.asarray(u)
    s = np.asarray(s)
    W1, W2 = weights
    mu, e = level.mu, level.e
    z = np.zeros(grid.N, dtype=complex)

    def state(z):
        F1 = level.residual((z, np.zeros(grid.N)), (u, s), d)[0]
        w = level.upper_companion(z, u, s, d)
        gap = integrate(z * W1, grid) + integrate(w * W2, grid) - c
        return F1, w, gap

    F1, w, gap = state(z)
    res = _l2(F1, grid) + abs(gap)
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        dz, _ = solve_constrained_ode(mu, -F1, grid, mode="boundary", c=-gap, weights=(W1, W2),
                                      companion=(0.0, e))
        step = 1.0
        for _ in range(20):
            z_new = z + step * dz
            F1n, wn, gapn = state(z_new)
            res_new = _l2(F1n, grid) + abs(gapn)
            if np.isfinite(res_new) and res_new < res:
                break
            step *= 0.5
        else:
            raise DescentError(f"{level.name}: ascent stalled at residual {res:.3g}")
        z, F1, w, gap, res = z_new, F1n, wn, gapn, res_new
    if res >= tol:
        raise DescentError(f"{level.name}: no convergence in {max_iter} iterations (residual {res:.3g})")
    _check_decay(z, level.name)
    return DescentResult(z, w, complex(d), res, it, level.name, complex(c))


def _grid_for(z0, grid):
    return grid if grid is not None else Grid(40.0, len(z0))


def _weights_nondegenerate(kind, p, grid):
    """``(D̃0, D)``: weights of the constraint at the intermediate level."""
    kind = ProfileKind.parse(kind)
    return nondegeneracy_profile(kind, p, grid), _closed_forms(kind, p, grid.x)["D"]


def _weights_orthogonal(kind, p, grid, j=1):
    return tuple(shift_derivatives(kind, p, grid, j))


def constraint_value(pair, weights, grid):
    """``∫ u W1 + ∫ s W2``."""
    return integrate(pair[0] * weights[0], grid) + integrate(pair[1] * weights[1], grid)


def descend_breather(z0, w0, p: SolitonParams, tol: float = 1e-10, grid: Grid = None,
                     conjugate: bool = False) -> DescentResult:
    """``B + z0 --β+iα+δ--> K + u0``; ``conjugate=True`` descends to ``K̄`` with ``β-iα+δ``.

    The returned ``constraint`` is ``∫(u0, s0)·(B̃0, B)``, the value an ascent
    needs to recover ``(u0, s0)``.
    """
    grid = _grid_for(z0, grid)
    lev = bt_level("KbarB" if conjugate else "KB", p, grid)
    res = descend(lev, z0, w0, tol)
    W = _weights_nondegenerate(ProfileKind.BREATHER, p, grid)
    if conjugate:
        W = (np.conj(W[0]), W[1])
    res.constraint = complex(constraint_value(res.pair, W, grid))
    return res


def descend_kink_to_zero(u0, s0, p: SolitonParams, tol: float = 1e-10, grid: Grid = None,
                         conjugate: bool = False) -> DescentResult:
    """``K + u0 --β-iα+δ̃--> (y0, v0)`` (or from ``K̄`` with ``β+iα+δ̃``)."""
    grid = _grid_for(u0, grid)
    return descend(bt_level("0Kbar" if conjugate else "0K", p, grid), u0, s0, tol)


def ascend_zero_to_kink(y, v, delta_tilde, p: SolitonParams, constraint_c=0.0, tol: float = 1e-10,
                        grid: Grid = None, conjugate: bool = False) -> DescentResult:
    """``(y, v) --β-iα+δ̃--> K + u`` with ``∫(u, s)·(B̃0, B) = constraint_c``."""
    grid = _grid_for(y, grid)
    W = _weights_nondegenerate(ProfileKind.BREATHER, p, grid)
    if conjugate:
        W = (np.conj(W[0]), W[1])
    lev = bt_level("0Kbar" if conjugate else "0K", p, grid)
    return ascend(lev, y, v, delta_tilde, W, constraint_c, tol)


def ascend_kink_to_breather(u, s, delta, p: SolitonParams, tol: float = 1e-10, grid: Grid = None,
                            conjugate: bool = False, target=0.0) -> DescentResult:
    """``K + u --β+iα+δ--> B + z`` with ``∫(z, w)·(B1, (B1)_t) = target``."""
    grid = _grid_for(u, grid)
    lev = bt_level("KbarB" if conjugate else "KB", p, grid)
    W = _weights_orthogonal(ProfileKind.BREATHER, p, grid, 1)
    return ascend(lev, u, s, delta, W, target, tol)


def _two_levels(kind):
    kind = ProfileKind.parse(kind)
    if kind is ProfileKind.TWO_KINK:
        return kind, "QR"
    if kind is ProfileKind.KINK_ANTIKINK:
        return kind, "QA"
    raise ValueError(f"expected a 2-kink or kink-antikink, got {kind}")


def descend_2soliton(z0, w0, kind, p: SolitonParams, tol: float = 1e-10, grid: Grid = None):
    """``D + z0 --d+b--> Q + u0 --a(-β)+b̃--> (y0, v0)``; returns both results."""
    grid = _grid_for(z0, grid)
    kind, name = _two_levels(kind)
    top = descend(bt_level(name, p, grid), z0, w0, tol)
    top.constraint = complex(constraint_value(top.pair, _weights_nondegenerate(kind, p, grid), grid))
    bottom = descend(bt_level("0Q", p, grid), np.real_if_close(top.u), np.real_if_close(top.s), tol)
    return top, bottom


def ascend_2soliton(y, v, b_tilde, b, kind, p: SolitonParams, tol: float = 1e-10, grid: Grid = None,
                    constraint_c=None, target=0.0):
    """``(y, v) --a(-β)+b̃--> Q + u --d+b--> D + z``.

    With ``constraint_c`` given, the intermediate constraint uses that value
    (round-trip mode). Otherwise the value is chosen so that the final
    ``(z, w)`` is also orthogonal to ``(D2, (D2)_t)`` (self-consistent mode).
    """
    grid = _grid_for(y, grid)
    kind, name = _two_levels(kind)
    mid = bt_level("0Q", p, grid)
    top = bt_level(name, p, grid)
    Wmid = _weights_nondegenerate(kind, p, grid)
    Wtop = _weights_orthogonal(kind, p, grid, 1)
    W2 = _weights_orthogonal(kind, p, grid, 2)

    def chain(c):
        r1 = ascend(mid, y, v, b_tilde, Wmid, c, tol)
        r2 = ascend(top, r1.u, r1.s, b, Wtop, target, tol)
        return r1, r2

    if constraint_c is not None:
        return chain(constraint_c)
    return _self_consistent(chain, W2, grid, tol)


def _self_consistent(chain, W2, grid, tol, max_iter=20):
    """Secant iteration on the intermediate constraint value ``c``."""

    def defect(c):
        r1, r2 = chain(c)
        return constraint_value(r2.pair, W2, grid), (r1, r2)

    c0, c1 = 0.0 + 0.0j, 1e-3 + 0.0j
    f0, out = defect(c0)
    if abs(f0) < tol:
        return out
    f1, out = defect(c1)
    for _ in range(max_iter):
        if abs(f1) < tol:
            return out
        if f1 == f0:
            break
        c0, c1 = c1, c1 - f1 * (c1 - c0) / (f1 - f0)
        f0 = f1
        f1, out = defect(c1)
    if abs(f1) < max(tol, 1e-9):
        return out
    raise DescentError(f"self-consistent constraint did not converge (defect {abs(f1):.3g})")


def ascend_breather_chain(y, v, delta_tilde, delta, p: SolitonParams, tol: float = 1e-10,
                          grid: Grid = None, constraint_c=None, target=0.0, conjugate=False):
    """``(y, v) → K + u → B + z``; same two modes as :func:`ascend_2soliton`."""
    grid = _grid_for(y, grid)
    W2 = _weights_orthogonal(ProfileKind.BREATHER, p, grid, 2)

    def chain(c):
        r1 = ascend_zero_to_kink(y, v, delta_tilde, p, c, tol, grid, conjugate)
        r2 = ascend_kink_to_breather(r1.u, r1.s, delta, p, tol, grid, conjugate, target)
        return r1, r2

    if constraint_c is not None:
        return chain(constraint_c)
    return _self_consistent(chain, W2, grid, tol)


# --------------------------------------------------------------------------
# nondegeneracy


def nondegeneracy_profile(kind, p: SolitonParams, g: Grid) -> np.ndarray:
    """``D̃0 = D_xxt + (D - D_tx) cos((D+L)/2)/(2d) - d (D + D_tx) cos((D-L)/2)/2``.

    ``L`` is the intermediate profile (``K`` for the breather, ``Q`` otherwise)
    and ``d`` the parameter of the link ``L → D``.
    """
    kind = ProfileKind.parse(kind)
    name = {ProfileKind.BREATHER: "KB", ProfileKind.TWO_KINK: "QR", ProfileKind.KINK_ANTIKINK: "QA"}[kind]
    lev = bt_level(name, p, g)
    out = _closed_forms(kind, p, g.x)
    D, D_tx = out["D"], out["D_tx"]
    d = lev.a0
    return out["D_txx"] + (D - D_tx) * lev.cos_plus / (2 * d) - 0.5 * d * (D + D_tx) * lev.cos_minus


def _default_grid(beta):
    L = 40.0 if abs(beta) >= 0.2 else 80.0
    return Grid(L, 4096 if L == 40.0 else 8192)


def nondegeneracy_integral(x1: float, beta: float, grid: Grid = None, x2: float = 0.0) -> complex:
    """``I(x1, β) = ∫ B̃0 K_x``."""
    p = SolitonParams(beta, x1, x2)
    _check_regular(x1, p)
    grid = grid if grid is not None else _default_grid(beta)
    Kx = _closed_forms(ProfileKind.COMPLEX_KINK, p, grid.x)["D_x"]
    return complex(integrate(nondegeneracy_profile(ProfileKind.BREATHER, p, grid) * Kx, grid))


def almost_orthogonality_defect(p: SolitonParams, g: Grid) -> complex:
    """The four-term combination that must vanish for the exact breather/kink pair."""
    B = _closed_forms(ProfileKind.BREATHER, p, g.x)
    K = _closed_forms(ProfileKind.COMPLEX_KINK, p, g.x)
    a = complex(p.beta, p.alpha)
    Bv, Btx = B["D"], B["D_tx"]
    return complex(
        1j * np.imag(integrate(Btx * K["D_x"], g))
        - 1j * np.imag(integrate(Bv * K["D_t"], g))
        - integrate((Bv - Btx) * np.sin(0.5 * (Bv + K["D"])), g) / a
        - a * integrate((Bv + Btx) * np.sin(0.5 * (Bv - K["D"])), g)
    )
