"""Closed-form composition of two Bäcklund transformations and its checks.

Given a chain ``phi0 --a2--> phi1 --a1--> varphi1``, the composed solution

    phi3   = phi1   - 4 arctan(ℓ tan((varphi1 - phi0)/4)),
    phi3_t = phi1_t - ℓ (varphi1_t - phi0_t) / (cos²(·/4) + ℓ² sin²(·/4)),

with ``ℓ = (a1 - a2)/(a1 + a2)``, satisfies ``phi0 --a1--> phi3``. Values are
lifted to be continuous in ``x`` (jumps by multiples of ``4π`` removed), and
identities between multivalued arctangents are compared through tangents.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backlund import (
    ascend_kink_to_breather,
    ascend_zero_to_kink,
    bt_residual,
    constraint_value,
    descend_breather,
    descend_kink_to_zero,
)
from .numerics import FieldPair, Grid, energy_norm
from .profiles import ProfileKind, SolitonParams, _closed_forms, shift_derivatives

__all__ = [
    "CompositionParams",
    "CompositionSingularError",
    "compose_double_bt",
    "lift_4pi",
    "verify_permutability",
    "PermutabilityReport",
    "realness_shortcut",
    "conjugate_kink_identities",
    "tangent_identity_defect",
]

POLE_TOL = 1e-6


class CompositionSingularError(ValueError):
    """The composition formula is singular (``a1 = ±a2`` or a vanishing denominator)."""


@dataclass(frozen=True)
class CompositionParams:
    a1: complex
    a2: complex

    def __post_init__(self):
        a1, a2 = complex(self.a1), complex(self.a2)
        if a1 == a2 or a1 == -a2:
            raise CompositionSingularError("need a1 ≠ ±a2")

    @property
    def ell(self) -> complex:
        a1, a2 = complex(self.a1), complex(self.a2)
        return (a1 - a2) / (a1 + a2)

    @property
    def ell_tilde(self) -> complex:
        return 1.0 / self.ell


def lift_4pi(f):
    """Remove jumps by multiples of ``4π`` between neighbouring samples."""
    f = np.asarray(f)
    jumps = np.round(np.real(np.diff(f)) / (4 * np.pi))
    if not np.any(jumps):
        return f
    return f - 4 * np.pi * np.concatenate([[0.0], np.cumsum(jumps)])


def _arctan_ell_tan(ell, q):
    """``arctan(ℓ tan q)``; switches to ``±π/2 - arctan(cot q / ℓ)`` near poles of ``tan``."""
    c = np.cos(q)
    s = np.sin(q)
    near = np.abs(c) < POLE_TOL
    out = np.empty(np.shape(q), dtype=complex)
    out[~near] = np.arctan(ell * s[~near] / c[~near])
    if np.any(near):
        w = ell * s[near]
        # sign of Re(ℓ tan q), taken without dividing by the tiny cosine
        half = np.where(np.real(w * np.conj(c[near])) >= 0, 0.5, -0.5)
        out[near] = half * np.pi - np.arctan(c[near] / w)
    return out


def compose_double_bt(varphi1, phi0, phi1, cp: CompositionParams, grid: Grid = None,
                      check_tol: float = None) -> FieldPair:
    """Composed pair ``phi3`` of the chain ``phi0 --a2--> phi1 --a1--> varphi1``.

    With ``grid`` and ``check_tol`` given, both input links are verified with
    :func:`bt_residual` first.
    """
    if grid is not None and check_tol is not None:
        for up, lo, a in ((phi1, phi0, cp.a2), (varphi1, phi1, cp.a1)):
            F1, F2 = bt_residual(up, lo, a, grid)
            worst = max(np.max(np.abs(F1)), np.max(np.abs(F2)))
            if worst > check_tol:
                raise ValueError(f"input link violates the Bäcklund system (residual {worst:.3g})")
    ell = cp.ell
    q = 0.25 * (np.asarray(varphi1[0]) - np.asarray(phi0[0]))
    den = np.cos(q) ** 2 + ell**2 * np.sin(q) ** 2
    if np.min(np.abs(den)) < POLE_TOL**2:
        raise CompositionSingularError("1 + ℓ² tan² vanishes on the grid")
    phi3 = np.asarray(phi1[0]) - 4.0 * _arctan_ell_tan(ell, q)
    phi3_t = np.asarray(phi1[1]) - ell * (np.asarray(varphi1[1]) - np.asarray(phi0[1])) / den
    phi3 = lift_4pi(phi3)
    return FieldPair(np.real_if_close(phi3, tol=0), phi3_t)


def tangent_identity_defect(varphi1, phi0, phi1, phi2, cp: CompositionParams) -> float:
    """sup of ``tan((varphi1 - phi0)/4) + ℓ̃ tan((phi2 - phi1)/4)``."""
    lhs = np.tan(0.25 * (np.asarray(varphi1[0]) - np.asarray(phi0[0])))
    rhs = cp.ell_tilde * np.tan(0.25 * (np.asarray(phi2[0]) - np.asarray(phi1[0])))
    return float(np.max(np.abs(lhs + rhs)))


def realness_shortcut(z0, u0, delta, p: SolitonParams, g: Grid) -> np.ndarray:
    """Real ``y0`` from ``tan((B + z0 - y0)/4) = (β + Re δ)/(α + Im δ) · tanh(Im(K + u0)/2)``."""
    delta = complex(delta)
    den = p.alpha + delta.imag
    if abs(den) < 1e-14:
        raise CompositionSingularError("α + Im δ vanishes")
    B = _closed_forms(ProfileKind.BREATHER, p, g.x)["D"]
    K = _closed_forms(ProfileKind.COMPLEX_KINK, p, g.x)["D"]
    ratio = (p.beta + delta.real) / den
    y0 = B + np.real(z0) - 4.0 * np.arctan(ratio * np.tanh(0.5 * np.imag(K + u0)))
    return np.asarray(y0, dtype=float)


@dataclass
class PermutabilityReport:
    z_gap: float
    u_gap: float
    delta_gap: float
    delta_tilde_gap: float
    imag_y: float
    composition_gap: float
    delta: complex
    delta_tilde: complex

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_permutability(z0, w0, p: SolitonParams, tol: float = 1e-10,
                         grid: Grid = None) -> PermutabilityReport:
    """Descend through ``K``, ascend back through ``K̄`` and compare.

    Path ``K``: ``B + z0 --β+iα+δ--> K + u0 --β-iα+δ̃--> y0``.
    Path ``K̄``: ``y0 --β+iα+δ--> K̄ + ũ0 --β-iα+δ̃--> B + z̃0``.
    The report lists ``‖(z̃0, w̃0) - (z0, w0)‖``, ``‖(ũ0, s̃0) - conj(u0, s0)‖``,
    ``|δ̃ - conj δ|`` (realness of the parameters), ``|δ_conj - conj δ|``
    from a direct descent through ``K̄``, ``sup |Im y0|`` and the gap between
    the closed-form composition and the Newton-ascended ``K̄ + ũ0``.
    """
    grid = grid if grid is not None else Grid(40.0, len(z0))
    r1 = descend_breather(z0, w0, p, tol, grid)
    r2 = descend_kink_to_zero(r1.u, r1.s, p, tol, grid)
    y0 = np.real(r2.u)
    v0 = np.real(r2.s)
    c_bar = np.conj(r1.constraint)
    k1 = ascend_zero_to_kink(y0, v0, r1.param_correction, p, c_bar, tol, grid, conjugate=True)
    target = constraint_value((z0, w0), tuple(shift_derivatives(ProfileKind.BREATHER, p, grid, 1)), grid)
    k2 = ascend_kink_to_breather(k1.u, k1.s, r2.param_correction, p, tol, grid, conjugate=True,
                                 target=target)
    direct = descend_breather(z0, w0, p, tol, grid, conjugate=True)

    x = grid.x
    B = _closed_forms(ProfileKind.BREATHER, p, x)
    K = _closed_forms(ProfileKind.COMPLEX_KINK, p, x)
    Kb = _closed_forms(ProfileKind.CONJUGATE_KINK, p, x)
    a1 = complex(p.beta, p.alpha) + r1.param_correction
    a2 = complex(p.beta, -p.alpha) + r2.param_correction
    phi3 = compose_double_bt(
        FieldPair(B["D"] + z0, B["D_t"] + w0),
        FieldPair(y0, v0),
        FieldPair(K["D"] + r1.u, K["D_t"] + r1.s),
        CompositionParams(a1, a2),
    )
    newton = FieldPair(Kb["D"] + k1.u, Kb["D_t"] + k1.s)
    comp_gap = energy_norm(FieldPair(phi3.phi - newton.phi, phi3.phi_t - newton.phi_t), grid)

    return PermutabilityReport(
        z_gap=energy_norm(FieldPair(k2.u - z0, k2.s - w0), grid),
        u_gap=energy_norm(FieldPair(k1.u - np.conj(r1.u), k1.s - np.conj(r1.s)), grid),
        delta_gap=abs(direct.param_correction - np.conj(r1.param_correction)),
        delta_tilde_gap=abs(r2.param_correction - np.conj(r1.param_correction)),
        imag_y=float(max(np.max(np.abs(np.imag(r2.u))), np.max(np.abs(np.imag(r2.s))))),
        composition_gap=comp_gap,
        delta=complex(r1.param_correction),
        delta_tilde=complex(r2.param_correction),
    )


def conjugate_kink_identities(p: SolitonParams, g: Grid) -> dict:
    """Pointwise checks of the ``K - K̄``, ``sec²(B/4)`` and ``B_t sec²(B/4)`` identities.

    ``K - K̄`` is compared through tangents:
    ``tan((K - K̄)/4) = i sin(α x1)/cosh(β(x + x2))``. The key
    ``"K-Kbar alt"`` records the discrepancy of the variant whose argument
    keeps an extra factor ``α`` (``iα sin(α x1)/cosh``), which only matches
    when ``α = 1``.
    """
    x = g.x
    b, al = p.beta, p.alpha
    B = _closed_forms(ProfileKind.BREATHER, p, x)
    K = _closed_forms(ProfileKind.COMPLEX_KINK, p, x)
    Kb = _closed_forms(ProfileKind.CONJUGATE_KINK, p, x)
    s, c = np.sin(al * p.x1), np.cos(al * p.x1)
    C = np.cosh(b * (x + p.x2))
    ratio = b * s / (al * C)
    tan_diff = np.tan(0.25 * (K["D"] - Kb["D"]))
    ell = complex(0.0, al / b)
    lhs9 = B["D_t"] / np.cos(B["D"] / 4) ** 2 / (1 + ell**2 * np.tan(B["D"] / 4) ** 2)
    rhs9 = 4 * al**2 * b * c * C / (al**2 * C**2 + ell**2 * b**2 * s**2)
    return {
        "K-Kbar": float(np.max(np.abs(tan_diff - 1j * s / C))),
        "K-Kbar alt": float(np.max(np.abs(tan_diff - 1j * al * s / C))),
        "sec2(B/4)": float(np.max(np.abs(1.0 / np.cos(B["D"] / 4) ** 2 - (1 + ratio**2)))),
        "tan2(B/4)": float(np.max(np.abs(np.tan(B["D"] / 4) ** 2 - ratio**2))),
        "Bt sec2 ratio": float(np.max(np.abs(lhs9 - rhs9))),
    }
