"""Energy, momentum and how they change across a Bäcklund transformation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Grid, differentiate, integrate

__all__ = [
    "BoundaryLimits",
    "LimitUndefinedError",
    "energy",
    "energy_sin2",
    "momentum",
    "boundary_limits",
    "bt_transfer",
    "breather_identity",
]

LIMIT_WINDOW = 0.02
STATIONARY_WINDOW = 0.05
STATIONARY_TOL = 1e-6


class LimitUndefinedError(ValueError):
    """The boundary values of ``1 - cos((φ ± ϕ)/2)`` are not settled on the grid."""


@dataclass(frozen=True)
class BoundaryLimits:
    """Limits of ``1 - cos((φ ± ϕ)/2)`` at ``x → ±∞``.

    The first sign names the end (``Plus`` = ``+∞``), the second the sign
    inside the cosine.
    """

    lPlusPlus: complex
    lMinusPlus: complex
    lPlusMinus: complex
    lMinusMinus: complex


def _dens(p, grid):
    phi, phi_t = p
    phi_x = differentiate(phi, grid)
    return phi, phi_t, phi_x


def energy(p, grid: Grid):
    """``½∫(φ_x² + φ_t²) + ∫(1 - cos φ)`` (complex-valued for complex states)."""
    phi, phi_t, phi_x = _dens(p, grid)
    val = integrate(0.5 * (phi_x**2 + phi_t**2) + (1.0 - np.cos(phi)), grid)
    return val if np.iscomplexobj(val) else float(val)


def energy_sin2(p, grid: Grid):
    """Energy with the potential written as ``2 sin²(φ/2)``."""
    phi, phi_t, phi_x = _dens(p, grid)
    val = integrate(0.5 * (phi_x**2 + phi_t**2) + 2.0 * np.sin(0.5 * phi) ** 2, grid)
    return val if np.iscomplexobj(val) else float(val)


def momentum(p, grid: Grid):
    """``½∫ φ_t φ_x``."""
    phi, phi_t, phi_x = _dens(p, grid)
    val = integrate(0.5 * phi_t * phi_x, grid)
    return val if np.iscomplexobj(val) else float(val)


def _edge_limit(f, n_avg, n_check, end):
    tail = f[-n_check:] if end > 0 else f[:n_check]
    avg = f[-n_avg:] if end > 0 else f[:n_avg]
    lim = np.mean(avg)
    spread = np.max(np.abs(tail - lim))
    if spread > STATIONARY_TOL:
        raise LimitUndefinedError(
            f"tail of 1 - cos(...) varies by {spread:.3g} at the {'right' if end > 0 else 'left'} edge"
        )
    return complex(lim)


def boundary_limits(varphi, phi, grid: Grid) -> BoundaryLimits:
    """Estimate the four limits from the outer 2% of nodes; the outer 5% must be flat."""
    n_avg = max(1, int(round(LIMIT_WINDOW * grid.N)))
    n_check = max(n_avg, int(round(STATIONARY_WINDOW * grid.N)))
    up, lo = np.asarray(varphi[0]), np.asarray(phi[0])
    plus = 1.0 - np.cos(0.5 * (up + lo))
    minus = 1.0 - np.cos(0.5 * (up - lo))
    return BoundaryLimits(
        lPlusPlus=_edge_limit(plus, n_avg, n_check, +1),
        lMinusPlus=_edge_limit(plus, n_avg, n_check, -1),
        lPlusMinus=_edge_limit(minus, n_avg, n_check, +1),
        lMinusMinus=_edge_limit(minus, n_avg, n_check, -1),
    )


def bt_transfer(E_phi, P_phi, lims: BoundaryLimits, a):
    """Energy and momentum of the new solution from those of the old one."""
    if a == 0:
        raise ZeroDivisionError("Bäcklund parameter must be nonzero")
    dp = lims.lPlusPlus - lims.lMinusPlus
    dm = lims.lPlusMinus - lims.lMinusMinus
    E = E_phi + (2.0 / a) * dp + 2.0 * a * dm
    P = P_phi + (1.0 / a) * dp - a * dm
    return E, P


def breather_identity(E_y, P_y, delta, p):
    """Energy and momentum of a perturbed breather from its descended vacuum data."""
    delta = complex(delta)
    den = 1.0 + 2.0 * p.beta * delta.real + 2.0 * p.alpha * delta.imag + abs(delta) ** 2
    if abs(den) < 1e-14:
        raise ZeroDivisionError("|β + iα + δ| vanishes")
    s = p.beta + delta.real
    return E_y + 8.0 * s * (1.0 + 1.0 / den), P_y + 4.0 * s * (1.0 / den - 1.0)
