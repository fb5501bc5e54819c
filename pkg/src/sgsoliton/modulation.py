"""Fitting the shifts ``(x1, x2)`` of a 2-soliton to a nearby state.

For a state ``(φ, φ_t)`` close to the family ``D(·; β, x1, x2)`` the shifts are
chosen so that the remainder ``(z, w) = (φ - D, φ_t - D_t)`` is orthogonal to
both shift directions ``(D_j, (D_j)_t)``. The L² pairing
``∫ z D_j + w (D_j)_t`` is the default. An H¹ pairing in the first slot,
``∫ z D_j + z_x (D_j)_x + w (D_j)_t``, is also available.

Profiles are always the time-zero closed forms, so for an exact trajectory the
fitted shifts follow the drift law (``x1 + t`` for the breather,
``x1 + βt`` for the 2-kink and the kink-antikink).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .numerics import FieldPair, Grid, differentiate, energy_norm, integrate
from .profiles import TWO_SOLITONS, ProfileKind, SolitonParams, _closed_forms, shift_derivatives

__all__ = [
    "ModulationError",
    "ModulationFit",
    "ModulationTrack",
    "orthogonality_residual",
    "gram_matrix",
    "modulate_static",
    "modulate_trajectory",
    "drift_speed",
    "NU0",
    "TRUST_RADIUS",
]

NU0 = 0.1
TRUST_RADIUS = 0.5
FD_STEP = 1e-5
SCAN_SPAN = 1.5
SCAN_POINTS = 13


class ModulationError(RuntimeError):
    """Out of the tubular neighbourhood, singular Jacobian or no convergence."""


def _kind(kind) -> ProfileKind:
    kind = ProfileKind.parse(kind)
    if kind not in TWO_SOLITONS:
        raise ValueError(f"modulation is defined for 2-solitons, not {kind}")
    return kind


def drift_speed(kind, beta: float) -> float:
    """``dx1/dt`` of the exact solution: 1 for the breather, β for the kink pairs."""
    return 1.0 if _kind(kind) is ProfileKind.BREATHER else float(beta)


def _directions(kind, p, g, pairing):
    out = []
    for j in (1, 2):
        d, d_t = shift_derivatives(kind, p, g, j)
        d_x = differentiate(d, g) if pairing == "h1" else None
        out.append((d, d_t, d_x))
    return out


def _pair(z, w, direction, g, pairing):
    d, d_t, d_x = direction
    val = integrate(z * d + w * d_t, g)
    if pairing == "h1":
        val = val + integrate(differentiate(z, g) * d_x, g)
    return val


def orthogonality_residual(z, w, kind, p: SolitonParams, g: Grid, pairing: str = "l2"):
    """``(∫(z, w)·(D_1, (D_1)_t), ∫(z, w)·(D_2, (D_2)_t))``."""
    dirs = _directions(_kind(kind), p, g, pairing)
    return tuple(_pair(z, w, d, g, pairing) for d in dirs)


def gram_matrix(kind, p: SolitonParams, g: Grid, pairing: str = "l2") -> np.ndarray:
    """``G_ij = ⟨(D_i, (D_i)_t), (D_j, (D_j)_t)⟩``; diagonal when ``x2 = 0``."""
    dirs = _directions(_kind(kind), p, g, pairing)
    G = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            G[i, j] = np.real(_pair(dirs[i][0], dirs[i][1], dirs[j], g, pairing))
    return G


@dataclass
class ModulationFit:
    x1: float
    x2: float
    z: np.ndarray
    w: np.ndarray
    residual: tuple
    iterations: int

    @property
    def pair(self) -> FieldPair:
        return FieldPair(self.z, self.w)


def _remainder(state, kind, p, g):
    out = _closed_forms(kind, p, g.x)
    return np.asarray(state[0]) - out["D"], np.asarray(state[1]) - out["D_t"]


def _scan(state, kind, beta, g, center):
    best = (np.inf, center)
    offsets = np.linspace(-SCAN_SPAN, SCAN_SPAN, SCAN_POINTS)
    for a in offsets:
        for b in offsets:
            q = SolitonParams(beta, center[0] + a, center[1] + b)
            dist = energy_norm(FieldPair(*_remainder(state, kind, q, g)), g)
            if dist < best[0]:
                best = (dist, (q.x1, q.x2))
    return best


def _jacobian(state, kind, p, g, pairing):
    z, w = _remainder(state, kind, p, g)
    dirs = _directions(kind, p, g, pairing)
    J = np.empty((2, 2))
    for j, shift in enumerate(("x1", "x2")):
        v = getattr(p, shift)
        hi = _directions(kind, p.shifted(**{shift: v + FD_STEP}), g, pairing)
        lo = _directions(kind, p.shifted(**{shift: v - FD_STEP}), g, pairing)
        for i in range(2):
            d_dir = tuple(None if a is None else (a - b) / (2 * FD_STEP) for a, b in zip(hi[i], lo[i]))
            # ∂_j ⟨(z, w), D_i⟩ = -⟨D_j, D_i⟩ + ⟨(z, w), ∂_j D_i⟩
            J[i, j] = np.real(-_pair(dirs[j][0], dirs[j][1], dirs[i], g, pairing)
                              + _pair(z, w, d_dir, g, pairing))
    return J


def _accept(fit, g, nu0):
    dist = energy_norm(fit.pair, g)
    if dist > nu0:
        raise ModulationError(f"state is {dist:.3g} away from the profile family (ν0 = {nu0})")
    return fit


def modulate_static(state, kind, beta: float, guess=(0.0, 0.0), tol: float = 1e-10,
                    grid: Grid = None, pairing: str = "l2", nu0: float = NU0, max_iter: int = 30,
                    scan: bool = True) -> ModulationFit:
    """Newton fit of ``(x1, x2)`` so that the remainder is orthogonal to both shift directions.

    With ``scan=True`` a coarse scan around ``guess`` supplies the starting
    point. A Newton step longer than ``TRUST_RADIUS`` is rejected once in
    favour of a fresh scan. The fit is refused when the converged remainder is
    farther than ``nu0`` (energy norm) from the family.
    """
    kind = _kind(kind)
    if pairing not in ("l2", "h1"):
        raise ValueError(f"pairing must be 'l2' or 'h1', got {pairing!r}")
    g = grid if grid is not None else Grid(40.0, len(state[0]))
    state = (np.real_if_close(np.asarray(state[0])), np.real_if_close(np.asarray(state[1])))
    if np.iscomplexobj(state[0]) or np.iscomplexobj(state[1]):
        raise ValueError("modulation expects a real state")
    x = np.array(guess, dtype=float)
    if scan:
        x = np.array(_scan(state, kind, beta, g, x)[1])
    rescanned = not scan
    for it in range(1, max_iter + 1):
        p = SolitonParams(beta, x[0], x[1])
        z, w = _remainder(state, kind, p, g)
        F = np.real(np.array(orthogonality_residual(z, w, kind, p, g, pairing)))
        if np.max(np.abs(F)) < tol:
            return _accept(ModulationFit(x[0], x[1], z, w, tuple(F), it - 1), g, nu0)
        J = _jacobian(state, kind, p, g, pairing)
        if abs(np.linalg.det(J)) < 1e-12 * max(1.0, np.max(np.abs(J)) ** 2):
            raise ModulationError("singular modulation Jacobian")
        step = np.linalg.solve(J, -F)
        if np.linalg.norm(step) > TRUST_RADIUS:
            if rescanned:
                raise ModulationError(f"Newton step {np.linalg.norm(step):.3g} left the trust radius")
            rescanned = True
            x = np.array(_scan(state, kind, beta, g, x)[1])
            continue
        x = x + step
    p = SolitonParams(beta, x[0], x[1])
    z, w = _remainder(state, kind, p, g)
    F = np.real(np.array(orthogonality_residual(z, w, kind, p, g, pairing)))
    if np.max(np.abs(F)) < tol:
        return _accept(ModulationFit(x[0], x[1], z, w, tuple(F), max_iter), g, nu0)
    raise ModulationError(f"modulation did not converge (residual {np.max(np.abs(F)):.3g})")


@dataclass
class ModulationTrack:
    kind: ProfileKind
    beta: float
    grid: Grid
    times: np.ndarray = None
    x1: np.ndarray = None
    x2: np.ndarray = None
    z: list = field(default_factory=list)
    w: list = field(default_factory=list)
    residual_norm: np.ndarray = None
    orthogonality: np.ndarray = None
    failure: str = None

    @property
    def x1_speed(self) -> np.ndarray:
        return _speed(self.times, self.x1)

    @property
    def x2_speed(self) -> np.ndarray:
        return _speed(self.times, self.x2)

    def speed_deviation(self) -> np.ndarray:
        """``|x1' - drift| + |x2'|`` at every time."""
        return np.abs(self.x1_speed - drift_speed(self.kind, self.beta)) + np.abs(self.x2_speed)

    def rows(self):
        v1, v2 = self.x1_speed, self.x2_speed
        for i, t in enumerate(self.times):
            yield (t, self.x1[i], self.x2[i], v1[i], v2[i], self.residual_norm[i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "x1", "x2", "x1'", "x2'", "residual_norm"])
            for row in self.rows():
                out.writerow([format(v, ".17g") for v in row])


def _speed(t, x):
    if len(t) < 2:
        return np.zeros(len(t))
    return np.gradient(np.asarray(x), np.asarray(t))


def modulate_trajectory(traj, kind, beta: float, guess=None, tol: float = 1e-10,
                        pairing: str = "l2") -> ModulationTrack:
    """Modulate every snapshot, warm-starting each fit from the drift-law prediction.

    The initial guess defaults to the shifts of the trajectory's background.
    A failing snapshot truncates the track and the reason is kept in
    ``failure``.
    """
    kind = _kind(kind)
    g = traj.grid
    if guess is None:
        bp = getattr(traj.background, "p", None)
        guess = (bp.x1, bp.x2) if bp is not None else (0.0, 0.0)
    speed = drift_speed(kind, beta)
    times, x1s, x2s, zs, ws, norms, orth = [], [], [], [], [], [], []
    failure = None
    prev_t, prev = None, np.array(guess, dtype=float)
    for i, t in enumerate(traj.times):
        # the guess refers to t = 0; later snapshots continue from the previous fit
        dt = t if prev_t is None else t - prev_t
        start = prev + np.array([speed * dt, 0.0])
        try:
            fit = modulate_static(traj.total(i), kind, beta, tuple(start), tol, g, pairing,
                                  scan=prev_t is None)
        except ModulationError as err:
            failure = f"t = {t:.6g}: {err}"
            break
        times.append(t)
        x1s.append(fit.x1)
        x2s.append(fit.x2)
        zs.append(fit.z)
        ws.append(fit.w)
        norms.append(energy_norm(fit.pair, g))
        orth.append(max(abs(r) for r in fit.residual))
        prev_t, prev = t, np.array([fit.x1, fit.x2])
    return ModulationTrack(kind, beta, g, np.array(times), np.array(x1s), np.array(x2s), zs, ws,
                           np.array(norms), np.array(orth), failure)
