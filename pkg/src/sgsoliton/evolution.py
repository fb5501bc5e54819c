"""Time integration of sine-Gordon around an exact background.

The state is ``φ = D(t) + z`` with ``D`` an exact solution evaluated in closed
form. Since ``D`` solves the equation exactly, the perturbation obeys

    z_tt = z_xx - (sin(D + z) - sin D),

which is advanced with a velocity-Verlet (kick, drift, kick) step. The
Laplacian is the 4th-order five-point stencil and the perturbation is clamped
to zero on the two outermost nodes at each end. A zero perturbation of any
exact background therefore stays exactly zero, and the scheme is symmetric in
time, so stepping back from ``T`` returns the initial data up to rounding.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .conservation import energy, momentum
from .numerics import FieldPair, Grid, differentiate, integrate
from .profiles import EPS0, ExactSolution, singular_times

__all__ = [
    "EvolvingState",
    "Trajectory",
    "BlowupReport",
    "CFLError",
    "evolve",
    "blowup_monitor",
    "near_singular_energy",
    "laplacian",
    "scan_blowups",
    "BLOWUP_THRESHOLD",
]

BLOWUP_THRESHOLD = 1e6
CFL_LIMIT = 0.5
EDGE = 2
DECAY_RATIO = 1e-4


class CFLError(ValueError):
    """Time step larger than ``0.5 h``."""


def laplacian(z, h):
    """Five-point 4th-order ``z_xx`` on interior nodes; zero on the two outer nodes at each end."""
    out = np.zeros_like(z)
    out[2:-2] = (-z[:-4] + 16.0 * z[1:-3] - 30.0 * z[2:-2] + 16.0 * z[3:-1] - z[4:]) / (12.0 * h * h)
    return out


@dataclass
class EvolvingState:
    """Exact background plus a decaying perturbation at time ``t``."""

    background: ExactSolution
    perturbation: FieldPair
    grid: Grid
    t: float = 0.0

    def __post_init__(self):
        if self.background is None:
            self.background = ExactSolution()
        z, w = self.perturbation
        cplx = np.iscomplexobj(z) or np.iscomplexobj(w) or self.background.is_complex
        dtype = complex if cplx else float
        self.perturbation = FieldPair(np.array(z, dtype=dtype), np.array(w, dtype=dtype))
        if self.perturbation.phi.shape != self.grid.x.shape:
            raise ValueError("perturbation does not match the grid")

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.perturbation.phi)

    def background_pair(self) -> FieldPair:
        D, D_t, _ = self.background(self.t, self.grid.x)
        return FieldPair(D, D_t)

    def total(self) -> FieldPair:
        return self.background_pair() + self.perturbation

    def check_decay(self) -> bool:
        """Warn (and return False) when the perturbation is not small at the edges."""
        ok = True
        for f in self.perturbation:
            interior = np.max(np.abs(f))
            edge = max(np.max(np.abs(f[: 5 * EDGE])), np.max(np.abs(f[-5 * EDGE:])))
            if interior > 0 and edge > DECAY_RATIO * interior:
                ok = False
        if not ok:
            warnings.warn("perturbation does not decay at the grid edges; domain may be too small",
                          RuntimeWarning, stacklevel=2)
        return ok


@dataclass
class BlowupReport:
    t: float
    sup_phi_t: float
    nearest_tk: float = np.nan
    distance: float = np.nan


@dataclass
class Trajectory:
    """Snapshots of the perturbation at the output times, with conserved quantities.

    Times are strictly increasing for forward runs (decreasing for backward ones).
    """

    background: ExactSolution
    grid: Grid
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    blowup: BlowupReport = None

    def append(self, t, pert: FieldPair, E, P):
        if len(self.times) >= 2 and (t - self.times[-1]) * (self.times[-1] - self.times[-2]) <= 0:
            raise ValueError("trajectory times must be strictly monotone")
        if self.times and t == self.times[-1]:
            raise ValueError("repeated trajectory time")
        self.times.append(float(t))
        self.states.append(FieldPair(pert.phi.copy(), pert.phi_t.copy()))
        self.energy.append(E)
        self.momentum.append(P)

    def __len__(self):
        return len(self.times)

    def total(self, i) -> FieldPair:
        D, D_t, _ = self.background(self.times[i], self.grid.x)
        return FieldPair(D, D_t) + self.states[i]

    @property
    def blew_up(self) -> bool:
        return self.blowup is not None

    def rows(self):
        """``(t, x, Re φ, Im φ, Re φ_t, Im φ_t)`` rows of the full field."""
        x = self.grid.x
        for i, t in enumerate(self.times):
            phi, phi_t = self.total(i)
            phi = np.asarray(phi, dtype=complex)
            phi_t = np.asarray(phi_t, dtype=complex)
            for j in range(x.size):
                yield (t, x[j], phi[j].real, phi[j].imag, phi_t[j].real, phi_t[j].imag)


def near_singular_energy(z, w, grid: Grid) -> float:
    """``½∫(|z_x|² + |z|² + |w|²)``, the functional controlling the window around a singular time."""
    z = np.asarray(z)
    w = np.asarray(w)
    z_x = differentiate(z, grid)
    return float(0.5 * integrate(np.abs(z_x) ** 2 + np.abs(z) ** 2 + np.abs(w) ** 2, grid))


def blowup_monitor(state: EvolvingState, threshold: float = BLOWUP_THRESHOLD, p=None):
    """Report when ``sup|φ_t|`` of the full state exceeds ``threshold`` or is not finite.

    With soliton parameters ``p`` the report includes the nearest predicted
    singular time ``t_k = -x1 + (k + 1/2)π/α``.
    """
    phi, phi_t = state.total()
    finite = np.all(np.isfinite(phi)) and np.all(np.isfinite(phi_t))
    sup = float(np.max(np.abs(phi_t))) if finite else np.inf
    if finite and sup <= threshold:
        return None
    rep = BlowupReport(state.t, sup)
    p = p if p is not None else getattr(state.background, "p", None)
    if p is not None and state.background.is_complex:
        period = np.pi / p.alpha
        tks = singular_times(p, (state.t - period, state.t + period))
        if tks:
            tk = min(tks, key=lambda s: abs(s - state.t))
            rep.nearest_tk = tk
            rep.distance = abs(state.t - tk)
    return rep


def _force(state_bg, t, z, x, h):
    """Force on the perturbation and the background time derivative at ``t``."""
    D, D_t, _ = state_bg(t, x)
    f = laplacian(z, h) - (np.sin(D + z) - np.sin(D))
    f[:EDGE] = 0.0
    f[-EDGE:] = 0.0
    return f, D_t


def _conserved(bg, t, z, w, grid):
    D, D_t, _ = bg(t, grid.x)
    full = FieldPair(D + z, D_t + w)
    return energy(full, grid), momentum(full, grid)


def evolve(initial: EvolvingState, T: float, dt: float = None, outputs=None,
           blowup_threshold: float = BLOWUP_THRESHOLD, monitor_every: int = 1) -> Trajectory:
    """Advance ``initial`` to ``initial.t + T`` and record the requested outputs.

    ``T`` may be negative (backward integration). ``outputs`` are absolute
    times between the start and the end (default: start and end only). The
    step is shrunk slightly so every output time is hit exactly. Complex
    states are checked for blow-up every ``monitor_every`` steps; the
    trajectory stops at the first flag.
    """
    grid = initial.grid
    h = grid.h
    dt = CFL_LIMIT * 0.5 * h if dt is None else float(dt)
    if not 0 < dt <= CFL_LIMIT * h * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.4g} violates dt ≤ {CFL_LIMIT}·h = {CFL_LIMIT * h:.4g}")
    t0 = initial.t
    t_end = t0 + T
    if abs(T) > grid.L - 10:
        warnings.warn(f"|T| = {abs(T):g} exceeds L - 10; edge effects may reach the interior",
                      RuntimeWarning, stacklevel=2)
    initial.check_decay()
    sign = 1.0 if T >= 0 else -1.0
    outs = sorted({float(s) for s in (outputs if outputs is not None else [t0, t_end])},
                  key=lambda s: sign * s)
    for s in outs:
        if sign * (s - t0) < -1e-12 or sign * (s - t_end) > 1e-12:
            raise ValueError(f"output time {s} outside [{t0}, {t_end}]")

    bg = initial.background
    x = grid.x
    z = initial.perturbation.phi.copy()
    w = initial.perturbation.phi_t.copy()
    z[:EDGE] = z[-EDGE:] = 0.0
    w[:EDGE] = w[-EDGE:] = 0.0
    traj = Trajectory(bg, grid)
    monitor = initial.is_complex or bg.is_complex
    t = t0
    f, _ = _force(bg, t, z, x, h)
    step = 0
    for s in outs:
        span = s - t
        n = int(np.ceil(abs(span) / dt - 1e-9)) if abs(span) > 1e-14 else 0
        k = span / n if n else 0.0
        for _ in range(n):
            w += 0.5 * k * f
            z += k * w
            t += k
            f, D_t = _force(bg, t, z, x, h)
            w += 0.5 * k * f
            step += 1
            if monitor and step % monitor_every == 0:
                sup = np.max(np.abs(D_t + w))
                if not (np.isfinite(sup) and sup <= blowup_threshold and np.all(np.isfinite(z))):
                    traj.blowup = blowup_monitor(EvolvingState(bg, FieldPair(z, w), grid, t),
                                                 min(blowup_threshold, 0.5 * sup))
                    return traj
        t = s
        if traj.times and t == traj.times[-1]:
            continue
        E, P = _conserved(bg, t, z, w, grid)
        traj.append(t, FieldPair(z, w), E, P)
    return traj


def scan_blowups(p, T: float, grid: Grid, eps0: float = EPS0, threshold: float = None,
                 perturbation: FieldPair = None, dt: float = None) -> list:
    """Evolve the complex kink over ``[0, T]`` and collect every blow-up flag.

    The grid caps ``sup|K_t|`` near a singular time at roughly
    ``2α/(β·dist)``, where ``dist`` is the distance from the singular point to
    the nearest node. A flag threshold of ``1e6`` is therefore out of reach at
    practical resolutions. The scan uses ``4/eps0`` instead. Since
    ``sup|K_t| ≈ 2/|t - t_k|``, this flags about ``eps0/2`` before ``t_k``.
    After each flag the run restarts from the exact solution ``eps0`` past the
    predicted singular time.
    """
    threshold = 4.0 / eps0 if threshold is None else threshold
    bg = ExactSolution("complex_kink", p)
    z = perturbation if perturbation is not None else FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    reports = []
    t = 0.0
    while t < T:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = evolve(EvolvingState(bg, z, grid, t), T - t, dt, blowup_threshold=threshold)
        if not traj.blew_up:
            break
        rep = traj.blowup
        reports.append(rep)
        t_next = (rep.nearest_tk if np.isfinite(rep.nearest_tk) else rep.t) + eps0
        t = max(t_next, rep.t + eps0)
    return reports
