import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgsoliton.evolution import (
    CFLError,
    EvolvingState,
    Trajectory,
    blowup_monitor,
    evolve,
    laplacian,
    near_singular_energy,
    scan_blowups,
)
from sgsoliton.experiments import gaussian_perturbation
from sgsoliton.numerics import FieldPair, Grid, energy_norm
from sgsoliton.profiles import ExactSolution, RealKink, SolitonParams, eval_exact_solution, eval_profile

P0 = SolitonParams(0.5)
Q = P0.shifted(x1=0.4, x2=0.2)


def _difference_run(N, dt, T=2.0):
    """Evolve B(Q) - B(P0) around B(P0); the exact answer is the same difference at T."""
    g = Grid(40.0, N)
    z0 = eval_profile("breather", Q, g) - eval_profile("breather", P0, g)
    traj = evolve(EvolvingState(ExactSolution("breather", P0), z0, g), T, dt)
    exact = eval_exact_solution("breather", Q, T, g) - eval_exact_solution("breather", P0, T, g)
    return energy_norm(traj.states[-1] - exact, g)


def test_laplacian_is_fourth_order():
    errs = []
    for N in (101, 201, 401):
        g = Grid(10.0, N)
        f = np.exp(-g.x**2)
        errs.append(np.max(np.abs(laplacian(f, g.h) - (4 * g.x**2 - 2) * f)[2:-2]))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.8), rates


def test_time_order_is_two():
    errs = np.array([_difference_run(2049, dt) for dt in (0.016, 0.008, 0.004)])
    assert_allclose(errs[:-1] / errs[1:], 4.0, rtol=0.05)


def test_space_order_is_four():
    errs = np.array([_difference_run(N, 5e-4) for N in (513, 1025)])
    assert 13.0 < errs[0] / errs[1] < 18.0


@pytest.mark.parametrize("kind", ["breather", "two_kink", "kink_antikink"])
def test_exact_background_stays_exact(kind, grid):
    bg = ExactSolution(kind, SolitonParams(0.5, 0.3, -0.1))
    zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    traj = evolve(EvolvingState(bg, zero, grid), 2.0, outputs=[0.0, 1.0, 2.0])
    assert [energy_norm(s, grid) for s in traj.states] == [0.0, 0.0, 0.0]


def test_time_reversibility(grid):
    pert = gaussian_perturbation(grid, 1e-2, 3)
    bg = ExactSolution("two_kink", SolitonParams(0.5))
    fwd = evolve(EvolvingState(bg, pert, grid), 1.0)
    back = evolve(EvolvingState(bg, fwd.states[-1], grid, t=1.0), -1.0)
    assert back.times[-1] == 0.0
    assert energy_norm(back.states[-1] - pert, grid) < 1e-12


def test_energy_and_momentum_are_conserved(grid):
    bg = ExactSolution("breather", SolitonParams(0.5))
    traj = evolve(EvolvingState(bg, gaussian_perturbation(grid, 1e-3, 0), grid), 5.0,
                  outputs=np.linspace(0, 5, 6))
    E = np.array(traj.energy)
    P = np.array(traj.momentum)
    assert np.max(np.abs(E - E[0])) / abs(E[0]) < 1e-6
    assert np.max(np.abs(P - P[0])) < 1e-6


def test_output_times_are_hit_exactly(grid):
    zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    outs = [0.0, 0.013, 0.5, 1.0]
    traj = evolve(EvolvingState(None, zero, grid), 1.0, outputs=outs)
    assert traj.times == outs
    with pytest.raises(ValueError):
        evolve(EvolvingState(None, zero, grid), 1.0, outputs=[2.0])


def test_cfl_is_enforced(grid):
    zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    with pytest.raises(CFLError):
        evolve(EvolvingState(None, zero, grid), 1.0, dt=0.6 * grid.h)


def test_vacuum_wave_matches_linear_klein_gordon():
    # a tiny perturbation of the vacuum follows z_tt = z_xx - z; one Fourier mode is exact
    g = Grid(40.0, 4096)
    k = 2 * np.pi / 10.0
    omega = np.sqrt(1 + k * k)
    window = np.exp(-((g.x / 25.0) ** 16))  # flat to 1e-10 inside the light cone of |x| < 5
    z0 = 1e-6 * np.cos(k * g.x) * window
    traj = evolve(EvolvingState(ExactSolution(), FieldPair(z0, 0 * z0), g), 1.0)
    centre = np.abs(g.x) < 5
    expected = 1e-6 * np.cos(k * g.x) * np.cos(omega)
    assert_allclose(traj.states[-1].phi[centre], expected[centre], atol=1e-11)


def test_decay_warning():
    g = Grid(10.0, 512)
    state = EvolvingState(None, FieldPair(np.ones(g.N), np.zeros(g.N)), g)
    with pytest.warns(RuntimeWarning):
        assert not state.check_decay()


def test_trajectory_times_must_be_monotone(grid):
    traj = Trajectory(ExactSolution(), grid)
    z = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    traj.append(0.0, z, 0.0, 0.0)
    traj.append(1.0, z, 0.0, 0.0)
    with pytest.raises(ValueError):
        traj.append(0.5, z, 0.0, 0.0)
    with pytest.raises(ValueError):
        traj.append(1.0, z, 0.0, 0.0)


def test_rows_list_the_full_field():
    g = Grid(12.0, 64)
    bg = ExactSolution(RealKink(0.0, 0.0))
    traj = evolve(EvolvingState(bg, FieldPair(np.zeros(g.N), np.zeros(g.N)), g), 0.1)
    rows = list(traj.rows())
    assert len(rows) == 2 * g.N
    assert_allclose(rows[0][2], bg(0.0, g.x)[0][0])


def test_near_singular_energy(grid):
    s = 1.0 / np.cosh(grid.x)
    assert near_singular_energy(s, 0 * s, grid) == pytest.approx(0.5 * (2 + 2 / 3), rel=1e-9)


def test_monitor_flags_near_singular_time():
    g = Grid(40.0, 4096)
    p = SolitonParams(np.sqrt(3) / 2)
    state = EvolvingState(ExactSolution("complex_kink", p), FieldPair(np.zeros(g.N), np.zeros(g.N)), g,
                          t=np.pi - 0.01)
    rep = blowup_monitor(state, threshold=100.0)
    assert rep is not None
    assert rep.nearest_tk == pytest.approx(np.pi)
    assert rep.distance == pytest.approx(0.01)
    assert blowup_monitor(EvolvingState(state.background, state.perturbation, g, t=1.0), 100.0) is None


def test_scan_flags_each_singular_time():
    p = SolitonParams(np.sqrt(3) / 2)
    reps = scan_blowups(p, 10.0, Grid(40.0, 4096))
    assert len(reps) == 2
    for rep, tk in zip(reps, (np.pi, 3 * np.pi)):
        assert rep.nearest_tk == pytest.approx(tk)
        assert rep.distance < 0.05
