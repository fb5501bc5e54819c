import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgsoliton.backlund import BTParameter
from sgsoliton.conservation import (
    LimitUndefinedError,
    boundary_limits,
    breather_identity,
    bt_transfer,
    energy,
    energy_sin2,
    momentum,
)
from sgsoliton.numerics import FieldPair, Grid
from sgsoliton.profiles import ExactSolution, RealKink, SolitonParams, eval_profile


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_breather_energy_is_16_beta(beta, grid):
    B = eval_profile("breather", SolitonParams(beta, 0.3, -0.1), grid)
    assert energy(B, grid) == pytest.approx(16 * beta, abs=1e-8)
    assert energy(B, grid) == pytest.approx(energy_sin2(B, grid), abs=1e-12)
    assert abs(momentum(B, grid)) < 1e-8


@pytest.mark.parametrize("beta", [0.0, 0.6])
def test_moving_kink_energy_and_momentum(beta, grid):
    # E = 8γ and P = ½∫φ_t φ_x = -4βγ for a kink of speed β
    k = RealKink(0.3, beta)
    pair = ExactSolution(k).pair(0.0, grid)
    assert energy(pair, grid) == pytest.approx(8 * k.gamma, abs=1e-9)
    assert momentum(pair, grid) == pytest.approx(-4 * beta * k.gamma, abs=1e-9)


def test_two_soliton_energies_are_twice_a_kink(grid):
    p = SolitonParams(0.5, 0.3, -0.1)
    for kind in ("two_kink", "kink_antikink"):
        E = energy(eval_profile(kind, p, grid), grid)
        assert E == pytest.approx(16 * p.gamma, abs=1e-8)


def test_complex_states_give_complex_energy(grid):
    K = eval_profile("complex_kink", SolitonParams(0.5, 0.3), grid)
    assert np.iscomplexobj(energy(K, grid))


def test_transfer_from_vacuum_to_kink(grid):
    a = complex(BTParameter.of_speed(0.6))
    kink = ExactSolution(RealKink(0.0, 0.6)).pair(0.0, grid)
    zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    lims = boundary_limits(kink, zero, grid)
    E, P = bt_transfer(0.0, 0.0, lims, a)
    assert E.real == pytest.approx(energy(kink, grid), abs=1e-8)
    assert P.real == pytest.approx(momentum(kink, grid), abs=1e-8)
    with pytest.raises(ZeroDivisionError):
        bt_transfer(0.0, 0.0, lims, 0)


def test_limits_need_flat_tails():
    g = Grid(5.0, 256)
    with pytest.raises(LimitUndefinedError):
        boundary_limits(FieldPair(g.x, 0 * g.x), FieldPair(0 * g.x, 0 * g.x), g)


def test_breather_identity_degenerate_case():
    p = SolitonParams(0.5)
    E, P = breather_identity(0.0, 0.0, 0.0, p)
    assert E == 16 * p.beta and P == 0.0
    # E, P of the breather from δ = 0 in any scaling
    for beta in (0.2, 0.7):
        E, P = breather_identity(0.0, 0.0, 0.0, SolitonParams(beta))
        assert_allclose([E, P], [16 * beta, 0.0], atol=1e-15)
