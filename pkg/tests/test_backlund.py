import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgsoliton.backlund import (
    BTParameter,
    DescentError,
    IntegratingFactorKind,
    almost_orthogonality_defect,
    ascend_2soliton,
    ascend_breather_chain,
    bt_level,
    bt_residual,
    constraint_value,
    descend_2soliton,
    descend_breather,
    descend_kink_to_zero,
    factor_ode_residual,
    integrating_factor,
    nondegeneracy_integral,
)
from sgsoliton.experiments import gaussian_perturbation
from sgsoliton.numerics import FieldPair, Grid, energy_norm, integrate
from sgsoliton.profiles import SingularProfileError, _closed_forms, partner_kink, shift_derivatives

LEVELS = ["0Q", "0K", "0Kbar", "KB", "KbarB", "QA", "QR"]


@pytest.mark.parametrize("name", LEVELS)
def test_exact_links_satisfy_the_backlund_system(name, grid, params):
    lev = bt_level(name, params, grid)
    up = FieldPair(lev.upper["D"], lev.upper["D_t"])
    lo = FieldPair(lev.lower["D"], lev.lower["D_t"])
    F1, F2 = bt_residual(up, lo, lev.a0, grid)
    assert max(np.max(np.abs(F1)), np.max(np.abs(F2))) < 1e-9
    # the frozen-profile residual uses closed-form derivatives and is tighter still
    zero = np.zeros(grid.N)
    G1, G2 = lev.residual((zero, zero), (zero, zero))
    assert max(np.max(np.abs(G1)), np.max(np.abs(G2))) < 1e-12


def test_wrong_parameter_breaks_the_link(grid, params):
    lev = bt_level("KB", params, grid)
    up = FieldPair(lev.upper["D"], lev.upper["D_t"])
    lo = FieldPair(lev.lower["D"], lev.lower["D_t"])
    F1, _ = bt_residual(up, lo, np.conj(lev.a0), grid)
    assert np.max(np.abs(F1)) > 1e-2
    with pytest.raises(ValueError):
        bt_residual(up, lo, 0.0, grid)
    with pytest.raises(ValueError):
        bt_level("QB", params, grid)


def test_parameters():
    assert complex(BTParameter.of_speed(0.6)) == pytest.approx(2.0)
    assert complex(BTParameter.a2(0.6)) == pytest.approx(0.5)
    assert complex(BTParameter.a3(0.6)) == pytest.approx(-2.0)
    assert complex(BTParameter.breather(0.6, -1)) == pytest.approx(0.6 - 0.8j)
    with pytest.raises(ValueError):
        BTParameter(0)


def test_integral_identities(grid, params):
    b, a, g = params.beta, params.alpha, params.gamma
    x = grid.x
    F = IntegratingFactorKind
    K = _closed_forms("complex_kink", params, x)
    B = _closed_forms("breather", params, x)
    A = _closed_forms("kink_antikink", params, x)
    R = _closed_forms("two_kink", params, x)
    Q = _closed_forms(partner_kink(params), None, x)
    mu = lambda k: integrating_factor(k, params, grid)
    assert abs(integrate(mu(F.MuK) * np.sin(K["D"] / 2), grid) - 2 / b) < 1e-8
    assert abs(integrate(mu(F.MuB) * (B["D_x"] - K["D_t"]), grid) + 4j / (a * b)) < 1e-8
    assert abs(integrate(mu(F.MuA) * (A["D_x"] - Q["D_t"]), grid) + 4 / b) < 1e-8
    assert abs(integrate(mu(F.MuR) * (R["D_x"] - Q["D_t"]), grid) - 4 / b) < 1e-8
    assert abs(integrate(mu(F.MuQ_decaying) * np.sin(Q["D"] / 2), grid) - 2 / g) < 1e-8


def test_almost_orthogonality(grid, params):
    assert abs(almost_orthogonality_defect(params, grid)) < 1e-8


@pytest.mark.parametrize("kind", list(IntegratingFactorKind))
def test_integrating_factor_odes(kind, grid, params):
    res = factor_ode_residual(kind, params, grid)
    assert np.max(np.abs(res[3:-3])) < 1e-8
    assert np.all(np.abs(integrating_factor(kind, params, grid)) > 0)


def _roundtrip(kind, params, grid, eta=1e-3, seed=0):
    z0, w0 = gaussian_perturbation(grid, eta, seed)
    W1 = tuple(shift_derivatives(kind, params, grid, 1))
    target = constraint_value((z0, w0), W1, grid)
    if kind == "breather":
        top = descend_breather(z0, w0, params, grid=grid)
        bottom = descend_kink_to_zero(top.u, top.s, params, grid=grid)
        _, up = ascend_breather_chain(bottom.u, bottom.s, bottom.param_correction, top.param_correction,
                                      params, grid=grid, constraint_c=top.constraint, target=target)
    else:
        top, bottom = descend_2soliton(z0, w0, kind, params, grid=grid)
        _, up = ascend_2soliton(bottom.u, bottom.s, bottom.param_correction, top.param_correction, kind,
                                params, grid=grid, constraint_c=top.constraint, target=target)
    return (z0, w0), top, bottom, up


@pytest.mark.parametrize("kind", ["breather", "two_kink", "kink_antikink"])
def test_descent_then_ascent_returns_the_perturbation(kind, grid, params):
    (z0, w0), top, bottom, up = _roundtrip(kind, params, grid)
    assert energy_norm(FieldPair(up.u - z0, up.s - w0), grid) < 1e-7
    assert np.max(np.abs(np.imag(bottom.u))) < 1e-8
    # the vacuum datum is of the size of the perturbation
    assert 0.1 < energy_norm(FieldPair(np.real(bottom.u), np.real(bottom.s)), grid) / 1e-3 < 10


def test_descended_data_satisfy_the_perturbed_links(grid, params):
    (z0, w0), top, bottom, _ = _roundtrip("two_kink", params, grid)
    lev = bt_level("QR", params, grid)
    F1, F2 = lev.residual((z0, w0), (top.u, top.s), top.param_correction)
    assert max(np.max(np.abs(F1)), np.max(np.abs(F2))) < 1e-9
    assert abs(np.imag(top.param_correction)) < 1e-9


def test_zero_perturbation_descends_to_zero(grid, params):
    z = np.zeros(grid.N)
    top = descend_breather(z, z, params, grid=grid)
    assert np.max(np.abs(top.u)) < 1e-12 and abs(top.param_correction) < 1e-12


def test_descent_reports_non_convergence(grid, params):
    from sgsoliton.backlund import descend
    z, w = gaussian_perturbation(grid, 0.5, 0)
    with pytest.raises(DescentError):
        descend(bt_level("KB", params, grid), z, w, tol=1e-14, max_iter=1)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.9])
def test_nondegeneracy_integral_is_real_and_nonzero(beta):
    for x1 in np.linspace(0.0, 2 * np.pi / np.sqrt(1 - beta**2), 9)[:-1]:
        if abs(np.cos(np.sqrt(1 - beta**2) * x1)) < 1e-2:
            continue
        I = nondegeneracy_integral(x1, beta)
        assert abs(I.imag) < 1e-8
        assert I.real < 0


def test_nondegeneracy_integral_converges():
    g = Grid(40.0, 4096)
    I = nondegeneracy_integral(0.4, 0.5, g)
    assert abs(nondegeneracy_integral(0.4, 0.5, g.refined()) - I) < 1e-7


def test_nondegeneracy_integral_at_singular_shift():
    alpha = np.sqrt(1 - 0.25)
    with pytest.raises(SingularProfileError):
        nondegeneracy_integral(np.pi / (2 * alpha), 0.5)


def test_conjugate_factors_are_conjugates(grid, params):
    F = IntegratingFactorKind
    assert_allclose(integrating_factor(F.MuKbar, params, grid), np.conj(integrating_factor(F.MuK, params, grid)),
                    atol=1e-14)
    assert_allclose(integrating_factor(F.MuBbar, params, grid), np.conj(integrating_factor(F.MuB, params, grid)),
                    atol=1e-14)


# Regression baselines from the module's own refined quadrature (L = 80, N = 16384 agrees to 2.5e-10).
@pytest.mark.parametrize("beta", [0.2, 0.3, 0.5, 0.7, 0.9])
def test_nondegeneracy_baseline_on_the_axis(beta):
    # observed closed form at x1 = 0
    assert nondegeneracy_integral(0.0, beta).real == pytest.approx(-32 * beta**3 / 3, abs=1e-12)


@pytest.mark.parametrize("x1, beta, value", [(0.4, 0.5, -1.8654077797235), (1.0, 0.3, -1.9328825038),
                                              (0.5, 0.9, -8.9579719164193)])
def test_nondegeneracy_baselines(x1, beta, value):
    assert nondegeneracy_integral(x1, beta).real == pytest.approx(value, abs=1e-8)
