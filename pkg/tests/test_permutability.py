import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgsoliton.backlund import bt_residual, descend_breather, descend_kink_to_zero
from sgsoliton.experiments import gaussian_perturbation
from sgsoliton.numerics import FieldPair
from sgsoliton.permutability import (
    CompositionParams,
    CompositionSingularError,
    _arctan_ell_tan,
    compose_double_bt,
    conjugate_kink_identities,
    lift_4pi,
    realness_shortcut,
    tangent_identity_defect,
    verify_permutability,
)
from sgsoliton.profiles import eval_profile


@pytest.fixture(scope="module")
def chain(grid, params):
    zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
    K = eval_profile("complex_kink", params, grid)
    B = eval_profile("breather", params, grid)
    Kb = eval_profile("conjugate_kink", params, grid)
    cp = CompositionParams(complex(params.beta, params.alpha), complex(params.beta, -params.alpha))
    return zero, K, B, Kb, cp


def test_composition_of_vacuum_kink_breather_is_conjugate_kink(chain, grid):
    zero, K, B, Kb, cp = chain
    phi3 = compose_double_bt(B, zero, K, cp, grid, check_tol=1e-9)
    assert_allclose(phi3.phi, Kb.phi, atol=1e-13)
    assert_allclose(phi3.phi_t, Kb.phi_t, atol=1e-13)
    # and it closes the square with the two swapped links
    for up, lo, a in ((phi3, zero, cp.a1), (B, phi3, cp.a2)):
        F1, F2 = bt_residual(up, lo, a, grid)
        assert max(np.max(np.abs(F1)), np.max(np.abs(F2))) < 1e-9


def test_composition_checks_its_inputs(chain, grid):
    zero, K, B, Kb, cp = chain
    with pytest.raises(ValueError):
        compose_double_bt(B, zero, Kb, cp, grid, check_tol=1e-9)


def test_tangent_identity(chain):
    zero, K, B, Kb, cp = chain
    assert tangent_identity_defect(B, zero, K, Kb, cp) < 1e-12


def test_composition_parameters():
    cp = CompositionParams(3.0, 1.0)
    assert cp.ell == 0.5 and cp.ell_tilde == 2.0
    for a2 in (3.0, -3.0):
        with pytest.raises(CompositionSingularError):
            CompositionParams(3.0, a2)


def test_arctan_near_poles_of_tangent():
    q = np.array([np.pi / 2 - 1e-9, np.pi / 2 + 1e-9, 0.3, -np.pi / 2 + 1e-12])
    ell = 0.7 + 0.1j
    ref = np.arctan(ell * np.tan(q.astype(complex)))
    out = _arctan_ell_tan(ell, q.astype(complex))
    # agree modulo π, the ambiguity of the arctangent branch
    d = (out - ref) / np.pi
    assert_allclose(d, np.round(d.real), atol=1e-6)


def test_lift_removes_4pi_jumps():
    f = np.linspace(0, 1, 50)
    jumped = f.copy()
    jumped[20:] += 4 * np.pi
    jumped[35:] -= 8 * np.pi
    assert_allclose(lift_4pi(jumped), f, atol=1e-14)
    assert lift_4pi(f) is f


def test_conjugate_kink_identities(grid, params):
    d = conjugate_kink_identities(params, grid)
    for key in ("K-Kbar", "sec2(B/4)", "tan2(B/4)", "Bt sec2 ratio"):
        assert d[key] < 1e-10, key
    # the variant with an extra α in the numerator is not an identity for α ≠ 1
    assert d["K-Kbar alt"] > 1e-3


@pytest.fixture(scope="module")
def perturbed(grid):
    return gaussian_perturbation(grid, 1e-3, 0)


def test_permutability_report(perturbed, grid, params):
    rep = verify_permutability(*perturbed, params, grid=grid)
    assert rep.z_gap < 1e-7
    assert rep.u_gap < 1e-7
    assert rep.delta_gap < 1e-9
    assert rep.delta_tilde_gap < 1e-9
    assert rep.imag_y < 1e-8
    assert rep.composition_gap < 1e-7
    assert abs(rep.delta) > 0


def test_unperturbed_report_is_trivial(grid, params):
    z = np.zeros(grid.N)
    rep = verify_permutability(z, z, params, grid=grid)
    assert max(rep.z_gap, rep.u_gap, rep.imag_y, rep.composition_gap, abs(rep.delta)) < 1e-12


def test_realness_shortcut_matches_second_descent(perturbed, grid, params):
    z0, w0 = perturbed
    r1 = descend_breather(z0, w0, params, grid=grid)
    r2 = descend_kink_to_zero(r1.u, r1.s, params, grid=grid)
    y0 = realness_shortcut(z0, r1.u, r1.param_correction, params, grid)
    assert_allclose(y0, np.real(r2.u), atol=1e-10)
