"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line at the contract tolerance."""
import os

import numpy as np
import pytest

from sgsoliton.conservation import breather_identity, energy, energy_sin2, momentum
from sgsoliton.evolution import EvolvingState, evolve
from sgsoliton.experiments import (
    blowup_rows,
    bt_transport,
    run_identities,
    run_nondegeneracy_scan,
    run_roundtrip,
    run_stability,
)
from sgsoliton.numerics import FieldPair, Grid, energy_norm
from sgsoliton.profiles import ExactSolution, SolitonParams, eval_exact_solution, eval_profile

KINDS = ("breather", "two_kink", "kink_antikink")
WORKERS = os.cpu_count() or 1


def _worst(rows):
    return max(rows, key=lambda r: r["value"] / r["threshold"])


@pytest.fixture(scope="module")
def identities():
    return run_identities()


@pytest.fixture(scope="module")
def roundtrip():
    return run_roundtrip(kinds=KINDS, etas=(1e-3,), seeds=(0,), workers=WORKERS)


@pytest.fixture(scope="module")
def sweep():
    return run_stability(kinds=KINDS, etas=(1e-3, 3e-3, 1e-2), seeds=(0, 1, 2, 3, 4), T=50.0, workers=WORKERS)


def test_criterion_01_breather_energy(grid, acceptance):
    gaps, forms = [], []
    for beta in (0.3, 0.5, 0.8):
        B = eval_profile("breather", SolitonParams(beta, 0.3, -0.1), grid)
        gaps.append(abs(energy(B, grid) - 16 * beta))
        forms.append(abs(energy(B, grid) - energy_sin2(B, grid)))
    ok = max(gaps) < 1e-8 and max(forms) < 1e-12
    acceptance(1, ok, f"max|E - 16β| = {max(gaps):.2e} (< 1e-8), max|E_cos - E_sin2| = {max(forms):.2e} (< 1e-12)")
    assert ok


def test_criterion_02_bt_links(identities, acceptance):
    rows = [r for r in identities if r["name"].startswith("BT residual ") and "half" not in r["name"]]
    assert len(rows) == 7
    worst = max(r["value"] for r in rows)
    ok = worst < 1e-9
    acceptance(2, ok, f"7 exact links, max sup residual = {worst:.2e} (< 1e-9)")
    assert ok


def test_criterion_03_integral_identities(identities, acceptance):
    integrals = [r for r in identities if r["name"].startswith("int mu")]
    almost = [r for r in identities if r["name"].startswith("almost orthogonality")]
    orth = [r for r in identities if r["name"].startswith(("int D_1 D_2", "int D_t1 D_t2", "Gram off-diagonal"))]
    assert len(integrals) == 5 and len(almost) == 1 and len(orth) == 9
    a = max(r["value"] for r in integrals)
    b = almost[0]["value"]
    c = max(r["value"] for r in orth)
    ok = a < 1e-8 and b < 1e-8 and c < 1e-10
    acceptance(3, ok, f"integrals {a:.2e} (< 1e-8), almost orthogonality {b:.2e} (< 1e-8), "
                      f"orthogonality {c:.2e} (< 1e-10)")
    assert ok


def test_criterion_04_factor_odes(identities, acceptance):
    rows = [r for r in identities if r["name"].startswith("factor ODE")]
    assert len(rows) == 11
    worst = max(r["value"] for r in rows)
    ok = worst < 1e-8
    acceptance(4, ok, f"{len(rows)} factor ODEs, max residual = {worst:.2e} (< 1e-8)")
    assert ok


def test_criterion_05_roundtrips(roundtrip, acceptance):
    names = ("roundtrip error", "sup |Im y0|", "|delta_tilde - conj delta|", "|conjugate-path delta - conj delta|",
             "permutability z gap", "permutability u gap", "composition vs Newton ascent")
    rows = [r for r in roundtrip if r["name"] in names]
    assert {r["kind"] for r in rows if r["name"] == "roundtrip error"} == set(KINDS)
    ok = all(r["passed"] for r in rows)
    rt = max(r["value"] for r in rows if r["name"] == "roundtrip error")
    w = _worst(rows)
    acceptance(5, ok, f"max roundtrip {rt:.2e} (< 1e-7); tightest: {w['name']} ({w['kind']}) "
                      f"{w['value']:.2e} < {w['threshold']:.0e}")
    assert ok


def test_criterion_06_energy_momentum_identities(roundtrip, grid, acceptance):
    rows = [r for r in roundtrip if r["name"] in ("energy identity gap", "momentum identity gap")]
    assert len(rows) == 2
    gap = max(r["value"] for r in rows)
    p = SolitonParams(0.5, 0.3, -0.1)
    B = eval_profile("breather", p, grid)
    E0, P0 = breather_identity(0.0, 0.0, 0.0, p)
    degenerate = max(abs(E0 - energy(B, grid)), abs(P0 - momentum(B, grid)))
    ok = gap < 1e-6 and E0 == 16 * p.beta and P0 == 0.0 and degenerate < 1e-8
    acceptance(6, ok, f"identity gaps {gap:.2e} (< 1e-6); δ = 0 gives E = {E0:g}, P = {P0:g}, "
                      f"quadrature gap {degenerate:.2e}")
    assert ok


def _difference_error(N, dt, T=2.0):
    p0 = SolitonParams(0.5)
    q = p0.shifted(x1=0.4, x2=0.2)
    g = Grid(40.0, N)
    z0 = eval_profile("breather", q, g) - eval_profile("breather", p0, g)
    traj = evolve(EvolvingState(ExactSolution("breather", p0), z0, g), T, dt)
    exact = eval_exact_solution("breather", q, T, g) - eval_exact_solution("breather", p0, T, g)
    return energy_norm(traj.states[-1] - exact, g)


def test_criterion_07_exact_evolution(grid, acceptance):
    growth = 0.0
    for kind in KINDS:
        zero = FieldPair(np.zeros(grid.N), np.zeros(grid.N))
        traj = evolve(EvolvingState(ExactSolution(kind, SolitonParams(0.5)), zero, grid), 10.0,
                      outputs=np.linspace(0.0, 10.0, 11))
        growth = max(growth, max(energy_norm(s, grid) for s in traj.states))
    t_err = [_difference_error(2049, dt) for dt in (0.016, 0.008, 0.004)]
    s_err = [_difference_error(N, 5e-4) for N in (513, 1025)]
    t_rates = np.log2(np.array(t_err[:-1]) / np.array(t_err[1:]))
    s_rate = np.log2(s_err[0] / s_err[1])
    ok = growth < 1e-5 and np.all(np.abs(t_rates - 2) < 0.1) and abs(s_rate - 4) < 0.3
    acceptance(7, ok, f"zero-perturbation growth {growth:.2e} (< 1e-5); time order "
                      f"{', '.join(f'{r:.2f}' for r in t_rates)}; space order {s_rate:.2f}")
    assert ok


def test_criterion_08_conservation(sweep, acceptance):
    points, _ = sweep
    pts = [r for r in points if r["eta"] == 1e-3]
    assert len(pts) == 15
    e = max(r["energy_drift"] for r in pts)
    m = max(r["momentum_drift"] for r in pts)
    ok = e < 1e-6 and m < 1e-6
    acceptance(8, ok, f"T = 50, η = 1e-3, 15 runs: max relative energy drift {e:.2e}, momentum drift {m:.2e} "
                      "(< 1e-6)")
    assert ok


def test_criterion_09_bt_transport(acceptance):
    gaps = {kind: bt_transport(kind, eta=1e-3, seed=0, t_cmp=5.0) for kind in KINDS}
    ok = max(gaps.values()) < 1e-4
    acceptance(9, ok, "t = 5 gaps " + ", ".join(f"{k} {v:.2e}" for k, v in gaps.items()) + " (< 1e-4)")
    assert ok


def test_criterion_10_stability_sweep(sweep, acceptance):
    points, summary = sweep
    assert len(points) == 45
    spread = [r for r in summary if "spread" in r["name"]]
    ok = all(r["passed"] for r in summary) and all(r["modulation_ok"] for r in points)
    ok = ok and all(np.isfinite(r["sup_distance_ratio"]) and np.isfinite(r["sup_speed_ratio"]) for r in points)
    worst = max(spread, key=lambda r: r["value"])
    windows = sum(r["windows"] for r in points)
    wc = max(r["window_constant"] for r in points)
    acceptance(10, ok, f"45 runs, worst spread {worst['value']:.2f} ({worst['name'].split()[0]}, {worst['kind']}) "
                       f"(< 3); {windows} near-singular windows, max constant {wc:.2f}")
    assert ok


def test_criterion_11_nondegeneracy(acceptance):
    _, summary = run_nondegeneracy_scan(workers=WORKERS)
    s = {r["name"]: r for r in summary}
    ok = all(r["passed"] for r in summary) and s["min |I| (margin)"]["value"] > 0
    acceptance(11, ok, f"max|Im I| {s['max |Im I|']['value']:.1e} (< 1e-8), min|I| "
                       f"{s['min |I| (margin)']['value']:.3f} > 0, refinement gap "
                       f"{s['grid refinement gap']['value']:.1e} (< 1e-7), sign changes within bands "
                       f"{s['bands with a sign change']['value']:g}")
    assert ok


def test_criterion_12_blowup(acceptance):
    rows = blowup_rows()
    flags = [r for r in rows if r["name"] == "flag distance to t_k"]
    ok = all(r["passed"] for r in rows) and len(flags) == 5
    worst = max(r["value"] for r in flags)
    acceptance(12, ok, f"{len(flags)} flags for β = 0.5, √3/2 on [0, 12], max |t_flag - t_k| = {worst:.3f} (< 0.05)")
    assert ok
