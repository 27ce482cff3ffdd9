"""Tests for the RK4 integrator, flow diagnostics, and section sweeps."""

import math

import numpy as np
import pytest

from liouvar.expr import Const, Symbol
from liouvar.exterior import Space, VectorField, basis_form
from liouvar.liouville import build_extended, decompose_beta
from liouvar.flow import (
    BlowupError,
    FlowError,
    integrate_rk4,
    invariant_drift,
    section_sweep,
    volume_diagnostic,
    write_trajectory_csv,
)
from liouvar.systems import build_abc_flow, build_euler_top, build_hamiltonian


@pytest.fixture(scope="module")
def oscillator():
    return build_hamiltonian("1/2*q^2 + 1/2*p^2", 1, name="ho")


@pytest.fixture(scope="module")
def euler_numeric():
    return build_euler_top((1, 2, 3)).bound()


# --------------------------------------------------------------------------
# Integrator


def test_oscillator_period_return(oscillator):
    traj = integrate_rk4(oscillator.field, (1.0, 0.0), 1e-3, 2 * math.pi)
    assert abs(traj.states[-1][0] - 1.0) <= 1e-9
    assert abs(traj.states[-1][1]) <= 1e-9


def test_zero_field_constant_trajectory():
    sp = Space("z", ("x1", "x2"))
    zero = VectorField(sp, (Const(0), Const(0)))
    traj = integrate_rk4(zero, (0.3, -0.7), 1e-2, 1.0)
    assert np.all(traj.states == traj.states[0])


def test_euler_step_halving(euler_numeric):
    coarse = integrate_rk4(euler_numeric.field, (1, 1, 1), 1e-3, 10.0)
    fine = integrate_rk4(euler_numeric.field, (1, 1, 1), 5e-4, 10.0)
    gap = np.max(np.abs(coarse.states[-1] - fine.states[-1]))
    assert gap <= 1e-8


def test_rk4_order_on_smooth_field(oscillator):
    # error against a step-halved reference scales as h^4 within a factor 2
    def endpoint_gap(h):
        a = integrate_rk4(oscillator.field, (1.0, 0.0), h, 1.0)
        b = integrate_rk4(oscillator.field, (1.0, 0.0), h / 2, 1.0)
        return np.max(np.abs(a.states[-1] - b.states[-1]))

    ratio = endpoint_gap(2e-2) / endpoint_gap(1e-2)
    assert 8.0 <= ratio <= 32.0


def test_grid_uniform_and_ends_at_duration(oscillator):
    traj = integrate_rk4(oscillator.field, (1.0, 0.0), 1e-3, 2 * math.pi)
    steps = np.diff(traj.grid)
    assert np.allclose(steps, steps[0])
    assert traj.grid[-1] == pytest.approx(2 * math.pi, abs=1e-12)


def test_blowup_reported_with_step_index():
    sp = Space("b", ("x1", "x2"))
    field = VectorField(sp, (Const(1) + Symbol("x1") ** 2, Const(0)))
    with pytest.raises(BlowupError) as err:
        integrate_rk4(field, (1.0, 0.0), 1e-3, 2.0)
    assert err.value.step > 0


def test_bad_arguments():
    sp = Space("b", ("x1",))
    field = VectorField(sp, (Const(1),))
    with pytest.raises(FlowError):
        integrate_rk4(field, (0.0,), -1e-3, 1.0)
    with pytest.raises(FlowError):
        integrate_rk4(field, (0.0, 0.0), 1e-3, 1.0)


# --------------------------------------------------------------------------
# Volume diagnostic


def test_volume_preserved_euler(euler_numeric):
    traj = integrate_rk4(euler_numeric.field, (1, 1, 1), 1e-3, 10.0, with_tangent=True)
    assert volume_diagnostic(traj) <= 1e-6


def test_volume_preserved_abc():
    sys = build_abc_flow(1, 1, 1).bound()
    traj = integrate_rk4(sys.field, (0.1, 0.2, 0.3), 1e-3, 10.0, with_tangent=True)
    assert volume_diagnostic(traj) <= 1e-6


def test_volume_growth_linear_field():
    sp = Space("g", ("x1", "x2", "x3"))
    field = VectorField(sp, (Symbol("x1"), Const(0), Const(0)))
    traj = integrate_rk4(field, (1.0, 1.0, 1.0), 1e-3, 1.0, with_tangent=True)
    final_det = float(np.linalg.det(traj.tangents[-1]))
    assert abs(final_det - math.e) <= 1e-6


def test_volume_requires_tangent(oscillator):
    traj = integrate_rk4(oscillator.field, (1.0, 0.0), 1e-2, 1.0)
    with pytest.raises(FlowError):
        volume_diagnostic(traj)


# --------------------------------------------------------------------------
# Invariant drift


def test_euler_invariant_drift(euler_numeric):
    traj = integrate_rk4(euler_numeric.field, (1, 1, 1), 1e-3, 10.0)
    drifts = invariant_drift(traj, euler_numeric.invariants)
    assert len(drifts) == 2
    assert all(d <= 1e-8 for d in drifts)


def test_oscillator_energy_drift(oscillator):
    traj = integrate_rk4(oscillator.field, (1.0, 0.0), 1e-3, 2 * math.pi)
    (drift,) = invariant_drift(traj, oscillator.invariants)
    assert drift <= 1e-9


def test_constant_invariant_zero_drift(oscillator):
    traj = integrate_rk4(oscillator.field, (1.0, 0.0), 1e-2, 1.0)
    (drift,) = invariant_drift(traj, (Const(1),))
    assert drift == 0.0


# --------------------------------------------------------------------------
# Section sweep


def test_sweep_oscillator_residual(oscillator):
    ext = build_extended(oscillator)
    dec = decompose_beta(ext.dtheta)
    report = section_sweep(dec, [(0.0, 1.0, 0.0)], 1e-3, 2 * math.pi)
    assert report.max_residual <= 1e-6


def test_sweep_trivial_decomposition_exact():
    sp = Space("t", ("x", "z", "w"))
    dec = decompose_beta(basis_form(sp, "z", "w"))
    report = section_sweep(dec, [(0.0, 0.4, -0.9)], 1e-2, 1.0)
    assert report.max_residual <= 1e-14


def test_sweep_second_order_convergence(oscillator):
    ext = build_extended(oscillator)
    dec = decompose_beta(ext.dtheta)
    hs = [4e-3, 2e-3, 1e-3]
    residuals = [section_sweep(dec, [(0.0, 1.0, 0.0)], h, 2.0).max_residual for h in hs]
    slope = np.polyfit(np.log(hs), np.log(residuals), 1)[0]
    assert abs(slope - 2.0) <= 0.3


def test_sweep_euler_seed_line(euler_numeric):
    ext = build_extended(euler_numeric)
    dec = decompose_beta(ext.dtheta)
    seeds = [(0.0, 1.0, 1.0 + 0.05 * j, 1.0) for j in range(-2, 3)]
    coarse = section_sweep(dec, seeds, 1e-3, 2.0)
    fine = section_sweep(dec, seeds, 5e-4, 2.0)
    assert coarse.max_residual <= 1e-4
    ratio = coarse.max_residual / fine.max_residual
    assert 2.5 <= ratio <= 6.0


def test_sweep_needs_seeds(oscillator):
    ext = build_extended(oscillator)
    dec = decompose_beta(ext.dtheta)
    with pytest.raises(FlowError):
        section_sweep(dec, [], 1e-3, 1.0)


# --------------------------------------------------------------------------
# CSV output


def test_trajectory_csv(tmp_path, euler_numeric):
    traj = integrate_rk4(euler_numeric.field, (1, 1, 1), 1e-2, 1.0, with_tangent=True)
    path = tmp_path / "traj.csv"
    rows = write_trajectory_csv(traj, path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "s,x0,x1,x2,det"
    assert rows == len(lines) - 1 == 101
    # 17 significant digits survive a float round trip
    cells = lines[-1].split(",")
    assert float(cells[0]) == pytest.approx(1.0, abs=1e-15)
