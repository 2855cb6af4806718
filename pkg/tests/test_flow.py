import io
import json
import math

import numpy as np
import pytest

from ksreg.dynamics import HamiltonianSpec
from ksreg.flow import (
    IntegrationFailure,
    IntegratorConfig,
    StepCollapse,
    format_float,
    integrate,
    integrate_with_time_map,
    kepler_elements,
    propagate_regularized_kepler,
    regularized_setup,
)
from ksreg.maps import ks_map


def test_oscillator_period_rk4():
    z0 = np.array([1.0, 0.2, 0, -0.3, 0, 0.5, 0.1, 0])
    cfg = IntegratorConfig(method="rk4_fixed", step=1e-3)
    traj = integrate(HamiltonianSpec("osc4"), z0, (0, 2 * math.pi), cfg)
    assert np.max(np.abs(traj.final - z0)) < 1e-8
    assert np.all(np.diff(traj.s) > 0)


def test_oscillator_matches_exact_solution():
    z0 = np.array([1.0, 0.2, 0, -0.3, 0, 0.5, 0.1, 0])
    traj = integrate(HamiltonianSpec("osc4"), z0, (0, 3.0), IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    s = traj.s[:, None]
    exact = np.hstack([z0[:4] * np.cos(s) + z0[4:] * np.sin(s), -z0[:4] * np.sin(s) + z0[4:] * np.cos(s)])
    assert np.max(np.abs(traj.states - exact)) < 1e-10
    assert traj.stats["accepted_steps"] > 0 and traj.stats["min_step"] > 0


def test_circular_kepler_returns():
    y0 = np.array([1.0, 0, 0, 0, 1, 0])
    traj = integrate(HamiltonianSpec("kepler3"), y0, (0, 2 * math.pi))
    assert np.max(np.abs(traj.final - y0)) < 1e-7
    assert np.max(traj.drift) < 1e-8


def test_collision_orbit_collapses_with_partial():
    spec = HamiltonianSpec("kepler3")
    with pytest.raises(StepCollapse) as info:
        integrate(spec, np.array([1.0, 0, 0, 0, 0, 0]), (0, 2.0))
    partial = info.value.partial
    assert partial is not None and len(partial) > 10
    assert np.linalg.norm(partial.final[:3]) < 1e-3
    assert isinstance(info.value, IntegrationFailure)


def test_max_steps_is_a_failure():
    with pytest.raises(IntegrationFailure):
        integrate(HamiltonianSpec("osc4"), np.ones(8), (0, 10), IntegratorConfig(max_steps=5))


def test_time_map_linear_on_constant_rho():
    # q on a circle of the oscillator keeps |q|^2 constant.
    z0 = np.array([1.0, 0, 0, 0, 0, 1, 0, 0])
    traj = integrate_with_time_map(HamiltonianSpec("osc4"), z0, (0, 2.0), IntegratorConfig(rel_tol=1e-12))
    assert np.allclose(traj.t, 4 * traj.s, atol=1e-10)
    assert np.all(np.diff(traj.t) >= 0)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=-1)
    cfg = IntegratorConfig.from_dict({"rel_tol": 1e-9})
    assert cfg.rel_tol == 1e-9


def test_eccentric_orbit_regularized():
    x0, y0 = np.array([0.1, 0, 0]), math.sqrt(19) * np.array([0, 1.0, 0])
    el = kepler_elements(x0, y0, 1.0)
    assert el["e"] == pytest.approx(0.9)
    traj = propagate_regularized_kepler(x0, y0, 1.0, IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    assert traj.t[-1] == pytest.approx(el["period"], rel=1e-6)
    assert np.max(np.abs(traj.final - traj.states[0])) < 1e-6
    assert np.max(traj.drift) < 1e-9
    assert traj.labels == ("x1", "x2", "x3", "y1", "y2", "y3")


def test_regularized_setup_lifts_state():
    x0, y0 = np.array([1.0, 0.3, -0.2]), np.array([0.1, 0.8, 0.2])
    spec, z0 = regularized_setup(x0, y0, 1.0)
    img = ks_map(z0)
    assert np.allclose(img.x, x0) and np.allclose(img.y, y0)
    assert spec.kind == "osc4" and spec.h == pytest.approx(4.0)


def test_regularized_rejects_unbound():
    with pytest.raises(ValueError):
        propagate_regularized_kepler(np.array([1.0, 0, 0]), np.array([0, 2.0, 0]))


def test_outputs():
    traj = integrate(HamiltonianSpec("osc4"), np.r_[1.0, np.zeros(7)], (0, 0.5))
    text = traj.to_csv()
    lines = text.splitlines()
    assert lines[0] == "# format_version=1"
    assert lines[1].split(",") == traj.columns()
    assert len(lines) == len(traj) + 2
    buf = io.StringIO()
    traj.to_jsonl(buf)
    rows = buf.getvalue().splitlines()
    head = json.loads(rows[0])
    assert head["format_version"] == 1 and head["columns"] == traj.columns()
    assert len(rows) == len(traj) + 1


def test_format_float():
    assert format_float(0.0) == "0"
    assert format_float(1.0) == "1"
    assert float(format_float(0.1 + 0.2)) == 0.1 + 0.2


def test_tableau_matches_reference():
    from scipy.integrate._ivp.rk import RK45

    from ksreg import flow

    a = np.zeros((7, 7))
    for i, row in enumerate(flow._A):
        a[i, : len(row)] = row
    assert np.allclose(a[:6, :5], RK45.A)
    assert np.allclose(flow._C[:6], RK45.C)
    assert np.allclose(np.abs(flow._E), np.abs(RK45.E))
    assert np.allclose(flow._P, RK45.P)
