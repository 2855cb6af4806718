import math

import numpy as np
import pytest

from ksreg.charts import EulerChart, euler_to_phase
from ksreg.dynamics import (
    KINDS,
    HamiltonianSpec,
    ham_field,
    ham_field_fd,
    ham_value,
    regularize,
)
from ksreg.errors import DomainError
from ksreg.sampling import euler_charts

H = math.sqrt(0.5)


def test_example_values():
    assert ham_value(HamiltonianSpec("osc4"), [0, H, 0, H, 0, 0, 0, 0]) == pytest.approx(0.5)
    assert ham_value(HamiltonianSpec("euler_osc"), [1, 0, math.pi / 2, 0, 0, 0, 0, 0]) == pytest.approx(0.5)
    assert ham_value(HamiltonianSpec("kepler_spherical", h=4), [1, math.pi / 2, 0, 0, 0, 1]) == pytest.approx(-0.5)
    assert ham_value(HamiltonianSpec("andoyer_regularized", h=4), [1, 0, 0, 0, 0, 0.3, 1, 0.2]) == pytest.approx(-0.5)


def test_example_fields():
    assert np.allclose(ham_field(HamiltonianSpec("osc4"), [1, 0, 0, 0, 0, 0, 0, 0]), [0, 0, 0, 0, -1, 0, 0, 0])
    assert np.allclose(ham_field(HamiltonianSpec("kepler3"), [1, 0, 0, 0, 1, 0]), [0, 1, 0, -1, 0, 0])


def _state(rng, spec):
    if spec.kind in ("osc4",):
        return rng.uniform(-2, 2, 8)
    if spec.kind in ("kepler3", "kepler2", "aux_kepler2"):
        d = spec.dim // 2
        return np.r_[rng.uniform(0.5, 2, d), rng.uniform(-1, 1, d)]
    if spec.kind == "kepler_spherical":
        return np.array([rng.uniform(0.5, 2), rng.uniform(0.5, 2.5), rng.uniform(0, 6), *rng.uniform(-1, 1, 3)])
    if spec.kind == "andoyer_regularized":
        M = rng.uniform(0.5, 1.5)
        return np.array([rng.uniform(0.5, 2), *rng.uniform(0, 6, 3), rng.uniform(-1, 1), 0.5 * M, M, 0.3 * M])
    row = euler_charts(rng, 1)[0]
    if spec.kind == "euler_separable_rho":
        return row[[0, 4]]
    if spec.kind == "euler_separable_theta":
        return row[[1, 2, 3, 5, 6, 7]]
    return row


@pytest.mark.parametrize("kind", KINDS)
def test_analytic_field_matches_differences(kind, rng):
    spec = HamiltonianSpec(kind, omega=1.3, h=2.0)
    for _ in range(5):
        s = _state(rng, spec)
        assert np.allclose(ham_field(spec, s), ham_field_fd(spec, s), rtol=1e-6, atol=1e-6)


def test_pullback_of_oscillator(rng):
    spec = HamiltonianSpec("osc4", omega=0.7)
    espec = HamiltonianSpec("euler_osc", omega=0.7)
    for row in euler_charts(rng, 50):
        z = euler_to_phase(EulerChart.from_array(row))
        assert ham_value(spec, z) == pytest.approx(ham_value(espec, row), rel=1e-10)


def test_regularized_value_on_level(rng):
    h = 2.5
    spec = HamiltonianSpec("euler_osc", omega=1.1)
    reg = regularize(spec, "poincare_inv_4rho", h)
    checked = 0
    for row in euler_charts(rng, 20):
        # rescale P so that H(row) = h
        def excess(P):
            r = row.copy()
            r[4] = P
            return ham_value(spec, r) - h
        base = excess(0.0)
        if base > 0:
            continue
        r = row.copy()
        r[4] = math.sqrt(-base / (2 * row[0]))
        assert ham_value(reg, r) == pytest.approx(-1.1 / 8, abs=1e-10)
        checked += 1
    assert checked > 0


def test_split_sums_to_separable(rng):
    spec = HamiltonianSpec("euler_separable", omega=1.1, h=1.7)
    rho_part, theta_part = spec.split()
    row = euler_charts(rng, 1)[0]
    total = ham_value(rho_part, row[[0, 4]]) + ham_value(theta_part, row[[1, 2, 3, 5, 6, 7]])
    assert total == pytest.approx(ham_value(spec, row))
    assert ham_value(rho_part, [2.0, 0.5]) == pytest.approx(1.1 * 4 / 8 + 4 * 0.25 / 2 - 1.7 * 2 / 4)


def test_spec_validation():
    with pytest.raises(ValueError):
        HamiltonianSpec("nonsense")
    with pytest.raises(ValueError):
        regularize(HamiltonianSpec("osc4"), "nonsense", 1.0)
    with pytest.raises(DomainError):
        ham_value(HamiltonianSpec("kepler3"), np.zeros(6))
    assert HamiltonianSpec.from_dict({"kind": "osc4", "omega": 2}).omega == 2.0
