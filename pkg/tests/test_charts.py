import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksreg.charts import (
    AndoyerChart,
    EulerChart,
    PhasePoint6,
    SphericalChart,
    andoyer_calibrated_array,
    andoyer_to_phase,
    cartesian_to_spherical,
    euler_to_phase,
    euler_to_phase_array,
    phase_to_euler,
    polar_to_cartesian2,
    printed_theta_momentum,
    project_euler,
    spherical_to_cartesian,
)
from ksreg.errors import DomainError
from ksreg.maps import chi_action, ks_map
from ksreg.numerics import jacobian, symplectic_defect
from ksreg.observables import eval_obs
from ksreg.sampling import andoyer_charts, euler_charts

H = math.sqrt(0.5)


def test_euler_example_both_ways():
    z = euler_to_phase(EulerChart(1, 0, math.pi / 2, 0, 0, 0, 0, 0))
    assert np.allclose(z, [0, H, 0, H, 0, 0, 0, 0])
    c = phase_to_euler([0, H, 0, H, 0, 0, 0, 0])
    assert np.allclose(c.as_array(), [1, 0, math.pi / 2, 0, 0, 0, 0, 0], atol=1e-15)


def test_euler_round_trip_and_momenta(rng):
    for row in euler_charts(rng, 300):
        c = EulerChart.from_array(row)
        z = euler_to_phase(c)
        back = phase_to_euler(z).as_array()
        assert np.allclose(back, row, atol=1e-10)
        assert z[:4] @ z[:4] == pytest.approx(c.rho)
        assert eval_obs("xi0", z) == pytest.approx(2 * c.Psi, abs=1e-12)
        assert eval_obs("xi1", z) == pytest.approx(2 * c.Phi, abs=1e-12)
        assert eval_obs("tau1", z) / (2 * c.rho) == pytest.approx(c.P, abs=1e-12)


def test_euler_is_symplectic(rng):
    for row in euler_charts(rng, 20):
        assert symplectic_defect(jacobian(euler_to_phase_array, row, 1e-4)) < 1e-8


def test_euler_exclusion_manifolds():
    with pytest.raises(DomainError):
        phase_to_euler([1, 0, 0, 0.5, 1, 1, 1, 1])
    with pytest.raises(DomainError):
        phase_to_euler([0, 1, 0.5, 0, 1, 1, 1, 1])


def test_psi_shift_is_fiber_motion(rng):
    row = euler_charts(rng, 1)[0]
    shifted = row.copy()
    shifted[3] += 0.8
    assert np.allclose(euler_to_phase_array(shifted), chi_action(0, -0.4, euler_to_phase_array(row)), atol=1e-13)


def test_printed_theta_differs_from_chart_momentum(rng):
    c = EulerChart.from_array(euler_charts(rng, 1)[0])
    z = euler_to_phase(c)
    assert abs(printed_theta_momentum(z) - c.Theta) > 1e-6


def test_spherical_examples():
    pt = spherical_to_cartesian(SphericalChart(1, math.pi / 2, 0, 0, 0, 1))
    assert np.allclose(pt.x, [1, 0, 0]) and np.allclose(pt.y, [0, 1, 0])
    pt = spherical_to_cartesian(SphericalChart(2, math.pi / 2, 0, 0, 0, 0))
    assert np.allclose(pt.x, [2, 0, 0]) and np.allclose(pt.y, 0)
    c = cartesian_to_spherical(PhasePoint6(np.array([1.0, 0, 0]), np.array([0.0, 1, 0])))
    assert np.allclose(c.as_array(), [1, math.pi / 2, 0, 0, 0, 1], atol=1e-15)
    with pytest.raises(DomainError):
        cartesian_to_spherical(PhasePoint6(np.array([0.0, 0, 1]), np.zeros(3)))


@settings(max_examples=100)
@given(st.floats(0.1, 5), st.floats(0.05, 3.09), st.floats(0, 6.28), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-2, 2))
def test_spherical_round_trip_and_energy(rho, theta, phi, P, Theta, Phi):
    c = SphericalChart(rho, theta, phi, P, Theta, Phi)
    pt = spherical_to_cartesian(c)
    assert np.allclose(cartesian_to_spherical(pt).as_array(), c.as_array(), atol=1e-9)
    kepler = 0.5 * pt.y @ pt.y - 1.0 / np.linalg.norm(pt.x)
    spherical = 0.5 * (P * P + Theta ** 2 / rho ** 2 + Phi ** 2 / (rho * math.sin(theta)) ** 2) - 1.0 / rho
    assert kepler == pytest.approx(spherical, rel=1e-11, abs=1e-11)


def test_euler_projects_onto_ks_image(rng):
    row = euler_charts(rng, 1, Psi_zero=True)[0]
    c = EulerChart.from_array(row)
    img = ks_map(euler_to_phase(c))
    pt = spherical_to_cartesian(project_euler(c))
    assert np.allclose(img.x, pt.x) and np.allclose(img.y, pt.y)


def test_polar_examples(rng):
    pt = polar_to_cartesian2(1, 0, 0, 1)
    assert np.allclose(pt.x, [1, 0]) and np.allclose(pt.y, [0, 1])
    pt = polar_to_cartesian2(2, math.pi / 2, 0, 0)
    assert np.allclose(pt.x, [0, 2]) and np.allclose(pt.y, 0)
    rho, mu, P, M = rng.uniform(0.2, 2, 4)
    pt = polar_to_cartesian2(rho, mu, P, M)
    lhs = 0.5 * pt.y @ pt.y - 1 / np.linalg.norm(pt.x)
    assert lhs == pytest.approx(0.5 * (P * P + M * M / rho ** 2) - 1 / rho)


def test_andoyer_example():
    z = andoyer_to_phase(AndoyerChart(1, 0, 0, 0, 0, 1, 1, 1))
    assert np.allclose(z[:4], [1, 0, 0, 0])
    assert np.allclose(z[4:7], 0)
    assert eval_obs("centralizerM", z) == pytest.approx(1.0)


def test_andoyer_calibrated_invariants(rng):
    for row in andoyer_charts(rng, 100):
        c = AndoyerChart.from_array(row)
        z = andoyer_to_phase(c)
        assert eval_obs("centralizerM", z) == pytest.approx(c.M, rel=1e-10)
        assert eval_obs("tau1", z) / (2 * c.rho) == pytest.approx(c.P, abs=1e-10)
        assert eval_obs("xi0", z) == pytest.approx(-2 * c.N, abs=1e-10)
        assert eval_obs("xi1", z) == pytest.approx(-2 * c.Lambda, abs=1e-10)


def test_andoyer_symplectic_only_when_calibrated(rng):
    row = andoyer_charts(rng, 1)[0]
    row[5:8:2] *= 0.9
    assert symplectic_defect(jacobian(andoyer_calibrated_array, row, 1e-5)) < 1e-7
    c = AndoyerChart.from_array(row)
    printed = jacobian(lambda a: andoyer_to_phase(AndoyerChart.from_array(a), "printed"), row, 1e-5)
    assert symplectic_defect(printed) > 1e-3
    assert c.M > 0


def test_andoyer_domain():
    with pytest.raises(DomainError):
        andoyer_to_phase(AndoyerChart(1, 0, 0, 0, 0, 0, 0, 0))
    with pytest.raises(DomainError):
        andoyer_to_phase(AndoyerChart(1, 0, 0, 0, 0, 0, 1, 2))
    with pytest.raises(ValueError):
        andoyer_to_phase(AndoyerChart(1, 0, 0, 0, 0, 0, 1, 0), "other")


def test_record_dicts():
    c = AndoyerChart(1, 2, 3, 4, 5, 0.1, 1, 0.2)
    assert AndoyerChart.from_dict(c.to_dict()) == c
    assert "lambda" in c.to_dict()
    with pytest.raises(ValueError):
        EulerChart.from_array([1, 2, 3])
