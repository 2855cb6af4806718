import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ksreg.observables import (
    BASIS,
    Observable,
    bracket_table,
    eval_obs,
    gradient,
    hamiltonian_vector_field,
    numeric_gradient,
    poisson_bracket,
)

Z0 = np.array([1.0, 0, 0, 0, 0, 1, 0, 0])
points = arrays(np.float64, 8, elements=st.floats(-3, 3, allow_nan=False))


def test_example_values():
    assert eval_obs("tau3", Z0) == pytest.approx(1.0)
    assert eval_obs("rho1", Z0) == pytest.approx(1.0)
    assert eval_obs("sigma1", Z0) == pytest.approx(-1.0)
    assert eval_obs("centralizerM", Z0) == pytest.approx(0.5)
    assert eval_obs("xi0", [1, 0, 0, 0, 0, 0, 0, 1]) == pytest.approx(-1.0)


def test_bracket_examples():
    assert poisson_bracket("tau1", "tau2", Z0) == pytest.approx(-2.0)
    assert poisson_bracket("tau2", "tau3", Z0) == pytest.approx(0.0)


@settings(max_examples=100)
@given(points)
def test_invariant_aliases(z):
    assert eval_obs("xi1", z) == pytest.approx(eval_obs("rho3", z), abs=1e-12)
    assert eval_obs("xi0", z) == pytest.approx(eval_obs("sigma3", z), abs=1e-12)


@settings(max_examples=100)
@given(points)
def test_tau_closure_and_antisymmetry(z):
    scale = 1 + float(z @ z)
    assert abs(poisson_bracket("tau1", "tau2", z) + 2 * eval_obs("tau3", z)) < 1e-12 * scale
    assert abs(poisson_bracket("tau2", "tau3", z) - 2 * eval_obs("tau1", z)) < 1e-12 * scale
    assert poisson_bracket("rho1", "rho1", z) == 0.0


def test_corrected_rho_closes_printed_does_not(rng):
    z = rng.uniform(-2, 2, 8)
    assert poisson_bracket("rho1", "rho2", z) == pytest.approx(2 * eval_obs("rho3", z), abs=1e-12)
    assert poisson_bracket("rho1", "rho2", z, "printed") == pytest.approx(0.0, abs=1e-12)


def test_analytic_gradient_matches_differences(rng):
    z = rng.uniform(-2, 2, 8)
    for obs in (*BASIS, Observable.xi0):
        g = gradient(obs, z)
        fd = numeric_gradient(lambda w: eval_obs(obs, w), z)
        assert np.allclose(g, fd, atol=1e-7), obs


def test_custom_callable(rng):
    z = rng.uniform(-2, 2, 8)
    f = lambda w: 0.5 * float(w @ w)  # noqa: E731
    assert poisson_bracket(f, "tau3", z) == pytest.approx(0.0, abs=1e-8)
    field = hamiltonian_vector_field("tau3", z)
    assert np.allclose(field, np.r_[z[4:], -z[:4]])


def test_centralizer_commutes(rng):
    for z in rng.uniform(-2, 2, (20, 8)):
        for obs in BASIS[:-1]:
            assert abs(poisson_bracket("centralizerM", obs, z)) < 1e-9


def test_bracket_table(rng):
    z = rng.uniform(-2, 2, 8)
    t = bracket_table(z, seed=3)
    assert np.allclose(t.entries, -t.entries.T, atol=1e-12)
    assert t.entry("tau1", "tau2") == pytest.approx(-2 * eval_obs("tau3", z))
    assert t.fit("tau1", "tau2") == {"tau3": -2.0}
    assert t.fit("rho1", "rho2") == {"rho3": 2.0}
    assert t.fit("sigma1", "sigma2") == {"sigma3": -2.0}
    assert t.fit("tau1", "rho2") == {}
    assert np.max(t.residuals) < 1e-8
    d = t.to_dict()
    assert d["closure"]["tau1,tau2"]["combination"] == {"tau3": -2.0}


def test_bracket_table_rejects_bad_input():
    with pytest.raises(ValueError):
        bracket_table(np.full(8, np.nan))
    with pytest.raises(ValueError):
        bracket_table(Z0, convention="other")
