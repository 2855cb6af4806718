import numpy as np
import pytest

from ksreg.observables import eval_obs
from ksreg.sampling import MANIFOLDS, sample


@pytest.mark.parametrize("manifold", MANIFOLDS)
def test_deterministic(manifold):
    a = sample(manifold, 20, 7)
    b = sample(manifold, 20, 7)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
    assert a[1].shape == (20, len(a[0]))
    assert not np.array_equal(a[1], sample(manifold, 20, 8)[1])


@pytest.mark.parametrize("manifold, obs", [("xi0-zero", "xi0"), ("xi1-zero", "xi1")])
def test_constraint_sets(manifold, obs):
    _, rows = sample(manifold, 200, 7)
    assert np.max(np.abs(eval_obs(obs, rows))) < 1e-12
    assert np.min(np.linalg.norm(rows[:, :4], axis=1)) >= 0.1


def test_andoyer_domain():
    _, rows = sample("andoyer-domain", 500, 1)
    M = rows[:, 6]
    assert np.all(M > 0) and np.all(np.abs(rows[:, 5]) <= M) and np.all(np.abs(rows[:, 7]) <= M)


def test_bad_arguments():
    with pytest.raises(ValueError):
        sample("nowhere", 3, 0)
    with pytest.raises(ValueError):
        sample("phase8", -1, 0)
    assert sample("phase8", 0, 0)[1].shape == (0, 8)
