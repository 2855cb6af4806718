"""Quadratic phase-space functions on T*H and their Poisson brackets.

Phase points are 8-arrays ``z = (q1, q2, q3, q4, p1, p2, p3, p4)`` (leading
axes broadcast).  Every quadratic observable is stored as its constant
Hessian ``A`` so that ``f(z) = z.A.z / 2`` and ``grad f(z) = A z``; brackets
of built-ins are therefore exact polynomial evaluations.

Two conventions are provided.  ``printed`` is the legacy sign
table taken literally.  ``corrected`` uses the momentum maps of quaternion
multiplication: rho comes from right multiplication ``q -> q e^{a t}`` and
sigma from left multiplication ``q -> e^{a t} q`` (``a`` in ``i, j, k``),
with signs chosen so that ``rho3 = Xi1`` and ``sigma3 = Xi0`` hold as in the legacy table.
The two conventions differ only in ``rho1``; the printed ``rho1`` is a left
generator, which is why the printed rho triple does not close.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

CONVENTIONS = ("printed", "corrected")


class Observable(str, enum.Enum):
    tau1 = "tau1"
    tau2 = "tau2"
    tau3 = "tau3"
    rho1 = "rho1"
    rho2 = "rho2"
    rho3 = "rho3"
    sigma1 = "sigma1"
    sigma2 = "sigma2"
    sigma3 = "sigma3"
    xi0 = "xi0"
    xi1 = "xi1"
    centralizerM = "centralizerM"
    customHamiltonian = "customHamiltonian"


ScalarField = Callable[[np.ndarray], float]
ObsLike = Union[Observable, str, ScalarField]

# Table order used by bracket_table and the verification reports.
BASIS = (
    Observable.tau1, Observable.tau2, Observable.tau3,
    Observable.rho1, Observable.rho2, Observable.rho3,
    Observable.sigma1, Observable.sigma2, Observable.sigma3,
    Observable.centralizerM,
)


def _bilinear(*terms) -> np.ndarray:
    """Hessian of ``sum c * p_i * q_j`` for terms ``(c, i, j)``, 1-based."""
    a = np.zeros((8, 8))
    for c, i, j in terms:
        a[3 + i, j - 1] += c
        a[j - 1, 3 + i] += c
    return a


_Q = np.diag([1.0] * 4 + [0.0] * 4)
_P = np.diag([0.0] * 4 + [1.0] * 4)

# Xi0 = p1 q4 - p4 q1 + p2 q3 - p3 q2   (twin-bilinear)
# Xi1 = p1 q4 - p4 q1 + p3 q2 - p2 q3   (bilinear)
_XI0 = _bilinear((1, 1, 4), (-1, 4, 1), (1, 2, 3), (-1, 3, 2))
_XI1 = _bilinear((1, 1, 4), (-1, 4, 1), (1, 3, 2), (-1, 2, 3))

_PRINTED = {
    Observable.tau1: _bilinear((1, 1, 1), (1, 2, 2), (1, 3, 3), (1, 4, 4)),
    Observable.tau2: _Q - _P,
    Observable.tau3: _Q + _P,
    Observable.rho1: _bilinear((1, 2, 1), (-1, 1, 2), (1, 4, 3), (-1, 3, 4)),
    Observable.rho2: _bilinear((1, 3, 1), (-1, 1, 3), (1, 4, 2), (-1, 2, 4)),
    Observable.rho3: _XI1,
    Observable.sigma1: _bilinear((1, 1, 2), (-1, 2, 1), (1, 3, 4), (-1, 4, 3)),
    Observable.sigma2: _bilinear((1, 1, 3), (-1, 3, 1), (1, 4, 2), (-1, 2, 4)),
    Observable.sigma3: _XI0,
    Observable.xi0: _XI0,
    Observable.xi1: _XI1,
}

_CORRECTED = dict(_PRINTED)
# <p, q i> = p2 q1 - p1 q2 + p3 q4 - p4 q3
_CORRECTED[Observable.rho1] = _bilinear((1, 2, 1), (-1, 1, 2), (1, 3, 4), (-1, 4, 3))

_HESSIANS = {"printed": _PRINTED, "corrected": _CORRECTED}


def hessian(obs: ObsLike, convention: str = "corrected") -> np.ndarray:
    """Constant Hessian of a quadratic observable."""
    obs = Observable(obs)
    try:
        return _HESSIANS[convention][obs]
    except KeyError:
        if convention not in _HESSIANS:
            raise ValueError(f"unknown convention {convention!r}") from None
        raise ValueError(f"{obs.value} is not a quadratic form") from None


def _as_phase(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 8:
        raise ValueError(f"phase point must have 8 coordinates, got shape {z.shape}")
    return z


def _centralizer_radicand(z: np.ndarray):
    q, p = z[..., :4], z[..., 4:]
    qq = np.sum(q * q, axis=-1)
    pp = np.sum(p * p, axis=-1)
    qp = np.sum(q * p, axis=-1)
    d = qq * pp - qp * qp
    # Cauchy-Schwarz guarantees d >= 0; clamp rounding noise.
    tiny = 1e-13 * np.maximum(1.0, qq * pp)
    if np.any(d < -tiny):
        raise ValueError("centralizer radicand is negative beyond rounding")
    return np.maximum(d, 0.0), qq, pp, qp


def eval_obs(obs: ObsLike, z, convention: str = "corrected"):
    """Evaluate an observable at ``z``; broadcasts over leading axes."""
    z = _as_phase(z)
    if callable(obs) and not isinstance(obs, (str, Observable)):
        return obs(z)
    obs = Observable(obs)
    if obs is Observable.centralizerM:
        d = _centralizer_radicand(z)[0]
        return 0.5 * np.sqrt(d)
    if obs is Observable.customHamiltonian:
        raise ValueError("customHamiltonian needs a callable, not the tag")
    a = hessian(obs, convention)
    return 0.5 * np.einsum("...i,ij,...j->...", z, a, z)


def numeric_gradient(f: ScalarField, z: np.ndarray) -> np.ndarray:
    """Central differences with step ``eps**(1/3) * max(1, |z_i|)``."""
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    base = np.finfo(float).eps ** (1.0 / 3.0)
    for i in range(z.size):
        h = base * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (zp[i] - zm[i])
    return g


def gradient(obs: ObsLike, z, convention: str = "corrected") -> np.ndarray:
    """Gradient in ``(q, p)`` order.  Analytic for built-ins."""
    z = _as_phase(z)
    if callable(obs) and not isinstance(obs, (str, Observable)):
        if z.ndim != 1:
            return np.stack([numeric_gradient(obs, zi) for zi in z.reshape(-1, 8)]).reshape(z.shape)
        return numeric_gradient(obs, z)
    obs = Observable(obs)
    if obs is Observable.centralizerM:
        d, qq, pp, qp = _centralizer_radicand(z)
        q, p = z[..., :4], z[..., 4:]
        dq = 2.0 * (pp[..., None] * q - qp[..., None] * p)
        dp = 2.0 * (qq[..., None] * p - qp[..., None] * q)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = 1.0 / (4.0 * np.sqrt(d))
        return np.concatenate([dq, dp], axis=-1) * scale[..., None]
    return z @ hessian(obs, convention)


def poisson_bracket(f: ObsLike, g: ObsLike, z, convention: str = "corrected"):
    """``{f, g} = sum df/dq dg/dp - df/dp dg/dq``."""
    z = _as_phase(z)
    if not np.all(np.isfinite(z)):
        raise ValueError("phase point has non-finite coordinates")
    gf = gradient(f, z, convention)
    gg = gradient(g, z, convention)
    return np.sum(gf[..., :4] * gg[..., 4:] - gf[..., 4:] * gg[..., :4], axis=-1)


def hamiltonian_vector_field(obs: ObsLike, z, convention: str = "corrected") -> np.ndarray:
    """``(dH/dp, -dH/dq)`` for the observable used as a Hamiltonian."""
    g = gradient(obs, z, convention)
    return np.concatenate([g[..., 4:], -g[..., :4]], axis=-1)


def random_points(rng: np.random.Generator, n: int, low: float = -2.0, high: float = 2.0) -> np.ndarray:
    return rng.uniform(low, high, size=(n, 8))


@dataclass
class BracketTable:
    """Pairwise brackets at one point plus least-squares closure fits."""

    convention: str
    point: np.ndarray
    basis: tuple[str, ...]
    fit_basis: tuple[str, ...]
    entries: np.ndarray
    coefficients: np.ndarray  # (n, n, len(fit_basis))
    residuals: np.ndarray  # (n, n), scale-relative
    seed: int = 0
    aux_points: int = 24
    meta: dict = field(default_factory=dict)

    def index(self, name) -> int:
        return self.basis.index(Observable(name).value)

    def entry(self, a, b) -> float:
        return float(self.entries[self.index(a), self.index(b)])

    def fit(self, a, b, tol: float = 1e-8) -> dict[str, float]:
        """Nonzero coefficients of the fit of ``{a, b}``, rounded."""
        c = self.coefficients[self.index(a), self.index(b)]
        return {n: float(np.round(v, 10)) for n, v in zip(self.fit_basis, c) if abs(v) > tol}

    def residual(self, a, b) -> float:
        return float(self.residuals[self.index(a), self.index(b)])

    def to_dict(self) -> dict:
        fits = {}
        for i, a in enumerate(self.basis):
            for j, b in enumerate(self.basis):
                if i < j:
                    fits[f"{a},{b}"] = {"combination": self.fit(a, b), "residual": float(self.residuals[i, j])}
        return {
            "convention": self.convention,
            "point": self.point.tolist(),
            "basis": list(self.basis),
            "fit_basis": list(self.fit_basis),
            "matrix": self.entries.tolist(),
            "closure": fits,
            "seed": self.seed,
            "aux_points": self.aux_points,
        }


def _fit_features(points: np.ndarray, convention: str) -> np.ndarray:
    cols = [eval_obs(o, points, convention) for o in BASIS]
    cols.append(np.ones(len(points)))
    return np.stack(cols, axis=-1)


def bracket_table(z, convention: str = "corrected", seed: int = 0, aux_points: int = 24) -> BracketTable:
    """Brackets among tau, rho, sigma, M at ``z`` and their closure fits.

    Each bracket is fitted, by least squares over ``aux_points`` random points
    in ``[-2, 2]^8``, as a combination of the ten observables and the constant
    function.  Residuals are reported relative to ``max(1, |bracket|)``.
    """
    z = _as_phase(z)
    if not np.all(np.isfinite(z)):
        raise ValueError("phase point has non-finite coordinates")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    n = len(BASIS)
    grads = np.stack([gradient(o, z, convention) for o in BASIS])
    entries = grads[:, :4] @ grads[:, 4:].T - grads[:, 4:] @ grads[:, :4].T

    rng = np.random.default_rng(seed)
    aux = random_points(rng, aux_points)
    feats = _fit_features(aux, convention)
    aux_grads = np.stack([gradient(o, aux, convention) for o in BASIS])  # (n, m, 8)
    iu, ju = np.triu_indices(n, k=1)
    gi, gj = aux_grads[iu], aux_grads[ju]  # (pairs, m, 8)
    vals = np.sum(gi[..., :4] * gj[..., 4:] - gi[..., 4:] * gj[..., :4], axis=-1).T  # (m, pairs)
    c, *_ = np.linalg.lstsq(feats, vals, rcond=None)  # one solve for all pairs
    r = np.max(np.abs(feats @ c - vals), axis=0) / np.maximum(1.0, np.max(np.abs(vals), axis=0))
    coeffs = np.zeros((n, n, n + 1))
    resid = np.zeros((n, n))
    coeffs[iu, ju], coeffs[ju, iu] = c.T, -c.T
    resid[iu, ju] = resid[ju, iu] = r
    names = tuple(o.value for o in BASIS)
    return BracketTable(
        convention=convention,
        point=z.copy(),
        basis=names,
        fit_basis=names + ("one",),
        entries=entries,
        coefficients=coeffs,
        residuals=resid,
        seed=seed,
        aux_points=aux_points,
    )
