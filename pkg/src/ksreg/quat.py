"""Quaternion algebra on plain numpy arrays.

A quaternion is a float array whose last axis has length 4, ordered
``(w, x, y, z)`` so that ``a[0]`` is the scalar part and ``a[1:]`` the
vector part on the basis ``i, j, k``.  Every function broadcasts over
leading axes, which lets the verification code push thousands of samples
through one call.
"""

from __future__ import annotations

import numpy as np

Quat = np.ndarray

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

AXES = {"i": I, "j": J, "k": K}


def _arr(a) -> np.ndarray:
    # Keep complex dtypes so complex-step differentiation passes through.
    a = np.asarray(a)
    return a if a.dtype.kind in "fc" else a.astype(float)


def quat(w: float, x: float = 0.0, y: float = 0.0, z: float = 0.0) -> Quat:
    return np.array([w, x, y, z], dtype=float)


def pure(v) -> Quat:
    """Embed 3-vectors as quaternions with zero scalar part."""
    v = _arr(v)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,), dtype=v.dtype), v], axis=-1)


def mul(a: Quat, b: Quat) -> Quat:
    """Hamilton product ``(a1 b1 - a.b, a1 b + b1 a + a x b)``."""
    a = _arr(a)
    b = _arr(b)
    aw, av = a[..., :1], a[..., 1:]
    bw, bv = b[..., :1], b[..., 1:]
    w = aw * bw - np.sum(av * bv, axis=-1, keepdims=True)
    v = aw * bv + bw * av + np.cross(av, bv)
    return np.concatenate([w, v], axis=-1)


def conj(a: Quat) -> Quat:
    a = _arr(a)
    return np.concatenate([a[..., :1], -a[..., 1:]], axis=-1)


def norm2(a: Quat):
    a = _arr(a)
    return np.sum(a * a, axis=-1)


def norm(a: Quat):
    return np.sqrt(norm2(a))


def inner(a: Quat, b: Quat):
    """Euclidean inner product of quaternions seen as 4-vectors."""
    return np.sum(_arr(a) * _arr(b), axis=-1)


def rotor(axis, angle) -> Quat:
    """``cos(angle) + axis*sin(angle)`` for a unit pure quaternion axis.

    ``axis`` may be one of the names ``"i"``, ``"j"``, ``"k"`` or an explicit
    pure quaternion.  Note the angle is *not* halved: conjugating a vector by
    ``rotor(k, a)`` turns it by ``2a`` about ``k``.
    """
    if isinstance(axis, str):
        axis = AXES[axis]
    angle = _arr(angle)[..., None]
    return np.cos(angle) * ONE + np.sin(angle) * _arr(axis)


def sandwich(a: Quat, m: Quat, b: Quat) -> Quat:
    """``a m b``; used for the Hopf-type products ``q* v q``."""
    return mul(mul(a, m), b)
