"""Deterministic direction sets on the unit sphere."""
from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, qmc

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def sphere_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Return unit vectors of dimension ``n`` as rows.

    n = 1 always yields the two directions -1 and +1. n = 2 uses equally
    spaced angles, n = 3 a Fibonacci lattice, and larger n a scrambled
    Halton sequence pushed through the normal quantile function.
    """
    if n == 1:
        return np.array([[-1.0], [1.0]])
    shift = math.fmod(seed / _GOLDEN, 1.0)
    if n == 2:
        angles = 2.0 * math.pi * (np.arange(count) + shift) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        phi = 2.0 * math.pi * (k / _GOLDEN + shift)
        rad = np.sqrt(1.0 - z * z)
        return np.column_stack([rad * np.cos(phi), rad * np.sin(phi), z])
    pts = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    g = norm.ppf(np.clip(pts, 1e-12, 1.0 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def angular_spacing(n: int, count: int) -> float:
    """Typical angle between neighbouring directions of ``sphere_directions``."""
    if n == 1:
        return 0.0
    if n == 2:
        return 2.0 * math.pi / count
    # area of the unit sphere divided evenly, as an angular radius
    area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    return min(math.pi, (area / count) ** (1.0 / (n - 1)))


def tangent_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent space of the sphere at ``u``."""
    n = u.size
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    return q[:, 1:n].T
