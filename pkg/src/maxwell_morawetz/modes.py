"""Spin-weighted spherical-harmonic mode algebra.

Conventions
-----------
Harmonics are unit-sphere objects normalised so that

    integral |sY_lm|^2 dOmega = 4 pi,

i.e. ``sqrt(4 pi)`` times the usual orthonormal harmonics (so ``0Y_00 = 1``).
Spin-raising/lowering follows the sphere GHP operators at radius r::

    eth  0Y  = -L  (+1)Y        eth' (+1)Y = +L 0Y
    eth' 0Y  = +L  (-1)Y        eth  (-1)Y = -L 0Y

with ``L = ladder_factor(l, r) = sqrt(l(l+1)) / (sqrt(2) r)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np
from scipy.special import roots_legendre, sph_harm_y

from .background import DomainError

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True, order=True)
class ModeIndex:
    l: int
    m: int
    s: int = 0

    def __post_init__(self):
        if self.s not in (-1, 0, 1):
            raise DomainError(f"spin weight must be -1, 0 or 1, got {self.s}")
        if self.l < abs(self.s):
            raise DomainError(f"l={self.l} below |s|={abs(self.s)}")
        if abs(self.m) > self.l:
            raise DomainError(f"|m|={abs(self.m)} exceeds l={self.l}")


@dataclass
class SphereCoefficients:
    """Coefficients of a spin-s function on a sphere of fixed (t, r)."""

    s: int = 0
    coeffs: Dict[Tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        for l, m in self.coeffs:
            ModeIndex(l, m, self.s)

    @property
    def l_max(self) -> int:
        return max((l for l, _ in self.coeffs), default=-1)


def ladder_factor(l, r):
    """Magnitude of the eth/eth' action between spin 0 and spin +-1 at radius r."""
    l = np.asarray(l)
    if np.any(l < 1):
        raise DomainError("ladder_factor needs l >= 1")
    return np.sqrt(l * (l + 1.0)) / (np.sqrt(2.0) * np.asarray(r, dtype=float))


def sphere_l2(c: SphereCoefficients) -> float:
    """Sphere integral of |phi|^2 from coefficients (Parseval)."""
    return FOUR_PI * float(sum(abs(v) ** 2 for v in c.coeffs.values()))


def hardy_ratio(l: int) -> float:
    """Per-mode ratio  int|phi_0|^2 / (r^2 int|eth' phi_0|^2) = 2 / (l(l+1)).

    The radius cancels; it is not an argument.
    """
    if l < 1:
        raise DomainError("extreme components have no l = 0 mode")
    return 2.0 / (l * (l + 1))


def _ylm(l, m, theta, phi):
    if abs(m) > l:
        return np.zeros(np.broadcast(theta, phi).shape, dtype=complex)
    return np.sqrt(FOUR_PI) * sph_harm_y(l, m, theta, phi)


def evaluate_sY(s: int, l: int, m: int, theta, phi):
    """Spin-weighted harmonic ``sY_lm(theta, phi)`` for s in {-1, 0, 1}.

    Spin +-1 harmonics are built from the spin-0 ones using
    ``d_theta Y_lm = m cot(theta) Y_lm + sqrt((l-m)(l+m+1)) e^{-i phi} Y_l,m+1``.
    Not defined at the poles for s != 0.
    """
    ModeIndex(l, m, s)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    y = _ylm(l, m, theta, phi)
    if s == 0:
        return y
    sin = np.sin(theta)
    dtheta = m * np.cos(theta) / sin * y
    if m + 1 <= l:
        dtheta = dtheta + np.sqrt((l - m) * (l + m + 1.0)) * np.exp(-1j * phi) * _ylm(l, m + 1, theta, phi)
    norm = np.sqrt(l * (l + 1.0))
    if s == 1:
        return (-dtheta + m * y / sin) / norm
    return (dtheta + m * y / sin) / norm


def sphere_grid(l_max: int):
    """Gauss-Legendre x uniform-phi grid exact for band limit ``l_max`` products.

    Returns (theta, phi, weights) as 2-D arrays; weights sum to 4 pi.
    """
    n_theta = l_max + 2
    n_phi = 2 * l_max + 3
    x, w = roots_legendre(n_theta)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    return T, P, W


def synthesize(c: SphereCoefficients, theta, phi):
    out = np.zeros(np.broadcast(theta, phi).shape, dtype=complex)
    for (l, m), a in c.coeffs.items():
        out = out + a * evaluate_sY(c.s, l, m, theta, phi)
    return out


def analyze(values, s: int, l_max: int, theta, phi, weights) -> SphereCoefficients:
    """Project sampled values onto spin-s harmonics by quadrature."""
    coeffs = {}
    for l in range(abs(s), l_max + 1):
        for m in range(-l, l + 1):
            y = evaluate_sY(s, l, m, theta, phi)
            coeffs[(l, m)] = complex(np.sum(weights * values * np.conj(y)) / FOUR_PI)
    return SphereCoefficients(s, coeffs)


def mode_list(l_max: int, l_min: int = 1) -> Iterable[Tuple[int, int]]:
    for l in range(l_min, l_max + 1):
        for m in range(-l, l + 1):
            yield l, m
