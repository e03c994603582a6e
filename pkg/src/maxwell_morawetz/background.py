"""Schwarzschild exterior geometry and the explicit radial functions used by the
Morawetz current.

Everything here is in geometric units (G = c = 1).  Functions accept scalars or
numpy arrays; the mass defaults to ``M = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when a radial function is evaluated outside its domain."""


def _as_radius(r, M, *, allow_horizon):
    r = np.asarray(r, dtype=float)
    if M <= 0:
        raise DomainError(f"mass must be positive, got {M}")
    bad = r < 2 * M if allow_horizon else r <= 2 * M
    if np.any(bad):
        edge = ">=" if allow_horizon else ">"
        raise DomainError(f"radius must satisfy r {edge} 2M (M={M}); got min r={np.min(r)!r}")
    return r


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


def lapse(r, M=1.0):
    """Return ``1 - 2M/r``."""
    rr = _as_radius(r, M, allow_horizon=True)
    return _out((rr - 2 * M) / rr, r)


def tortoise(r, M=1.0):
    """Tortoise coordinate ``r + 2M ln(r/2M - 1)``, normalised so r* = r at r = 4M."""
    rr = _as_radius(r, M, allow_horizon=False)
    return _out(rr + 2 * M * np.log(rr / (2 * M) - 1.0), r)


def _invert_log_variable(z, max_iter=100, rtol=1e-15):
    # Solve exp(y) + y = z for y; x = exp(y) = r/2M - 1.
    z = np.asarray(z, dtype=float)
    y = np.where(z < 1.0, z, np.log(np.maximum(z, 1.0)))
    for _ in range(max_iter):
        ey = np.exp(y)
        dy = (ey + y - z) / (ey + 1.0)
        y = y - dy
        if np.all(np.abs(dy) <= rtol * np.maximum(1.0, np.abs(y))):
            return y
    raise RuntimeError("invert_tortoise: Newton iteration did not converge")


def invert_tortoise(r_star, M=1.0):
    """Radius ``r > 2M`` whose tortoise coordinate is ``r_star``.

    Newton iteration is carried out on ``y = ln(r/2M - 1)``, where the map is
    convex and increasing, so it converges from any starting point and keeps
    full relative precision of ``r - 2M`` close to the horizon.
    """
    if M <= 0:
        raise DomainError(f"mass must be positive, got {M}")
    rs = np.asarray(r_star, dtype=float)
    if not np.all(np.isfinite(rs)):
        raise DomainError("r_star must be finite")
    y = _invert_log_variable(rs / (2 * M) - 1.0)
    r = 2 * M * (1.0 + np.exp(y))
    return _out(r, r_star)


def morawetz_A(r, M=1.0):
    """Radial coefficient of the Morawetz vector field, ``(r-3M)(r-2M)/(2r^2)``."""
    rr = _as_radius(r, M, allow_horizon=True)
    return _out((rr - 3 * M) * (rr - 2 * M) / (2 * rr**2), r)


def morawetz_A_prime(r, M=1.0):
    rr = _as_radius(r, M, allow_horizon=True)
    # d/dr [(r^2 - 5Mr + 6M^2) / (2 r^2)] = (5M r - 12 M^2) / (2 r^3)
    return _out((5 * M * rr - 12 * M**2) / (2 * rr**3), r)


def morawetz_q(r, M=1.0):
    """Scalar weight ``9M^2 (r-2M)(2r-3M) / (4 r^5)``; nonnegative on r >= 2M."""
    rr = _as_radius(r, M, allow_horizon=True)
    return _out(9 * M**2 * (rr - 2 * M) * (2 * rr - 3 * M) / (4 * rr**5), r)


def morawetz_q_prime(r, M=1.0):
    rr = _as_radius(r, M, allow_horizon=True)
    c = 9 * M**2 / 4
    return _out(c * (-6 / rr**4 + 28 * M / rr**5 - 30 * M**2 / rr**6), r)


def morawetz_q_second(r, M=1.0):
    rr = _as_radius(r, M, allow_horizon=True)
    c = 9 * M**2 / 4
    return _out(c * (24 / rr**5 - 140 * M / rr**6 + 180 * M**2 / rr**7), r)


#: Constant fixed in the proof of the integrated decay estimate.
G_CONSTANT = 5.0 / 6.0


def morawetz_g(r, M=1.0, c1=G_CONSTANT):
    """Hardy-extraction weight ``c1 * 3M (r-3M)^2 (r-2M) / (4 r^5)`` with c1 = 5/6."""
    rr = _as_radius(r, M, allow_horizon=True)
    return _out(c1 * 3 * M * (rr - 3 * M) ** 2 * (rr - 2 * M) / (4 * rr**5), r)


def epsilon_weight(r, M=1.0):
    """Cauchy-Schwarz weight ``r^(-3/2) (r-2M)^(1/2)``."""
    rr = _as_radius(r, M, allow_horizon=True)
    return _out(rr**-1.5 * np.sqrt(rr - 2 * M), r)


def fi_potential(r, l, M=1.0):
    """Potential of the 1+1 wave equation obeyed by ``r * Upsilon`` for multipole l.

    ``V_l = (1 - 2M/r) l(l+1) / r^2``.  The curvature term of the covariant
    equation cancels the ``2M/r^3`` produced by the radial reduction.
    """
    if int(l) != l or l < 1:
        raise DomainError(f"multipole must be an integer >= 1, got {l}")
    rr = _as_radius(r, M, allow_horizon=True)
    return _out((rr - 2 * M) / rr * l * (l + 1) / rr**2, r)


@dataclass(frozen=True)
class BackgroundModel:
    """Uniform tortoise-coordinate grid with cached radial functions.

    The grid is immutable after construction and can be shared across mode
    workers.
    """

    mass: float = 1.0
    r_star_min: float = -60.0
    r_star_max: float = 200.0
    n_points: int = 4097
    max_horizon_lapse: float = 1e-4

    r_star: np.ndarray = field(init=False, repr=False)
    r: np.ndarray = field(init=False, repr=False)
    r_minus_2M: np.ndarray = field(init=False, repr=False)
    lapse: np.ndarray = field(init=False, repr=False)
    sqrt_lapse: np.ndarray = field(init=False, repr=False)
    A: np.ndarray = field(init=False, repr=False)
    q: np.ndarray = field(init=False, repr=False)
    dq: np.ndarray = field(init=False, repr=False)
    d2q: np.ndarray = field(init=False, repr=False)
    g: np.ndarray = field(init=False, repr=False)
    epsilon: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = float(self.mass)
        if not M > 0:
            raise DomainError(f"mass must be positive, got {self.mass}")
        if self.n_points < 8:
            raise ValueError("n_points must be at least 8")
        if not self.r_star_max > self.r_star_min:
            raise ValueError("r_star_max must exceed r_star_min")
        r_star = np.linspace(self.r_star_min, self.r_star_max, self.n_points)
        # r - 2M is carried separately: near the horizon it is far below the
        # resolution of r itself.
        x = np.exp(_invert_log_variable(r_star / (2 * M) - 1.0))
        r = 2 * M * (1.0 + x)
        d = 2 * M * x
        f = x / (1.0 + x)
        if f[0] >= self.max_horizon_lapse:
            raise ValueError(
                f"r_star_min={self.r_star_min} leaves lapse {f[0]:.3g} >= "
                f"{self.max_horizon_lapse:g} at the inner boundary"
            )
        for name, value in [
            ("r_star", r_star),
            ("r", r),
            ("r_minus_2M", d),
            ("lapse", f),
            ("sqrt_lapse", np.sqrt(f)),
            ("A", (r - 3 * M) * d / (2 * r**2)),
            ("q", 9 * M**2 * d * (2 * r - 3 * M) / (4 * r**5)),
            ("dq", morawetz_q_prime(r, M)),
            ("d2q", morawetz_q_second(r, M)),
            ("g", G_CONSTANT * 3 * M * (r - 3 * M) ** 2 * d / (4 * r**5)),
            ("epsilon", r**-1.5 * np.sqrt(d)),
        ]:
            value = np.asarray(value, dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def M(self) -> float:
        return float(self.mass)

    @property
    def h(self) -> float:
        """Tortoise grid spacing."""
        return (self.r_star_max - self.r_star_min) / (self.n_points - 1)

    def fi_potential(self, l: int) -> np.ndarray:
        return fi_potential(self.r, l, self.M)

    def refined(self, factor: int = 2) -> "BackgroundModel":
        """Same domain with the spacing divided by ``factor`` (nested nodes)."""
        return BackgroundModel(
            mass=self.mass,
            r_star_min=self.r_star_min,
            r_star_max=self.r_star_max,
            n_points=(self.n_points - 1) * factor + 1,
            max_horizon_lapse=self.max_horizon_lapse,
        )
