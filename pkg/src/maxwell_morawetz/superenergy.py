"""Fields derived from the Maxwell scalars and the quadratic quantities built on them.

Per (l, m) mode and grid point we carry the extreme components of the
Killing-spinor contraction ``Theta_AB`` (its middle component vanishes), the
scalar ``Upsilon = kappa^AB phi_AB = (2/3) r phi1`` and the four null
components of ``beta = nabla Upsilon - U Upsilon`` with ``U = -dr/r``.

Angular dependence is carried by spin-weighted harmonics normalised to 4 pi,
so for any two fields of equal spin weight
``int_S2 a conj(b) dOmega = 4 pi * sum_modes a_lm conj(b_lm)``.  Every sphere
integral below uses this; the T-Z plane quantities only ever pair equal spins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import spinor
from .background import BackgroundModel
from .evolution import ModeState, constraint_residual, d1, data_norm, reduced_rhs

FOUR_PI = 4.0 * np.pi
UPSILON_SCALE = 2.0 / 3.0
_S2 = 1.0 / np.sqrt(2.0)


def kappa1(r):
    """Middle dyad component of the Killing spinor, ``kappa_01 = -r/3``."""
    return -np.asarray(r, dtype=float) / 3.0


# ---------------------------------------------------------------------------
# derived fields


def theta_from_phi(state: ModeState) -> Tuple[np.ndarray, np.ndarray]:
    k = kappa1(state.bg.r)
    return -2 * k * state.phi0, 2 * k * state.phi2


def upsilon_from_phi(state: ModeState) -> np.ndarray:
    """``Upsilon = kappa^AB phi_AB = -2 kappa_1 phi1``."""
    return -2 * kappa1(state.bg.r) * state.phi1


@dataclass
class DerivedModeFields:
    l: int
    m: int
    theta0: np.ndarray
    theta2: np.ndarray
    upsilon: np.ndarray
    beta_l: np.ndarray
    beta_n: np.ndarray
    beta_m: np.ndarray
    beta_mbar: np.ndarray

    @property
    def beta_T(self) -> np.ndarray:
        return _S2 * (self.beta_l + self.beta_n)

    @property
    def beta_Z(self) -> np.ndarray:
        return _S2 * (self.beta_l - self.beta_n)

    @property
    def beta_ang_sq(self) -> np.ndarray:
        """Sphere density of |beta_X|^2 + |beta_Y|^2 for this mode."""
        return np.abs(self.beta_m) ** 2 + np.abs(self.beta_mbar) ** 2

    @property
    def w_TT(self) -> np.ndarray:
        return 0.5 * (np.abs(self.theta0) ** 2 + np.abs(self.theta2) ** 2)

    def beta_dyad(self) -> np.ndarray:
        out = np.empty((2, 2) + self.beta_l.shape, dtype=complex)
        out[0, 0], out[0, 1], out[1, 0], out[1, 1] = self.beta_l, self.beta_m, self.beta_mbar, self.beta_n
        return out

    def theta_dyad(self) -> np.ndarray:
        return spinor.theta_matrix(self.theta0, self.theta2)


def fields_from_scaled(U: np.ndarray, dU: np.ndarray, l: int, m: int, bg: BackgroundModel) -> DerivedModeFields:
    """Derived fields from rescaled variables (Phi0, Phi2, Psi) and their time derivative.

    ``r Upsilon = (2/3) Psi``, so ``beta_T = (2/3) d_t Psi / (r sqrt f)`` and
    ``beta_Z = (2/3) d_* Psi / (r sqrt f)``.
    """
    Phi0, Phi2, Psi = U
    rs = bg.r * bg.sqrt_lapse
    c = UPSILON_SCALE
    beta_T = c * dU[2] / rs
    if l == 0:
        # the radial constraint reads d_* Psi = 0 here; differencing would only amplify roundoff by 1/sqrt f
        beta_Z = np.zeros_like(rs, dtype=complex)
    else:
        beta_Z = c * d1(Psi, bg.h) / rs
    upsilon = c * Psi / bg.r
    if l == 0:
        ladder = np.zeros_like(bg.r)
    else:
        ladder = np.sqrt(l * (l + 1.0)) / (np.sqrt(2.0) * bg.r)
    return DerivedModeFields(
        l=l,
        m=m,
        theta0=c * Phi0 / bg.sqrt_lapse,
        theta2=-c * Phi2 / bg.sqrt_lapse,
        upsilon=upsilon,
        beta_l=_S2 * (beta_T + beta_Z),
        beta_n=_S2 * (beta_T - beta_Z),
        beta_m=-ladder * upsilon,
        beta_mbar=ladder * upsilon,
    )


def derive_fields(state: ModeState) -> DerivedModeFields:
    """Fields of one mode; the time derivative comes from the evolution right-hand side."""
    bg = state.bg
    _, dphi1, _ = reduced_rhs(state)
    U = state.scaled()
    dU = np.zeros_like(U)
    dU[2] = bg.r**2 * dphi1
    return fields_from_scaled(U, dU, state.l, state.m, bg)


def beta_from_upsilon(upsilon: np.ndarray, dt_upsilon: np.ndarray, l: int, bg: BackgroundModel):
    """Null components (beta_l, beta_n, beta_m, beta_mbar) from Upsilon and its time derivative."""
    rs = bg.r * bg.sqrt_lapse
    beta_T = dt_upsilon / bg.sqrt_lapse
    beta_Z = d1(bg.r * upsilon, bg.h) / rs
    ladder = 0.0 if l == 0 else np.sqrt(l * (l + 1.0)) / (np.sqrt(2.0) * bg.r)
    return (_S2 * (beta_T + beta_Z), _S2 * (beta_T - beta_Z), -ladder * upsilon, ladder * upsilon)


# ---------------------------------------------------------------------------
# pointwise densities (per unit sphere measure, per mode)


def h_TT(F: DerivedModeFields) -> np.ndarray:
    return 0.5 * (np.abs(F.beta_l) ** 2 + np.abs(F.beta_n) ** 2 + F.beta_ang_sq)


def h_TZ(F: DerivedModeFields) -> np.ndarray:
    return 0.5 * (np.abs(F.beta_l) ** 2 - np.abs(F.beta_n) ** 2)


def h_ZZ(F: DerivedModeFields) -> np.ndarray:
    return 0.5 * (np.abs(F.beta_l) ** 2 + np.abs(F.beta_n) ** 2 - F.beta_ang_sq)


def _pair(F: DerivedModeFields, sign: float) -> np.ndarray:
    # X^{AA'} (bbar_{A'}^B Theta_AB + b_A^{B'} Thetabar_{A'B'}) for X = T (sign=-1) or Z (sign=+1)
    return np.sqrt(2.0) * np.real(F.beta_m * np.conj(F.theta0) + sign * F.beta_mbar * np.conj(F.theta2))


def _current_P(F: DerivedModeFields, r, sqrt_f, q, dq, M):
    a = (r - 3 * M) * sqrt_f / (2 * r)  # A = a * Zhat
    grad = -0.5 * sqrt_f * dq
    t0 = np.abs(F.theta0) ** 2
    t2 = np.abs(F.theta2) ** 2
    P_T = a * h_TZ(F) - 0.5 * q * _pair(F, -1.0) + 0.5 * grad * (t0 - t2)
    P_Z = a * h_ZZ(F) - 0.5 * q * _pair(F, +1.0) + 0.5 * grad * (t0 + t2)
    return P_T, P_Z


def current_P(F: DerivedModeFields, bg: BackgroundModel) -> Tuple[np.ndarray, np.ndarray]:
    """Frame components (P_T, P_Z) of the Morawetz current."""
    return _current_P(F, bg.r, bg.sqrt_lapse, bg.q, bg.dq, bg.M)


def current_P_spinor(F: DerivedModeFields, bg: BackgroundModel, x_up: np.ndarray) -> np.ndarray:
    """``P_AA' X^AA'`` evaluated by direct dyad contraction (reference implementation)."""
    n = bg.n_points
    X = np.broadcast_to(np.asarray(x_up)[..., None], (2, 2, n))
    Zup = np.broadcast_to(spinor.Z_UP[..., None], (2, 2, n))
    b = F.beta_dyad()
    th = F.theta_dyad()
    a = (bg.r - 3 * bg.M) * bg.sqrt_lapse / (2 * bg.r)
    dq_up = -bg.sqrt_lapse * bg.dq * Zup  # (T q)^{BB'}
    return (
        a * spinor.superenergy_H(b, X, Zup)
        - 0.5 * bg.q * spinor.beta_theta_pair(b, th, X)
        + 0.5 * spinor.theta_theta(th, X, dq_up)
    )


def deg_beta_density(F: DerivedModeFields, bg: BackgroundModel) -> np.ndarray:
    """``|beta|^2_{1,deg}`` per unit sphere measure."""
    r, M, d = bg.r, bg.M, bg.r_minus_2M
    return (
        (r - 3 * M) ** 2 / r**3 * F.beta_ang_sq
        + M * d / r**3 * np.abs(F.beta_Z) ** 2
        + M * (r - 3 * M) ** 2 * d / r**5 * np.abs(F.beta_T) ** 2
    )


def z_norm_density(F: DerivedModeFields, bg: BackgroundModel) -> np.ndarray:
    """``|Z|^2_2 = (r - 2M)/r * W_TT``."""
    return bg.lapse * F.w_TT


@dataclass(frozen=True)
class QuadraticFormCoeffs:
    b0: np.ndarray
    b1: np.ndarray
    b2: np.ndarray


def bulk_coefficients(r, M=1.0):
    """Coefficient triple of the E1 term, the extracted g-term and the W coefficient of -div P."""
    r = np.asarray(r, dtype=float)
    c = QuadraticFormCoeffs(
        b0=(r - 3 * M) ** 2 * (14 * M**2 - 7 * M * r + 4 * r**2) / (16 * r**5),
        b1=M * (90 * M**3 - 105 * M**2 * r + 28 * M * r**2 + r**3) / (4 * r**5),
        b2=(r - 3 * M) ** 2 * (10 * M**2 - 5 * M * r + 4 * r**2) / (16 * r**5),
    )
    g_term = 5 * M * (r - 3 * M) ** 2 * (r - 2 * M) / (8 * r**5)
    w_coeff = -27 * M**2 * (r - 5 * M) * (r - 2 * M) ** 2 / (2 * r**8)
    return c, g_term, w_coeff


def divP_density(F: DerivedModeFields, bg: BackgroundModel) -> np.ndarray:
    """Pointwise ``-div P`` (per unit sphere measure) from its exact frame expansion."""
    r, M, d = bg.r, bg.M, bg.r_minus_2M
    bT = np.abs(F.beta_T) ** 2
    bZ = np.abs(F.beta_Z) ** 2
    return (
        M * bT * (r - 3 * M) ** 2 * d / (8 * r**5)
        + M * bZ * d * (r**2 + 66 * M * r - 99 * M**2) / (8 * r**5)
        + F.beta_ang_sq * (r - 3 * M) ** 2 * (2 * r**2 - 3 * M * r + 6 * M**2) / (4 * r**5)
        + 5 * M * (bT + bZ) * (r - 3 * M) ** 2 * d / (8 * r**5)
        - 27 * M**2 * (r - 5 * M) * d ** 2 / (2 * r**8) * F.w_TT
    )


def e1_form(c: QuadraticFormCoeffs, nu: Sequence[complex]) -> float:
    """E1 quadratic form at one point; ``nu`` holds the frame components (T, X, Y, Z)."""
    return float(spinor.e1_form(c.b0, c.b1, c.b2, spinor.from_frame(*nu)))


def e1_matrix(c: QuadraticFormCoeffs) -> np.ndarray:
    """Hermitian matrix of E1 in the frame basis (T, X, Y, Z)."""
    b0, b1, b2 = float(c.b0), float(c.b1), float(c.b2)
    return np.diag([b2 - b0, b0 + b2, b0 + b2, b0 + b1 - b2])


# ---------------------------------------------------------------------------
# slice integrals


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights; an even point count closes with the 3/8 rule."""
    if n < 4:
        raise ValueError("need at least 4 points")
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 3
    w[:m:2] += 2.0
    w[1:m:2] += 4.0
    w[0] -= 1.0
    w[m - 1] -= 1.0
    w[:m] *= h / 3.0
    if m < n:
        w[-4:] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def _radial(integrand: np.ndarray, bg: BackgroundModel) -> float:
    """``4 pi int integrand r^2 f dr*`` (composite Simpson on the tortoise grid)."""
    return FOUR_PI * float(np.dot(simpson_weights(bg.n_points, bg.h), integrand * bg.r**2 * bg.lapse))


def _sum(values) -> float:
    return math.fsum(values)


def energy_xi(fields: Sequence[DerivedModeFields], bg: BackgroundModel) -> float:
    return _sum(_radial(h_TT(F), bg) for F in fields)


def energy_xi_Aq(fields: Sequence[DerivedModeFields], bg: BackgroundModel) -> float:
    """``E_xi`` plus the flux of P through the t-slice."""
    total = []
    for F in fields:
        P_T, _ = current_P(F, bg)
        total.append(_radial(h_TT(F) + P_T / bg.sqrt_lapse, bg))
    return _sum(total)


def bulk_morawetz(fields: Sequence[DerivedModeFields], bg: BackgroundModel) -> Tuple[float, float]:
    """Slice integrals of ``|beta|^2_{1,deg}`` and ``(2M/25 r^4)|Z|^2_2``."""
    deg = _sum(_radial(deg_beta_density(F, bg), bg) for F in fields)
    zz = _sum(_radial(2 * bg.M / (25 * bg.r**4) * z_norm_density(F, bg), bg) for F in fields)
    return deg, zz


def divP_bulk(fields: Sequence[DerivedModeFields], bg: BackgroundModel) -> float:
    return _sum(_radial(divP_density(F, bg), bg) for F in fields)


def boundary_rates(F: DerivedModeFields, bg: BackgroundModel) -> Tuple[float, float]:
    """Net rates at which E_xi and E_{xi+A,q} change through the two grid edges."""
    ends = [0, -1]
    E = DerivedModeFields(F.l, F.m, *(np.asarray(getattr(F, k))[ends] for k in _FIELD_NAMES))
    return _boundary_from_edges(E, bg)


def _boundary_from_edges(E: DerivedModeFields, bg: BackgroundModel) -> Tuple[float, float]:
    ends = [0, -1]
    r, sf, f = bg.r[ends], bg.sqrt_lapse[ends], bg.lapse[ends]
    _, P_Z = _current_P(E, r, sf, bg.q[ends], bg.dq[ends], bg.M)
    area = FOUR_PI * r**2
    flux_xi = area * f * h_TZ(E)
    flux_J = flux_xi + area * sf * P_Z
    return float(flux_xi[1] - flux_xi[0]), float(flux_J[1] - flux_J[0])


def _edge_rates(U_e, dPsi_t_e, dPsi_e, l, bg):
    ends = [0, -1]
    r, sf = bg.r[ends], bg.sqrt_lapse[ends]
    c = UPSILON_SCALE
    beta_T = c * dPsi_t_e / (r * sf)
    beta_Z = c * dPsi_e / (r * sf)
    ups = c * U_e[2] / r
    ladder = np.sqrt(l * (l + 1.0)) / (np.sqrt(2.0) * r)
    E = DerivedModeFields(l, 0, c * U_e[0] / sf, -c * U_e[1] / sf, ups,
                          _S2 * (beta_T + beta_Z), _S2 * (beta_T - beta_Z), -ladder * ups, ladder * ups)
    return _boundary_from_edges(E, bg)


_FIELD_NAMES = ("theta0", "theta2", "upsilon", "beta_l", "beta_n", "beta_m", "beta_mbar")


#: Order of the entries returned by :func:`slice_rates`.
RATE_NAMES = ("boundary_xi", "boundary_Aq", "bulk_deg_beta", "bulk_Z", "divP")


class RateKernel:
    """Precomputed radial weights for :func:`slice_rates` on one background.

    Each bulk rate is a weighted sum of |beta_T|^2, |beta_Z|^2, the angular
    part and W_TT; the weights fold in the quadrature, ``r^2 f`` and 4 pi.
    """

    def __init__(self, bg: BackgroundModel):
        self.bg = bg
        r, M, d = bg.r, bg.M, bg.r_minus_2M
        meas = FOUR_PI * simpson_weights(bg.n_points, bg.h) * r**2 * bg.lapse
        self.deg = np.stack([
            M * (r - 3 * M) ** 2 * d / r**5,
            M * d / r**3,
            (r - 3 * M) ** 2 / r**3,
            np.zeros_like(r),
        ]) * meas
        self.zz = np.stack([np.zeros_like(r)] * 3 + [2 * M / (25 * r**4) * bg.lapse]) * meas
        g5 = 5 * M * (r - 3 * M) ** 2 * d / (8 * r**5)
        self.div = np.stack([
            M * (r - 3 * M) ** 2 * d / (8 * r**5) + g5,
            M * d * (r**2 + 66 * M * r - 99 * M**2) / (8 * r**5) + g5,
            (r - 3 * M) ** 2 * (2 * r**2 - 3 * M * r + 6 * M**2) / (4 * r**5),
            -27 * M**2 * (r - 5 * M) * d**2 / (2 * r**8),
        ]) * meas
        self._weights = np.stack([self.deg.ravel(), self.zz.ravel(), self.div.ravel()])
        c2 = UPSILON_SCALE**2
        self._inv_rs2 = c2 / (r**2 * bg.lapse)
        self._inv_r2 = c2 / r**2
        self._inv_f = 0.5 * c2 / bg.lapse

    def __call__(self, U: np.ndarray, dU: np.ndarray, l: int) -> np.ndarray:
        bg = self.bg
        Phi0, Phi2, Psi = U
        sq = lambda z: z.real**2 + z.imag**2
        dPsi = d1(Psi, bg.h)
        parts = np.stack([
            sq(dU[2]) * self._inv_rs2,
            sq(dPsi) * self._inv_rs2,
            l * (l + 1.0) * sq(Psi) * self._inv_r2 / bg.r**2,
            (sq(Phi0) + sq(Phi2)) * self._inv_f,
        ])
        b_xi, b_aq = _edge_rates(U[:, [0, -1]], dU[2, [0, -1]], dPsi[[0, -1]], l, bg)
        deg, zz, div = self._weights @ parts.ravel()
        return np.array([b_xi, b_aq, deg, zz, div])


def slice_rates(U: np.ndarray, dU: np.ndarray, l: int, bg: BackgroundModel) -> np.ndarray:
    """Time rates integrated alongside the evolution (see :data:`RATE_NAMES`)."""
    F = fields_from_scaled(U, dU, l, 0, bg)
    b_xi, b_aq = boundary_rates(F, bg)
    deg, zz = bulk_morawetz([F], bg)
    return np.array([b_xi, b_aq, deg, zz, divP_bulk([F], bg)])


# ---------------------------------------------------------------------------
# diagnostics


def measured_hardy_ratio(F: DerivedModeFields, bg: BackgroundModel) -> float:
    """``int W_TT / (r^2/2 int (|beta_T|^2 + |beta_Z|^2))`` over the slice for one mode."""
    w = simpson_weights(bg.n_points, bg.h) * bg.r**2 * bg.lapse
    num = np.dot(w, F.w_TT)
    den = np.dot(w, 0.5 * bg.r**2 * (np.abs(F.beta_T) ** 2 + np.abs(F.beta_Z) ** 2))
    return float(num / den) if den > 0 else float("nan")


@dataclass
class SliceDiagnostics:
    t: float
    E_xi: float
    E_xi_Aq: float
    bulk_deg_beta: float
    bulk_Z: float
    divP: float
    constraint_norms: Dict[Tuple[int, int], float] = field(default_factory=dict)
    hardy_ratios: Dict[Tuple[int, int], float] = field(default_factory=dict)

    @property
    def constraint_residual(self) -> float:
        return max(self.constraint_norms.values(), default=0.0)


def slice_diagnostics(states: Sequence[ModeState]) -> SliceDiagnostics:
    if not states:
        raise ValueError("no modes")
    bg = states[0].bg
    fields = [derive_fields(s) for s in states]
    deg, zz = bulk_morawetz(fields, bg)
    cn, hr = {}, {}
    for s, F in zip(states, fields):
        if s.l == 0:
            continue
        scale = data_norm(s)
        cn[(s.l, s.m)] = constraint_residual(s) / scale if scale > 0 else 0.0
        hr[(s.l, s.m)] = measured_hardy_ratio(F, bg)
    return SliceDiagnostics(
        t=states[0].t,
        E_xi=energy_xi(fields, bg),
        E_xi_Aq=energy_xi_Aq(fields, bg),
        bulk_deg_beta=deg,
        bulk_Z=zz,
        divP=divP_bulk(fields, bg),
        constraint_norms=cn,
        hardy_ratios=hr,
    )
