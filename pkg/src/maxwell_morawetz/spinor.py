"""Dyad-component algebra for valence (1,1) and (2,0) spinors.

A spinor with one unprimed and one primed index is stored as a 2x2 (or
2x2xN) array of components in the principal dyad ``(o, iota)``:
``V[i, j]`` is the component with ``i`` (resp. ``j``) contractions with iota
(resp. iota-bar).  The dyad is normalised by ``o_A iota^A = 1``, so the
component form of the spin metric is ``eps_{01} = eps^{01} = 1``.

Null tetrad:  l = o obar, n = iota iotabar, m = o iotabar, mbar = iota obar.
"""

from __future__ import annotations

import numpy as np

EPS = np.array([[0.0, 1.0], [-1.0, 0.0]])

_S2 = 1.0 / np.sqrt(2.0)

# contravariant components of the orthonormal frame
T_UP = np.array([[_S2, 0.0], [0.0, _S2]], dtype=complex)
Z_UP = np.array([[_S2, 0.0], [0.0, -_S2]], dtype=complex)
X_UP = np.array([[0.0, _S2], [_S2, 0.0]], dtype=complex)
Y_UP = np.array([[0.0, -1j * _S2], [1j * _S2, 0.0]], dtype=complex)
FRAME_UP = {"T": T_UP, "X": X_UP, "Y": Y_UP, "Z": Z_UP}


def lower(v_up):
    """Lower both indices: V_{AA'} = V^{BB'} eps_{BA} eps_{B'A'}."""
    return np.einsum("ba,byn,yx->axn", EPS, _nd(v_up), EPS).reshape(np.shape(v_up))


def raise_(v_low):
    """Raise both indices: V^{AA'} = eps^{AB} eps^{A'B'} V_{BB'}."""
    return np.einsum("ab,byn,xy->axn", EPS, _nd(v_low), EPS).reshape(np.shape(v_low))


def _nd(v):
    v = np.asarray(v)
    return v if v.ndim == 3 else v[:, :, None]


def contract(v_up, w_low):
    """v^{AA'} w_{AA'}."""
    return np.einsum("axn,axn->n", _nd(v_up), _nd(w_low)).reshape(np.shape(w_low)[2:])


def frame_components(w_low):
    """Components of a covector along T, X, Y, Z."""
    w = _nd(w_low)
    return {k: contract(np.broadcast_to(v[..., None], w.shape), w).reshape(np.shape(w_low)[2:])
            for k, v in FRAME_UP.items()}


def from_frame(cT, cX, cY, cZ):
    """Lower-index dyad matrix of a covector with the given frame components."""
    cT, cX, cY, cZ = np.broadcast_arrays(*(np.asarray(c, dtype=complex) for c in (cT, cX, cY, cZ)))
    out = np.empty((2, 2) + cT.shape, dtype=complex)
    out[0, 0] = _S2 * (cT + cZ)
    out[1, 1] = _S2 * (cT - cZ)
    out[0, 1] = _S2 * (cX + 1j * cY)
    out[1, 0] = _S2 * (cX - 1j * cY)
    return out


def theta_matrix(theta0, theta2):
    """Lower-index components of a symmetric valence (2,0) spinor with vanishing middle component."""
    theta0, theta2 = np.broadcast_arrays(np.asarray(theta0, dtype=complex), np.asarray(theta2, dtype=complex))
    out = np.zeros((2, 2) + theta0.shape, dtype=complex)
    out[0, 0] = theta0
    out[1, 1] = theta2
    return out


def superenergy_H(beta, x_up, y_up):
    """H_{ABA'B'} X^{AA'} Y^{BB'} with H = 1/2 b_{AB'} bb_{A'B} + 1/2 b_{BA'} bb_{B'A}."""
    b = _nd(beta)
    bc = np.conj(b)
    X = _nd(x_up)
    Y = _nd(y_up)
    t1 = np.einsum("ayn,xbn,axn,byn->n", b, bc, X, Y)
    t2 = np.einsum("bxn,yan,axn,byn->n", b, bc, X, Y)
    return (0.5 * (t1 + t2)).real.reshape(np.shape(beta)[2:])


def beta_theta_pair(beta, theta, x_up):
    """X^{AA'} (bb_{A'}^B Theta_{AB} + b_A^{B'} Thetabar_{A'B'}), a real scalar."""
    b = _nd(beta)
    th = _nd(theta)
    X = _nd(x_up)
    b_r = np.einsum("acn,yc->ayn", b, EPS)  # b_A^{B'}
    bc_r = np.einsum("xcn,bc->xbn", np.conj(b), EPS)  # bb_{A'}^B
    t1 = np.einsum("axn,ayn,xyn->n", X, b_r, np.conj(th))
    t2 = np.einsum("axn,xbn,abn->n", X, bc_r, th)
    return (t1 + t2).real.reshape(np.shape(beta)[2:])


def theta_theta(theta, x_up, y_up):
    """Theta_{AB} Thetabar_{A'B'} X^{AA'} Y^{BB'}."""
    th = _nd(theta)
    return np.einsum("abn,xyn,axn,byn->n", th, np.conj(th), _nd(x_up), _nd(y_up)).real.reshape(np.shape(theta)[2:])


def e1_form(b0, b1, b2, nu):
    """Quadratic form E1[b0, b1, b2, nu] for a covector nu (lower dyad components)."""
    n = _nd(nu)
    T_mixed = np.einsum("ay,yx->ax", T_UP, EPS)   # T^A_{A'}
    Z_mixed = np.einsum("ay,yx->ax", Z_UP, EPS)
    nu_r = np.einsum("acn,yc->ayn", n, EPS)                  # nu_A^{B'}
    nub_r = np.einsum("xc,cbn->xbn", EPS, np.conj(n))         # nubar^{A'}_B
    S = np.einsum("ayn,xbn->abxyn", nu_r, nub_r)
    S = 0.25 * (S + S.transpose(1, 0, 2, 3, 4) + S.transpose(0, 1, 3, 2, 4) + S.transpose(1, 0, 3, 2, 4))
    tt = np.einsum("ax,by,abxyn->n", T_mixed, T_mixed, S)
    zz = np.einsum("ax,by,abxyn->n", Z_mixed, Z_mixed, S)
    nub_up = np.einsum("xc,cdn,ad->xan", EPS, np.conj(n), EPS)   # nubar^{A'A}
    trace = np.einsum("axn,xan->n", n, nub_up)
    val = 2 * np.asarray(b2) * tt + (np.asarray(b1) - 2 * np.asarray(b2)) * zz - (np.asarray(b0) + 0.25 * np.asarray(b1)) * trace
    return val.real.reshape(np.shape(nu)[2:])
