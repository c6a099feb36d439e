"""Real spherical harmonics with the polar axis along x1.

For a point ``y`` relative to a sphere centre we use ``t = y1/|y|`` (cosine of
the polar angle), ``s = sqrt(1 - t^2)`` and the azimuth ``phi = atan2(y3, y2)``.
The basis is orthonormal on the unit sphere:

    Y_nm^c = Pbar_n^m(t) cos(m phi) / sqrt(pi)      (m >= 1)
    Y_nm^s = Pbar_n^m(t) sin(m phi) / sqrt(pi)      (m >= 1)
    Y_n0   = Pbar_n^0(t) / sqrt(2 pi)

with ``Pbar`` the associated Legendre functions normalised on [-1, 1]
(no Condon-Shortley phase). Exterior harmonics are ``|y|^-(n+1) Y_nm`` and
regular ones ``|y|^n Y_nm``. Mirror symmetry ``y1 -> -y1`` multiplies
``Y_nm`` by ``(-1)^(n+m)``.

Coefficient sets are stored as dictionaries ``{(m, kind): array}`` with the
array indexed by degree ``n = 0..L`` (entries below ``m`` are ignored).
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

SQRT_PI = np.sqrt(np.pi)
SQRT_2PI = np.sqrt(2.0 * np.pi)

KINDS = ("c", "s")


def mode_keys(m_max: int):
    """All (m, kind) pairs up to azimuthal order ``m_max``."""
    keys = [(0, "c")]
    for m in range(1, m_max + 1):
        keys += [(m, "c"), (m, "s")]
    return keys


def _angles(y):
    y = np.asarray(y, dtype=float).reshape(-1, 3)
    r = np.linalg.norm(y, axis=1)
    if np.any(r == 0.0):
        raise DomainError("harmonic evaluated at the expansion centre")
    t = np.clip(y[:, 0] / r, -1.0, 1.0)
    rho = np.hypot(y[:, 1], y[:, 2])
    s = rho / r
    phi = np.arctan2(y[:, 2], y[:, 1])
    return r, t, s, phi


def _azimuth(m, kind, phi):
    """Azimuthal factor and its phi-derivative."""
    if m == 0:
        return np.full_like(phi, 1.0 / SQRT_2PI), np.zeros_like(phi)
    if kind == "c":
        return np.cos(m * phi) / SQRT_PI, -m * np.sin(m * phi) / SQRT_PI
    return np.sin(m * phi) / SQRT_PI, m * np.cos(m * phi) / SQRT_PI


def _recurrence_coeffs(n, m):
    a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
    b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
    return a, b


def _sectoral_q(m, s):
    """``Pbar_m^m / s`` for m >= 1 (finite at the poles)."""
    c = 1.0 / np.sqrt(2.0)
    for k in range(1, m + 1):
        c *= np.sqrt((2.0 * k + 1.0) / (2.0 * k))
    with np.errstate(under="ignore"):
        return c * s ** (m - 1)


def legendre_sweep(m: int, L: int, t, s):
    """Yield ``(n, P, dP)`` for n = m..L where P = Pbar_n^m(t) and dP = dP/dtheta.

    Uses the pole-safe quotient ``Pbar/s`` for m >= 1; for m = 0 the
    derivative comes from a companion m = 1 sweep.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if m == 0:
        p_prev = np.zeros_like(t)
        p_cur = np.full_like(t, 1.0 / np.sqrt(2.0))
        q1_prev = np.zeros_like(t)
        q1_cur = np.full_like(t, np.sqrt(3.0) / 2.0)  # Pbar_1^1 / s
        yield 0, p_cur, np.zeros_like(t)
        for n in range(1, L + 1):
            a, b = _recurrence_coeffs(n, 0)
            p_prev, p_cur = p_cur, a * (t * p_cur - b * p_prev)
            if n >= 2:
                a1, b1 = _recurrence_coeffs(n, 1)
                q1_prev, q1_cur = q1_cur, a1 * (t * q1_cur - b1 * q1_prev)
            yield n, p_cur, -np.sqrt(n * (n + 1.0)) * s * q1_cur
        return
    q_prev = np.zeros_like(t)
    q_cur = _sectoral_q(m, s)
    yield m, s * q_cur, m * t * q_cur
    for n in range(m + 1, L + 1):
        a, b = _recurrence_coeffs(n, m)
        q_prev, q_cur = q_cur, a * (t * q_cur - b * q_prev)
        c = np.sqrt((2.0 * n + 1.0) * (n * n - m * m) / (2.0 * n - 1.0))
        yield n, s * q_cur, n * t * q_cur - c * q_prev


def _quotient_sweep(m, L, t, s):
    """Yield ``Pbar_n^m / s`` for m >= 1, n = m..L."""
    q_prev = np.zeros_like(t)
    q_cur = _sectoral_q(m, s)
    yield q_cur
    for n in range(m + 1, L + 1):
        a, b = _recurrence_coeffs(n, m)
        q_prev, q_cur = q_cur, a * (t * q_cur - b * q_prev)
        yield q_cur


def evaluate(coefs: dict, y, *, regular: bool = False, grad: bool = False):
    """Sum ``sum_{m,kind,n} c_nm H_nm(y)`` for exterior or regular harmonics H.

    ``y`` holds points relative to the expansion centre. Returns the values,
    and the Cartesian gradient if ``grad`` is set.
    """
    r, t, s, phi = _angles(y)
    val = np.zeros_like(r)
    g_r = np.zeros_like(r)
    g_th = np.zeros_like(r)
    g_ph = np.zeros_like(r)
    inv_r = 1.0 / r
    with np.errstate(under="ignore"):
        for (m, kind), c in coefs.items():
            c = np.asarray(c, dtype=float)
            nz = np.nonzero(c[m:])[0]
            if len(nz) == 0:
                continue
            L = m + int(nz[-1])
            az, daz = _azimuth(m, kind, phi)
            acc_v = np.zeros_like(r)
            acc_r = np.zeros_like(r)
            acc_th = np.zeros_like(r)
            acc_ph = np.zeros_like(r)
            qs = _quotient_sweep(m, L, t, s) if (grad and m > 0) else None
            rad = r**m if regular else inv_r ** (m + 1)
            for n, P, dP in legendre_sweep(m, L, t, s):
                q = next(qs) if qs is not None else None
                cn = c[n]
                if cn != 0.0:
                    w = cn * rad
                    acc_v += w * P
                    if grad:
                        acc_r += (n if regular else -(n + 1.0)) * w * P
                        acc_th += w * dP
                        if m > 0:
                            acc_ph += w * q
                rad = rad * r if regular else rad * inv_r
            val += acc_v * az
            if grad:
                g_r += acc_r * az
                g_th += acc_th * az
                if m > 0:
                    g_ph += acc_ph * daz
    if not grad:
        return val
    # accumulated terms carry |y|^(degree); one more 1/|y| turns them into derivatives
    g_r, g_th, g_ph = g_r * inv_r, g_th * inv_r, g_ph * inv_r
    cph, sph = np.cos(phi), np.sin(phi)
    e_r = np.stack([t, s * cph, s * sph], axis=1)
    e_th = np.stack([-s, t * cph, t * sph], axis=1)
    e_ph = np.stack([np.zeros_like(phi), -sph, cph], axis=1)
    g = g_r[:, None] * e_r + g_th[:, None] * e_th + g_ph[:, None] * e_ph
    return val, g


def synthesize(coefs: dict, directions):
    """Values of ``sum c_nm Y_nm`` at unit vectors ``directions``."""
    return evaluate(coefs, directions, regular=True)


def exterior_gradients(m: int, kind: str, L: int, y):
    """Values and gradients of the exterior harmonics ``E_nm`` at one point.

    Returns arrays of shape (L+1,) and (L+1, 3); rows below ``m`` are zero.
    Used to expand point sources (addition theorem).
    """
    y = np.asarray(y, dtype=float).reshape(1, 3)
    r, t, s, phi = _angles(y)
    az, daz = _azimuth(m, kind, phi)
    vals = np.zeros(L + 1)
    grads = np.zeros((L + 1, 3))
    if L < m:
        return vals, grads
    cph, sph = np.cos(phi[0]), np.sin(phi[0])
    e_r = np.array([t[0], s[0] * cph, s[0] * sph])
    e_th = np.array([-s[0], t[0] * cph, t[0] * sph])
    e_ph = np.array([0.0, -sph, cph])
    n = np.arange(m, L + 1)
    P = np.empty(len(n))
    dP = np.empty(len(n))
    Q = np.zeros(len(n))
    for i, (_, p_, dp_) in enumerate(legendre_sweep(m, L, t, s)):
        P[i] = p_[0]
        dP[i] = dp_[0]
    if m > 0:
        for i, q_ in enumerate(_quotient_sweep(m, L, t, s)):
            Q[i] = q_[0]
    with np.errstate(under="ignore"):
        rad = np.exp(-(n + 1.0) * np.log(r[0]))
        vals[m:] = rad * P * az[0]
        grads[m:] = (rad / r[0])[:, None] * (
            (-(n + 1.0) * P * az[0])[:, None] * e_r
            + (dP * az[0])[:, None] * e_th
            + (Q * daz[0])[:, None] * e_ph
        )
    return vals, grads


def regular_values(m: int, kind: str, L: int, y):
    """Values of the regular harmonics ``|y|^n Y_nm(y)`` at one point, n = 0..L."""
    y = np.asarray(y, dtype=float).reshape(3)
    out = np.zeros(L + 1)
    r = float(np.linalg.norm(y))
    if r == 0.0:
        if m == 0:
            out[0] = 1.0 / (np.sqrt(2.0) * SQRT_2PI)
        return out
    _, t, s, phi = _angles(y)
    az, _ = _azimuth(m, kind, phi)
    rad = r**m
    for n, P, _dP in legendre_sweep(m, L, t, s):
        out[n] = rad * P[0] * az[0]
        rad *= r
    return out


def coaxial_translation(m: int, L: int, d: float) -> np.ndarray:
    """Exact re-expansion of exterior harmonics about a shifted centre.

    With the source centre displaced by ``d > 0`` along +x1 from the
    target centre, ``E_nm(x - c_src) = sum_k T[k, n] |x - c_tgt|^k Y_km``
    for ``|x - c_tgt| < d``, where

        T[k, n] = (-1)^(n-m) sqrt((2n+1)/(2k+1)) (n+k)!
                  / sqrt((n-m)! (n+m)! (k-m)! (k+m)!) / d^(n+k+1).

    Rows and columns are indexed by degree 0..L (entries with n or k below
    m are zero). A displacement along -x1 multiplies ``T[k, n]`` by
    ``(-1)^(n+k)``.
    """
    if d <= 0.0:
        raise DomainError("translation distance must be positive")
    T = np.zeros((L + 1, L + 1))
    if L < m:
        return T
    n = np.arange(m, L + 1, dtype=float)
    log_fact = gammaln(np.arange(2 * L + 2, dtype=float) + 1.0)
    side = 0.5 * (gammaln(n - m + 1.0) + gammaln(n + m + 1.0))
    half_log = 0.5 * np.log(2.0 * n + 1.0)
    i = np.arange(len(n))
    logt = log_fact[i[:, None] + i[None, :] + 2 * m]
    logt -= side[:, None] + side[None, :]
    logt += half_log[None, :] - half_log[:, None]
    logt -= (n[:, None] + n[None, :] + 1.0) * np.log(d)
    sign = np.where(((n - m) % 2) == 0, 1.0, -1.0)
    with np.errstate(under="ignore"):
        T[m:, m:] = np.exp(logt) * sign[None, :]
    return T
