"""Hot inner loops, compiled with numba when available.

Every kernel has a pure NumPy/Python twin with identical semantics. The
compiled path is used unless ``TWO_END_LAB_JIT=0`` is set in the
environment (or numba cannot be imported); ``benchmarks/bench_kernels.py``
times both.
"""
import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_JIT = numba is not None and os.environ.get("TWO_END_LAB_JIT", "1") != "0"

SQRT2 = math.sqrt(2.0)

# integrator status codes
OK = 0
BLOWUP = 1
UNDERFLOW = 2
MAX_STEPS = 3


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Allen-Cahn operator on the axisymmetric half strip
# ---------------------------------------------------------------------------

def allen_cahn_operator_numpy(u, h_r, h_z):
    """u_zz + u_rr + u_r/r + u - u**3 on an (n_z, n_r) array.

    Out-of-range neighbours are mirrored at every edge; rows belonging to
    Dirichlet edges are meaningless and must be masked by the caller. The
    axis column uses the regular limit 2*u_rr of u_rr + u_r/r.
    """
    n_z, n_r = u.shape
    p = np.pad(u, 1, mode="reflect")
    c = p[1:-1, 1:-1]
    up = p[2:, 1:-1]
    dn = p[:-2, 1:-1]
    rt = p[1:-1, 2:]
    lt = p[1:-1, :-2]
    out = (up - 2.0 * c + dn) / h_z**2
    r = np.arange(n_r) * h_r
    rr = np.empty(n_r)
    rr[0] = 1.0
    rr[1:] = r[1:]
    radial = (rt - 2.0 * c + lt) / h_r**2 + (rt - lt) / (2.0 * h_r * rr)
    radial[:, 0] = 4.0 * (u[:, 1] - u[:, 0]) / h_r**2
    out += radial + c - c**3
    return out


def _allen_cahn_operator_loops(u, h_r, h_z):
    n_z, n_r = u.shape
    out = np.empty_like(u)
    izz = 1.0 / (h_z * h_z)
    irr = 1.0 / (h_r * h_r)
    for j in range(n_z):
        jd = j - 1 if j > 0 else 1
        ju = j + 1 if j < n_z - 1 else n_z - 2
        for i in range(n_r):
            c = u[j, i]
            val = (u[ju, i] - 2.0 * c + u[jd, i]) * izz
            if i == 0:
                val += 4.0 * (u[j, 1] - c) * irr
            else:
                il = i - 1
                ir = i + 1 if i < n_r - 1 else n_r - 2
                r = i * h_r
                val += (u[j, ir] - 2.0 * c + u[j, il]) * irr
                val += (u[j, ir] - u[j, il]) / (2.0 * h_r * r)
            out[j, i] = val + c - c * c * c
    return out


allen_cahn_operator_jit = _njit(_allen_cahn_operator_loops)


def allen_cahn_operator(u, h_r, h_z):
    if USE_JIT:
        return allen_cahn_operator_jit(np.ascontiguousarray(u, dtype=np.float64), h_r, h_z)
    return allen_cahn_operator_numpy(u, h_r, h_z)


# ---------------------------------------------------------------------------
# First sign change per grid column
# ---------------------------------------------------------------------------

def column_crossings_numpy(values, h_z):
    """z of the lowest sign change in every column, NaN where there is none."""
    a = values[:-1]
    b = values[1:]
    change = (np.sign(a) != np.sign(b)) & (a != b)
    hit = change.any(axis=0)
    j = np.argmax(change, axis=0)
    cols = np.arange(values.shape[1])
    ua = values[j, cols]
    ub = values[j + 1, cols]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (j - ua / (ub - ua)) * h_z
    return np.where(hit, z, np.nan)


def _column_crossings_loops(values, h_z):
    n_z, n_r = values.shape
    out = np.full(n_r, np.nan)
    for i in range(n_r):
        for j in range(n_z - 1):
            ua = values[j, i]
            ub = values[j + 1, i]
            if ua != ub and np.sign(ua) != np.sign(ub):
                out[i] = (j - ua / (ub - ua)) * h_z
                break
    return out


column_crossings_jit = _njit(_column_crossings_loops)


def column_crossings(values, h_z):
    if USE_JIT:
        return column_crossings_jit(np.ascontiguousarray(values, dtype=np.float64), h_z)
    return column_crossings_numpy(values, h_z)


# ---------------------------------------------------------------------------
# Reduced nodal-line flux equation, Dormand-Prince 5(4) in s = ln r
# ---------------------------------------------------------------------------
#
#   dp/ds  = mu / sqrt(1 - (mu/r)^2)
#   dmu/ds = ratio * r^2 * exp(-2 sqrt2 p) - forcing / r

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _flux_rhs(s, p, mu, ratio, forcing):
    r = math.exp(s)
    x = mu / r
    if x >= 1.0 or x <= -1.0:
        return math.nan, math.nan
    dp = mu / math.sqrt(1.0 - x * x)
    arg = 2.0 * s - 2.0 * SQRT2 * p
    if arg < -700.0:
        g = 0.0
    else:
        g = ratio * math.exp(arg)
    return dp, g - forcing / r


def _build_dopri(rhs):
    def dopri(s0, s_end, p0, mu0, ratio, forcing, rtol, atol, max_step,
              out_s, out_p, out_mu):
        # returns (n_points, status, s_stop)
        max_points = out_s.shape[0]
        s = s0
        p = p0
        mu = mu0
        out_s[0] = s
        out_p[0] = p
        out_mu[0] = mu
        n = 1
        k1p, k1m = rhs(s, p, mu, ratio, forcing)
        if k1p != k1p:
            return n, BLOWUP, s
        h = min(max_step, 1e-3 * max(1.0, abs(s_end - s0)))
        h_min = 1e-14 * max(1.0, abs(s_end))
        while s < s_end:
            if n >= max_points:
                return n, MAX_STEPS, s
            if s + h > s_end:
                h = s_end - s
            k2p, k2m = rhs(s + 0.2 * h, p + h * _A21 * k1p, mu + h * _A21 * k1m,
                           ratio, forcing)
            k3p, k3m = rhs(s + 0.3 * h, p + h * (_A31 * k1p + _A32 * k2p),
                           mu + h * (_A31 * k1m + _A32 * k2m), ratio, forcing)
            k4p, k4m = rhs(s + 0.8 * h, p + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p),
                           mu + h * (_A41 * k1m + _A42 * k2m + _A43 * k3m), ratio, forcing)
            k5p, k5m = rhs(s + 8.0 / 9.0 * h,
                           p + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p),
                           mu + h * (_A51 * k1m + _A52 * k2m + _A53 * k3m + _A54 * k4m),
                           ratio, forcing)
            k6p, k6m = rhs(s + h,
                           p + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p
                                    + _A65 * k5p),
                           mu + h * (_A61 * k1m + _A62 * k2m + _A63 * k3m + _A64 * k4m
                                     + _A65 * k5m),
                           ratio, forcing)
            pn = p + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
            mn = mu + h * (_B1 * k1m + _B3 * k3m + _B4 * k4m + _B5 * k5m + _B6 * k6m)
            k7p, k7m = rhs(s + h, pn, mn, ratio, forcing)
            if (k2p != k2p or k3p != k3p or k4p != k4p or k5p != k5p
                    or k6p != k6p or k7p != k7p):
                # a stage crossed mu >= r
                h *= 0.25
                if h < h_min:
                    return n, BLOWUP, s
                continue
            ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
            em = h * (_E1 * k1m + _E3 * k3m + _E4 * k4m + _E5 * k5m + _E6 * k6m + _E7 * k7m)
            sp = atol + rtol * max(abs(p), abs(pn))
            sm = atol + rtol * max(abs(mu), abs(mn))
            err = math.sqrt(0.5 * ((ep / sp) ** 2 + (em / sm) ** 2))
            if err <= 1.0:
                s = s + h
                p = pn
                mu = mn
                k1p = k7p
                k1m = k7m
                out_s[n] = s
                out_p[n] = p
                out_mu[n] = mu
                n += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            else:
                fac = max(0.2, 0.9 * err ** -0.2)
            h = min(max_step, h * fac)
            if h < h_min:
                return n, UNDERFLOW, s
        return n, OK, s

    return dopri


_dopri_flux_py = _build_dopri(_flux_rhs)
if numba is not None:
    _dopri_flux_jit = numba.njit(nogil=True)(_build_dopri(numba.njit(_flux_rhs)))
else:  # pragma: no cover
    _dopri_flux_jit = _dopri_flux_py


def dopri_flux(s0, s_end, p0, mu0, ratio, forcing, rtol, atol, max_step, max_points,
               jit=None):
    """Run the flux integrator; returns trimmed ``(s, p, mu)``, status, stop abscissa."""
    out_s = np.empty(max_points)
    out_p = np.empty(max_points)
    out_mu = np.empty(max_points)
    use = USE_JIT if jit is None else (jit and numba is not None)
    fn = _dopri_flux_jit if use else _dopri_flux_py
    n, status, s_stop = fn(float(s0), float(s_end), float(p0), float(mu0), float(ratio),
                           float(forcing), float(rtol), float(atol), float(max_step),
                           out_s, out_p, out_mu)
    return out_s[:n], out_p[:n], out_mu[:n], int(status), float(s_stop)
