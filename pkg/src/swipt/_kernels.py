"""Compiled per-sample integrator for the rectified-path conditional density.

The density of the rectified observation given the input amplitude is a
Rician law (in the envelope ``t = sqrt(u)``) blurred by Gaussian rectifier
noise. Each sample gets its own adaptive Gauss-Kronrod (G7/K15) integral
over the envelope, restricted to where both factors are non-negligible.
Everything here works on scaled quantities and returns natural logs.
"""

import math

import numpy as np
from numba import njit

# Chebyshev coefficients for exp(-x) I0(x) on [0, 8] and (8, inf) (Cephes)
_I0E_A = np.array(
    [
        -4.4153416464793395e-18,
        3.3307945188222384e-17,
        -2.431279846547955e-16,
        1.715391285555133e-15,
        -1.1685332877993451e-14,
        7.676185498604936e-14,
        -4.856446783111929e-13,
        2.95505266312964e-12,
        -1.726826291441556e-11,
        9.675809035373237e-11,
        -5.189795601635263e-10,
        2.6598237246823866e-09,
        -1.300025009986248e-08,
        6.046995022541919e-08,
        -2.670793853940612e-07,
        1.1173875391201037e-06,
        -4.4167383584587505e-06,
        1.6448448070728896e-05,
        -5.754195010082104e-05,
        0.00018850288509584165,
        -0.0005763755745385824,
        0.0016394756169413357,
        -0.004324309995050576,
        0.010546460394594998,
        -0.02373741480589947,
        0.04930528423967071,
        -0.09490109704804764,
        0.17162090152220877,
        -0.3046826723431984,
        0.6767952744094761,
    ]
)

_I0E_B = np.array(
    [
        -7.233180487874754e-18,
        -4.830504485944182e-18,
        4.46562142029676e-17,
        3.461222867697461e-17,
        -2.8276239805165836e-16,
        -3.425485619677219e-16,
        1.7725601330565263e-15,
        3.8116806693526224e-15,
        -9.554846698828307e-15,
        -4.150569347287222e-14,
        1.54008621752141e-14,
        3.8527783827421426e-13,
        7.180124451383666e-13,
        -1.7941785315068062e-12,
        -1.3215811840447713e-11,
        -3.1499165279632416e-11,
        1.1889147107846439e-11,
        4.94060238822497e-10,
        3.3962320257083865e-09,
        2.266668990498178e-08,
        2.0489185894690638e-07,
        2.8913705208347567e-06,
        6.889758346916825e-05,
        0.0033691164782556943,
        0.8044904110141088,
    ]
)

# asymptotic series coefficients of sqrt(2 pi z) exp(-z) I0(z) in powers of 1/z
_I0E_ASYM = np.array(
    [1.0, 0.125, 0.0703125, 0.0732421875, 0.112152099609375,
     0.22710800170898438, 0.5725014209747314, 1.7277275025844574]
)

# Kronrod 15-point abscissae/weights and the embedded Gauss 7-point weights
_XGK = np.array(
    [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
     0.207784955007898467600689403773245, 0.0]
)
_WGK = np.array(
    [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
     0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
)
_WG = np.array(
    [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
     0.381830050505118944950369775488975, 0.417959183673469387755102040816327]
)

# Gauss-Hermite rule with the Gaussian weight folded back into the weights
_GH_Y, _GH_W = np.polynomial.hermite.hermgauss(20)
_GH_W = _GH_W * np.exp(_GH_Y**2)
_GH_MAX_SKEW = 0.2  # largest scaled third derivative accepted by the fast path
_GH_MIN_OFFSET = 9.0  # peak must sit this many widths above the origin

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TAIL = 10.0  # half-width of the integration window in standard deviations
_MAX_PANELS = 200
_FOCUS = 8.0  # focused half-width in product-Gaussian standard deviations
_NEGLIGIBLE = -32.0  # log of the relative integrand size treated as zero

OK = 0
NOT_CONVERGED = 1


@njit(cache=True)
def _chbevl(x, coef):
    b0 = coef[0]
    b1 = 0.0
    b2 = 0.0
    for i in range(1, coef.shape[0]):
        b2 = b1
        b1 = b0
        b0 = x * b1 - b2 + coef[i]
    return 0.5 * (b0 - b2)


@njit(cache=True)
def i0e(z):
    """exp(-|z|) I0(z)."""
    z = abs(z)
    if z <= 8.0:
        return _chbevl(0.5 * z - 2.0, _I0E_A)
    if z <= 60.0:
        return _chbevl(32.0 / z - 2.0, _I0E_B) / math.sqrt(z)
    inv = 1.0 / z
    acc = 0.0
    for k in range(_I0E_ASYM.shape[0] - 1, -1, -1):
        acc = acc * inv + _I0E_ASYM[k]
    return acc / math.sqrt(2.0 * math.pi * z)


@njit(cache=True)
def _exponent(t, x, c, s2, r2):
    d = t - c
    e = x - t * t
    return -d * d / s2 - 0.5 * e * e / r2


@njit(cache=True)
def _integrand(t, x, c, s2, r2, shift):
    return math.exp(_exponent(t, x, c, s2, r2) - shift) * i0e(2.0 * c * t / s2) * t


@njit(cache=True)
def _gk15(a, b, x, c, s2, r2, shift, fv):
    """Kronrod estimate and QUADPACK-style error estimate on [a, b]; ``fv`` is scratch."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    fv[7] = _integrand(mid, x, c, s2, r2, shift)
    resk = fv[7] * _WGK[7]
    resg = fv[7] * _WG[3]
    for j in range(7):
        dx = half * _XGK[j]
        f1 = _integrand(mid - dx, x, c, s2, r2, shift)
        f2 = _integrand(mid + dx, x, c, s2, r2, shift)
        fv[j] = f1
        fv[14 - j] = f2
        resk += _WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += _WG[j // 2] * (f1 + f2)
    reskh = 0.5 * resk
    resasc = _WGK[7] * abs(fv[7] - reskh)
    for j in range(7):
        resasc += _WGK[j] * (abs(fv[j] - reskh) + abs(fv[14 - j] - reskh))
    resasc *= abs(half)
    err = abs((resk - resg) * half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return resk * half, err


@njit(cache=True)
def _log_density_gh(x, c, s2, r2, guess):
    """Laplace-centred Gauss-Hermite estimate; returns (log integral, ok).

    Only used when the log-integrand is close to quadratic over the peak;
    ``ok`` is False otherwise and the caller falls back to adaptive quadrature.
    """
    t = guess
    for _ in range(20):
        d1 = -2.0 * (t - c) / s2 + 2.0 * t * (x - t * t) / r2
        d2 = -2.0 / s2 + (2.0 * x - 6.0 * t * t) / r2
        if not d2 < 0.0:
            return 0.0, False
        step = d1 / d2
        t -= step
        if abs(step) <= 1e-12 * (1.0 + abs(t)):
            break
    else:
        return 0.0, False
    d2 = -2.0 / s2 + (2.0 * x - 6.0 * t * t) / r2
    if not d2 < 0.0:
        return 0.0, False
    sd = 1.0 / math.sqrt(-d2)
    if t < _GH_MIN_OFFSET * sd or 12.0 * t / r2 * sd**3 > _GH_MAX_SKEW:
        return 0.0, False
    shift = _exponent(t, x, c, s2, r2)
    scale = math.sqrt(2.0) * sd
    acc = 0.0
    for k in range(_GH_Y.shape[0]):
        acc += _GH_W[k] * _integrand(t + scale * _GH_Y[k], x, c, s2, r2, shift)
    return shift + math.log(acc * scale), True


@njit(cache=True)
def _log_density_one(x, c, s2, r2, rel_tol, work):
    """log p(x | c) for one sample; returns (value, status). ``work`` is scratch."""
    a_arr = work[0]
    b_arr = work[1]
    val = work[2]
    err = work[3]
    fv = work[4]
    edges = work[5]
    s = math.sqrt(s2)
    r = math.sqrt(r2)
    # envelope supports of the Rician factor and of the Gaussian factor
    lo_r = max(0.0, c - _TAIL * s)
    hi_r = c + _TAIL * s
    lo_g = math.sqrt(max(0.0, x - _TAIL * r))
    hi_g = math.sqrt(max(0.0, x + _TAIL * r))
    lo = max(lo_r, lo_g)
    hi = min(hi_r, hi_g)
    if not lo < hi:
        lo = min(lo_r, lo_g)
        hi = max(hi_r, hi_g)

    # product-Gaussian approximation of the peak, used to focus the window
    tg = math.sqrt(max(x, r))
    w_r = 2.0 / s2
    w_g = 4.0 * tg * tg / r2
    guess = min(max((w_r * c + w_g * tg) / (w_r + w_g), lo), hi)
    width = _FOCUS / math.sqrt(w_r + w_g)
    norm = math.log(2.0 / s2) - _LOG_SQRT_2PI - math.log(r)
    value, ok = _log_density_gh(x, c, s2, r2, guess)
    if ok:
        return value + norm, OK

    shift = _exponent(guess, x, c, s2, r2)
    step = (hi - lo) / 16.0
    for k in range(17):
        shift = max(shift, _exponent(lo + k * step, x, c, s2, r2))
    # widen until both window edges are negligible relative to the peak
    while True:
        flo = max(lo, guess - width)
        fhi = min(hi, guess + width)
        ok_lo = flo == lo or _exponent(flo, x, c, s2, r2) - shift < _NEGLIGIBLE
        ok_hi = fhi == hi or _exponent(fhi, x, c, s2, r2) - shift < _NEGLIGIBLE
        if ok_lo and ok_hi:
            break
        width *= 2.0
    lo = flo
    hi = fhi

    # start from two panels split at the peak
    edges[0] = lo
    edges[1] = guess
    edges[2] = hi
    n = 0
    total = 0.0
    total_err = 0.0
    for k in range(2):
        if not edges[k] < edges[k + 1]:
            continue
        v, e = _gk15(edges[k], edges[k + 1], x, c, s2, r2, shift, fv)
        a_arr[n] = edges[k]
        b_arr[n] = edges[k + 1]
        val[n] = v
        err[n] = e
        total += v
        total_err += e
        n += 1

    status = OK
    while total_err > rel_tol * abs(total) and total_err > 1e-300:
        if n + 1 >= _MAX_PANELS:
            status = NOT_CONVERGED
            break
        worst = 0
        for k in range(1, n):
            if err[k] > err[worst]:
                worst = k
        a = a_arr[worst]
        b = b_arr[worst]
        m = 0.5 * (a + b)
        v1, e1 = _gk15(a, m, x, c, s2, r2, shift, fv)
        v2, e2 = _gk15(m, b, x, c, s2, r2, shift, fv)
        total += v1 + v2 - val[worst]
        total_err += e1 + e2 - err[worst]
        b_arr[worst] = m
        val[worst] = v1
        err[worst] = e1
        a_arr[n] = m
        b_arr[n] = b
        val[n] = v2
        err[n] = e2
        n += 1
        # refresh the running sums now and then to stop drift
        if n % 32 == 0:
            total = 0.0
            total_err = 0.0
            for k in range(n):
                total += val[k]
                total_err += err[k]

    if total <= 0.0:
        return -np.inf, status
    return shift + math.log(total) + norm, status


@njit(cache=True)
def log_rician(x, c, s2):
    """log density of |c + n|^2 at x, n ~ CN(0, s2)."""
    if x < 0.0:
        return -np.inf
    t = math.sqrt(x)
    d = t - c
    return -math.log(s2) - d * d / s2 + math.log(i0e(2.0 * c * t / s2))


@njit(cache=True)
def log_conditional(x, c, s2, r2, rel_tol):
    """Vectorised log p(x_i | c_i) with antenna-noise variance ``s2`` and rectifier variance ``r2``.

    Returns the log densities and a per-sample status code (0 = converged).
    """
    n = x.shape[0]
    out = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    work = np.empty((6, _MAX_PANELS))
    for i in range(n):
        if r2 == 0.0:
            out[i] = log_rician(x[i], c[i], s2)
        elif s2 == 0.0:
            d = x[i] - c[i] * c[i]
            out[i] = -0.5 * d * d / r2 - _LOG_SQRT_2PI - 0.5 * math.log(r2)
        else:
            out[i], status[i] = _log_density_one(
x[i], c[i], s2, r2, rel_tol, work)
    return out, status
