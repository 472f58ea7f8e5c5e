# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: separable correlation, CIEDE2000, Minkowski sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, exp, fabs, fmod, hypot, pow, sin, sqrt, M_PI, INFINITY, isinf

cnp.import_array()

cdef double DEG = 180.0 / M_PI
cdef double RAD = M_PI / 180.0
cdef double POW25_7 = 6103515625.0


cdef inline Py_ssize_t _reflect(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t period = 2 * n
    i = i % period
    if i < 0:
        i += period
    if i >= n:
        i = period - 1 - i
    return i


def correlate1d_reflect(src, kernel, int axis):
    cdef double[:, :, ::1] a
    cdef double[::1] k = np.ascontiguousarray(kernel, dtype=np.float64)
    arr = np.ascontiguousarray(src, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    a = arr
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], c = a.shape[2]
    cdef Py_ssize_t nk = k.shape[0], radius = (nk - 1) // 2
    cdef Py_ssize_t n = h if axis == 0 else w
    # reflected source index for every padded position
    ext_arr = np.empty(n + 2 * radius, dtype=np.intp)
    cdef Py_ssize_t[::1] ext = ext_arr
    cdef Py_ssize_t i
    for i in range(n + 2 * radius):
        ext[i] = _reflect(i - radius, n)
    out_arr = np.zeros((h, w, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, ch, t, j
    cdef double acc, kt
    with nogil:
        if axis == 0:
            # whole rows are contiguous: accumulate row by row
            for y in range(h):
                for t in range(nk):
                    j = ext[y + t]
                    kt = k[t]
                    for x in range(w):
                        for ch in range(c):
                            out[y, x, ch] += kt * a[j, x, ch]
        else:
            for y in range(h):
                for x in range(w):
                    for ch in range(c):
                        acc = 0.0
                        for t in range(nk):
                            acc = acc + k[t] * a[y, ext[x + t], ch]
                        out[y, x, ch] = acc
    if squeeze:
        return out_arr[:, :, 0]
    return out_arr


cdef inline double _hue(double b, double ap) nogil:
    cdef double h
    if ap == 0.0 and b == 0.0:
        return 0.0
    h = fmod(atan2(b, ap) * DEG, 360.0)
    if h < 0.0:
        h += 360.0
    return h


cdef double _de00(double L1, double a1, double b1, double L2, double a2, double b2,
                  double kl, double kc, double kh) nogil:
    cdef double c1 = hypot(a1, b1), c2 = hypot(a2, b2)
    cdef double cb7 = pow((c1 + c2) / 2.0, 7.0)
    cdef double g = 0.5 * (1.0 - sqrt(cb7 / (cb7 + POW25_7)))
    cdef double a1p = (1.0 + g) * a1, a2p = (1.0 + g) * a2
    cdef double c1p = hypot(a1p, b1), c2p = hypot(a2p, b2)
    cdef double h1p = _hue(b1, a1p), h2p = _hue(b2, a2p)
    cdef double dLp = L2 - L1, dCp = c2p - c1p, cprod = c1p * c2p
    cdef double dh = h2p - h1p, hp_bar, hsum = h1p + h2p
    if dh > 180.0:
        dh -= 360.0
    elif dh < -180.0:
        dh += 360.0
    if cprod == 0.0:
        dh = 0.0
    cdef double dHp = 2.0 * sqrt(cprod) * sin(dh * RAD / 2.0)
    cdef double Lp_bar = (L1 + L2) / 2.0, Cp_bar = (c1p + c2p) / 2.0
    if cprod == 0.0:
        hp_bar = hsum
    elif fabs(h1p - h2p) <= 180.0:
        hp_bar = hsum / 2.0
    elif hsum < 360.0:
        hp_bar = (hsum + 360.0) / 2.0
    else:
        hp_bar = (hsum - 360.0) / 2.0
    cdef double t = (1.0 - 0.17 * cos((hp_bar - 30.0) * RAD)
                     + 0.24 * cos(2.0 * hp_bar * RAD)
                     + 0.32 * cos((3.0 * hp_bar + 6.0) * RAD)
                     - 0.20 * cos((4.0 * hp_bar - 63.0) * RAD))
    cdef double q = (hp_bar - 275.0) / 25.0
    cdef double d_theta = 30.0 * exp(-q * q)
    cdef double cp7 = pow(Cp_bar, 7.0)
    cdef double rc = 2.0 * sqrt(cp7 / (cp7 + POW25_7))
    cdef double lm50 = (Lp_bar - 50.0) * (Lp_bar - 50.0)
    cdef double sl = 1.0 + 0.015 * lm50 / sqrt(20.0 + lm50)
    cdef double sc = 1.0 + 0.045 * Cp_bar
    cdef double sh = 1.0 + 0.015 * Cp_bar * t
    cdef double rt = -sin(2.0 * d_theta * RAD) * rc
    cdef double tl = dLp / (kl * sl), tc = dCp / (kc * sc), th = dHp / (kh * sh)
    return sqrt(tl * tl + tc * tc + th * th + rt * tc * th)


def ciede2000(lab1, lab2, double kl=1.0, double kc=1.0, double kh=1.0):
    x1, x2 = np.broadcast_arrays(np.asarray(lab1, dtype=np.float64),
                                 np.asarray(lab2, dtype=np.float64))
    shape = x1.shape[:-1]
    cdef double[:, ::1] p = np.ascontiguousarray(x1.reshape(-1, 3))
    cdef double[:, ::1] q = np.ascontiguousarray(x2.reshape(-1, 3))
    cdef Py_ssize_t n = p.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = _de00(p[i, 0], p[i, 1], p[i, 2], q[i, 0], q[i, 1], q[i, 2], kl, kc, kh)
    return out_arr.reshape(shape)


cdef inline double _ipow(double x, int e) nogil:
    cdef double r = 1.0
    while e:
        if e & 1:
            r *= x
        x *= x
        e >>= 1
    return r


def power_sums(values, weights, double p):
    """Per-channel ``sum(w * |v|**p)`` with Neumaier compensation, row-major
    order; ``p = inf`` gives the weighted max."""
    cdef double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef bint has_w = weights is not None
    cdef double[::1] w
    if has_w:
        w = np.ascontiguousarray(weights, dtype=np.float64)
    else:
        w = np.ones(1, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], nc = v.shape[1], i, ch
    out_arr = np.zeros(nc, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double s, comp, term, tmp, wi
    cdef bint is_max = isinf(p)
    cdef bint is_int = (not is_max) and p == <double>(<int>p) and p <= 64
    cdef int ip = <int>p if is_int else 0
    with nogil:
        for ch in range(nc):
            s = 0.0
            comp = 0.0
            for i in range(n):
                wi = w[i] if has_w else 1.0
                if is_max:
                    term = fabs(v[i, ch]) * wi
                    if term > s:
                        s = term
                    continue
                if is_int:
                    term = _ipow(fabs(v[i, ch]), ip) * wi
                else:
                    term = pow(fabs(v[i, ch]), p) * wi
                tmp = s + term
                if fabs(s) >= fabs(term):
                    comp += (s - tmp) + term
                else:
                    comp += (term - tmp) + s
                s = tmp
            out[ch] = s + comp
    return out_arr
