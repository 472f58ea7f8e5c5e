"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, or when
``CCEVAL_PURE_PYTHON=1`` is set.  Signatures match ``_kernels.pyx``.
"""

import numpy as np


def reflect_index(idx, n):
    """Map arbitrary integer offsets onto ``[0, n)`` by half-sample symmetric
    reflection (``d c b a | a b c d | d c b a``), repeated as needed."""
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


def correlate1d_reflect(src, kernel, axis):
    src = np.ascontiguousarray(src, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    radius = (kernel.shape[0] - 1) // 2
    n = src.shape[axis]
    out = np.zeros_like(src)
    base = np.arange(n)
    for k in range(kernel.shape[0]):
        idx = reflect_index(base + (k - radius), n)
        out += kernel[k] * np.take(src, idx, axis=axis)
    return out


def ciede2000(lab1, lab2, kl=1.0, kc=1.0, kh=1.0):
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    L2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    c1 = np.hypot(a1, b1)
    c2 = np.hypot(a2, b2)
    c_bar7 = ((c1 + c2) / 2.0) ** 7
    g = 0.5 * (1.0 - np.sqrt(c_bar7 / (c_bar7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)
    h1p = np.where((a1p == 0) & (b1 == 0), 0.0, np.degrees(np.arctan2(b1, a1p)) % 360.0)
    h2p = np.where((a2p == 0) & (b2 == 0), 0.0, np.degrees(np.arctan2(b2, a2p)) % 360.0)

    dLp = L2 - L1
    dCp = c2p - c1p
    cprod = c1p * c2p
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, dh)
    dh = np.where(dh < -180.0, dh + 360.0, dh)
    dh = np.where(cprod == 0, 0.0, dh)
    dHp = 2.0 * np.sqrt(cprod) * np.sin(np.radians(dh) / 2.0)

    Lp_bar = (L1 + L2) / 2.0
    Cp_bar = (c1p + c2p) / 2.0
    hsum = h1p + h2p
    hp_bar = np.where(
        np.abs(h1p - h2p) <= 180.0,
        hsum / 2.0,
        np.where(hsum < 360.0, (hsum + 360.0) / 2.0, (hsum - 360.0) / 2.0),
    )
    hp_bar = np.where(cprod == 0, hsum, hp_bar)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(hp_bar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * hp_bar))
        + 0.32 * np.cos(np.radians(3.0 * hp_bar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * hp_bar - 63.0))
    )
    d_theta = 30.0 * np.exp(-(((hp_bar - 275.0) / 25.0) ** 2))
    cp_bar7 = Cp_bar**7
    rc = 2.0 * np.sqrt(cp_bar7 / (cp_bar7 + 25.0**7))
    lm50 = (Lp_bar - 50.0) ** 2
    sl = 1.0 + 0.015 * lm50 / np.sqrt(20.0 + lm50)
    sc = 1.0 + 0.045 * Cp_bar
    sh = 1.0 + 0.015 * Cp_bar * t
    rt = -np.sin(np.radians(2.0 * d_theta)) * rc

    tl = dLp / (kl * sl)
    tc = dCp / (kc * sc)
    th = dHp / (kh * sh)
    return np.sqrt(tl * tl + tc * tc + th * th + rt * tc * th)


def power_sums(values, weights, p):
    """Per-channel ``sum(w * |v|**p)``; ``p = inf`` gives the weighted max."""
    values = np.abs(np.asarray(values, dtype=np.float64))
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)[:, None]
    if np.isinf(p):
        if weights is not None:
            values = values * weights
        return values.max(axis=0)
    powered = values if p == 1.0 else values**p
    if weights is not None:
        powered = powered * weights
    return powered.sum(axis=0)
