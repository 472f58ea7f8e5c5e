"""Colour-space conversions (sRGB, linear RGB, XYZ, CIELAB) and CIEDE2000.

All functions are vectorised over leading axes; the last axis holds the
three channels.  Values are float64 throughout.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import OutOfGamut


class WhitePoint(NamedTuple):
    Xn: float
    Yn: float
    Zn: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


#: CIE D65, 2 degree observer.
D65 = WhitePoint(0.95047, 1.0, 1.08883)

_SRGB_PRIMARIES_XY = np.array([[0.64, 0.33], [0.30, 0.60], [0.15, 0.06]])

_LAB_DELTA = 6.0 / 29.0
_LAB_EPS = _LAB_DELTA**3


def white_point(value) -> WhitePoint:
    """Coerce a 3-sequence into a validated :class:`WhitePoint`."""
    wp = WhitePoint(*(float(v) for v in value))
    if not all(np.isfinite(wp)) or min(wp) <= 0:
        raise ValueError(f"white point components must be positive, got {tuple(wp)}")
    return wp


def _rgb_to_xyz_matrix(wp: WhitePoint) -> np.ndarray:
    # Columns scaled so that RGB (1, 1, 1) lands exactly on the white point.
    xy = _SRGB_PRIMARIES_XY
    prim = np.stack([xy[:, 0] / xy[:, 1], np.ones(3), (1 - xy[:, 0] - xy[:, 1]) / xy[:, 1]])
    scale = np.linalg.solve(prim, wp.as_array())
    return prim * scale


RGB_TO_XYZ = _rgb_to_xyz_matrix(D65)
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)


def srgb_to_linear(c) -> np.ndarray:
    """Decode sRGB-encoded values in [0, 1] to linear intensities."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c) -> np.ndarray:
    """Encode linear intensities with the sRGB transfer curve.

    The threshold ``0.04045 / 12.92`` (rather than the rounded 0.0031308)
    keeps the two pieces an exact inverse of :func:`srgb_to_linear`.
    """
    c = np.asarray(c, dtype=np.float64)
    lo = c <= 0.04045 / 12.92
    safe = np.where(lo, 1.0, c)
    return np.where(lo, c * 12.92, 1.055 * safe ** (1.0 / 2.4) - 0.055)


def linear_to_xyz(c) -> np.ndarray:
    return np.asarray(c, dtype=np.float64) @ RGB_TO_XYZ.T


def xyz_to_linear(c) -> np.ndarray:
    return np.asarray(c, dtype=np.float64) @ XYZ_TO_RGB.T


def _f(t):
    return np.where(t > _LAB_EPS, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _finv(t):
    return np.where(t > _LAB_DELTA, t**3, 3 * _LAB_DELTA**2 * (t - 4.0 / 29.0))


def xyz_to_lab(xyz, wp: WhitePoint = D65) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=np.float64)
    f = _f(xyz / np.asarray(wp, dtype=np.float64))
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_xyz(lab, wp: WhitePoint = D65) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    return _finv(np.stack([fx, fy, fz], axis=-1)) * np.asarray(wp, dtype=np.float64)


def linear_to_lab(c, wp: WhitePoint = D65) -> np.ndarray:
    """Linear sRGB-primaries RGB to CIELAB relative to ``wp``."""
    return xyz_to_lab(linear_to_xyz(c), wp)


def lab_to_linear(lab, wp: WhitePoint = D65, *, strict: bool = False, atol: float = 1e-12) -> np.ndarray:
    """CIELAB back to linear RGB.

    Negative channels mean the colour is outside the sRGB gamut.  They are
    returned unchanged unless ``strict`` is set, in which case
    :class:`~cceval.errors.OutOfGamut` is raised naming the first offending
    channel.
    """
    rgb = xyz_to_linear(lab_to_xyz(lab, wp))
    if strict:
        check_gamut(rgb, atol=atol)
    return rgb


def check_gamut(rgb, *, upper: float | None = None, atol: float = 1e-12, where=None):
    """Raise OutOfGamut if any channel is below 0 (or above ``upper``)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    names = "rgb"
    bad = rgb < -atol
    if upper is not None:
        bad |= rgb > upper + atol
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        ch = names[idx[-1]]
        val = rgb[tuple(idx)]
        if where is not None and rgb.ndim > 1:
            where = f"{where}[{', '.join(str(int(i)) for i in idx[:-1])}]"
        loc = f" at {where}" if where is not None else ""
        bound = f"[0, {upper}]" if upper is not None else ">= 0"
        raise OutOfGamut(f"channel {ch}={val:.6g} outside {bound}{loc}", channel=ch, where=where)
    return rgb


def in_gamut(rgb, *, upper: float | None = None, atol: float = 1e-12) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    ok = np.all(rgb >= -atol, axis=-1)
    if upper is not None:
        ok &= np.all(rgb <= upper + atol, axis=-1)
    return ok


def srgb_to_lab(c, wp: WhitePoint = D65) -> np.ndarray:
    return linear_to_lab(srgb_to_linear(c), wp)


def chroma(lab) -> np.ndarray:
    """Distance from the achromatic axis: ``hypot(a, b)``."""
    lab = np.asarray(lab, dtype=np.float64)
    return np.hypot(lab[..., 1], lab[..., 2])


def ciede2000(x, y, kl: float = 1.0, kc: float = 1.0, kh: float = 1.0):
    """CIEDE2000 colour difference between broadcastable Lab arrays.

    Returns a float for single colours, otherwise an array over the
    broadcast leading shape.
    """
    d = kernels.ciede2000(x, y, kl, kc, kh)
    return float(d) if np.ndim(d) == 0 else d
