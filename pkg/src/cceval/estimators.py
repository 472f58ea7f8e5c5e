"""Classical illuminant estimation in one Minkowski / Gaussian-derivative
framework, diagonal (von Kries) correction and scene-mean chromaticity.

Every method computes, per channel ``c``::

    e_c = ( sum_x w(x) * |D^n f_{sigma,c}(x)|^p ) ^ (1/p)

and returns the unit-norm direction of ``e``.  ``p = inf`` is a true
channel-wise maximum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .colorspace import D65, WhitePoint, linear_to_lab
from .errors import AllZeroImage, DegenerateEstimate, ZeroChannelIlluminant

SQRT3 = math.sqrt(3.0)


class Method(str, enum.Enum):
    GRAY_WORLD = "gray-world"
    WHITE_PATCH = "white-patch"
    SHADES_OF_GRAY = "shades-of-gray"
    GRAY_EDGE = "gray-edge"
    WEIGHTED_GRAY_EDGE = "weighted-gray-edge"


@dataclass(frozen=True)
class EstimatorParams:
    method: Method
    order: int = 0
    p: float = 1.0
    sigma: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "p", float(self.p))
        m, n, p, s = self.method, self.order, self.p, self.sigma
        if p < 1 or math.isnan(p):
            raise ValueError(f"minkowski p must be >= 1 or inf, got {p}")
        if s < 0 or self.kappa < 0:
            raise ValueError("sigma and kappa must be non-negative")
        if n < 0 or n > 2:
            raise ValueError(f"derivative order must be 0, 1 or 2, got {n}")
        if m is Method.GRAY_WORLD and (n, p, s) != (0, 1.0, 0):
            raise ValueError("gray-world requires order=0, p=1, sigma=0")
        if m is Method.WHITE_PATCH and (n, p, s) != (0, math.inf, 0):
            raise ValueError("white-patch requires order=0, p=inf, sigma=0")
        if m is Method.SHADES_OF_GRAY and n != 0:
            raise ValueError("shades-of-gray requires order=0")
        if m in (Method.GRAY_EDGE, Method.WEIGHTED_GRAY_EDGE):
            if n < 1:
                raise ValueError(f"{m.value} requires order >= 1")
            if s <= 0:
                raise ValueError(f"{m.value} requires sigma > 0")

    @classmethod
    def gray_world(cls):
        return cls(Method.GRAY_WORLD, 0, 1.0, 0.0)

    @classmethod
    def white_patch(cls):
        return cls(Method.WHITE_PATCH, 0, math.inf, 0.0)

    @classmethod
    def shades_of_gray(cls, p=6.0, sigma=0.0):
        return cls(Method.SHADES_OF_GRAY, 0, p, sigma)

    @classmethod
    def gray_edge(cls, order=1, p=1.0, sigma=2.0):
        return cls(Method.GRAY_EDGE, order, p, sigma)

    @classmethod
    def weighted_gray_edge(cls, order=1, p=1.0, sigma=2.0, kappa=1.0):
        return cls(Method.WEIGHTED_GRAY_EDGE, order, p, sigma, kappa)

    @classmethod
    def for_method(cls, method, **overrides):
        """Defaults for ``method`` with any non-None keyword overrides."""
        factory = {
            Method.GRAY_WORLD: cls.gray_world,
            Method.WHITE_PATCH: cls.white_patch,
            Method.SHADES_OF_GRAY: cls.shades_of_gray,
            Method.GRAY_EDGE: cls.gray_edge,
            Method.WEIGHTED_GRAY_EDGE: cls.weighted_gray_edge,
        }[Method(method)]
        base = factory()
        kw = {k: v for k, v in overrides.items() if v is not None}
        if not kw:
            return base
        fields = {"method": base.method, "order": base.order, "p": base.p,
                  "sigma": base.sigma, "kappa": base.kappa}
        fields.update(kw)
        return cls(**fields)


#: Estimates smaller than this fraction of the peak pixel count as zero.
DEGENERATE_RTOL = 1e-10


def gaussian_kernel(sigma: float, order: int = 0) -> np.ndarray:
    """1-D Gaussian (derivative) kernel truncated at ``ceil(3 sigma)``.

    Order 0 sums to 1; order 1 gives exact unit response to a unit ramp;
    order 2 has zero mean and unit response to ``x**2 / 2``.
    """
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    if order == 0:
        return g / g.sum()
    if order == 1:
        k = -x * g
        # correlation with a ramp x must give 1
        return k / np.sum(k * x)
    if order == 2:
        k = (x**2 / sigma**4 - 1.0 / sigma**2) * g
        k = k - k.mean()
        return k / np.sum(0.5 * x * x * k)
    raise ValueError(f"unsupported derivative order {order}")


def gaussian_derivative(channel: np.ndarray, sigma: float, order_y: int, order_x: int) -> np.ndarray:
    """Separable Gaussian derivative with reflective boundaries."""
    out = kernels.correlate1d_reflect(channel, gaussian_kernel(sigma, order_y), 0)
    return kernels.correlate1d_reflect(out, gaussian_kernel(sigma, order_x), 1)


def derivative_magnitude(img: np.ndarray, order: int, sigma: float) -> np.ndarray:
    """Per-channel ``|D^n f_sigma|`` for an (H, W, 3) image."""
    img = np.asarray(img, dtype=np.float64)
    if order == 0:
        if sigma == 0:
            return np.abs(img)
        return np.abs(gaussian_derivative(img, sigma, 0, 0))
    if order == 1:
        fx = gaussian_derivative(img, sigma, 0, 1)
        fy = gaussian_derivative(img, sigma, 1, 0)
        return np.sqrt(fx * fx + fy * fy)
    fxx = gaussian_derivative(img, sigma, 0, 2)
    fyy = gaussian_derivative(img, sigma, 2, 0)
    fxy = gaussian_derivative(img, sigma, 1, 1)
    return np.sqrt(fxx * fxx + 4.0 * fxy * fxy + fyy * fyy)


def _as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2 and img.shape[1] == 3:
        img = img[None, :, :]
    if img.ndim != 3 or img.shape[2] != 3 or img.size == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {img.shape}")
    return img


def estimate_illuminant(img, params: EstimatorParams | None = None, mask=None) -> np.ndarray:
    """Estimate the illuminant colour of a linear-RGB image.

    Parameters
    ----------
    img : array_like, shape (H, W, 3)
        Linear RGB image.  An (N, 3) pixel list is treated as a 1 x N image.
    params : EstimatorParams, optional
        Defaults to Gray World.
    mask : array_like of bool, shape (H, W), optional
        Pixels contributing to the statistic (derivatives still use the
        full image).

    Returns
    -------
    ndarray, shape (3,)
        Unit-norm, non-negative illuminant direction.
    """
    params = params or EstimatorParams.gray_world()
    img = _as_image(img)
    if not np.any(img):
        raise AllZeroImage("every pixel of the image is zero")

    mag = derivative_magnitude(img, params.order, params.sigma)
    weights = None
    if params.method is Method.WEIGHTED_GRAY_EDGE and params.kappa > 0:
        strength = np.sqrt(np.sum(mag * mag, axis=2))
        w = strength**params.kappa
        total = w.mean()
        if total > 0:
            weights = w / total
    values = mag.reshape(-1, 3)
    if weights is not None:
        weights = weights.reshape(-1)
    if mask is not None:
        keep = np.asarray(mask, dtype=bool).reshape(-1)
        values = values[keep]
        if weights is not None:
            weights = weights[keep]
    if values.shape[0] == 0:
        raise DegenerateEstimate("mask selects no pixels")
    values = np.ascontiguousarray(values)

    sums = kernels.power_sums(values, weights, params.p)
    if math.isinf(params.p):
        e = sums
    else:
        # divide by N before the root so magnitudes stay O(pixel values)
        e = (sums / values.shape[0]) ** (1.0 / params.p)
    norm = math.sqrt(float(np.dot(e, e)))
    # derivatives of a flat image leave rounding residue, not exact zeros
    floor = DEGENERATE_RTOL * float(np.max(np.abs(img)))
    if not np.isfinite(norm) or norm <= floor:
        raise DegenerateEstimate(f"illuminant estimate has zero norm ({params.method.value})")
    return e / norm


def normalize_illuminant(e) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(e))
    if n == 0 or not np.isfinite(n):
        raise ZeroChannelIlluminant("illuminant has zero norm")
    return e / n


def von_kries_correct(img, e) -> np.ndarray:
    """Diagonal white balance: channel ``c`` divided by ``sqrt(3) * e_c``.

    ``e`` is normalised first, so any positive scaling of the illuminant
    gives the same result and ``(1, 1, 1)`` is the identity.
    """
    e = normalize_illuminant(e)
    if np.any(e <= 0):
        raise ZeroChannelIlluminant(f"illuminant has a non-positive channel: {tuple(e)}")
    img = np.asarray(img, dtype=np.float64)
    if e[0] == e[1] == e[2]:
        return img.copy()
    return img / (e * SQRT3)


def mean_chromaticity(img, wp: WhitePoint = D65) -> np.ndarray:
    """CIELAB of the per-channel mean linear RGB."""
    px = np.asarray(img, dtype=np.float64).reshape(-1, 3)
    if px.shape[0] == 0:
        raise ValueError("empty image")
    return linear_to_lab(px.mean(axis=0), wp)


def angular_error(u, v) -> float:
    """Angle in degrees between two RGB directions."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))
