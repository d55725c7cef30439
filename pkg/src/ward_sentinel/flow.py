"""Dense optical flow via local polynomial expansion, plus per-ROI motion.

Each image is approximated around every pixel by a quadratic polynomial
f(u) ~ u'Au + b'u + c fitted by Gaussian-weighted least squares over a
poly_n x poly_n neighborhood. Under a local translation d the linear
coefficients of the two frames satisfy A d = -(b2 - b1)/2, which is solved
per pixel in least squares over a winsize box, iterated and propagated
coarse-to-fine through an image pyramid.

Displacements are in pixels per frame; positive dx points right, positive
dy points down, and the field maps the previous frame onto the current one
(cur(x + d(x)) ~ prev(x)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyMask
from .imageops import resize_bilinear, to_grayscale
from .model import FLOW_DIMS, FlowParams, Frame

from .geometry import RoiMask

MIN_PYRAMID_DIM = 16
# Keeps the 2x2 normal equations solvable on textureless patches; negligible
# against gradient energy at 0..255 intensity scale.
SOLVE_REGULARIZATION = 1e-3


@dataclass(frozen=True)
class FlowField:
    width: int
    height: int
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        for plane in (self.dx, self.dy):
            if plane.shape != (self.height, self.width):
                raise ValueError("flow plane shape must be (height, width)")
            if not np.all(np.isfinite(plane)):
                raise ValueError("flow planes must be finite")

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx, self.dy)


@dataclass(frozen=True)
class MotionRecord:
    """Per-second average motion magnitude for each available ROI."""

    session_id: str
    ts: int
    magnitudes: Mapping[str, float]

    def __post_init__(self):
        mags = {k: float(v) for k, v in dict(self.magnitudes).items()}
        for k, v in mags.items():
            if v < 0:
                raise ValueError(f"motion magnitude for {k} must be >= 0")
        object.__setattr__(self, "magnitudes", mags)


@dataclass(frozen=True)
class PolyExpansion:
    """Per-pixel quadratic coefficients f ~ c + bx*x + by*y + axx*x^2 + ayy*y^2 + axy*x*y."""

    c: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    axx: np.ndarray
    ayy: np.ndarray
    axy: np.ndarray


def to_grayscale_downsampled(frame: Frame) -> np.ndarray:
    """BT.601 luma downsampled bilinearly to the flow analysis resolution."""
    gray = to_grayscale(frame.pixels)
    w, h = FLOW_DIMS
    return resize_bilinear(gray, w, h)


def polynomial_expansion(gray: np.ndarray, poly_n: int, poly_sigma: float) -> PolyExpansion:
    """Gaussian-weighted quadratic fit around every pixel.

    poly_n is the (odd) neighborhood width; borders use replicate padding.
    The normal-equation matrix is constant across pixels, so the fit reduces
    to six separable correlations followed by a fixed linear combination.
    """
    gray = np.asarray(gray, dtype=np.float64)
    n = poly_n // 2
    t = np.arange(-n, n + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * poly_sigma * poly_sigma))
    g /= g.sum()
    tg = t * g
    ttg = t * t * g

    def corr(img, wx, wy):
        tmp = ndimage.correlate1d(img, wx, axis=1, mode="nearest")
        return ndimage.correlate1d(tmp, wy, axis=0, mode="nearest")

    p1 = corr(gray, g, g)
    px = corr(gray, tg, g)
    py = corr(gray, g, tg)
    pxx = corr(gray, ttg, g)
    pyy = corr(gray, g, ttg)
    pxy = corr(gray, tg, tg)

    m2 = float(np.sum(ttg))
    m4 = float(np.sum(t * t * ttg))
    m22 = m2 * m2
    # (c, axx, ayy) couple through the shared even moments.
    coupling = np.linalg.inv(
        np.array([[1.0, m2, m2], [m2, m4, m22], [m2, m22, m4]])
    )
    c = coupling[0, 0] * p1 + coupling[0, 1] * pxx + coupling[0, 2] * pyy
    axx = coupling[1, 0] * p1 + coupling[1, 1] * pxx + coupling[1, 2] * pyy
    ayy = coupling[2, 0] * p1 + coupling[2, 1] * pxx + coupling[2, 2] * pyy
    return PolyExpansion(c=c, bx=px / m2, by=py / m2, axx=axx, ayy=ayy, axy=pxy / m22)


def _pyramid_dims(width: int, height: int, params: FlowParams) -> list[tuple[int, int]]:
    """Per-level (w, h), finest first; levels below MIN_PYRAMID_DIM are dropped."""
    dims = []
    for k in range(params.levels):
        s = params.pyr_scale**k
        w, h = int(width * s), int(height * s)
        if min(w, h) < MIN_PYRAMID_DIM:
            break
        dims.append((w, h))
    return dims


def _level_image(gray: np.ndarray, scale: float, w: int, h: int) -> np.ndarray:
    """Anti-alias blur matched to the scale, then bilinear resample."""
    sigma = (1.0 / scale - 1.0) * 0.5
    if sigma > 1e-2:
        gray = ndimage.gaussian_filter(gray, sigma, mode="nearest")
    return resize_bilinear(gray, w, h)


def _displacement_update(
    poly1: PolyExpansion,
    poly2: PolyExpansion,
    dx0: np.ndarray,
    dy0: np.ndarray,
    winsize: int,
) -> tuple[np.ndarray, np.ndarray]:
    """One fixed-point refinement of the displacement field."""
    h, w = dx0.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    wx = xs + dx0
    wy = ys + dy0
    inside = (wx >= 0) & (wx <= w - 1) & (wy >= 0) & (wy <= h - 1)
    coords = [np.clip(wy, 0, h - 1), np.clip(wx, 0, w - 1)]

    def warp(plane):
        return ndimage.map_coordinates(plane, coords, order=1, mode="nearest")

    p = 0.5 * (poly1.axx + warp(poly2.axx))
    r = 0.5 * (poly1.ayy + warp(poly2.ayy))
    q = 0.25 * (poly1.axy + warp(poly2.axy))
    hx = -0.5 * (warp(poly2.bx) - poly1.bx)
    hy = -0.5 * (warp(poly2.by) - poly1.by)
    # Where the warp leaves the frame there is no data term: fall back to the
    # single-frame quadratic and let the prior displacement carry through.
    p = np.where(inside, p, poly1.axx)
    r = np.where(inside, r, poly1.ayy)
    q = np.where(inside, q, 0.5 * poly1.axy)
    hx = np.where(inside, hx, 0.0) + p * dx0 + q * dy0
    hy = np.where(inside, hy, 0.0) + q * dx0 + r * dy0

    m11 = p * p + q * q
    m12 = q * (p + r)
    m22 = q * q + r * r
    mx = p * hx + q * hy
    my = q * hx + r * hy
    blur = lambda a: ndimage.uniform_filter(a, size=winsize, mode="nearest")
    m11, m12, m22, mx, my = blur(m11), blur(m12), blur(m22), blur(mx), blur(my)

    det = m11 * m22 - m12 * m12 + SOLVE_REGULARIZATION
    return (m22 * mx - m12 * my) / det, (m11 * my - m12 * mx) / det


def farneback_flow(
    prev_gray: np.ndarray,
    cur_gray: np.ndarray,
    params: FlowParams = FlowParams(),
    timings: Optional[dict] = None,
) -> FlowField:
    """Coarse-to-fine dense displacement field between two grayscale images.

    timings, if given, accumulates per-stage wall-clock seconds under keys
    "pyramid", "poly_exp" and "update".
    """
    prev_gray = np.asarray(prev_gray, dtype=np.float64)
    cur_gray = np.asarray(cur_gray, dtype=np.float64)
    if prev_gray.shape != cur_gray.shape:
        raise DimensionMismatch(
            f"frame shapes differ: {prev_gray.shape} vs {cur_gray.shape}"
        )
    height, width = prev_gray.shape
    dims = _pyramid_dims(width, height, params)
    if not dims:
        raise DimensionMismatch(
            f"image {width}x{height} smaller than minimum pyramid level "
            f"{MIN_PYRAMID_DIM}px"
        )

    def clock(key, start):
        if timings is not None:
            timings[key] = timings.get(key, 0.0) + (time.perf_counter() - start)

    dx = dy = None
    for k in range(len(dims) - 1, -1, -1):
        w, h = dims[k]
        scale = params.pyr_scale**k
        t0 = time.perf_counter()
        img1 = _level_image(prev_gray, scale, w, h)
        img2 = _level_image(cur_gray, scale, w, h)
        clock("pyramid", t0)

        if dx is None:
            dx = np.zeros((h, w))
            dy = np.zeros((h, w))
        else:
            prev_h, prev_w = dx.shape
            dx = resize_bilinear(dx, w, h) * (w / prev_w)
            dy = resize_bilinear(dy, w, h) * (h / prev_h)

        t0 = time.perf_counter()
        poly1 = polynomial_expansion(img1, params.poly_n, params.poly_sigma)
        poly2 = polynomial_expansion(img2, params.poly_n, params.poly_sigma)
        clock("poly_exp", t0)

        t0 = time.perf_counter()
        for _ in range(params.iterations):
            dx, dy = _displacement_update(poly1, poly2, dx, dy, params.winsize)
        clock("update", t0)

    return FlowField(width=width, height=height, dx=dx, dy=dy)


def roi_motion(
    flow: FlowField, mask: RoiMask, aggregation: str = "mean_magnitude"
) -> float:
    """Average motion inside a mask.

    mean_magnitude averages per-pixel |d| and is robust to opposing motions
    canceling; magnitude_of_mean is |mean d| for callers that want net drift.
    """
    if (mask.width, mask.height) != (flow.width, flow.height):
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs flow {flow.width}x{flow.height}"
        )
    bits = mask.bits
    if not bits.any():
        raise EmptyMask(f"ROI mask {mask.kind!r} selects no pixels")
    if aggregation == "mean_magnitude":
        return float(np.hypot(flow.dx[bits], flow.dy[bits]).mean())
    if aggregation == "magnitude_of_mean":
        return float(np.hypot(flow.dx[bits].mean(), flow.dy[bits].mean()))
    raise ValueError(f"unknown aggregation {aggregation!r}")
