"""Dense grid primitives: 3D DFTs, centred circular correlation, rescaling, cropping.

Conventions used throughout the package:

* images are float64 arrays indexed ``[y, x]``; volumes are indexed ``[z, y, x]``;
* the "centre" of an axis of length ``n`` is index ``n // 2``;
* correlation outputs carry lag zero at the centre.

FFTs go through :mod:`scipy.fft`, so ``scipy.fft.set_workers`` controls threading.
The per-axis transforms are independent, so the thread count never changes results.
"""

import numpy as np
import scipy.fft
from scipy import ndimage

from .validation import check_image, check_int, check_positive, check_same_shape

INTERPOLATION_ORDERS = {"nearest": 0, "bilinear": 1, "bicubic": 3}


def center_index(n):
    return n // 2


def dft3(v, inverse=False):
    """Forward or inverse 3D discrete Fourier transform.

    The forward transform is unnormalised; the inverse carries the ``1/N`` factor.
    DC sits at index ``(0, 0, 0)``.
    """
    arr = np.asarray(v)
    if arr.ndim != 3:
        raise ValueError(f"dft3 expects a 3D array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("dft3 of a zero-size volume is undefined")
    arr = arr.astype(np.complex128, copy=False)
    if inverse:
        return scipy.fft.ifftn(arr, axes=(0, 1, 2))
    return scipy.fft.fftn(arr, axes=(0, 1, 2))


def xcorr2(a, b):
    """Circular cross-correlation ``c(t) = sum_s a(s) b(s + t)``, lag zero at the centre."""
    a = check_image(a, "a")
    b = check_image(b, "b")
    check_same_shape(a, b, ("a", "b"))
    fa = scipy.fft.rfft2(a)
    fb = scipy.fft.rfft2(b)
    c = scipy.fft.irfft2(np.conj(fa) * fb, s=a.shape)
    return scipy.fft.fftshift(c)


def xcorr3(a, b):
    """3D analogue of :func:`xcorr2` (lag zero at the centre voxel)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, ("a", "b"))
    fa = scipy.fft.rfftn(a)
    fb = scipy.fft.rfftn(b)
    c = scipy.fft.irfftn(np.conj(fa) * fb, s=a.shape)
    return scipy.fft.fftshift(c)


def rescale2(img, factor, method="bilinear"):
    """Magnify (``factor > 1``) or minify ``img`` about its centre pixel.

    The output keeps the input shape. Output pixel ``p`` samples the input at
    ``c + (p - c) / factor``; samples falling outside the input are zero.
    """
    img = check_image(img, "img")
    factor = check_positive(factor, "factor")
    if method not in INTERPOLATION_ORDERS:
        raise ValueError(
            f"unknown interpolation {method!r}; expected one of {sorted(INTERPOLATION_ORDERS)}"
        )
    if factor == 1.0:
        return img.copy()

    ny, nx = img.shape
    cy, cx = center_index(ny), center_index(nx)
    sy = cy + (np.arange(ny, dtype=np.float64) - cy) / factor
    sx = cx + (np.arange(nx, dtype=np.float64) - cx) / factor
    yy, xx = np.meshgrid(sy, sx, indexing="ij")
    out = ndimage.map_coordinates(
        img, [yy, xx], order=INTERPOLATION_ORDERS[method], mode="nearest"
    )
    outside = (yy < 0) | (yy > ny - 1) | (xx < 0) | (xx > nx - 1)
    out[outside] = 0.0
    return out


def downsample2(img, factor):
    """Average non-overlapping ``factor x factor`` blocks."""
    img = check_image(img, "img")
    factor = check_int(factor, "factor", minimum=1)
    ny, nx = img.shape
    if ny % factor or nx % factor:
        raise ValueError(f"factor {factor} does not divide image shape {img.shape}")
    if factor == 1:
        return img.copy()
    return img.reshape(ny // factor, factor, nx // factor, factor).mean(axis=(1, 3))


def crop_center(img, out_w, out_h=None):
    """Return the ``out_h x out_w`` window whose centre pixel is the input's centre pixel."""
    img = check_image(img, "img")
    out_h = out_w if out_h is None else out_h
    out_w = check_int(out_w, "out_w", minimum=1)
    out_h = check_int(out_h, "out_h", minimum=1)
    ny, nx = img.shape
    if out_w > nx or out_h > ny:
        raise ValueError(f"crop {out_h}x{out_w} exceeds image shape {img.shape}")
    y0 = center_index(ny) - center_index(out_h)
    x0 = center_index(nx) - center_index(out_w)
    return img[y0 : y0 + out_h, x0 : x0 + out_w].copy()


def reflect(vol):
    """Point reflection ``v(-r)`` about index 0 on the torus (any dimensionality)."""
    arr = np.asarray(vol)
    return np.roll(np.flip(arr), 1, axis=tuple(range(arr.ndim)))


def reflect_centered(vol):
    """Point reflection about the centre index ``n // 2`` of every axis."""
    arr = np.asarray(vol)
    shifted = np.fft.ifftshift(arr)
    return np.fft.fftshift(reflect(shifted))
