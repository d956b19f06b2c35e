"""From one speckle capture to a 3D power-spectrum estimate.

The capture is magnified by a series of computational scale factors that mimic
moving the sensor axially; pairwise lateral correlations of the scaled copies are
stacked along a lag axis, cleaned up, and Fourier transformed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import center_index, crop_center, downsample2, dft3, reflect_centered, rescale2, xcorr2
from .sim import relative_scale, scale_factor
from .validation import check_image, check_int, check_positive, check_volume


@dataclass(frozen=True)
class ScaleSeries:
    factors: tuple
    z_o: float
    z_i: float
    delta_z: float

    @property
    def M(self):
        return len(self.factors)


def comp_scale_series(z_o, z_i, delta_z, M):
    """Computational magnifications ``s^m``, m = 0..M-1, relative to the reference plane."""
    M = check_int(M, "M", minimum=2)
    z_o = check_positive(z_o, "z_o")
    z_i = check_positive(z_i, "z_i", strict=False)
    delta_z = check_positive(delta_z, "delta_z")
    if z_o - (M - 1) * delta_z <= 0:
        raise ValueError(
            f"geometry exhausted: z_o - (M-1)*delta_z = {z_o - (M - 1) * delta_z:g} mm <= 0"
        )
    factors = tuple(1.0 if m == 0 else relative_scale(m, z_o, z_i, delta_z) for m in range(M))
    return ScaleSeries(factors=factors, z_o=z_o, z_i=z_i, delta_z=delta_z)


@dataclass(frozen=True)
class MemoryEffectCheck:
    """Outcome of the scaling-distortion limit ``|s^{M-1} - 1| d <= delta``."""

    ok: bool
    lhs: float
    rhs: float

    def __bool__(self):
        return self.ok

    @property
    def margin(self):
        return self.rhs - self.lhs


def memory_effect_ok(series, d, delta_corr):
    """Check that the largest scaling distorts an object of size ``d`` by at most ``delta_corr``.

    ``d`` is the object size on the sensor and ``delta_corr`` the speckle-correlation
    resolution (sqrt(2) times the grain size), both in pixels.
    """
    d = check_positive(d, "d")
    delta_corr = check_positive(delta_corr, "delta_corr")
    lhs = abs(series.factors[-1] - 1.0) * d
    return MemoryEffectCheck(ok=bool(lhs <= delta_corr), lhs=lhs, rhs=delta_corr)


def background_compensate(img, window=63):
    """Flat-field the capture: ``img / lowpass(img) - 1`` with a moving-average lowpass."""
    img = check_image(img, "img")
    window = check_int(window, "window", minimum=3)
    if window % 2 == 0:
        raise ValueError(f"window must be odd, got {window}")
    peak = np.abs(img).max()
    if peak == 0:
        raise ValueError("cannot compensate the background of an all-zero image")
    lowpass = ndimage.uniform_filter(img, size=window, mode="reflect")
    return img / np.maximum(lowpass, 1e-12 * peak) - 1.0


@dataclass
class CorrelationStack:
    """Lag-stacked correlations, ``volume[k + M - 1]`` holding slice ``k``."""

    volume: np.ndarray
    crop: int
    downsample: int

    @property
    def M(self):
        return (self.volume.shape[0] + 1) // 2

    def slice(self, k):
        return self.volume[k + self.M - 1]


def symmetrize_stack(volume):
    """Average every slice ``c^k(t)`` with ``c^{-k}(-t)`` so the stack is centro-symmetric."""
    return 0.5 * (volume + reflect_centered(volume))


def build_correlation_stack(i2d, series, crop=None, ds=1, method="bilinear"):
    """Correlate the reference capture with its scaled copies and stack the lags.

    ``c^k = xcorr2(i^0, i^k)`` for k >= 0 and ``xcorr2(i^{-k}, i^0)`` for k < 0;
    each slice is centre-cropped to ``crop`` and block-averaged by ``ds``.  Slice
    ``k = M-1`` is the reflection of slice ``-(M-1)``, and the stack is symmetrized.
    """
    i2d = check_image(i2d, "i2d")
    crop = min(i2d.shape) if crop is None else check_int(crop, "crop", minimum=1)
    ds = check_int(ds, "ds", minimum=1)
    if crop > min(i2d.shape):
        raise ValueError(f"crop {crop} exceeds image shape {i2d.shape}")
    if crop % ds:
        raise ValueError(f"downsample factor {ds} does not divide crop {crop}")
    M = series.M

    scaled = [rescale2(i2d, s, method=method) for s in series.factors]

    def reduce(c):
        return downsample2(crop_center(c, crop, crop), ds)

    side = crop // ds
    volume = np.empty((2 * M - 1, side, side))
    for k in range(-(M - 1), M - 1):
        if k >= 0:
            c = xcorr2(scaled[0], scaled[k])
        else:
            c = xcorr2(scaled[-k], scaled[0])
        volume[k + M - 1] = reduce(c)
    volume[2 * M - 2] = reflect_centered(volume[0])
    return CorrelationStack(volume=symmetrize_stack(volume), crop=crop, downsample=ds)


def equalize_bias(stack, central):
    """Subtract from every slice its mean outside the centred ``central x central`` window."""
    central = check_int(central, "central", minimum=0)
    vol = stack.volume
    _, ny, nx = vol.shape
    if central >= min(ny, nx):
        raise ValueError(f"central window {central} leaves no pixels outside a {ny}x{nx} slice")
    outside = np.ones((ny, nx), dtype=bool)
    y0 = center_index(ny) - center_index(central)
    x0 = center_index(nx) - center_index(central)
    outside[y0 : y0 + central, x0 : x0 + central] = False
    bias = vol[:, outside].mean(axis=1)
    return CorrelationStack(
        volume=vol - bias[:, None, None], crop=stack.crop, downsample=stack.downsample
    )


def stack_to_power_spectrum(stack):
    """Non-negative power-spectrum estimate: real part of the 3D DFT of the centred stack."""
    vol = stack.volume if isinstance(stack, CorrelationStack) else stack
    vol = check_volume(vol, "stack")
    spectrum = dft3(scipy.fft.ifftshift(vol)).real
    return np.maximum(spectrum, 0.0)


def zero_lag(stack):
    """Value of the central slice at zero lag."""
    vol = stack.volume if isinstance(stack, CorrelationStack) else stack
    return float(vol[tuple(center_index(n) for n in vol.shape)])


class SpeckleCorrelator(TransformerMixin, BaseEstimator):
    """Transform a single speckle capture into a 3D power-spectrum estimate.

    Parameters
    ----------
    z_o, z_i : float
        Object-to-diffuser and diffuser-to-sensor distances (mm).
    delta_z : float
        Axial pitch of the object planes (mm).
    n_scales : int
        Number of computationally scaled copies ``M``; the stack depth is ``2M - 1``.
    crop : int or None
        Side of the central correlation window kept, before downsampling.
        ``None`` keeps the largest square that fits.
    downsample : int
        Block-averaging factor applied to each cropped slice.
    bias_window : int or None
        Side of the central window excluded when estimating each slice's bias.
        ``None`` uses half the downsampled slice side.
    background_window : int or None
        Moving-average window of the background compensation; ``None`` skips it.
    interpolation : {"bilinear", "bicubic", "nearest"}
        Interpolation used by the computational scaling.

    Attributes
    ----------
    series_ : ScaleSeries
    image_shape_ : tuple
    """

    def __init__(
        self,
        z_o=92.0,
        z_i=25.0,
        delta_z=0.5,
        n_scales=6,
        crop=None,
        downsample=4,
        bias_window=None,
        background_window=63,
        interpolation="bilinear",
    ):
        self.z_o = z_o
        self.z_i = z_i
        self.delta_z = delta_z
        self.n_scales = n_scales
        self.crop = crop
        self.downsample = downsample
        self.bias_window = bias_window
        self.background_window = background_window
        self.interpolation = interpolation

    def fit(self, X, y=None):
        X = check_image(X, "X")
        self.series_ = comp_scale_series(self.z_o, self.z_i, self.delta_z, self.n_scales)
        self.image_shape_ = X.shape
        return self

    def correlation_stack(self, X):
        """Background-compensated, bias-equalized correlation stack of capture ``X``."""
        check_is_fitted(self, "series_")
        X = check_image(X, "X")
        if X.shape != self.image_shape_:
            raise ValueError(f"X has shape {X.shape}, fitted on {self.image_shape_}")
        if self.background_window is not None:
            X = background_compensate(X, self.background_window)
        stack = build_correlation_stack(
            X, self.series_, crop=self.crop, ds=self.downsample, method=self.interpolation
        )
        side = stack.volume.shape[1]
        central = side // 2 if self.bias_window is None else self.bias_window
        return equalize_bias(stack, central)

    def transform(self, X):
        return stack_to_power_spectrum(self.correlation_stack(X))

    def memory_effect_check(self, d, delta_corr):
        check_is_fitted(self, "series_")
        return memory_effect_ok(self.series_, d, delta_corr)


__all__ = [
    "CorrelationStack",
    "MemoryEffectCheck",
    "ScaleSeries",
    "SpeckleCorrelator",
    "background_compensate",
    "build_correlation_stack",
    "comp_scale_series",
    "equalize_bias",
    "memory_effect_ok",
    "scale_factor",
    "stack_to_power_spectrum",
    "symmetrize_stack",
    "zero_lag",
]
