"""Measurement utilities shared by the unit and acceptance tests."""

import numpy as np
from scipy import ndimage

from speckletomo.grid import xcorr2

# one "PASS/FAIL criterion N: ..." line per acceptance criterion, echoed in the summary
ACCEPTANCE_LINES = []


def normalized_autocorrelation(img):
    """Autocorrelation of the zero-mean image scaled to 1 at lag zero (centred)."""
    d = img - img.mean()
    c = xcorr2(d, d)
    return c / c[img.shape[0] // 2, img.shape[1] // 2]


def autocorrelation_fwhm(img):
    """Full width at half maximum of the central autocorrelation lobe (pixels).

    Half-widths are found by linear interpolation along +x, -x, +y and -y and averaged.
    """
    c = normalized_autocorrelation(img)
    cy, cx = c.shape[0] // 2, c.shape[1] // 2
    halves = []
    for profile in (c[cy, cx:], c[cy, cx::-1], c[cy:, cx], c[cy::-1, cx]):
        i = int(np.argmax(profile < 0.5))
        halves.append(i - 1 + (profile[i - 1] - 0.5) / (profile[i - 1] - profile[i]))
    return 2.0 * float(np.mean(halves))


def peak_to_sidelobe(img, exclude_radius=10.0):
    """Zero-lag autocorrelation over the largest value at lags beyond ``exclude_radius``."""
    c = normalized_autocorrelation(img)
    y, x = np.indices(c.shape)
    r = np.hypot(y - c.shape[0] // 2, x - c.shape[1] // 2)
    return float(1.0 / c[r > exclude_radius].max())


def dominant_peaks(img, exclude_radius):
    """Local maxima of the autocorrelation of ``img``.

    Returns ``(c, maxima)`` where ``maxima`` lists ``(value, (dy, dx))`` sorted by
    decreasing value, lags measured from the centre.  Local maxima are taken over
    3x3 neighbourhoods with wrap-around.
    """
    c = xcorr2(img, img)
    is_max = c == ndimage.maximum_filter(c, size=3, mode="wrap")
    cy, cx = c.shape[0] // 2, c.shape[1] // 2
    peaks = [(float(c[i, j]), (int(i - cy), int(j - cx))) for i, j in zip(*np.nonzero(is_max))]
    return c, sorted(peaks, reverse=True)


def factorization_ratio(img, separation, exclude_radius):
    """Smallest predicted peak over the largest other local maximum.

    Predicted peaks sit at lags 0 and +-``separation``; any local maximum within
    ``exclude_radius`` of a predicted lag belongs to that peak's main lobe.
    """
    c, peaks = dominant_peaks(img, exclude_radius)
    cy, cx = c.shape[0] // 2, c.shape[1] // 2
    sy, sx = separation
    predicted = [(0, 0), (sy, sx), (-sy, -sx)]
    predicted_values = [c[cy + dy, cx + dx] for dy, dx in predicted]
    others = [
        v
        for v, (dy, dx) in peaks
        if min(np.hypot(dy - py, dx - px) for py, px in predicted) > exclude_radius
    ]
    return float(min(predicted_values) / max(others))
