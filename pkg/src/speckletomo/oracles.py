"""Slow, direct reference implementations used to cross-check the fast paths.

Nothing here calls an FFT or the code under test; each routine spells the
definition out with explicit index arithmetic.
"""

import numpy as np


def naive_dft3(v, inverse=False):
    """Direct O(N^2) 3D DFT: one explicit sum per output frequency."""
    v = np.asarray(v, dtype=np.complex128)
    nz, ny, nx = v.shape
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    sign = 1.0 if inverse else -1.0
    out = np.empty(v.shape, dtype=np.complex128)
    for kz in range(nz):
        for ky in range(ny):
            for kx in range(nx):
                phase = sign * 2j * np.pi * (kz * z / nz + ky * y / ny + kx * x / nx)
                out[kz, ky, kx] = np.sum(v * np.exp(phase))
    if inverse:
        out /= v.size
    return out


def naive_xcorr2(a, b):
    """``c(t) = sum_s a(s) b(s + t)`` with wrap-around, lag zero stored at index ``n // 2``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ny, nx = a.shape
    cy, cx = ny // 2, nx // 2
    out = np.zeros((ny, nx))
    for ty in range(ny):
        for tx in range(nx):
            lag_y, lag_x = ty - cy, tx - cx
            total = 0.0
            for sy in range(ny):
                for sx in range(nx):
                    total += a[sy, sx] * b[(sy + lag_y) % ny, (sx + lag_x) % nx]
            out[ty, tx] = total
    return out


def naive_xcorr3(a, b):
    """3D version of :func:`naive_xcorr2` (vectorised over the summation index only)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    nz, ny, nx = a.shape
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    out = np.zeros(a.shape)
    for tz in range(nz):
        for ty in range(ny):
            for tx in range(nx):
                lz, ly, lx = tz - nz // 2, ty - ny // 2, tx - nx // 2
                out[tz, ty, tx] = np.sum(a * b[(z + lz) % nz, (y + ly) % ny, (x + lx) % nx])
    return out


def block_means(img, factor):
    img = np.asarray(img, dtype=np.float64)
    ny, nx = img.shape
    out = np.zeros((ny // factor, nx // factor))
    for i in range(ny // factor):
        for j in range(nx // factor):
            total = 0.0
            for di in range(factor):
                for dj in range(factor):
                    total += img[i * factor + di, j * factor + dj]
            out[i, j] = total / (factor * factor)
    return out


def bilinear_sample(img, y, x):
    """Textbook bilinear interpolation at a real-valued position inside ``img``."""
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    y1, x1 = min(y0 + 1, img.shape[0] - 1), min(x0 + 1, img.shape[1] - 1)
    fy, fx = y - y0, x - x0
    return (
        (1 - fy) * (1 - fx) * img[y0, x0]
        + (1 - fy) * fx * img[y0, x1]
        + fy * (1 - fx) * img[y1, x0]
        + fy * fx * img[y1, x1]
    )


def brute_render(points, responses, shape):
    """Accumulate every point's shifted plane response pixel by pixel.

    ``responses`` maps plane index to that plane's 2D response.
    """
    ny, nx = shape
    out = np.zeros(shape)
    for x, y, plane, intensity in points:
        h = responses[plane]
        for i in range(ny):
            src_i = (i - y) % ny
            for j in range(nx):
                out[i, j] += intensity * h[src_i, (j - x) % nx]
    return out


def run_oracle_suite(n_instances=100, seed=0, log=print):
    """Compare the fast grid primitives with the oracles on random instances.

    Returns True when every check passes; one line per check goes to ``log``.
    """
    from .grid import dft3, downsample2, xcorr2

    rng = np.random.default_rng(seed)
    ok = True

    def report(name, worst, tol, kind="relative"):
        nonlocal ok
        passed = worst <= tol
        ok &= passed
        log(f"{'PASS' if passed else 'FAIL'}  {name}: worst {kind} error {worst:.2e} (tol {tol:.0e})")

    worst = 0.0
    for _ in range(n_instances):
        shape = tuple(rng.integers(1, 17, size=3))
        shape = tuple(int(s) for s in shape)
        v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        ref = naive_dft3(v)
        worst = max(worst, np.abs(dft3(v) - ref).max() / np.abs(ref).max())
    report("dft3 vs naive DFT", worst, 1e-9)

    worst = 0.0
    for _ in range(n_instances):
        shape = tuple(int(s) for s in rng.integers(1, 17, size=2))
        a, b = rng.normal(size=shape), rng.normal(size=shape)
        ref = naive_xcorr2(a, b)
        worst = max(worst, np.abs(xcorr2(a, b) - ref).max() / np.abs(ref).max())
    report("xcorr2 vs naive correlation", worst, 1e-9)

    worst = 0.0
    for _ in range(10):
        f = int(rng.choice([1, 2, 4]))
        img = rng.normal(size=(8, 8))
        worst = max(worst, np.abs(downsample2(img, f) - block_means(img, f)).max())
    report("downsample2 vs block means", worst, 1e-12, kind="absolute")
    return ok
