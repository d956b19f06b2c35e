"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np


def check_image(img, name="image", non_negative=False):
    """Return ``img`` as a C-contiguous float64 2D array or raise ValueError."""
    arr = np.asarray(img)
    if np.iscomplexobj(arr):
        raise ValueError(f"{name} must be real-valued")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must have at least one pixel, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if non_negative and arr.min() < 0:
        raise ValueError(f"{name} must be non-negative (min={arr.min():g})")
    return arr


def check_volume(vol, name="volume", non_negative=False, allow_complex=False):
    """Return ``vol`` as a 3D float64 (or complex128) array or raise ValueError.

    Volumes are indexed ``[z, y, x]``.
    """
    arr = np.asarray(vol)
    if np.iscomplexobj(arr):
        if not allow_complex:
            raise ValueError(f"{name} must be real-valued")
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
    else:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must have at least one voxel, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if non_negative and arr.min() < 0:
        raise ValueError(f"{name} must be non-negative (min={arr.min():g})")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ValueError(
            f"{names[0]} and {names[1]} must have identical shapes, got {a.shape} and {b.shape}"
        )


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return value


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``.

    Generators passed in are used as-is; integers and None seed a fresh PCG64.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and (isinstance(seed, bool) or int(seed) != seed or seed < 0):
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.default_rng(seed)
