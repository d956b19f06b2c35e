"""File formats.

Images
    16-bit binary PGM (``P5``, maxval 65535, big-endian) with a ``key = value``
    sidecar at ``<path>.meta`` recording the linear mapping
    ``value = offset + count * scale`` plus dimensions, units and seed.

Volumes
    64-byte little-endian header followed by raw float64 voxels, ``x`` fastest::

        0   8s  magic  b"SPKV0001"
        8   3I  nx, ny, nz
        20  3d  dx, dy, dz
        44      zero padding to byte 64

All writes go through a temporary file in the target directory and ``os.replace``.
"""

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .validation import check_image

VOLUME_MAGIC = b"SPKV0001"
HEADER_SIZE = 64
_DIMS = struct.Struct("<3I")
_SPACING = struct.Struct("<3d")


class FormatError(ValueError):
    """Malformed or truncated file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


@dataclass
class Volume:
    data: np.ndarray
    dx: float = 1.0
    dy: float = 1.0
    dz: float = 1.0

    @property
    def spacing(self):
        return (self.dx, self.dy, self.dz)


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path, payload):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_volume(data, spacing=(1.0, 1.0, 1.0)):
    # no finiteness check: the format stores any float64 bit pattern
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3 or data.size == 0:
        raise ValueError(f"data must be a non-empty 3D array, got shape {data.shape}")
    nz, ny, nx = data.shape
    header = VOLUME_MAGIC + _DIMS.pack(nx, ny, nz) + _SPACING.pack(*map(float, spacing))
    header += b"\0" * (HEADER_SIZE - len(header))
    return header + data.astype("<f8").tobytes(order="C")


def decode_volume(buf):
    if len(buf) < HEADER_SIZE:
        raise FormatError(
            f"truncated header: expected {HEADER_SIZE} bytes, got {len(buf)}", offset=len(buf)
        )
    if buf[:8] != VOLUME_MAGIC:
        raise FormatError(f"bad magic {bytes(buf[:8])!r}, expected {VOLUME_MAGIC!r}", offset=0)
    nx, ny, nz = _DIMS.unpack_from(buf, 8)
    dx, dy, dz = _SPACING.unpack_from(buf, 20)
    if min(nx, ny, nz) < 1:
        raise FormatError(f"invalid dimensions {(nx, ny, nz)}", offset=8)
    expected = HEADER_SIZE + 8 * nx * ny * nz
    if len(buf) != expected:
        raise FormatError(
            f"{'truncated' if len(buf) < expected else 'oversized'} volume: "
            f"expected {expected} bytes for {nx}x{ny}x{nz}, got {len(buf)}",
            offset=min(len(buf), expected),
        )
    data = np.frombuffer(buf, dtype="<f8", offset=HEADER_SIZE).reshape(nz, ny, nx)
    return Volume(data.astype(np.float64), dx, dy, dz)


def write_volume(path, data, spacing=(1.0, 1.0, 1.0)):
    atomic_write(path, encode_volume(data, spacing))


def read_volume(path):
    with open(path, "rb") as fh:
        return decode_volume(fh.read())


def format_metadata(meta):
    return "".join(f"{k} = {v}\n" for k, v in meta.items())


def parse_metadata(text):
    meta = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


def write_image(path, img, seed=None, units="arbitrary linear intensity", extra=None):
    """Write ``img`` as 16-bit PGM plus a metadata sidecar.

    Quantization maps ``[min, max]`` onto ``[0, 65535]``; the sidecar records
    ``offset`` and ``scale`` so readers recover ``offset + count * scale``.
    """
    img = check_image(img, "img")
    lo, hi = float(img.min()), float(img.max())
    scale = (hi - lo) / 65535.0 if hi > lo else 0.0
    counts = np.zeros(img.shape) if scale == 0 else np.rint((img - lo) / scale)
    counts = np.clip(counts, 0, 65535).astype(">u2")
    height, width = img.shape
    header = f"P5\n{width} {height}\n65535\n".encode("ascii")
    atomic_write(path, header + counts.tobytes())
    meta = {
        "format": "pgm16",
        "width": width,
        "height": height,
        "units": units,
        "offset": repr(lo),
        "scale": repr(scale),
        "seed": "" if seed is None else seed,
    }
    meta.update(extra or {})
    atomic_write(f"{os.fspath(path)}.meta", format_metadata(meta).encode("utf-8"))


def _pgm_tokens(buf, count):
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header", offset=pos)
        try:
            tokens.append(int(buf[start:pos]))
        except ValueError:
            raise FormatError(f"bad PGM header token {buf[start:pos]!r}", offset=start) from None
    return tokens, pos + 1


def read_image(path):
    """Read a 16-bit PGM written by :func:`write_image`; returns ``(image, metadata)``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P5":
        raise FormatError(f"bad magic {buf[:2]!r}, expected b'P5'", offset=0)
    (width, height, maxval), start = _pgm_tokens(buf, 3)
    if maxval != 65535:
        raise FormatError(f"expected 16-bit PGM (maxval 65535), got maxval {maxval}")
    expected = start + 2 * width * height
    if len(buf) != expected:
        raise FormatError(
            f"PGM payload: expected {expected} bytes, got {len(buf)}", offset=min(len(buf), expected)
        )
    counts = np.frombuffer(buf, dtype=">u2", offset=start).reshape(height, width)
    meta_path = f"{os.fspath(path)}.meta"
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path, encoding="utf-8") as fh:
            meta = parse_metadata(fh.read())
    offset = float(meta.get("offset", 0.0))
    scale = float(meta.get("scale", 1.0))
    return offset + counts.astype(np.float64) * scale, meta


def read_capture(path):
    """Load a speckle capture from either a PGM image or a single-slice volume file."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == VOLUME_MAGIC:
        vol = read_volume(path).data
        if vol.shape[0] != 1:
            raise FormatError(f"capture volume must have nz = 1, got {vol.shape[0]}", offset=16)
        return vol[0]
    return read_image(path)[0]
