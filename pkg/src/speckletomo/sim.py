"""Forward model: speckle impulse response and single-shot capture of a 3D point scene.

The capture is an incoherent sum over object points of the impulse response of the
point's plane, laterally shifted (circularly) to the point's position.  Every plane
uses the same random base response, magnified by the plane's relative scale factor.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .grid import rescale2
from .validation import check_image, check_int, check_positive, check_random_state


def scale_factor(z_o, z_i):
    """Axial magnification ``(z_o + z_i) / z_o`` of the impulse response."""
    z_o = check_positive(z_o, "z_o")
    z_i = check_positive(z_i, "z_i", strict=False)
    return (z_o + z_i) / z_o


def relative_scale(plane_index, z_o, z_i, delta_z):
    """Magnification of plane ``plane_index`` relative to the reference plane at ``z_o``."""
    z = z_o - plane_index * delta_z
    if z <= 0:
        raise ValueError(
            f"plane {plane_index} lies at z_o - m*delta_z = {z:g} mm; must be > 0"
        )
    return scale_factor(z, z_i) / scale_factor(z_o, z_i)


@dataclass(frozen=True)
class ScatteringScene:
    """A point-source object between the diffusers plus capture geometry.

    ``points`` holds ``(x, y, plane_index, intensity)`` tuples.  ``x`` and ``y`` are
    integer pixel offsets from the sensor origin (applied as circular shifts);
    planes step from ``z_o`` towards the first diffuser in units of ``delta_z``.
    """

    points: tuple = ()
    z_o: float = 92.0
    z_i: float = 25.0
    delta_z: float = 0.5
    sensor_n: int = 256
    grain_px: float = 8.0
    seed: int = 0

    def __post_init__(self):
        pts = []
        for p in self.points:
            if len(p) != 4:
                raise ValueError(f"scene point must be (x, y, plane, intensity), got {p!r}")
            x, y, plane, intensity = p
            for name, v in (("x", x), ("y", y), ("plane_index", plane)):
                if float(v) != int(v):
                    raise ValueError(f"point {name} must be an integer, got {v!r}")
            if int(plane) < 0:
                raise ValueError(f"plane_index must be >= 0, got {plane}")
            if not float(intensity) > 0:
                raise ValueError(f"point intensity must be > 0, got {intensity!r}")
            pts.append((int(x), int(y), int(plane), float(intensity)))
        object.__setattr__(self, "points", tuple(pts))
        check_positive(self.z_o, "z_o")
        check_positive(self.z_i, "z_i")
        check_positive(self.delta_z, "delta_z")
        check_int(self.sensor_n, "sensor_n", minimum=1)
        if not float(self.grain_px) >= 2:
            raise ValueError(f"grain_px must be >= 2, got {self.grain_px!r}")
        for _, _, plane, _ in pts:
            if self.z_o - plane * self.delta_z <= 0:
                raise ValueError(
                    f"plane {plane} is beyond the first diffuser: "
                    f"z_o - plane*delta_z = {self.z_o - plane * self.delta_z:g} mm"
                )

    @property
    def n_planes(self):
        return 1 + max((p[2] for p in self.points), default=0)


@dataclass(frozen=True)
class ImpulseResponse:
    base: np.ndarray = field(repr=False)
    grain_px: float = 8.0


def gen_impulse_response(n, grain_px, seed=None):
    """Fully developed speckle with unit mean and grain size ``grain_px``.

    A unit-magnitude, uniformly random-phase field is band-limited to a centred
    disc of radius ``n / (2 grain_px)`` frequency samples; the response is the
    squared magnitude of its inverse transform.
    """
    n = check_int(n, "n", minimum=1)
    grain_px = check_positive(grain_px, "grain_px")
    if n < 8 * grain_px:
        raise ValueError(f"n={n} too small for grain_px={grain_px:g}; need n >= 8*grain_px")
    rng = check_random_state(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))
    f = scipy.fft.fftfreq(n, d=1.0 / n)
    fy, fx = np.meshgrid(f, f, indexing="ij")
    pupil = fx**2 + fy**2 <= (n / (2.0 * grain_px)) ** 2
    field_ = np.where(pupil, np.exp(1j * phase), 0.0)
    h = np.abs(scipy.fft.ifft2(field_)) ** 2
    h /= h.mean()
    return ImpulseResponse(base=h, grain_px=grain_px)


def plane_response(ir, plane_index, scene, method="bilinear"):
    """Impulse response for ``plane_index``: the base response magnified about the centre."""
    plane_index = check_int(plane_index, "plane_index", minimum=0)
    s_rel = relative_scale(plane_index, scene.z_o, scene.z_i, scene.delta_z)
    return rescale2(ir.base, s_rel, method=method)


def render_speckle(scene, ir=None, method="bilinear"):
    """Single-shot capture of ``scene``: intensity-weighted, shifted plane responses."""
    if ir is None:
        ir = gen_impulse_response(scene.sensor_n, scene.grain_px, scene.seed)
    if ir.base.shape != (scene.sensor_n, scene.sensor_n):
        raise ValueError(
            f"impulse response shape {ir.base.shape} does not match sensor_n={scene.sensor_n}"
        )
    out = np.zeros(ir.base.shape)
    responses = {}
    for x, y, plane, intensity in scene.points:
        if plane not in responses:
            responses[plane] = plane_response(ir, plane, scene, method=method)
        out += intensity * np.roll(responses[plane], (y, x), axis=(0, 1))
    return out


def add_noise(img, read_sigma, seed=None):
    """Add zero-mean Gaussian read noise and clamp at zero."""
    img = check_image(img, "img")
    read_sigma = check_positive(read_sigma, "read_sigma", strict=False)
    if read_sigma == 0:
        return img.copy()
    rng = check_random_state(seed)
    return np.maximum(img + rng.normal(0.0, read_sigma, size=img.shape), 0.0)
