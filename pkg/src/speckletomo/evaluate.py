"""Scoring reconstructions against ground truth, modulo the trivial ambiguities.

A power spectrum cannot distinguish an object from its circular shifts or its point
reflection, so scores are maximised over that orbit.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .grid import center_index, reflect
from .validation import check_int, check_same_shape, check_volume


@dataclass
class EvaluationReport:
    """Best orbit-aligned normalized cross-correlation.

    ``best_shift`` is in array-axis order ``(z, y, x)``: the reconstruction (after
    the reflection, if ``conjugate_inverted``) best matches ``np.roll(truth, best_shift)``.
    """

    best_ncc: float
    best_shift: tuple
    conjugate_inverted: bool
    memory_effect_margin: tuple = None
    memory_effect_ok: bool = None
    per_seed: list = field(default_factory=list)

    def to_dict(self):
        return {
            "best_ncc": self.best_ncc,
            "best_shift": list(self.best_shift),
            "conjugate_inverted": self.conjugate_inverted,
            "memory_effect_margin": (
                None if self.memory_effect_margin is None else list(self.memory_effect_margin)
            ),
            "memory_effect_ok": self.memory_effect_ok,
            "per_seed": self.per_seed,
        }


def _normalized(v, name):
    centered = v - v.mean()
    norm = np.linalg.norm(centered)
    if norm == 0:
        raise ValueError(f"{name} has zero variance; NCC is undefined")
    return centered / norm


def shift_ncc(recon, truth):
    """NCC for every circular shift ``s``: ``sum_t truth(t) recon(t + s)`` of normalized volumes."""
    a = _normalized(recon, "recon")
    b = _normalized(truth, "truth")
    return scipy.fft.irfftn(
        np.conj(scipy.fft.rfftn(b)) * scipy.fft.rfftn(a), s=a.shape
    )


def _signed(index, shape):
    return tuple(int(i - n) if i > n // 2 else int(i) for i, n in zip(index, shape))


def align_and_score(recon, truth):
    """Maximise NCC over circular shifts and over {identity, point reflection} of ``recon``."""
    recon = check_volume(recon, "recon")
    truth = check_volume(truth, "truth")
    check_same_shape(recon, truth, ("recon", "truth"))
    best = None
    for inverted, candidate in ((False, recon), (True, reflect(recon))):
        scores = shift_ncc(candidate, truth)
        idx = np.unravel_index(np.argmax(scores), scores.shape)
        value = float(scores[idx])
        if best is None or value > best[0] + 1e-12:
            best = (value, _signed(idx, scores.shape), inverted)
    ncc, shift, inverted = best
    return EvaluationReport(best_ncc=min(ncc, 1.0), best_shift=shift, conjugate_inverted=inverted)


def rasterize_scene(scene, shape, downsample=1):
    """Place each point of ``scene`` in a single voxel of a ``(nz, ny, nx)`` grid.

    Lateral sensor offsets are divided by ``downsample`` and rounded to the nearest
    voxel, measured from the grid centre.  The axial index counts distance from the
    second diffuser, so it decreases as ``plane_index`` increases: plane ``p`` lands
    at ``nz // 2 - p`` (modulo ``nz``), matching the lag order of the correlation stack.
    """
    nz, ny, nx = shape
    downsample = check_int(downsample, "downsample", minimum=1)
    vol = np.zeros(shape)
    for x, y, plane, intensity in scene.points:
        iz = (center_index(nz) - plane) % nz
        iy = (center_index(ny) + int(np.floor(y / downsample + 0.5))) % ny
        ix = (center_index(nx) + int(np.floor(x / downsample + 0.5))) % nx
        vol[iz, iy, ix] += intensity
    return vol
