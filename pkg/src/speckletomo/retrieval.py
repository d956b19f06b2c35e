"""3D iterative phase retrieval: hybrid input-output followed by error reduction.

Each iteration inverse transforms the current spectrum estimate, rectifies the
spatial estimate against the constraints, transforms back, and keeps only the
phase, which is recombined with the fixed Fourier magnitude.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .grid import dft3, reflect
from .validation import check_random_state, check_same_shape, check_volume


@dataclass(frozen=True)
class ConstraintSet:
    """Object-domain constraints.

    ``intensity_max`` is a number, ``"auto"`` (square root of the zero-lag
    autocorrelation implied by the power spectrum) or ``None`` (no upper bound).
    """

    realness: bool = True
    non_negativity: bool = True
    intensity_max: object = "auto"

    def __post_init__(self):
        im = self.intensity_max
        if im is not None and im != "auto":
            if not float(im) > 0:
                raise ValueError(f"intensity_max must be > 0, 'auto' or None, got {im!r}")
        if not (self.realness or self.non_negativity or im is not None):
            raise ValueError("at least one constraint must be enabled")

    def resolve(self, power_spectrum):
        """Return a copy with ``"auto"`` replaced by a number."""
        if self.intensity_max != "auto":
            return self
        zero_lag = float(np.mean(power_spectrum))
        bound = np.sqrt(zero_lag) if zero_lag > 0 else None
        if bound is None and not (self.realness or self.non_negativity):
            bound = np.inf
        return ConstraintSet(self.realness, self.non_negativity, bound)


@dataclass(frozen=True)
class RetrievalConfig:
    beta_start: float = 2.0
    beta_end: float = 0.0
    beta_step: float = 0.05
    iters_per_beta: int = 10
    er_iters: int = 500
    seed: int = 0
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        if not self.beta_start >= self.beta_end >= 0:
            raise ValueError(
                f"need beta_start >= beta_end >= 0, got {self.beta_start}, {self.beta_end}"
            )
        if not self.beta_step > 0:
            raise ValueError(f"beta_step must be > 0, got {self.beta_step}")
        if self.iters_per_beta < 0 or self.er_iters < 0:
            raise ValueError("iteration counts must be non-negative")

    def betas(self):
        """Feedback values from ``beta_start`` down to ``beta_end``, both inclusive.

        An ``iters_per_beta`` of zero yields an empty schedule.
        """
        if self.iters_per_beta == 0:
            return np.empty(0)
        n = int(np.floor((self.beta_start - self.beta_end) / self.beta_step + 1e-9))
        return np.round(self.beta_start - self.beta_step * np.arange(n + 1), 12)


@dataclass
class RetrievalState:
    o: np.ndarray
    theta: np.ndarray
    magnitude: np.ndarray
    n: int = 1
    error_history: list = field(default_factory=list)

    def spectrum(self):
        return self.magnitude * np.exp(1j * self.theta)


def _antisymmetrize(theta):
    # theta(-f) = -theta(f); self-conjugate frequencies become 0
    return 0.5 * (theta - reflect(theta))


def init_state(power_spectrum, config, rng=None):
    """Fixed magnitude plus a seeded, Hermitian-consistent random phase."""
    P = check_volume(power_spectrum, "power_spectrum", non_negative=True)
    rng = check_random_state(config.seed if rng is None else rng)
    magnitude = np.sqrt(P)
    magnitude.flags.writeable = False
    theta = _antisymmetrize(rng.uniform(0.0, 2.0 * np.pi, size=P.shape))
    o_prime = dft3(magnitude * np.exp(1j * theta), inverse=True)
    o = o_prime.real if config.constraints.realness else o_prime
    return RetrievalState(o=o, theta=theta, magnitude=magnitude, n=1)


def violation_set(o_prime, constraints):
    """Boolean mask of voxels whose (real) value breaks a constraint."""
    value = np.real(o_prime)
    gamma = np.zeros(value.shape, dtype=bool)
    if constraints.non_negativity:
        gamma |= value < 0
    im = constraints.intensity_max
    if im is not None and im != "auto":
        gamma |= value > im
    return gamma


def er_update(o_prime, gamma):
    """Error reduction: keep ``o'`` where feasible, zero where it violates."""
    o_prime = np.asarray(o_prime)
    gamma = np.asarray(gamma, dtype=bool)
    check_same_shape(o_prime, gamma, ("o_prime", "gamma"))
    return np.where(gamma, 0.0, o_prime)


def hio_update(o_prime, o_prev, beta, gamma):
    """Hybrid input-output: ``o'`` where feasible, ``o_prev - beta o'`` where it violates."""
    o_prime = np.asarray(o_prime)
    o_prev = np.asarray(o_prev)
    gamma = np.asarray(gamma, dtype=bool)
    check_same_shape(o_prime, o_prev, ("o_prime", "o_prev"))
    check_same_shape(o_prime, gamma, ("o_prime", "gamma"))
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return np.where(gamma, o_prev - beta * o_prime, o_prime)


def fourier_error(o, magnitude):
    """Relative misfit between ``|DFT3(o)|`` and the target magnitude."""
    magnitude = np.asarray(magnitude, dtype=np.float64)
    check_same_shape(np.asarray(o), magnitude, ("o", "magnitude"))
    norm = np.sum(magnitude**2)
    if norm == 0:
        raise ValueError("fourier_error is undefined for an all-zero magnitude")
    return float(np.sqrt(np.sum((np.abs(dft3(o)) - magnitude) ** 2) / norm))


def _spectral_error(spectrum, magnitude, norm):
    return float(np.sqrt(np.sum((np.abs(spectrum) - magnitude) ** 2) / norm))


def iterate(state, constraints, beta=None):
    """One pass of the loop; ``beta=None`` selects error reduction, otherwise HIO."""
    o_prime = dft3(state.spectrum(), inverse=True)
    if constraints.realness:
        o_prime = o_prime.real
    gamma = violation_set(o_prime, constraints)
    if beta is None:
        o = er_update(o_prime, gamma)
    else:
        o = hio_update(o_prime, state.o, beta, gamma)
    spectrum = dft3(o)
    norm = np.sum(state.magnitude**2)
    if norm > 0:
        state.error_history.append(_spectral_error(spectrum, state.magnitude, norm))
    state.o = o
    state.theta = np.angle(spectrum)
    state.n += 1
    return state


def retrieve(power_spectrum, config=None, callback=None):
    """Recover a real, non-negative volume from its power spectrum.

    Runs HIO over ``config.betas()`` with ``iters_per_beta`` iterations per value,
    then ``er_iters`` iterations of error reduction continuing from the HIO result.
    The returned volume is a final error-reduction rectification of the last
    estimate, so it satisfies every enabled constraint.

    Returns
    -------
    volume : ndarray
    error_history : list of float
        Fourier error after every iteration, HIO first.
    """
    config = RetrievalConfig() if config is None else config
    P = check_volume(power_spectrum, "power_spectrum", non_negative=True)
    constraints = config.constraints.resolve(P)
    state = init_state(P, config)
    o_prime = state.o
    for beta in config.betas():
        for _ in range(config.iters_per_beta):
            iterate(state, constraints, beta)
            if callback is not None:
                callback(state, beta)
    for _ in range(config.er_iters):
        iterate(state, constraints, None)
        if callback is not None:
            callback(state, None)
    if state.n > 1:
        o_prime = state.o
    final = er_update(np.real(o_prime), violation_set(o_prime, constraints))
    return final, list(state.error_history)


class PhaseRetriever(BaseEstimator):
    """Estimator wrapper around :func:`retrieve`.

    ``fit`` takes a non-negative power spectrum ``X`` (3D) and stores the recovered
    volume in ``volume_``.  The default schedule runs HIO with beta stepping from
    2.0 to 0.0 by 0.05, ten iterations per value, then 500 error-reduction steps.

    Attributes
    ----------
    volume_ : ndarray
    error_history_ : ndarray
    n_iter_ : int
    n_hio_iter_ : int
    intensity_max_ : float or None
        Resolved upper intensity bound.
    """

    def __init__(
        self,
        beta_start=2.0,
        beta_end=0.0,
        beta_step=0.05,
        iters_per_beta=10,
        er_iters=500,
        realness=True,
        non_negativity=True,
        intensity_max="auto",
        random_state=0,
    ):
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.beta_step = beta_step
        self.iters_per_beta = iters_per_beta
        self.er_iters = er_iters
        self.realness = realness
        self.non_negativity = non_negativity
        self.intensity_max = intensity_max
        self.random_state = random_state

    def _config(self):
        return RetrievalConfig(
            beta_start=self.beta_start,
            beta_end=self.beta_end,
            beta_step=self.beta_step,
            iters_per_beta=self.iters_per_beta,
            er_iters=self.er_iters,
            seed=self.random_state,
            constraints=ConstraintSet(self.realness, self.non_negativity, self.intensity_max),
        )

    def fit(self, X, y=None):
        X = check_volume(X, "X", non_negative=True)
        config = self._config()
        volume, history = retrieve(X, config)
        self.volume_ = volume
        self.error_history_ = np.asarray(history)
        self.n_hio_iter_ = len(config.betas()) * config.iters_per_beta
        self.n_iter_ = self.n_hio_iter_ + config.er_iters
        self.intensity_max_ = config.constraints.resolve(X).intensity_max
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).volume_

    def score(self, X, y=None):
        """Negative Fourier error of the fitted volume against spectrum ``X``."""
        X = check_volume(X, "X", non_negative=True)
        return -fourier_error(self.volume_, np.sqrt(X))
