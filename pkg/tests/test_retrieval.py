import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from speckletomo.evaluate import align_and_score
from speckletomo.grid import dft3, reflect
from speckletomo.retrieval import (
    ConstraintSet,
    PhaseRetriever,
    RetrievalConfig,
    er_update,
    fourier_error,
    hio_update,
    init_state,
    retrieve,
    violation_set,
)

FAST = dict(iters_per_beta=2, er_iters=60)


def point_object(shape, points):
    vol = np.zeros(shape)
    for z, y, x, v in points:
        vol[z, y, x] = v
    return vol


def spectrum_of(vol):
    return np.abs(dft3(vol)) ** 2


THREE_POINTS = point_object((5, 16, 16), [(2, 8, 8, 1.0), (1, 4, 11, 0.8), (3, 12, 5, 0.6)])


def test_constraint_set_validation():
    with pytest.raises(ValueError):
        ConstraintSet(False, False, None)
    with pytest.raises(ValueError):
        ConstraintSet(intensity_max=-1.0)
    assert ConstraintSet(intensity_max=2.0).resolve(np.ones((2, 2, 2))).intensity_max == 2.0
    assert ConstraintSet().resolve(np.full((2, 2, 2), 4.0)).intensity_max == 2.0


def test_retrieval_config_schedule():
    betas = RetrievalConfig().betas()
    assert len(betas) == 41
    assert betas[0] == 2.0 and betas[-1] == 0.0
    np.testing.assert_allclose(np.diff(betas), -0.05)
    assert len(RetrievalConfig(iters_per_beta=0).betas()) == 0
    with pytest.raises(ValueError):
        RetrievalConfig(beta_start=0.5, beta_end=1.0)
    with pytest.raises(ValueError):
        RetrievalConfig(beta_step=0.0)


def test_init_state_deterministic():
    P = spectrum_of(THREE_POINTS)
    a = init_state(P, RetrievalConfig(seed=4))
    b = init_state(P, RetrievalConfig(seed=4))
    assert np.array_equal(a.theta, b.theta)
    assert not np.array_equal(a.theta, init_state(P, RetrievalConfig(seed=5)).theta)
    assert a.n == 1
    np.testing.assert_array_equal(a.magnitude, np.sqrt(P))


def test_init_state_zero_spectrum():
    state = init_state(np.zeros((3, 4, 4)), RetrievalConfig())
    assert not np.any(state.o)


@pytest.mark.parametrize("shape", [(5, 16, 16), (4, 6, 7), (1, 1, 3)])
def test_initial_estimate_is_real(shape):
    P = spectrum_of(np.random.default_rng(0).random(shape))
    state = init_state(P, RetrievalConfig(seed=1))
    o_prime = dft3(state.spectrum(), inverse=True)
    assert np.abs(o_prime.imag).max() <= 1e-9 * np.abs(o_prime).max()
    np.testing.assert_allclose(state.theta, -reflect(state.theta), atol=1e-12)


def test_init_state_rejects_negative_spectrum():
    with pytest.raises(ValueError):
        init_state(-np.ones((2, 2, 2)), RetrievalConfig())


def test_violation_set_examples():
    c = ConstraintSet(intensity_max=2.0)
    assert not violation_set(np.full((2, 2, 2), 1.0), c).any()
    v = np.full((2, 2, 2), 1.0)
    v[1, 0, 1] = -1.0
    expected = np.zeros(v.shape, bool)
    expected[1, 0, 1] = True
    np.testing.assert_array_equal(violation_set(v, c), expected)


@settings(max_examples=40)
@given(arrays(np.float64, (3, 3, 4), elements=st.floats(-5, 5)), st.floats(0.1, 4))
def test_violation_set_matches_predicate(v, imax):
    for nonneg, bound in ((True, imax), (True, None), (False, imax)):
        c = ConstraintSet(True, nonneg, bound)
        mask = violation_set(v, c)
        for idx in np.ndindex(v.shape):
            bad = (nonneg and v[idx] < 0) or (bound is not None and v[idx] > bound)
            assert mask[idx] == bad


def test_er_update_examples():
    v = np.array([[[-1.0, 2.0], [3.0, -4.0]]])
    assert np.array_equal(er_update(v, np.zeros(v.shape, bool)), v)
    assert not er_update(v, np.ones(v.shape, bool)).any()
    np.testing.assert_array_equal(er_update(v, v < 0), [[[0.0, 2.0], [3.0, 0.0]]])
    with pytest.raises(ValueError):
        er_update(v, np.zeros((2, 2, 1), bool))


def test_hio_update_examples():
    o_prime = np.array([[[-2.0, 1.0]]])
    o_prev = np.array([[[5.0, 9.0]]])
    assert np.array_equal(hio_update(o_prime, o_prev, 0.9, np.zeros((1, 1, 2), bool)), o_prime)
    gamma = np.array([[[True, False]]])
    np.testing.assert_array_equal(hio_update(o_prime, o_prev, 0.0, gamma), [[[5.0, 1.0]]])
    np.testing.assert_array_equal(hio_update(o_prime, o_prev, 0.5, gamma), [[[6.0, 1.0]]])
    with pytest.raises(ValueError):
        hio_update(o_prime, np.zeros((1, 1, 3)), 0.5, gamma)


def test_fourier_error_examples():
    mag = np.abs(dft3(THREE_POINTS))
    assert fourier_error(THREE_POINTS, mag) < 1e-14
    assert fourier_error(np.zeros_like(THREE_POINTS), mag) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    o, m = rng.normal(size=(3, 4, 5)), rng.random((3, 4, 5))
    expected = np.sqrt(np.sum((np.abs(np.fft.fftn(o)) - m) ** 2) / np.sum(m**2))
    assert fourier_error(o, m) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        fourier_error(o, np.zeros_like(m))


def test_retrieve_single_point():
    truth = point_object((5, 8, 8), [(2, 4, 4, 1.0)])
    P = spectrum_of(truth)
    volume, history = retrieve(P, RetrievalConfig(seed=0, **FAST))
    assert fourier_error(volume, np.sqrt(P)) <= 1e-6
    assert np.count_nonzero(volume > 1e-6) == 1
    assert align_and_score(volume, truth).best_ncc == pytest.approx(1.0)


def test_retrieve_degenerate_schedule_returns_rectified_start():
    P = spectrum_of(THREE_POINTS)
    config = RetrievalConfig(iters_per_beta=0, er_iters=0, seed=2)
    volume, history = retrieve(P, config)
    start = init_state(P, config).o
    bound = np.sqrt(P.mean())
    np.testing.assert_array_equal(volume, np.where((start < 0) | (start > bound), 0.0, start))
    assert history == []


@pytest.mark.parametrize("seed", range(4))
def test_retrieve_recovers_three_point_object(seed):
    volume, history = retrieve(spectrum_of(THREE_POINTS), RetrievalConfig(seed=seed))
    assert align_and_score(volume, THREE_POINTS).best_ncc >= 0.95
    assert history[-1] <= 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_error_reduction_is_monotone(seed):
    P = spectrum_of(np.random.default_rng(seed).random((3, 8, 8)) < 0.1)
    config = RetrievalConfig(seed=seed, iters_per_beta=1, er_iters=200)
    _, history = retrieve(P, config)
    er = np.asarray(history[len(config.betas()) :])
    assert np.all(np.diff(er) <= 1e-10)


def test_retrieve_preserves_magnitude_and_feasibility():
    P = spectrum_of(THREE_POINTS)
    target = np.sqrt(P)
    seen = []

    def check(state, beta):
        seen.append(np.array_equal(state.magnitude, target))
        assert not state.magnitude.flags.writeable

    volume, _ = retrieve(P, RetrievalConfig(seed=1, **FAST), callback=check)
    assert all(seen) and len(seen) == 41 * 2 + 60
    bound = np.sqrt(P.mean())
    assert volume.min() >= 0 and volume.max() <= bound
    assert np.isrealobj(volume)


def test_retrieve_deterministic_per_seed():
    P = spectrum_of(THREE_POINTS)
    a, ha = retrieve(P, RetrievalConfig(seed=9, **FAST))
    b, hb = retrieve(P, RetrievalConfig(seed=9, **FAST))
    assert np.array_equal(a, b) and ha == hb


@pytest.mark.parametrize("shift", [(0, 0, 0), (1, -3, 5), (-2, 7, -1)])
def test_spectrum_is_blind_to_orbit(shift):
    moved = np.roll(THREE_POINTS, shift, axis=(0, 1, 2))
    np.testing.assert_allclose(spectrum_of(moved), spectrum_of(THREE_POINTS), atol=1e-12)
    np.testing.assert_allclose(spectrum_of(reflect(moved)), spectrum_of(THREE_POINTS), atol=1e-12)


def test_phase_retriever_estimator_api():
    est = PhaseRetriever(random_state=3, **FAST)
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    P = spectrum_of(THREE_POINTS)
    volume = est.fit_transform(P)
    assert volume.shape == P.shape
    assert est.n_hio_iter_ == 82 and est.n_iter_ == 142
    assert len(est.error_history_) == est.n_iter_
    assert est.intensity_max_ == pytest.approx(np.sqrt(P.mean()))
    assert est.score(P) == pytest.approx(-fourier_error(volume, np.sqrt(P)))


def test_phase_retriever_in_pipeline():
    from sklearn.preprocessing import FunctionTransformer

    pipe = Pipeline([("square", FunctionTransformer(spectrum_of)), ("retrieve", PhaseRetriever(**FAST))])
    volume = pipe.fit_transform(THREE_POINTS)
    assert volume.shape == THREE_POINTS.shape
