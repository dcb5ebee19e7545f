import numpy as np
import pytest
from numpy.testing import assert_allclose

import learnmmse.estimators.cnn as cnn_module
from learnmmse.dataset import TrainStream, synthesize_cluster_channels
from learnmmse.dataset.streams import ItemTable
from learnmmse.errors import InvalidArgumentError
from learnmmse.estimators.cnn import *
from learnmmse.lmmse import nmse
from learnmmse.predictors.structured import QMode, chat, make_q, reconstruct
from learnmmse.training import TrainConfig


def observations(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_cnn(rng, K):
    return CNNParams(
        a1=rng.uniform(0, 1, K),
        a2=rng.standard_normal(K),
        b1=rng.standard_normal(K),
        b2=0.1 * rng.standard_normal(K),
    )


@pytest.fixture
def channel_stream():
    channels = synthesize_cluster_channels(120, 4, seed=3)
    return TrainStream(ItemTable({"channel": channels}), batch_size=20)


def test_circular_conv(rng):
    u, v = rng.standard_normal(6), rng.standard_normal(6)

    assert_allclose(circular_conv(np.eye(6)[0], v), v, atol=1e-12)
    assert_allclose(circular_conv(u, v), circular_conv(v, u), atol=1e-12)

    direct = [sum(u[k] * v[(n - k) % 6] for k in range(6)) for n in range(6)]
    assert_allclose(circular_conv(u, v), direct, atol=1e-12)

    with pytest.raises(InvalidArgumentError):
        circular_conv(u, v[:5])


def test_reverse_and_correlation(rng):
    u, v = rng.standard_normal(5), rng.standard_normal(5)
    assert_allclose(reverse(reverse(u)), u)

    direct = [sum(u[n] * v[(n - j) % 5] for n in range(5)) for j in range(5)]
    assert_allclose(circular_corr(u, v), direct, atol=1e-12)


def test_spectral_filter():
    assert_allclose(spectral_filter(np.ones(3), 1.0), np.full(3, 0.5))
    assert_allclose(spectral_filter(np.ones(3), 1e12), 0, atol=1e-11)

    with pytest.raises(InvalidArgumentError):
        spectral_filter(np.ones(3), 0.0)


@pytest.mark.parametrize(("mode", "M"), [(QMode.CIRCULANT, 8), (QMode.TOEPLITZ, 4)])
def test_spectral_grid_is_shift_invariant(mode, M):
    grid = build_spectral_grid(M, mode, noise_var=0.5)
    K = grid.K

    assert grid.spectra.shape == grid.filters.shape == (K, K)
    assert_allclose(grid.spectra, M * (K // M) * np.eye(K), atol=1e-8)
    for i in range(K):
        assert_allclose(grid.filters[i], np.roll(grid.filters[0], i), atol=1e-10)

    assert np.all((grid.filters >= 0) & (grid.filters < 1))
    assert np.all(np.isfinite(grid.biases))


def test_circulant_grid_biases():
    grid = build_spectral_grid(4, QMode.CIRCULANT, noise_var=2.0)
    assert_allclose(grid.biases, np.full(4, np.log(2.0 / 6.0)), atol=1e-10)


def test_estimate_nolearn(rng):
    q = make_q(QMode.CIRCULANT, 6)
    params = NoLearnParams.from_grid(build_spectral_grid(6, q.mode, noise_var=0.5, q=q))
    y = observations(rng, 10, 6)

    silent = NoLearnParams(w0=np.zeros(6), bias=params.bias)
    assert_allclose(estimate_nolearn(silent, q, y, 0.5), 0)

    weights = spectral_weights(params, chat(y, q, 0.5))
    assert np.all(weights >= -1e-12)
    assert np.all(weights <= np.max(params.w0) + 1e-12)

    with pytest.raises(InvalidArgumentError):
        estimate_nolearn(params, q, y[:, :5], 0.5)


def test_nolearn_recovers_grid_aligned_channels(rng):
    M, noise_var = 8, 1e-4
    q = make_q(QMode.CIRCULANT, M)
    params = NoLearnParams.from_grid(build_spectral_grid(M, q.mode, noise_var, q=q))

    index = rng.integers(M, size=100)
    phase = np.exp(2j * np.pi * rng.uniform(size=(100, 1)))
    h = phase * np.exp(2j * np.pi * np.outer(index, np.arange(M)) / M)
    y = h + np.sqrt(noise_var / 2) * observations(rng, 100, M)

    assert nmse(h, estimate_nolearn(params, q, y, noise_var)) < 1e-2


@pytest.mark.parametrize("mode", list(QMode))
def test_initialization_equivalence(mode, rng):
    q = make_q(mode, 4)
    nolearn = NoLearnParams.from_grid(build_spectral_grid(4, mode, noise_var=0.3, q=q))
    params = CNNParams.from_nolearn(nolearn)

    assert_allclose(params.b2, 0)
    y = observations(rng, 1000, 4)
    assert_allclose(
        cnn_estimate(params, q, y, 0.3), estimate_nolearn(nolearn, q, y, 0.3), rtol=0, atol=1e-12
    )


@pytest.mark.parametrize("mode", list(QMode))
def test_fixed_filter_and_dense_path(mode, rng):
    q = make_q(mode, 4)
    y = observations(rng, 5, 4)

    v = rng.uniform(size=q.K)
    fixed = CNNParams(a1=np.zeros(q.K), a2=np.ones(q.K), b1=np.zeros(q.K), b2=v)
    assert_allclose(cnn_estimate(fixed, q, y, 0.7), y @ reconstruct(v, q).T, atol=1e-12)

    params = random_cnn(rng, q.K)
    weights = cnn_spectral_weights(params, chat(y, q, 0.7))
    dense = np.stack([reconstruct(w, q) @ yb for w, yb in zip(weights, y)])
    assert_allclose(cnn_estimate(params, q, y, 0.7), dense, atol=1e-10)


def test_cnn_loss(rng):
    q = make_q(QMode.CIRCULANT, 4)
    params = random_cnn(rng, 4)
    y = observations(rng, 6, 4)

    estimate = cnn_estimate(params, q, y, 0.5)
    assert cnn_loss(params, q, EstimationBatch(y=y, h=estimate), 0.5) == pytest.approx(0, abs=1e-20)

    offset = EstimationBatch(y=y, h=estimate + np.array([1, 1j, 0, 0]))
    assert cnn_loss(params, q, offset, 0.5) == pytest.approx(2.0)


def numeric_gradient(params, q, batch, noise_var, step=1e-5):
    gradient = params.zeros_like()
    for name, values in params.arrays().items():
        target = gradient.arrays()[name]
        for index in range(len(values)):
            original = values[index]
            values[index] = original + step
            upper = cnn_loss(params, q, batch, noise_var)
            values[index] = original - step
            lower = cnn_loss(params, q, batch, noise_var)
            values[index] = original
            target[index] = (upper - lower) / (2 * step)
    return gradient


@pytest.mark.parametrize(
    ("mode", "M"),
    [(QMode.CIRCULANT, 4), (QMode.CIRCULANT, 7), (QMode.TOEPLITZ, 3), (QMode.TOEPLITZ, 4)],
)
def test_gradient_matches_finite_differences(mode, M, rng):
    q = make_q(mode, M)
    params = random_cnn(rng, q.K)
    batch = EstimationBatch(y=observations(rng, 5, M), h=observations(rng, 5, M))

    analytic = cnn_backward(params, q, batch, 2.0).arrays()
    numeric = numeric_gradient(params, q, batch, 2.0).arrays()
    for name in analytic:
        deviation = np.linalg.norm(analytic[name] - numeric[name])
        assert deviation <= 1e-5 * np.linalg.norm(numeric[name]) + 1e-9, name


def test_noisy_estimation_batches(channel_stream, rng):
    data = NoisyEstimationBatches(channel_stream, noise_var=0.2, batch_size=40)
    batches = list(data.batches(rng))

    assert [len(b) for b in batches] == [40, 40, 40]
    assert batches[0].y.shape == batches[0].h.shape == (40, 4)
    assert not np.allclose(batches[0].y, batches[0].h)


def test_cnn_train_never_ends_worse(channel_stream):
    q = make_q(QMode.CIRCULANT, 4)
    p0 = CNNParams.from_nolearn(NoLearnParams.from_grid(build_spectral_grid(4, q.mode, 0.5, q=q)))
    data = NoisyEstimationBatches(channel_stream, noise_var=0.5)

    unchanged, trace = cnn_train(p0, data, TrainConfig(epochs=0), q)
    assert len(trace) == 1
    assert np.array_equal(unchanged.a1, p0.a1)

    trained, trace = cnn_train(p0, data, TrainConfig(epochs=3, learning_rate=1e-2), q)
    assert min(trace) <= trace[0]
    assert trained.is_finite()


def test_train_hierarchy_runs_from_high_to_low_snr(channel_stream, mocker):
    q = make_q(QMode.CIRCULANT, 4)
    spy = mocker.spy(cnn_module, "cnn_train")

    trained = train_hierarchy(channel_stream, q, [0.0, 10.0, 5.0], TrainConfig(epochs=1))

    assert len(trained) == 3
    assert all(isinstance(p, CNNParams) and p.K == 4 for p in trained)

    noise_vars = [call.args[1].noise_var for call in spy.call_args_list]
    assert_allclose(noise_vars, [0.1, 10 ** -0.5, 1.0])
    assert [call.kwargs["stage"] for call in spy.call_args_list] == [0, 1, 2]


def test_cnn_params_validation():
    with pytest.raises(InvalidArgumentError):
        CNNParams(a1=np.zeros(3), a2=np.zeros(4), b1=np.zeros(3), b2=np.zeros(3))
