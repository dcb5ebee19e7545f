import numpy as np
import pytest
from numpy.testing import assert_allclose

from learnmmse.dataset import TrainStream, synthesize_trajectories
from learnmmse.errors import InvalidArgumentError
from learnmmse.predictors import build_prior_grid, make_q, structured_params
from learnmmse.predictors.network import *
from learnmmse.predictors.structured import QMode, StructuredParams, chat, structured_predict
from learnmmse.training import TrainConfig


def random_params(rng, M=3, K=6, n_grid=5):
    return NNParams(
        A1=rng.standard_normal((n_grid, K)),
        b1=rng.standard_normal(n_grid),
        A2=rng.standard_normal((2 * M, n_grid)),
        b2=rng.standard_normal(2 * M),
    )


def random_batch(rng, M=3, K=6, B=7):
    return PredictionBatch(
        c=rng.uniform(0, 2, size=(B, K)),
        y=rng.standard_normal((B, M)) + 1j * rng.standard_normal((B, M)),
        target=rng.standard_normal(B) + 1j * rng.standard_normal(B),
    )


def random_structured(rng, M=4, K=8, n_grid=6):
    return StructuredParams(
        A1=rng.standard_normal((n_grid, K)),
        A2=rng.standard_normal((M, n_grid)) + 1j * rng.standard_normal((M, n_grid)),
        b=rng.standard_normal(n_grid),
    )


@pytest.fixture
def training_data(spec):
    q = make_q(QMode.TOEPLITZ, 4)
    _, bank = build_prior_grid(8, spec, M=4, l=1, noise_var=0.1)
    structured = structured_params(bank, q)

    stream = TrainStream(synthesize_trajectories(200, 4, 1, spec, 3, seed=5), batch_size=20)
    return structured, NoisyPredictionBatches(stream, noise_var=0.1, q=q)


def test_init_from_structured(rng):
    structured = random_structured(rng)
    p = init_from_structured(structured)

    assert p.A2.shape == (8, 6)
    assert (p.n_grid, p.K, p.M) == (6, 8, 4)
    assert np.all(p.b2 == 0)
    assert_allclose(p.A1, structured.A1)
    assert_allclose(p.b1, structured.b)


def test_initialization_equivalence(rng):
    structured = random_structured(rng)
    p = init_from_structured(structured)

    c = rng.uniform(0, 10, size=(1000, 8))
    y = rng.standard_normal((1000, 4)) + 1j * rng.standard_normal((1000, 4))
    assert_allclose(predict(p, c, y), structured_predict(structured, c, y), rtol=0, atol=1e-12)


def test_initialization_equivalence_on_the_prior_grid(spec, rng):
    q = make_q(QMode.CIRCULANT, 4)
    _, bank = build_prior_grid(4, spec, M=4, l=1, noise_var=0.3)
    structured = structured_params(bank, q)

    y = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
    c = chat(y, q, 0.3)
    assert_allclose(
        predict(init_from_structured(structured), c, y),
        structured_predict(structured, c, y),
        rtol=0,
        atol=1e-12,
    )


def test_forward(rng):
    p = random_params(rng)
    c = rng.uniform(size=6)

    silent = NNParams(A1=p.A1, b1=p.b1, A2=np.zeros_like(p.A2), b2=np.arange(6.0))
    assert_allclose(forward(silent, c), np.arange(6.0))

    shifted = NNParams(A1=p.A1, b1=p.b1 + 7.5, A2=p.A2, b2=p.b2)
    assert_allclose(forward(shifted, c), forward(p, c), atol=1e-12)

    logits = p.A1 @ c + p.b1
    gate = np.exp(logits) / np.sum(np.exp(logits))
    assert_allclose(forward(p, c), p.A2 @ gate + p.b2, atol=1e-12)

    with pytest.raises(InvalidArgumentError):
        forward(p, np.zeros(5))


def test_predict(rng):
    p = random_params(rng)
    c = rng.uniform(size=6)
    y1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    y2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)

    assert predict(p, c, np.zeros(3)) == 0
    assert predict(p, c, 2 * y1 - 1j * y2) == pytest.approx(
        2 * predict(p, c, y1) - 1j * predict(p, c, y2)
    )

    output = forward(p, c)
    assert predict(p, c, y1) == pytest.approx(np.sum((output[:3] + 1j * output[3:]) * y1))


def test_loss(rng):
    p = random_params(rng)
    batch = random_batch(rng)

    perfect = PredictionBatch(c=batch.c, y=batch.y, target=predict(p, batch.c, batch.y))
    assert loss(p, perfect) == pytest.approx(0.0, abs=1e-20)

    off = PredictionBatch(
        c=batch.c[:1], y=batch.y[:1], target=predict(p, batch.c[:1], batch.y[:1]) - (1 + 1j)
    )
    assert loss(p, off) == pytest.approx(2.0)


def numeric_gradient(p, batch, step=1e-5):
    gradient = p.zeros_like()
    for name, values in p.arrays().items():
        target = gradient.arrays()[name]
        for index in np.ndindex(values.shape):
            original = values[index]
            values[index] = original + step
            upper = loss(p, batch)
            values[index] = original - step
            lower = loss(p, batch)
            values[index] = original
            target[index] = (upper - lower) / (2 * step)
    return gradient


@pytest.mark.parametrize(("M", "K", "n_grid"), [(1, 2, 1), (3, 6, 5), (4, 8, 8)])
def test_gradient_matches_finite_differences(M, K, n_grid, rng):
    p = random_params(rng, M=M, K=K, n_grid=n_grid)
    batch = random_batch(rng, M=M, K=K)

    analytic = backward(p, batch).arrays()
    numeric = numeric_gradient(p, batch).arrays()
    for name in analytic:
        deviation = np.linalg.norm(analytic[name] - numeric[name])
        assert deviation <= 1e-5 * np.linalg.norm(numeric[name]) + 1e-9, name


def test_gradient_vanishes_at_a_perfect_fit(rng):
    p = random_params(rng)
    batch = random_batch(rng)
    perfect = PredictionBatch(c=batch.c, y=batch.y, target=predict(p, batch.c, batch.y))

    for name, gradient in backward(p, perfect).arrays().items():
        assert_allclose(gradient, 0, atol=1e-14, err_msg=name)


def test_noisy_batches(training_data, rng):
    _, data = training_data
    batches = list(data.batches(rng))

    assert len(batches) == 10
    assert all(len(batch) == 20 for batch in batches)
    assert_allclose(batches[0].c, chat(batches[0].y, data.q, data.noise_var))


def test_zero_epochs_keep_the_initialization(training_data):
    structured, data = training_data
    p0 = init_from_structured(structured)

    trained, trace = train(p0, data, TrainConfig(epochs=0))
    assert len(trace) == 1
    for name, values in trained.arrays().items():
        assert np.array_equal(values, p0.arrays()[name])


def test_training_never_ends_worse(training_data, mocker):
    structured, data = training_data
    p0 = init_from_structured(structured)
    spy = mocker.spy(NNObjective, "gradient")

    trained, trace = train(p0, data, TrainConfig(epochs=2, seed=3, plateau_epochs=0))
    assert spy.call_count == 2 * 10
    assert len(trace) == 3
    assert min(trace) <= trace[0]

    again, _ = train(p0, data, TrainConfig(epochs=2, seed=3, plateau_epochs=0))
    for name, values in trained.arrays().items():
        assert np.array_equal(values, again.arrays()[name])


def test_epoch_losses_do_not_climb(training_data):
    structured, data = training_data
    cfg = TrainConfig(epochs=10, learning_rate=1e-3, seed=1, plateau_epochs=0)

    _, trace = train(init_from_structured(structured), data, cfg)
    trace = np.array(trace)

    # entries are full training set losses under one fixed noise draw
    margin = 0.05
    assert len(trace) == 11
    assert np.all(trace[1:] <= trace[:-1] * (1 + margin))
    assert trace[-1] <= trace[0] * (1 + margin)


def test_invalid_shapes(rng):
    with pytest.raises(InvalidArgumentError):
        NNParams(A1=np.zeros((2, 3)), b1=np.zeros(3), A2=np.zeros((4, 2)), b2=np.zeros(4))
    with pytest.raises(InvalidArgumentError):
        NNParams(A1=np.zeros((2, 3)), b1=np.zeros(2), A2=np.zeros((3, 2)), b2=np.zeros(3))
