import numpy as np
import pytest
from numpy.testing import assert_allclose

from learnmmse.dataset import *
from learnmmse.errors import (
    BadMagicError,
    InsufficientDataError,
    InvalidArgumentError,
    TruncatedPayloadError,
    VersionMismatchError,
    ZeroPowerError,
)


def channels(rng, count=5, dim=3):
    return rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))


def test_channel_file_round_trip(tmp_path, rng):
    h = channels(rng)
    path = save_channels(tmp_path / "h.chn", h)

    assert path.stat().st_size == 14 + 16 * 15
    assert np.array_equal(load_channels(path), h)

    header = read_header(path)
    assert (header.version, header.count, header.dim) == (1, 5, 3)


def test_empty_channel_file(tmp_path):
    path = save_channels(tmp_path / "empty.chn", np.zeros((0, 4), dtype=complex))
    assert load_channels(path).shape == (0, 4)


def test_channel_file_layout(tmp_path):
    path = save_channels(tmp_path / "one.chn", np.array([[1 - 2j]]))
    data = path.read_bytes()

    assert data[:4] == b"CHN1"
    assert data[4:6] == (1).to_bytes(2, "little")
    assert data[6:10] == (1).to_bytes(4, "little")
    assert data[10:14] == (1).to_bytes(4, "little")
    assert np.frombuffer(data[14:], dtype="<f8").tolist() == [1.0, -2.0]


def test_bad_magic(tmp_path, rng):
    path = save_channels(tmp_path / "h.chn", channels(rng))
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])

    with pytest.raises(BadMagicError) as exc:
        load_channels(path)
    assert exc.value.offset == 0


def test_version_mismatch(tmp_path, rng):
    path = save_channels(tmp_path / "h.chn", channels(rng))
    data = path.read_bytes()
    path.write_bytes(data[:4] + (2).to_bytes(2, "little") + data[6:])

    with pytest.raises(VersionMismatchError) as exc:
        load_channels(path)
    assert exc.value.offset == 4


def test_truncated_payload(tmp_path, rng):
    path = save_channels(tmp_path / "h.chn", channels(rng))
    data = path.read_bytes()[:-8]
    path.write_bytes(data)

    with pytest.raises(TruncatedPayloadError) as exc:
        load_channels(path)
    assert exc.value.offset == len(data)

    path.write_bytes(data[:9])
    with pytest.raises(TruncatedPayloadError):
        load_channels(path)


def test_trailing_bytes(tmp_path, rng):
    path = save_channels(tmp_path / "h.chn", channels(rng))
    path.write_bytes(path.read_bytes() + b"\0")

    with pytest.raises(TruncatedPayloadError) as exc:
        load_channels(path)
    assert exc.value.offset == 14 + 16 * 15


def test_save_requires_a_matrix(tmp_path):
    with pytest.raises(InvalidArgumentError):
        save_channels(tmp_path / "h.chn", np.ones(3))


def test_normalize(rng):
    h = channels(rng, 50, 4)

    scaled = normalize(h, 4.0)
    assert np.mean(np.sum(np.abs(scaled) ** 2, axis=1)) == pytest.approx(4.0)
    assert_allclose(normalize(scaled, 4.0), scaled)
    assert_allclose(scaled / h, np.full(h.shape, scaled[0, 0] / h[0, 0]))

    with pytest.raises(ZeroPowerError):
        normalize(np.zeros((3, 2)), 1.0)
    with pytest.raises(InvalidArgumentError):
        normalize(h, 0.0)


@pytest.mark.parametrize(
    ("length", "M", "l", "overlap", "expected"),
    [
        (10, 3, 2, False, 2),
        (4, 3, 2, False, 0),
        (10, 3, 2, True, 6),
        (5, 4, 1, False, 1),
    ],
)
def test_window_count(length, M, l, overlap, expected):
    items = window_trajectory(np.arange(length), M, l, overlap=overlap)
    assert len(items) == expected
    assert items["block"].shape == (expected, M + l)


def test_window_contents():
    items = window_trajectory(np.arange(10.0), 3, 2)

    assert_allclose(items["block"][1], [5, 6, 7, 8, 9])
    assert_allclose(items["observation"][1], [7, 6, 5])
    assert_allclose(items["target"], [4, 9])

    with pytest.raises(InvalidArgumentError):
        window_trajectory(np.arange(10.0), 0, 2)


def test_split_and_batch():
    items = ItemTable({"channel": np.arange(30.0)})
    spec = SplitSpec(train_batches=2, train_batch_size=5, test_batches=3, test_batch_size=4)

    train, test = split_and_batch(items, spec)
    assert (len(train), len(test)) == (10, 12)
    assert not set(train.items["channel"]) & set(test.items["channel"])

    again, _ = split_and_batch(items, spec)
    assert np.array_equal(again.items["channel"], train.items["channel"])

    with pytest.raises(InsufficientDataError):
        split_and_batch(ItemTable({"channel": np.arange(21.0)}), spec)


def test_split_spec_validation():
    with pytest.raises(InvalidArgumentError):
        SplitSpec(train_batches=0, train_batch_size=5, test_batches=1, test_batch_size=1)


def test_train_stream_shuffles_every_epoch(rng):
    stream = TrainStream(ItemTable({"channel": np.arange(12.0)}), batch_size=5)

    first = [batch["channel"] for batch in stream.batches(rng)]
    second = [batch["channel"] for batch in stream.batches(rng)]

    assert [len(b) for b in first] == [5, 5, 2]
    assert sorted(np.concatenate(first)) == list(range(12))
    assert sorted(np.concatenate(second)) == list(range(12))
    assert not np.array_equal(np.concatenate(first), np.concatenate(second))

    ordered = [batch["channel"] for batch in stream.batches(rng, shuffle=False, batch_size=6)]
    assert_allclose(np.concatenate(ordered), np.arange(12.0))
    assert len(ordered) == 2


def test_test_stream_keeps_its_order():
    stream = TestStream(ItemTable({"channel": np.arange(7.0)}), batch_size=3)
    batches = list(stream.batches())

    assert [len(b) for b in batches] == [3, 3, 1]
    assert_allclose(np.concatenate([b["channel"] for b in batches]), np.arange(7.0))


def test_item_table_columns_must_agree():
    with pytest.raises(InvalidArgumentError):
        ItemTable({"a": np.zeros(3), "b": np.zeros(4)})
    assert len(ItemTable()) == 0


def test_synthesize_trajectories(spec):
    items = synthesize_trajectories(6, 4, 2, spec, 3, seed=1)

    assert items["block"].shape == (6, 6)
    assert items["cov_perfect"].shape == items["cov_sp"].shape == (6, 6)
    assert_allclose(items["observation"], items["block"][:, 3::-1])
    assert_allclose(items["target"], items["block"][:, 5])
    assert_allclose(items["cov_sp"][:, 0].real, 1.0)

    again = synthesize_trajectories(6, 4, 2, spec, 3, seed=1)
    assert np.array_equal(again["block"], items["block"])


def test_ula_steering():
    steering = ula_steering(3, np.array([0.0, np.pi / 2]))
    assert_allclose(steering[0], np.ones(3))
    assert_allclose(steering[1], [1, -1, 1], atol=1e-12)


def test_synthesize_cluster_channels():
    h = synthesize_cluster_channels(40, 6, seed=2)

    assert h.shape == (40, 6)
    assert np.mean(np.sum(np.abs(h) ** 2, axis=1)) == pytest.approx(6.0)
    assert np.array_equal(synthesize_cluster_channels(40, 6, seed=2), h)
    assert synthesize_cluster_channels(0, 6).shape == (0, 6)
