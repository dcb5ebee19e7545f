import numpy as np
import pytest
import scipy.special
from numpy.testing import assert_allclose

from learnmmse.channel import bessel_j0
from learnmmse.errors import InvalidArgumentError


@pytest.mark.parametrize(
    ("x", "expected"),
    [
        (0.0, 1.0),
        (1.0, 0.7651976865579666),
        (2.404825557695773, 0.0),
    ],
)
def test_known_values(x, expected):
    assert bessel_j0(x) == pytest.approx(expected, abs=1e-12)


def test_matches_reference_on_both_branches():
    x = np.linspace(-50, 50, 4001)
    assert_allclose(bessel_j0(x), scipy.special.j0(x), rtol=0, atol=1e-10)


@pytest.mark.parametrize("x", [11.999, 12.0, 12.001, 12.5, 30.0])
def test_branch_boundary(x):
    assert bessel_j0(x) == pytest.approx(scipy.special.j0(x), abs=1e-10)


def test_even_function():
    x = np.linspace(0, 40, 101)
    assert_allclose(bessel_j0(-x), bessel_j0(x), rtol=0, atol=0)


def test_shapes():
    assert isinstance(bessel_j0(3.0), float)
    assert bessel_j0(np.zeros((2, 3))).shape == (2, 3)


def test_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        bessel_j0(np.array([1.0, np.inf]))
