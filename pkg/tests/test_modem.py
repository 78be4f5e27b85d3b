import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdxsim.errors import DimensionError
from fdxsim.modem import ber_count, qam16_demap, qam16_map, qam16_points, random_bits, slice_symbols


def q_function(x):
    return 0.5 * math.erfc(x / math.sqrt(2))


def gray_16qam_ber(n0):
    """Exact bit error probability of Gray 16-QAM with unit Es in complex AWGN."""
    a = (1 / math.sqrt(10)) / math.sqrt(n0 / 2)
    return (3 * q_function(a) + 2 * q_function(3 * a) - q_function(5 * a)) / 4


def test_zero_bits_map():
    assert qam16_map([0, 0, 0, 0])[0] == pytest.approx((1 + 1j) / math.sqrt(10))


def test_published_table():
    level = {(0, 0): 1, (0, 1): 3, (1, 0): -1, (1, 1): -3}
    points, labels = qam16_points()
    for p, (b0, b1, b2, b3) in zip(points, labels):
        assert p * math.sqrt(10) == pytest.approx(level[b0, b2] + 1j * level[b1, b3])


def test_unit_average_energy():
    points, _ = qam16_points()
    assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, abs=1e-15)


def test_gray_adjacency():
    points, labels = qam16_points()
    step = 2 / math.sqrt(10)
    for i in range(16):
        for j in range(i + 1, 16):
            if abs(abs(points[i] - points[j]) - step) < 1e-9:
                assert np.sum(labels[i] != labels[j]) == 1


def test_length_error():
    with pytest.raises(DimensionError):
        qam16_map([0, 1, 1])


def test_round_trip_all_points():
    points, labels = qam16_points()
    np.testing.assert_array_equal(qam16_demap(points), labels.reshape(-1))


def test_interior_perturbation(rng):
    points, labels = qam16_points()
    noisy = points + 1e-6 * np.exp(2j * np.pi * rng.random(16))
    np.testing.assert_array_equal(qam16_demap(noisy), labels.reshape(-1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=4, max_size=400).filter(lambda b: len(b) % 4 == 0))
def test_bijection(bits):
    np.testing.assert_array_equal(qam16_demap(qam16_map(bits)), bits)


def test_slice_is_nearest_point(rng):
    z = 2 * (rng.standard_normal(500) + 1j * rng.standard_normal(500))
    points, _ = qam16_points()
    nearest = points[np.argmin(np.abs(z[:, None] - points[None]), axis=1)]
    np.testing.assert_allclose(slice_symbols(z), nearest)


def test_awgn_ber_matches_closed_form():
    rng = np.random.default_rng(10)
    n0 = 10 ** (-10 / 10)
    bits = random_bits(rng, 400_000)
    noise = math.sqrt(n0 / 2) * (rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000))
    errors, total = ber_count(bits, qam16_demap(qam16_map(bits) + noise))
    assert errors / total == pytest.approx(gray_16qam_ber(n0), rel=0.10)


class TestBerCount:
    def test_identical(self):
        b = np.array([0, 1, 1, 0])
        assert ber_count(b, b) == (0, 4)

    def test_complement(self):
        b = np.array([0, 1, 1, 0, 1])
        assert ber_count(b, 1 - b) == (5, 5)

    def test_three_flips(self):
        b = np.zeros(40, dtype=np.int8)
        r = b.copy()
        r[[3, 17, 39]] = 1
        assert ber_count(b, r) == (3, 40)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            ber_count(np.zeros(4), np.zeros(5))
