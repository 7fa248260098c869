import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privcap import specfn
from privcap.specfn import (
    CancellationError,
    DomainError,
    bessel_ratio_consecutive,
    log_ball_volume,
    log_bessel_i,
    log_bessel_ratio,
    log_gamma,
    log_sphere_area,
    log_sum_exp,
    log_sum_exp_positive,
)


def test_log_gamma_identities():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(0.5723649429247001, rel=1e-15)
    with pytest.raises(DomainError):
        log_gamma(0.0)


def test_log_gamma_oracle(oracles):
    for x, ref in oracles["log_gamma"]:
        assert abs(log_gamma(x) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_log_bessel_small_cases():
    assert log_bessel_i(0, 0) == 0.0
    assert log_bessel_i(2.5, 0) == -math.inf
    assert log_bessel_i(0, 1) == pytest.approx(float(mp.log(mp.besseli(0, 1))), rel=1e-14)
    with pytest.raises(DomainError):
        log_bessel_i(-1, 1)
    with pytest.raises(DomainError):
        log_bessel_i(1, -1)


def test_log_bessel_oracle_golden(oracles):
    rows = {(nu, x): v for nu, x, v in oracles["log_bessel_i"]}
    ref = rows[(6849.0, 300.0)]
    assert abs(log_bessel_i(6849, 300) - ref) <= 1e-10 * abs(ref)


def test_log_bessel_half_integer_closed_form():
    # I_{1/2}(x) = sqrt(2/(pi x)) sinh x
    for x in [1e-3, 0.7, 5.0, 60.0, 700.0]:
        ref = 0.5 * math.log(2 / (math.pi * x)) + float(mp.log(mp.sinh(x)))
        assert log_bessel_i(0.5, x) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("nu", [0.0, 0.5, 3.0, 39.5, 40.0, 500.0, 6849.0])
def test_log_bessel_increasing_in_x(nu):
    xs = np.geomspace(1e-5, 1e4, 400)
    vals = [log_bessel_i(nu, x) for x in xs]
    assert np.all(np.diff(vals) > 0)


def test_log_bessel_vec_matches_scalar():
    xs = np.geomspace(1e-3, 1e4, 300)
    for nu in [0.0, 10.0, 6849.0]:
        vec = specfn.log_bessel_i_vec(nu, xs)
        ref = np.array([log_bessel_i(nu, x) for x in xs])
        np.testing.assert_allclose(vec, ref, rtol=1e-13, atol=1e-13)


def test_log_bessel_ratio_examples():
    assert log_bessel_ratio(2, 5, 5) == 0.0
    ref = float(mp.log(mp.besseli(0, 3) / mp.besseli(0, 1)))
    assert log_bessel_ratio(0, 3, 1) == pytest.approx(ref, rel=1e-13)
    assert log_bessel_ratio(1, 0, 0, arg_ratio=3.0) == pytest.approx(math.log(3.0))
    with pytest.raises(DomainError):
        log_bessel_ratio(1, 2.0, 0.0)


def test_bessel_ratio_consecutive_examples():
    closed = (math.cosh(1) - math.sinh(1)) / math.sinh(1)
    assert bessel_ratio_consecutive(0.5, 1.0) == pytest.approx(closed, rel=1e-12)
    assert bessel_ratio_consecutive(0.0, 1e-8) == pytest.approx(5e-9, rel=1e-6)
    mp.mp.dps = 40
    ref = float(mp.besseli(6850, 300) / mp.besseli(6849, 300))
    assert bessel_ratio_consecutive(6849, 300) == pytest.approx(ref, rel=1e-10)


@given(st.floats(0, 7000), st.floats(1e-6, 1e4))
def test_bessel_ratio_in_unit_interval(nu, x):
    r = bessel_ratio_consecutive(nu, x)
    assert 0 < r < 1


@pytest.mark.parametrize("nu", [0.0, 1.5, 100.0, 6849.0])
def test_bessel_ratio_increasing(nu):
    xs = np.geomspace(1e-3, 1e4, 200)
    r = [bessel_ratio_consecutive(nu, x) for x in xs]
    assert np.all(np.diff(r) >= 0)


def test_sphere_and_ball():
    assert log_sphere_area(2) == pytest.approx(math.log(2 * math.pi))
    assert log_sphere_area(1) == pytest.approx(math.log(2))
    assert log_ball_volume(3) == pytest.approx(math.log(4 * math.pi / 3))


@given(st.integers(1, 20000), st.floats(0.01, 100))
def test_ball_volume_scaling(p, r):
    lhs = log_ball_volume(p, r) - log_ball_volume(p, 1.0)
    assert lhs == pytest.approx(p * math.log(r), rel=1e-10, abs=1e-10)


def test_log_sum_exp_examples():
    assert log_sum_exp([0.0, 0.0])[0] == pytest.approx(math.log(2))
    assert log_sum_exp([math.log(1000), 0.0])[0] == pytest.approx(math.log(1001))
    assert log_sum_exp([3.25]) == (3.25, 1)
    assert log_sum_exp([1.0, 1.0], [1, -1]) == (-math.inf, 0)
    with pytest.raises(CancellationError):
        log_sum_exp_positive([1.0, 1.0], [1, -1])


def test_log_sum_exp_random_oracle():
    rng = np.random.default_rng(3)
    terms = rng.uniform(-50, 50, 100)
    signs = rng.choice([-1, 1], 100)
    signs[np.argmax(terms)] = 1
    mp.mp.dps = 60
    ref = mp.fsum(int(s) * mp.exp(mp.mpf(float(t))) for t, s in zip(terms, signs))
    val, sign = log_sum_exp(terms, signs)
    assert sign == 1
    assert val == pytest.approx(float(mp.log(ref)), rel=1e-12)


@given(st.lists(st.floats(-700, 700), min_size=1, max_size=30))
def test_log_sum_exp_bounds(terms):
    val, sign = log_sum_exp(terms)
    assert sign == 1
    assert max(terms) - 1e-12 <= val <= max(terms) + math.log(len(terms)) + 1e-12
