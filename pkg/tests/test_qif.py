import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from privcap import qif
from privcap.qif import (
    ChannelError,
    Safety,
    bayes_capacity_channel,
    bayes_capacity_gaussian,
    bayes_capacity_vmf,
    compare_safety,
    leakage,
    posterior_vulnerability,
    prior_vulnerability,
)
from privcap.rdp import GaussParams, MultiVmfParams, VmfParams
from privcap.specfn import DomainError

from _oracles import gaussian_capacity_quad, vmf_capacity_quad_p2


def cap(C):
    return bayes_capacity_channel(C).capacity


def random_channel(rng, n, m):
    C = rng.uniform(0.01, 1, (n, m))
    return C / C.sum(axis=1, keepdims=True)


def deterministic_onto(rng, n, m):
    """Deterministic n x m channel with every column hit (n >= m)."""
    f = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
    rng.shuffle(f)
    C = np.zeros((n, m))
    C[np.arange(n), f] = 1.0
    return C


def test_channel_examples():
    assert cap(np.eye(2)) == pytest.approx(2.0)
    assert cap([[1.0], [1.0]]) == 1.0
    assert cap([[0.7, 0.3], [0.2, 0.8]]) == pytest.approx(1.5)


def test_vulnerability_examples():
    u3 = np.full(3, 1 / 3)
    assert prior_vulnerability(u3) == pytest.approx(1 / 3)
    assert posterior_vulnerability(u3, np.eye(3)) == pytest.approx(1.0)
    assert leakage(u3, np.eye(3)) == pytest.approx(3.0)
    C = [[0.7, 0.3], [0.2, 0.8]]
    assert leakage([0.5, 0.5], C) == pytest.approx(1.5)
    assert leakage([1.0, 0.0], C) == 1.0


def test_malformed_inputs():
    with pytest.raises(ChannelError):
        bayes_capacity_channel([[0.5, 0.6]])
    with pytest.raises(ChannelError):
        bayes_capacity_channel([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ChannelError):
        bayes_capacity_channel([[-0.1, 1.1]])
    with pytest.raises(ChannelError):
        leakage([0.5, 0.5], np.eye(3))
    with pytest.raises(ChannelError):
        prior_vulnerability([0.5, 0.6])


@given(arrays(float, (4, 3), elements=st.floats(0.01, 1)), arrays(float, 4, elements=st.floats(0.01, 1)))
def test_leakage_bounded_by_capacity(M, w):
    C = M / M.sum(axis=1, keepdims=True)
    pi = w / w.sum()
    assert 1 - 1e-12 <= leakage(pi, C) <= cap(C) * (1 + 1e-12)
    assert cap(C) <= C.shape[0] + 1e-12


def test_gaussian_closed_form_p1():
    for sigma in (0.5, 1.0, 2.0):
        for r in (0.5, 1.0, 3.0):
            ref = 1 + math.sqrt(2 / math.pi) * r / sigma
            assert bayes_capacity_gaussian(1, sigma, r).capacity == pytest.approx(ref, rel=1e-12)
    theorem = bayes_capacity_gaussian(1, 1.0, 1.0, form="theorem").capacity
    assert theorem == pytest.approx(2 + math.sqrt(2 / math.pi), rel=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_gaussian_quadrature(p):
    for sigma in (0.5, 2.0):
        ref = gaussian_capacity_quad(p, sigma, 1.0)
        assert bayes_capacity_gaussian(p, sigma, 1.0).capacity == pytest.approx(ref, rel=1e-4)


def test_gaussian_large_sigma_leaks_nothing():
    logs = [bayes_capacity_gaussian(5, s, 1.0).log_capacity for s in (1e2, 1e4, 1e6)]
    assert logs[-1] < 1e-5 and all(b < a for a, b in zip(logs, logs[1:]))


def test_gaussian_overflow_reports_inf():
    c = bayes_capacity_gaussian(13700, 0.1, 1.0)
    assert math.isfinite(c.log_capacity) and c.capacity == math.inf


def test_vmf_examples(oracles):
    for p in (2, 3, 13700):
        assert bayes_capacity_vmf(p, 0.0).capacity == 1.0
    assert bayes_capacity_vmf(3, 1.0).capacity == pytest.approx(math.e / math.sinh(1), rel=1e-12)
    ref = oracles["vmf"]["log_capacity_p13700_k500"]
    assert bayes_capacity_vmf(13700, 500.0).log_capacity == pytest.approx(ref, rel=1e-8)
    assert bayes_capacity_vmf(2, 1.5).capacity == pytest.approx(vmf_capacity_quad_p2(1.5), rel=1e-8)


@given(st.integers(2, 20000), st.floats(1e-3, 1e4))
def test_vmf_capacity_at_least_one(p, kappa):
    c = bayes_capacity_vmf(p, kappa)
    assert c.log_capacity >= 0


def test_multi_block_capacity_multiplies():
    m = MultiVmfParams.from_pairs([(10, 3.0), (20, 5.0)])
    total = bayes_capacity_vmf(10, 3.0).log_capacity + bayes_capacity_vmf(20, 5.0).log_capacity
    assert qif.mechanism_capacity(m).log_capacity == pytest.approx(total)


def test_compare_safety():
    assert compare_safety(VmfParams(4, 0.0), GaussParams(3.0, p=4)) == Safety.SAFER
    assert compare_safety(VmfParams(4, 2.0), VmfParams(4, 2.0)) == Safety.EQUAL
    g, v = GaussParams(1.0, p=2, radius=1.0), VmfParams(2, 1.0)
    expected = Safety.SAFER if vmf_capacity_quad_p2(1.0) < gaussian_capacity_quad(2, 1.0, 1.0) else Safety.LESS_SAFE
    assert compare_safety(v, g) == expected
    opposite = {Safety.SAFER: Safety.LESS_SAFE, Safety.LESS_SAFE: Safety.SAFER}[expected]
    assert compare_safety(g, v) == opposite
    with pytest.raises(DomainError):
        compare_safety(VmfParams(3, 1.0), GaussParams(1.0, p=4))


def test_deterministic_preprocessing_keeps_capacity():
    rng = np.random.default_rng(0)
    D = random_channel(rng, 3, 4)
    C = deterministic_onto(rng, 6, 3)
    assert cap(C @ D) == pytest.approx(cap(D), abs=1e-12)
