import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privcap.rdp import (
    GaussParams,
    MultiVmfParams,
    VmfParams,
    gaussian_rdp,
    rdp_curve,
    vmf_rdp,
    vmf_rdp_multi,
)
from privcap.specfn import DomainError

from _oracles import vmf_renyi_quad


def mp_vmf_rdp(p, kappa, alpha):
    mp.mp.dps = 40
    nu, s, k = mp.mpf(p) / 2 - 1, 2 * mp.mpf(alpha) - 1, mp.mpf(kappa)
    return float((nu * mp.log(1 / s) + mp.log(mp.besseli(nu, s * k) / mp.besseli(nu, k))) / (alpha - 1))


def test_zero_kappa_is_zero():
    for p in [2, 3, 100, 13700]:
        assert vmf_rdp(VmfParams(p, 0.0), 2.0) == 0.0


def test_p2_value():
    ref = float(mp.log(mp.besseli(0, 3) / mp.besseli(0, 1)))
    assert vmf_rdp(VmfParams(2, 1.0), 2.0) == pytest.approx(ref, rel=1e-13)


def test_alpha_one_kl_bound():
    par = VmfParams(3, 2.0)
    # 2 kappa I_{3/2}/I_{1/2} = 2 kappa (coth kappa - 1/kappa)
    assert vmf_rdp(par, 1.0) == pytest.approx(2 * 2.0 * (1 / math.tanh(2.0) - 0.5), rel=1e-12)


def test_golden_curve(oracles):
    par = VmfParams(13700, 75.0)
    for a, ref in oracles["vmf"]["rdp_p13700_k75"]:
        assert vmf_rdp(par, a) == pytest.approx(ref, rel=1e-8)


def test_vectorised_curve_matches_scalar():
    curve = rdp_curve(VmfParams(13700, 150.0))
    alphas = np.geomspace(1 + 1e-6, 1e6, 200)
    np.testing.assert_allclose(curve.values(alphas), [curve(a) for a in alphas], rtol=1e-12)


def test_multi_block():
    a = 2.0
    single = VmfParams(500, 30.0)
    assert vmf_rdp_multi(MultiVmfParams((single,)), a) == vmf_rdp(single, a)
    two = MultiVmfParams((single, single))
    assert vmf_rdp_multi(two, a) == pytest.approx(2 * vmf_rdp(single, a), rel=1e-15)
    blocks = MultiVmfParams.from_pairs([(100, 50.0), (200, 50.0)])
    ref = mp_vmf_rdp(100, 50, 2) + mp_vmf_rdp(200, 50, 2)
    assert vmf_rdp_multi(blocks, 2.0) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(DomainError):
        vmf_rdp_multi(blocks, 1.0)


def test_gaussian_examples():
    assert gaussian_rdp(GaussParams(1.0), 2.0) == 1.0
    assert gaussian_rdp(GaussParams(2.0), 1.0) == 0.125
    assert gaussian_rdp(GaussParams(1.23), 64.0) == pytest.approx(64 / (2 * 1.23**2), rel=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        vmf_rdp(VmfParams(3, 1.0), 0.5)
    with pytest.raises(DomainError):
        VmfParams(1, 1.0)
    with pytest.raises(DomainError):
        VmfParams(3, -1.0)
    with pytest.raises(DomainError):
        GaussParams(0.0)


@given(st.integers(2, 20000), st.floats(0.01, 500))
def test_nondecreasing_in_alpha(p, kappa):
    curve = rdp_curve(VmfParams(p, kappa))
    vals = curve.values(np.geomspace(1.0001, 1e4, 60))
    assert np.all(np.diff(vals) >= -1e-12 * np.maximum(1, vals[1:]))
    assert np.all(vals >= 0)


@given(st.floats(0.1, 200), st.floats(1.01, 100))
def test_nonincreasing_in_dimension(kappa, alpha):
    vals = [vmf_rdp(VmfParams(p, kappa), alpha) for p in [2, 3, 10, 100, 1000, 13700]]
    assert all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(vals, vals[1:]))


@given(st.lists(st.integers(2, 300), min_size=2, max_size=8), st.floats(1, 300), st.floats(1.1, 64))
def test_flatten_is_best(sizes, kappa, alpha):
    multi = MultiVmfParams(tuple(VmfParams(p, kappa) for p in sizes))
    flat = vmf_rdp(VmfParams(sum(sizes), kappa), alpha)
    assert vmf_rdp_multi(multi, alpha) >= flat * (1 - 1e-12)


@pytest.mark.parametrize("p,kappa,alpha", [(2, 1.0, 2.0), (2, 3.0, 1.5), (3, 2.0, 4.0), (3, 0.5, 2.5)])
def test_quadrature_oracle_antipodal(p, kappa, alpha):
    mu = np.eye(p)[0]
    ref = vmf_renyi_quad(p, kappa, alpha, mu, -mu)
    assert vmf_rdp(VmfParams(p, kappa), alpha) == pytest.approx(ref, rel=1e-4)
