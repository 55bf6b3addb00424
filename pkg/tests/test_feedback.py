import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pu2rc.feedback import (
    SINR_CAP,
    Codebook,
    CodebookKind,
    Regime,
    SinrQuantizer,
    beam_rate,
    build_sinr_quantizer,
    ccdf_eps,
    ccdf_eps_upper_bound,
    decompose,
    elog_eps_bounds,
    make_reports,
    multibasis_codebook,
    quantize_shape,
    quantize_shapes,
    quantize_sinr,
    quantizer_from_range,
    rvq_codebook,
    sinr,
    sinr_array,
)
from pu2rc.numkernel import RandomStream, complex_gaussian, haar_unitaries


def identity_codebook(n_t=2):
    return Codebook(CodebookKind.MULTI_BASIS, np.eye(n_t, dtype=complex), 1)


# --- decomposition -------------------------------------------------------

def test_decompose_axis_aligned():
    ch = decompose([3, 0])
    assert ch.g == 3 and ch.rho == 9
    assert np.allclose(ch.s, [1, 0])


def test_decompose_diagonal():
    ch = decompose([1 + 0j, 1 + 0j])
    assert ch.g == pytest.approx(math.sqrt(2))
    assert ch.rho == pytest.approx(2)
    assert np.allclose(ch.s, [1 / math.sqrt(2)] * 2)


def test_decompose_round_trip():
    h = complex_gaussian(RandomStream(1, 0).generator(), (4,))
    ch = decompose(h)
    assert np.allclose(ch.g * ch.s, h, atol=1e-12)
    assert abs(np.linalg.norm(ch.s) - 1) < 1e-12
    assert ch.rho == pytest.approx(ch.g ** 2, rel=1e-14)


def test_decompose_zero():
    with pytest.raises(ValueError):
        decompose([0, 0])


# --- codebooks -----------------------------------------------------------

def test_multibasis_structure():
    cb = multibasis_codebook(RandomStream(2, 0).generator(), 4, 3)
    assert cb.size == 12 and cb.m == 3
    for m in range(3):
        b = cb.basis(m)
        assert np.allclose(b.conj().T @ b, np.eye(4), atol=1e-10)
    assert cb.split_index(7) == (1, 3)


def test_rvq_unit_norm():
    cb = rvq_codebook(RandomStream(2, 1).generator(), 4, 16)
    assert cb.size == 16
    assert np.allclose(np.linalg.norm(cb.vectors, axis=1), 1.0)


def test_codebook_json_round_trip():
    cb = multibasis_codebook(RandomStream(3, 0).generator(), 2, 2)
    back = Codebook.from_json(cb.to_json())
    assert back.kind == cb.kind and back.m == 2
    assert np.array_equal(back.vectors, cb.vectors)
    rvq = rvq_codebook(RandomStream(3, 1).generator(), 2, 4)
    assert np.array_equal(Codebook.from_json(rvq.to_json()).vectors, rvq.vectors)


def test_multibasis_size_check():
    with pytest.raises(ValueError):
        Codebook(CodebookKind.MULTI_BASIS, np.eye(2, dtype=complex), 2)


# --- shape quantizer -----------------------------------------------------

def test_quantize_exact_codeword():
    cb = multibasis_codebook(RandomStream(4, 0).generator(), 3, 2)
    r = quantize_shape(cb.vectors[4], cb)
    assert r.codeword_index == 4
    assert r.eps == pytest.approx(0.0, abs=1e-12)


def test_quantize_hand_example():
    r = quantize_shape([math.sqrt(0.9), math.sqrt(0.1)], identity_codebook())
    assert r.codeword_index == 0
    assert abs(r.eps - 0.1) <= 1e-12


def test_quantize_ties_lowest_index():
    r = quantize_shape([1 / math.sqrt(2), 1 / math.sqrt(2)], identity_codebook())
    assert r.codeword_index == 0


def test_quantize_matches_bruteforce():
    gen = RandomStream(5, 0).generator()
    cb = multibasis_codebook(gen, 4, 4)
    h = complex_gaussian(gen, (200, 4))
    s = h / np.linalg.norm(h, axis=1, keepdims=True)
    idx, eps = quantize_shapes(s, cb.vectors)
    for k in range(200):
        d = [1 - abs(np.vdot(v, s[k])) ** 2 for v in cb.vectors]
        assert idx[k] == int(np.argmin(d))
        assert abs(eps[k] - min(d)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0, 2 * math.pi))
def test_quantize_phase_invariant(seed, theta):
    gen = RandomStream(seed, 0).generator()
    cb = multibasis_codebook(gen, 3, 2)
    h = complex_gaussian(gen, (3,))
    s = h / np.linalg.norm(h)
    a = quantize_shape(s, cb)
    b = quantize_shape(np.exp(1j * theta) * s, cb)
    assert a.codeword_index == b.codeword_index
    assert a.eps == pytest.approx(b.eps, abs=1e-12)


def test_eps_ccdf_against_scipy_haar_oracle():
    # oracle draws codebooks with scipy's Haar sampler, independent of ours
    n_t, m, n = 2, 2, 20_000
    ug = stats.unitary_group(n_t, seed=17)
    s = np.array([1.0, 0.0])
    eps = np.empty(n)
    for k in range(n):
        vecs = np.concatenate([ug.rvs().T for _ in range(m)])
        eps[k] = 1 - np.max(np.abs(vecs.conj() @ s) ** 2)
    for delta in (0.1, 0.25, 0.4):
        emp = np.mean(eps >= delta)
        p = ccdf_eps(delta, n_t, m)
        assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12


def test_eps_ccdf_our_pipeline():
    n_t, m, n = 4, 2, 100_000
    gen = RandomStream(6, 0).generator()
    vecs = np.swapaxes(haar_unitaries(gen, n * m, n_t), -1, -2).reshape(n, m * n_t, n_t)
    h = complex_gaussian(gen, (n, 1, n_t))
    _, eps = quantize_shapes(h / np.linalg.norm(h, axis=-1, keepdims=True), vecs)
    eps = eps[:, 0]
    for delta in np.arange(0.05, 0.51, 0.05):
        p = ccdf_eps(delta, n_t, m)
        emp = np.mean(eps >= delta)
        assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12
    for delta in np.linspace(0, 1, 21):
        assert np.mean(eps >= delta) <= ccdf_eps_upper_bound(delta, n_t, m) + 4 / math.sqrt(n)


# --- SINR ----------------------------------------------------------------

def test_sinr_examples():
    assert sinr(1, 1, 0, Regime.NORMAL) == 1
    assert sinr(1, 1, 0.2, Regime.INTERFERENCE_LIMITED) == pytest.approx(4)
    assert sinr(2, 3, 0.5, Regime.NORMAL) == pytest.approx(0.75)
    assert sinr(2, 3, 0.5, Regime.NOISE_LIMITED) == pytest.approx(3)


def test_sinr_zero_eps_interference_limited():
    assert sinr(1, 1, 0.0, Regime.INTERFERENCE_LIMITED) == math.inf
    assert beam_rate(math.inf) == pytest.approx(math.log1p(SINR_CAP))
    arr = sinr_array(1.0, np.ones(2), np.array([0.0, 0.5]), Regime.INTERFERENCE_LIMITED)
    assert arr[0] == math.inf and arr[1] == pytest.approx(1.0)


def test_sinr_high_snr_limit():
    a = sinr(1e6, 1, 0.1, Regime.NORMAL)
    b = sinr(1e6, 1, 0.1, Regime.INTERFERENCE_LIMITED)
    assert abs(a - b) / b < 1e-4


@given(st.floats(1e-3, 1e3), st.floats(0, 0.999), st.floats(1e-4, 0.5))
def test_sinr_decreasing_in_eps(grho, eps, step):
    e2 = min(1.0, eps + step)
    assert sinr(grho, 1.0, e2) < sinr(grho, 1.0, eps)


@given(st.floats(0.01, 100), st.floats(0.01, 20), st.floats(0, 1))
def test_sinr_array_matches_scalar(gamma, rho, eps):
    for regime in Regime:
        if regime == Regime.INTERFERENCE_LIMITED and eps == 0:
            continue
        assert sinr_array(gamma, rho, eps, regime) == pytest.approx(sinr(gamma, rho, eps, regime))


# --- SINR quantizer ------------------------------------------------------

def test_quantizer_levels():
    q = quantizer_from_range(2, 3.0)
    assert np.allclose(q.levels, [0, 1, 2, 3])
    assert np.allclose(quantizer_from_range(1, 4.0).levels, [0, 4])


def test_build_from_pilot():
    pilot = np.linspace(0, 100, 100_001)
    q = build_sinr_quantizer(2, pilot)
    assert q.levels[-1] == pytest.approx(99.0)
    with pytest.raises(ValueError):
        build_sinr_quantizer(17, pilot)
    with pytest.raises(ValueError):
        build_sinr_quantizer(2, [])


def test_quantize_sinr_examples():
    q = SinrQuantizer(np.array([0.0, 1, 2, 3]), 2)
    assert quantize_sinr(2.0, q) == 2.0
    assert quantize_sinr(1.4, q) == 1.0
    assert quantize_sinr(10.0, q) == 3.0
    assert quantize_sinr(1.5, q) == 1.0  # tie -> lower
    assert quantize_sinr(math.inf, q) == 3.0
    assert np.array_equal(quantize_sinr(np.array([0.6, -1.0]), q), [1.0, 0.0])


@given(st.floats(0, 50))
def test_quantize_sinr_is_nearest(x):
    q = quantizer_from_range(3, 20.0)
    out = quantize_sinr(x, q)
    assert abs(out - x) <= np.min(np.abs(q.levels - x)) + 1e-12


# --- closed forms --------------------------------------------------------

def test_ccdf_examples():
    assert ccdf_eps(0.5, 2, 1) == pytest.approx(0.0)
    assert ccdf_eps(0.25, 2, 2) == pytest.approx(0.25)
    for n_t in (1, 2, 4):
        assert ccdf_eps(0.0, n_t, 3) == 1.0
    with pytest.raises(ValueError):
        ccdf_eps(0.6, 2, 1)


def test_elog_bounds_examples():
    lo, up = elog_eps_bounds(2, 1)
    assert lo == pytest.approx(math.log(2))
    assert up == pytest.approx(1 + math.log(2))
    lo, up = elog_eps_bounds(4, 1)
    assert lo == pytest.approx(math.log(4) / 3)
    assert up == pytest.approx(math.log(4) / 3 + 2 / 3)
    with pytest.raises(ValueError):
        elog_eps_bounds(1, 1)


def test_elog_eps_exact_value_n2_m1():
    # eps ~ U(0, 1/2) for one basis in C^2, so E[-ln eps] = 1 + ln 2 exactly:
    # the upper bound is attained.
    val = -2 * (0.5 * math.log(0.5) - 0.5)
    assert val == pytest.approx(elog_eps_bounds(2, 1)[1])


def test_make_reports_uses_eq5():
    gen = RandomStream(7, 0).generator()
    cb = multibasis_codebook(gen, 2, 2)
    chans = [decompose(h) for h in complex_gaussian(gen, (5, 2))]
    reps = make_reports(chans, cb, 3.0)
    for ch, r in zip(chans, reps):
        assert r.sinr == pytest.approx(3 * ch.rho * (1 - r.eps) / (1 + 3 * ch.rho * r.eps), rel=1e-12)
