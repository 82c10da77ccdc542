import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_features
from optopro import _fallback, kernels

try:
    from optopro import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


@st.composite
def trains(draw, max_size=80):
    n = draw(st.integers(1, max_size))
    p = draw(st.sampled_from([0.1, 0.3, 0.6]))
    fl = draw(st.lists(st.booleans().map(int), min_size=n, max_size=n))
    sp = draw(st.lists(st.floats(0, 1).map(lambda u: int(u < p)), min_size=n, max_size=n))
    return np.array(fl, dtype=np.uint8), np.array(sp, dtype=np.uint8)


@pytest.mark.parametrize("strict", [False, True])
@given(trains())
@settings(max_examples=150)
def test_fallback_features_match_naive(strict, tr):
    fl, sp = tr
    pf, cf, sf, valid = _fallback.history_features(fl, sp, strict)
    for t in range(fl.size):
        ref = naive_features(fl.tolist(), sp.tolist(), t, strict)
        if ref is None:
            assert valid[t] == 0 and math.isnan(pf[t])
        else:
            assert valid[t] == 1
            assert (pf[t], cf[t], sf[t]) == ref


@needs_ext
@pytest.mark.parametrize("strict", [False, True])
@given(trains(max_size=200))
@settings(max_examples=100)
def test_compiled_features_identical(strict, tr):
    fl, sp = tr
    a = _fallback.history_features(fl, sp, strict)
    b = _kernels.history_features(fl, sp, strict)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@needs_ext
@given(st.lists(st.integers(0, 1), min_size=1, max_size=120),
       st.sampled_from([(7.0, 3.0), (5.6, 3.0), (7.0, 3.6), (2.0, 2.0)]),
       st.sampled_from([1, 7, 100]))
@settings(max_examples=60, deadline=None)
def test_compiled_lif_identical(fl, cr, sub):
    fl = np.array(fl, dtype=np.uint8)
    c, r = cr
    a = _fallback.lif_euler(fl, c, r, 1.0, 0.0, 1.0, 5.0, sub)
    b = _kernels.lif_euler(fl, c, r, 1.0, 0.0, 1.0, 5.0, sub)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1] and a[3] == b[3]
    np.testing.assert_array_equal(a[2], b[2])


@needs_ext
def test_compiled_lif_identical_long_run():
    rng = np.random.Generator(np.random.PCG64(3))
    fl = (rng.random(3000) < 0.14).astype(np.uint8)
    a = _fallback.lif_euler(fl, 7.0, 3.0, 1.0, 0.0, 1.0, 5.0, 100)
    b = _kernels.lif_euler(fl, 7.0, 3.0, 1.0, 0.0, 1.0, 5.0, 100)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]
    np.testing.assert_array_equal(a[2], b[2])


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
