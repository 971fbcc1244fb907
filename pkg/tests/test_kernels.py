import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkmoments import kernels
from minkmoments.stern import stern

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba disabled")


def test_resolve_impl():
    assert kernels.resolve_impl("numpy") == "numpy"
    assert kernels.resolve_impl(None) == ("numba" if kernels.HAVE_NUMBA else "numpy")
    with pytest.raises(ValueError):
        kernels.resolve_impl("fortran")


@pytest.mark.parametrize("impl", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_stern_range_matches_points(impl):
    for start, count in [(0, 50), (1, 1), (1000, 300), ((1 << 40) - 7, 20), (5, 0)]:
        got = kernels.stern_range(start, count, impl=impl)
        assert got.tolist() == [stern(n) for n in range(start, start + count)]


@needs_numba
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1 << 50), st.integers(0, 500))
def test_stern_range_parity(start, count):
    a = kernels.stern_range(start, count, impl="numba")
    b = kernels.stern_range(start, count, impl="numpy")
    assert np.array_equal(a, b)


@pytest.mark.parametrize("impl", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_box_power_sums_small(impl):
    num = np.array([1, 1, 2, 1], dtype=np.int64)
    den = np.array([4, 3, 3, 2], dtype=np.int64)
    sums = kernels.box_power_sums(num, den, 5, impl=impl)
    x = num / den
    for n in range(6):
        assert sums[n] == pytest.approx(math.fsum(x**n), rel=1e-15)


@needs_numba
def test_box_power_sums_parity():
    s = kernels.stern_range(0, (1 << 14) + 1)
    num, den = s[1 : 1 << 13], s[(1 << 13) + 1 : 1 << 14]
    a = kernels.box_power_sums(num, den, 64, impl="numba")
    b = kernels.box_power_sums(num, den, 64, impl="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-13)


@pytest.mark.parametrize("impl", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_log_sum(impl):
    vals = kernels.stern_range(1 << 12, (1 << 12) + 1)
    expected = math.fsum(math.log(int(v)) for v in vals)
    assert kernels.log_sum(vals, impl=impl) == pytest.approx(expected, rel=1e-15)


@needs_numba
def test_log_sum_parity():
    vals = kernels.stern_range(1 << 18, (1 << 18) + 1)
    a = kernels.log_sum(vals, impl="numba")
    b = kernels.log_sum(vals, impl="numpy")
    assert abs(a - b) <= 1e-14 * abs(a)


def test_environment_flag_disables_numba():
    env = dict(os.environ, MINKMOMENTS_DISABLE_NUMBA="1")
    code = (
        "from minkmoments import kernels, stern_means;"
        "assert not kernels.HAVE_NUMBA;"
        "assert kernels.resolve_impl(None) == 'numpy';"
        "print(repr(stern_means.block_log_mean(12)))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from minkmoments.stern_means import block_log_mean

    assert float(out.stdout) == pytest.approx(block_log_mean(12), rel=1e-14)
    code = "from minkmoments import kernels; kernels.resolve_impl('numba')"
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert res.returncode != 0 and "disabled" in res.stderr
