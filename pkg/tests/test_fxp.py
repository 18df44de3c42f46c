import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnnfpga.errors import FormatMismatchError, GnnFpgaError
from gnnfpga.fxp import (
    AccValue,
    FxpValue,
    QFormat,
    Q2_14,
    acc_readout,
    fxp_add_sat,
    fxp_mac,
    fxp_mul,
    fxp_neg,
    fxp_sub_sat,
    quantize,
    quantize_array,
    round_shift,
)

from oracles import dot, dot_unsaturated, mul

formats = st.builds(
    lambda t, f: QFormat(t, min(f, t - 1)),
    st.integers(2, 32),
    st.integers(0, 31),
)


def test_default_format_range():
    assert Q2_14.raw_min == -32768 and Q2_14.raw_max == 32767
    assert Q2_14.min_real == -2.0
    assert Q2_14.max_real == 2.0 - 2.0**-14


@pytest.mark.parametrize("total,frac", [(1, 0), (33, 4), (16, 16), (8, -1)])
def test_qformat_rejects_bad_widths(total, frac):
    with pytest.raises(GnnFpgaError):
        QFormat(total, frac)


@pytest.mark.parametrize(
    "x,raw",
    [(0.0, 0), (1.0, 16384), (3.0, 32767), (-3.0, -32768), (-2.0, -32768), (0.5, 8192)],
)
def test_quantize_examples(x, raw):
    assert quantize(x, Q2_14).raw == raw


def test_quantize_ties_away_from_zero():
    half_ulp = 2.0**-15
    assert quantize(half_ulp).raw == 1
    assert quantize(-half_ulp).raw == -1
    assert quantize(3 * half_ulp).raw == 2
    assert quantize(-3 * half_ulp).raw == -2
    # just below a tie rounds down
    assert quantize(math.nextafter(half_ulp, 0)).raw == 0


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_quantize_non_finite(bad):
    with pytest.raises(GnnFpgaError, match="non-finite input"):
        quantize(bad)
    with pytest.raises(GnnFpgaError, match="non-finite input"):
        quantize_array([0.0, bad])


def test_quantize_huge_values_saturate():
    assert quantize(1e300).raw == Q2_14.raw_max
    assert quantize(-1e300).raw == Q2_14.raw_min


@given(formats, st.data())
def test_round_trip(fmt, data):
    raw = data.draw(st.integers(fmt.raw_min, fmt.raw_max))
    v = FxpValue(raw, fmt)
    assert quantize(v.real, fmt) == v


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_quantize_monotone(x, y):
    if x > y:
        x, y = y, x
    assert quantize(x).raw <= quantize(y).raw


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_quantize_array_matches_scalar(xs):
    assert quantize_array(xs).tolist() == [quantize(x).raw for x in xs]


def test_mul_examples():
    one, half = quantize(1.0), quantize(0.5)
    assert fxp_mul(one, one) == one
    assert fxp_mul(half, half).raw == 4096
    m2 = quantize(-2.0)
    assert fxp_mul(m2, m2).raw == 32767


def test_mul_format_mismatch():
    with pytest.raises(FormatMismatchError):
        fxp_mul(quantize(1.0), quantize(1.0, QFormat(16, 12)))


@settings(max_examples=500)
@given(formats, st.data())
def test_ops_saturate_and_match_oracle(fmt, data):
    a = data.draw(st.integers(fmt.raw_min, fmt.raw_max))
    b = data.draw(st.integers(fmt.raw_min, fmt.raw_max))
    va, vb = FxpValue(a, fmt), FxpValue(b, fmt)
    assert fxp_mul(va, vb).raw == mul(a, b, fmt.total_bits, fmt.frac_bits)
    for out in (fxp_mul(va, vb), fxp_add_sat(va, vb), fxp_sub_sat(va, vb), fxp_neg(va)):
        assert fmt.raw_min <= out.raw <= fmt.raw_max
    assert fxp_add_sat(va, vb).raw == max(fmt.raw_min, min(fmt.raw_max, a + b))


def test_operators_delegate():
    a, b = quantize(0.75), quantize(0.5)
    assert (a * b).raw == fxp_mul(a, b).raw
    assert (a + b).raw == quantize(1.25).raw
    assert (a - b).raw == quantize(0.25).raw
    assert (-quantize(-2.0)).raw == 32767
    assert float(a) == 0.75


def test_round_shift():
    assert round_shift(3, 1) == 2  # 1.5 -> 2
    assert round_shift(-3, 1) == -2
    assert round_shift(5, 2) == 1  # 1.25 -> 1
    assert round_shift(7, 0) == 7


def test_mac_examples():
    acc = AccValue()
    zero = quantize(0.0)
    assert fxp_mac(acc, zero, quantize(1.7)).raw == 0
    one = quantize(1.0)
    for _ in range(3):
        acc = fxp_mac(acc, one, one)
    out = acc_readout(acc)
    # 3.0 is outside Q2.14, so the readout saturates while the accumulator holds it exactly
    assert acc.raw == 3 << 28
    assert out.raw == 32767
    wide = QFormat(16, 12)
    acc = AccValue(0, wide)
    one = quantize(1.0, wide)
    for _ in range(3):
        acc = fxp_mac(acc, one, one)
    assert acc_readout(acc).real == 3.0


def test_readout_examples():
    assert acc_readout(AccValue(0)).raw == 0
    assert acc_readout(AccValue(1 << 28)).raw == 16384
    assert acc_readout(AccValue(5 << 28)).raw == 32767


def test_accumulator_saturates():
    big = quantize(-2.0)
    acc = AccValue()
    for _ in range(4):
        acc = fxp_mac(acc, big, big)
    assert acc.raw == (1 << 31) - 1


def test_acc_width_validation():
    with pytest.raises(GnnFpgaError):
        AccValue(0, Q2_14, 8)
    with pytest.raises(GnnFpgaError):
        AccValue(1 << 40, Q2_14, 32)


def _mac_pipeline(ws, xs, fmt):
    acc = AccValue(0, fmt)
    for w, x in zip(ws, xs):
        acc = fxp_mac(acc, FxpValue(w, fmt), FxpValue(x, fmt))
    return acc_readout(acc).raw


def test_dot8_matches_big_integer_oracle(rng):
    for _ in range(200):
        ws = rng.integers(Q2_14.raw_min, Q2_14.raw_max + 1, 8).tolist()
        xs = rng.integers(Q2_14.raw_min, Q2_14.raw_max + 1, 8).tolist()
        assert _mac_pipeline(ws, xs, Q2_14) == dot(ws, xs, 16, 14)


def test_dot_oracle_equivalence_10k(rng):
    """MAC pipeline readout vs exact big-integer oracle, 10^4 random cases, length <= 64."""
    for _ in range(10_000):
        n = int(rng.integers(1, 65))
        ws = rng.integers(-16384, 16385, n).tolist()
        xs = rng.integers(-16384, 16385, n).tolist()
        got = _mac_pipeline(ws, xs, Q2_14)
        assert got == dot(ws, xs, 16, 14)
        # |w|,|x| <= 1 keeps every partial sum inside 32 bits, so plain summation agrees too
        assert got == dot_unsaturated(ws, xs, 16, 14)


def test_determinism():
    vals = [quantize(x) for x in np.linspace(-1.9, 1.9, 37)]
    first = [fxp_mul(a, b).raw for a in vals for b in vals]
    second = [fxp_mul(a, b).raw for a in vals for b in vals]
    assert first == second
