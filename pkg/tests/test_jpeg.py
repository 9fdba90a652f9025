import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jeep.jpeg import (
    DCT_MATRIX,
    GeometryError,
    LUMINANCE_BASE,
    QuantizedImage,
    QuantTable,
    blockwise_idct,
    compress,
    dct_basis,
    dct_forward,
    dct_inverse,
    decompress,
    quality_to_quant_table,
    round_half_away,
    rounding_noise_variance,
    tile_table,
    variance_to_dct,
    variance_to_spatial,
)
from jeep.side_info import extract_side_info


def brute_basis(k, l, i, j):
    wk = 1 / math.sqrt(2) if k == 0 else 1.0
    wl = 1 / math.sqrt(2) if l == 0 else 1.0
    return wk * wl / 4 * math.cos(math.pi * k * (2 * i + 1) / 16) * math.cos(math.pi * l * (2 * j + 1) / 16)


def test_basis_dc_is_one_eighth():
    for i in range(8):
        for j in range(8):
            assert dct_basis(0, 0, i, j) == pytest.approx(1 / 8, abs=1e-15)


def test_basis_hand_value():
    assert dct_basis(1, 0, 0, 0) == pytest.approx(math.sqrt(2) / 8 * math.cos(math.pi / 16), abs=1e-12)
    assert dct_basis(1, 0, 0, 0) == pytest.approx(0.17338, abs=1e-5)


def test_matrix_matches_brute_formula():
    brute = np.array([[brute_basis(k, l, i, j) for i in range(8) for j in range(8)] for k in range(8) for l in range(8)])
    assert np.max(np.abs(brute - DCT_MATRIX)) < 1e-14


def test_basis_orthonormal():
    gram = DCT_MATRIX @ DCT_MATRIX.T
    assert np.max(np.abs(gram - np.eye(64))) < 1e-12


def test_constant_blocks():
    assert np.allclose(dct_forward(np.full((8, 8), 128.0)), 0, atol=1e-12)
    d = dct_forward(np.full((8, 8), 129.0))
    expect = np.zeros((8, 8))
    expect[0, 0] = 8
    assert np.allclose(d, expect, atol=1e-12)
    assert np.allclose(dct_inverse(np.zeros((8, 8))), 128.0, atol=1e-12)
    assert np.allclose(dct_inverse(expect), 129.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (8, 8), elements=st.floats(-2000, 2000)))
def test_roundtrips(block):
    assert np.max(np.abs(dct_inverse(dct_forward(block)) - block)) < 1e-10
    assert np.max(np.abs(dct_forward(dct_inverse(block)) - block)) < 1e-10


def test_quant_tables():
    assert np.all(quality_to_quant_table(100).steps == 1)
    assert np.array_equal(quality_to_quant_table(50).steps, LUMINANCE_BASE)
    # IJG scale for qf 75 is 50: (16*50+50)//100 = 8
    assert quality_to_quant_table(75).steps[0, 0] == 8
    for bad in (0, 101, 2.5):
        with pytest.raises(ValueError):
            quality_to_quant_table(bad)


def test_compress_flat_image():
    q = compress(np.full((16, 16), 128, np.uint8), quality_to_quant_table(75))
    assert np.all(q.coeffs == 0)
    assert np.all(decompress(q) == 128.0)


def test_tie_rule_half_away_from_zero():
    x = np.array([2.5, -2.5, 0.5, -0.5, 1.49999, 3.25])
    assert np.array_equal(round_half_away(x), [3, -3, 1, -1, 1, 3])


def test_rounding_rules():
    steps = np.ones((8, 8), int)
    steps[0, 0] = 80
    tq = QuantTable(steps)
    # flat block 121: d_00 = 8 * (-7) = -56, ratio -0.7
    img = np.full((8, 8), 121, np.uint8)
    assert compress(img, tq, rounding="toward_zero").coeffs[0, 0] == 0
    assert compress(img, tq).coeffs[0, 0] == -1
    assert compress(img, quality_to_quant_table(100)).coeffs[0, 0] == -56
    with pytest.raises(ValueError):
        compress(img, tq, rounding="stochastic")


def test_geometry_errors():
    with pytest.raises(GeometryError):
        compress(np.zeros((511, 512), np.uint8), quality_to_quant_table(75))
    with pytest.raises(ValueError):
        QuantizedImage(np.full((8, 8), 2000), quality_to_quant_table(75))


def test_decompression_error_identity(image64):
    for qf in (75, 95, 100):
        quant = quality_to_quant_table(qf)
        cover, u = extract_side_info(image64, quant)
        y = decompress(cover)
        dtu = blockwise_idct(tile_table(quant.steps, u.shape) * u)
        assert np.max(np.abs((y - image64) + dtu)) < 1e-9


def test_qf100_error_bound(rng):
    img = rng.integers(0, 256, (256, 256)).astype(np.uint8)
    cover = compress(img, quality_to_quant_table(100))
    assert np.max(np.abs(decompress(cover) - img)) <= 4.0


def test_variance_transforms(rng):
    v = np.full((16, 16), 3.5)
    assert np.allclose(variance_to_dct(v), 3.5)
    assert np.allclose(variance_to_spatial(variance_to_dct(v)), 3.5)
    single = np.zeros((8, 8))
    single[0, 0] = 1.0
    expect = np.array([[brute_basis(k, l, 0, 0) ** 2 for l in range(8)] for k in range(8)])
    assert np.allclose(variance_to_dct(single), expect, atol=1e-15)


def test_qf100_rounding_noise_constant():
    s = rounding_noise_variance(quality_to_quant_table(100), (64, 64))
    assert np.max(np.abs(s - 1 / 12)) < 1e-12
