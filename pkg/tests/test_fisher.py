import numpy as np
import pytest

from jeep.fisher import FisherField, fisher_base, fisher_omniscient, fisher_realistic
from jeep.jpeg import QuantTable, quality_to_quant_table
from jeep.side_info import WetMask


def test_base_homogeneity(rng):
    var = rng.uniform(1, 20, (16, 16))
    i1, t1 = fisher_base(QuantTable(np.full((8, 8), 3)), var)
    i2, t2 = fisher_base(QuantTable(np.full((8, 8), 6)), var)
    assert np.allclose(i2, 16 * i1, rtol=1e-13)
    assert np.allclose(t2, 4 * t1, rtol=1e-13)


def test_base_rejects_bad_variance():
    with pytest.raises(ValueError):
        fisher_base(quality_to_quant_table(90), np.zeros((8, 8)))


def test_realistic_examples():
    info = np.full((8, 8), 2.0)
    f = fisher_realistic(info, np.zeros((8, 8)))
    assert np.all(f.plus == 2) and np.all(f.minus == 2) and np.all(f.cross == 2)
    f = fisher_realistic(info, np.full((8, 8), 0.5))
    assert np.all(f.plus == 0) and np.all(f.minus == 32) and np.all(f.cross == 0)


def test_realistic_rank_one(rng):
    info = rng.uniform(0.01, 100, (8, 8))
    f = fisher_realistic(info, rng.uniform(-0.5, 0.5, (8, 8)))
    naive = f.plus * f.minus - f.cross**2
    assert np.all(np.abs(naive) <= 1e-12 * f.plus * f.minus + 1e-300)
    assert np.all(f.determinant() == 0)


def test_omniscient_examples():
    info, iota = np.full((8, 8), 2.0), np.full((8, 8), 5.0)
    f = fisher_omniscient(info, iota, np.zeros((8, 8)))
    assert np.all(f.plus == 7) and np.all(f.minus == 7) and np.all(f.cross == -3)
    f = fisher_omniscient(info, iota, np.full((8, 8), 0.5))
    assert np.all(f.plus == 5) and np.all(f.minus == 37) and np.all(f.cross == -5)


def test_omniscient_determinant_and_psd(rng):
    info = rng.uniform(1e-3, 1e3, (64, 64))
    iota = rng.uniform(1e-3, 1e3, (64, 64))
    f = fisher_omniscient(info, iota, rng.uniform(-0.5, 0.5, (64, 64)))
    naive = f.plus * f.minus - f.cross**2
    assert np.allclose(f.determinant(), naive, rtol=1e-8)
    ev = np.linalg.eigvalsh(np.stack([np.stack([f.plus, f.cross], -1), np.stack([f.cross, f.minus], -1)], -1))
    assert np.allclose(f.min_eigenvalue(), ev[..., 0], rtol=1e-6, atol=1e-9 * ev[..., 1])
    assert np.all(f.min_eigenvalue() > 0)


def test_iota_dominates_at_qf100(image64):
    # with q = 1 and sigma^2 >= 1, every f^4/sigma^4 <= f^2/sigma^2, so iota = 2 sum f^2/sigma^2 > I
    from jeep.variance import estimate_variance_mipod

    var = np.maximum(estimate_variance_mipod(image64), 1.0)
    info, iota = fisher_base(quality_to_quant_table(100), var)
    assert np.all(iota > info)


def test_kl_hessian_is_half():
    f = FisherField(np.array([4.0]), np.array([6.0]), np.array([1.0]), np.array([23.0]))
    h = f.kl_hessian()
    assert (h.plus[0], h.minus[0], h.cross[0], h.det[0]) == (2.0, 3.0, 0.5, 23.0 / 4)


def test_wet_directions():
    info = np.ones((8, 8))
    mask = WetMask.dry((8, 8))
    mask.plus[0, 1] = True
    f = fisher_realistic(info, np.zeros((8, 8)), mask)
    assert np.isinf(f.plus[0, 1]) and f.minus[0, 1] == 1 and f.cross[0, 1] == 0
    assert f.det is None
