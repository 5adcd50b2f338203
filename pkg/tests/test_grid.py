import numpy as np
import pytest

from hlab.errors import DomainError
from hlab.grid import GridFunction


def test_geometry_and_masks():
    g = GridFunction.zeros(2, (-1.0, 0.0), 2.0, 8)
    assert g.h == 0.25 and g.cell_volume == 0.0625
    c = g.centers()
    assert c.shape == (8, 8, 2)
    assert np.allclose(c[0, 0], [-0.875, 0.125])
    m = g.mask_box((-1, 0), (0, 1))
    assert m.sum() == 16
    assert tuple(g.index_of([[0.1, 1.9]])[0]) == (4, 7)


def test_validation():
    with pytest.raises(DomainError):
        GridFunction.zeros(1, (0.0,), 1.0, 12)
    with pytest.raises(DomainError):
        GridFunction.zeros(3, (0.0,), 1.0, 8)
    with pytest.raises(DomainError):
        GridFunction(1, (0.0,), 1.0, 8, np.zeros(4))


def test_csv_roundtrip(rng):
    for dim in (1, 2):
        g = GridFunction(dim, (-0.5,) * dim, 2.0, 16, rng.standard_normal((16,) * dim))
        back = GridFunction.from_csv(g.to_csv())
        assert back.same_grid(g)
        assert np.array_equal(back.values, g.values)
    with pytest.raises(DomainError):
        GridFunction.from_csv("1,2\n")


def test_norms_and_interpolation():
    g = GridFunction.from_function(lambda c: c[..., 0], 1, (0.0,), 1.0, 256)
    assert g.integral() == pytest.approx(0.5)
    assert g.lp_norm(np.inf) == pytest.approx(1 - 1 / 512)
    assert g.interpolate([[0.3]])[0] == pytest.approx(0.3)
    g2 = GridFunction.from_function(lambda c: c[..., 0] + 2 * c[..., 1], 2, (0.0, 0.0), 1.0, 64)
    assert g2.interpolate([[0.3, 0.4]])[0] == pytest.approx(1.1)
