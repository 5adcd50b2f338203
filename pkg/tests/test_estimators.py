import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from hlab.estimators import BesselTransformer, BoxDimensionEstimator, MaximalTransformer, RieszTransformer
from hlab.fractal import cantor_set


def test_box_dimension_estimator():
    est = BoxDimensionEstimator().fit(cantor_set(0.25, 14).points)
    assert est.dimension_ == pytest.approx(0.5, abs=0.05)
    assert est.score() <= 0
    assert clone(est).get_params() == {"level_min": 4, "level_max": 10}
    with pytest.raises(ValueError):
        BoxDimensionEstimator().fit(np.zeros((5, 3)))


def test_transformers(rng):
    X = rng.standard_normal((3, 128))
    pipe = make_pipeline(BesselTransformer(alpha=1.0), MaximalTransformer())
    out = pipe.fit_transform(X)
    assert out.shape == X.shape and np.all(out >= 0)
    r = RieszTransformer(beta=0.5).fit(X)
    assert r.transform(X).shape == X.shape
    with pytest.raises(NotFittedError):
        RieszTransformer().transform(X)
    with pytest.raises(ValueError):
        RieszTransformer(beta=1.5).fit(X)
    with pytest.raises(ValueError):
        MaximalTransformer().fit(rng.standard_normal((2, 100)))
    with pytest.raises(ValueError):
        r.transform(rng.standard_normal((2, 64)))
