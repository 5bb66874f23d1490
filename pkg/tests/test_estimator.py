import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hybridsnn.estimator import HybridAccelerator
from hybridsnn.exceptions import ShapeError
from hybridsnn.neuron import LifParams
from hybridsnn.oracle import reference_forward


@pytest.fixture
def batch(toy_net):
    net, image = toy_net
    rng = np.random.default_rng(3)
    return net, np.stack([image] + [rng.random(image.shape) for _ in range(2)])


def test_get_params_and_clone(toy_net):
    net, _ = toy_net
    est = HybridAccelerator(net, nc_budget=4)
    params = est.get_params()
    assert params["nc_budget"] == 4 and params["beta"] == 0.15
    cloned = clone(est).get_params()["network"]
    assert cloned.topology == net.topology and cloned.n_spiking == net.n_spiking


def test_fit_predict(batch):
    net, X = batch
    est = HybridAccelerator(net, nc_budget=6).fit(X)
    assert est.allocation_.label == "LW" and len(est.allocation_.nc_per_layer) == 2
    pred = est.predict(X)
    ref = [reference_forward(net, x, LifParams()).prediction for x in X]
    np.testing.assert_array_equal(pred, ref)
    assert set(pred) <= set(est.classes_)


def test_transform_counts(batch):
    net, X = batch
    est = HybridAccelerator(net, nc_per_layer=(1, 2)).fit(X[:1])
    counts = est.transform(X)
    assert counts.shape == (3, 3)
    ref = reference_forward(net, X[1], LifParams())
    assert list(counts[1]) == ref.spike_counts


def test_single_image_promoted(batch):
    net, X = batch
    est = HybridAccelerator(net).fit(X[0])
    assert est.predict(X[0]).shape == (1,)
    assert est.simulate(X[0]).report.total_cycles > 0


def test_rate_coding_reproducible(batch):
    net, X = batch
    est = HybridAccelerator(net, coding="rate", seed=1, timesteps=4).fit(X)
    a, b = est.transform(X), est.transform(X)
    np.testing.assert_array_equal(a, b)
    assert len(est.reports(X)) == 3


def test_validation(batch):
    net, X = batch
    with pytest.raises(NotFittedError):
        HybridAccelerator(net).predict(X)
    with pytest.raises(ShapeError):
        HybridAccelerator(net).fit(X[:, :2])
    with pytest.raises(ValueError):
        HybridAccelerator(net).fit(np.full_like(X, np.nan))
    with pytest.raises(ValueError):
        HybridAccelerator(net, coding="rate", seed=0).fit(X * 3)
    with pytest.raises(ValueError):
        HybridAccelerator().fit(X)
    with pytest.raises(ValueError):
        HybridAccelerator(net, timesteps=0).fit(X)
