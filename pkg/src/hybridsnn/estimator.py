"""scikit-learn style front end to the accelerator simulator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_images, check_timesteps
from .fileio import RunConfig
from .layers import NetworkSpec
from .neuron import LifParams
from .oracle import rate_encode, reference_forward
from .partition import Allocation, WorkloadTrace, trace_from_forward
from .report import PerfReport
from .simulator import SimulationResult, auto_allocation, simulate_network


class HybridAccelerator(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Hybrid dense/sparse SNN accelerator as a classifier.

    ``fit`` plays the design-time role: it runs the reference model on the
    calibration images, averages the per-layer workload trace and, unless
    ``nc_per_layer`` is given, partitions ``nc_budget`` neural cores over
    the sparse layers. ``predict`` simulates each image on the configured
    hardware and returns the population-coded class; ``transform``
    returns per-layer output spike counts.

    Parameters
    ----------
    network : NetworkSpec
        Network with weights for every spiking layer.
    beta, theta : float
        LIF decay and threshold.
    timesteps : int or None
        Overrides ``network.timesteps`` when set.
    dense_rows : int
        PE rows of the dense core.
    nc_per_layer : sequence of int or None
        Fixed NC counts for the sparse layers; ``None`` partitions
        ``nc_budget`` during ``fit``.
    scale : {1, 2, 4}
        Resource multiplier applied to the allocation.
    coding : {"direct", "rate"}
        Input encoding; rate coding needs ``seed``.
    """

    def __init__(self, network: NetworkSpec | None = None, beta=0.15, theta=0.5, timesteps=None,
                 dense_rows=1, nc_per_layer=None, nc_budget=None, scale=1, chunk_bits=64,
                 clock_hz=100e6, coding="direct", seed=None, overlap=True, power="int4",
                 accounting="sequential", include_static=False, n_jobs=None):
        self.network = network
        self.beta = beta
        self.theta = theta
        self.timesteps = timesteps
        self.dense_rows = dense_rows
        self.nc_per_layer = nc_per_layer
        self.nc_budget = nc_budget
        self.scale = scale
        self.chunk_bits = chunk_bits
        self.clock_hz = clock_hz
        self.coding = coding
        self.seed = seed
        self.overlap = overlap
        self.power = power
        self.accounting = accounting
        self.include_static = include_static
        self.n_jobs = n_jobs

    def _net(self) -> NetworkSpec:
        if self.network is None:
            raise ValueError("HybridAccelerator needs a network")
        net = self.network
        if self.timesteps is not None:
            net = net.with_timesteps(check_timesteps(self.timesteps))
        return net

    def _config(self, image_index: int = 0) -> RunConfig:
        seed = self.seed
        if self.coding == "rate" and seed is not None:
            # distinct, reproducible stream per image
            seed = (int(seed), image_index)
        return RunConfig(
            dense_rows=self.dense_rows,
            nc_per_layer=None if self.nc_per_layer is None else tuple(self.nc_per_layer),
            nc_budget=self.nc_budget, scale=self.scale, chunk_bits=self.chunk_bits,
            clock_hz=self.clock_hz, power=self.power, accounting=self.accounting,
            coding=self.coding, seed=seed, overlap=self.overlap, include_static=self.include_static,
        )

    def _input(self, net, image, i):
        if self.coding == "rate":
            return rate_encode(image, net.timesteps, self._config(i).seed)
        return image

    def fit(self, X, y=None):
        net = self._net()
        X = check_images(X, net.input_shape, self.coding)
        params = LifParams(self.beta, self.theta)
        traces = [
            trace_from_forward(net, reference_forward(net, self._input(net, x, i), params))
            for i, x in enumerate(X)
        ]
        self.trace_ = WorkloadTrace.mean(traces)
        if self.nc_per_layer is None:
            self.allocation_ = auto_allocation(net, self.trace_, self._config())
        else:
            self.allocation_ = Allocation(self.dense_rows, tuple(self.nc_per_layer))
        self.classes_ = np.arange(net.n_scores)
        self.lif_ = params
        return self

    def simulate(self, image, index: int = 0) -> SimulationResult:
        """Simulate one image with the fitted allocation."""
        check_is_fitted(self, "allocation_")
        net = self._net()
        image = check_images(image, net.input_shape, self.coding)[0]
        return simulate_network(net, image, self.lif_, self._config(index), self.allocation_, self.n_jobs)

    def _simulate_all(self, X) -> list[SimulationResult]:
        check_is_fitted(self, "allocation_")
        net = self._net()
        X = check_images(X, net.input_shape, self.coding)
        return [
            simulate_network(net, x, self.lif_, self._config(i), self.allocation_, self.n_jobs)
            for i, x in enumerate(X)
        ]

    def predict(self, X) -> np.ndarray:
        return np.array([r.prediction for r in self._simulate_all(X)], dtype=np.int64)

    def transform(self, X) -> np.ndarray:
        """Output spike count of every spiking layer, one row per image."""
        return np.array([r.spike_counts for r in self._simulate_all(X)], dtype=np.int64)

    def reports(self, X) -> list[PerfReport]:
        return [r.report for r in self._simulate_all(X)]
