"""Cycle-approximate simulator of a hybrid dense/sparse spiking neural
network accelerator."""
from .dense_core import DenseCoreConfig, dense_throughput, simulate_dense, tap_offsets
from .estimator import HybridAccelerator
from .exceptions import DomainError, FormatError, ShapeError, TopologyError, VerificationError
from .fileio import RunConfig, load_model, load_tensor, save_model, save_tensor
from .layers import ConvLayerSpec, FcLayerSpec, MaxPoolSpec, NetworkSpec, random_weights
from .neuron import LifParams, LifState, lif_plane_step, lif_step
from .oracle import rate_encode, reference_conv, reference_forward
from .partition import (
    Allocation,
    TraceEntry,
    WorkloadTrace,
    layer_workload,
    measure_trace,
    partition,
    scale_allocation,
)
from .quant import QuantParams, QuantTensor, SymmetricQuantizer, dequantize, quantize_tensor, shift_add_multiply
from .report import FP32_POWER, INT4_POWER, PerfReport, PowerTable, compare_runs, energy_report, quant_sparsity_report
from .simulator import SimulationResult, simulate_network
from .sparse_core import (
    SparseLayerConfig,
    SpikeEvent,
    compress,
    gen_update_addresses,
    maxpool_spikes,
    nc_channels,
    simulate_sparse_conv,
    simulate_sparse_fc,
)
from .spikes import MemRegionStats, SpikeTrain, gated_access, plane_address
from .topology import VGG9, parse_topology

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ConvLayerSpec",
    "DenseCoreConfig",
    "DomainError",
    "FP32_POWER",
    "FcLayerSpec",
    "FormatError",
    "HybridAccelerator",
    "INT4_POWER",
    "LifParams",
    "LifState",
    "MaxPoolSpec",
    "MemRegionStats",
    "NetworkSpec",
    "PerfReport",
    "PowerTable",
    "QuantParams",
    "QuantTensor",
    "RunConfig",
    "ShapeError",
    "SimulationResult",
    "SparseLayerConfig",
    "SpikeEvent",
    "SpikeTrain",
    "SymmetricQuantizer",
    "TopologyError",
    "TraceEntry",
    "VGG9",
    "VerificationError",
    "WorkloadTrace",
    "compare_runs",
    "compress",
    "dense_throughput",
    "dequantize",
    "energy_report",
    "gated_access",
    "gen_update_addresses",
    "layer_workload",
    "lif_plane_step",
    "lif_step",
    "load_model",
    "load_tensor",
    "maxpool_spikes",
    "measure_trace",
    "nc_channels",
    "parse_topology",
    "partition",
    "plane_address",
    "quant_sparsity_report",
    "quantize_tensor",
    "random_weights",
    "rate_encode",
    "reference_conv",
    "reference_forward",
    "save_model",
    "save_tensor",
    "scale_allocation",
    "shift_add_multiply",
    "simulate_dense",
    "simulate_network",
    "simulate_sparse_conv",
    "simulate_sparse_fc",
    "tap_offsets",
]
