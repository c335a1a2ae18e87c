from .layers import (
    ActivationSpec,
    LayerCache,
    LayerGradients,
    SparseLayer,
    backward,
    forward,
)
from .snapshot import load_topology_snapshot, save_topology_snapshot
from .topology import (
    EvolutionConfig,
    EvolutionDelta,
    SparseWeights,
    WeightInitSpec,
    degree_distribution,
    evolve,
    expected_connection_count,
    init_erdos_renyi,
    realign_link_values,
)

__all__ = [
    "ActivationSpec",
    "LayerCache",
    "LayerGradients",
    "SparseLayer",
    "backward",
    "forward",
    "load_topology_snapshot",
    "save_topology_snapshot",
    "EvolutionConfig",
    "EvolutionDelta",
    "SparseWeights",
    "WeightInitSpec",
    "degree_distribution",
    "evolve",
    "expected_connection_count",
    "init_erdos_renyi",
    "realign_link_values",
]
