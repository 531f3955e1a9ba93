"""Power-grid topology learning from nodal phase-angle time series with Wiener filters."""

from .dynamics import NoiseModel, TimeSeriesPanel, simulate, stability_check
from .errors import GridWienerError
from .estimation import FirWienerBank, estimate_bank, estimate_correlations
from .experiments import RunConfig, estimate_topology, run_once, run_sweep
from .grid import GridGraph, generate_graph, load_case, neighbor_sets
from .spectral import FrequencyGrid, fir_frequency_response, oracle_wiener_response
from .topology import ErrorReport, TopologyEstimate, learn_topology, score

__all__ = [
    "ErrorReport",
    "FirWienerBank",
    "FrequencyGrid",
    "GridGraph",
    "GridWienerError",
    "NoiseModel",
    "RunConfig",
    "TimeSeriesPanel",
    "TopologyEstimate",
    "estimate_bank",
    "estimate_correlations",
    "estimate_topology",
    "fir_frequency_response",
    "generate_graph",
    "learn_topology",
    "load_case",
    "neighbor_sets",
    "oracle_wiener_response",
    "run_once",
    "run_sweep",
    "score",
    "simulate",
    "stability_check",
]
