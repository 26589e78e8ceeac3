"""Laboratory for external path lengths of tries built over binary Markov sources."""

from trielab.clt_harness import (
    EmpiricalCloud,
    SimulationConfig,
    apply_T,
    fit_variance_growth,
    ks_distance,
    simulate_epl,
    standardize,
)
from trielab.exact_moments import (
    compute_moment_table,
    mean_for_initial,
    variance_for_initial,
)
from trielab.markov_source import (
    BitStream,
    MarkovChain,
    SymmetricChain,
    entropy_rate,
    generate_strings,
    stationary_distribution,
)
from trielab.spectral import sigma_squared, spectral_constants
from trielab.trie import DepthExceeded, Trie, TrieStats, build_trie, external_path_length

__all__ = [
    "BitStream",
    "MarkovChain",
    "SymmetricChain",
    "entropy_rate",
    "generate_strings",
    "stationary_distribution",
    "DepthExceeded",
    "Trie",
    "TrieStats",
    "build_trie",
    "external_path_length",
    "compute_moment_table",
    "mean_for_initial",
    "variance_for_initial",
    "sigma_squared",
    "spectral_constants",
    "EmpiricalCloud",
    "SimulationConfig",
    "apply_T",
    "fit_variance_growth",
    "ks_distance",
    "simulate_epl",
    "standardize",
]

__version__ = "0.1.0"
