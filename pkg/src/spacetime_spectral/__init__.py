"""Spectral clustering of temporal networks through inflated dynamic Laplacians."""

__version__ = "0.1.0"

from .assembly import (SupraMatrix, assemble_laplacian, build_adjacency, degrees,
                       dynamic_laplacian, inflated_laplacian)
from .cheeger import (Packing, brute_force_cheeger, check_cheeger_inequalities, cheeger_ratio,
                      cut_value, packing_score)
from .exceptions import ConvergenceError, NotMultiplexError, ValidationError
from .ingest import VoteTable, read_votes_csv, senator_network, state_network
from .matching import link_partitions, rmwec, slice_cut_matrix
from .netgen import GenSpec, generate
from .network import SpacetimeIndexMap, TemporalNetwork
from .partition import (SpacetimeSpectralClustering, classify_transitions, run_multiplex,
                        run_nonmultiplex, static_bipartition)
from .seba import SEBA, seba
from .spectral import (EigenSet, classify_multiplex, critical_a_multiplex,
                       critical_a_nonmultiplex, identify_spatial_nonmultiplex,
                       incidence_spectrum, smallest_eigenpairs, spatial_eigenpairs)

__all__ = [
    "SEBA", "ConvergenceError", "EigenSet", "GenSpec", "NotMultiplexError", "Packing",
    "SpacetimeIndexMap", "SpacetimeSpectralClustering", "SupraMatrix", "TemporalNetwork",
    "ValidationError", "VoteTable", "assemble_laplacian", "brute_force_cheeger", "build_adjacency",
    "check_cheeger_inequalities", "cheeger_ratio", "classify_multiplex", "classify_transitions",
    "critical_a_multiplex", "critical_a_nonmultiplex", "cut_value", "degrees", "dynamic_laplacian",
    "generate", "identify_spatial_nonmultiplex", "incidence_spectrum", "inflated_laplacian",
    "link_partitions", "packing_score", "read_votes_csv", "rmwec", "run_multiplex",
    "run_nonmultiplex", "seba", "senator_network", "slice_cut_matrix", "smallest_eigenpairs",
    "spatial_eigenpairs", "state_network", "static_bipartition",
]
