"""Simulation laboratory for vibrational dynamics of disordered molecules
collectively coupled to one cavity mode.

Engines: TEBD matrix-product states (exact), dense Krylov propagation
(oracle for small N), Ehrenfest mean field (bond-dimension-1 TEBD), and
hybrid discrete/continuous truncated-Wigner trajectories. Analysis covers
Wigner functions, non-Gaussianity, thermal references, fidelities, and
Wigner overlaps; the ensemble layer handles disorder averages and sweeps.
"""

__version__ = "0.1.0"

from .model import (HTCParams, DisorderRealization, InitialStateSpec,
                    sample_disorder, realization_seed, build_terms,
                    initial_state, mev_to_gc, gc_to_mev)
from .mps import MPS, TEBDOptions, evolve_tebd, reduced_vibrational_dm
from .dense import (dense_evolve, dense_rdm, build_block_hamiltonian,
                    DimensionLimitError)
from .semiclassical import (evolve_trajectories, sample_initial,
                            reconstruct_state, wigner_histogram)
from .analysis import (covariance, non_gaussianity, wigner, wigner_overlap,
                       thermal_reference, fidelity, trace_distance,
                       spectrum_and_heatmap, default_grid)
from .ensemble import (EnsembleConfig, run_ensemble, summarize, aggregate,
                       sweep, pooled_reconstruction)

__all__ = [
    "HTCParams", "DisorderRealization", "InitialStateSpec",
    "sample_disorder", "realization_seed", "build_terms", "initial_state",
    "mev_to_gc", "gc_to_mev",
    "MPS", "TEBDOptions", "evolve_tebd", "reduced_vibrational_dm",
    "dense_evolve", "dense_rdm", "build_block_hamiltonian",
    "DimensionLimitError",
    "evolve_trajectories", "sample_initial", "reconstruct_state",
    "wigner_histogram",
    "covariance", "non_gaussianity", "wigner", "wigner_overlap",
    "thermal_reference", "fidelity", "trace_distance",
    "spectrum_and_heatmap", "default_grid",
    "EnsembleConfig", "run_ensemble", "summarize", "aggregate", "sweep",
    "pooled_reconstruction",
    "__version__",
]
