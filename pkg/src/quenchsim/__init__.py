"""Quench-based quantum simulation toolkit.

End-to-end implementation of three nearest-neighbor quench architectures:
exact output distributions, the outcome/Ising-partition-function
correspondence, encoded logical circuit families with anti-concentration
statistics, a linear-depth compiler for dense IQP circuits, and a
weak-membership certification protocol built on parent Hamiltonians.
"""

__version__ = "0.1.0"

from .lattice import (
    Architecture,
    IsingCouplings,
    Lattice,
    build_lattice,
    grid_field,
    ising_couplings,
)
from .prep import BetaConfig, beta_from_bits, product_state, sample_beta
from .rng import RandomStream
from .statevec import (
    OutcomeRecord,
    StateVector,
    conditional_distribution,
    evolve_diagonal,
    measurement_distribution,
    sample_shots,
)

__all__ = [
    "Architecture",
    "BetaConfig",
    "IsingCouplings",
    "Lattice",
    "OutcomeRecord",
    "RandomStream",
    "StateVector",
    "beta_from_bits",
    "build_lattice",
    "conditional_distribution",
    "evolve_diagonal",
    "grid_field",
    "ising_couplings",
    "measurement_distribution",
    "product_state",
    "sample_beta",
    "sample_shots",
    "__version__",
]
