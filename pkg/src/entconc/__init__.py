"""Entanglement concentration of two-mode squeezed vacuum by local photon
subtraction combined with local displacement or squeezing, simulated in a
truncated Fock basis."""

__version__ = "0.1.0"

from .errors import (
    ConcentrationError,
    NonPhysicalStateError,
    OptimizationError,
    ParameterGuardError,
    TruncationError,
    ZeroSuccessError,
)
from .fock import DensityMatrix, FockOperator, StateVector
from .measures import EntanglementReport, fidelity_pure, log_negativity
from .protocols import (
    ConcentrationOutcome,
    Displacement,
    NoLocalOp,
    ProtocolParams,
    Squeezing,
    run_bruteforce_oracle,
    run_realistic,
)
from .optimize import Optimum, SweepGrid, optimize_displacement, sweep
