"""Entanglement and distance measures for two-mode states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .fock import DensityMatrix, StateVector, hermitian_eigenvalues, partial_transpose

if TYPE_CHECKING:
    from .protocols import ConcentrationOutcome

NEGATIVITY_CLAMP = 1e-10


@dataclass(frozen=True)
class EntanglementReport:
    log_negativity: float
    trace_norm_pt: float
    min_pt_eigenvalue: float
    # trace of the state before internal normalization
    input_trace: float = 1.0


def log_negativity(rho: DensityMatrix) -> EntanglementReport:
    """Base-2 logarithmic negativity ``log2 ||rho^{T_A}||_1``.

    Unnormalized input is normalized first; its original trace is kept in the
    report.  Separable states whose trace norm rounds to just above or below
    one are reported as exactly zero: E_N is 0 whenever the lowest eigenvalue
    of the partial transpose is above -1e-10.
    """
    if rho.modes != 2:
        raise ValueError("logarithmic negativity needs a two-mode state")
    tr = rho.trace
    if not rho.normalized or abs(tr - 1.0) > 1e-12:
        rho = rho.normalize()
    rho.check_physical()
    mu = hermitian_eigenvalues(partial_transpose(rho).matrix)
    norm = float(np.abs(mu).sum())
    lowest = float(mu[0])
    e_n = 0.0 if lowest >= -NEGATIVITY_CLAMP or norm <= 1.0 else float(np.log2(norm))
    return EntanglementReport(e_n, norm, lowest, tr)


def schmidt_coefficients(psi: StateVector) -> np.ndarray:
    """Schmidt coefficients of a normalized copy of a two-mode pure state."""
    if psi.modes != 2:
        raise ValueError("Schmidt decomposition needs a two-mode state")
    d = psi.cutoff + 1
    return np.linalg.svd(psi.normalized().amplitudes.reshape(d, d), compute_uv=False)


def log_negativity_pure(psi: StateVector) -> float:
    """``log2 (sum_n c_n)^2`` from the Schmidt coefficients; no partial transpose involved."""
    return float(2 * np.log2(schmidt_coefficients(psi).sum()))


def fidelity_pure(rho: DensityMatrix, target: StateVector) -> float:
    """``<target| rho |target>`` for a normalized pure target."""
    if abs(target.norm_squared - 1.0) > 1e-10:
        raise ValueError(f"target state must be normalized (norm^2 = {target.norm_squared})")
    if not rho.normalized:
        rho = rho.normalize()
    v = target.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """``1/2 ||rho - sigma||_1`` between two states on the same space."""
    if rho.matrix.shape != sigma.matrix.shape:
        raise ValueError("states live on different spaces")
    return 0.5 * float(np.abs(hermitian_eigenvalues(rho.matrix - sigma.matrix)).sum())


def entanglement_gain(outcome: "ConcentrationOutcome", input_state: DensityMatrix) -> float:
    """E_N of the heralded output minus E_N of the shared input; negative values are kept."""
    out = log_negativity(outcome.rho_out_normalized).log_negativity
    return out - log_negativity(input_state).log_negativity

