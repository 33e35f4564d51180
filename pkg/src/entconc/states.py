"""Input states, pure-loss channels and the detector-inefficiency mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterGuardError, TruncationError
from .fock import DensityMatrix, StateVector, annihilation, apply_kraus, fock_state

MAX_NORM_DEFICIT = 1e-6


@dataclass(frozen=True)
class TmsvSpec:
    """Two-mode squeezed vacuum with ``lam = tanh r`` truncated at ``cutoff`` photons per mode."""

    lam: float
    cutoff: int = 10

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ParameterGuardError(f"lambda must lie in [0, 1), got {self.lam}")
        if self.cutoff < 1:
            raise ParameterGuardError(f"cutoff must be at least 1, got {self.cutoff}")

    @property
    def norm_deficit(self) -> float:
        # 1 - (1 - l^2) sum_{n<=N} l^{2n} = l^{2(N+1)}, written in closed form to avoid cancellation
        return self.lam ** (2 * (self.cutoff + 1))


@dataclass(frozen=True)
class LossSpec:
    """Per-mode loss factor ``nu``; the channel transmits a fraction ``1 - nu``."""

    nu: float

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ParameterGuardError(f"loss factor nu must lie in [0, 1], got {self.nu}")

    @property
    def transmittance(self) -> float:
        return 1.0 - self.nu


@dataclass(frozen=True)
class DetectorSpec:
    """On-off detector with efficiency ``eta``; photon-number resolution is never available."""

    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ParameterGuardError(f"detector efficiency must lie in (0, 1], got {self.eta}")

    @property
    def photon_number_resolving(self) -> bool:
        return False


def tmsv_pure(spec: TmsvSpec) -> StateVector:
    """``sqrt(1 - l^2) sum_n l^n |n, n>`` truncated at the cutoff, not renormalized."""
    if spec.norm_deficit > MAX_NORM_DEFICIT:
        raise TruncationError(
            f"TMSV with lambda={spec.lam} loses {spec.norm_deficit:.2e} of its norm at "
            f"cutoff {spec.cutoff} (limit {MAX_NORM_DEFICIT:.0e}); raise the cutoff"
        )
    d = spec.cutoff + 1
    amps = np.zeros((d, d))
    n = np.arange(d)
    amps[n, n] = math.sqrt(1.0 - spec.lam**2) * spec.lam**n
    return StateVector(amps.reshape(-1), 2, spec.cutoff)


def vacuum(modes: int, cutoff: int) -> StateVector:
    return fock_state((0,) * modes, cutoff)


def loss_kraus(nu: float, cutoff: int) -> list[np.ndarray]:
    """Kraus matrices ``sqrt(nu^k / k!) T^{n/2} a^k`` of a pure-loss channel, k = 0..cutoff."""
    t = 1.0 - nu
    attenuation = np.diag(np.sqrt(t) ** np.arange(cutoff + 1))
    a = annihilation(cutoff).matrix if cutoff >= 1 else np.zeros((1, 1))
    ops = []
    ak = np.eye(cutoff + 1)
    for k in range(cutoff + 1):
        ops.append(math.sqrt(nu**k / math.factorial(k)) * attenuation @ ak)
        ak = ak @ a
    return ops


def apply_loss(rho: DensityMatrix, mode: int, spec: LossSpec) -> DensityMatrix:
    """Send one mode of ``rho`` through a pure-loss channel."""
    if spec.nu == 0.0:
        return rho
    return apply_kraus(rho, loss_kraus(spec.nu, rho.cutoff), mode)


def inefficiency_reduction(eta: float, reflectance: float) -> tuple[float, float]:
    """Map a tap of reflectance ``R`` with detector efficiency ``eta`` to perfect detection.

    Returns ``(R_eff, T_tilde)``: an ideal-detector tap with reflectance
    ``eta R / (1 - (1 - eta) R)`` preceded by a loss channel of
    transmittance ``1 - (1 - eta) R`` gives the same heralded state.
    """
    DetectorSpec(eta)
    if not 0.0 <= reflectance < 1.0:
        raise ParameterGuardError(f"reflectance must lie in [0, 1), got {reflectance}")
    t_tilde = 1.0 - (1.0 - eta) * reflectance
    return eta * reflectance / t_tilde, t_tilde
