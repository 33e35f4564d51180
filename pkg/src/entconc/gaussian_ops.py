"""Truncated Fock matrices of displacement, single-mode squeezing and beam splitters.

Displacement and squeezing are exponentiated at an enlarged cutoff and then
cropped, which keeps the truncation artefacts of ``expm`` out of the
retained block.  The beam splitter conserves photon number and is built
block by block from binomial amplitudes instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ParameterGuardError, TruncationError
from .fock import FockOperator, annihilation

# Extra levels used while exponentiating; both values hold the retained block
# to ~1e-15 at the guard limits (squeezing couples n to n+2 and needs more).
DISPLACEMENT_PAD = 30
SQUEEZING_PAD = 120
MAX_DISPLACEMENT = 2.0
MAX_SQUEEZING = 1.5


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Intensity reflectance ``R``: a fraction ``R`` of the signal is routed to the ancilla."""

    reflectance: float

    def __post_init__(self):
        if not 0.0 <= self.reflectance < 1.0:
            raise ParameterGuardError(f"reflectance must lie in [0, 1), got {self.reflectance}")

    @property
    def transmission_amplitude(self) -> float:
        return math.sqrt(1.0 - self.reflectance)

    @property
    def reflection_amplitude(self) -> float:
        return math.sqrt(self.reflectance)


def _padded_exp(generator_of, cutoff: int, pad: int) -> FockOperator:
    a = annihilation(cutoff + pad).matrix
    full = expm(generator_of(a, a.conj().T))
    return FockOperator(full[: cutoff + 1, : cutoff + 1], 1, cutoff)


def displacement_operator(alpha: complex, cutoff: int, pad: int = DISPLACEMENT_PAD) -> FockOperator:
    """``D(alpha) = exp(alpha a^dagger - alpha^* a)`` on levels ``0..cutoff``."""
    alpha = complex(alpha)
    if abs(alpha) > MAX_DISPLACEMENT:
        raise TruncationError(
            f"|alpha| = {abs(alpha):.3g} exceeds {MAX_DISPLACEMENT}: the displaced state "
            f"would leak past the Fock truncation"
        )
    if alpha == 0:
        return FockOperator(np.eye(cutoff + 1), 1, cutoff)
    return _padded_exp(lambda a, ad: alpha * ad - alpha.conjugate() * a, cutoff, pad)


def squeezing_operator(s: float, cutoff: int, pad: int = SQUEEZING_PAD) -> FockOperator:
    """``S(s) = exp(s/2 (a^dagger^2 - a^2))``, so that ``S^dag a S = a cosh s + a^dag sinh s``."""
    s = float(s)
    if abs(s) > MAX_SQUEEZING:
        raise TruncationError(
            f"|s| = {abs(s):.3g} exceeds {MAX_SQUEEZING}: the squeezed state would leak "
            f"past the Fock truncation"
        )
    if s == 0:
        return FockOperator(np.eye(cutoff + 1), 1, cutoff)
    return _padded_exp(lambda a, ad: 0.5 * s * (ad @ ad - a @ a), cutoff, pad)


def beam_splitter_unitary(spec: BeamSplitterSpec | float, cutoff: int) -> FockOperator:
    """Two-mode (signal, ancilla) beam splitter in the truncated basis.

    Heisenberg action ``a -> t a + r c`` and ``c -> t c - r a`` with
    ``t = sqrt(1 - R)``, ``r = sqrt(R)``.  In the Schrodinger picture
    ``|n, m> -> (t a^dag - r c^dag)^n (r a^dag + t c^dag)^m |0,0> / sqrt(n! m!)``,
    so ``|1,0> -> t|1,0> - r|0,1>``.  Columns whose total photon number
    exceeds ``cutoff`` lose the components that leave the truncated space.
    """
    if not isinstance(spec, BeamSplitterSpec):
        spec = BeamSplitterSpec(float(spec))
    t = spec.transmission_amplitude
    r = spec.reflection_amplitude
    d = cutoff + 1
    u = np.zeros((d * d, d * d))
    fact = [math.factorial(k) for k in range(2 * cutoff + 1)]
    for n in range(d):
        for m in range(d):
            # (t a^dag - r c^dag)^n -> choose j signal quanta; (r a^dag + t c^dag)^m -> choose l
            coeffs: dict[int, float] = {}
            for j in range(n + 1):
                cj = math.comb(n, j) * t**j * (-r) ** (n - j)
                for l in range(m + 1):
                    k = j + l
                    coeffs[k] = coeffs.get(k, 0.0) + cj * math.comb(m, l) * r**l * t ** (m - l)
            total = n + m
            norm = math.sqrt(fact[n] * fact[m])
            for k, c in coeffs.items():
                if k > cutoff or total - k > cutoff:
                    continue
                u[k * d + (total - k), n * d + m] = c * math.sqrt(fact[k] * fact[total - k]) / norm
    return FockOperator(u, 2, cutoff)
